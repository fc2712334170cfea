"""Lexicon-based valence scoring with contextual rules.

Each lexicon word carries a valence in [-4, 4].  Its contribution is then
adjusted for capitalization, preceding degree modifiers, negation in the
three preceding tokens and a document-level contrast marker ("but"); the
adjusted valences are summed, amplified by trailing exclamation marks and
squashed into a compound score in [-1, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import DocumentSet, NewsDocument, PolarityLabel, TokenSequence, tokenize


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class ValenceLexicon:
    valences: dict[str, float] = field(default_factory=dict)
    boosters: dict[str, float] = field(default_factory=dict)
    negations: frozenset[str] = frozenset()
    contrast_markers: frozenset[str] = frozenset({"but"})

    def __post_init__(self):
        for tok, v in self.valences.items():
            if not -4.0 <= v <= 4.0:
                raise LexiconError(f"valence for {tok!r} out of range [-4, 4]: {v}")
        for tok, b in self.boosters.items():
            if not abs(b) < 1.0:
                raise LexiconError(f"booster increment for {tok!r} must have magnitude < 1: {b}")


@dataclass(frozen=True)
class ScorerConfig:
    caps_boost: float = 0.733
    negation_scalar: float = -0.74
    negation_window: int = 3
    booster_decay: tuple[float, float] = (0.95, 0.90)
    exclamation_step: float = 0.292
    max_exclamations: int = 4
    but_before_weight: float = 0.5
    but_after_weight: float = 1.5
    alpha: float = 15.0
    neutral_threshold: float = 0.05

    def __post_init__(self):
        if self.neutral_threshold <= 0:
            raise ValueError("neutral_threshold must be > 0")
        if self.negation_window < 1:
            raise ValueError("negation_window must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if len(self.booster_decay) != 2:
            raise ValueError("booster_decay needs factors for distances 2 and 3")


@dataclass(frozen=True)
class SentimentScore:
    pos: float
    neu: float
    neg: float
    compound: float


_SECTIONS = {"#VALENCE": "valence", "#BOOSTER": "booster",
             "#NEGATION": "negation", "#CONTRAST": "contrast"}


def load_lexicon(path) -> ValenceLexicon:
    """Read a tab-separated lexicon.

    Rows are ``token<TAB>valence``; extra columns (as in the reference VADER
    lexicon) are ignored.  ``#BOOSTER``, ``#NEGATION`` and ``#CONTRAST`` lines
    switch section (``#VALENCE`` switches back); other ``#`` lines are
    comments.  Booster rows are ``token<TAB>increment``; negation and
    contrast rows hold a bare token.
    """
    valences: dict[str, float] = {}
    boosters: dict[str, float] = {}
    negations: set[str] = set()
    contrast: set[str] | None = None
    section = "valence"
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                marker = line.split()[0].upper()
                if marker in _SECTIONS:
                    section = _SECTIONS[marker]
                    if section == "contrast" and contrast is None:
                        contrast = set()
                continue
            cols = line.split("\t")
            token = cols[0].strip().lower()
            if not token:
                raise LexiconError(f"line {lineno}: empty token")
            if section in ("negation", "contrast"):
                (negations if section == "negation" else contrast).add(token)
                continue
            if len(cols) < 2:
                raise LexiconError(f"line {lineno}: missing value for {token!r}")
            try:
                value = float(cols[1])
            except ValueError:
                raise LexiconError(f"line {lineno}: non-numeric value for {token!r}: {cols[1]!r}") from None
            if not math.isfinite(value):
                raise LexiconError(f"line {lineno}: non-finite value for {token!r}")
            if section == "valence":
                if not -4.0 <= value <= 4.0:
                    raise LexiconError(f"line {lineno}: valence for {token!r} out of range [-4, 4]: {value}")
                valences[token] = value
            else:
                if not abs(value) < 1.0:
                    raise LexiconError(f"line {lineno}: booster {token!r} magnitude must be < 1")
                boosters[token] = value
    return ValenceLexicon(
        valences, boosters, frozenset(negations),
        frozenset({"but"}) if contrast is None else frozenset(contrast),
    )


def _sign(x: float) -> float:
    return (x > 0) - (x < 0)


def token_valences(seq: TokenSequence, lex: ValenceLexicon,
                   cfg: ScorerConfig = ScorerConfig()) -> list[tuple[int, float]]:
    toks = seq.tokens
    n_caps = sum(t.is_allcaps for t in toks)
    caps_differential = 0 < n_caps < len(toks)
    contrast_at = next((t.position for t in toks if t.normalized in lex.contrast_markers), None)

    out = []
    for i, tok in enumerate(toks):
        word = tok.normalized
        if word not in lex.valences or word in lex.negations or word in lex.boosters:
            continue
        base = lex.valences[word]
        sgn = _sign(base)
        v = base
        if tok.is_allcaps and caps_differential:
            v += cfg.caps_boost * sgn
        for dist in (1, 2, 3):
            if i - dist < 0:
                break
            prev = toks[i - dist]
            if prev.normalized not in lex.boosters:
                continue
            incr = lex.boosters[prev.normalized] * sgn
            if prev.is_allcaps and caps_differential:
                incr += cfg.caps_boost * sgn
            if dist > 1:
                incr *= cfg.booster_decay[dist - 2]
            v += incr
        window = toks[max(0, i - cfg.negation_window):i]
        if any(p.normalized in lex.negations for p in window):
            v *= cfg.negation_scalar
        if contrast_at is not None:
            if i < contrast_at:
                v *= cfg.but_before_weight
            elif i > contrast_at:
                v *= cfg.but_after_weight
        out.append((tok.position, v))
    return out


def score_tokens(seq: TokenSequence, lex: ValenceLexicon,
                 cfg: ScorerConfig = ScorerConfig()) -> SentimentScore:
    adjusted = token_valences(seq, lex, cfg)
    s = sum(v for _, v in adjusted)
    punct = cfg.exclamation_step * min(seq.exclamation_count, cfg.max_exclamations)
    if s != 0:
        s += _sign(s) * punct
    compound = max(-1.0, min(1.0, s / math.sqrt(s * s + cfg.alpha)))

    pos_mass = sum(abs(v) + 1 for _, v in adjusted if v > 0)
    neg_mass = sum(abs(v) + 1 for _, v in adjusted if v < 0)
    neu_mass = float(len(seq.tokens) - sum(1 for _, v in adjusted if v != 0))
    if pos_mass > neg_mass:
        pos_mass += punct
    elif neg_mass > pos_mass:
        neg_mass += punct
    total = pos_mass + neg_mass + neu_mass
    if total == 0:
        return SentimentScore(0.0, 0.0, 0.0, 0.0)
    return SentimentScore(pos_mass / total, neu_mass / total, neg_mass / total, compound)


def score_document(doc: NewsDocument | str, lex: ValenceLexicon,
                   cfg: ScorerConfig = ScorerConfig()) -> SentimentScore:
    text = doc if isinstance(doc, str) else doc.text
    return score_tokens(tokenize(text), lex, cfg)


def assign_weak_label(score: SentimentScore, cfg: ScorerConfig = ScorerConfig()) -> PolarityLabel:
    if score.compound >= cfg.neutral_threshold:
        return PolarityLabel.POSITIVE
    if score.compound <= -cfg.neutral_threshold:
        return PolarityLabel.NEGATIVE
    return PolarityLabel.NEUTRAL


def annotate_corpus(docs: DocumentSet, lex: ValenceLexicon,
                    cfg: ScorerConfig = ScorerConfig()) -> DocumentSet:
    labeled = tuple(
        replace(d, weak_label=assign_weak_label(score_document(d, lex, cfg), cfg)) for d in docs
    )
    return DocumentSet(labeled, docs.source_path, docs.format)
