"""News documents, tokenization, vocabularies and corpus splitting."""
from __future__ import annotations

import enum
import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np


class CorpusError(ValueError):
    """Malformed corpus input (bad record, duplicate id, unknown label)."""


class PolarityLabel(enum.IntEnum):
    POSITIVE = 1
    NEGATIVE = -1
    NEUTRAL = 0


class GateLabel(str, enum.Enum):
    """Binary decision of the trained classifiers."""
    POSITIVE = "POSITIVE"
    NON_POSITIVE = "NON_POSITIVE"


def parse_label(value) -> PolarityLabel | None:
    """Map a raw label field (int or numeric string) onto PolarityLabel.

    ``None`` and the empty string mean "no label".
    """
    if value is None:
        return None
    if isinstance(value, bool):
        raise CorpusError(f"unknown label {value!r}")
    if isinstance(value, str):
        value = value.strip()
        if value == "":
            return None
        try:
            value = int(value)
        except ValueError:
            raise CorpusError(f"unknown label {value!r}") from None
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, int) or value not in (1, -1, 0):
        raise CorpusError(f"unknown label {value!r}")
    return PolarityLabel(value)


@dataclass(frozen=True)
class NewsDocument:
    id: str
    title: str = ""
    body: str = ""
    source: str | None = None
    gold_label: PolarityLabel | None = None
    weak_label: PolarityLabel | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.title and not self.body:
            raise CorpusError(f"document {self.id!r} has neither title nor body")

    @property
    def text(self) -> str:
        """Title and body joined by one space (title first)."""
        if self.title and self.body:
            return self.title + " " + self.body
        return self.title or self.body

    def to_record(self) -> dict:
        rec = {"id": self.id, "title": self.title, "body": self.body}
        if self.source is not None:
            rec["source"] = self.source
        if self.gold_label is not None:
            rec["label"] = int(self.gold_label)
        if self.weak_label is not None:
            rec["weak_label"] = int(self.weak_label)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "NewsDocument":
        if not isinstance(rec, dict):
            raise CorpusError("record is not an object")
        doc_id = rec.get("id")
        if doc_id is None or doc_id == "":
            raise CorpusError("record has no id")
        title = rec.get("title") or ""
        body = rec.get("body") or ""
        if not isinstance(title, str) or not isinstance(body, str):
            raise CorpusError("title/body must be strings")
        if not title and not body:
            raise CorpusError(f"record {doc_id!r} has neither title nor body")
        source = rec.get("source")
        return cls(
            id=str(doc_id),
            title=title,
            body=body,
            source=None if source in (None, "") else str(source),
            gold_label=parse_label(rec.get("label")),
            weak_label=parse_label(rec.get("weak_label")),
        )


@dataclass(frozen=True)
class DocumentSet:
    documents: tuple[NewsDocument, ...]
    source_path: str | None = None
    format: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))
        seen = set()
        for doc in self.documents:
            if doc.id in seen:
                raise CorpusError(f"duplicate id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self):
        return len(self.documents)

    def __iter__(self) -> Iterator[NewsDocument]:
        return iter(self.documents)

    def __getitem__(self, i):
        return self.documents[i]

    def subset(self, indices: Iterable[int]) -> "DocumentSet":
        return DocumentSet(tuple(self.documents[i] for i in indices), self.source_path, self.format)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]


# --- loading / saving ------------------------------------------------------

TSV_HEADER = ["id", "title", "body", "label"]


def _read_lines(path: Path) -> list[str]:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return text.replace("\r\n", "\n").replace("\r", "\n").split("\n")


def load_corpus(path, format: str = "jsonl") -> DocumentSet:
    path = Path(path)
    if format not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format {format!r}")
    lines = _read_lines(path)
    docs: list[NewsDocument] = []
    seen: set[str] = set()

    def add(doc: NewsDocument, lineno: int):
        if doc.id in seen:
            raise CorpusError(f"line {lineno}: duplicate id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)

    if format == "jsonl":
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                doc = NewsDocument.from_record(rec)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed record ({exc.msg})") from None
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from None
            add(doc, lineno)
    else:
        rows = [(i, ln) for i, ln in enumerate(lines, 1) if ln != ""]
        if not rows:
            return DocumentSet((), str(path), format)
        header = rows[0][1].split("\t")
        if header[:4] != TSV_HEADER:
            raise CorpusError(f"line {rows[0][0]}: expected header {'<TAB>'.join(TSV_HEADER)}")
        for lineno, line in rows[1:]:
            cols = line.split("\t")
            if len(cols) < 3 or len(cols) > len(header):
                raise CorpusError(f"line {lineno}: expected {len(header)} columns, got {len(cols)}")
            rec = dict(zip(header, cols))
            try:
                doc = NewsDocument.from_record(rec)
            except CorpusError as exc:
                raise CorpusError(f"line {lineno}: {exc}") from None
            add(doc, lineno)
    return DocumentSet(tuple(docs), str(path), format)


def save_corpus(docs: DocumentSet, path, format: str = "jsonl") -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if format == "jsonl":
            for doc in docs:
                fh.write(json.dumps(doc.to_record(), ensure_ascii=False) + "\n")
        elif format == "tsv":
            with_weak = any(d.weak_label is not None for d in docs)
            fh.write("\t".join(TSV_HEADER + (["weak_label"] if with_weak else [])) + "\n")
            for doc in docs:
                for part in (doc.id, doc.title, doc.body):
                    if "\t" in part or "\n" in part or "\r" in part:
                        raise CorpusError(f"document {doc.id!r} cannot be stored as tsv")
                row = [doc.id, doc.title, doc.body,
                       "" if doc.gold_label is None else str(int(doc.gold_label))]
                if with_weak:
                    row.append("" if doc.weak_label is None else str(int(doc.weak_label)))
                fh.write("\t".join(row) + "\n")
        else:
            raise ValueError(f"unknown corpus format {format!r}")


# --- tokenization ----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    normalized: str
    is_allcaps: bool
    position: int


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...] = ()
    exclamation_count: int = 0
    question_count: int = 0

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @property
    def normalized(self) -> list[str]:
        return [t.normalized for t in self.tokens]


def _strip_edges(raw: str) -> tuple[str, str]:
    """Split ``raw`` into (core, stripped-edge characters)."""
    start, end = 0, len(raw)
    while start < end and not raw[start].isalnum():
        start += 1
    while end > start and not raw[end - 1].isalnum():
        end -= 1
    return raw[start:end], raw[:start] + raw[end:]


def _is_allcaps(word: str) -> bool:
    letters = [c for c in word if c.isalpha()]
    return len(letters) >= 2 and all(c.isupper() for c in letters)


def tokenize(text: str) -> TokenSequence:
    tokens = []
    n_excl = n_quest = 0
    for raw in text.split():
        core, edges = _strip_edges(raw)
        n_excl += edges.count("!")
        n_quest += edges.count("?")
        if not core:
            continue
        # lower() can emit combining marks at the edge (e.g. U+0130)
        normalized, _ = _strip_edges(core.lower())
        if not normalized:
            continue
        tokens.append(Token(core, normalized, _is_allcaps(core), len(tokens)))
    return TokenSequence(tuple(tokens), n_excl, n_quest)


# --- vocabulary ------------------------------------------------------------

PAD_INDEX = 0
OOV_INDEX = 1
N_RESERVED = 2


@dataclass(frozen=True)
class Vocabulary:
    """Token <-> index map; indices 0 (padding) and 1 (OOV) are reserved."""

    index_to_token: tuple[str, ...]
    frequencies: dict[str, int] = field(default_factory=dict)
    min_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "index_to_token", tuple(self.index_to_token))
        object.__setattr__(
            self, "_index", {t: i + N_RESERVED for i, t in enumerate(self.index_to_token)}
        )
        if len(self._index) != len(self.index_to_token):
            raise ValueError("vocabulary tokens must be unique")

    @property
    def token_to_index(self) -> dict[str, int]:
        return dict(self._index)

    def __len__(self):
        return len(self.index_to_token)

    def __contains__(self, token):
        return token in self._index

    @property
    def dimension(self) -> int:
        """Size of index space including the two reserved slots."""
        return len(self.index_to_token) + N_RESERVED

    def lookup(self, token: str) -> int:
        return self._index.get(token, OOV_INDEX)

    def token(self, index: int) -> str:
        if index < N_RESERVED:
            return ("<pad>", "<oov>")[index]
        return self.index_to_token[index - N_RESERVED]

    def encode(self, seq: TokenSequence) -> list[int]:
        return [self.lookup(t.normalized) for t in seq.tokens]

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for tok in self.index_to_token:
            h.update(tok.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()[:16]


def document_tokens(doc: NewsDocument) -> TokenSequence:
    return tokenize(doc.text)


def build_vocabulary(docs: Iterable[NewsDocument], min_count: int = 1) -> Vocabulary:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(document_tokens(doc).normalized)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocabulary(tuple(kept), {t: counts[t] for t in kept}, min_count)


# --- splitting -------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _allocate(sizes: Sequence[int], total: int) -> list[int]:
    """Largest-remainder allocation of ``total`` proportional to ``sizes``."""
    n = sum(sizes)
    quotas = [total * s / n for s in sizes]
    alloc = [min(int(math.floor(q)), s) for q, s in zip(quotas, sizes)]
    order = sorted(range(len(sizes)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    short = total - sum(alloc)
    for i in order:
        if short <= 0:
            break
        if alloc[i] < sizes[i]:
            alloc[i] += 1
            short -= 1
    return alloc


def train_test_split(docs: DocumentSet, test_fraction: float, seed: int,
                     labels: Sequence | None = None) -> tuple[DocumentSet, DocumentSet]:
    """Seeded partition into (train, test), stratified when labels exist.

    ``labels`` overrides the stratification key; by default the weak labels
    are used when every document has one.
    """
    n = len(docs)
    if n < 2:
        raise ValueError("need at least 2 documents to split")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    # both sides stay non-empty for every n >= 2
    n_test = min(max(_round_half_up(test_fraction * n), 1), n - 1)

    if labels is None and all(d.weak_label is not None for d in docs):
        labels = [int(d.weak_label) for d in docs]
    rng = np.random.default_rng(seed)
    if labels is None:
        test_idx = rng.permutation(n)[:n_test]
    else:
        if len(labels) != n:
            raise ValueError("labels must align with documents")
        strata = sorted(set(labels))
        members = [[i for i, lab in enumerate(labels) if lab == s] for s in strata]
        alloc = _allocate([len(m) for m in members], n_test)
        test_idx = []
        for m, k in zip(members, alloc):
            perm = rng.permutation(len(m))
            test_idx.extend(m[j] for j in perm[:k])
    test_set = set(int(i) for i in test_idx)
    train = [i for i in range(n) if i not in test_set]
    test = sorted(test_set)
    return docs.subset(train), docs.subset(test)
