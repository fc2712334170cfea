"""Confusion matrices, per-class metrics and k-fold index generation."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


def confusion_matrix(gold: Sequence, pred: Sequence, classes: Sequence) -> np.ndarray:
    """Rows are gold classes, columns predicted, both in ``classes`` order."""
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    pos = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for g, p in zip(gold, pred):
        if g not in pos:
            raise ValueError(f"unknown class {g!r}")
        if p not in pos:
            raise ValueError(f"unknown class {p!r}")
        out[pos[g], pos[p]] += 1
    return out


@dataclass
class EvalReport:
    n: int
    accuracy: float
    precision: list[float]
    recall: list[float]
    f1: list[float]
    confusion: np.ndarray
    classes: list[str] = field(default_factory=list)
    undefined: list[str] = field(default_factory=list)

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.f1)) if self.f1 else 0.0

    def to_text(self) -> str:
        names = self.classes or [str(i) for i in range(len(self.f1))]
        lines = [f"n={self.n}", f"accuracy={self.accuracy:.4f}", f"macro_f1={self.macro_f1:.4f}"]
        for i, name in enumerate(names):
            lines.append(f"precision[{name}]={self.precision[i]:.4f}")
            lines.append(f"recall[{name}]={self.recall[i]:.4f}")
            lines.append(f"f1[{name}]={self.f1[i]:.4f}")
        lines.append("undefined=" + ",".join(self.undefined))
        lines.append("classes=" + ",".join(names))
        lines.append("confusion=")
        lines.extend(" ".join(str(int(v)) for v in row) for row in self.confusion)
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")


def _ratio(num, den, flag, flags):
    if den == 0:
        flags.append(flag)
        return 0.0
    return float(num) / float(den)


def metrics_from_confusion(confusion, classes: Sequence[str] | None = None) -> EvalReport:
    cm = np.asarray(confusion)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError("confusion matrix must be square")
    if np.any(cm < 0):
        raise ValueError("confusion matrix must be non-negative")
    names = list(classes) if classes is not None else [str(i) for i in range(cm.shape[0])]
    n = int(cm.sum())
    flags: list[str] = []
    accuracy = _ratio(np.trace(cm), n, "accuracy", flags)
    precision, recall, f1 = [], [], []
    for i, name in enumerate(names):
        p = _ratio(cm[i, i], cm[:, i].sum(), f"precision[{name}]", flags)
        r = _ratio(cm[i, i], cm[i, :].sum(), f"recall[{name}]", flags)
        precision.append(p)
        recall.append(r)
        f1.append(_ratio(2 * p * r, p + r, f"f1[{name}]", flags))
    return EvalReport(n, accuracy, precision, recall, f1, cm.astype(np.int64), names, flags)


def evaluate_predictions(gold, pred, classes, names=None) -> EvalReport:
    return metrics_from_confusion(confusion_matrix(gold, pred, classes),
                                  names if names is not None else [str(c) for c in classes])


def kfold_indices(n: int, k: int, seed: int, strata: Sequence | None = None) -> list[np.ndarray]:
    """Seeded partition of range(n) into k folds whose sizes differ by <= 1.

    With ``strata``, members of each stratum are dealt round-robin across
    folds (continuing from where the previous stratum stopped), so each
    fold gets a near-proportional share of every stratum.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} items")
    rng = np.random.default_rng(seed)
    if strata is None:
        order = rng.permutation(n)
    else:
        if len(strata) != n:
            raise ValueError("strata must have length n")
        keys = sorted(set(strata), key=repr)
        groups = [np.array([i for i in range(n) if strata[i] == key]) for key in keys]
        order = np.concatenate([g[rng.permutation(len(g))] for g in groups])
    fold_of = np.arange(n) % k
    # with strata the round-robin deal is what stratifies; without, it is just a split
    folds = [np.sort(order[fold_of == f]) for f in range(k)]
    return folds
