"""Detection metrics (precision/recall/F1/accuracy, rank-based AUROC),
seeded adversarial test-set transforms, and pre/post-attack robustness
reports. Positive class is Machine throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AurocUndefined, DataError
from .ingest import Corpus, Document, Label
from .text_core import token_spans

TRANSFORM_KINDS = ("special_chars", "whitespace_noise", "case_flip")

_SPECIAL_SEQUENCES = ('\\"', "\\'", "/", "\\")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    auroc: float
    confusion: ConfusionMatrix
    n: int
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "auroc": self.auroc,
            "confusion": self.confusion.to_dict(),
            "n": self.n,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class AdversarialTransform:
    kind: str
    intensity: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in TRANSFORM_KINDS:
            raise DataError(f"unknown transform kind {self.kind!r}")
        if not (0.0 <= self.intensity <= 1.0):
            raise DataError("intensity must lie in [0, 1]")


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionMatrix:
    """Counts with positive class = Machine (label 1)."""
    if len(predictions) != len(labels):
        raise DataError("predictions and labels must have equal length")
    if len(labels) == 0:
        raise DataError("cannot build a confusion matrix from empty inputs")
    tp = fp = fn = tn = 0
    for p, y in zip(predictions, labels):
        if y == 1:
            if p == 1:
                tp += 1
            else:
                fn += 1
        else:
            if p == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney rank statistic; tied scores count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise AurocUndefined("AUROC needs both classes in the labels")
    ranks = _average_ranks(scores)
    rank_sum = float(np.sum(ranks[labels == 1]))
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned their group average."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def metrics(
    cm: ConfusionMatrix, scores: Sequence[float], labels: Sequence[int]
) -> MetricsReport:
    """All scalar metrics from the confusion counts plus rank AUROC.

    Zero-denominator metrics are defined as 0 and noted in ``flags``.
    """
    if len(scores) != cm.total or len(labels) != cm.total:
        raise DataError("scores/labels length must match the confusion total")
    flags: list[str] = []
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        flags.append("precision_zero_denominator")
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        flags.append("recall_zero_denominator")
    # Harmonic-mean identity 2tp/(2tp+fp+fn) keeps integer exactness.
    if cm.tp > 0:
        f1 = 2 * cm.tp / (2 * cm.tp + cm.fp + cm.fn)
    else:
        f1 = 0.0
        if precision + recall == 0:
            flags.append("f1_zero_denominator")
    accuracy = (cm.tp + cm.tn) / cm.total
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        auroc=auroc(scores, labels),
        confusion=cm,
        n=cm.total,
        flags=tuple(flags),
    )


def youden_threshold(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Threshold maximizing TPR - FPR over the label-at-or-above rule,
    breaking ties toward the smallest candidate.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise AurocUndefined("threshold selection needs both classes")
    best_t = float("-inf")
    best_j = -math.inf
    for t in sorted(set(scores.tolist())):
        preds = scores >= t
        tpr = float(np.sum(preds & (labels == 1))) / n_pos
        fpr = float(np.sum(preds & (labels == 0))) / n_neg
        j = tpr - fpr
        if j > best_j + 1e-12:
            best_j = j
            best_t = t
    return best_t


# -- adversarial transforms --


def adversarial_transform(doc: Document, transform: AdversarialTransform) -> Document:
    """Seeded surface attack preserving the label.

    special_chars inserts backslash-escaped quotes and slashes after
    floor(intensity * word_count) words; whitespace_noise doubles that
    fraction of the spaces; case_flip flips that fraction of the letters.
    """
    rng = np.random.default_rng(transform.seed)
    body = doc.body
    if transform.kind == "special_chars":
        words = [(a, b) for a, b, w in token_spans(body) if w]
        m = int(math.floor(transform.intensity * len(words)))
        if m == 0:
            return doc
        chosen = sorted(int(i) for i in rng.choice(len(words), size=m, replace=False))
        pieces = []
        prev = 0
        for i in chosen:
            _, end = words[i]
            insert = _SPECIAL_SEQUENCES[int(rng.integers(0, len(_SPECIAL_SEQUENCES)))]
            pieces.append(body[prev:end])
            pieces.append(insert)
            prev = end
        pieces.append(body[prev:])
        new_body = "".join(pieces)
    elif transform.kind == "whitespace_noise":
        spaces = [i for i, ch in enumerate(body) if ch == " "]
        m = int(math.floor(transform.intensity * len(spaces)))
        if m == 0:
            return doc
        chosen = set(
            spaces[int(i)] for i in rng.choice(len(spaces), size=m, replace=False)
        )
        new_body = "".join(ch + " " if i in chosen else ch for i, ch in enumerate(body))
    elif transform.kind == "case_flip":
        letters = [i for i, ch in enumerate(body) if ch.isalpha()]
        m = int(math.floor(transform.intensity * len(letters)))
        if m == 0:
            return doc
        chosen = set(
            letters[int(i)] for i in rng.choice(len(letters), size=m, replace=False)
        )
        new_body = "".join(
            ch.swapcase() if i in chosen else ch for i, ch in enumerate(body)
        )
    else:  # pragma: no cover - guarded by AdversarialTransform
        raise DataError(f"unknown transform kind {transform.kind!r}")
    return Document(
        id=doc.id, body=new_body, label=doc.label, source_question=doc.source_question
    )


# -- robustness --


@dataclass(frozen=True)
class DetectorScorer:
    """Unified scoring interface: any detector reduced to a score
    function plus its decision threshold.
    """

    name: str
    score_fn: Callable[[Document], float]
    threshold: float


@dataclass(frozen=True)
class RobustnessReport:
    before: MetricsReport
    per_transform: dict[str, dict]

    def to_dict(self) -> dict:
        return {
            "before": self.before.to_dict(),
            "transforms": self.per_transform,
        }


_DELTA_METRICS = ("precision", "recall", "f1", "accuracy", "auroc")


def _evaluate(scorer: DetectorScorer, docs: Sequence[Document]) -> MetricsReport:
    labels = [1 if d.label == Label.MACHINE else 0 for d in docs]
    scores = [scorer.score_fn(d) for d in docs]
    preds = [int(s >= scorer.threshold) for s in scores]
    return metrics(confusion(preds, labels), scores, labels)


def robustness_report(
    scorer: DetectorScorer,
    test: Corpus,
    transforms: Sequence[AdversarialTransform],
) -> RobustnessReport:
    """Clean metrics once, then metrics per transformed copy of the test
    set, with per-metric deltas (after minus before).
    """
    if test.class_counts[Label.HUMAN] == 0 or test.class_counts[Label.MACHINE] == 0:
        raise DataError("robustness evaluation needs both classes")
    before = _evaluate(scorer, test.documents)
    per_transform: dict[str, dict] = {}
    for tf in transforms:
        attacked = [adversarial_transform(d, tf) for d in test.documents]
        after = _evaluate(scorer, attacked)
        deltas = {
            m: getattr(after, m) - getattr(before, m) for m in _DELTA_METRICS
        }
        key = f"{tf.kind}@{tf.intensity}"
        per_transform[key] = {
            "kind": tf.kind,
            "intensity": tf.intensity,
            "before": before.to_dict(),
            "after": after.to_dict(),
            "delta": deltas,
        }
    return RobustnessReport(before=before, per_transform=per_transform)
