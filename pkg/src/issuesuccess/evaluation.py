"""Confusion-matrix metrics, descriptive statistics, correlation and feature ranking.

Positive class is ``Successful``.  A metric whose denominator is zero is
``None`` (undefined), never 0.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import SuccessLabel
from .errors import DegenerateSeries, EmptyInput, LengthMismatch
from .features import SparseVector, Vocabulary

S = SuccessLabel.SUCCESSFUL
U = SuccessLabel.UNSUCCESSFUL


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricSet:
    accuracy: float | None
    precision_successful: float | None
    precision_unsuccessful: float | None
    recall_successful: float | None
    recall_unsuccessful: float | None
    f1_successful: float | None
    f1_unsuccessful: float | None

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)


def confusion(actual: Sequence[SuccessLabel], predicted: Sequence[SuccessLabel]) -> ConfusionMatrix:
    if len(actual) != len(predicted):
        raise LengthMismatch(f"{len(actual)} actual vs {len(predicted)} predicted labels")
    if not actual:
        raise EmptyInput("no labels to compare")
    tp = fp = tn = fn = 0
    for a, p in zip(actual, predicted):
        a, p = SuccessLabel(a), SuccessLabel(p)
        if a is S:
            if p is S:
                tp += 1
            else:
                fn += 1
        elif p is S:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def _f1(precision: float | None, recall: float | None) -> float | None:
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)


def metrics(cm: ConfusionMatrix) -> MetricSet:
    p1 = _ratio(cm.tp, cm.tp + cm.fp)
    p2 = _ratio(cm.tn, cm.tn + cm.fn)
    r1 = _ratio(cm.tp, cm.tp + cm.fn)
    r2 = _ratio(cm.tn, cm.tn + cm.fp)
    return MetricSet(
        accuracy=_ratio(cm.tp + cm.tn, cm.total),
        precision_successful=p1,
        precision_unsuccessful=p2,
        recall_successful=r1,
        recall_unsuccessful=r2,
        f1_successful=_f1(p1, r1),
        f1_unsuccessful=_f1(p2, r2),
    )


@dataclass(frozen=True)
class DescriptiveStats:
    min: float
    max: float
    mean: float
    variance: float
    std: float


def descriptive_stats(values: Iterable[float]) -> DescriptiveStats:
    """Min, max, mean, population variance and standard deviation."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("descriptive statistics of an empty list")
    mean = float(arr.mean())
    variance = float(np.mean((arr - mean) ** 2))
    return DescriptiveStats(float(arr.min()), float(arr.max()), mean, variance, math.sqrt(variance))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise LengthMismatch(f"series of length {len(x)} and {len(y)}")
    if len(x) < 2:
        raise EmptyInput("correlation needs at least two points")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx, syy = float(np.dot(dx, dx)), float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise DegenerateSeries("correlation is undefined for a constant series")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# --- feature ranking --------------------------------------------------------

@dataclass(frozen=True)
class FeatureRankEntry:
    feature: str
    n: int
    ar: float


def rank_features(per_experiment_rankings: Iterable[tuple[str, Sequence[str]]],
                  top_k: int = 100,
                  vocab_sizes: Mapping[str, int] | None = None) -> list[FeatureRankEntry]:
    """Aggregate per-experiment rankings into ``N`` (top-k hits) and ``AR`` (mean rank).

    Ranks are 1-based.  A feature absent from an experiment's ranking counts as
    rank ``|V| + 1`` there, where ``|V|`` is the experiment's vocabulary size
    (by default the length of its ranking).  Output is sorted by N descending,
    AR ascending, then feature.
    """
    rankings = list(per_experiment_rankings)
    if not rankings:
        return []
    ranks: dict[str, dict[int, int]] = defaultdict(dict)
    sizes = []
    for e, (exp_id, ordered) in enumerate(rankings):
        size = len(ordered) if vocab_sizes is None else vocab_sizes.get(exp_id, len(ordered))
        sizes.append(size)
        for r, feat in enumerate(ordered, start=1):
            ranks[feat].setdefault(e, r)
    n_exp = len(rankings)
    out = []
    for feat, by_exp in ranks.items():
        total = 0
        hits = 0
        for e in range(n_exp):
            r = by_exp.get(e)
            if r is None:
                total += sizes[e] + 1  # absent features never count as top-k hits
            else:
                total += r
                hits += r <= top_k
        out.append(FeatureRankEntry(feat, hits, total / n_exp))
    out.sort(key=lambda entry: (-entry.n, entry.ar, entry.feature))
    return out


def class_mass(vocab: Vocabulary, vectors: Sequence[SparseVector]) -> np.ndarray:
    mass = np.zeros(len(vocab))
    for v in vectors:
        np.add.at(mass, v.indices, v.values)
    return mass


def order_by_mass(vocab: Vocabulary, mass: np.ndarray) -> list[str]:
    """Features by descending mass; ties in lexicographic order (= index order)."""
    # vocabulary indices are lexicographic, so a stable sort on -mass breaks ties correctly
    order = np.argsort(-mass, kind="stable")
    feats = vocab.features
    return [feats[i] for i in order]


def per_experiment_importance(vocab: Vocabulary,
                              vectors_by_class: Mapping[SuccessLabel, Sequence[SparseVector]]
                              ) -> dict[SuccessLabel, list[str]]:
    """One ranking per class by total vectorisation weight within that class."""
    return {SuccessLabel(label): order_by_mass(vocab, class_mass(vocab, vecs))
            for label, vecs in vectors_by_class.items()}


def coefficient_importance(model, vocab: Vocabulary) -> dict[SuccessLabel, list[str]]:
    """Alternative ranking from model parameters (LR coefficients or MNB log-ratios).

    Not the default: the default ranks by vectorisation weights.
    """
    est = model.estimator
    if hasattr(est, "coef_"):
        coef = np.asarray(est.coef_, dtype=np.float64)
    elif hasattr(est, "feature_log_prob_"):
        coef = est.feature_log_prob_[1] - est.feature_log_prob_[0]
    else:
        raise TypeError(f"{model.kind.value} has no per-feature coefficients")
    return {S: order_by_mass(vocab, coef), U: order_by_mass(vocab, -coef)}
