"""Word / PoS n-gram extraction, vocabulary fitting and TF / TF-IDF vectors."""
from __future__ import annotations

import enum
import math
from types import MappingProxyType
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyVocabulary, InvalidRange, SchemaError

SEPARATOR = "▁"  # never produced by the tokenizer or the tag names
DEFAULT_MIN_DF = 2
DEFAULT_MAX_FEATURES = 100_000


class FamilyKind(str, enum.Enum):
    WORD = "WordNgrams"
    POS = "PosNgrams"


@dataclass(frozen=True)
class FeatureFamily:
    kind: FamilyKind
    n_min: int
    n_max: int

    def __post_init__(self):
        if self.n_min < 1 or self.n_min > self.n_max:
            raise InvalidRange(f"invalid n-gram range ({self.n_min}, {self.n_max})")

    @classmethod
    def word(cls, n_min: int = 1, n_max: int = 10) -> "FeatureFamily":
        return cls(FamilyKind.WORD, n_min, n_max)

    @classmethod
    def pos(cls, n_min: int = 2, n_max: int = 5) -> "FeatureFamily":
        return cls(FamilyKind.POS, n_min, n_max)

    @property
    def name(self) -> str:
        return self.kind.value


class WeightingScheme(str, enum.Enum):
    TF = "TF"
    TFIDF = "TFIDF"


@dataclass(frozen=True)
class SparseVector:
    """Sorted ``(index, weight)`` pairs of a ``dim``-dimensional vector."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError("indices must be strictly increasing and within [0, dim)")
        if not np.all(np.isfinite(val)) or np.any(val == 0):
            raise ValueError("weights must be finite and non-zero")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dict(cls, weights: Mapping[int, float], dim: int) -> "SparseVector":
        items = sorted((i, w) for i, w in weights.items() if w != 0)
        return cls(np.array([i for i, _ in items], dtype=np.int64),
                   np.array([w for _, w in items], dtype=np.float64), dim)

    @classmethod
    def from_dense(cls, dense) -> "SparseVector":
        dense = np.asarray(dense, dtype=np.float64)
        nz = np.flatnonzero(dense)
        return cls(nz, dense[nz], dense.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (self.dim == other.dim and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    __hash__ = None


def extract_ngrams(units: Sequence[str], n_min: int, n_max: int) -> Counter:
    """All contiguous n-grams with ``n_min <= n <= n_max``, as a multiset."""
    if n_min < 1 or n_min > n_max:
        raise InvalidRange(f"invalid n-gram range ({n_min}, {n_max})")
    units = [u.value if isinstance(u, enum.Enum) else str(u) for u in units]
    grams: Counter = Counter()
    length = len(units)
    for n in range(n_min, min(n_max, length) + 1):
        grams.update(SEPARATOR.join(units[i:i + n]) for i in range(length - n + 1))
    return grams


@dataclass(frozen=True)
class Vocabulary:
    """Feature index with document frequencies; immutable once fitted."""

    index: Mapping[str, int]
    document_frequency: tuple[int, ...]
    n_documents: int
    family: FeatureFamily
    min_df: int = DEFAULT_MIN_DF
    max_features: int | None = DEFAULT_MAX_FEATURES
    _idf: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", MappingProxyType(dict(self.index)))
        df = np.asarray(self.document_frequency, dtype=np.float64)
        # smoothed idf: ln((1 + N) / (1 + df)) + 1
        idf = np.log((1.0 + self.n_documents) / (1.0 + df)) + 1.0
        idf.setflags(write=False)
        object.__setattr__(self, "_idf", idf)

    def __len__(self):
        return len(self.index)

    @property
    def features(self) -> list[str]:
        """Features in index order."""
        out = [""] * len(self.index)
        for f, i in self.index.items():
            out[i] = f
        return out

    def df(self, feature: str) -> int:
        return self.document_frequency[self.index[feature]]

    def idf(self, feature: str) -> float:
        return float(self._idf[self.index[feature]])

    @property
    def idf_vector(self) -> np.ndarray:
        return self._idf


def document_features(units: Sequence[str], family: FeatureFamily) -> Counter:
    return extract_ngrams(units, family.n_min, family.n_max)


def fit_vocabulary(documents: Iterable[Sequence[str]], family: FeatureFamily,
                   min_df: int = DEFAULT_MIN_DF,
                   max_features: int | None = DEFAULT_MAX_FEATURES) -> Vocabulary:
    """Fit a vocabulary over unit sequences (tokens or tag names).

    Keeps features with ``df >= min_df``; with ``max_features`` set, only the
    highest-df features survive (ties broken lexicographically).  Indices follow
    lexicographic feature order.
    """
    df: Counter = Counter()
    n_docs = 0
    for units in documents:
        n_docs += 1
        df.update(document_features(units, family).keys())
    if n_docs == 0:
        raise ValueError("cannot fit a vocabulary on zero documents")
    kept = [(f, c) for f, c in df.items() if c >= min_df]
    if max_features is not None and len(kept) > max_features:
        kept.sort(key=lambda fc: (-fc[1], fc[0]))
        kept = kept[:max_features]
    if not kept:
        raise EmptyVocabulary(f"no feature reaches min_df={min_df} over {n_docs} documents")
    kept.sort(key=lambda fc: fc[0])
    index = {f: i for i, (f, _) in enumerate(kept)}
    return Vocabulary(index, tuple(c for _, c in kept), n_docs, family, min_df, max_features)


def vectorize_tf(doc_features: Mapping[str, float], vocab: Vocabulary) -> SparseVector:
    weights = {vocab.index[f]: float(c) for f, c in doc_features.items() if f in vocab.index and c}
    return SparseVector.from_dict(weights, len(vocab))


def vectorize_tfidf(doc_features: Mapping[str, float], vocab: Vocabulary) -> SparseVector:
    tf = vectorize_tf(doc_features, vocab)
    if tf.nnz == 0:
        return tf
    weights = tf.values * vocab.idf_vector[tf.indices]
    norm = math.sqrt(float(np.dot(weights, weights)))
    return SparseVector(tf.indices, weights / norm, tf.dim)


def vectorize(doc_features: Mapping[str, float], vocab: Vocabulary,
              weighting: WeightingScheme) -> SparseVector:
    if weighting is WeightingScheme.TF:
        return vectorize_tf(doc_features, vocab)
    return vectorize_tfidf(doc_features, vocab)


# --- vocab.tsv ------------------------------------------------------------

def write_vocabulary(path, vocab: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n_documents={vocab.n_documents}\tfamily={vocab.family.name}"
                 f"\tn_min={vocab.family.n_min}\tn_max={vocab.family.n_max}"
                 f"\tmin_df={vocab.min_df}\tmax_features={vocab.max_features}\n")
        fh.write("feature\tindex\tdf\n")
        for f, i in sorted(vocab.index.items(), key=lambda kv: kv[1]):
            fh.write(f"{f}\t{i}\t{vocab.document_frequency[i]}\n")


def read_vocabulary(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("# "):
            raise SchemaError("missing vocabulary header", 1)
        meta = dict(kv.split("=", 1) for kv in header[2:].strip().split("\t"))
        fh.readline()
        index, dfs = {}, []
        for lineno, line in enumerate(fh, start=3):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise SchemaError("expected feature<TAB>index<TAB>df", lineno)
            f, i, d = parts
            if int(i) != len(dfs):
                raise SchemaError("indices must be dense and ordered", lineno)
            index[f] = int(i)
            dfs.append(int(d))
    family = FeatureFamily(FamilyKind(meta["family"]), int(meta["n_min"]), int(meta["n_max"]))
    max_features = None if meta["max_features"] == "None" else int(meta["max_features"])
    return Vocabulary(index, tuple(dfs), int(meta["n_documents"]), family,
                      int(meta["min_df"]), max_features)
