"""Seven binary classifiers behind one fit / predict contract.

Inputs are :class:`~issuesuccess.features.SparseVector` lists and
:class:`~issuesuccess.corpus.SuccessLabel` lists.  Internally ``Successful`` is
class 1.  Every model exposes a score in [0, 1]; the predicted label is
``Successful`` only when the score is strictly above 0.5, so exact ties go to
``Unsuccessful``.
"""
from __future__ import annotations

import enum
import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..corpus import SuccessLabel
from ..errors import DimensionMismatch, SingleClassError
from ..features import SparseVector
from .ensemble import GradientBoosting, RandomForest
from .logistic import LogisticRegression
from .mlp import MLPClassifier
from .naive_bayes import MultinomialNB
from .svm import SVC
from .tree import GINI, TreeModel, build_tree

MODEL_FORMAT_VERSION = 1


class ClassifierKind(str, enum.Enum):
    MNB = "MNB"
    LR = "LR"
    SVC = "SVC"
    DTC = "DTC"
    MLPC = "MLPC"
    RFC = "RFC"
    GBC = "GBC"


class NonConvergenceWarning(UserWarning):
    """An iterative optimiser hit its iteration cap; the last iterate is kept."""


@dataclass(frozen=True)
class HyperParams:
    nb_alpha: float = 1.0
    lr_C: float = 1.0
    lr_tol: float = 1e-4
    lr_max_iter: int = 100
    svc_C: float = 1.0
    svc_kernel: str = "rbf"
    svc_gamma: float | str = "scale"
    svc_tol: float = 1e-3
    dtc_max_depth: int | None = None
    dtc_min_samples_split: int = 2
    mlp_hidden_layer_sizes: tuple[int, ...] = (5, 2)
    mlp_alpha: float = 1e-5
    mlp_max_iter: int = 200
    rfc_n_estimators: int = 100
    rfc_max_features: str | int | None = "sqrt"
    gbc_learning_rate: float = 0.1
    gbc_n_estimators: int = 100
    gbc_max_depth: int = 3
    seed: int = 1

    def __post_init__(self):
        positive = {"nb_alpha": self.nb_alpha, "lr_C": self.lr_C, "svc_C": self.svc_C,
                    "gbc_learning_rate": self.gbc_learning_rate}
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be > 0")
        counts = {"lr_max_iter": self.lr_max_iter, "mlp_max_iter": self.mlp_max_iter,
                  "rfc_n_estimators": self.rfc_n_estimators, "gbc_n_estimators": self.gbc_n_estimators,
                  "gbc_max_depth": self.gbc_max_depth,
                  "dtc_max_depth": 1 if self.dtc_max_depth is None else self.dtc_max_depth}
        for name, value in counts.items():
            if value < 1:
                raise ValueError(f"{name} must be >= 1")
        if any(h < 1 for h in self.mlp_hidden_layer_sizes):
            raise ValueError("hidden layer sizes must be >= 1")


class DecisionTree:
    """Unpruned CART classifier; the score is the class-1 fraction of the leaf."""

    def __init__(self, max_depth=None, min_samples_split=2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    def fit(self, X, y):
        self.tree_ = build_tree(X, y, GINI, self.max_depth, self.min_samples_split)
        return self

    def score(self, X):
        return self.tree_.predict_value(sp.csr_matrix(X))

    def get_state(self):
        return {"max_depth": self.max_depth, "min_samples_split": self.min_samples_split,
                "tree": self.tree_.get_state()}

    @classmethod
    def from_state(cls, state):
        model = cls(state["max_depth"], state["min_samples_split"])
        model.tree_ = TreeModel.from_state(state["tree"])
        return model


_ESTIMATORS = {
    ClassifierKind.MNB: MultinomialNB,
    ClassifierKind.LR: LogisticRegression,
    ClassifierKind.SVC: SVC,
    ClassifierKind.DTC: DecisionTree,
    ClassifierKind.MLPC: MLPClassifier,
    ClassifierKind.RFC: RandomForest,
    ClassifierKind.GBC: GradientBoosting,
}


def make_estimator(kind: ClassifierKind, params: HyperParams):
    if kind is ClassifierKind.MNB:
        return MultinomialNB(params.nb_alpha)
    if kind is ClassifierKind.LR:
        return LogisticRegression(params.lr_C, params.lr_tol, params.lr_max_iter)
    if kind is ClassifierKind.SVC:
        return SVC(params.svc_C, params.svc_kernel, params.svc_gamma, params.svc_tol)
    if kind is ClassifierKind.DTC:
        return DecisionTree(params.dtc_max_depth, params.dtc_min_samples_split)
    if kind is ClassifierKind.MLPC:
        return MLPClassifier(params.mlp_hidden_layer_sizes, params.mlp_alpha, params.mlp_max_iter,
                             seed=params.seed)
    if kind is ClassifierKind.RFC:
        return RandomForest(params.rfc_n_estimators, params.rfc_max_features, seed=params.seed)
    if kind is ClassifierKind.GBC:
        return GradientBoosting(params.gbc_n_estimators, params.gbc_learning_rate,
                                params.gbc_max_depth, seed=params.seed)
    raise ValueError(kind)


@dataclass(frozen=True)
class TrainedModel:
    kind: ClassifierKind
    estimator: object = field(repr=False)
    vocab_dim: int
    params: HyperParams
    n_train: int
    converged: bool = True


def to_matrix(X: Sequence[SparseVector], dim: int | None = None) -> sp.csr_matrix:
    """Stack sparse vectors into a CSR matrix, checking they share one dimension."""
    if dim is None:
        if not X:
            raise ValueError("empty input")
        dim = X[0].dim
    indptr = [0]
    for v in X:
        if v.dim != dim:
            raise DimensionMismatch(f"vector of dimension {v.dim}, expected {dim}")
        indptr.append(indptr[-1] + v.nnz)
    if X:
        indices = np.concatenate([v.indices for v in X])
        data = np.concatenate([v.values for v in X])
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)
    return sp.csr_matrix((data, indices, np.asarray(indptr)), shape=(len(X), dim))


def encode_labels(y: Sequence[SuccessLabel]) -> np.ndarray:
    return np.array([1 if SuccessLabel(l) is SuccessLabel.SUCCESSFUL else 0 for l in y], dtype=np.int64)


def fit(kind: ClassifierKind, X: Sequence[SparseVector], y: Sequence[SuccessLabel],
        params: HyperParams | None = None) -> TrainedModel:
    kind = ClassifierKind(kind)
    params = params or HyperParams()
    if len(X) != len(y):
        raise DimensionMismatch(f"{len(X)} vectors but {len(y)} labels")
    if len(X) < 2:
        raise ValueError("need at least two training examples")
    labels = encode_labels(y)
    if labels.min() == labels.max():
        raise SingleClassError(f"training labels contain only {SuccessLabel(y[0]).value}")
    matrix = to_matrix(X)
    estimator = make_estimator(kind, params).fit(matrix, labels)
    converged = bool(getattr(estimator, "converged_", True))
    if not converged:
        warnings.warn(f"{kind.value} reached its iteration limit without converging",
                      NonConvergenceWarning, stacklevel=2)
    return TrainedModel(kind, estimator, matrix.shape[1], params, len(X), converged)


def _check_dim(model: TrainedModel, x: SparseVector):
    if x.dim != model.vocab_dim:
        raise DimensionMismatch(f"input dimension {x.dim}, model expects {model.vocab_dim}")


def predict_scores(model: TrainedModel, X: Sequence[SparseVector]) -> np.ndarray:
    for x in X:
        _check_dim(model, x)
    if not X:
        return np.zeros(0)
    return np.asarray(model.estimator.score(to_matrix(X, model.vocab_dim)), dtype=np.float64)


def predict_score(model: TrainedModel, x: SparseVector) -> float:
    """Score in [0, 1] for the ``Successful`` class."""
    return float(predict_scores(model, [x])[0])


def score_to_label(score: float) -> SuccessLabel:
    return SuccessLabel.SUCCESSFUL if score > 0.5 else SuccessLabel.UNSUCCESSFUL


def predict_many(model: TrainedModel, X: Sequence[SparseVector]) -> list[SuccessLabel]:
    return [score_to_label(s) for s in predict_scores(model, X)]


def predict(model: TrainedModel, x: SparseVector) -> SuccessLabel:
    return score_to_label(predict_score(model, x))


# --- model files ------------------------------------------------------------

def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype), "shape": list(obj.shape)}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"]).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def dump_model(model: TrainedModel) -> str:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind.value,
        "vocab_dim": model.vocab_dim,
        "n_train": model.n_train,
        "converged": model.converged,
        "params": asdict(model.params),
        "state": _encode(model.estimator.get_state()),
    }
    return json.dumps(payload)


def loads_model(text: str) -> TrainedModel:
    payload = json.loads(text)
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {payload.get('format_version')!r}")
    kind = ClassifierKind(payload["kind"])
    raw = payload["params"]
    raw["mlp_hidden_layer_sizes"] = tuple(raw["mlp_hidden_layer_sizes"])
    params = HyperParams(**raw)
    estimator = _ESTIMATORS[kind].from_state(_decode(payload["state"]))
    return TrainedModel(kind, estimator, payload["vocab_dim"], params, payload["n_train"],
                        payload["converged"])


def save_model(path, model: TrainedModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_model(model))


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())


__all__ = [
    "ClassifierKind", "HyperParams", "TrainedModel", "NonConvergenceWarning",
    "fit", "predict", "predict_score", "predict_scores", "predict_many",
    "save_model", "load_model", "dump_model", "loads_model", "to_matrix",
]
