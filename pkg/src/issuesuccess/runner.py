"""Experiment grid: window selection, splitting, balancing, training and reporting.

One experiment is ``(issue type, classifier, horizon N, weighting, feature family)``.
Its documents are the issues of that type resolved in more than ``N`` days, each
with the text of the comments posted within ``N`` days of creation.  All random
draws are seeded from a hash of the global seed and the experiment fields, so
any subset of the grid reproduces the same numbers in any order and with any
worker count.
"""
from __future__ import annotations

import csv
import gzip
import hashlib
import json
import logging
import os
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import RunConfig
from .corpus import (Corpus, IssueRecord, IssueType, SuccessLabel, comment_offset_days,
                     resolution_days)
from .errors import (ConfigError, DegenerateSeries, EmptyVocabulary, EmptyWindow,
                     SingleClassError, TooFewDocuments)
from .evaluation import (MetricSet, confusion, descriptive_stats, metrics,
                         per_experiment_importance, pearson)
from .features import (FamilyKind, FeatureFamily, Vocabulary, WeightingScheme, document_features,
                       fit_vocabulary, vectorize)
from .learn import ClassifierKind, fit, predict_many
from .textprep import apply_replacements, load_lexicon, tag_word, tokenize

log = logging.getLogger(__name__)

SKIPPABLE = (EmptyWindow, TooFewDocuments, SingleClassError, EmptyVocabulary)

RESULTS_FILE = "results.csv"
STATS_FILE = "stats.csv"
RANKINGS_FILE = "rankings.jsonl.gz"
SERIES_FILE = "success_series.csv"
CORRELATION_FILE = "correlation.csv"


@dataclass(frozen=True)
class ExperimentSpec:
    issue_type: IssueType
    classifier: ClassifierKind
    horizon_days: int
    weighting: WeightingScheme
    family: FeatureFamily
    seed: int = 1
    balanced_test: bool = True

    @property
    def window_key(self) -> tuple:
        """Fields shared by every classifier evaluated on the same data."""
        return (self.issue_type.value, self.horizon_days, self.weighting.value,
                self.family.kind.value, self.family.n_min, self.family.n_max)


@dataclass(frozen=True)
class Document:
    issue_id: str
    text: str
    label: SuccessLabel
    issue_type: IssueType
    horizon_days: int
    tokens: tuple[str, ...] | None = field(default=None, compare=False, repr=False)

    def units(self, family: FeatureFamily) -> list[str]:
        tokens = list(self.tokens) if self.tokens is not None else [t.surface for t in tokenize(self.text)]
        if family.kind is FamilyKind.WORD:
            return tokens
        lexicon = load_lexicon()
        return [tag_word(t, lexicon).value for t in tokens]


@dataclass(frozen=True)
class ClassCounts:
    successful: int = 0
    unsuccessful: int = 0

    @property
    def total(self) -> int:
        return self.successful + self.unsuccessful

    @classmethod
    def of(cls, docs: Iterable[Document]) -> "ClassCounts":
        s = u = 0
        for d in docs:
            if d.label is SuccessLabel.SUCCESSFUL:
                s += 1
            else:
                u += 1
        return cls(s, u)


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    metrics: MetricSet | None
    n_train: int = 0
    n_test: int = 0
    train_counts: ClassCounts = ClassCounts()
    test_counts: ClassCounts = ClassCounts()
    n_test_balanced: int = 0
    vocab_size: int = 0
    converged: bool = True
    wall_time: float = field(default=0.0, compare=False)
    skip_reason: str | None = None
    top_features: dict | None = field(default=None, compare=False, repr=False)

    @property
    def skipped(self) -> bool:
        return self.skip_reason is not None


# --- seeds & grid -------------------------------------------------------------

def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary printable parts (independent of PYTHONHASHSEED)."""
    text = "\x1f".join(str(getattr(p, "value", p)) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big") >> 1


def window_seed(spec: ExperimentSpec) -> int:
    # split and balancing depend only on the window, so every classifier sees the same data
    return derive_seed(spec.seed, "window", spec.issue_type, spec.horizon_days)


def model_seed(spec: ExperimentSpec) -> int:
    return derive_seed(spec.seed, "model", spec.issue_type, spec.classifier, spec.horizon_days,
                       spec.weighting, spec.family.kind, spec.family.n_min, spec.family.n_max)


def build_grid(config: RunConfig) -> list[ExperimentSpec]:
    dims = {
        "issue_types": config.issue_types,
        "classifiers": config.classifiers,
        "horizons": config.time_grid.horizons,
        "weightings": config.weightings,
        "families": config.families,
    }
    for name, values in dims.items():
        if not values:
            raise ConfigError(f"grid dimension {name!r} is empty")
    return [ExperimentSpec(t, c, n, w, f, config.seed, config.balanced_test)
            for t, c, n, w, f in product(*dims.values())]


# --- documents -----------------------------------------------------------------

class TextCache:
    """Replacement + tokenisation results per issue and comment, computed once."""

    def __init__(self):
        self._entries: dict[tuple[str, str], tuple[str, tuple[str, ...]]] = {}

    def get(self, kind: str, key: str, text: str | None) -> tuple[str, tuple[str, ...]]:
        """``(replaced text, token surfaces)`` for one issue or comment description."""
        k = (kind, key)
        hit = self._entries.get(k)
        if hit is None:
            replaced = apply_replacements(text or "")
            hit = (replaced, tuple(t.surface for t in tokenize(replaced)))
            self._entries[k] = hit
        return hit


def _window_comments(corpus: Corpus, issue: IssueRecord, horizon_days: int):
    return [c for c in corpus.comments_by_issue.get(issue.issue_id, ())
            if comment_offset_days(issue, c) <= horizon_days]


def select_window(corpus: Corpus, issue_type: IssueType, horizon_days: int,
                  cache: TextCache | None = None) -> list[Document]:
    """Documents for issues of ``issue_type`` resolved in more than ``horizon_days`` days.

    Text is the issue description followed by the comments with offset
    ``<= horizon_days`` in timestamp order, each piece after replacement,
    joined by single spaces.
    """
    docs = []
    for issue in corpus.issues:
        if issue.issue_type is not issue_type or resolution_days(issue) <= horizon_days:
            continue
        comments = _window_comments(corpus, issue, horizon_days)
        if cache is None:
            pieces = [apply_replacements(issue.description or "")]
            pieces += [apply_replacements(c.description or "") for c in comments]
            tokens = None
        else:
            entries = [cache.get("issue", issue.issue_id, issue.description)]
            entries += [cache.get("comment", c.comment_id, c.description) for c in comments]
            pieces = [text for text, _ in entries]
            tokens = tuple(t for _, toks in entries for t in toks)
        docs.append(Document(issue.issue_id, " ".join(pieces), issue.label, issue.issue_type,
                             horizon_days, tokens))
    if not docs:
        raise EmptyWindow(f"no {issue_type.value} issue is resolved in more than {horizon_days} days")
    return docs


def split_train_test(documents: Sequence[Document], train_fraction: float, seed: int):
    n = len(documents)
    if n < 4:
        raise TooFewDocuments(f"{n} documents; at least 4 are needed for a split")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    order = np.random.default_rng(seed).permutation(n)
    cut = int(np.floor(train_fraction * n))
    return [documents[i] for i in order[:cut]], [documents[i] for i in order[cut:]]


def undersample(documents: Sequence[Document], seed: int) -> list[Document]:
    """Down-sample the larger class to the size of the smaller one, keeping input order."""
    by_class = {SuccessLabel.SUCCESSFUL: [], SuccessLabel.UNSUCCESSFUL: []}
    for i, d in enumerate(documents):
        by_class[d.label].append(i)
    sizes = {k: len(v) for k, v in by_class.items()}
    if min(sizes.values()) == 0:
        raise SingleClassError(f"cannot balance a split with class counts "
                               f"{sizes[SuccessLabel.SUCCESSFUL]}/{sizes[SuccessLabel.UNSUCCESSFUL]}")
    target = min(sizes.values())
    rng = np.random.default_rng(seed)
    keep: list[int] = []
    for label in (SuccessLabel.SUCCESSFUL, SuccessLabel.UNSUCCESSFUL):
        idx = by_class[label]
        if len(idx) > target:
            idx = [idx[j] for j in rng.choice(len(idx), size=target, replace=False)]
        keep.extend(idx)
    return [documents[i] for i in sorted(keep)]


def balance_test(documents: Sequence[Document], seed: int) -> list[Document]:
    return undersample(documents, seed)


# --- one experiment -----------------------------------------------------------

@dataclass
class PreparedWindow:
    train: list[Document]
    test: list[Document]
    test_balanced: list[Document] | None
    vocab: Vocabulary
    train_features: list
    test_features: list


def prepare_window(spec: ExperimentSpec, corpus: Corpus, config: RunConfig,
                   cache: TextCache | None = None) -> PreparedWindow:
    docs = select_window(corpus, spec.issue_type, spec.horizon_days, cache)
    seed = window_seed(spec)
    train, test = split_train_test(docs, config.train_fraction, seed)
    train = undersample(train, derive_seed(seed, "train"))
    test_balanced = balance_test(test, derive_seed(seed, "test")) if spec.balanced_test else None
    train_units = [d.units(spec.family) for d in train]
    vocab = fit_vocabulary(train_units, spec.family, config.min_df, config.max_features)
    train_features = [document_features(u, spec.family) for u in train_units]
    test_features = [document_features(d.units(spec.family), spec.family) for d in test]
    return PreparedWindow(train, test, test_balanced, vocab, train_features, test_features)


def window_rankings(prepared: PreparedWindow, weighting: WeightingScheme) -> dict[SuccessLabel, list[str]]:
    by_class = defaultdict(list)
    for doc, feats in zip(prepared.train, prepared.train_features):
        by_class[doc.label].append(vectorize(feats, prepared.vocab, weighting))
    return per_experiment_importance(prepared.vocab, by_class)


def run_experiment(spec: ExperimentSpec, corpus: Corpus, config: RunConfig | None = None,
                   cache: TextCache | None = None, with_rankings: bool = False) -> ExperimentResult:
    """Run one experiment; skippable data conditions come back as a skipped result."""
    config = config or RunConfig()
    start = time.perf_counter()
    try:
        prepared = prepare_window(spec, corpus, config, cache)
    except SKIPPABLE as exc:
        log.info("skipping %s: %s", spec, exc)
        return ExperimentResult(spec, None, skip_reason=type(exc).__name__,
                                wall_time=time.perf_counter() - start)
    vocab = prepared.vocab
    X_train = [vectorize(f, vocab, spec.weighting) for f in prepared.train_features]
    y_train = [d.label for d in prepared.train]
    X_test = [vectorize(f, vocab, spec.weighting) for f in prepared.test_features]
    y_test = [d.label for d in prepared.test]

    params = replace(config.hyperparams, seed=model_seed(spec) % 2**32)
    model = fit(spec.classifier, X_train, y_train, params)
    predicted = predict_many(model, X_test)
    result_metrics = metrics(confusion(y_test, predicted))
    n_balanced = 0
    if prepared.test_balanced is not None:
        pos = {d.issue_id: i for i, d in enumerate(prepared.test)}
        rows = [pos[d.issue_id] for d in prepared.test_balanced]
        balanced = metrics(confusion([y_test[i] for i in rows], [predicted[i] for i in rows]))
        result_metrics = MetricSet(balanced.accuracy, *list(result_metrics.as_dict().values())[1:])
        n_balanced = len(rows)
    top = window_rankings(prepared, spec.weighting) if with_rankings else None
    return ExperimentResult(
        spec, result_metrics, len(prepared.train), len(prepared.test),
        ClassCounts.of(prepared.train), ClassCounts.of(prepared.test), n_balanced, len(vocab),
        model.converged, time.perf_counter() - start, None, top)


# --- results files --------------------------------------------------------------

SPEC_COLUMNS = ["issue_type", "classifier", "horizon_days", "weighting", "family", "ngram_range",
                "seed", "balanced_test"]
COUNT_COLUMNS = ["n_train", "n_test", "n_train_successful", "n_train_unsuccessful",
                 "n_test_successful", "n_test_unsuccessful", "n_test_balanced", "vocab_size",
                 "converged", "skip_reason"]
RESULT_COLUMNS = SPEC_COLUMNS + MetricSet.field_names() + COUNT_COLUMNS


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(getattr(value, "value", value))


def result_row(r: ExperimentResult) -> list[str]:
    s = r.spec
    row = [s.issue_type, s.classifier, s.horizon_days, s.weighting, s.family.kind,
           f"{s.family.n_min}-{s.family.n_max}", s.seed, s.balanced_test]
    m = r.metrics.as_dict() if r.metrics else {}
    row += [m.get(name) for name in MetricSet.field_names()]
    if r.skipped:
        row += [None] * (len(COUNT_COLUMNS) - 1) + [r.skip_reason]
    else:
        row += [r.n_train, r.n_test, r.train_counts.successful, r.train_counts.unsuccessful,
                r.test_counts.successful, r.test_counts.unsuccessful, r.n_test_balanced,
                r.vocab_size, r.converged, None]
    return [_fmt(v) for v in row]


def write_results(path, results: Iterable[ExperimentResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for r in results:
            writer.writerow(result_row(r))


def read_results(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


STATS_COLUMNS = ["issue_type", "classifier", "weighting", "family", "metric", "n", "n_undefined",
                 "min", "max", "mean", "variance", "std"]


def stats_rows(rows: Sequence[dict]) -> list[list[str]]:
    """Descriptive statistics of every metric per (type, classifier, weighting, family)."""
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for row in rows:
        if row["skip_reason"]:
            continue
        groups[(row["issue_type"], row["classifier"], row["weighting"], row["family"])].append(row)
    out = []
    for key in sorted(groups):
        for metric in MetricSet.field_names():
            values = [float(r[metric]) for r in groups[key] if r[metric] != ""]
            undefined = len(groups[key]) - len(values)
            if values:
                d = descriptive_stats(values)
                stats = [d.min, d.max, d.mean, d.variance, d.std]
            else:
                stats = [None] * 5
            out.append([_fmt(v) for v in (*key, metric, len(values), undefined, *stats)])
    return out


def write_stats(path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STATS_COLUMNS)
        writer.writerows(stats_rows(rows))


# --- success series -------------------------------------------------------------

@dataclass(frozen=True)
class SeriesPoint:
    project: str
    horizon_days: int
    n_issues: int
    n_successful: int

    @property
    def success_fraction(self) -> float | None:
        return self.n_successful / self.n_issues if self.n_issues else None


def success_series(corpus: Corpus, horizons: Iterable[int]) -> list[SeriesPoint]:
    """Per project and horizon: share of issues resolved after N days that are Successful."""
    by_project: dict[str, list[tuple[int, bool]]] = defaultdict(list)
    for issue in corpus.issues:
        by_project[issue.project_key].append(
            (resolution_days(issue), issue.label is SuccessLabel.SUCCESSFUL))
    points = []
    for project in sorted(by_project):
        days = np.array([d for d, _ in by_project[project]])
        ok = np.array([s for _, s in by_project[project]], dtype=bool)
        for n in horizons:
            mask = days > n
            points.append(SeriesPoint(project, n, int(mask.sum()), int(ok[mask].sum())))
    return points


def series_correlations(points: Sequence[SeriesPoint]) -> dict[str, float | None]:
    """Pearson coefficient of success fraction vs horizon per project (None if undefined)."""
    grouped = defaultdict(list)
    for p in points:
        if p.n_issues:
            grouped[p.project].append((p.horizon_days, p.success_fraction))
    out: dict[str, float | None] = {}
    for project in sorted({p.project for p in points}):
        pairs = grouped.get(project, [])
        try:
            out[project] = pearson([h for h, _ in pairs], [f for _, f in pairs])
        except (DegenerateSeries, ValueError):
            out[project] = None
    return out


def write_series(out_dir: Path, corpus: Corpus, horizons: Iterable[int]) -> dict[str, float | None]:
    points = success_series(corpus, horizons)
    with open(out_dir / SERIES_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["project", "horizon_days", "n_issues", "n_successful", "success_fraction"])
        for p in points:
            writer.writerow([p.project, p.horizon_days, p.n_issues, p.n_successful,
                             _fmt(p.success_fraction)])
    corr = series_correlations(points)
    with open(out_dir / CORRELATION_FILE, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["project", "pearson"])
        for project, r in corr.items():
            writer.writerow([project, _fmt(r)])
    return corr


# --- grid execution -------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(corpus: Corpus, config: RunConfig):
    _WORKER["corpus"] = corpus
    _WORKER["config"] = config
    _WORKER["cache"] = TextCache()


def _run_one(spec: ExperimentSpec) -> ExperimentResult:
    return run_experiment(spec, _WORKER["corpus"], _WORKER["config"], _WORKER["cache"])


def _rank_one(spec: ExperimentSpec) -> list[dict]:
    corpus, config, cache = _WORKER["corpus"], _WORKER["config"], _WORKER["cache"]
    try:
        prepared = prepare_window(spec, corpus, config, cache)
    except SKIPPABLE:
        return []
    ranking = window_rankings(prepared, spec.weighting)
    return [{"issue_type": spec.issue_type.value, "horizon_days": spec.horizon_days,
             "weighting": spec.weighting.value, "family": spec.family.kind.value,
             "class": label.value, "vocab_size": len(prepared.vocab), "ranking": ranking[label]}
            for label in (SuccessLabel.SUCCESSFUL, SuccessLabel.UNSUCCESSFUL) if label in ranking]


def _map(func, items: list, corpus: Corpus, config: RunConfig) -> list:
    if config.workers == 1 or len(items) < 2:
        _init_worker(corpus, config)
        try:
            return [func(x) for x in items]
        finally:
            _WORKER.clear()
    with ProcessPoolExecutor(config.workers, initializer=_init_worker,
                             initargs=(corpus, config)) as pool:
        chunk = max(1, len(items) // (config.workers * 8))
        return list(pool.map(func, items, chunksize=chunk))


@dataclass
class GridSummary:
    out_dir: Path
    n_specs: int
    n_skipped: int
    correlations: dict[str, float | None]


def run_grid(config: RunConfig, corpus: Corpus, out_dir) -> GridSummary:
    """Run every spec of the grid and write results, statistics, rankings and series files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specs = build_grid(config)
    log.info("running %d experiments with %d worker(s)", len(specs), config.workers)
    results = _map(_run_one, specs, corpus, config)
    write_results(out_dir / RESULTS_FILE, results)
    write_stats(out_dir / STATS_FILE, read_results(out_dir / RESULTS_FILE))
    if config.rankings:
        windows = {}
        for spec in specs:
            windows.setdefault(spec.window_key, spec)
        ranked = _map(_rank_one, list(windows.values()), corpus, config)
        # mtime=0 keeps the gzip stream byte-identical across runs
        with open(out_dir / RANKINGS_FILE, "wb") as raw, \
                gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as gz:
            for records in ranked:
                for rec in records:
                    gz.write((json.dumps(rec, ensure_ascii=False) + "\n").encode("utf-8"))
    corr = write_series(out_dir, corpus, config.time_grid.horizons)
    n_skipped = sum(r.skipped for r in results)
    if n_skipped:
        log.warning("%d of %d experiments skipped", n_skipped, len(results))
    return GridSummary(out_dir, len(specs), n_skipped, corr)


def read_rankings(path) -> list[dict]:
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1) - 1)
