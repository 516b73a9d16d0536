"""Experiment configuration read from an INI-style key-value file.

Every key is optional; :data:`DEFAULT_CONFIG_TEXT` lists them all with their
defaults and is what ``issuesuccess init-config`` writes out.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from .corpus import IssueType
from .errors import ConfigError
from .features import DEFAULT_MAX_FEATURES, DEFAULT_MIN_DF, FeatureFamily, FamilyKind, WeightingScheme
from .learn import ClassifierKind, HyperParams

DEFAULT_HORIZONS: tuple[int, ...] = (1, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100,
                                      *range(150, 3501, 50))

DEFAULT_CONFIG_TEXT = """\
# issuesuccess experiment configuration. Every key shows its default.

[grid]
# comma-separated; Bug, Improvement, NewFeature
issue_types = Bug, Improvement, NewFeature
# MNB, LR, SVC, DTC, MLPC, RFC, GBC
classifiers = MNB, LR, SVC, DTC, MLPC, RFC, GBC
# day horizons N; "default" is 1, 5, 10, 20..100 step 10, then 150..3500 step 50
horizons = default
# TF, TFIDF
weightings = TF, TFIDF
# WordNgrams, PosNgrams
families = WordNgrams, PosNgrams
word_ngram_range = 1, 10
pos_ngram_range = 2, 5

[split]
train_fraction = 0.75
# accuracy on a class-balanced copy of the test split; the other metrics
# always use the unbalanced test split
balanced_test = true

[features]
min_df = 2
max_features = 100000

[run]
seed = 1
workers = 1
# write per-window feature rankings (rankings.jsonl.gz)
rankings = true
top_k = 100

[classifiers]
# any HyperParams field, e.g. lr_C = 1.0, svc_gamma = scale, rfc_n_estimators = 100
"""


@dataclass(frozen=True)
class TimeGrid:
    horizons: tuple[int, ...] = DEFAULT_HORIZONS

    def __post_init__(self):
        h = tuple(int(x) for x in self.horizons)
        if not h:
            raise ConfigError("time grid is empty")
        if any(x < 0 for x in h) or any(b <= a for a, b in zip(h, h[1:])):
            raise ConfigError("horizons must be non-negative and strictly increasing")
        object.__setattr__(self, "horizons", h)

    def __len__(self):
        return len(self.horizons)

    def __iter__(self):
        return iter(self.horizons)

    def __contains__(self, n):
        return n in self.horizons


@dataclass(frozen=True)
class RunConfig:
    issue_types: tuple[IssueType, ...] = tuple(IssueType)
    classifiers: tuple[ClassifierKind, ...] = tuple(ClassifierKind)
    time_grid: TimeGrid = field(default_factory=TimeGrid)
    weightings: tuple[WeightingScheme, ...] = (WeightingScheme.TF, WeightingScheme.TFIDF)
    families: tuple[FeatureFamily, ...] = (FeatureFamily.word(), FeatureFamily.pos())
    train_fraction: float = 0.75
    balanced_test: bool = True
    min_df: int = DEFAULT_MIN_DF
    max_features: int | None = DEFAULT_MAX_FEATURES
    seed: int = 1
    workers: int = 1
    rankings: bool = True
    top_k: int = 100
    hyperparams: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.min_df < 1:
            raise ConfigError("min_df must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise ConfigError("max_features must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")

    def restrict(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def _items(raw: str) -> list[str]:
    return [x.strip() for x in raw.split(",") if x.strip()]


def _enum_list(raw: str, parse, what: str) -> tuple:
    try:
        return tuple(parse(x) for x in _items(raw))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from exc


def _range(raw: str, what: str) -> tuple[int, int]:
    parts = _items(raw)
    if len(parts) != 2:
        raise ConfigError(f"{what} needs two integers 'min, max'")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad {what}: {exc}") from exc


_HYPERPARAM_NAMES = {f.name.lower(): f.name for f in fields(HyperParams)}


def _hyperparam_name(key: str) -> str:
    # configparser lowercases keys, while some fields (lr_C, svc_C) are mixed case
    try:
        return _HYPERPARAM_NAMES[key.lower()]
    except KeyError:
        raise ConfigError(f"unknown classifier parameter {key!r}") from None


def _hyperparam(name: str, raw: str):
    raw = raw.strip()
    if name == "mlp_hidden_layer_sizes":
        return tuple(int(x) for x in _items(raw))
    if raw.lower() == "none":
        return None
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    known = {"grid", "split", "features", "run", "classifiers"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    kw: dict = {}
    grid = parser["grid"] if parser.has_section("grid") else {}
    try:
        if "issue_types" in grid:
            kw["issue_types"] = _enum_list(grid["issue_types"], IssueType.parse, "issue_types")
        if "classifiers" in grid:
            kw["classifiers"] = _enum_list(grid["classifiers"], lambda x: ClassifierKind(x.upper()),
                                           "classifiers")
        if "horizons" in grid and grid["horizons"].strip().lower() != "default":
            kw["time_grid"] = TimeGrid(tuple(int(x) for x in _items(grid["horizons"])))
        if "weightings" in grid:
            kw["weightings"] = _enum_list(grid["weightings"], lambda x: WeightingScheme(x.upper()),
                                          "weightings")
        word = _range(grid.get("word_ngram_range", "1, 10"), "word_ngram_range")
        pos = _range(grid.get("pos_ngram_range", "2, 5"), "pos_ngram_range")
        if "families" in grid or "word_ngram_range" in grid or "pos_ngram_range" in grid:
            kinds = _enum_list(grid.get("families", "WordNgrams, PosNgrams"), FamilyKind, "families")
            kw["families"] = tuple(FeatureFamily(k, *(word if k is FamilyKind.WORD else pos))
                                   for k in kinds)
        section = parser["split"] if parser.has_section("split") else {}
        if "train_fraction" in section:
            kw["train_fraction"] = float(section["train_fraction"])
        if "balanced_test" in section:
            kw["balanced_test"] = parser.getboolean("split", "balanced_test")
        section = parser["features"] if parser.has_section("features") else {}
        if "min_df" in section:
            kw["min_df"] = int(section["min_df"])
        if "max_features" in section:
            raw = section["max_features"].strip().lower()
            kw["max_features"] = None if raw == "none" else int(raw)
        section = parser["run"] if parser.has_section("run") else {}
        for key in ("seed", "workers", "top_k"):
            if key in section:
                kw[key] = int(section[key])
        if "rankings" in section:
            kw["rankings"] = parser.getboolean("run", "rankings")
        if parser.has_section("classifiers"):
            overrides = {}
            for key, raw in parser["classifiers"].items():
                name = _hyperparam_name(key)
                overrides[name] = _hyperparam(name, raw)
            kw["hyperparams"] = HyperParams(**overrides)
        return RunConfig(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
