import pytest

from issuesuccess.config import DEFAULT_CONFIG_TEXT, DEFAULT_HORIZONS, RunConfig, TimeGrid, load_config, parse_config
from issuesuccess.corpus import IssueType
from issuesuccess.errors import ConfigError
from issuesuccess.features import FamilyKind, FeatureFamily, WeightingScheme
from issuesuccess.learn import ClassifierKind, HyperParams
from issuesuccess.runner import build_grid


class TestTimeGrid:
    def test_default(self):
        grid = TimeGrid()
        assert len(grid) == 80
        assert grid.horizons[:4] == (1, 5, 10, 20) and grid.horizons[-1] == 3500
        assert all(b > a for a, b in zip(grid.horizons, grid.horizons[1:]))
        assert 150 in grid and 125 not in grid

    @pytest.mark.parametrize("bad", [(), (5, 5), (10, 3), (-1, 2)])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            TimeGrid(bad)


class TestParse:
    def test_default_text_is_default_config(self):
        assert parse_config(DEFAULT_CONFIG_TEXT) == RunConfig()
        assert parse_config("") == RunConfig()

    def test_every_default_key_documented(self):
        for key in ("issue_types", "classifiers", "horizons", "weightings", "families", "word_ngram_range",
                    "pos_ngram_range", "train_fraction", "balanced_test", "min_df", "max_features", "seed",
                    "workers", "rankings", "top_k"):
            assert f"\n{key} = " in DEFAULT_CONFIG_TEXT

    def test_restricted(self):
        cfg = parse_config("""
            [grid]
            issue_types = Bug
            classifiers = mnb, LR   # case-insensitive
            horizons = 1, 30, 60
            weightings = TFIDF
            families = WordNgrams
            word_ngram_range = 1, 3
            [split]
            balanced_test = false
            [features]
            max_features = none
            [run]
            seed = 9
            [classifiers]
            lr_C = 0.5
            mlp_hidden_layer_sizes = 4, 3
            svc_gamma = auto
            dtc_max_depth = None
        """)
        assert cfg.issue_types == (IssueType.BUG,)
        assert cfg.classifiers == (ClassifierKind.MNB, ClassifierKind.LR)
        assert cfg.time_grid.horizons == (1, 30, 60)
        assert cfg.weightings == (WeightingScheme.TFIDF,)
        assert cfg.families == (FeatureFamily(FamilyKind.WORD, 1, 3),)
        assert cfg.balanced_test is False and cfg.max_features is None and cfg.seed == 9
        assert cfg.hyperparams == HyperParams(lr_C=0.5, mlp_hidden_layer_sizes=(4, 3), svc_gamma="auto")
        assert len(build_grid(cfg)) == 6

    @pytest.mark.parametrize("text", [
        "[grid]\nclassifiers = XGB",
        "[grid]\nhorizons = 10, 5",
        "[grid]\nword_ngram_range = 1",
        "[split]\ntrain_fraction = 1.5",
        "[features]\nmin_df = 0",
        "[run]\nworkers = zero",
        "[classifiers]\nno_such = 1",
        "[classifiers]\nlr_C = -1",
        "[mystery]\nx = 1",
        "not an ini file",
    ])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_load(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("[run]\nworkers = 3\n")
        assert load_config(path).workers == 3


class TestGrid:
    def test_default_cardinality(self):
        specs = build_grid(RunConfig())
        assert len(specs) == 6720 == 3 * 7 * len(DEFAULT_HORIZONS) * 2 * 2
        assert len(set(specs)) == 6720

    def test_single_spec(self):
        cfg = RunConfig(issue_types=(IssueType.BUG,), classifiers=(ClassifierKind.MNB,), time_grid=TimeGrid((30,)),
                        weightings=(WeightingScheme.TFIDF,), families=(FeatureFamily.word(),))
        assert len(build_grid(cfg)) == 1

    def test_empty_dimension(self):
        with pytest.raises(ConfigError):
            build_grid(RunConfig(classifiers=()))

    @pytest.mark.parametrize("t,c,h,w,f", [(1, 1, 1, 1, 1), (2, 3, 5, 2, 1), (3, 7, 4, 1, 2)])
    def test_product(self, t, c, h, w, f):
        cfg = RunConfig(issue_types=tuple(IssueType)[:t], classifiers=tuple(ClassifierKind)[:c],
                        time_grid=TimeGrid(DEFAULT_HORIZONS[:h]), weightings=tuple(WeightingScheme)[:w],
                        families=(FeatureFamily.word(), FeatureFamily.pos())[:f])
        assert len(build_grid(cfg)) == t * c * h * w * f
