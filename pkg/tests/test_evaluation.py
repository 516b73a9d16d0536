import math
import random

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from oracles import reference_metrics
from issuesuccess.corpus import SuccessLabel
from issuesuccess.errors import DegenerateSeries, EmptyInput, LengthMismatch
from issuesuccess.evaluation import (ConfusionMatrix, MetricSet, coefficient_importance, confusion,
                                     descriptive_stats, metrics, pearson, per_experiment_importance,
                                     rank_features)
from issuesuccess.features import FeatureFamily, SparseVector, fit_vocabulary
from issuesuccess.learn import ClassifierKind, fit

S, U = SuccessLabel.SUCCESSFUL, SuccessLabel.UNSUCCESSFUL


class TestConfusion:
    def test_mixed(self):
        assert confusion([S, S, U, U], [S, U, U, S]) == ConfusionMatrix(tp=1, fp=1, tn=1, fn=1)

    def test_perfect(self):
        actual = [S] * 6 + [U] * 4
        assert confusion(actual, actual) == ConfusionMatrix(tp=6, fp=0, tn=4, fn=0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion([S, U], [S])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            confusion([], [])


class TestMetrics:
    def test_example(self):
        m = metrics(ConfusionMatrix(tp=8, fp=2, tn=7, fn=3))
        assert m.precision_successful == pytest.approx(0.8, abs=1e-12)
        assert m.recall_successful == pytest.approx(8 / 11, abs=1e-12)
        assert m.accuracy == pytest.approx(0.75, abs=1e-12)
        assert m.f1_successful == pytest.approx(0.76190, abs=1e-5)
        assert m.precision_unsuccessful == pytest.approx(0.7) and m.recall_unsuccessful == pytest.approx(7 / 9)

    def test_undefined_precision(self):
        m = metrics(ConfusionMatrix(tp=0, fp=0, tn=4, fn=2))
        assert m.precision_successful is None
        assert m.recall_successful == 0.0
        assert m.f1_successful is None

    def test_perfect(self):
        m = metrics(ConfusionMatrix(tp=5, fp=0, tn=5, fn=0))
        assert all(v == 1.0 for v in m.as_dict().values())

    def test_field_order(self):
        assert MetricSet.field_names()[0] == "accuracy" and len(MetricSet.field_names()) == 7

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_matches_reference(self, tp, fp, tn, fn):
        assume(tp + fp + tn + fn > 0)
        got = metrics(ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)).as_dict()
        ref = reference_metrics(tp, fn, fp, tn)
        for name, value in ref.items():
            if value is None:
                assert got[name] is None
            else:
                assert abs(got[name] - value) <= 1e-12
                assert 0.0 <= got[name] <= 1.0


class TestDescriptive:
    def test_example(self):
        d = descriptive_stats([0.5, 0.7, 0.9])
        assert (d.min, d.max) == (0.5, 0.9)
        assert d.mean == pytest.approx(0.7)
        assert d.variance == pytest.approx(0.08 / 3)
        assert d.std == pytest.approx(math.sqrt(0.08 / 3))

    def test_single(self):
        d = descriptive_stats([0.81])
        assert d.min == d.max == d.mean == 0.81 and d.variance == 0

    def test_empty(self):
        with pytest.raises(EmptyInput):
            descriptive_stats([])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
    def test_ordering(self, values):
        d = descriptive_stats(values)
        assert d.min <= d.mean + 1e-9 * max(1, abs(d.mean)) and d.mean <= d.max + 1e-9 * max(1, abs(d.mean))
        assert d.variance >= 0


class TestPearson:
    def test_perfect(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            pearson([1, 2], [1, 2, 3])
        with pytest.raises(DegenerateSeries):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(EmptyInput):
            pearson([1], [2])

    def test_against_numpy(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x, y = rng.normal(size=10), rng.normal(size=10)
            assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)

    @given(st.lists(st.integers(-100, 100), min_size=3, max_size=15), st.data())
    def test_symmetry_and_affine_invariance(self, xs, data):
        ys = data.draw(st.lists(st.integers(-100, 100), min_size=len(xs), max_size=len(xs)))
        assume(len(set(xs)) > 1 and len(set(ys)) > 1)
        a = data.draw(st.sampled_from([-3.0, -0.5, 2.0, 7.0]))
        b = data.draw(st.floats(-10, 10))
        r = pearson(xs, ys)
        assert pearson(ys, xs) == pytest.approx(r, abs=1e-12)
        assert pearson([a * x + b for x in xs], ys) == pytest.approx(math.copysign(1, a) * r, abs=1e-12)


class TestRankFeatures:
    def test_mean_rank(self):
        rankings = []
        for e, pos in enumerate([10, 20, 30]):
            order = [f"f{i}" for i in range(1, 200)]
            order.insert(pos - 1, "patch")
            rankings.append((f"e{e}", order))
        entry = next(r for r in rank_features(rankings) if r.feature == "patch")
        assert (entry.n, entry.ar) == (3, 20.0)

    def test_rank_beyond_top_k(self):
        order = [f"f{i}" for i in range(149)] + ["late"]
        entry = next(r for r in rank_features([(e, order) for e in "abc"]) if r.feature == "late")
        assert (entry.n, entry.ar) == (0, 150.0)

    def test_absent_feature_uses_vocab_size_plus_one(self):
        rankings = [("a", ["x", "y"]), ("b", ["y"]), ("c", ["y", "z", "x"])]
        got = {e.feature: e for e in rank_features(rankings, top_k=1, vocab_sizes={"a": 2, "b": 10, "c": 3})}
        wide = {e.feature: e for e in rank_features(rankings, top_k=50, vocab_sizes={"a": 2, "b": 10, "c": 3})}
        assert wide["x"].n == 2
        assert got["x"].ar == pytest.approx((1 + 11 + 3) / 3)
        assert got["x"].n == 1
        assert got["z"].ar == pytest.approx((3 + 11 + 2) / 3) and got["z"].n == 0
        assert got["y"].n == 2

    def test_ordering(self):
        rankings = [("a", ["b", "a", "c"]), ("b", ["a", "b", "c"])]
        assert [e.feature for e in rank_features(rankings, top_k=2)] == ["a", "b", "c"]

    def test_empty(self):
        assert rank_features([]) == []

    def test_top_k_hit_count_identity(self):
        rng = random.Random(5)
        pool = [f"w{i}" for i in range(40)]
        rankings = [(str(e), rng.sample(pool, rng.randint(1, 40))) for e in range(12)]
        for k in (1, 5, 20, 100):
            entries = rank_features(rankings, top_k=k)
            assert sum(e.n for e in entries) == sum(min(k, len(r)) for _, r in rankings)
            assert all(e.ar >= 1 and 0 <= e.n <= len(rankings) for e in entries)


class TestImportance:
    def test_mass_and_ties(self):
        vocab = fit_vocabulary([["file", "patch", "zeta", "alpha"]], FeatureFamily.word(1, 1), min_df=1)
        idx = vocab.index
        s_vecs = [SparseVector.from_dict({idx["patch"]: 2.1, idx["file"]: 2.0}, len(vocab)),
                  SparseVector.from_dict({idx["patch"]: 1.0}, len(vocab))]
        u_vecs = [SparseVector.from_dict({}, len(vocab))]
        ranks = per_experiment_importance(vocab, {S: s_vecs, U: u_vecs})
        assert ranks[S] == ["patch", "file", "alpha", "zeta"]
        assert ranks[U] == ["alpha", "file", "patch", "zeta"]

    def test_coefficient_ranking(self):
        vocab = fit_vocabulary([["good", "bad"]], FeatureFamily.word(1, 1), min_df=1)
        X = [SparseVector.from_dense(np.array(r, dtype=float)) for r in ([0, 3], [1, 0], [0, 2], [2, 0])]
        model = fit(ClassifierKind.MNB, X, [S, U, S, U])
        ranks = coefficient_importance(model, vocab)
        assert ranks[S] == ["good", "bad"] and ranks[U] == ["bad", "good"]

    def test_coefficient_ranking_needs_coefficients(self):
        vocab = fit_vocabulary([["a", "b"]], FeatureFamily.word(1, 1), min_df=1)
        X = [SparseVector.from_dense(np.array(r, dtype=float)) for r in ([0, 1], [1, 0])]
        with pytest.raises(TypeError):
            coefficient_importance(fit(ClassifierKind.DTC, X, [S, U]), vocab)
