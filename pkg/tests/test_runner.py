import csv
import warnings
from collections import Counter

import pytest

from conftest import make_comment, make_issue, separable_corpus
from issuesuccess.config import RunConfig, TimeGrid
from issuesuccess.corpus import Corpus, IssueType, SuccessLabel
from issuesuccess.errors import EmptyWindow, SingleClassError, TooFewDocuments
from issuesuccess.features import FeatureFamily, WeightingScheme
from issuesuccess.learn import ClassifierKind, NonConvergenceWarning
from issuesuccess.runner import (RESULT_COLUMNS, STATS_COLUMNS, Document, ExperimentSpec, TextCache,
                                 balance_test, build_grid, derive_seed, model_seed, prepare_window,
                                 read_rankings, read_results, run_experiment, run_grid, select_window,
                                 series_correlations, split_train_test, success_series, undersample,
                                 window_seed)

S, U = SuccessLabel.SUCCESSFUL, SuccessLabel.UNSUCCESSFUL
BUG = IssueType.BUG


def docs(n_s, n_u):
    return [Document(f"d{i}", "", S if i < n_s else U, BUG, 1) for i in range(n_s + n_u)]


def spec(classifier=ClassifierKind.MNB, horizon=1, weighting=WeightingScheme.TFIDF, family=None, **kw):
    return ExperimentSpec(BUG, classifier, horizon, weighting, family or FeatureFamily.word(), **kw)


def small_config(**kw):
    base = dict(issue_types=(BUG,), classifiers=(ClassifierKind.MNB, ClassifierKind.DTC),
                time_grid=TimeGrid((1, 30)), weightings=(WeightingScheme.TF,),
                families=(FeatureFamily.word(1, 2),), rankings=True)
    base.update(kw)
    return RunConfig(**base)


class TestSelectWindow:
    def corpus(self):
        a = make_issue("A", days=40, description="desc a")
        b = make_issue("B", days=10, description="desc b")
        c = make_issue("C", days=100, description="only description")
        comments = (make_comment("a2", a, days=2, text="early"), make_comment("a35", a, days=35, text="late"),
                    make_comment("b1", b, days=1, text="b comment"))
        return Corpus((a, b, c), comments)

    def test_examples(self):
        got = {d.issue_id: d.text for d in select_window(self.corpus(), BUG, 30)}
        assert got == {"A": "desc a early", "C": "only description"}

    def test_replacement_applied(self):
        issue = make_issue("X", description="see http://a.b/c")
        c = Corpus((issue,), (make_comment("x1", issue, text="+1"),))
        assert select_window(c, BUG, 5)[0].text == "see url_specification vote_specification"

    def test_cache_consistent(self):
        plain = select_window(self.corpus(), BUG, 36)
        cache = TextCache()
        cached = select_window(self.corpus(), BUG, 36, cache)
        assert plain == cached
        fam = FeatureFamily.word()
        assert [d.units(fam) for d in plain] == [d.units(fam) for d in cached]
        assert cached[0].text == "desc a early late"

    def test_empty(self):
        with pytest.raises(EmptyWindow):
            select_window(self.corpus(), BUG, 100)
        with pytest.raises(EmptyWindow):
            select_window(self.corpus(), IssueType.IMPROVEMENT, 1)

    def test_monotone_in_horizon(self):
        corpus = separable_corpus(30)
        issues = [make_issue(f"M{i}", days=i * 7) for i in range(1, 40)]
        corpus = Corpus(corpus.issues + tuple(issues), corpus.comments)
        previous = None
        for n in (1, 5, 10, 50, 100, 200):
            ids = {d.issue_id for d in select_window(corpus, BUG, n)}
            if previous is not None:
                assert ids <= previous
            previous = ids

    def test_pos_units(self):
        doc = Document("x", "the patch fixed it", S, BUG, 1)
        assert doc.units(FeatureFamily.pos()) == ["Determiner", "Noun", "Verb", "Pronoun"]


class TestSplitting:
    @pytest.mark.parametrize("n,train", [(100, 75), (4, 3), (7, 5)])
    def test_sizes(self, n, train):
        tr, te = split_train_test(docs(n, 0), 0.75, seed=1)
        assert (len(tr), len(te)) == (train, n - train)
        assert {d.issue_id for d in tr}.isdisjoint(d.issue_id for d in te)
        assert {d.issue_id for d in tr + te} == {f"d{i}" for i in range(n)}

    def test_too_few(self):
        with pytest.raises(TooFewDocuments):
            split_train_test(docs(2, 1), 0.75, seed=1)

    def test_seeded(self):
        assert split_train_test(docs(20, 20), 0.75, 3) == split_train_test(docs(20, 20), 0.75, 3)
        assert split_train_test(docs(20, 20), 0.75, 3) != split_train_test(docs(20, 20), 0.75, 4)

    def test_undersample(self):
        out = undersample(docs(100, 40), seed=0)
        assert sum(d.label is S for d in out) == 40 and sum(d.label is U for d in out) == 40
        assert all(d.label is U for d in out if int(d.issue_id[1:]) >= 100)
        ids = [int(d.issue_id[1:]) for d in out]
        assert ids == sorted(ids)

    def test_already_balanced(self):
        assert undersample(docs(50, 50), seed=0) == docs(50, 50)

    def test_single_class(self):
        with pytest.raises(SingleClassError):
            undersample(docs(10, 0), seed=0)
        with pytest.raises(SingleClassError):
            balance_test(docs(0, 3), seed=0)

    def test_balance_test(self):
        out = balance_test(docs(30, 10), seed=2)
        assert (sum(d.label is S for d in out), sum(d.label is U for d in out)) == (10, 10)


class TestSeeds:
    def test_stable(self):
        assert derive_seed(1, "window", BUG, 30) == derive_seed(1, "window", "Bug", 30)
        assert 0 <= derive_seed("x") < 2**63

    def test_window_seed_shared_across_classifiers(self):
        assert window_seed(spec(ClassifierKind.MNB)) == window_seed(spec(ClassifierKind.GBC))
        assert model_seed(spec(ClassifierKind.MNB)) != model_seed(spec(ClassifierKind.GBC))
        assert window_seed(spec(horizon=1)) != window_seed(spec(horizon=5))


class TestRunExperiment:
    def test_twelve_document_example(self):
        corpus = separable_corpus(12)
        result = run_experiment(spec(), corpus, RunConfig(min_df=1))
        assert not result.skipped
        assert result.metrics.accuracy == 1.0
        assert result.n_train + result.n_test <= 12 and result.n_test == 3

    def test_counts(self):
        corpus = separable_corpus(40)
        r = run_experiment(spec(), corpus)
        assert r.train_counts.successful == r.train_counts.unsuccessful
        assert r.train_counts.total == r.n_train and r.test_counts.total == r.n_test == 10
        assert r.n_test_balanced == 2 * min(r.test_counts.successful, r.test_counts.unsuccessful)

    def test_unbalanced_option(self):
        corpus = separable_corpus(40)
        r = run_experiment(spec(balanced_test=False), corpus)
        assert r.n_test_balanced == 0 and r.metrics.accuracy == 1.0

    def test_empty_window_skipped(self):
        r = run_experiment(spec(horizon=1000), separable_corpus(12))
        assert r.skipped and r.skip_reason == "EmptyWindow" and r.metrics is None

    def test_single_class_skipped(self):
        issues = tuple(make_issue(f"I{i}", description="word text") for i in range(10))
        r = run_experiment(spec(), Corpus(issues, ()))
        assert r.skip_reason == "SingleClassError"

    def test_too_few_skipped(self):
        r = run_experiment(spec(), separable_corpus(3))
        assert r.skip_reason == "TooFewDocuments"

    def test_deterministic(self):
        corpus = separable_corpus(40, seed=5)
        for kind in (ClassifierKind.RFC, ClassifierKind.MLPC):
            assert run_experiment(spec(kind), corpus) == run_experiment(spec(kind), corpus)

    def test_no_leakage(self):
        corpus = separable_corpus(40, seed=3)
        prepared = prepare_window(spec(), corpus, RunConfig(min_df=1))
        train_df = Counter(f for feats in prepared.train_features for f in feats)
        assert all(train_df[f] == prepared.vocab.df(f) >= 1 for f in prepared.vocab.features)
        assert set(prepared.vocab.features) == set(train_df)

    def test_pos_family(self):
        corpus = separable_corpus(40, seed=1)
        r = run_experiment(spec(family=FeatureFamily.pos()), corpus)
        assert not r.skipped and r.vocab_size > 0


class TestSeries:
    def test_fraction_and_correlation(self):
        issues = [make_issue(f"A{i}", days=d, tag=t, project="A")
                  for i, (d, t) in enumerate([(5, "Fixed"), (50, "Fixed"), (50, "Won't Fix"), (500, "Won't Fix")])]
        issues.append(make_issue("B1", days=3, project="B"))
        points = success_series(Corpus(tuple(issues), ()), [1, 10, 100])
        a = [(p.horizon_days, p.n_issues, p.n_successful) for p in points if p.project == "A"]
        assert a == [(1, 4, 2), (10, 3, 1), (100, 1, 0)]
        corr = series_correlations(points)
        assert corr["A"] < 0 and corr["B"] is None


class TestRunGrid:
    def test_outputs(self, tmp_path):
        corpus = separable_corpus(40)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergenceWarning)
            summary = run_grid(small_config(time_grid=TimeGrid((1, 30, 60))), corpus, tmp_path)
        assert summary.n_specs == 6 and summary.n_skipped == 2
        rows = read_results(tmp_path / "results.csv")
        with open(tmp_path / "results.csv", newline="") as fh:
            assert next(csv.reader(fh)) == RESULT_COLUMNS
        assert len(rows) == 6
        assert [(r["classifier"], r["horizon_days"]) for r in rows] == [
            ("MNB", "1"), ("MNB", "30"), ("MNB", "60"), ("DTC", "1"), ("DTC", "30"), ("DTC", "60")]
        skipped = [r for r in rows if r["skip_reason"]]
        assert {r["skip_reason"] for r in skipped} == {"EmptyWindow"} and all(r["accuracy"] == "" for r in skipped)
        with open(tmp_path / "stats.csv", newline="") as fh:
            stats = list(csv.reader(fh))
        assert stats[0] == STATS_COLUMNS and len(stats) > 1
        ranks = read_rankings(tmp_path / "rankings.jsonl.gz")
        assert {(r["horizon_days"], r["class"]) for r in ranks} == {(1, "Successful"), (1, "Unsuccessful"),
                                                                     (30, "Successful"), (30, "Unsuccessful")}
        assert all(len(r["ranking"]) == r["vocab_size"] for r in ranks)
        assert (tmp_path / "success_series.csv").exists() and (tmp_path / "correlation.csv").exists()

    def test_byte_identical_and_worker_independent(self, tmp_path):
        corpus = separable_corpus(40, seed=2)
        cfg = small_config(classifiers=(ClassifierKind.MNB, ClassifierKind.RFC))
        run_grid(cfg, corpus, tmp_path / "a")
        run_grid(cfg, corpus, tmp_path / "b")
        run_grid(cfg.restrict(workers=2), corpus, tmp_path / "c")
        for name in ("results.csv", "stats.csv", "rankings.jsonl.gz", "success_series.csv"):
            a = (tmp_path / "a" / name).read_bytes()
            assert a == (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()

    def test_subset_reproduces(self, tmp_path):
        corpus = separable_corpus(40, seed=4)
        full = small_config(classifiers=(ClassifierKind.MNB, ClassifierKind.RFC))
        sub = full.restrict(classifiers=(ClassifierKind.RFC,), rankings=False)
        run_grid(full, corpus, tmp_path / "full")
        run_grid(sub, corpus, tmp_path / "sub")
        full_rfc = [r for r in read_results(tmp_path / "full" / "results.csv") if r["classifier"] == "RFC"]
        assert full_rfc == read_results(tmp_path / "sub" / "results.csv")

    def test_grid_order(self):
        specs = build_grid(small_config())
        assert [(s.horizon_days, s.classifier.value) for s in specs] == [(1, "MNB"), (30, "MNB"), (1, "DTC"), (30, "DTC")]
