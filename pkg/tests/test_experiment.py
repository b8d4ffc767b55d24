import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armarecon.config import ExperimentConfig
from armarecon.errors import DataError
from armarecon.experiment import (MetricsReport, auc_pairwise, auc_rank, binary_metrics,
                                  compare_regularizer, comparison_csv, run_experiment,
                                  stratified_folds, train_model)
from armarecon.features import synth_cohort
from armarecon.graph import build_adjacency


class TestStratifiedFolds:
    def test_exact_ninety_ten(self):
        plan = stratified_folds([0] * 10 + [1] * 10, 0.9, 1, seed=0)
        train = plan.train_masks[0]
        assert train[:10].sum() == 9 and train[10:].sum() == 9

    def test_half_split_twenty_folds(self):
        labels = np.array([0] * 133 + [1] * 167)
        plan = stratified_folds(labels, 0.5, 20, seed=3)
        for mask in plan.train_masks:
            assert abs(mask[labels == 0].sum() - 66.5) <= 1
            assert abs(mask[labels == 1].sum() - 83.5) <= 1

    def test_disjoint_and_covering(self):
        plan = stratified_folds(np.repeat([0, 1], 15), 0.7, 5, seed=1)
        assert not np.any(plan.train_masks & plan.test_masks)
        assert np.all(plan.train_masks | plan.test_masks)

    def test_deterministic_and_distinct(self):
        labels = np.repeat([0, 1], 30)
        a = stratified_folds(labels, 0.7, 4, seed=9)
        b = stratified_folds(labels, 0.7, 4, seed=9)
        np.testing.assert_array_equal(a.train_masks, b.train_masks)
        assert len({m.tobytes() for m in a.train_masks}) == 4

    def test_tiny_class_rejected(self):
        with pytest.raises(DataError):
            stratified_folds([0, 0, 0, 1], 0.5, 2, seed=0)

    def test_both_sides_keep_each_class(self):
        plan = stratified_folds([0, 0, 1, 1, 1], 0.95, 3, seed=0)
        for tr, te in zip(plan.train_masks, plan.test_masks):
            assert set(np.array([0, 0, 1, 1, 1])[te]) == {0, 1}


class TestMetrics:
    def test_perfect(self):
        m = binary_metrics([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert m == {"acc": 1.0, "prec": 1.0, "rec": 1.0, "f1": 1.0, "auc": 1.0}

    def test_inverted(self):
        m = binary_metrics([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0])
        assert m["auc"] == 0.0 and m["acc"] == 0.0

    def test_tied_auc(self):
        # pairs (0.9,0.8) (0.9,0.1) (0.8,0.8) (0.8,0.1): 1 + 1 + 0.5 + 1 over 4
        assert binary_metrics([0.9, 0.8, 0.8, 0.1], [1, 1, 0, 0])["auc"] == 0.875

    def test_logit_input_uses_argmax(self):
        logits = np.array([[0.0, 1.0], [2.0, 0.0], [0.0, 3.0], [1.0, 0.5]])
        m = binary_metrics(logits, [1, 0, 0, 1])
        assert m["acc"] == 0.5 and m["prec"] == 0.5 and m["rec"] == 0.5

    def test_single_class_auc_missing(self):
        with pytest.warns(UserWarning):
            m = binary_metrics([0.9, 0.1], [1, 1])
        assert m["auc"] is None and m["acc"] == 0.5

    def test_mask(self):
        m = binary_metrics([0.9, 0.1, 0.9, 0.1], [1, 0, 0, 1], [True, True, False, False])
        assert m["acc"] == 1.0

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1)), min_size=2, max_size=40))
    def test_f1_is_harmonic_mean_and_bounded(self, pairs):
        scores = np.array([s / 5 for s, _ in pairs])
        labels = np.array([l for _, l in pairs])
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = binary_metrics(scores, labels)
        for v in m.values():
            assert v is None or 0.0 <= v <= 1.0
        if m["prec"] + m["rec"] > 0:
            hm = 2 * m["prec"] * m["rec"] / (m["prec"] + m["rec"])
            assert abs(m["f1"] - hm) < 1e-12

    def test_rank_auc_equals_pairwise(self, rng):
        for _ in range(200):
            n = rng.integers(2, 50)
            scores = rng.integers(0, 6, n) / 5.0
            labels = rng.integers(0, 2, n)
            assert auc_rank(scores, labels) == auc_pairwise(scores, labels)


class TestReport:
    def test_csv_layout_and_aggregates(self):
        rows = [{"acc": 1.0, "prec": 1.0, "rec": 0.5, "f1": 2 / 3, "auc": 0.75},
                {"acc": 0.5, "prec": 0.0, "rec": 0.0, "f1": 0.0, "auc": None}]
        text = MetricsReport(rows).to_csv()
        lines = text.splitlines()
        assert lines[0] == "fold,acc,prec,rec,f1,auc"
        assert lines[2].endswith(",")
        assert lines[3].startswith("aggregate_mean,0.75,") and lines[3].endswith(",0.75")
        assert lines[4].startswith("aggregate_std,0.25,")
        back = MetricsReport.from_csv(text)
        assert back.rows[1]["auc"] is None and back.rows[0]["f1"] == 2 / 3


@pytest.fixture(scope="module")
def small_cohort():
    return synth_cohort(40, 3, 10, 0.15, 0.05, seed=1)


def small_config(**kw):
    base = dict(synth_n=40, synth_p=3, q=10, alpha=0.8, epochs=30, folds=3, hidden=8, lr=1e-2)
    base.update(kw)
    return ExperimentConfig(**base)


class TestRunExperiment:
    def test_report_rows(self, small_cohort):
        res = run_experiment(small_config(), fm=small_cohort)
        assert len(res.report.rows) == 3
        lines = res.report_csv.splitlines()
        assert len(lines) == 6 and lines[-2].startswith("aggregate_mean")

    def test_aggregates_match_recomputation(self, small_cohort):
        res = run_experiment(small_config(), fm=small_cohort)
        rows = MetricsReport.from_csv(res.report_csv).rows
        agg = {l.split(",")[0]: l.split(",")[1:] for l in res.report_csv.splitlines()[-2:]}
        for j, m in enumerate(["acc", "prec", "rec", "f1", "auc"]):
            vals = np.array([r[m] for r in rows])
            assert abs(float(agg["aggregate_mean"][j]) - vals.mean()) < 1e-12
            assert abs(float(agg["aggregate_std"][j]) - vals.std()) < 1e-12

    def test_manifest_echoes_config(self, small_cohort):
        cfg = small_config(lambda_recon=0.005, similarity="cosine")
        res = run_experiment(cfg, fm=small_cohort)
        for k, v in cfg.to_items():
            assert res.manifest[k] == v
        assert res.manifest["lambda_recon"] == "0.005"
        assert len(res.manifest["features_sha1"]) == 40

    def test_deterministic(self, small_cohort, tmp_path):
        a = run_experiment(small_config(), out_dir=tmp_path / "a", fm=small_cohort)
        b = run_experiment(small_config(), out_dir=tmp_path / "b", fm=small_cohort)
        assert (tmp_path / "a/report.csv").read_bytes() == (tmp_path / "b/report.csv").read_bytes()
        assert (tmp_path / "a/manifest.txt").read_bytes() == (tmp_path / "b/manifest.txt").read_bytes()

    def test_threads_do_not_change_results(self, small_cohort):
        a = run_experiment(small_config(), fm=small_cohort)
        b = run_experiment(small_config(threads=3), fm=small_cohort)
        assert a.report_csv == b.report_csv

    def test_lambda_zero_matches_plain(self, small_cohort):
        a = run_experiment(small_config(variant="recon", lambda_recon=0.0), fm=small_cohort)
        b = run_experiment(small_config(variant="plain"), fm=small_cohort)
        assert a.report_csv == b.report_csv
        for la, lb in zip(a.logits, b.logits):
            assert la.tobytes() == lb.tobytes()

    @pytest.mark.parametrize("model", ["gcn", "cheb", "mlp"])
    def test_baseline_models_run(self, small_cohort, model):
        res = run_experiment(small_config(model=model, folds=2), fm=small_cohort)
        assert len(res.report.rows) == 2

    def test_training_never_sees_test_labels(self, small_cohort):
        graph = build_adjacency(small_cohort, 0.8)
        plan = stratified_folds(small_cohort.labels, 0.7, 1, seed=0)
        flipped = small_cohort.labels.copy()
        flipped[plan.test_masks[0]] ^= 1
        cfg = small_config(epochs=5)
        p1, _ = train_model(cfg, small_cohort.data, graph, small_cohort.labels, plan.train_masks[0])
        p2, _ = train_model(cfg, small_cohort.data, graph, flipped, plan.train_masks[0])
        for k in p1.keys():
            assert p1[k].tobytes() == p2[k].tobytes()

    def test_regularizer_comparison_table(self, small_cohort):
        rows = compare_regularizer(small_config(folds=2, epochs=10), seeds=[0, 1], fm=small_cohort)
        text = comparison_csv(rows)
        assert text.splitlines()[0] == "seed,auc_recon,auc_plain,difference"
        assert text.splitlines()[-1].startswith("mean,")
