"""Unit tests for metrics and the multi-seed experiment"""

import json

import numpy as np
import pytest

from app.exceptions import ConfigError, MetricError
from app.models.reports import SCORER_NAMES, SeedMetrics
from app.services.acceptance_service import pair_count_auc
from app.services.eval_service import ABLATIONS, accuracy, aggregate, auc_roc, run_experiment
from app.services.report_service import ReportService
from tests.fixtures.factories import make_config, make_spec


@pytest.mark.unit
class TestAucRoc:
    """Tests for the rank-based AUC"""

    def test_perfect_separation(self):
        """Positives all above negatives gives 1"""
        assert auc_roc(np.array([0.1, 0.2, 0.8, 0.9]), np.array([0, 0, 1, 1])) == 1.0

    def test_inverted(self):
        """Positives all below negatives gives 0"""
        assert auc_roc(np.array([0.9, 0.8, 0.2, 0.1]), np.array([0, 0, 1, 1])) == 0.0

    def test_all_tied(self):
        """Constant scores give exactly 1/2"""
        assert auc_roc(np.ones(6), np.array([0, 1, 0, 1, 1, 0])) == 0.5

    def test_ties_count_half(self):
        """One tied pair out of four should contribute 1/2"""
        assert auc_roc(np.array([0.5, 0.1, 0.5, 0.9]), np.array([0, 0, 1, 1])) == pytest.approx(0.875)

    def test_matches_pair_count(self, rng):
        """Should agree with the O(n²) reference on tied random data"""
        scores = np.round(rng.normal(size=40), 1)
        labels = rng.integers(0, 2, size=40)
        labels[:2] = [0, 1]
        assert auc_roc(scores, labels) == pytest.approx(pair_count_auc(scores, labels), abs=1e-12)

    def test_single_class(self):
        """All-positive or all-negative labels should raise MetricError"""
        with pytest.raises(MetricError):
            auc_roc(np.array([0.1, 0.2]), np.array([1, 1]))

    def test_length_mismatch(self):
        """Should raise MetricError"""
        with pytest.raises(MetricError):
            auc_roc(np.array([0.1, 0.2, 0.3]), np.array([0, 1]))


@pytest.mark.unit
class TestAccuracy:
    """Tests for accuracy"""

    def test_fraction_correct(self):
        """Should return the fraction of matching predictions"""
        assert accuracy(np.array([0, 1, 1, 2]), np.array([0, 1, 2, 2])) == 0.75

    def test_empty(self):
        """Should raise MetricError on empty input"""
        with pytest.raises(MetricError):
            accuracy(np.zeros(0), np.zeros(0))

    def test_length_mismatch(self):
        """Should raise MetricError"""
        with pytest.raises(MetricError):
            accuracy(np.zeros(3), np.zeros(2))


@pytest.mark.unit
class TestAggregate:
    """Tests for cross-seed aggregation"""

    def test_mean_and_population_std(self):
        """Should average numeric columns and report the population std"""
        rows = [
            SeedMetrics(seed=0, accuracy=0.8, erm_accuracy=0.7),
            SeedMetrics(seed=1, accuracy=0.6, erm_accuracy=0.7),
        ]
        agg = aggregate(rows)
        assert agg["accuracy"].mean == pytest.approx(0.7)
        assert agg["accuracy"].std == pytest.approx(0.1)
        assert agg["accuracy_gain"].mean == pytest.approx(0.0)
        assert agg["accuracy_gain"].n == 2

    def test_missing_values_are_skipped(self):
        """Columns absent for every seed should aggregate to None"""
        agg = aggregate([SeedMetrics(seed=0, accuracy=1.0)])
        assert agg["auc_ukc"].mean is None
        assert agg["auc_ukc"].n == 0
        assert "accuracy_gain" not in agg

    def test_gain_needs_every_baseline(self):
        """One seed without a baseline should drop the gain column"""
        rows = [SeedMetrics(seed=0, accuracy=0.8, erm_accuracy=0.7), SeedMetrics(seed=1, accuracy=0.6)]
        assert "accuracy_gain" not in aggregate(rows)

    def test_ablation_columns(self):
        """Each ablation accuracy should get its own column"""
        rows = [
            SeedMetrics(seed=0, accuracy=0.9, ablations={"w/o DA": 0.8}),
            SeedMetrics(seed=1, accuracy=0.9, ablations={"w/o DA": 0.6}),
        ]
        assert aggregate(rows)["ablation.w/o DA"].mean == pytest.approx(0.7)


@pytest.mark.unit
class TestRunExperiment:
    """End-to-end runs on the small scenario"""

    def test_report_structure(self):
        """Every seed should produce a row with the universal metrics"""
        report = run_experiment(make_spec(), make_config(), [0, 1], scenario_name="small")
        assert [row.seed for row in report.seeds] == [0, 1]
        for row in report.seeds:
            assert 0.0 <= row.accuracy <= 1.0
            assert row.erm_accuracy is not None
            assert row.auc_ukc is not None
            assert row.auc_ukd is not None
            assert set(row.domain_separation) == set(SCORER_NAMES)
            assert row.max_softmax_row_error <= 1e-12
        assert report.aggregate["accuracy"].n == 2

    def test_body_is_deterministic(self):
        """Two runs should produce identical report bodies"""
        bodies = [
            json.dumps(run_experiment(make_spec(), make_config(), [0], with_erm=False).body(), sort_keys=True)
            for _ in range(2)
        ]
        assert bodies[0] == bodies[1]

    def test_body_excludes_runtime(self):
        """runtime_seconds should not leak into the deterministic body"""
        body = run_experiment(make_spec(), make_config(), [0], with_erm=False).body()
        assert "runtime_seconds" not in body
        assert body["schema"] == "ussl-report/1"

    def test_close_set_has_no_ukc_auc(self):
        """Without unknown samples the AUCs are undefined"""
        spec = make_spec(ukc_fraction=0.0, ukd_fraction=0.0)
        report = run_experiment(spec, make_config(), [0], with_erm=False)
        assert report.seeds[0].auc_ukc is None
        assert report.seeds[0].auc_ukd is None

    def test_no_seeds(self):
        """Should raise MetricError"""
        with pytest.raises(MetricError):
            run_experiment(make_spec(), make_config(), [])

    def test_ablations(self):
        """Every requested ablation should train one more model per seed and be aggregated"""
        report = run_experiment(make_spec(), make_config(), [0], scenario_name="small", ablations=list(ABLATIONS))
        assert list(report.seeds[0].ablations) == list(ABLATIONS)
        for name in ABLATIONS:
            assert 0.0 <= report.seeds[0].ablations[name] <= 1.0
            assert report.aggregate[f"ablation.{name}"].n == 1
        assert "## Ablation" in ReportService().render_experiment(report)

    def test_no_ablations_by_default(self):
        """Without ablations the rows and the rendered report carry none"""
        report = run_experiment(make_spec(), make_config(), [0], scenario_name="small", with_erm=False)
        assert report.seeds[0].ablations == {}
        assert "## Ablation" not in ReportService().render_experiment(report)

    def test_unknown_ablation(self):
        """An unknown ablation name should raise ConfigError before any training"""
        with pytest.raises(ConfigError):
            run_experiment(make_spec(), make_config(), [0], ablations=["w/o VAE"])
