import numpy as np
import pytest

from pedcast.errors import DataError
from pedcast.metrics import (
    ConfusionMatrix,
    MetricsReport,
    accuracy_and_kappa,
    ade,
    fde,
    per_sample_ade,
    relative_metric,
)

RNG = np.random.default_rng(42)


class TestDisplacement:
    def test_identity_zero(self):
        paths = RNG.normal(size=(5, 8, 2))
        assert ade(paths, paths) == 0.0
        assert fde(paths, paths) == 0.0

    def test_constant_offset_pythagorean(self):
        actual = RNG.normal(size=(4, 6, 2))
        pred = actual + np.array([3.0, 4.0])
        assert ade(actual, pred) == pytest.approx(5.0)
        assert fde(actual, pred) == pytest.approx(5.0)

    def test_last_point_only_offset(self):
        actual = RNG.normal(size=(3, 10, 2))
        pred = actual.copy()
        pred[:, -1, :] += np.array([0.0, 2.0])
        assert fde(actual, pred) == pytest.approx(2.0)
        assert ade(actual, pred) == pytest.approx(2.0 / 10)

    def test_matches_double_loop_oracle(self):
        actual = RNG.normal(size=(10, 7, 2))
        pred = RNG.normal(size=(10, 7, 2))
        total = 0.0
        finals = 0.0
        for n in range(10):
            for t in range(7):
                total += np.sqrt(((actual[n, t] - pred[n, t]) ** 2).sum())
            finals += np.sqrt(((actual[n, -1] - pred[n, -1]) ** 2).sum())
        assert ade(actual, pred) == pytest.approx(total / 70, abs=1e-12)
        assert fde(actual, pred) == pytest.approx(finals / 10, abs=1e-12)

    def test_translation_invariance(self):
        actual = RNG.normal(size=(6, 5, 2))
        pred = RNG.normal(size=(6, 5, 2))
        shift = np.array([17.0, -4.0])
        assert ade(actual + shift, pred + shift) == pytest.approx(ade(actual, pred))

    def test_fde_equals_ade_for_single_point_futures(self):
        actual = RNG.normal(size=(9, 1, 2))
        pred = RNG.normal(size=(9, 1, 2))
        assert fde(actual, pred) == pytest.approx(ade(actual, pred))

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            ade(np.zeros((2, 3, 2)), np.zeros((2, 4, 2)))

    def test_per_sample_shape(self):
        assert per_sample_ade(np.zeros((5, 3, 2)), np.ones((5, 3, 2))).shape == (5,)


class TestAccuracyKappa:
    def test_perfect_diagonal(self):
        acc, kappa, degenerate = accuracy_and_kappa(ConfusionMatrix(np.diag([5, 3, 9])))
        assert acc == 1.0 and kappa == 1.0 and not degenerate

    def test_hand_evaluated_two_class(self):
        acc, kappa, _ = accuracy_and_kappa(ConfusionMatrix([[2, 1], [1, 2]]))
        assert acc == pytest.approx(4 / 6)
        assert kappa == pytest.approx(1 / 3)

    def test_chance_level_predictions_give_kappa_near_zero(self):
        rng = np.random.default_rng(10)
        n = 60000
        actual = rng.integers(0, 3, size=n)
        pred = rng.choice(3, size=n, p=[0.5, 0.3, 0.2])  # independent of actual
        cm = ConfusionMatrix.from_labels(actual, pred, 3)
        _, kappa, _ = accuracy_and_kappa(cm)
        # independence implies kappa 0 up to sampling noise ~ 1/sqrt(n)
        assert abs(kappa) < 3.0 / np.sqrt(n)

    def test_independent_margins_give_zero_kappa(self):
        cm = ConfusionMatrix(np.outer([10, 30], [5, 15]))
        _, kappa, _ = accuracy_and_kappa(cm)
        assert kappa == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_single_cell(self):
        acc, kappa, degenerate = accuracy_and_kappa(ConfusionMatrix([[7, 0], [0, 0]]))
        assert acc == 1.0 and kappa == 0.0 and degenerate

    def test_kappa_one_iff_diagonal(self):
        _, kappa, _ = accuracy_and_kappa(ConfusionMatrix([[5, 1], [0, 9]]))
        assert kappa < 1.0


class TestRelativeMetric:
    def test_equal_values(self):
        assert relative_metric(3.3, 3.3, 0) == pytest.approx(0.0)
        assert relative_metric(3.3, 3.3, 1) == pytest.approx(0.0)

    def test_printed_accuracy_improvement(self):
        assert relative_metric(71.95, 58.18, 0) == pytest.approx(23.67, abs=0.01)

    def test_printed_kappa_improvement(self):
        assert relative_metric(66.28, 51.73, 0) == pytest.approx(28.13, abs=0.01)

    def test_printed_displacement_reduction(self):
        assert relative_metric(5.894, 6.488, 1) == pytest.approx(9.16, abs=0.01)

    def test_loss_metric_sign(self):
        assert relative_metric(1.0, 2.0, 1) > 0
        assert relative_metric(3.0, 2.0, 1) < 0

    def test_bad_mode(self):
        with pytest.raises(DataError):
            relative_metric(1.0, 1.0, 2)


class TestMetricsReport:
    def test_from_results_and_relative(self):
        actual = np.array([0, 0, 1, 1, 2, 2])
        pred = np.array([0, 0, 1, 0, 2, 2])
        paths = RNG.normal(size=(6, 4, 2))
        rep = MetricsReport.from_results(actual, pred, 3, paths, paths + [3.0, 4.0])
        assert rep.acc == pytest.approx(5 / 6)
        assert rep.ade == pytest.approx(5.0)
        ref = MetricsReport.from_results(actual, actual, 3, paths, paths + [6.0, 8.0])
        rel = rep.relative_to(ref)
        assert rel["r_ade"] == pytest.approx(50.0, abs=1e-4)
