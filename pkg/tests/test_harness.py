import numpy as np
import pytest

from pedcast.clustering import LabeledDataset
from pedcast.data import ConditionCode, DatasetConfig, ResampledTrajectory
from pedcast.errors import DataError
from pedcast.harness import (
    Hyper,
    PairedRunResult,
    class_weights,
    dataset_tensors,
    run_ablation,
    run_cv,
    significance_report,
    stratified_kfold,
)


def toy_dataset(n=150, K=3, L=4, L_prime=4, noise=0.3, cond_effect=None, seed=0):
    """Separable synthetic labeled dataset of straight runs to K anchors.

    ``cond_effect`` optionally biases label choice by combined condition,
    mapping condition -> per-class probabilities.
    """
    rng = np.random.default_rng(seed)
    anchors = np.stack([
        8.0 * np.array([np.cos(a), np.sin(a)])
        for a in np.linspace(0, 2 * np.pi, K, endpoint=False)
    ])
    rts, labels = [], []
    for i in range(n):
        w, d = int(rng.integers(2)), int(rng.integers(2))
        c = w * 2 + d
        if cond_effect is None:
            lab = int(rng.integers(K))
        else:
            lab = int(rng.choice(K, p=cond_effect[c]))
        frac = np.linspace(0, 1, L + L_prime)[:, None]
        pts = frac * anchors[lab] + rng.normal(0, noise, size=(L + L_prime, 2))
        rts.append(ResampledTrajectory(f"p{i}", pts, ConditionCode(w, d)))
        labels.append(lab)
    return LabeledDataset(rts, np.array(labels), K)


def tiny_hyper(**overrides):
    kw = dict(epochs=8, batch_size=32, lr=3e-3, hidden=8, embed_dim=6, fuse_dim=6,
              predictor_epochs=8, predictor_batch_size=64, predictor_hidden=6)
    kw.update(overrides)
    return Hyper(**kw)


CFG = DatasetConfig(L=4, L_prime=4)


class TestStratifiedKfold:
    def test_balanced_classes_split_exactly(self):
        labels = np.repeat([0, 1], 50)
        plan = stratified_kfold(labels, 5, seed=1)
        for fold in plan.folds:
            counts = np.bincount(labels[fold], minlength=2)
            assert list(counts) == [10, 10]

    def test_indivisible_classes_differ_by_at_most_one(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 3, size=103)
        plan = stratified_kfold(labels, 5, seed=2)
        for cls in range(3):
            per_fold = [int((labels[f] == cls).sum()) for f in plan.folds]
            assert max(per_fold) - min(per_fold) <= 1

    def test_partition_property(self):
        labels = np.random.default_rng(1).integers(0, 4, size=97)
        plan = stratified_kfold(labels, 5, seed=3)
        union = np.concatenate(plan.folds)
        assert sorted(union) == list(range(97))
        for i in range(5):
            for j in range(i + 1, 5):
                assert not set(plan.folds[i]) & set(plan.folds[j])

    def test_rotation_schedule_covers_each_fold_once(self):
        labels = np.repeat([0, 1], 25)
        plan = stratified_kfold(labels, 5, seed=0)
        assert sorted(r["test"] for r in plan.rotations) == list(range(5))
        for r in plan.rotations:
            assert r["val"] != r["test"]
            assert set(r["train"]) == set(range(5)) - {r["test"], r["val"]}

    def test_small_class_rejected(self):
        with pytest.raises(DataError):
            stratified_kfold(np.array([0, 0, 0, 1, 1, 1, 1, 1]), 5)

    def test_deterministic(self):
        labels = np.random.default_rng(5).integers(0, 2, size=40)
        a = stratified_kfold(labels, 5, seed=9)
        b = stratified_kfold(labels, 5, seed=9)
        for fa, fb in zip(a.folds, b.folds):
            np.testing.assert_array_equal(fa, fb)


class TestClassWeights:
    def test_balanced(self):
        np.testing.assert_allclose(class_weights(np.repeat([0, 1, 2], 10), 3), 1 / 3)

    def test_hand_case(self):
        labels = np.array([0] * 10 + [1] * 30)
        np.testing.assert_allclose(class_weights(labels, 2), [0.75, 0.25])

    def test_scaling_invariance(self):
        a = class_weights(np.array([0] * 4 + [1] * 12), 2)
        b = class_weights(np.array([0] * 12 + [1] * 36), 2)
        np.testing.assert_allclose(a, b)
        assert a.sum() == pytest.approx(1.0)

    def test_empty_class_rejected(self):
        with pytest.raises(DataError):
            class_weights(np.array([0, 0, 0]), 2)


class TestDatasetTensors:
    def test_shapes_and_conditions(self):
        ds = toy_dataset(20)
        obs, fut, labels, w, d = dataset_tensors(ds, 4)
        assert obs.shape == (20, 4, 2) and fut.shape == (20, 4, 2)
        assert labels.shape == (20,) and set(np.unique(w)) <= {0, 1}

    def test_missing_condition_rejected(self):
        rt = ResampledTrajectory("p", np.zeros((8, 2)), None)
        ds = LabeledDataset([rt], np.array([0]), 1)
        with pytest.raises(DataError):
            dataset_tensors(ds, 4)


class TestRunCv:
    def test_deterministic_and_learns(self):
        ds = toy_dataset(150, K=3)
        hyper = tiny_hyper(epochs=25, lr=5e-3, hidden=10)
        a = run_cv(ds, CFG, hyper, seed=5)
        b = run_cv(ds, CFG, hyper, seed=5)
        assert a.mean_test_acc == b.mean_test_acc
        assert a.mean_test_kappa == b.mean_test_kappa
        for ra, rb in zip(a.rotations, b.rotations):
            assert ra.confusion == rb.confusion
            assert ra.best_epoch == rb.best_epoch
        assert a.mean_test_acc > 0.9  # separable task

    def test_best_epoch_is_argmax_of_series(self):
        ds = toy_dataset(100, K=2)
        cv = run_cv(ds, CFG, tiny_hyper(epochs=6), seed=2)
        for rot in cv.rotations:
            acc = rot.val_accuracy
            best = rot.best_epoch
            assert acc[best] == max(acc)
            assert best == acc.index(max(acc))  # earliest on ties


class TestRunAblation:
    def test_fold_leakage_free_and_all_samples_tested(self):
        ds = toy_dataset(80, K=2)
        paired = run_ablation(ds, CFG, tiny_hyper(epochs=3, predictor_epochs=3), seed=7)
        assert len(paired.true_labels) == 80
        assert np.all(paired.pred_without >= 0)
        assert np.all(paired.pred_with >= 0)

    def test_not_influenced_errors_bitwise_identical(self):
        ds = toy_dataset(80, K=2)
        paired = run_ablation(ds, CFG, tiny_hyper(epochs=3, predictor_epochs=3), seed=7)
        same = ~paired.influenced
        assert np.any(same)
        np.testing.assert_array_equal(paired.ade_without[same], paired.ade_with[same])
        np.testing.assert_array_equal(paired.fde_without[same], paired.fde_with[same])

    def test_deterministic(self):
        ds = toy_dataset(80, K=2)
        a = run_ablation(ds, CFG, tiny_hyper(epochs=2, predictor_epochs=2), seed=3)
        b = run_ablation(ds, CFG, tiny_hyper(epochs=2, predictor_epochs=2), seed=3)
        np.testing.assert_array_equal(a.pred_with, b.pred_with)
        np.testing.assert_array_equal(a.ade_without, b.ade_without)


class TestSignificanceReport:
    def test_self_comparison_yields_null_report(self):
        n = 50
        rng = np.random.default_rng(0)
        true = rng.integers(0, 2, size=n)
        pred = rng.integers(0, 2, size=n)
        errs = rng.uniform(1, 3, size=n)
        paired = PairedRunResult(true, pred, pred.copy(), errs, errs.copy(),
                                 errs, errs.copy(), 2)
        rep = significance_report(paired)
        assert rep["n_influenced"] == 0
        assert rep["mcnemar_p"] == 1.0
        assert rep["influenced"] == {"skipped": "no influenced samples"}
        assert rep["not_influenced"]["ade_bitwise_identical"]

    def test_null_scenario_not_significant(self):
        # condition enters the generator but does not shift destinations;
        # both settings trained to convergence so capacity differences wash out
        ds = toy_dataset(200, K=2, cond_effect=None, seed=4, noise=0.55)
        hyper = tiny_hyper(epochs=40, lr=5e-3, hidden=10, predictor_epochs=4)
        paired = run_ablation(ds, CFG, hyper, seed=11)
        rep = significance_report(paired)
        assert rep["mcnemar_p"] > 0.05
        assert rep["n_influenced"] < 0.2 * rep["n_samples"]
