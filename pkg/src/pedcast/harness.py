"""Experimental protocol: stratified 5-fold cross-validation with
best-validation-epoch model selection, the with/without weather-time
ablation, and the paired significance analysis.

All randomness flows from one master seed, split per component with
SeedSequence, so two runs with the same seed are identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    GATE_ON_BRANCHES,
    ClassifierConfig,
    DestinationClassifier,
    LossConfig,
)
from .clustering import LabeledDataset
from .data import DatasetConfig, split_observed_future
from .errors import DataError
from .metrics import ConfusionMatrix, accuracy_and_kappa, per_sample_ade, per_sample_fde
from .nn.optim import AdamState
from .predictor import PredictorTrainSettings, PredictorConfig, train_cluster_models
from .stats import ALPHA, mann_whitney_u_one_sided, mcnemar_test


@dataclass
class Hyper:
    """Training hyperparameters. Defaults follow the full-scale protocol;
    ``desk_scale`` shrinks everything for minute-scale synthetic runs."""

    epochs: int = 1000
    batch_size: int = 1024
    lr: float = 1e-3
    gamma: float = 2.0
    lambda_p: float = 0.5
    hidden: int = 128
    embed_dim: int = 128
    fuse_dim: int = 128
    dropout: float = 0.5
    gate_input: str = GATE_ON_BRANCHES
    predictor_epochs: int = 200
    predictor_batch_size: int = 128
    predictor_hidden: int = 128
    predictor_dropout: float = 0.5
    predict_offsets: bool = False

    @classmethod
    def desk_scale(cls) -> "Hyper":
        return cls(
            epochs=150, batch_size=128, hidden=32, embed_dim=32, fuse_dim=32,
            predictor_epochs=60, predictor_hidden=32,
        )


@dataclass
class FoldPlan:
    """Stratified partition into k folds plus the rotation schedule."""

    folds: list[np.ndarray]
    rotations: list[dict]  # {"test": i, "val": j, "train": [..]}

    @property
    def k(self) -> int:
        return len(self.folds)


def stratified_kfold(labels: np.ndarray, k: int = 5, seed: int = 0) -> FoldPlan:
    """Deterministic stratified k-fold split.

    Per class the shuffled indices are dealt round-robin, so per-class fold
    sizes differ by at most one. Rotation r tests on fold r and validates on
    fold (r+1) mod k.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise DataError("need k >= 2 folds")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < k:
            raise DataError(f"class {cls} has {len(idx)} samples, fewer than k={k}")
        idx = rng.permutation(idx)
        for j in range(k):
            buckets[j].extend(idx[j::k])
    folds = [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]
    rotations = [
        {
            "test": r,
            "val": (r + 1) % k,
            "train": [j for j in range(k) if j not in (r, (r + 1) % k)],
        }
        for r in range(k)
    ]
    return FoldPlan(folds, rotations)


def class_weights(labels: np.ndarray, K: int) -> np.ndarray:
    """Inverse-frequency class weights normalized to sum to 1:
    beta_k = (N / N_k) / sum_j (N / N_j)."""
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=K).astype(np.float64)
    if np.any(counts == 0):
        raise DataError(f"empty class among {K}: counts {counts.astype(int).tolist()}")
    inv = 1.0 / counts
    return inv / inv.sum()


def dataset_tensors(dataset: LabeledDataset, L: int):
    """Stack a labeled dataset into training arrays.

    Returns (observed (N,L,2), future (N,L',2), labels, weather_idx, time_idx).
    """
    obs, fut, w, d = [], [], [], []
    for rt in dataset.trajectories:
        if rt.condition is None:
            raise DataError(f"trajectory {rt.ped_id} has no condition label")
        o, f = split_observed_future(rt, L)
        obs.append(o)
        fut.append(f)
        w.append(rt.condition.weather_idx)
        d.append(rt.condition.time_idx)
    return (
        np.stack(obs),
        np.stack(fut),
        dataset.labels.copy(),
        np.asarray(w, dtype=np.int64),
        np.asarray(d, dtype=np.int64),
    )


@dataclass
class TrainedClassifier:
    clf: DestinationClassifier
    best_epoch: int
    val_accuracy: list[float]
    train_loss: list[float]


def train_classifier(
    obs, w_idx, d_idx, labels,
    val_obs, val_w, val_d, val_labels,
    cfg: DatasetConfig,
    hyper: Hyper,
    beta: np.ndarray,
    init_seed: int,
    shuffle_seed: int,
    K: int,
    bypass: bool = False,
) -> TrainedClassifier:
    """Train one classifier, tracking validation accuracy each epoch, and
    return it restored to the best-validation epoch (earliest on ties)."""
    clf_cfg = ClassifierConfig(
        K=K, C_w=cfg.C_w, C_d=cfg.C_d,
        hidden=hyper.hidden, embed_dim=hyper.embed_dim, fuse_dim=hyper.fuse_dim,
        dropout=hyper.dropout, gate_input=hyper.gate_input,
        bypass_wt=bypass, init_seed=init_seed,
    )
    clf = DestinationClassifier(clf_cfg)
    loss_cfg = LossConfig(gamma=hyper.gamma, beta=beta, lambda_p=hyper.lambda_p)
    opt = AdamState()
    rng = np.random.default_rng(shuffle_seed)
    best_acc = -1.0
    best_epoch = -1
    best_params = None
    best_state = None
    val_accuracy: list[float] = []
    train_loss: list[float] = []
    for epoch in range(hyper.epochs):
        mean_loss = clf.train_epoch(
            obs, w_idx, d_idx, labels, loss_cfg, opt, hyper.batch_size, rng, lr=hyper.lr
        )
        train_loss.append(mean_loss)
        acc = float(np.mean(clf.predict(val_obs, val_w, val_d) == val_labels))
        val_accuracy.append(acc)
        if acc > best_acc:
            best_acc = acc
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in clf.params.items()}
            best_state = {k: v.copy() for k, v in clf.state.items()}
    clf.params = best_params
    clf.state = best_state
    return TrainedClassifier(clf, best_epoch, val_accuracy, train_loss)


@dataclass
class RotationResult:
    rotation: int
    best_epoch: int
    test_acc: float
    test_kappa: float
    confusion: list[list[int]]
    val_accuracy: list[float] = field(repr=False, default_factory=list)
    train_loss: list[float] = field(repr=False, default_factory=list)


@dataclass
class CvResult:
    rotations: list[RotationResult]

    @property
    def mean_test_acc(self) -> float:
        return float(np.mean([r.test_acc for r in self.rotations]))

    @property
    def mean_test_kappa(self) -> float:
        return float(np.mean([r.test_kappa for r in self.rotations]))


def run_cv(dataset: LabeledDataset, cfg: DatasetConfig, hyper: Hyper, seed: int) -> CvResult:
    """Full cross-validation of the destination classifier."""
    obs, _, labels, w_idx, d_idx = dataset_tensors(dataset, cfg.L)
    seq = np.random.SeedSequence(seed)
    fold_seed, *rot_seeds = seq.spawn(1 + 5)
    plan = stratified_kfold(labels, 5, int(fold_seed.generate_state(1)[0]))
    results = []
    for rot in plan.rotations:
        tr = np.concatenate([plan.folds[j] for j in rot["train"]])
        va = plan.folds[rot["val"]]
        te = plan.folds[rot["test"]]
        rs = rot_seeds[rot["test"]].generate_state(2)
        beta = class_weights(labels[tr], dataset.K)
        trained = train_classifier(
            obs[tr], w_idx[tr], d_idx[tr], labels[tr],
            obs[va], w_idx[va], d_idx[va], labels[va],
            cfg, hyper, beta, int(rs[0]), int(rs[1]), dataset.K,
        )
        pred = trained.clf.predict(obs[te], w_idx[te], d_idx[te])
        cm = ConfusionMatrix.from_labels(labels[te], pred, dataset.K)
        acc, kappa, _ = accuracy_and_kappa(cm)
        results.append(
            RotationResult(
                rotation=rot["test"], best_epoch=trained.best_epoch,
                test_acc=acc, test_kappa=kappa,
                confusion=[[int(v) for v in row] for row in cm.cm],
                val_accuracy=trained.val_accuracy, train_loss=trained.train_loss,
            )
        )
    return CvResult(results)


@dataclass
class PairedRunResult:
    """Per-sample paired outcomes of the two ablation settings.

    Setting A is the classifier without weather-time information (gate
    bypassed), setting B the full model. Every sample appears exactly once,
    as a member of the test fold of its rotation; DATP models are shared
    between settings within a rotation.
    """

    true_labels: np.ndarray
    pred_without: np.ndarray
    pred_with: np.ndarray
    ade_without: np.ndarray
    ade_with: np.ndarray
    fde_without: np.ndarray
    fde_with: np.ndarray
    K: int

    @property
    def influenced(self) -> np.ndarray:
        """Samples whose predicted destination changed between settings."""
        return self.pred_without != self.pred_with


def _subset(dataset: LabeledDataset, idx: np.ndarray) -> LabeledDataset:
    return LabeledDataset(
        [dataset.trajectories[i] for i in idx], dataset.labels[idx], dataset.K
    )


def run_ablation(
    dataset: LabeledDataset, cfg: DatasetConfig, hyper: Hyper, seed: int
) -> PairedRunResult:
    """Train both ablation settings with identical folds and seeds and record
    paired per-sample predictions and displacement errors."""
    obs, fut, labels, w_idx, d_idx = dataset_tensors(dataset, cfg.L)
    n = len(labels)
    seq = np.random.SeedSequence(seed)
    fold_seed, *rot_seeds = seq.spawn(1 + 5)
    plan = stratified_kfold(labels, 5, int(fold_seed.generate_state(1)[0]))

    pred_a = np.full(n, -1, dtype=np.int64)
    pred_b = np.full(n, -1, dtype=np.int64)
    ade_a = np.zeros(n)
    ade_b = np.zeros(n)
    fde_a = np.zeros(n)
    fde_b = np.zeros(n)

    for rot in plan.rotations:
        tr = np.concatenate([plan.folds[j] for j in rot["train"]])
        va = plan.folds[rot["val"]]
        te = plan.folds[rot["test"]]
        rs = rot_seeds[rot["test"]].generate_state(3)
        beta = class_weights(labels[tr], dataset.K)
        common = dict(cfg=cfg, hyper=hyper, beta=beta, init_seed=int(rs[0]),
                      shuffle_seed=int(rs[1]), K=dataset.K)
        trained_b = train_classifier(
            obs[tr], w_idx[tr], d_idx[tr], labels[tr],
            obs[va], w_idx[va], d_idx[va], labels[va], bypass=False, **common,
        )
        trained_a = train_classifier(
            obs[tr], w_idx[tr], d_idx[tr], labels[tr],
            obs[va], w_idx[va], d_idx[va], labels[va], bypass=True, **common,
        )
        route_models = train_cluster_models(
            _subset(dataset, tr),
            PredictorConfig(
                L=cfg.L, L_prime=cfg.L_prime, hidden=hyper.predictor_hidden,
                dropout=hyper.predictor_dropout, predict_offsets=hyper.predict_offsets,
            ),
            PredictorTrainSettings(
                epochs=hyper.predictor_epochs, batch_size=hyper.predictor_batch_size, lr=hyper.lr
            ),
            seed=int(rs[2]),
        )
        pa = trained_a.clf.predict(obs[te], w_idx[te], d_idx[te])
        pb = trained_b.clf.predict(obs[te], w_idx[te], d_idx[te])
        pred_a[te] = pa
        pred_b[te] = pb
        # rollouts are shared between settings: one rollout per (sample,
        # dispatched label), reused wherever either setting needs it, so
        # samples with equal predictions get bitwise-identical errors
        for k in range(dataset.K):
            need = np.flatnonzero((pa == k) | (pb == k))
            if need.size == 0:
                continue
            te_k = te[need]
            roll = route_models.models[k].rollout(obs[te_k])
            s_ade = per_sample_ade(fut[te_k], roll)
            s_fde = per_sample_fde(fut[te_k], roll)
            in_a = pa[need] == k
            in_b = pb[need] == k
            ade_a[te_k[in_a]] = s_ade[in_a]
            fde_a[te_k[in_a]] = s_fde[in_a]
            ade_b[te_k[in_b]] = s_ade[in_b]
            fde_b[te_k[in_b]] = s_fde[in_b]

    return PairedRunResult(labels, pred_a, pred_b, ade_a, ade_b, fde_a, fde_b, dataset.K)


def significance_report(paired: PairedRunResult) -> dict:
    """McNemar on paired correctness plus one-sided rank tests on the
    displacement errors of the influenced subset (alternative: errors are
    smaller with weather-time information)."""
    correct_a = paired.pred_without == paired.true_labels
    correct_b = paired.pred_with == paired.true_labels
    influenced = paired.influenced
    n_infl = int(influenced.sum())
    report = {
        "n_samples": int(len(paired.true_labels)),
        "acc_without_wt": float(correct_a.mean()),
        "acc_with_wt": float(correct_b.mean()),
        "mcnemar_p": mcnemar_test(correct_a, correct_b),
        "n_influenced": n_infl,
        "influenced": {},
        "not_influenced": {},
    }
    report["mcnemar_significant"] = report["mcnemar_p"] < ALPHA
    if n_infl > 0:
        p_ade = mann_whitney_u_one_sided(
            paired.ade_with[influenced], paired.ade_without[influenced]
        )
        p_fde = mann_whitney_u_one_sided(
            paired.fde_with[influenced], paired.fde_without[influenced]
        )
        report["influenced"] = {
            "mean_ade_without_wt": float(paired.ade_without[influenced].mean()),
            "mean_ade_with_wt": float(paired.ade_with[influenced].mean()),
            "mean_fde_without_wt": float(paired.fde_without[influenced].mean()),
            "mean_fde_with_wt": float(paired.fde_with[influenced].mean()),
            "mann_whitney_ade_p": p_ade,
            "mann_whitney_fde_p": p_fde,
            "ade_significant": p_ade < ALPHA,
            "fde_significant": p_fde < ALPHA,
        }
    else:
        report["influenced"] = {"skipped": "no influenced samples"}
    same = ~influenced
    if np.any(same):
        report["not_influenced"] = {
            "n": int(same.sum()),
            "mean_ade": float(paired.ade_with[same].mean()),
            "mean_fde": float(paired.fde_with[same].mean()),
            "ade_bitwise_identical": bool(
                np.array_equal(paired.ade_with[same], paired.ade_without[same])
            ),
            "fde_bitwise_identical": bool(
                np.array_equal(paired.fde_with[same], paired.fde_without[same])
            ),
        }
    else:
        report["not_influenced"] = {"n": 0}
    return report
