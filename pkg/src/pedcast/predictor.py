"""Per-destination trajectory predictors.

One two-layer encoder-decoder LSTM per destination cluster, dispatched by the
(predicted) destination label. The decoder is teacher-forced during training
and feeds back its own predictions at inference. Coordinates are normalized
to zero mean / unit variance over the training set and de-normalized on
output.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .clustering import LabeledDataset
from .data import split_observed_future
from .errors import ConfigError, DataError
from .nn import (
    adam_step,
    dense,
    dense_backward,
    init_lstm_params,
    load_checkpoint,
    lstm_backward,
    lstm_forward,
    mse_loss,
    save_checkpoint,
    uniform_fanin,
)
from .nn.optim import AdamState


@dataclass
class PredictorConfig:
    L: int
    L_prime: int
    hidden: int = 128
    n_layers: int = 2
    dropout: float = 0.5
    predict_offsets: bool = False  # decoder emits deltas from the previous point

    def __post_init__(self):
        if self.L < 1 or self.L_prime < 1:
            raise ConfigError("L and L' must be >= 1")


@dataclass
class PredictorTrainSettings:
    epochs: int = 200
    batch_size: int = 128
    lr: float = 1e-3


class TrajectoryPredictor:
    """Encoder-decoder regressor for one destination cluster."""

    def __init__(
        self,
        config: PredictorConfig,
        norm_mean: np.ndarray,
        norm_std: np.ndarray,
        init_seed: int = 0,
    ):
        self.config = config
        self.norm_mean = np.asarray(norm_mean, dtype=np.float64)
        self.norm_std = np.asarray(norm_std, dtype=np.float64)
        rng = np.random.default_rng(init_seed)
        params = init_lstm_params(rng, 2, config.hidden, config.n_layers, "enc")
        params.update(init_lstm_params(rng, 2, config.hidden, config.n_layers, "dec"))
        params["out.W"] = uniform_fanin(rng, (2, config.hidden), config.hidden)
        params["out.b"] = np.zeros(2)
        self.params = params

    def _norm(self, pts: np.ndarray) -> np.ndarray:
        return (pts - self.norm_mean) / self.norm_std

    def _denorm(self, pts: np.ndarray) -> np.ndarray:
        return pts * self.norm_std + self.norm_mean

    def _teacher_forward(self, obs_n, fut_n, mode, rng):
        c = self.config
        _, enc_finals, enc_cache = lstm_forward(
            self.params, "enc", c.n_layers, obs_n,
            dropout=c.dropout, mode=mode, rng=rng,
        )
        dec_in = np.concatenate([obs_n[:, -1:, :], fut_n[:, :-1, :]], axis=1)
        h_seq, _, dec_cache = lstm_forward(
            self.params, "dec", c.n_layers, dec_in,
            h0=[h for h, _ in enc_finals], c0=[cc for _, cc in enc_finals],
            dropout=c.dropout, mode=mode, rng=rng,
        )
        B, T, H = h_seq.shape
        flat = h_seq.reshape(B * T, H)
        out = (dense(flat, self.params["out.W"]) + self.params["out.b"]).reshape(B, T, 2)
        pred_n = dec_in + out if c.predict_offsets else out
        return pred_n, (enc_cache, dec_cache, flat, h_seq.shape)

    def loss_and_grads(
        self,
        observed: np.ndarray,
        future: np.ndarray,
        mode: str = "train",
        rng: np.random.Generator | None = None,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Teacher-forced squared-error loss in normalized coordinates, with
        gradients for encoder, decoder and output head."""
        obs_n = self._norm(np.asarray(observed, dtype=np.float64))
        fut_n = self._norm(np.asarray(future, dtype=np.float64))
        pred_n, (enc_cache, dec_cache, flat, shape) = self._teacher_forward(
            obs_n, fut_n, mode, rng
        )
        loss, d_pred = mse_loss(pred_n, fut_n)
        B, T, H = shape
        d_flat = d_pred.reshape(B * T, 2)
        d_hflat, dW = dense_backward(d_flat, flat, self.params["out.W"])
        grads = {"out.W": dW, "out.b": d_flat.sum(axis=0)}
        # teacher inputs are ground truth, so their gradient is discarded
        _, d_h0, d_c0, dec_grads = lstm_backward(
            self.params, dec_cache, d_hflat.reshape(B, T, H)
        )
        grads.update(dec_grads)
        _, _, _, enc_grads = lstm_backward(
            self.params, enc_cache, None, d_finals=list(zip(d_h0, d_c0))
        )
        grads.update(enc_grads)
        return loss, grads

    def rollout(self, observed: np.ndarray) -> np.ndarray:
        """Autoregressive prediction of L' future points, world coordinates.

        ``observed`` is (B, L, 2) or (L, 2); output matches the batch shape.
        """
        obs = np.asarray(observed, dtype=np.float64)
        squeeze = obs.ndim == 2
        if squeeze:
            obs = obs[None, :, :]
        c = self.config
        obs_n = self._norm(obs)
        _, finals, _ = lstm_forward(self.params, "enc", c.n_layers, obs_n)
        h = [hh for hh, _ in finals]
        cc = [ccc for _, ccc in finals]
        x = obs_n[:, -1, :]
        steps = []
        for _ in range(c.L_prime):
            h_seq, finals, _ = lstm_forward(
                self.params, "dec", c.n_layers, x[:, None, :], h0=h, c0=cc
            )
            h = [hh for hh, _ in finals]
            cc = [ccc for _, ccc in finals]
            out = dense(h_seq[:, 0, :], self.params["out.W"]) + self.params["out.b"]
            x = x + out if c.predict_offsets else out
            steps.append(x)
        pred = self._denorm(np.stack(steps, axis=1))
        return pred[0] if squeeze else pred

    def fit(
        self,
        observed: np.ndarray,
        future: np.ndarray,
        settings: PredictorTrainSettings,
        seed: int,
    ) -> list[float]:
        """Mini-batch Adam training; returns the per-epoch mean loss."""
        n = len(observed)
        if n == 0:
            raise DataError("cannot fit a predictor on zero trajectories")
        rng = np.random.default_rng(seed)
        opt = AdamState()
        history = []
        for _ in range(settings.epochs):
            order = rng.permutation(n)
            losses = []
            for i in range(0, n, settings.batch_size):
                batch = order[i:i + settings.batch_size]
                loss, grads = self.loss_and_grads(
                    observed[batch], future[batch], mode="train", rng=rng
                )
                adam_step(self.params, grads, opt, lr=settings.lr)
                losses.append(loss)
            history.append(float(np.mean(losses)))
        return history


@dataclass
class PredictorEnsemble:
    """One trained predictor per surviving destination cluster."""

    models: dict[int, TrajectoryPredictor]
    config: PredictorConfig
    norm_mean: np.ndarray
    norm_std: np.ndarray

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {
            "version": 1,
            "config": asdict(self.config),
            "norm_mean": [float(v) for v in self.norm_mean],
            "norm_std": [float(v) for v in self.norm_std],
            "clusters": sorted(self.models),
        }
        (directory / "predictor_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        for k, model in self.models.items():
            save_checkpoint(directory / f"predictor_cluster{k}.ckpt", model.params)

    @classmethod
    def load(cls, directory: str | Path) -> "PredictorEnsemble":
        directory = Path(directory)
        meta = json.loads((directory / "predictor_meta.json").read_text())
        config = PredictorConfig(**meta["config"])
        mean = np.asarray(meta["norm_mean"])
        std = np.asarray(meta["norm_std"])
        models = {}
        for k in meta["clusters"]:
            model = TrajectoryPredictor(config, mean, std)
            model.params = load_checkpoint(directory / f"predictor_cluster{k}.ckpt")
            models[int(k)] = model
        return cls(models, config, mean, std)


def train_cluster_models(
    dataset: LabeledDataset,
    config: PredictorConfig,
    settings: PredictorTrainSettings,
    seed: int,
) -> PredictorEnsemble:
    """Train one predictor per cluster on that cluster's trajectories."""
    if len(dataset) == 0:
        raise DataError("empty dataset")
    obs = np.stack([split_observed_future(rt, config.L)[0] for rt in dataset.trajectories])
    fut = np.stack([split_observed_future(rt, config.L)[1] for rt in dataset.trajectories])
    pts = np.concatenate([obs.reshape(-1, 2), fut.reshape(-1, 2)])
    mean = pts.mean(axis=0)
    std = np.maximum(pts.std(axis=0), 1e-8)
    seeds = np.random.SeedSequence(seed).spawn(dataset.K)
    models: dict[int, TrajectoryPredictor] = {}
    for k in range(dataset.K):
        mask = dataset.labels == k
        if not np.any(mask):
            raise DataError(
                f"cluster {k} has no training trajectories; merge undersampled "
                "clusters before training"
            )
        model = TrajectoryPredictor(
            config, mean, std, init_seed=int(seeds[k].generate_state(1)[0])
        )
        model.fit(obs[mask], fut[mask], settings, seed=int(seeds[k].generate_state(2)[1]))
        models[k] = model
    return PredictorEnsemble(models, config, mean, std)


def predict_trajectory(
    observed: np.ndarray, omega_hat: int, ensemble: PredictorEnsemble
) -> np.ndarray:
    """Dispatch to the predictor of the chosen destination cluster."""
    if omega_hat not in ensemble.models:
        raise DataError(f"no trajectory model for cluster {omega_hat}")
    return ensemble.models[omega_hat].rollout(observed)
