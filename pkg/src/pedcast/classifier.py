"""Intended-destination classifier.

Pipeline: two-layer LSTM over the observed half-trajectory -> preliminary
FC+BN+softmax class probabilities -> gated fusion with a learned weather/time
embedding -> final FC+BN+softmax. Both classifier heads are trained jointly
with a focal loss (deep supervision), so the preliminary branch shapes the
encoder as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError
from .nn import (
    adam_step,
    batch_norm_backward,
    batch_norm_forward,
    dense,
    dense_backward,
    embedding_backward,
    embedding_lookup,
    focal_loss,
    focal_loss_grad_logits,
    init_lstm_params,
    lstm_backward,
    lstm_forward,
    sigmoid,
    sigmoid_backward,
    softmax,
    softmax_backward_from_probs,
    tanh_backward,
    uniform_fanin,
)
from .nn.optim import AdamState

GATE_ON_BRANCHES = "branches"  # gate sees [h_v; h_e], input width 2M
GATE_ON_RAW = "raw"  # gate sees [p_pre; e_wt], input width K + embed_dim


@dataclass
class LossConfig:
    """Focal-loss settings: focusing factor, per-class weights, and the
    preliminary/final mixing ratio."""

    gamma: float = 2.0
    beta: np.ndarray = None
    lambda_p: float = 0.5

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if not 0.0 <= self.lambda_p <= 1.0:
            raise ConfigError("lambda_p must be in [0, 1]")
        if self.beta is not None:
            self.beta = np.asarray(self.beta, dtype=np.float64)
            if np.any(self.beta < 0) or np.any(self.beta > 1):
                raise ConfigError("beta weights must lie in [0, 1]")

    def beta_for(self, K: int) -> np.ndarray:
        return np.ones(K) if self.beta is None else self.beta


@dataclass
class ClassifierConfig:
    K: int
    C_w: int = 2
    C_d: int = 2
    hidden: int = 128
    embed_dim: int = 128
    fuse_dim: int = 128
    n_layers: int = 2
    dropout: float = 0.5
    gate_input: str = GATE_ON_BRANCHES
    bypass_wt: bool = False
    init_seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError("need at least 2 destination classes")
        if self.gate_input not in (GATE_ON_BRANCHES, GATE_ON_RAW):
            raise ConfigError(f"unknown gate_input {self.gate_input!r}")

    @property
    def gate_in_dim(self) -> int:
        if self.gate_input == GATE_ON_BRANCHES:
            return 2 * self.fuse_dim
        return self.K + self.embed_dim


def gmu_fuse(
    p_pre: np.ndarray,
    e_wt: np.ndarray,
    Wv: np.ndarray,
    We: np.ndarray,
    Wz: np.ndarray,
    gate_input: str = GATE_ON_BRANCHES,
    bypass: bool = False,
):
    """Gated fusion of class probabilities with the condition embedding.

    Two tanh branches encode the modalities; a sigmoid gate convexly mixes
    them: f_fuse = z * h_v + (1 - z) * h_e. With ``bypass`` the gate is
    forced to all-ones, so the embedding branch is cut out entirely.
    Returns (f_fuse, z, h_v, h_e, gate_in).
    """
    h_v = np.tanh(dense(p_pre, Wv))
    h_e = np.tanh(dense(e_wt, We))
    if gate_input == GATE_ON_BRANCHES:
        gate_in = np.concatenate([h_v, h_e], axis=-1)
    elif gate_input == GATE_ON_RAW:
        gate_in = np.concatenate([p_pre, e_wt], axis=-1)
    else:
        raise ConfigError(f"unknown gate_input {gate_input!r}")
    if bypass:
        z = np.ones_like(h_v)
        f_fuse = h_v
    else:
        z = sigmoid(dense(gate_in, Wz))
        f_fuse = z * h_v + (1.0 - z) * h_e
    return f_fuse, z, h_v, h_e, gate_in


@dataclass
class ForwardCache:
    """Everything the forward pass produced, for inspection and backward."""

    f_base: np.ndarray  # (B, H) encoder output
    f_c: np.ndarray  # (B, K) preliminary pre-softmax
    p_pre: np.ndarray  # (B, K)
    e_wt: np.ndarray  # (B, embed_dim)
    h_v: np.ndarray  # (B, M)
    h_e: np.ndarray  # (B, M)
    z: np.ndarray  # (B, M) gate; all-ones when the WT path is bypassed
    f_fuse: np.ndarray  # (B, M)
    p_final: np.ndarray  # (B, K)
    _enc_cache: object = field(repr=False, default=None)
    _pre_bn_cache: object = field(repr=False, default=None)
    _final_bn_cache: object = field(repr=False, default=None)
    _gate_in: np.ndarray = field(repr=False, default=None)
    _w_idx: np.ndarray = field(repr=False, default=None)
    _d_idx: np.ndarray = field(repr=False, default=None)


class DestinationClassifier:
    """Gated-fusion destination classifier over observed half-trajectories."""

    def __init__(self, config: ClassifierConfig):
        self.config = config
        rng = np.random.default_rng(config.init_seed)
        c = config
        params = init_lstm_params(rng, 2, c.hidden, c.n_layers, "enc")
        params["pre_fc.W"] = uniform_fanin(rng, (c.K, c.hidden), c.hidden)
        params["pre_bn.gamma"] = np.ones(c.K)
        params["pre_bn.beta"] = np.zeros(c.K)
        params["embed.E"] = uniform_fanin(rng, (c.C_w + c.C_d, c.embed_dim), c.C_w + c.C_d)
        params["gmu.Wv"] = uniform_fanin(rng, (c.fuse_dim, c.K), c.K)
        params["gmu.We"] = uniform_fanin(rng, (c.fuse_dim, c.embed_dim), c.embed_dim)
        params["gmu.Wz"] = uniform_fanin(rng, (c.fuse_dim, c.gate_in_dim), c.gate_in_dim)
        params["final_fc.W"] = uniform_fanin(rng, (c.K, c.fuse_dim), c.fuse_dim)
        params["final_bn.gamma"] = np.ones(c.K)
        params["final_bn.beta"] = np.zeros(c.K)
        self.params = params
        self.state = {
            "pre_bn.mean": np.zeros(c.K),
            "pre_bn.var": np.ones(c.K),
            "final_bn.mean": np.zeros(c.K),
            "final_bn.var": np.ones(c.K),
        }

    def forward(
        self,
        observed: np.ndarray,
        w_idx: np.ndarray,
        d_idx: np.ndarray,
        mode: str = "eval",
        rng: np.random.Generator | None = None,
    ) -> ForwardCache:
        """Run the full pipeline on a batch of observed trajectories.

        ``observed`` is (B, L, 2); ``w_idx``/``d_idx`` are per-sample
        condition indices. Deterministic in eval mode.
        """
        c = self.config
        observed = np.asarray(observed, dtype=np.float64)
        if observed.ndim != 3 or observed.shape[2] != 2:
            raise DataError("observed batch must be (B, L, 2)")
        h_seq, finals, enc_cache = lstm_forward(
            self.params, "enc", c.n_layers, observed,
            dropout=c.dropout, mode=mode, rng=rng,
        )
        f_base = finals[-1][0]
        pre_lin = dense(f_base, self.params["pre_fc.W"])
        f_c, pre_bn_cache = batch_norm_forward(
            pre_lin, self.params["pre_bn.gamma"], self.params["pre_bn.beta"],
            self.state["pre_bn.mean"], self.state["pre_bn.var"], mode,
        )
        p_pre = softmax(f_c)

        e_wt = embedding_lookup(self.params["embed.E"], w_idx, d_idx, c.C_w)
        f_fuse, z, h_v, h_e, gate_in = gmu_fuse(
            p_pre, e_wt, self.params["gmu.Wv"], self.params["gmu.We"],
            self.params["gmu.Wz"], c.gate_input, c.bypass_wt,
        )

        final_lin = dense(f_fuse, self.params["final_fc.W"])
        f_f, final_bn_cache = batch_norm_forward(
            final_lin, self.params["final_bn.gamma"], self.params["final_bn.beta"],
            self.state["final_bn.mean"], self.state["final_bn.var"], mode,
        )
        p_final = softmax(f_f)
        return ForwardCache(
            f_base=f_base, f_c=f_c, p_pre=p_pre, e_wt=e_wt, h_v=h_v, h_e=h_e,
            z=z, f_fuse=f_fuse, p_final=p_final,
            _enc_cache=enc_cache, _pre_bn_cache=pre_bn_cache,
            _final_bn_cache=final_bn_cache,
            _gate_in=gate_in, _w_idx=np.asarray(w_idx), _d_idx=np.asarray(d_idx),
        )

    def joint_loss(self, cache: ForwardCache, labels: np.ndarray, cfg: LossConfig) -> float:
        """(1 - lambda_p) * focal(final) + lambda_p * focal(preliminary)."""
        beta = cfg.beta_for(self.config.K)
        l_final, _ = focal_loss(cache.p_final, labels, cfg.gamma, beta)
        l_pre, _ = focal_loss(cache.p_pre, labels, cfg.gamma, beta)
        return (1.0 - cfg.lambda_p) * l_final + cfg.lambda_p * l_pre

    def loss_and_grads(
        self, cache: ForwardCache, labels: np.ndarray, cfg: LossConfig
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Joint focal loss and gradients for every parameter.

        Both loss branches propagate into the encoder: the preliminary head
        directly, the final head through the fusion block.
        """
        c = self.config
        labels = np.asarray(labels, dtype=np.int64)
        beta = cfg.beta_for(c.K)
        grads: dict[str, np.ndarray] = {}

        l_final, d_final_logits = focal_loss_grad_logits(cache.p_final, labels, cfg.gamma, beta)
        l_pre, d_pre_logits_direct = focal_loss_grad_logits(cache.p_pre, labels, cfg.gamma, beta)
        loss = (1.0 - cfg.lambda_p) * l_final + cfg.lambda_p * l_pre
        d_final_logits = (1.0 - cfg.lambda_p) * d_final_logits
        d_pre_logits_direct = cfg.lambda_p * d_pre_logits_direct

        # final head
        d_final_lin, grads["final_bn.gamma"], grads["final_bn.beta"] = batch_norm_backward(
            d_final_logits, cache._final_bn_cache
        )
        d_f_fuse, grads["final_fc.W"] = dense_backward(
            d_final_lin, cache.f_fuse, self.params["final_fc.W"]
        )

        # fusion block
        if c.bypass_wt:
            d_h_v = d_f_fuse
            d_h_e = np.zeros_like(cache.h_e)
            d_gate_in = np.zeros_like(cache._gate_in)
            grads["gmu.Wz"] = np.zeros_like(self.params["gmu.Wz"])
        else:
            d_z = d_f_fuse * (cache.h_v - cache.h_e)
            d_h_v = d_f_fuse * cache.z
            d_h_e = d_f_fuse * (1.0 - cache.z)
            d_gate_lin = sigmoid_backward(cache.z, d_z)
            d_gate_in, grads["gmu.Wz"] = dense_backward(
                d_gate_lin, cache._gate_in, self.params["gmu.Wz"]
            )
        d_p_pre = np.zeros_like(cache.p_pre)
        d_e_wt = np.zeros_like(cache.e_wt)
        if c.gate_input == GATE_ON_BRANCHES:
            d_h_v = d_h_v + d_gate_in[:, : c.fuse_dim]
            d_h_e = d_h_e + d_gate_in[:, c.fuse_dim:]
        else:
            d_p_pre = d_p_pre + d_gate_in[:, : c.K]
            d_e_wt = d_e_wt + d_gate_in[:, c.K:]

        d_v_lin = tanh_backward(cache.h_v, d_h_v)
        d_p_pre_v, grads["gmu.Wv"] = dense_backward(d_v_lin, cache.p_pre, self.params["gmu.Wv"])
        d_p_pre = d_p_pre + d_p_pre_v
        d_e_lin = tanh_backward(cache.h_e, d_h_e)
        d_e_wt_e, grads["gmu.We"] = dense_backward(d_e_lin, cache.e_wt, self.params["gmu.We"])
        d_e_wt = d_e_wt + d_e_wt_e

        grads["embed.E"] = embedding_backward(
            d_e_wt, self.params["embed.E"].shape, cache._w_idx, cache._d_idx, c.C_w
        )

        # preliminary head: GMU gradient through its softmax plus the direct
        # deep-supervision branch (already in logit space)
        d_pre_logits = softmax_backward_from_probs(cache.p_pre, d_p_pre) + d_pre_logits_direct
        d_pre_lin, grads["pre_bn.gamma"], grads["pre_bn.beta"] = batch_norm_backward(
            d_pre_logits, cache._pre_bn_cache
        )
        d_f_base, grads["pre_fc.W"] = dense_backward(
            d_pre_lin, cache.f_base, self.params["pre_fc.W"]
        )

        # encoder: gradient lands on the last step of the top layer
        enc_cache = cache._enc_cache
        B, T, _ = enc_cache.inputs[0].shape
        d_h_top = np.zeros((B, T, c.hidden))
        d_h_top[:, -1, :] = d_f_base
        _, _, _, enc_grads = lstm_backward(self.params, enc_cache, d_h_top)
        grads.update(enc_grads)
        return loss, grads

    def predict(self, observed: np.ndarray, w_idx: np.ndarray, d_idx: np.ndarray) -> np.ndarray:
        """Final predicted destination per sample; ties break to the lowest
        class index."""
        cache = self.forward(observed, w_idx, d_idx, mode="eval")
        return np.argmax(cache.p_final, axis=1)

    def train_epoch(
        self,
        observed: np.ndarray,
        w_idx: np.ndarray,
        d_idx: np.ndarray,
        labels: np.ndarray,
        cfg: LossConfig,
        opt_state: AdamState,
        batch_size: int,
        rng: np.random.Generator,
        lr: float = 1e-3,
    ) -> float:
        """One pass of shuffled mini-batch training; returns the mean loss."""
        n = len(labels)
        if n == 0:
            raise DataError("cannot train on an empty dataset")
        order = rng.permutation(n)
        losses = []
        for batch in _chunks(order, batch_size):
            cache = self.forward(
                observed[batch], w_idx[batch], d_idx[batch], mode="train", rng=rng
            )
            loss, grads = self.loss_and_grads(cache, labels[batch], cfg)
            adam_step(self.params, grads, opt_state, lr=lr)
            losses.append(loss)
        return float(np.mean(losses))

    def clone(self) -> "DestinationClassifier":
        dup = DestinationClassifier(self.config)
        dup.params = {k: v.copy() for k, v in self.params.items()}
        dup.state = {k: v.copy() for k, v in self.state.items()}
        return dup


def bypass_wt(clf: DestinationClassifier) -> DestinationClassifier:
    """Ablation variant with the weather/time path switched off: the gate is
    forced to all-ones so the fused representation is the trajectory branch
    alone, and the condition input has no effect."""
    dup = DestinationClassifier(replace(clf.config, bypass_wt=True))
    dup.params = {k: v.copy() for k, v in clf.params.items()}
    dup.state = {k: v.copy() for k, v in clf.state.items()}
    return dup


def _chunks(order: np.ndarray, size: int):
    """Consecutive index chunks; a trailing singleton is folded into the
    previous chunk so train-mode batch norm always sees >= 2 samples."""
    size = max(2, int(size))
    chunks = [order[i:i + size] for i in range(0, len(order), size)]
    if len(chunks) > 1 and len(chunks[-1]) == 1:
        chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
        chunks.pop()
    return chunks
