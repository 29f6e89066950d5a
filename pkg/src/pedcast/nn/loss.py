"""Focal classification loss and squared-error regression loss."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .kernels import softmax_backward_from_probs

#: Probabilities are clamped here before any logarithm.
PROB_CLAMP = 1e-12


def focal_loss(
    probs: np.ndarray, labels: np.ndarray, gamma: float, beta: np.ndarray
) -> tuple[float, np.ndarray]:
    """Class-weighted focal loss, averaged over N*K.

    ``probs`` is (N, K) rows summing to 1, ``beta`` a per-class weight in
    [0, 1]. With gamma=0 and beta all ones this reduces to cross-entropy
    divided by N*K. Returns (loss, d_loss/d_probs).
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    N, K = probs.shape
    if labels.shape != (N,):
        raise DataError("labels must be (N,)")
    if np.any(labels < 0) or np.any(labels >= K):
        raise DataError(f"label out of range [0, {K})")
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (K,):
        raise DataError("beta must be a K-vector")
    if gamma < 0:
        raise DataError("gamma must be >= 0")

    p = np.clip(probs[np.arange(N), labels], PROB_CLAMP, 1.0)
    one_minus = 1.0 - p
    w = beta[labels]
    logp = np.log(p)
    loss = float(-(w * one_minus ** gamma * logp).sum() / (N * K)) + 0.0

    # d/dp [-(1-p)^g log p] = g (1-p)^(g-1) log p - (1-p)^g / p
    if gamma == 0.0:
        focus = np.zeros_like(p)
    else:
        focus = np.where(one_minus > 0, gamma * one_minus ** (gamma - 1.0) * logp, 0.0)
    dp_true = w * (focus - one_minus ** gamma / p) / (N * K)
    dprobs = np.zeros_like(probs)
    dprobs[np.arange(N), labels] = dp_true
    return loss, dprobs


def focal_loss_grad_logits(
    probs: np.ndarray, labels: np.ndarray, gamma: float, beta: np.ndarray
) -> tuple[float, np.ndarray]:
    """Focal loss plus its gradient pulled back through the softmax that
    produced ``probs``."""
    loss, dprobs = focal_loss(probs, labels, gamma, beta)
    return loss, softmax_backward_from_probs(probs, dprobs)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements; returns (loss, d_loss/d_pred)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DataError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float((diff * diff).mean()), 2.0 * diff / diff.size
