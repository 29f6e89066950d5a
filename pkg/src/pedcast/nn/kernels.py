"""Dense, batch-norm, activation, embedding and dropout kernels.

Forward functions return the output plus whatever the matching backward needs.
Backward functions take the upstream gradient and return input/parameter
gradients. Everything is float64.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def uniform_fanin(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """Uniform init scaled by fan-in: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def dense(u: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Batched fully connected layer: rows of ``u`` times ``W.T``.

    ``u`` is (B, D_in), ``W`` is (D_out, D_in).
    """
    if u.shape[-1] != W.shape[1]:
        raise DataError(f"dense shape mismatch: input {u.shape} vs weights {W.shape}")
    return u @ W.T


def dense_backward(dout: np.ndarray, u: np.ndarray, W: np.ndarray):
    """Gradients of a dense layer w.r.t. input and weights."""
    return dout @ W, dout.T @ u


def batch_norm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: str,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
):
    """Per-feature batch normalization with learnable scale and shift.

    Train mode normalizes by batch statistics and updates the running stats
    in place (running variance uses the unbiased estimate); eval mode uses
    the running statistics. Returns (out, cache).
    """
    if mode == "train":
        B = x.shape[0]
        if B < 2:
            raise DataError("batch norm in train mode needs batch size >= 2")
        mu = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x - mu) * inv_std
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * B / max(B - 1, 1)
    elif mode == "eval":
        inv_std = 1.0 / np.sqrt(running_var + eps)
        xhat = (x - running_mean) * inv_std
    else:
        raise DataError(f"unknown batch-norm mode {mode!r}")
    out = gamma * xhat + beta
    return out, (xhat, inv_std, gamma, mode)


def batch_norm_backward(dout: np.ndarray, cache):
    """Gradients w.r.t. input, gamma and beta."""
    xhat, inv_std, gamma, mode = cache
    dgamma = (dout * xhat).sum(axis=0)
    dbeta = dout.sum(axis=0)
    dxhat = dout * gamma
    if mode == "train":
        dx = inv_std * (
            dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0)
        )
    else:
        dx = dxhat * inv_std
    return dx, dgamma, dbeta


def softmax(u: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    shifted = u - u.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward_from_probs(probs: np.ndarray, dprobs: np.ndarray) -> np.ndarray:
    """Pull a gradient on softmax outputs back to the logits."""
    return probs * (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True))


def tanh_backward(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Backward through tanh given its output."""
    return (1.0 - y * y) * dy


def sigmoid(u: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def sigmoid_backward(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Backward through the logistic function given its output."""
    return y * (1.0 - y) * dy


def embedding_lookup(E: np.ndarray, w_idx: np.ndarray, d_idx: np.ndarray, C_w: int) -> np.ndarray:
    """Condition embedding: weather row plus time-of-day row of ``E``.

    ``E`` is (C_w + C_d, D); time rows start at offset C_w. Equivalent to a
    linear map applied to the concatenated one-hot pair.
    """
    w_idx = np.asarray(w_idx, dtype=np.int64)
    d_idx = np.asarray(d_idx, dtype=np.int64)
    if np.any(w_idx < 0) or np.any(w_idx >= C_w):
        raise DataError("weather index out of range")
    if np.any(d_idx < 0) or np.any(C_w + d_idx >= E.shape[0]):
        raise DataError("time-of-day index out of range")
    return E[w_idx] + E[C_w + d_idx]


def embedding_from_onehot(E: np.ndarray, f_w: np.ndarray, f_d: np.ndarray) -> np.ndarray:
    """Embedding from one-hot pairs; each sub-vector must have exactly one 1."""
    f_w = np.atleast_2d(np.asarray(f_w, dtype=np.float64))
    f_d = np.atleast_2d(np.asarray(f_d, dtype=np.float64))
    for name, f in (("weather", f_w), ("time-of-day", f_d)):
        if not (np.all((f == 0.0) | (f == 1.0)) and np.all(f.sum(axis=1) == 1.0)):
            raise DataError(f"malformed {name} one-hot encoding")
    return embedding_lookup(E, f_w.argmax(axis=1), f_d.argmax(axis=1), f_w.shape[1])


def embedding_backward(
    dout: np.ndarray, E_shape: tuple[int, int], w_idx: np.ndarray, d_idx: np.ndarray, C_w: int
) -> np.ndarray:
    """Scatter-add the output gradient into the selected embedding rows."""
    dE = np.zeros(E_shape)
    np.add.at(dE, np.asarray(w_idx, dtype=np.int64), dout)
    np.add.at(dE, C_w + np.asarray(d_idx, dtype=np.int64), dout)
    return dE


def dropout_forward(x: np.ndarray, p: float, mode: str, rng: np.random.Generator | None):
    """Inverted dropout; identity in eval mode or when p == 0."""
    if mode != "train" or p <= 0.0:
        return x, None
    if rng is None:
        raise DataError("train-mode dropout needs a seeded generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask) -> np.ndarray:
    return dy if mask is None else dy * mask
