"""Stacked LSTM forward and backprop-through-time.

Standard forget/input/output-gated cell with tanh candidate. Gate
pre-activations are packed as [input, forget, candidate, output] blocks of
size H in one (B, 4H) matrix per step. Dropout is applied between stacked
layers only, in train mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .kernels import dropout_backward, dropout_forward, sigmoid, uniform_fanin


def init_lstm_params(
    rng: np.random.Generator, input_dim: int, hidden: int, n_layers: int, prefix: str
) -> dict[str, np.ndarray]:
    """Fan-in-scaled uniform init for a stacked LSTM's weights."""
    params: dict[str, np.ndarray] = {}
    d = input_dim
    for layer in range(n_layers):
        params[f"{prefix}.l{layer}.Wx"] = uniform_fanin(rng, (4 * hidden, d), d)
        params[f"{prefix}.l{layer}.Wh"] = uniform_fanin(rng, (4 * hidden, hidden), hidden)
        params[f"{prefix}.l{layer}.b"] = np.zeros(4 * hidden)
        d = hidden
    return params


@dataclass
class LstmCache:
    prefix: str
    n_layers: int
    hidden: int
    inputs: list[np.ndarray]  # per layer: (B, T, D_l) input sequence
    gates: list[np.ndarray]  # per layer: (B, T, 4H) post-activation gates
    cells: list[np.ndarray]  # per layer: (B, T, H) cell states
    cell_prev0: list[np.ndarray]  # per layer: (B, H) initial cell state
    hidden_prev0: list[np.ndarray]  # per layer: (B, H) initial hidden state
    tanh_c: list[np.ndarray]  # per layer: (B, T, H)
    drop_masks: list  # per gap between layers


def lstm_forward(
    params: dict[str, np.ndarray],
    prefix: str,
    n_layers: int,
    x: np.ndarray,
    h0: list[np.ndarray] | None = None,
    c0: list[np.ndarray] | None = None,
    dropout: float = 0.0,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
):
    """Run a stacked LSTM over ``x`` of shape (B, T, D).

    Returns (h_top, finals, cache) where h_top is the top layer's full hidden
    sequence (B, T, H) and finals is a list of (h_T, c_T) per layer.
    """
    if x.ndim != 3:
        raise DataError("LSTM input must be (B, T, D)")
    B, T, _ = x.shape
    hidden = params[f"{prefix}.l0.Wh"].shape[1]
    seq = x
    cache = LstmCache(prefix, n_layers, hidden, [], [], [], [], [], [], [])
    finals: list[tuple[np.ndarray, np.ndarray]] = []
    for layer in range(n_layers):
        Wx = params[f"{prefix}.l{layer}.Wx"]
        Wh = params[f"{prefix}.l{layer}.Wh"]
        b = params[f"{prefix}.l{layer}.b"]
        if seq.shape[2] != Wx.shape[1]:
            raise DataError(
                f"LSTM layer {layer}: input dim {seq.shape[2]} != weight dim {Wx.shape[1]}"
            )
        h = h0[layer] if h0 is not None else np.zeros((B, hidden))
        c = c0[layer] if c0 is not None else np.zeros((B, hidden))
        cache.hidden_prev0.append(h)
        cache.cell_prev0.append(c)
        gates = np.empty((B, T, 4 * hidden))
        cells = np.empty((B, T, hidden))
        tanh_c = np.empty((B, T, hidden))
        out = np.empty((B, T, hidden))
        # one (B, T, 4H) input projection up front, per-step recurrences after
        pre_x = seq @ Wx.T + b
        for t in range(T):
            pre = pre_x[:, t, :] + h @ Wh.T
            i = sigmoid(pre[:, 0 * hidden:1 * hidden])
            f = sigmoid(pre[:, 1 * hidden:2 * hidden])
            g = np.tanh(pre[:, 2 * hidden:3 * hidden])
            o = sigmoid(pre[:, 3 * hidden:4 * hidden])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            gates[:, t, 0 * hidden:1 * hidden] = i
            gates[:, t, 1 * hidden:2 * hidden] = f
            gates[:, t, 2 * hidden:3 * hidden] = g
            gates[:, t, 3 * hidden:4 * hidden] = o
            cells[:, t, :] = c
            tanh_c[:, t, :] = tc
            out[:, t, :] = h
        cache.inputs.append(seq)
        cache.gates.append(gates)
        cache.cells.append(cells)
        cache.tanh_c.append(tanh_c)
        finals.append((h, c))
        if layer < n_layers - 1:
            seq, mask = dropout_forward(out, dropout, mode, rng)
            cache.drop_masks.append(mask)
        else:
            seq = out
    return seq, finals, cache


def lstm_backward(
    params: dict[str, np.ndarray],
    cache: LstmCache,
    d_h_top: np.ndarray | None,
    d_finals: list[tuple[np.ndarray, np.ndarray]] | None = None,
):
    """Backprop through time for the whole stack.

    ``d_h_top`` is the gradient on the top layer's hidden sequence (may be
    None when only final states receive gradient); ``d_finals`` optionally
    adds gradients on each layer's final (h, c), e.g. from a decoder seeded
    with encoder states. Returns (d_x, d_h0, d_c0, grads).
    """
    H = cache.hidden
    n_layers = cache.n_layers
    B, T, _ = cache.inputs[0].shape
    grads: dict[str, np.ndarray] = {}
    d_seq = d_h_top if d_h_top is not None else np.zeros((B, T, H))
    d_h0: list[np.ndarray] = [None] * n_layers
    d_c0: list[np.ndarray] = [None] * n_layers
    for layer in reversed(range(n_layers)):
        Wx = params[f"{cache.prefix}.l{layer}.Wx"]
        Wh = params[f"{cache.prefix}.l{layer}.Wh"]
        gates = cache.gates[layer]
        cells = cache.cells[layer]
        tanh_c = cache.tanh_c[layer]
        seq_in = cache.inputs[layer]
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros(4 * H)
        d_in = np.empty_like(seq_in)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        if d_finals is not None and d_finals[layer] is not None:
            dh_extra, dc_extra = d_finals[layer]
            dh_next = dh_next + dh_extra
            dc_next = dc_next + dc_extra
        for t in reversed(range(T)):
            i = gates[:, t, 0 * H:1 * H]
            f = gates[:, t, 1 * H:2 * H]
            g = gates[:, t, 2 * H:3 * H]
            o = gates[:, t, 3 * H:4 * H]
            tc = tanh_c[:, t, :]
            c_prev = cells[:, t - 1, :] if t > 0 else cache.cell_prev0[layer]
            h_prev = _hidden_at(cache, layer, t - 1)
            dh = d_seq[:, t, :] + dh_next
            dc = dh * o * (1.0 - tc * tc) + dc_next
            d_pre = np.empty((B, 4 * H))
            d_pre[:, 0 * H:1 * H] = dc * g * i * (1.0 - i)
            d_pre[:, 1 * H:2 * H] = dc * c_prev * f * (1.0 - f)
            d_pre[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
            d_pre[:, 3 * H:4 * H] = dh * tc * o * (1.0 - o)
            dWx += d_pre.T @ seq_in[:, t, :]
            dWh += d_pre.T @ h_prev
            db += d_pre.sum(axis=0)
            d_in[:, t, :] = d_pre @ Wx
            dh_next = d_pre @ Wh
            dc_next = dc * f
        grads[f"{cache.prefix}.l{layer}.Wx"] = dWx
        grads[f"{cache.prefix}.l{layer}.Wh"] = dWh
        grads[f"{cache.prefix}.l{layer}.b"] = db
        d_h0[layer] = dh_next
        d_c0[layer] = dc_next
        if layer > 0:
            d_seq = dropout_backward(d_in, cache.drop_masks[layer - 1])
    return d_in, d_h0, d_c0, grads


def _hidden_at(cache: LstmCache, layer: int, t: int) -> np.ndarray:
    """Hidden state of ``layer`` at step t (t = -1 gives the initial state)."""
    if t < 0:
        return cache.hidden_prev0[layer]
    o = cache.gates[layer][:, t, 3 * cache.hidden:4 * cache.hidden]
    return o * cache.tanh_c[layer][:, t, :]
