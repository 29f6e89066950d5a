"""Minimal float64 compute kernels with analytic backward passes.

Just enough machinery to build and train the destination classifier and the
per-destination sequence predictors: dense/batch-norm/activation kernels, a
two-layer LSTM with backprop through time, focal and squared-error losses, an
Adam optimizer, a finite-difference gradient checker and a flat named-tensor
checkpoint format. No general autodiff graph.
"""

from .kernels import (
    batch_norm_backward,
    batch_norm_forward,
    dense,
    dense_backward,
    dropout_backward,
    dropout_forward,
    embedding_backward,
    embedding_from_onehot,
    embedding_lookup,
    sigmoid,
    sigmoid_backward,
    softmax,
    softmax_backward_from_probs,
    tanh_backward,
    uniform_fanin,
)
from .loss import focal_loss, focal_loss_grad_logits, mse_loss
from .lstm import init_lstm_params, lstm_backward, lstm_forward
from .optim import AdamState, adam_step
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "AdamState",
    "adam_step",
    "batch_norm_backward",
    "batch_norm_forward",
    "dense",
    "dense_backward",
    "dropout_backward",
    "dropout_forward",
    "embedding_backward",
    "embedding_from_onehot",
    "embedding_lookup",
    "focal_loss",
    "focal_loss_grad_logits",
    "grad_check",
    "init_lstm_params",
    "load_checkpoint",
    "lstm_backward",
    "lstm_forward",
    "mse_loss",
    "save_checkpoint",
    "sigmoid",
    "sigmoid_backward",
    "softmax",
    "softmax_backward_from_probs",
    "tanh_backward",
    "uniform_fanin",
]
