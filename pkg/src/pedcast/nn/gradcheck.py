"""Central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def grad_check(
    f: Callable[[], float],
    arrays: Sequence[np.ndarray],
    analytic: Sequence[np.ndarray],
    step: float = 1e-5,
) -> float:
    """Compare analytic gradients against central differences.

    ``f`` re-evaluates the scalar loss from the current contents of
    ``arrays`` (which are perturbed in place, one coordinate at a time);
    ``analytic`` holds the corresponding precomputed gradients. Returns the
    max over coordinates of |analytic - numeric| / max(1, |numeric|).
    """
    worst = 0.0
    for arr, grad in zip(arrays, analytic):
        flat = arr.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = f()
            flat[i] = orig - step
            f_minus = f()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            err = abs(gflat[i] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst
