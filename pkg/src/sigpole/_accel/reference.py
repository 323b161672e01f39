"""Pure-numpy reference implementations of the hot kernels.

The compiled twin in ``_ckernels.pyx`` performs the same elementwise
operations in the same order; the backends agree to a few ulps (numpy's
vectorized power rounds slightly differently from libm's), and each backend
is individually deterministic.
"""
from __future__ import annotations

import numpy as np


def pair_power_product(
    s: np.ndarray, a_idx: np.ndarray, b_idx: np.ndarray, expo: float
) -> np.ndarray:
    """Row-wise product over pairs of |s[:, a] - s[:, b]| ** expo.

    The shared exponent is applied once to the product of the absolute
    differences, saving all but one power evaluation per row.
    """
    out = np.ones(s.shape[0])
    for a, b in zip(a_idx, b_idx):
        out *= np.abs(s[:, a] - s[:, b])
    return out**expo


def power_product(bases: np.ndarray, expos: np.ndarray) -> np.ndarray:
    """Row-wise product over columns of bases[:, j] ** expos[j]."""
    out = np.ones(bases.shape[0])
    for j in range(bases.shape[1]):
        e = expos[j]
        if e == 0.0:
            continue
        if e == 1.0:
            out *= bases[:, j]
        else:
            out *= bases[:, j] ** e
    return out
