"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set SIGPOLE_NO_ACCEL=1 to force the numpy reference implementations.
"""
from __future__ import annotations

import os

import numpy as np

from . import reference

if os.environ.get("SIGPOLE_NO_ACCEL"):
    _impl = reference
    BACKEND = "numpy"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = reference
        BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


def pair_power_product(s, a_idx, b_idx, expo) -> np.ndarray:
    s = np.ascontiguousarray(s, dtype=np.float64)
    a_idx = np.ascontiguousarray(a_idx, dtype=np.int64)
    b_idx = np.ascontiguousarray(b_idx, dtype=np.int64)
    return _impl.pair_power_product(s, a_idx, b_idx, float(expo))


def power_product(bases, expos) -> np.ndarray:
    # numpy's vectorized pow beats the scalar loop here (see benchmarks),
    # so this kernel always runs on the reference implementation
    bases = np.ascontiguousarray(bases, dtype=np.float64)
    expos = np.ascontiguousarray(expos, dtype=np.float64)
    return reference.power_product(bases, expos)
