"""Small numerical helpers shared across modules."""
from __future__ import annotations

import contextlib
from functools import lru_cache

import numpy as np

_DETERMINISTIC = False


def set_deterministic(flag: bool) -> None:
    """Force fixed-order (non-BLAS) reductions in quadrature sums."""
    global _DETERMINISTIC
    _DETERMINISTIC = bool(flag)


def is_deterministic() -> bool:
    return _DETERMINISTIC


@contextlib.contextmanager
def deterministic(flag: bool = True):
    previous = _DETERMINISTIC
    set_deterministic(flag)
    try:
        yield
    finally:
        set_deterministic(previous)


def weighted_sum(weights, values, axis: int = 0):
    """Sum ``weights * values`` over ``axis`` of ``values``.

    ``weights`` is one-dimensional and aligned with ``values.shape[axis]``.
    """
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values)
    values = np.moveaxis(values, axis, 0)
    if _DETERMINISTIC:
        shaped = weights.reshape((-1,) + (1,) * (values.ndim - 1))
        return np.add.reduce(shaped * values, axis=0)
    return np.tensordot(weights, values, axes=(0, 0))


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def loglog_slope(h, values) -> float:
    """Least-squares slope of log(values) against log(h)."""
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    return float(np.polyfit(np.log(h), np.log(values), 1)[0])
