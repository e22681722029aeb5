"""
Smooth cutoffs built from one fixed transition function.

``smooth_step(x) = e(x) / (e(x) + e(1 - x))`` with ``e(x) = exp(-1/x)`` for
``x > 0`` and ``0`` otherwise.  It is 0 for ``x <= 0``, 1 for ``x >= 1`` and
satisfies ``smooth_step(x) + smooth_step(1 - x) = 1``.  All cutoffs below are
compositions of this function with affine maps of ``|xi|`` or ``log2 r``, so
their values are reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "smooth_step",
    "lp_cutoff",
    "annulus_window",
    "ratio_cutoff",
    "ratio_cutoff_narrow",
    "ratio_cutoff_balanced",
]


def _e(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    x = np.asarray(x, dtype=float)
    a = _e(x)
    b = _e(1.0 - x)
    return a / (a + b)


def lp_cutoff(r):
    """Radial cutoff: 1 on ``r <= 1``, 0 on ``r >= 3/2``."""
    return smooth_step(3.0 - 2.0 * np.asarray(r, dtype=float))


def annulus_window(r):
    """Smooth window supported on ``1 <= r <= 2``, equal to 1 at ``r = 3/2``."""
    r = np.asarray(r, dtype=float)
    return smooth_step(2.0 * (r - 1.0)) * smooth_step(2.0 * (2.0 - r))


def _log2(r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log2(r)


def ratio_cutoff(r):
    """
    ``phi`` with ``phi = 1`` on ``[0, 1/2]``, support ``[0, 2]`` and
    ``phi(r) + phi(1/r) = 1`` for ``r > 0``.
    """
    return smooth_step((1.0 - _log2(r)) / 2.0)


def ratio_cutoff_narrow(r):
    """``phi`` with ``phi = 1`` on ``[0, 1/4]`` and support ``[0, 1/2]``."""
    return smooth_step(-1.0 - _log2(r))


def ratio_cutoff_balanced(r):
    """``1 - phi(r) - phi(1/r)`` for the narrow ``phi``; support ``[1/4, 4]``."""
    return 1.0 - ratio_cutoff_narrow(r) - ratio_cutoff_narrow(1.0 / np.asarray(r, dtype=float))
