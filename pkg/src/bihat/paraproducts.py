"""
Littlewood-Paley pieces, Bony paraproducts and Sobolev multipliers.

The ladder is inhomogeneous: ``S_0`` carries the low frequencies and
``Delta_j = S_{j+1} - S_j`` for ``j = 0..j_max``, where ``j_max`` is the
smallest level with ``S_{j_max+1} = I`` on the grid.  With pieces
``f_{-1} = S_0 f`` and ``f_j = Delta_j f``,

* ``Pi(f, g) = S_0 f S_0 g + Delta_0 f S_0 g + sum_{j>=1} Delta_j f S_{j-1} g``
* ``R_m(f, g) = sum_{j>=0} Delta_j f Delta_{j+m} g`` for ``m = -1, 1``
* ``R_0(f, g) = sum_{j>=0} Delta_j f Delta_j g - S_0 f S_0 g``

The low corner ``S_0 f S_0 g`` sits in both paraproducts (so ``Pi(f, 1) = f``)
and ``R_0`` subtracts it once, which makes
``f g = Pi(f,g) + Pi(g,f) + R_-1 + R_0 + R_1`` an exact identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cutoffs import annulus_window, lp_cutoff
from .grid import GridFunction, PeriodicGrid, apply_multiplier, lp_norm
from .reports import CheckReport

__all__ = [
    "LPFamily",
    "sj",
    "delta_j",
    "bony_paraproduct",
    "remainder",
    "reconstruct_product",
    "bessel_Js",
    "riesz_Ds",
    "sobolev_norm",
    "annulus_window",
]


@dataclass(frozen=True)
class LPFamily:
    grid: PeriodicGrid

    @cached_property
    def _radius(self) -> np.ndarray:
        return np.sqrt(self.grid.freq_norm2)

    @cached_property
    def j_max(self) -> int:
        """Smallest ``J`` with ``phi_hat(2^-(J+1) xi) = 1`` on every grid frequency."""
        xi_max = float(np.max(self._radius))
        return max(0, math.ceil(math.log2(xi_max)) - 1)

    def phi_hat(self, j: int) -> np.ndarray:
        return lp_cutoff(self._radius * 2.0 ** (-j))

    def psi_hat(self, j: int) -> np.ndarray:
        return self.phi_hat(j + 1) - self.phi_hat(j)

    def partition_error(self) -> float:
        total = self.phi_hat(0) + sum(self.psi_hat(j) for j in range(self.j_max + 1))
        return float(np.max(np.abs(total - 1.0)))

    def check_level(self, j: int, top: int) -> None:
        if not 0 <= j <= top:
            raise ValueError(f"level {j} outside [0, {top}]")


def _family(f: GridFunction) -> LPFamily:
    return LPFamily(f.grid)


def sj(f: GridFunction, j: int) -> GridFunction:
    """``S_j f`` for ``0 <= j <= j_max + 1`` (the top level is the identity)."""
    lp = _family(f)
    lp.check_level(j, lp.j_max + 1)
    return apply_multiplier(f, lp.phi_hat(j))


def delta_j(f: GridFunction, j: int) -> GridFunction:
    lp = _family(f)
    lp.check_level(j, lp.j_max)
    return apply_multiplier(f, lp.psi_hat(j))


def _pieces(f: GridFunction):
    lp = _family(f)
    return sj(f, 0), [delta_j(f, j) for j in range(lp.j_max + 1)]


def _partial_sums(low, deltas):
    """``S_j`` for ``j = 0..len(deltas)`` from the pieces."""
    out = [low]
    for d in deltas:
        out.append(out[-1] + d)
    return out


def bony_paraproduct(f: GridFunction, g: GridFunction) -> GridFunction:
    f0, fd = _pieces(f)
    g0, gd = _pieces(g)
    gs = _partial_sums(g0, gd)
    out = f0 * g0 + fd[0] * g0
    for j in range(1, len(fd)):
        out = out + fd[j] * gs[j - 1]
    return out


def remainder(f: GridFunction, g: GridFunction, m: int) -> GridFunction:
    if m not in (-1, 0, 1):
        raise ValueError("m must be -1, 0 or 1")
    f0, fd = _pieces(f)
    g0, gd = _pieces(g)
    out = f.grid.constant(0.0) if f.is_real and g.is_real else GridFunction(f.grid, np.zeros(f.grid.shape, complex))
    for j in range(len(fd)):
        k = j + m
        if 0 <= k < len(gd):
            out = out + fd[j] * gd[k]
    if m == 0:
        out = out - f0 * g0
    return out


def reconstruct_product(f: GridFunction, g: GridFunction) -> CheckReport:
    """
    Residual of ``f g = Pi(f,g) + Pi(g,f) + R_-1 + R_0 + R_1``: sup-norm
    relative to ``|f g|_inf``, or absolute when ``f g`` vanishes.
    """
    fg = f * g
    total = bony_paraproduct(f, g) + bony_paraproduct(g, f)
    for m in (-1, 0, 1):
        total = total + remainder(f, g, m)
    err = (fg - total).sup()
    scale = fg.sup()
    relative = scale > 0
    value = err / scale if relative else err
    return CheckReport("paraproduct_reconstruction", value, passed=value <= 1e-10,
                       details={"relative": relative})


def bessel_Js(f: GridFunction, s: float) -> GridFunction:
    """Multiplier ``(1 + |xi|^2)^(s/2)``."""
    return apply_multiplier(f, (1.0 + f.grid.freq_norm2) ** (s / 2))


def riesz_Ds(f: GridFunction, s: float, tol: float = 1e-12) -> GridFunction:
    """
    Multiplier ``|xi|^s`` with the zero mode set to 0 for ``s != 0``.

    Negative ``s`` requires a mean-zero input.
    """
    grid = f.grid
    if s == 0:
        return f
    if s < 0:
        mean = abs(np.mean(f.values))
        if mean > tol * max(f.sup(), 1e-300):
            raise ValueError("zero-frequency singularity")
    r = np.sqrt(grid.freq_norm2)
    mult = np.zeros_like(r)
    nz = r > 0
    mult[nz] = r[nz] ** s
    return apply_multiplier(f, mult)


def sobolev_norm(f: GridFunction, s: float, p: float, variant: str = "inhom") -> float:
    """``|J^s f|_{L^p}`` (``inhom``) or ``|D^s f|_{L^p}`` (``hom``)."""
    if not p > 0:
        raise ValueError("p must be positive")
    if variant == "inhom":
        return lp_norm(bessel_Js(f, s), p)
    if variant == "hom":
        return lp_norm(riesz_Ds(f, s), p)
    raise ValueError(f"unknown variant {variant!r}")
