"""
Weight-class constants and ball-based norms.

Suprema over balls are taken over a fixed :class:`BallFamily`, so constants
computed at different resolutions refer to the same balls (up to the grid).
Averages use the midpoint rule restricted to grid points inside each ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Ball, GridFunction, PeriodicGrid, lp_norm
from .semigroup import HeatSemigroup, bilinear_oscillation, double_smoothed_oscillation

__all__ = [
    "BallFamily",
    "ExponentTuple",
    "sobolev_exponent",
    "apq_constant",
    "bilinear_weight_constant",
    "weighted_Lp_norm",
    "campanato_norm",
    "bilinear_campanato_norm",
    "semigroup_campanato_tilde",
    "testability_constant",
]


def sobolev_exponent(p1: float, p2: float, s: float, n: int, allow_infinite: bool = False) -> float:
    """``q`` with ``1/q = 1/p1 + 1/p2 - s/n``.

    ``1/q = 0`` is returned as ``inf`` when ``allow_infinite`` is set.
    """
    if not (1 < p1 < math.inf and 1 < p2 < math.inf):
        raise ValueError("p1, p2 must lie in (1, inf)")
    if not s >= 0:
        raise ValueError("s must be nonnegative")
    inv = 1.0 / p1 + 1.0 / p2 - s / n
    if allow_infinite and abs(inv) <= 1e-12:
        return math.inf
    if inv <= 1e-12:
        raise ValueError("scaling gives q = ∞ or negative")
    return 1.0 / inv


@dataclass(frozen=True)
class ExponentTuple:
    """Exponents tied by ``1/q = 1/p1 + 1/p2 - s/n`` (``q = inf`` allowed)."""

    p1: float
    p2: float
    s: float
    n: int
    q: float | None = None

    def __post_init__(self):
        q = sobolev_exponent(self.p1, self.p2, self.s, self.n, allow_infinite=True)
        if self.q is None:
            object.__setattr__(self, "q", q)
        else:
            given = 0.0 if math.isinf(self.q) else 1.0 / self.q
            if abs(given - (0.0 if math.isinf(q) else 1.0 / q)) > 1e-12:
                raise ValueError("exponents violate 1/q = 1/p1 + 1/p2 - s/n")

    @property
    def alpha(self) -> float:
        """Smoothness gain in the Poincare form, ``s = 1 - alpha``."""
        return 1.0 - self.s

    def to_dict(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "s": self.s, "n": self.n, "q": self.q}


@dataclass(frozen=True)
class BallFamily:
    """
    Balls centred on a coarse sublattice (``divisions`` centres per axis, so
    stride ``N / divisions``) with radii ``2^k h + h/4`` for ``k >= 1`` up to
    ``L/4``.  The quarter cell keeps radii off lattice distances.  Explicit
    ``radii`` override the dyadic set.
    """

    divisions: int = 16
    radii: tuple | None = None

    def __post_init__(self):
        if self.divisions < 1:
            raise ValueError("divisions must be positive")
        if self.radii is not None:
            r = tuple(float(v) for v in self.radii)
            if any(v <= 0 for v in r):
                raise ValueError("radii must be positive")
            object.__setattr__(self, "radii", r)

    def radius_list(self, grid: PeriodicGrid) -> list[float]:
        if self.radii is not None:
            return list(self.radii)
        out = []
        k = 1
        while 2**k * grid.h + grid.h / 4 <= grid.L / 4:
            out.append(2**k * grid.h + grid.h / 4)
            k += 1
        return out

    def centers(self, grid: PeriodicGrid) -> list[tuple]:
        d = min(self.divisions, grid.N)
        if grid.N % d:
            raise ValueError("divisions must divide N")
        stride = grid.N // d
        axis = grid.axis[::stride]
        return [tuple(float(v) for v in c) for c in np.array(np.meshgrid(*([axis] * grid.n), indexing="ij")).reshape(grid.n, -1).T]

    def balls(self, grid: PeriodicGrid) -> list[Ball]:
        out = [Ball(c, r) for r in self.radius_list(grid) for c in self.centers(grid)]
        if not out:
            raise ValueError("empty family")
        for B in out:
            if B.radius < 2 * grid.h:
                raise ValueError(f"ball too small: radius {B.radius} < 2h")
        return out

    def masks(self, grid: PeriodicGrid) -> np.ndarray:
        """Boolean matrix, one flattened ball indicator per row."""
        return np.stack([B.mask(grid).reshape(-1) for B in self.balls(grid)])

    def to_dict(self) -> dict:
        return {"divisions": self.divisions, "radii": None if self.radii is None else list(self.radii)}


def _averages(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Ball averages of the flat array ``v`` for each mask row."""
    return (M @ v) / M.sum(axis=1)


def _family_masks(family: BallFamily, grid: PeriodicGrid):
    M = family.masks(grid).astype(float)
    if M.shape[0] == 0:
        raise ValueError("empty family")
    return M


def _positive(w: GridFunction, what="weight"):
    v = np.asarray(w.values).reshape(-1)
    if np.iscomplexobj(v) or np.any(v <= 0):
        raise ValueError(f"{what} must be positive")
    return v


def _dual(p):
    return math.inf if p == 1 else p / (p - 1)


def apq_constant(w: GridFunction, p: float, q: float, family: BallFamily) -> float:
    """
    ``max_B (avg_B w^(q/p)) (avg_B w^(1-p'))^(q/p')``; for ``p = 1`` the second
    factor is its limit ``(max_B 1/w)^q``.
    """
    if p < 1 or q < 1:
        raise ValueError("p, q must be >= 1")
    v = _positive(w)
    M = _family_masks(family, w.grid)
    first = _averages(M, v ** (q / p))
    if p == 1:
        second = np.max(np.where(M > 0, 1.0 / v, 0.0), axis=1) ** q
    else:
        pp = _dual(p)
        second = _averages(M, v ** (1 - pp)) ** (q / pp)
    return float(np.max(first * second))


def bilinear_weight_constant(w1: GridFunction, w2: GridFunction, p1: float, p2: float, q: float,
                             family: BallFamily) -> float:
    """``max_B (avg_B w) prod_j (avg_B w_j^(1-p_j'))^(q/p_j')`` with ``w = w1^(q/p1) w2^(q/p2)``."""
    if not (p1 > 1 and p2 > 1):
        raise ValueError("p1, p2 must exceed 1")
    v1, v2 = _positive(w1), _positive(w2)
    M = _family_masks(family, w1.grid)
    out = _averages(M, v1 ** (q / p1) * v2 ** (q / p2))
    for v, p in ((v1, p1), (v2, p2)):
        pp = _dual(p)
        out = out * _averages(M, v ** (1 - pp)) ** (q / pp)
    return float(np.max(out))


def weighted_Lp_norm(f: GridFunction, w: GridFunction | None, p: float, region: Ball | None = None) -> float:
    """``(int_region |f|^p w)^(1/p)`` by the midpoint rule."""
    if not p > 0:
        raise ValueError("p must be positive")
    if w is not None:
        _positive(w)
    return lp_norm(f, p, region, w)


def _morrey(values: np.ndarray, p: float, lam: float, family: BallFamily, grid: PeriodicGrid, M=None) -> float:
    if not p > 0:
        raise ValueError("p must be positive")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if M is None:
        M = _family_masks(family, grid)
    a = np.abs(values).reshape(-1)
    measure = M.sum(axis=1) * grid.cell
    if math.isinf(p):
        local = np.max(np.where(M > 0, a, 0.0), axis=1)
    else:
        local = _averages(M, a**p) ** (1.0 / p)
    return float(np.max(measure ** (-lam) * local))


def campanato_norm(f: GridFunction, p: float, lam: float, family: BallFamily) -> float:
    """``max_B |B|^(-lam) (avg_B |f|^p)^(1/p)`` (``p = inf`` gives the ball max)."""
    return _morrey(f.values, p, lam, family, f.grid)


def _oscillation_norm(osc, f, g, p, lam, sg, family):
    grid = f.grid
    if sg is None:
        sg = HeatSemigroup(grid)
    best = 0.0
    for B in family.balls(grid):
        o = osc(f, g, B, sg).values
        m = B.mask(grid)
        a = np.abs(o[m])
        local = float(np.max(a, initial=0.0)) if math.isinf(p) else float(np.mean(a**p)) ** (1.0 / p)
        best = max(best, (np.count_nonzero(m) * grid.cell) ** (-lam) * local)
    return best


def bilinear_campanato_norm(f: GridFunction, g: GridFunction, p: float, lam: float,
                            sg: HeatSemigroup | None, family: BallFamily) -> float:
    """``max_B |B|^(-lam) (avg_B |f g - S_t f S_t g|^p)^(1/p)`` with ``t = r(B)^2``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return _oscillation_norm(bilinear_oscillation, f, g, p, lam, sg, family)


def semigroup_campanato_tilde(f: GridFunction, g: GridFunction, p: float, lam: float,
                              sg: HeatSemigroup | None, family: BallFamily) -> float:
    """
    As :func:`bilinear_campanato_norm` with ``S_t[S_t f S_t g]`` as the
    approximant.  This is an upper bound for the norm defined by an infimum
    over approximants; the infimum itself is not searched.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return _oscillation_norm(double_smoothed_oscillation, f, g, p, lam, sg, family)


def testability_constant(u: GridFunction, v1: GridFunction, v2: GridFunction, p1: float, p2: float,
                         q: float, phi_exponent: float, t: float, family: BallFamily) -> float:
    """
    ``max_B phi(B) |B|^(1/q + 1/p1' + 1/p2') U_B prod_j (avg_B v_j^(-t p_j'))^(1/(t p_j'))``
    with ``phi(B) = r(B)^phi_exponent`` and ``U_B = (avg_B u^(qt))^(1/(qt))``
    for ``q > 1`` or ``(avg_B u^q)^(1/q)`` for ``q <= 1`` (``q = inf`` uses the
    ball max of ``u``).
    """
    if not t > 1:
        raise ValueError("t must exceed 1")
    grid = u.grid
    uu, a1, a2 = _positive(u), _positive(v1, "v1"), _positive(v2, "v2")
    balls = family.balls(grid)
    if not balls:
        raise ValueError("empty family")
    M = _family_masks(family, grid)
    radii = np.array([B.radius for B in balls])
    measure = M.sum(axis=1) * grid.cell
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    expo = inv_q + (1 - 1 / p1) + (1 - 1 / p2)
    if math.isinf(q):
        U = np.max(np.where(M > 0, uu, 0.0), axis=1)
    elif q > 1:
        U = _averages(M, uu ** (q * t)) ** (1 / (q * t))
    else:
        U = _averages(M, uu**q) ** (1 / q)
    out = radii**phi_exponent * measure**expo * U
    for v, p in ((a1, p1), (a2, p2)):
        pp = _dual(p)
        out = out * _averages(M, v ** (-t * pp)) ** (1 / (t * pp))
    return float(np.max(out))
