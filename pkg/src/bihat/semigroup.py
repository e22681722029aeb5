"""
Spectral heat semigroup on the torus and bilinear oscillations.

``S_t`` multiplies Fourier coefficients by ``exp(-t |xi|^2)``; balls of radius
``r`` are paired with time ``t = r^2`` (order ``m = 2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fracops import log_potential_JB_many
from .grid import Ball, GridFunction, PeriodicGrid, apply_multiplier, grad_magnitude, lp_norm
from .reports import CheckReport

__all__ = [
    "HeatSemigroup",
    "apply_St",
    "apply_tdtSt",
    "heat_kernel_row",
    "kernel_poisson_bound_check",
    "bilinear_oscillation",
    "double_smoothed_oscillation",
    "dilated_balls",
    "poincare_rhs_series",
    "representation_formula_check",
]


@dataclass(frozen=True)
class HeatSemigroup:
    grid: PeriodicGrid
    epsilon: float = 2.0
    m: float = 2.0

    def __post_init__(self):
        if self.m != 2:
            raise ValueError("only the heat semigroup (m = 2) is implemented")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def time(self, ball: Ball) -> float:
        return ball.radius**self.m

    def __call__(self, f: GridFunction, t: float) -> GridFunction:
        return apply_St(f, t)


def _check_t(t):
    if not t > 0:
        raise ValueError("t must be positive")


def apply_St(f: GridFunction, t: float) -> GridFunction:
    _check_t(t)
    return apply_multiplier(f, np.exp(-t * f.grid.freq_norm2))


def apply_tdtSt(f: GridFunction, t: float) -> GridFunction:
    """``t d/dt S_t f``: multiplier ``-t |xi|^2 exp(-t |xi|^2)``."""
    _check_t(t)
    x = t * f.grid.freq_norm2
    return apply_multiplier(f, -x * np.exp(-x))


def heat_kernel_row(grid: PeriodicGrid, t: float) -> np.ndarray:
    """Periodized heat kernel ``p_t(0, y)`` at the grid points ``y``."""
    _check_t(t)
    return np.fft.ifftn(np.exp(-t * grid.freq_norm2)).real * grid.size / grid.volume


def kernel_poisson_bound_check(grid: PeriodicGrid, t: float, epsilon: float) -> CheckReport:
    """
    ``sup_y |p_t(0,y)| t^(n/2) (1 + d(0,y)/sqrt(t))^(2n+epsilon)``.

    Finite for every ``epsilon`` since the kernel is Gaussian.
    """
    if not grid.h**2 <= t <= (grid.L / 8) ** 2:
        raise ValueError("t out of range [h^2, (L/8)^2]")
    p = heat_kernel_row(grid, t)
    n = grid.n
    d = grid.dist_from_origin
    weight = (1 + d / math.sqrt(t)) ** (2 * n + epsilon)
    scaled = np.abs(p) * t ** (n / 2)
    value = float(np.max(scaled * weight))
    return CheckReport(
        "poisson_bound",
        value,
        passed=math.isfinite(value),
        details={"at_origin": float(scaled.flat[0]), "t": t, "epsilon": epsilon},
    )


def _restrict(f: GridFunction, B: Ball) -> GridFunction:
    return GridFunction(f.grid, np.where(B.mask(f.grid), f.values, 0.0))


def _oscillation_ball(B: Ball, grid: PeriodicGrid):
    # 2h rather than 4h: acceptance radii reach 2h at the coarse resolution
    B.check(grid, min_cells=2.0)


def bilinear_oscillation(f: GridFunction, g: GridFunction, B: Ball, sg: HeatSemigroup) -> GridFunction:
    """``f g - S_t f S_t g`` with ``t = r(B)^2``, zero outside ``B``."""
    _oscillation_ball(B, f.grid)
    t = sg.time(B)
    return _restrict(f * g - apply_St(f, t) * apply_St(g, t), B)


def double_smoothed_oscillation(f: GridFunction, g: GridFunction, B: Ball, sg: HeatSemigroup) -> GridFunction:
    """``f g - S_t[S_t f S_t g]`` with ``t = r(B)^2``, zero outside ``B``."""
    _oscillation_ball(B, f.grid)
    t = sg.time(B)
    return _restrict(f * g - apply_St(apply_St(f, t) * apply_St(g, t), t), B)


def dilated_balls(B: Ball, grid: PeriodicGrid, l_max: int):
    """
    ``(l, 2^(l+1) B)`` for ``l = 0..l_max`` stopping at the first ball that
    covers the torus.  The boolean says whether the sequence was capped.
    """
    out = []
    for l in range(l_max + 1):
        D = B.dilate(2 ** (l + 1), grid)
        out.append((l, D))
        if D.covers_torus(grid):
            return out, True
    return out, False


def _series(terms, capped, decay):
    """Sum ``2^(-l decay) X_l`` with the geometric tail after a capped ball."""
    total = 0.0
    for l, x in terms:
        total += 2.0 ** (-l * decay) * x
    if capped and terms:
        l_last, x_last = terms[-1]
        q = 2.0 ** (-decay)
        total += x_last * 2.0 ** (-l_last * decay) * q / (1 - q)
    return total


def poincare_rhs_series(f: GridFunction, g: GridFunction, B: Ball, p1: float, p2: float,
                        alpha: float, epsilon: float, l_max: int = 20,
                        w1: GridFunction | None = None, w2: GridFunction | None = None) -> float:
    """
    ``r^alpha sum_l 2^(-l(eps-alpha)) [|grad f|_{p1} |g|_{p2} + |f|_{p1} |grad g|_{p2}]``
    with norms over ``2^(l+1) B`` (optionally weighted by ``w1``, ``w2``).

    Once a dilated ball covers the torus the norms stop changing and the rest
    of the series is added in closed form.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if alpha >= epsilon:
        raise ValueError("series diverges")
    grid = f.grid
    df, dg = grad_magnitude(f), grad_magnitude(g)
    balls, capped = dilated_balls(B, grid, l_max)
    terms = []
    for l, D in balls:
        x = (lp_norm(df, p1, D, w1) * lp_norm(g, p2, D, w2)
             + lp_norm(f, p1, D, w1) * lp_norm(dg, p2, D, w2))
        terms.append((l, x))
    return B.radius**alpha * _series(terms, capped, epsilon - alpha)


def representation_rhs(f: GridFunction, g: GridFunction, B: Ball, epsilon: float, l_max: int = 20) -> np.ndarray:
    """``sum_l 2^(-l eps) [J(|grad f|, |g|) + J(|f|, |grad g|)]`` on the ball points."""
    grid = f.grid
    af, ag = abs(f), abs(g)
    df, dg = grad_magnitude(f), grad_magnitude(g)
    mask = B.mask(grid)
    balls, capped = dilated_balls(B, grid, l_max)
    terms = []
    for l, D in balls:
        j1, j2 = log_potential_JB_many([(df, ag), (af, dg)], D)
        terms.append((l, (j1.values + j2.values)[mask]))
    return _series(terms, capped, epsilon)


def representation_formula_check(f: GridFunction, g: GridFunction, B: Ball, sg: HeatSemigroup,
                                 l_max: int = 20) -> CheckReport:
    """
    Smallest ``C`` with ``|f g - S_t f S_t g| <= C * RHS`` at every point of
    ``B``, the RHS being the log-potential series.  Reported as ``inf`` when
    the RHS vanishes where the LHS does not, and 0 when the LHS vanishes.
    """
    grid = f.grid
    lhs = np.abs(bilinear_oscillation(f, g, B, sg).values[B.mask(grid)])
    rhs = representation_rhs(f, g, B, sg.epsilon, l_max)
    # oscillations at rounding level of f*g count as zero
    scale = f.sup() * g.sup()
    lhs = np.where(lhs <= 1e-13 * scale, 0.0, lhs)
    degenerate = bool(np.any((rhs <= 0) & (lhs > 0)))
    pos = rhs > 0
    c = math.inf if degenerate else float(np.max(lhs[pos] / rhs[pos], initial=0.0))
    return CheckReport(
        "representation_formula",
        c,
        passed=math.isfinite(c),
        details={"points": int(lhs.size), "degenerate": degenerate},
    )
