"""
Direct-quadrature fractional integrals on the torus.

Every operator is a finite sum over lattice offsets with a nonnegative kernel.
Off the diagonal the kernel is sampled at the cell centre.  The singular
(diagonal) cell of the power kernels carries the exact integral of the kernel
over that cell, so it is neither dropped nor underweighted; the log kernel of
``J_B`` floors distances at ``h/2`` instead.  No FFT is used: all sums are
direct so that inequalities between operators sharing the same quadrature
hold exactly in floating point, up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Ball, GridFunction, PeriodicGrid, lp_norm
from .reports import CheckReport

__all__ = [
    "FracOrder",
    "riesz_linear",
    "bilinear_I",
    "bilinear_B",
    "holder_domination_check",
    "log_potential_JB",
    "jb_operator_ratio",
    "jb_growth_constant",
    "offset_indices",
    "diagonal_distance",
    "offset_bilinear_sum",
    "MAX_N_BILINEAR_2D",
]

MAX_N_BILINEAR_2D = 24


@dataclass(frozen=True)
class FracOrder:
    alpha: float

    def check(self, upper: float, what: str) -> float:
        a = float(self.alpha)
        if not 0 < a < upper:
            raise ValueError(f"{what}: alpha must lie in (0, {upper:g}), got {a:g}")
        return a


def _alpha(alpha) -> FracOrder:
    return alpha if isinstance(alpha, FracOrder) else FracOrder(float(alpha))


@lru_cache(maxsize=32)
def _offset_table(n: int, N: int, shift: int) -> np.ndarray:
    """``T[x, y]`` = flat index of ``x - shift*y`` (componentwise mod N)."""
    M = N**n
    coords = np.stack(np.unravel_index(np.arange(M), (N,) * n), axis=-1)
    diff = (coords[:, None, :] - shift * coords[None, :, :]) % N
    table = np.ravel_multi_index(tuple(diff[..., i] for i in range(n)), (N,) * n)
    table.setflags(write=False)
    return table


def offset_indices(grid: PeriodicGrid, shift: int = 1) -> np.ndarray:
    return _offset_table(grid.n, grid.N, int(shift))


def _flat(f):
    return np.asarray(f.values if isinstance(f, GridFunction) else f).reshape(-1)


@lru_cache(maxsize=32)
def unit_cell_integral(n: int, blocks: int, power: float) -> float:
    """
    ``int (|y_1| + ... + |y_blocks|)^(-power)`` over the cube ``[-1/2, 1/2]^D``,
    ``D = n * blocks``, each ``y_b`` an ``n``-vector.

    The kernel is homogeneous, so the centre subcube of side 1/3 contributes
    ``3^(power - D)`` times the whole; the remaining shell is smooth and is
    integrated by the midpoint rule.
    """
    D = n * blocks
    if not power < D:
        raise ValueError("kernel not integrable at the origin")
    m = {1: 3000, 2: 600, 3: 120}.get(D, 36)
    ax = (np.arange(m) + 0.5) / m - 0.5
    shell = 0.0
    # iterate over the first coordinate to bound memory
    rest = np.stack(np.meshgrid(*([ax] * (D - 1)), indexing="ij"), axis=-1).reshape(-1, D - 1) if D > 1 else np.zeros((1, 0))
    for x0 in ax:
        pts = np.concatenate([np.full((rest.shape[0], 1), x0), rest], axis=1)
        outer = np.any(np.abs(pts) > 1 / 6, axis=1)
        y = pts[outer].reshape(-1, blocks, n)
        t = np.sum(np.sqrt(np.sum(y * y, axis=-1)), axis=-1)
        shell += float(np.sum(t ** (-power)))
    shell /= m**D
    return shell / (1 - 3.0 ** (power - D))


def diagonal_distance(grid: PeriodicGrid, blocks: int, power: float) -> float:
    """Distance ``d`` at which the midpoint weight ``h^D d^-power`` equals the diagonal cell integral."""
    return grid.h * unit_cell_integral(grid.n, blocks, float(power)) ** (-1.0 / power)


def _singular_kernel(grid: PeriodicGrid, power: float) -> np.ndarray:
    """``h^n |y|^(-power)`` per offset, flattened; the origin cell holds the cell integral."""
    d = grid.dist_from_origin.reshape(-1).copy()
    d[0] = 1.0
    K = grid.cell / d**power
    K[0] = grid.h ** (grid.n - power) * unit_cell_integral(grid.n, 1, float(power))
    return K


def _linear_sum(grid, kernel, F, G=None, s1=1, s2=-1):
    """``sum_y K(y) F(x - s1 y) [G(x - s2 y)]`` for every x."""
    A = F[offset_indices(grid, s1)]
    if G is not None:
        A = A * G[offset_indices(grid, s2)]
    return A @ kernel


def riesz_linear(f: GridFunction, alpha) -> GridFunction:
    """Linear Riesz potential ``I_alpha f(x) = sum_y h^n f(x-y) / |y|^(n-alpha)``."""
    g = f.grid
    a = _alpha(alpha).check(g.n, "riesz_linear")
    K = _singular_kernel(g, g.n - a)
    return GridFunction(g, _linear_sum(g, K, _flat(f)).reshape(g.shape))


def bilinear_B(f: GridFunction, g: GridFunction, alpha, s1: int = 1, s2: int = -1) -> GridFunction:
    """``B_alpha(f,g)(x) = sum_y h^n f(x - s1 y) g(x - s2 y) / |y|^(n-alpha)``.

    Shifts are nonzero integers so every argument lands on the lattice.
    """
    grid = f.grid
    a = _alpha(alpha).check(grid.n, "bilinear_B")
    if int(s1) != s1 or int(s2) != s2 or s1 == s2 or s1 == 0 or s2 == 0:
        raise ValueError("degenerate shift pair")
    K = _singular_kernel(grid, grid.n - a)
    out = _linear_sum(grid, K, _flat(f), _flat(g), int(s1), int(s2))
    return GridFunction(grid, out.reshape(grid.shape))


def offset_bilinear_sum(grid: PeriodicGrid, kernel: np.ndarray, F: np.ndarray, G: np.ndarray,
                        rows=None, offsets=None) -> np.ndarray:
    """
    ``out[p, x] = sum_{u,v} kernel[u, v] F[p, x-u] G[p, x-v]``.

    ``kernel`` is indexed by flat offsets (restricted to ``offsets`` when given,
    in which case it has shape ``(len(offsets), len(offsets))``).  ``rows``
    restricts the output points.  ``F`` and ``G`` have shape ``(P, M)``.
    """
    T = offset_indices(grid)
    if rows is not None:
        T = T[rows]
    if offsets is not None:
        T = T[:, offsets]
    Cf = F[:, T]
    Cg = G[:, T]
    return np.sum(Cf * (Cg @ kernel.T), axis=-1)


def _pair_kernel(grid: PeriodicGrid, func, offsets=None, power=None) -> np.ndarray:
    """
    ``h^2n func(|u| + |v|)`` over offset pairs.  With ``power`` given the
    kernel is ``t^(-power)`` and the diagonal cell holds its cell integral;
    otherwise ``t`` is floored at ``h/2``.
    """
    d = grid.dist_from_origin.reshape(-1)
    if offsets is not None:
        d = d[offsets]
    t = np.maximum(d[:, None] + d[None, :], grid.h / 2)
    K = grid.cell**2 * func(t)
    if power is not None:
        # offset 0 comes first in both the full and the restricted table
        K[0, 0] = grid.h ** (2 * grid.n - power) * unit_cell_integral(grid.n, 2, float(power))
    return K


def bilinear_I(f: GridFunction, g: GridFunction, alpha) -> GridFunction:
    """``I_alpha(f,g)(x) = sum_{y,z} h^2n f(y) g(z) / (|x-y| + |x-z|)^(2n-alpha)``."""
    grid = f.grid
    a = _alpha(alpha).check(2 * grid.n, "bilinear_I")
    if grid.n == 2 and grid.N > MAX_N_BILINEAR_2D:
        raise ValueError(f"bilinear_I in 2D is limited to N <= {MAX_N_BILINEAR_2D}")
    power = 2 * grid.n - a
    K = _pair_kernel(grid, lambda t: t ** (-power), power=power)
    F, G = _flat(f)[None], _flat(g)[None]
    # average both orders so the result is symmetric in (f, g) bit for bit
    out = 0.5 * (offset_bilinear_sum(grid, K, F, G)[0] + offset_bilinear_sum(grid, K, G, F)[0])
    return GridFunction(grid, out.reshape(grid.shape))


def holder_domination_check(f: GridFunction, g: GridFunction, alpha, p1: float, p2: float,
                            tol: float = 1e-12) -> CheckReport:
    """
    Pointwise ``B_alpha(|f|,|g|) <= I_alpha(|f|^r)^(1/r) I_alpha(|g|^s)^(1/s)``
    with ``r = p1/p``, ``s = p2/p`` and ``1/p = 1/p1 + 1/p2 < 1``, shifts (1, -1).

    The value is the max of LHS/RHS over points with RHS > 0.
    """
    inv_p = 1.0 / p1 + 1.0 / p2
    if not inv_p < 1 or p1 <= 1 or p2 <= 1:
        raise ValueError("need p1, p2 > 1 and 1/p1 + 1/p2 < 1")
    r, s = p1 * inv_p, p2 * inv_p
    grid = f.grid
    a = _alpha(alpha).check(grid.n, "holder_domination_check")
    K = _singular_kernel(grid, grid.n - a)
    F = np.abs(_flat(f))
    G = np.abs(_flat(g))
    lhs = _linear_sum(grid, K, F, G, 1, -1)
    rhs = _linear_sum(grid, K, F**r) ** (1 / r) * _linear_sum(grid, K, G**s) ** (1 / s)
    pos = rhs > 0
    ratio = float(np.max(lhs[pos] / rhs[pos], initial=0.0))
    excess = np.maximum(lhs - rhs, 0.0)
    rel = float(np.max(excess[pos] / rhs[pos], initial=0.0))
    bad_zero = bool(np.any(lhs[~pos] > 0))
    return CheckReport(
        "holder_domination",
        ratio,
        passed=(rel <= tol) and not bad_zero,
        details={"max_relative_violation": rel, "r": r, "s": s, "points": int(F.size)},
    )


def _jb_radius(B: Ball, grid: PeriodicGrid) -> float:
    return grid.L / 2 if B.covers_torus(grid) else B.radius


def _jb_setup(B: Ball, grid: PeriodicGrid):
    if B.radius < 4 * grid.h:
        raise ValueError("ball too small")
    r = _jb_radius(B, grid)
    rows = np.flatnonzero(B.mask(grid).reshape(-1))
    if B.covers_torus(grid):
        offsets = None
    else:
        offsets = np.flatnonzero(grid.dist_from_origin.reshape(-1) < 2 * r)
    power = 2 * grid.n - 1
    K = _pair_kernel(grid, lambda t: t ** (-power) * np.log(8 * r / t), offsets)
    return rows, offsets, K


def log_potential_JB(f: GridFunction, g: GridFunction, B: Ball) -> GridFunction:
    """
    ``J_B(f,g)(x) = sum_{a,b in B} h^2n f(a) g(b) t^(1-2n) log(8 r(B) / t)``,
    ``t = d(x,a) + d(x,b)``, for ``x`` in ``B``; zero outside ``B``.

    Values of ``f`` and ``g`` outside ``B`` are ignored.  A ball covering the
    torus uses ``r(B) = L/2``.
    """
    return log_potential_JB_many([(f, g)], B)[0]


def log_potential_JB_many(pairs, B: Ball) -> list[GridFunction]:
    pairs = list(pairs)
    grid = pairs[0][0].grid
    rows, offsets, K = _jb_setup(B, grid)
    mask = B.mask(grid).reshape(-1)
    F = np.stack([np.where(mask, _flat(f), 0.0) for f, _ in pairs])
    G = np.stack([np.where(mask, _flat(g), 0.0) for _, g in pairs])
    vals = offset_bilinear_sum(grid, K, F, G, rows=rows, offsets=offsets)
    out = []
    for v in vals:
        full = np.zeros(grid.size, dtype=v.dtype)
        full[rows] = v
        out.append(GridFunction(grid, full.reshape(grid.shape)))
    return out


def _scaling_q(p1, p2, alpha, n):
    inv_q = 1.0 / p1 + 1.0 / p2 - (1.0 - alpha) / n
    return inv_q


def jb_operator_ratio(B: Ball, family, p1: float, p2: float, q: float, alpha: float) -> float:
    """
    ``sup ||J_B(f,g)||_{L^q(B)} / (r(B)^alpha ||f||_{L^p1(B)} ||g||_{L^p2(B)})``
    over the ``(f, g)`` pairs of ``family``.
    """
    pairs = list(family)
    if not pairs:
        raise ValueError("empty family")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    grid = pairs[0][0].grid
    inv_q = _scaling_q(p1, p2, alpha, grid.n)
    given = 0.0 if math.isinf(q) else 1.0 / q
    if abs(inv_q - given) > 1e-12:
        raise ValueError("exponents violate 1/q = 1/p1 + 1/p2 - (1-alpha)/n")
    J = log_potential_JB_many(pairs, B)
    best = 0.0
    for (f, g), j in zip(pairs, J):
        den = B.radius**alpha * lp_norm(f, p1, B) * lp_norm(g, p2, B)
        num = lp_norm(j, q, B)
        if den == 0:
            if num > 0:
                return math.inf
            continue
        best = max(best, num / den)
    return best


def jb_growth_constant(r: float, c: float, n: int = 1, samples: int = 20000, seed: int = 0) -> float:
    """
    Empirical growth constant of the log kernel ``k(t) = t^(1-2n) log(8r/t)``:
    max of ``k(t) / k(t')`` over random point configurations in a ball of
    radius ``r`` with ``t' <= c t``, where ``t = d(x,a)+d(x,b)`` and
    ``t' = d(v,y)+d(w,z)``.
    """
    rng = np.random.default_rng(seed)

    def pts(m):
        # uniform in the Euclidean ball of radius r, dimension n
        v = rng.standard_normal((m, n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * r * rng.random((m, 1)) ** (1.0 / n)

    x, a, b, v, w, y, z = (pts(samples) for _ in range(7))
    t = np.linalg.norm(x - a, axis=1) + np.linalg.norm(x - b, axis=1)
    tp = np.linalg.norm(v - y, axis=1) + np.linalg.norm(w - z, axis=1)
    keep = (tp <= c * t) & (t > 0) & (tp > 0)

    def k(s):
        return s ** (1 - 2 * n) * np.log(8 * r / s)

    if not np.any(keep):
        return 0.0
    return float(np.max(k(t[keep]) / k(tp[keep])))
