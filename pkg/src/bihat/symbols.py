"""
x-independent bilinear symbols and the operators they define.

A symbol is a vectorized callable ``sigma(xi, eta)`` where ``xi`` and ``eta``
have the dimension on their leading axis (``xi[0]``, ``xi[1]``).  On the grid

.. math:: T_\\sigma(f,g)(x) = \\sum_{k,l} \\sigma(\\xi_k, \\xi_l) \\hat f_k \\hat g_l e^{i x (\\xi_k + \\xi_l)}

and the associated kernel is ``k(u,v) = L^{-2n} sum sigma e^{i(xi u + eta v)}``,
so that ``T(f,g)(x) = h^{2n} sum_{u,v} k(u,v) f(x-u) g(x-v)`` exactly.  With
this normalization ``sigma = 1`` has ``k(0,0) = N^{2n} / L^{2n}``.

Homogeneous symbols are set to 0 at ``(xi, eta) = (0, 0)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import cutoffs
from .fracops import bilinear_B, bilinear_I, diagonal_distance, offset_indices
from .grid import GridFunction, PeriodicGrid, apply_multiplier
from .paraproducts import bessel_Js
from .reports import CheckReport

__all__ = [
    "BilinearSymbol",
    "eval_Tsigma",
    "symbol_kernel",
    "kernel_distances",
    "kernel_decay_constant",
    "kernel_domination_constant",
    "shell_decay_check",
    "seminorm_estimate",
    "decompose_frequency",
    "decompose_three_way",
    "freqdecoup_residual",
    "three_way_residual",
    "tsigma_domination_check",
    "eval_Ttheta",
    "theta_kernel",
    "ttheta_domination_check",
    "make_symbol",
    "SYMBOLS",
]

CLASS_TAGS = ("BS_inhom", "BS_hom", "BS_theta", "unclassified")


def _sq(v):
    return np.sum(np.asarray(v) ** 2, axis=0)


@dataclass(frozen=True)
class BilinearSymbol:
    evaluator: Callable = field(repr=False)
    order: float = 0.0
    class_tag: str = "unclassified"
    name: str = "sigma"

    def __post_init__(self):
        if self.class_tag not in CLASS_TAGS:
            raise ValueError(f"unknown class tag {self.class_tag!r}")

    def __call__(self, xi, eta):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        out = np.asarray(self.evaluator(xi, eta))
        out = np.broadcast_to(out, np.broadcast_shapes(xi.shape[1:], eta.shape[1:]))
        if self.class_tag == "BS_hom":
            origin = (_sq(xi) + _sq(eta)) == 0
            out = np.where(origin, 0.0, out)
        return out

    def scaled(self, c: float) -> "BilinearSymbol":
        return BilinearSymbol(lambda x, y: c * self.evaluator(x, y), self.order, self.class_tag, f"{c}*{self.name}")

    def on_grid(self, grid: PeriodicGrid) -> np.ndarray:
        """Symbol matrix ``S[k, l]`` over flat frequency indices."""
        xi = grid.freqs.reshape(grid.n, -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self(xi[:, :, None], xi[:, None, :]), dtype=complex if self._complex(grid) else float)

    def _complex(self, grid):
        probe = np.asarray(self.evaluator(np.ones((grid.n, 1)), np.ones((grid.n, 1))))
        return np.iscomplexobj(probe)


@lru_cache(maxsize=16)
def _sum_index(n: int, N: int) -> np.ndarray:
    """Flat index of the aliased sum frequency ``k + l`` for flat ``k``, ``l``."""
    M = N**n
    coords = np.stack(np.unravel_index(np.arange(M), (N,) * n), axis=-1)
    s = (coords[:, None, :] + coords[None, :, :]) % N
    idx = np.ravel_multi_index(tuple(s[..., i] for i in range(n)), (N,) * n)
    idx.setflags(write=False)
    return idx


def _coeffs(f: GridFunction) -> np.ndarray:
    return (np.fft.fftn(f.values) / f.grid.size).reshape(-1)


def _finish(grid, coeffs, real_hint):
    v = np.fft.ifftn(coeffs.reshape(grid.shape)) * grid.size
    if real_hint and np.max(np.abs(v.imag), initial=0.0) <= 1e-10 * max(np.max(np.abs(v)), 1e-300):
        v = v.real.copy()
    return GridFunction(grid, v)


def eval_Tsigma(sigma: BilinearSymbol, f: GridFunction, g: GridFunction) -> GridFunction:
    """Frequency double sum grouped by the aliased output frequency."""
    grid = f.grid
    S = sigma.on_grid(grid)
    A = S * np.outer(_coeffs(f), _coeffs(g))
    idx = _sum_index(grid.n, grid.N).reshape(-1)
    A = A.reshape(-1)
    out = np.bincount(idx, weights=A.real, minlength=grid.size).astype(complex)
    out += 1j * np.bincount(idx, weights=A.imag, minlength=grid.size)
    return _finish(grid, out, f.is_real and g.is_real)


def symbol_kernel(sigma: BilinearSymbol, grid: PeriodicGrid) -> np.ndarray:
    """Kernel table over offsets ``(u, v)``, shape ``(N,)*2n``, complex unless real."""
    S = sigma.on_grid(grid).reshape((grid.N,) * (2 * grid.n))
    k = np.fft.ifftn(S) * (grid.size**2) / grid.volume**2
    if np.max(np.abs(k.imag), initial=0.0) <= 1e-12 * max(np.max(np.abs(k)), 1e-300):
        k = k.real.copy()
    return k


def kernel_distances(grid: PeriodicGrid) -> tuple[np.ndarray, np.ndarray]:
    """``|u| + |v|`` and ``|(u, v)|`` over the 2n-dimensional offset table."""
    d = grid.dist_from_origin.reshape(-1)
    shape = (grid.N,) * (2 * grid.n)
    l1 = (d[:, None] + d[None, :]).reshape(shape)
    l2 = np.sqrt(d[:, None] ** 2 + d[None, :] ** 2).reshape(shape)
    return l1, l2


def _check_s(s, n):
    if not 0 < s < 2 * n:
        raise ValueError(f"s must lie in (0, {2 * n})")


def kernel_decay_constant(sigma: BilinearSymbol, s: float, grid: PeriodicGrid) -> float:
    """``sup |k(u,v)| (|u|+|v|)^(2n-s)`` over ``h <= |u|+|v| <= L/4``."""
    _check_s(s, grid.n)
    k = np.abs(symbol_kernel(sigma, grid))
    t, _ = kernel_distances(grid)
    m = (t >= grid.h * (1 - 1e-12)) & (t <= grid.L / 4)
    return float(np.max(k[m] * t[m] ** (2 * grid.n - s), initial=0.0))


def kernel_domination_constant(sigma: BilinearSymbol, s: float, grid: PeriodicGrid) -> float:
    """
    ``max |k(u,v)| (|u|+|v|)^(2n-s)`` over every offset, the diagonal cell
    taken at the distance matching its weight in ``I_s``; the smallest
    constant for which ``|k|`` sits below the quadrature kernel of ``I_s``
    cell by cell.
    """
    _check_s(s, grid.n)
    k = np.abs(symbol_kernel(sigma, grid))
    t, _ = kernel_distances(grid)
    t = t.copy()
    t.flat[0] = diagonal_distance(grid, 2, 2 * grid.n - s)
    return float(np.max(k * t ** (2 * grid.n - s)))


def shell_decay_check(sigma: BilinearSymbol, s: float, t_list, grid: PeriodicGrid,
                      powers=(2, 4)) -> CheckReport:
    """
    For each scale ``t`` window the symbol with ``Psi(t |(xi, eta)|)``
    (``Psi`` supported on ``[1, 2]``) and report
    ``sup |k_t(u,v)| t^(2n-s) (1 + |(u,v)|/t)^N`` for each ``N`` in ``powers``.
    """
    n = grid.n
    _, dist = kernel_distances(grid)
    table = {}
    for t in t_list:
        windowed = BilinearSymbol(
            lambda x, y, t=t: sigma(x, y) * cutoffs.annulus_window(t * np.sqrt(_sq(x) + _sq(y))),
            sigma.order, "unclassified", f"{sigma.name}|shell")
        k = np.abs(symbol_kernel(windowed, grid))
        base = k * t ** (2 * n - s)
        table[float(t)] = {int(N): float(np.max(base * (1 + dist / t) ** N)) for N in powers}
    values = [v for row in table.values() for v in row.values()]
    worst = max(values) if values else 0.0
    return CheckReport("shell_decay", worst, passed=all(math.isfinite(v) for v in values),
                       details={"constants": table})


def _multi_indices(dim: int, max_order: int):
    for total in range(max_order + 1):
        for combo in itertools.product(range(total + 1), repeat=dim):
            if sum(combo) == total:
                yield combo


def seminorm_estimate(sigma: BilinearSymbol, max_order: int, grid: PeriodicGrid,
                      weight: str = "class", exclude_below: float | None = None) -> dict:
    """
    Finite-difference symbol seminorms on the frequency grid.

    For every multi-index ``a`` over the ``2n`` frequency coordinates with
    ``|a| <= max_order`` returns ``sup |D^a sigma| w_a`` where ``D^a`` is a
    product of centered differences with the grid frequency step and

    * ``weight="class"``: ``w_a = (1 + |xi| + |eta|)^(-order + |a|)``
    * ``weight="cm"``: ``w_a = (|xi| + |eta|)^|a|``, points with
      ``|xi| + |eta| < exclude_below`` (default 1) skipped.

    Keys are the multi-indices (``xi`` components first).
    """
    if max_order > 4:
        raise ValueError("max_order must be <= 4")
    n = grid.n
    step = 2 * math.pi / grid.L
    xi = grid.freqs.reshape(n, -1)
    X = np.repeat(xi, xi.shape[1], axis=1)
    E = np.tile(xi, (1, xi.shape[1]))
    P = np.concatenate([X, E], axis=0)
    size = np.sqrt(_sq(X)) + np.sqrt(_sq(E))
    if weight == "class":
        keep = np.ones(size.shape, bool)
    elif weight == "cm":
        keep = size >= (1.0 if exclude_below is None else exclude_below)
    else:
        raise ValueError(f"unknown weight {weight!r}")
    P = P[:, keep]
    size = size[keep]
    out = {}
    for a in _multi_indices(2 * n, max_order):
        acc = np.zeros(P.shape[1], dtype=complex)
        for js in itertools.product(*(range(ai + 1) for ai in a)):
            coef = 1.0
            Q = P.copy()
            for i, (ai, j) in enumerate(zip(a, js)):
                coef *= (-1) ** j * math.comb(ai, j)
                Q[i] += (ai / 2 - j) * step
            acc += coef * sigma(Q[:n], Q[n:])
        acc = np.abs(acc) / step ** sum(a)
        if weight == "class":
            w = (1 + size) ** (-sigma.order + sum(a))
        else:
            w = size ** sum(a)
        out[a] = float(np.max(acc * w, initial=0.0))
    return out


def tsigma_domination_check(sigma: BilinearSymbol, s: float, f: GridFunction, g: GridFunction,
                            slack: float = 0.05) -> CheckReport:
    """
    Pointwise ``|T_sigma(f,g)| <= (1 + slack) C I_s(|f|,|g|)`` with ``C`` the
    kernel decay constant over ``h <= |u|+|v| <= L/4``.

    The slack absorbs the cells outside that range (the diagonal cell in
    particular); ``details`` also reports the constant that makes
    the bound hold cell by cell.
    """
    grid = f.grid
    C = kernel_decay_constant(sigma, s, grid)
    lhs = np.abs(eval_Tsigma(sigma, f, g).values)
    rhs = C * bilinear_I(abs(f), abs(g), s).values
    pos = rhs > 0
    ratio = float(np.max(lhs[pos] / rhs[pos], initial=0.0))
    bad = bool(np.any(lhs[~pos] > 1e-14 * max(f.sup() * g.sup(), 1e-300)))
    return CheckReport("tsigma_domination", ratio, passed=(ratio <= 1 + slack) and not bad,
                       details={"constant": C, "cellwise_constant": kernel_domination_constant(sigma, s, grid),
                                "slack": slack})


def _japanese(v):
    return 1.0 + _sq(v)


def decompose_frequency(m_order: float, s: float) -> tuple[BilinearSymbol, BilinearSymbol]:
    """
    ``sigma1 = <xi+eta>^m phi(<xi>^2/<eta>^2) <eta>^-(m+s)`` and its mirror
    ``sigma2`` (``<.>^2 = 1 + |.|^2``), where ``phi = 1`` on ``[0, 1/2]``,
    vanishes beyond 2 and ``phi(r) + phi(1/r) = 1``.  ``sigma1`` lives where
    ``eta`` dominates, so

    ``J^m(fg) = T_sigma1(f, J^(m+s) g) + T_sigma2(J^(m+s) f, g)``.
    """
    m, s = float(m_order), float(s)

    def s1(x, y):
        return _japanese(x + y) ** (m / 2) * cutoffs.ratio_cutoff(_japanese(x) / _japanese(y)) * _japanese(y) ** (-(m + s) / 2)

    def s2(x, y):
        return _japanese(x + y) ** (m / 2) * cutoffs.ratio_cutoff(_japanese(y) / _japanese(x)) * _japanese(x) ** (-(m + s) / 2)

    return (BilinearSymbol(s1, -s, "BS_inhom", f"decoup1(m={m},s={s})"),
            BilinearSymbol(s2, -s, "BS_inhom", f"decoup2(m={m},s={s})"))


def decompose_three_way(m_order: float, s: float) -> tuple[BilinearSymbol, BilinearSymbol, BilinearSymbol]:
    """
    As :func:`decompose_frequency` with the narrow cutoff (support ``[0, 1/2]``)
    plus the balanced piece ``sigma3 = <xi+eta>^m phi~(<xi>^2/<eta>^2)``
    supported on ratios in ``[1/4, 4]``:

    ``J^m(fg) = T_sigma1(f, J^(m+s) g) + T_sigma2(J^(m+s) f, g) + T_sigma3(f, g)``.
    """
    m, s = float(m_order), float(s)

    def s1(x, y):
        return _japanese(x + y) ** (m / 2) * cutoffs.ratio_cutoff_narrow(_japanese(x) / _japanese(y)) * _japanese(y) ** (-(m + s) / 2)

    def s2(x, y):
        return _japanese(x + y) ** (m / 2) * cutoffs.ratio_cutoff_narrow(_japanese(y) / _japanese(x)) * _japanese(x) ** (-(m + s) / 2)

    def s3(x, y):
        return _japanese(x + y) ** (m / 2) * cutoffs.ratio_cutoff_balanced(_japanese(x) / _japanese(y))

    return (BilinearSymbol(s1, -s, "BS_inhom", f"three1(m={m},s={s})"),
            BilinearSymbol(s2, -s, "BS_inhom", f"three2(m={m},s={s})"),
            BilinearSymbol(s3, m, "unclassified", f"three3(m={m},s={s})"))


def _relative_sup(a: GridFunction, b: GridFunction) -> float:
    scale = b.sup()
    err = (a - b).sup()
    return err / scale if scale > 0 else err


def freqdecoup_residual(m_order: float, s: float, f: GridFunction, g: GridFunction) -> float:
    """Relative sup residual of the two-piece identity (inputs assumed band-limited)."""
    s1, s2 = decompose_frequency(m_order, s)
    lhs = bessel_Js(f * g, m_order)
    rhs = eval_Tsigma(s1, f, bessel_Js(g, m_order + s)) + eval_Tsigma(s2, bessel_Js(f, m_order + s), g)
    return _relative_sup(rhs, lhs)


def three_way_residual(m_order: float, s: float, f: GridFunction, g: GridFunction) -> float:
    s1, s2, s3 = decompose_three_way(m_order, s)
    lhs = bessel_Js(f * g, m_order)
    rhs = (eval_Tsigma(s1, f, bessel_Js(g, m_order + s))
           + eval_Tsigma(s2, bessel_Js(f, m_order + s), g)
           + eval_Tsigma(s3, f, g))
    return _relative_sup(rhs, lhs)


def theta_kernel(sigma0: Callable, grid: PeriodicGrid) -> np.ndarray:
    """``k(y) = L^-n sum_zeta sigma0(zeta) e^{-i zeta y}``, flattened."""
    S = np.asarray(sigma0(grid.freqs), dtype=complex)
    k = np.fft.fftn(S) / grid.volume
    if np.max(np.abs(k.imag)) <= 1e-12 * max(np.max(np.abs(k)), 1e-300):
        k = k.real.copy()
    return k.reshape(-1)


def eval_Ttheta(sigma0: Callable, f: GridFunction, g: GridFunction) -> GridFunction:
    """
    Operator with symbol ``sigma0(xi - eta)`` (the ``tan(theta) = 1`` case) as
    the kernel sum ``h^n sum_y k(y) f(x+y) g(x-y)``.
    """
    grid = f.grid
    k = theta_kernel(sigma0, grid)
    F = np.asarray(f.values).reshape(-1)[offset_indices(grid, -1)]
    G = np.asarray(g.values).reshape(-1)[offset_indices(grid, 1)]
    out = (F * G) @ (grid.cell * k)
    if f.is_real and g.is_real and np.iscomplexobj(out):
        if np.max(np.abs(out.imag)) <= 1e-10 * max(np.max(np.abs(out)), 1e-300):
            out = out.real.copy()
    return GridFunction(grid, out.reshape(grid.shape))


def ttheta_domination_check(sigma0: Callable, s: float, f: GridFunction, g: GridFunction) -> CheckReport:
    """
    Pointwise ``|T(f,g)| <= C B_s(|f|,|g|)`` with
    ``C = max_y |k(y)| |y|^(n-s)`` (shifts (1, -1)), the origin taken at the
    distance matching its weight in ``B_s``.
    """
    grid = f.grid
    if not 0 < s < grid.n:
        raise ValueError(f"s must lie in (0, {grid.n})")
    k = np.abs(theta_kernel(sigma0, grid))
    d = grid.dist_from_origin.reshape(-1).copy()
    d[0] = diagonal_distance(grid, 1, grid.n - s)
    C = float(np.max(k * d ** (grid.n - s)))
    lhs = np.abs(eval_Ttheta(sigma0, f, g).values)
    rhs = C * bilinear_B(abs(f), abs(g), s).values
    pos = rhs > 0
    ratio = float(np.max(lhs[pos] / rhs[pos], initial=0.0))
    bad = bool(np.any(lhs[~pos] > 1e-14 * max(f.sup() * g.sup(), 1e-300)))
    return CheckReport("ttheta_domination", ratio, passed=(ratio <= 1 + 1e-12) and not bad,
                       details={"constant": C})


# registry -------------------------------------------------------------------

def _one(**_):
    return BilinearSymbol(lambda x, y: np.ones(np.broadcast_shapes(x.shape[1:], y.shape[1:])), 0.0, "BS_inhom", "one")


def _bessel(s=1.0, **_):
    s = float(s)
    return BilinearSymbol(lambda x, y: (1 + _sq(x) + _sq(y)) ** (-s / 2), -s, "BS_inhom", f"bessel_order(s={s})")


def _homogeneous(s=1.0, **_):
    s = float(s)

    def ev(x, y):
        r2 = _sq(x) + _sq(y)
        with np.errstate(divide="ignore"):
            return np.where(r2 > 0, r2 ** (-s / 2), 0.0)

    return BilinearSymbol(ev, -s, "BS_hom", f"homogeneous_order(s={s})")


def _gaussian(**_):
    return BilinearSymbol(lambda x, y: np.exp(-_sq(x) - _sq(y)), -math.inf, "BS_inhom", "gaussian")


def _cm(index):
    def make(m=0.0, s=0.0, **_):
        return decompose_frequency(m, s)[index]
    return make


def _three(index):
    def make(m=1.0, s=0.5, **_):
        return decompose_three_way(m, s)[index]
    return make


def _theta_bessel(s=0.5, **_):
    s = float(s)
    return BilinearSymbol(lambda x, y: (1 + _sq(x - y)) ** (-s / 2), -s, "BS_theta", f"theta_bessel(s={s})")


SYMBOLS = {
    "one": _one,
    "bessel_order": _bessel,
    "homogeneous_order": _homogeneous,
    "gaussian": _gaussian,
    "cm_sigma1": _cm(0),
    "cm_sigma2": _cm(1),
    "three_way_sigma1": _three(0),
    "three_way_sigma2": _three(1),
    "three_way_sigma3": _three(2),
    "theta_bessel": _theta_bessel,
}


def make_symbol(key: str, params: dict | None = None) -> BilinearSymbol:
    try:
        factory = SYMBOLS[key]
    except KeyError:
        raise ValueError(f"unknown symbol {key!r}") from None
    return factory(**(params or {}))
