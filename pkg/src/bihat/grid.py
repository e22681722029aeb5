"""
Periodic grids on the n-torus, sampled functions and their Fourier coefficients.

The torus is ``[0, L)^n`` with ``n`` in {1, 2}.  Samples are stored as arrays of
shape ``(N,)*n`` in lexicographic (``ij``) order, Fourier coefficients in numpy's
FFT order.  The coefficient convention is

.. math:: c_k = N^{-n} \\sum_j f(x_j) e^{-i x_j \\cdot \\xi_k}, \\qquad
          f(x_j) = \\sum_k c_k e^{i x_j \\cdot \\xi_k}

with frequencies ``xi_k = 2 pi k / L`` for ``k`` in ``[-N/2, N/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "PeriodicGrid",
    "GridFunction",
    "SpectralFunction",
    "Ball",
    "to_spectral",
    "from_spectral",
    "quad_integral",
    "torus_dist",
    "gradient",
    "grad_magnitude",
    "band_limit",
    "lp_norm",
]


def _freeze(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid with ``N`` points per axis on the torus of side ``L``."""

    n: int
    N: int
    L: float = 2 * math.pi

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two >= 8")
        if not self.L > 0:
            raise ValueError("period L must be positive")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @property
    def cell(self) -> float:
        """Volume ``h^n`` of one quadrature cell."""
        return self.h**self.n

    @property
    def volume(self) -> float:
        return self.L**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return _freeze(np.arange(self.N) * self.h)

    @cached_property
    def points(self) -> np.ndarray:
        """Grid points, shape ``shape + (n,)``."""
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return _freeze(np.stack(mesh, axis=-1))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers per axis in FFT order."""
        return _freeze(np.fft.fftfreq(self.N, 1.0 / self.N))

    @cached_property
    def freq_axis(self) -> np.ndarray:
        return _freeze(2 * np.pi / self.L * self.wavenumbers)

    @cached_property
    def freqs(self) -> np.ndarray:
        """Frequency vectors, shape ``(n,) + shape``."""
        mesh = np.meshgrid(*([self.freq_axis] * self.n), indexing="ij")
        return _freeze(np.stack(mesh, axis=0))

    @cached_property
    def freq_norm2(self) -> np.ndarray:
        return _freeze(np.sum(self.freqs**2, axis=0))

    @cached_property
    def dist_from_origin(self) -> np.ndarray:
        """Torus distance of every grid point to the origin."""
        return _freeze(self.dist_to(np.zeros(self.n)))

    def dist_to(self, point) -> np.ndarray:
        p = np.broadcast_to(np.asarray(point, float), (self.n,))
        if self.n == 1:
            return torus_dist(self.points[..., 0], p[0], self.L, n=1)
        return torus_dist(self.points, p, self.L, n=self.n)

    def refine(self, factor: int = 2) -> "PeriodicGrid":
        return PeriodicGrid(self.n, self.N * factor, self.L)

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def constant(self, c=1.0) -> "GridFunction":
        return GridFunction(self, np.full(self.shape, c, dtype=float))

    def sample(self, func) -> "GridFunction":
        """Evaluate ``func`` on the grid; ``func`` receives one array per axis."""
        coords = [self.points[..., i] for i in range(self.n)]
        return GridFunction(self, np.broadcast_to(func(*coords), self.shape))


def torus_dist(x, y, L: float = 2 * math.pi, n: int | None = None):
    """
    Minimal-image distance on the torus of side ``L``.

    With ``n == 1`` (or scalar inputs) every array entry is a point; otherwise
    the last axis holds the coordinates.  Broadcasting follows numpy rules.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.abs(x - y) % L
    d = np.minimum(d, L - d)
    if n == 1 or d.ndim == 0:
        return d
    return np.sqrt(np.sum(d * d, axis=-1))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} samples, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.iscomplexobj(v):
            v = v.astype(float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def _wrap(self, v):
        return GridFunction(self.grid, v)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return other.values
        return other

    def __add__(self, other):
        return self._wrap(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.values)

    def __mul__(self, other):
        return self._wrap(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / self._other(other))

    def __neg__(self):
        return self._wrap(-self.values)

    def __abs__(self):
        return self._wrap(np.abs(self.values))

    def __pow__(self, p):
        return self._wrap(self.values**p)

    def real(self):
        return self._wrap(self.values.real.copy())

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def mean(self) -> float:
        return float(np.mean(self.values).real)


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    grid: PeriodicGrid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex).reshape(self.grid.shape)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def coefficient(self, *k: int) -> complex:
        """Coefficient at integer wavenumber ``k`` (negative values allowed)."""
        return complex(self.coefficients[tuple(ki % self.grid.N for ki in k)])

    def multiply(self, multiplier) -> "SpectralFunction":
        return SpectralFunction(self.grid, self.coefficients * multiplier)


def to_spectral(f: GridFunction) -> SpectralFunction:
    g = f.grid
    return SpectralFunction(g, np.fft.fftn(f.values) / g.size)


def from_spectral(c: SpectralFunction, real: bool | None = None) -> GridFunction:
    """Inverse of :func:`to_spectral`.

    With ``real=True`` the imaginary part is discarded; with ``None`` it is
    discarded when the coefficients are conjugate-symmetric up to rounding.
    """
    g = c.grid
    v = np.fft.ifftn(c.coefficients) * g.size
    if real is None:
        real = bool(np.max(np.abs(v.imag), initial=0.0) <= 1e-13 * max(np.max(np.abs(v)), 1e-300))
    return GridFunction(g, v.real.copy() if real else v)


def apply_multiplier(f: GridFunction, multiplier: np.ndarray) -> GridFunction:
    """Fourier multiplier; real input and even real multiplier give real output."""
    out = np.fft.ifftn(np.fft.fftn(f.values) * multiplier)
    if f.is_real and np.isrealobj(multiplier):
        out = out.real.copy()
    return GridFunction(f.grid, out)


def band_limit(f: GridFunction, fraction: float = 0.25) -> GridFunction:
    """Zero all modes with ``|k_i| >= fraction * N`` on any axis."""
    g = f.grid
    keep = np.abs(g.wavenumbers) < fraction * g.N
    mask = np.ones(g.shape, dtype=bool)
    for i in range(g.n):
        shape = [1] * g.n
        shape[i] = g.N
        mask = mask & keep.reshape(shape)
    return apply_multiplier(f, mask.astype(float))


@dataclass(frozen=True)
class Ball:
    """Open ball on the torus; ``radius >= L/2`` stands for the whole torus."""

    center: tuple
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def covers_torus(self, grid: PeriodicGrid) -> bool:
        return self.radius >= grid.L / 2

    def dilate(self, factor: float, grid: PeriodicGrid | None = None) -> "Ball":
        r = self.radius * factor
        if grid is not None:
            r = min(r, grid.L / 2)
        return Ball(self.center, r)

    def mask(self, grid: PeriodicGrid) -> np.ndarray:
        if self.covers_torus(grid):
            return np.ones(grid.shape, dtype=bool)
        return grid.dist_to(self.center[: grid.n]) < self.radius

    def measure(self, grid: PeriodicGrid) -> float:
        """|B| by midpoint quadrature of the indicator."""
        return float(np.count_nonzero(self.mask(grid))) * grid.cell

    def check(self, grid: PeriodicGrid, min_cells: float = 1.0) -> None:
        if self.radius < min_cells * grid.h:
            if min_cells <= 1.0:
                raise ValueError("degenerate ball")
            raise ValueError(f"ball too small: radius {self.radius} < {min_cells}h")


def _region_mask(grid, region):
    if region is None:
        return None
    region.check(grid)
    return region.mask(grid)


def quad_integral(f: GridFunction, region: Ball | None = None):
    """Midpoint rule ``h^n sum f(x_j)`` over the region (whole torus if None)."""
    g = f.grid
    v = f.values
    m = _region_mask(g, region)
    if m is not None:
        v = v[m]
    total = np.sum(v)
    return (total.real if not np.iscomplexobj(v) else total) * g.cell


def lp_norm(f: GridFunction, p: float, region: Ball | None = None, weight: GridFunction | None = None) -> float:
    """Quadrature ``L^p`` (quasi-)norm, ``p = inf`` gives the max over the region."""
    g = f.grid
    a = np.abs(f.values)
    w = None if weight is None else weight.values
    m = _region_mask(g, region)
    if m is not None:
        a = a[m]
        w = None if w is None else w[m]
    if math.isinf(p):
        return float(np.max(a, initial=0.0))
    if w is None:
        return float((np.sum(a**p) * g.cell) ** (1.0 / p))
    return float((np.sum(a**p * w) * g.cell) ** (1.0 / p))


def gradient(f: GridFunction) -> tuple[GridFunction, ...]:
    """Spectral gradient, one component per axis.

    The Nyquist mode is dropped so real input stays real.
    """
    g = f.grid
    if not f.is_real:
        raise ValueError("gradient expects a real-valued function")
    c = np.fft.fftn(f.values)
    nyq = np.abs(g.wavenumbers) == g.N // 2
    out = []
    for j in range(g.n):
        xi = np.where(nyq, 0.0, g.freq_axis)
        shape = [1] * g.n
        shape[j] = g.N
        comp = np.fft.ifftn(1j * xi.reshape(shape) * c).real
        out.append(GridFunction(g, comp))
    return tuple(out)


def grad_magnitude(f: GridFunction) -> GridFunction:
    comps = gradient(f)
    if len(comps) == 1:
        return abs(comps[0])
    return GridFunction(f.grid, np.sqrt(sum(c.values**2 for c in comps)))
