"""Deterministic test functions and power weights."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, PeriodicGrid

__all__ = [
    "FunctionFamily",
    "make_gaussian",
    "make_bump",
    "make_modulated_packet",
    "make_trig_poly",
    "make_power_weight",
    "FAMILY_KINDS",
]


def _center(grid: PeriodicGrid, center):
    c = np.atleast_1d(np.asarray(center, dtype=float))
    return np.broadcast_to(c, (grid.n,))


def _check_width(grid, width, reach=3.0):
    if width <= 0:
        raise ValueError("width must be positive")
    if reach * width > grid.L / 4 + 1e-12:
        raise ValueError("support exceeds L/4")


def make_gaussian(grid: PeriodicGrid, center=0.0, width=0.1, amplitude=1.0) -> GridFunction:
    """``amplitude * exp(-d(x, center)^2 / (2 width^2))`` with torus distance ``d``."""
    _check_width(grid, width)
    d = grid.dist_to(_center(grid, center))
    return GridFunction(grid, amplitude * np.exp(-(d**2) / (2 * width**2)))


def make_bump(grid: PeriodicGrid, center=0.0, width=0.5, amplitude=1.0) -> GridFunction:
    """Compactly supported ``exp(1 - 1/(1 - (d/width)^2))``, peak ``amplitude``."""
    _check_width(grid, width, reach=1.0)
    d = grid.dist_to(_center(grid, center)) / width
    v = np.zeros(grid.shape)
    inside = d < 1
    v[inside] = np.exp(1.0 - 1.0 / (1.0 - d[inside] ** 2))
    return GridFunction(grid, amplitude * v)


def make_modulated_packet(grid: PeriodicGrid, center=0.0, width=0.1, freq=0.0, amplitude=1.0) -> GridFunction:
    """Gaussian envelope times ``cos(freq * (x_1 - c_1))``.

    ``freq`` must be an integer multiple of ``2 pi / L`` so the packet is periodic.
    """
    k = freq * grid.L / (2 * math.pi)
    if abs(k - round(k)) > 1e-9:
        raise ValueError("freq must be an integer multiple of 2*pi/L")
    env = make_gaussian(grid, center, width, amplitude)
    c = _center(grid, center)
    phase = freq * (grid.points[..., 0] - c[0])
    return GridFunction(grid, env.values * np.cos(phase))


def make_trig_poly(grid: PeriodicGrid, degree=3, amplitude=1.0, seed=0) -> GridFunction:
    """Real trigonometric polynomial with seeded standard-normal coefficients."""
    if 2 * degree >= grid.N // 2:
        raise ValueError("degree too high for the grid")
    rng = np.random.default_rng(seed)
    ks = list(itertools.product(range(-degree, degree + 1), repeat=grid.n))
    coef = rng.standard_normal((len(ks), 2))
    v = np.zeros(grid.shape)
    x = [grid.points[..., i] * (2 * math.pi / grid.L) for i in range(grid.n)]
    for (a, b), k in zip(coef, ks):
        arg = sum(ki * xi for ki, xi in zip(k, x))
        v += a * np.cos(arg) + b * np.sin(arg)
    v *= amplitude / max(np.max(np.abs(v)), 1e-300)
    return GridFunction(grid, v)


def make_power_weight(a: float, x0, grid: PeriodicGrid) -> GridFunction:
    """``max(d(x, x0), h/2)^a``; the floor keeps the singular cell finite."""
    d = np.maximum(grid.dist_to(_center(grid, x0)), grid.h / 2)
    return GridFunction(grid, d**a)


_MAKERS = {
    "gaussian": make_gaussian,
    "bump": make_bump,
    "modulated_packet": make_modulated_packet,
    "trig_poly": make_trig_poly,
}
FAMILY_KINDS = tuple(_MAKERS) + ("constant", "zero")


@dataclass(frozen=True)
class FunctionFamily:
    """
    Finite Cartesian sweep of one constructor.

    ``params`` maps constructor keyword names to lists of values; members are
    generated in the order of ``itertools.product`` over the keys as given.
    ``kind="constant"`` takes a ``value`` list, ``kind="zero"`` has one member.
    """

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        params = {k: (list(v) if isinstance(v, (list, tuple)) else [v]) for k, v in self.params.items()}
        object.__setattr__(self, "params", params)

    def parameter_sets(self) -> list[dict]:
        keys = list(self.params)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.params[k] for k in keys))]

    def members(self, grid: PeriodicGrid) -> list[GridFunction]:
        if self.kind == "zero":
            return [grid.constant(0.0)]
        if self.kind == "constant":
            return [grid.constant(float(p["value"])) for p in self.parameter_sets()]
        maker = _MAKERS[self.kind]
        out = []
        for i, p in enumerate(self.parameter_sets()):
            if self.kind == "trig_poly":
                p = {"seed": self.seed + i, **p}
            out.append(maker(grid, **p))
        return out

    def labels(self) -> list[str]:
        if self.kind == "zero":
            return ["zero"]
        return [
            self.kind + "(" + ",".join(f"{k}={v}" for k, v in p.items()) + ")"
            for p in self.parameter_sets()
        ]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "seed": self.seed}
