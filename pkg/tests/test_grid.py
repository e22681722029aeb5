import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bihat.grid import (
    Ball,
    GridFunction,
    PeriodicGrid,
    from_spectral,
    gradient,
    lp_norm,
    quad_integral,
    to_spectral,
    torus_dist,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        PeriodicGrid(3, 64)
    with pytest.raises(ValueError):
        PeriodicGrid(1, 100)
    with pytest.raises(ValueError):
        PeriodicGrid(1, 64, -1.0)


def test_spectral_constant(grid1):
    c = to_spectral(grid1.constant(1.0)).coefficients
    assert c[0] == pytest.approx(1.0, abs=1e-15)
    assert np.max(np.abs(c[1:])) < 1e-15


def test_spectral_cos(grid1):
    c = to_spectral(grid1.sample(np.cos))
    assert c.coefficient(1) == pytest.approx(0.5, abs=1e-14)
    assert c.coefficient(-1) == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("n,N", [(1, 64), (2, 16)])
def test_round_trip(n, N):
    g = PeriodicGrid(n, N)
    f = GridFunction(g, np.random.default_rng(1).standard_normal(g.shape))
    back = from_spectral(to_spectral(f))
    assert back.is_real
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * f.sup()


def test_quadrature_examples(grid1):
    assert quad_integral(grid1.constant()) == pytest.approx(2 * math.pi, rel=1e-14)
    half = quad_integral(grid1.constant(), Ball(0.0, math.pi / 2))
    assert abs(half - math.pi) <= grid1.h
    assert abs(quad_integral(grid1.sample(np.sin))) < 1e-12


def test_degenerate_ball(grid1):
    with pytest.raises(ValueError, match="degenerate ball"):
        quad_integral(grid1.constant(), Ball(0.0, grid1.h / 2))


def test_torus_dist_examples():
    assert torus_dist(0.5, 6.0) == pytest.approx(2 * math.pi - 5.5, abs=1e-15)
    assert torus_dist(0.7831853, 0.7831853) == 0
    assert torus_dist((0.0, 0.0), (math.pi, math.pi), n=2) == pytest.approx(math.pi * math.sqrt(2))


def test_torus_dist_metric():
    rng = np.random.default_rng(0)
    x, y, z = (rng.uniform(0, 2 * math.pi, (10_000, 2)) for _ in range(3))
    dxy, dyx = torus_dist(x, y, n=2), torus_dist(y, x, n=2)
    assert np.array_equal(dxy, dyx)
    assert np.all(dxy <= torus_dist(x, z, n=2) + torus_dist(z, y, n=2) + 1e-12)


def test_gradient_examples(grid1):
    (d,) = gradient(grid1.sample(np.sin))
    assert np.max(np.abs(d.values - np.cos(grid1.axis))) < 1e-12
    (d,) = gradient(grid1.constant(3.0))
    assert d.sup() < 1e-12
    (d,) = gradient(grid1.sample(lambda x: np.cos(3 * x)))
    assert np.max(np.abs(d.values + 3 * np.sin(3 * grid1.axis))) < 1e-12


def test_gradient_2d(grid2):
    f = grid2.sample(lambda x, y: np.sin(x) * np.cos(2 * y))
    dx, dy = gradient(f)
    x, y = grid2.points[..., 0], grid2.points[..., 1]
    assert np.max(np.abs(dx.values - np.cos(x) * np.cos(2 * y))) < 1e-12
    assert np.max(np.abs(dy.values + 2 * np.sin(x) * np.sin(2 * y))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.integers(1, 10))
def test_gradient_trig_poly(coef, k):
    g = PeriodicGrid(1, 64)
    a, b, c, d = coef
    x = g.axis
    f = g.function(a + b * np.cos(k * x) + c * np.sin(k * x) + d * np.cos(2 * k * x))
    exact = -b * k * np.sin(k * x) + c * k * np.cos(k * x) - 2 * d * k * np.sin(2 * k * x)
    assert np.max(np.abs(gradient(f)[0].values - exact)) <= 1e-10 * max(1.0, np.max(np.abs(exact)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 64), (2, 16)]))
def test_parseval(seed, shape):
    g = PeriodicGrid(*shape)
    f = g.function(np.random.default_rng(seed).standard_normal(g.shape))
    lhs = quad_integral(abs(f) ** 2)
    rhs = g.volume * np.sum(np.abs(to_spectral(f).coefficients) ** 2)
    assert abs(lhs - rhs) <= 1e-10 * rhs


def test_lp_norm_sup_and_weight(grid1):
    f = grid1.sample(np.cos)
    assert lp_norm(f, math.inf) == pytest.approx(1.0)
    assert lp_norm(f, 2, weight=grid1.constant(4.0)) == pytest.approx(2 * math.sqrt(math.pi))
