import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bihat.grid import Ball, PeriodicGrid, lp_norm
from bihat.semigroup import (
    HeatSemigroup,
    apply_St,
    apply_tdtSt,
    bilinear_oscillation,
    dilated_balls,
    double_smoothed_oscillation,
    kernel_poisson_bound_check,
    poincare_rhs_series,
    representation_formula_check,
)
from bihat.testbed import make_gaussian


def _periodized_gaussian(x, width, L=2 * math.pi, images=5):
    return sum(np.exp(-((x - k * L) ** 2) / (2 * width**2)) for k in range(-images, images + 1))


def test_St_examples(grid1):
    assert np.max(np.abs(apply_St(grid1.constant(), 0.3).values - 1)) < 1e-15
    cos = grid1.sample(np.cos)
    assert np.max(np.abs(apply_St(cos, 1.0).values - math.exp(-1) * cos.values)) < 1e-12


def test_St_gaussian_closed_form():
    g = PeriodicGrid(1, 256)
    w, t = 0.2, 0.005
    x = g.axis
    f = g.function(_periodized_gaussian(x, w))
    w2 = math.sqrt(w**2 + 2 * t)
    oracle = w / w2 * _periodized_gaussian(x, w2)
    assert np.max(np.abs(apply_St(f, t).values - oracle)) < 1e-8


def test_tdtSt(grid1):
    assert apply_tdtSt(grid1.constant(), 1.0).sup() == 0
    cos = grid1.sample(np.cos)
    assert np.max(np.abs(apply_tdtSt(cos, 1.0).values + math.exp(-1) * cos.values)) < 1e-12
    f = make_gaussian(grid1, 0.0, 0.2)
    t, d = 0.01, 1e-5
    fd = (apply_St(f, t + d).values - apply_St(f, t - d).values) * t / (2 * d)
    assert np.max(np.abs(apply_tdtSt(f, t).values - fd)) < 1e-6


def test_poisson_bound():
    g = PeriodicGrid(1, 256)
    rep = kernel_poisson_bound_check(g, 0.01, 1.0)
    assert rep.passed
    assert rep.details["at_origin"] == pytest.approx((4 * math.pi) ** -0.5, abs=1e-6)
    assert kernel_poisson_bound_check(g, 0.01, 4.0).value >= rep.value


def test_oscillation_examples(grid1):
    sg = HeatSemigroup(grid1)
    B = Ball(0.0, 0.5)
    c = grid1.constant(2.0)
    assert bilinear_oscillation(c, c, B, sg).sup() == 0
    assert double_smoothed_oscillation(c, c, B, sg).sup() == 0
    cos = grid1.sample(np.cos)
    m = B.mask(grid1)
    o = bilinear_oscillation(cos, grid1.constant(), B, sg).values
    assert np.max(np.abs(o[m] - cos.values[m] * (1 - math.exp(-0.25)))) < 1e-12
    o2 = double_smoothed_oscillation(cos, grid1.constant(), B, sg).values
    assert np.max(np.abs(o2[m] - cos.values[m] * (1 - math.exp(-0.5)))) < 1e-12


def test_oscillation_trends(grid1):
    sg = HeatSemigroup(grid1)
    f, g = make_gaussian(grid1, 0.0, 0.3), make_gaussian(grid1, 0.2, 0.25)
    sups = [bilinear_oscillation(f, g, Ball(0.0, r), sg).sup() for r in (0.4, 0.2, 0.1)]
    assert sups[0] > sups[1] > sups[2]
    B = Ball(0.0, 0.3)
    a = bilinear_oscillation(f, g, B, sg).sup()
    b = double_smoothed_oscillation(f, g, B, sg).sup()
    assert max(a / b, b / a) <= 4


def test_oscillation_ball_guard(grid1):
    with pytest.raises(ValueError):
        bilinear_oscillation(grid1.constant(), grid1.constant(), Ball(0.0, grid1.h), HeatSemigroup(grid1))


def test_poincare_series(grid1):
    f, g = make_gaussian(grid1, 0.0, 0.2), make_gaussian(grid1, 0.3, 0.25)
    B = Ball(0.0, 0.3)
    z = grid1.constant(0.0)
    assert poincare_rhs_series(z, z, B, 4, 4, 0.5, 2.0) == 0
    base = poincare_rhs_series(f, g, B, 4, 4, 0.5, 2.0)
    assert poincare_rhs_series(2 * f, g, B, 4, 4, 0.5, 2.0) == pytest.approx(2 * base, rel=1e-12)
    a10 = poincare_rhs_series(f, g, B, 4, 4, 0.5, 2.0, l_max=10)
    a20 = poincare_rhs_series(f, g, B, 4, 4, 0.5, 2.0, l_max=20)
    assert abs(a10 - a20) < 1e-6 * a20
    with pytest.raises(ValueError, match="series diverges"):
        poincare_rhs_series(f, g, B, 4, 4, 0.5, 0.4)


def test_dilated_balls_capped(grid1):
    balls, capped = dilated_balls(Ball(0.0, 0.3), grid1, 20)
    assert capped and balls[-1][1].covers_torus(grid1)
    assert all(not D.covers_torus(grid1) for _, D in balls[:-1])


def test_representation_formula():
    g = PeriodicGrid(1, 128)
    sg = HeatSemigroup(g, epsilon=2.0)
    B = Ball(0.0, 0.3)
    c = g.constant(3.0)
    assert representation_formula_check(c, c, B, sg).value == 0
    f, h = make_gaussian(g, 0.0, 0.2), make_gaussian(g, 0.1, 0.25)
    base = representation_formula_check(f, h, B, sg).value
    assert 0 < base < math.inf
    assert representation_formula_check(2 * f, h, B, sg).value == pytest.approx(base, rel=1e-10)
    assert representation_formula_check(3 * f, 0.5 * h, B, sg).value == pytest.approx(base, rel=1e-10)
    g2 = g.refine()
    fine = representation_formula_check(make_gaussian(g2, 0.0, 0.2), make_gaussian(g2, 0.1, 0.25),
                                        B, HeatSemigroup(g2)).value
    assert max(fine / base, base / fine) <= 2


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.integers(0, 1000))
def test_semigroup_properties(t, s, seed):
    g = PeriodicGrid(1, 64)
    f = g.function(np.random.default_rng(seed).standard_normal(64))
    ts = apply_St(apply_St(f, t), s).values
    direct = apply_St(f, t + s).values
    assert np.max(np.abs(ts - direct)) <= 1e-12 * max(f.sup(), 1.0)
    assert abs(apply_St(f, t).mean() - f.mean()) <= 1e-12 * max(f.sup(), 1.0)
    assert lp_norm(apply_St(f, t), 2) <= lp_norm(f, 2) * (1 + 1e-14)
