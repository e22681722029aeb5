import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bihat.grid import GridFunction, PeriodicGrid, lp_norm, to_spectral
from bihat.paraproducts import (
    LPFamily,
    bessel_Js,
    bony_paraproduct,
    delta_j,
    reconstruct_product,
    remainder,
    riesz_Ds,
    sj,
    sobolev_norm,
)
from bihat.testbed import make_gaussian, make_modulated_packet


@pytest.mark.parametrize("shape", [(1, 64), (1, 128), (1, 256), (2, 32)])
def test_partition_of_unity(shape):
    lp = LPFamily(PeriodicGrid(*shape))
    assert lp.partition_error() <= 1e-12
    assert lp.phi_hat(0).flat[0] == 1.0


def test_psi_support(grid1):
    lp = LPFamily(grid1)
    r = np.sqrt(grid1.freq_norm2)
    for j in range(lp.j_max + 1):
        nz = lp.psi_hat(j) != 0
        assert np.all((r[nz] >= 2**j) & (r[nz] <= 3 * 2**j))


def test_sj_band_limited_identity(grid1):
    f = grid1.sample(lambda x: np.cos(3 * x) + np.sin(x))
    assert np.max(np.abs(sj(f, 2).values - f.values)) <= 1e-12


def test_telescoping(grid1):
    f = make_gaussian(grid1, 0.1, 0.1)
    lp = LPFamily(grid1)
    total = sj(f, 0) + sum(delta_j(f, j) for j in range(lp.j_max + 1))
    assert np.max(np.abs(total.values - f.values)) <= 1e-12


def test_level_range(grid1):
    with pytest.raises(ValueError):
        delta_j(grid1.constant(), 99)
    with pytest.raises(ValueError):
        sj(grid1.constant(), -1)


def test_delta_equal_cutoffs_zero(grid1):
    # mode 1 sits where both cutoffs at levels 1 and 2 equal 1
    f = grid1.sample(np.cos)
    assert delta_j(f, 1).sup() <= 1e-15


def test_paraproduct_with_one(grid1):
    f = make_modulated_packet(grid1, 0.0, 0.2, 5.0)
    out = bony_paraproduct(f, grid1.constant())
    assert np.max(np.abs(out.values - f.values)) <= 1e-12


def test_paraproduct_constant_first(grid1):
    g = make_gaussian(grid1, 0.0, 0.1)
    out = bony_paraproduct(grid1.constant(3.0), g)
    assert np.max(np.abs(out.values - 3.0 * sj(g, 0).values)) <= 1e-12


def test_paraproduct_spectrum():
    grid = PeriodicGrid(1, 128)
    x = grid.axis
    f = GridFunction(grid, np.exp(8j * x))
    g = GridFunction(grid, np.exp(1j * x))
    c = np.abs(to_spectral(bony_paraproduct(f, g)).coefficients)
    xi = np.abs(grid.wavenumbers)
    assert np.all(c[(xi < 4) | (xi > 18)] <= 1e-14)
    assert c[9] > 0.5


@pytest.mark.parametrize("N", [64, 128, 256])
def test_reconstruction(N):
    grid = PeriodicGrid(1, N)
    members = [make_gaussian(grid, 0.0, 0.15), make_gaussian(grid, 0.4, 0.25),
               make_modulated_packet(grid, 0.0, 0.2, 6.0)]
    for f in members:
        for g in members:
            assert reconstruct_product(f, g).value <= 1e-10


def test_reconstruction_zero(grid1):
    rep = reconstruct_product(grid1.constant(0.0), make_gaussian(grid1))
    assert rep.value == 0 and rep.details["relative"] is False


def test_remainder_range(grid1):
    with pytest.raises(ValueError):
        remainder(grid1.constant(), grid1.constant(), 2)


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
def test_paraproduct_bilinear(a, b, seed):
    grid = PeriodicGrid(1, 64)
    rng = np.random.default_rng(seed)
    f1, f2, g = (grid.function(rng.standard_normal(64)) for _ in range(3))
    lhs = bony_paraproduct(a * f1 + b * f2, g).values
    rhs = a * bony_paraproduct(f1, g).values + b * bony_paraproduct(f2, g).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-11 * (abs(a) + abs(b) + 1) * max(1.0, np.max(np.abs(rhs)))


def test_bessel_and_riesz(grid1):
    cos = grid1.sample(np.cos)
    assert np.max(np.abs(bessel_Js(cos, 1).values - math.sqrt(2) * cos.values)) <= 1e-12
    assert np.max(np.abs(riesz_Ds(cos, 1).values - cos.values)) <= 1e-12
    f = make_gaussian(grid1, 0.0, 0.2)
    assert np.max(np.abs(bessel_Js(bessel_Js(f, 0.7), -0.7).values - f.values)) <= 1e-12
    with pytest.raises(ValueError, match="zero-frequency singularity"):
        riesz_Ds(f, -0.5)
    assert riesz_Ds(grid1.constant(2.0), 0.5).sup() <= 1e-14


def test_sobolev_norm_examples(grid1):
    cos = grid1.sample(np.cos)
    assert sobolev_norm(cos, 1, 2) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)
    f = make_gaussian(grid1, 0.0, 0.2)
    assert sobolev_norm(f, 0, 3) == pytest.approx(lp_norm(f, 3), rel=1e-12)
    vals = [sobolev_norm(f, s, 2) for s in (0, 0.5, 1, 2)]
    assert vals == sorted(vals)
    with pytest.raises(ValueError):
        sobolev_norm(f, 1, 2, "bogus")
