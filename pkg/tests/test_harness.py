import math

import numpy as np
import pytest

from bihat import harness
from bihat.grid import Ball, PeriodicGrid
from bihat.harness import (
    INEQUALITIES,
    Experiment,
    VerificationReport,
    lemma_check,
    lemma_sum_lhs,
    lemma_sum_rhs,
    run_experiment,
    sqrt_embedding_check,
)
from bihat.semigroup import HeatSemigroup
from bihat.testbed import FunctionFamily
from bihat.weights import BallFamily

GAUSS = FunctionFamily("gaussian", {"center": [0.0, 0.4], "width": [0.15, 0.25]})
PACKET = FunctionFamily("modulated_packet", {"width": [0.2], "freq": [4.0, 8.0]})


def test_zero_family_passes():
    exp = Experiment("z", "ratio_sweep", "kato_ponce", N_list=(64, 128),
                     exponents={"m": 1, "p1": 4, "p2": 4}, families=[FunctionFamily("zero")])
    rep = run_experiment(exp)
    assert rep.verdict
    assert all(v == 0 for v in rep.sup_by_N.values())
    assert {r.status for r in rep.records} == {"zero"}


def test_classification():
    assert harness._classify(1.0, 2.0) == (0.5, "ok")
    assert harness._classify(0.0, 0.0) == (0.0, "zero")
    assert harness._classify(1.0, 0.0) == (math.inf, "degenerate")
    assert harness._classify(math.nan, 1.0)[1] == "nonfinite"


def test_kato_ponce_sweep():
    exp = Experiment("kp", "ratio_sweep", "kato_ponce", exponents={"m": 1, "p1": 4, "p2": 4, "q": 2},
                     families=[GAUSS, PACKET])
    rep = run_experiment(exp)
    assert rep.verdict, rep.summary()
    assert 0 < rep.sup_by_N[256] < math.inf


def test_bilinear_sobolev_sweep():
    exp = Experiment("sob", "ratio_sweep", "bilinear_sobolev", exponents={"p1": 1.5, "p2": 1.5},
                     families=[GAUSS])
    rep = run_experiment(exp)
    assert rep.config["exponents"] == {"p1": 1.5, "p2": 1.5}
    assert rep.verdict and 0 < rep.sup_by_N[128] < math.inf


def test_bilinear_sobolev_no_valid_q():
    with pytest.raises(ValueError, match="scaling gives q = ∞ or negative"):
        Experiment("sob", "ratio_sweep", "bilinear_sobolev", exponents={"p1": 3, "p2": 3}, families=[GAUSS])


def test_experiment_validation():
    with pytest.raises(ValueError, match="two resolutions"):
        Experiment("x", "ratio_sweep", "kato_ponce", N_list=(128,), exponents={"m": 1, "p1": 4, "p2": 4})
    with pytest.raises(ValueError, match="unknown"):
        Experiment("x", "ratio_sweep", "nope")
    with pytest.raises(ValueError, match="check_kind"):
        Experiment("x", "bogus", "kato_ponce")
    with pytest.raises(ValueError, match="violate"):
        Experiment("x", "ratio_sweep", "kato_ponce", exponents={"m": 1, "p1": 4, "p2": 4, "q": 3})


def test_lemma_examples():
    assert lemma_sum_lhs(0, 3.0, 0.5, 1, 1, 0.5) == lemma_sum_rhs(0, 3.0, 0.5, 1, 1, 0.5)
    # oracle: the four terms written out
    oracle = sum(2.0 ** (2 * k) / (2.0**k + 1) ** 1.5 for k in range(4))
    lhs = lemma_sum_lhs(3, 1, 1, 1, 1, 0.5)
    rhs = lemma_sum_rhs(3, 1, 1, 1, 1, 0.5)
    assert lhs == pytest.approx(oracle, rel=1e-15)
    assert lhs == pytest.approx(4.924808, abs=1e-6)
    assert rhs == pytest.approx(64 / 27, rel=1e-15)
    assert lhs / rhs == pytest.approx(2.0777, abs=1e-4)
    with pytest.raises(ValueError, match="lemma hypothesis violated"):
        lemma_sum_lhs(2, 1, 1, 1, 0.5, 0.5)


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.25, 8.0), (16.0, 0.125)])
def test_lemma_joint_scaling(a, b):
    for l in (0, 5, 12):
        r1 = lemma_sum_lhs(l, a, b, 1, 1, 0.5) / lemma_sum_rhs(l, a, b, 1, 1, 0.5)
        r2 = lemma_sum_lhs(l, 2 * a, 2 * b, 1, 1, 0.5) / lemma_sum_rhs(l, 2 * a, 2 * b, 1, 1, 0.5)
        assert r1 == pytest.approx(r2, rel=1e-13)


def test_lemma_check_default():
    rep = lemma_check()
    again = lemma_check()
    assert rep.verdict
    assert len(rep.records) == 3 * 25 * 17 * 17
    assert math.isfinite(rep.extra["sup_ratio"])
    assert rep.extra["sup_ratio"] == again.extra["sup_ratio"]
    assert rep.extra["interior_relative_gap"] < 1e-3
    assert rep.to_csv().splitlines()[0] == "l,a,b,n,m,s,lhs,rhs,ratio"


@pytest.mark.parametrize("key,m,s", [("freqdecoup", 1.0, 0.5), ("three_way", 1.0, 0.5),
                                     ("product_sigma_one", 0, 0), ("paraproduct_reconstruction", 0, 0)])
def test_identities(key, m, s):
    exp = Experiment(key, "exact_identity", key, N_list=(128,), exponents={"m": m, "s": s},
                     families=[GAUSS, PACKET])
    rep = run_experiment(exp)
    assert rep.verdict and rep.extra["max_residual"] <= 1e-10


def test_domination_experiment():
    exp = Experiment("hd", "pointwise_domination", "holder_domination", N_list=(64,),
                     exponents={"alpha": 0.5, "p1": 4, "p2": 4}, families=[GAUSS])
    assert run_experiment(exp).verdict


def test_sqrt_embedding():
    zero = sqrt_embedding_check(FunctionFamily("zero"), 0.5, 4, N_list=(64, 128))
    assert zero.verdict and zero.sup_by_N[64] == 0
    const = sqrt_embedding_check(FunctionFamily("constant", {"value": [0.5, 3.0]}), 0.5, 4, N_list=(64, 128))
    # |c|_{L^inf} / |sqrt(c)|^2_{W^{s,4}} = c / (c L^(2/4)) = L^(-1/2)
    for r in const.records:
        assert r.ratio == pytest.approx((2 * math.pi) ** -0.5, rel=1e-12)
    rep = sqrt_embedding_check(FunctionFamily("gaussian", {"width": [0.1, 0.2, 0.3]}), 0.5, 4)
    assert rep.verdict and 0 < rep.sup_by_N[256] < math.inf


def test_sqrt_embedding_negative_input():
    with pytest.raises(ValueError, match="nonnegative"):
        sqrt_embedding_check(FunctionFamily("trig_poly", {"degree": [2]}), 0.5, 4, N_list=(64, 128))


SCALING_CASES = {
    "thm_bp_poincare": {"alpha": 0.5, "p1": 4, "p2": 4, "q": "inf"},
    "coro_bp_poincare": {"alpha": 0.5, "p1": 4, "p2": 4, "q": "inf"},
    "rep_formula": {"alpha": 0.5, "p1": 4, "p2": 4, "q": "inf"},
    "jb_operator": {"alpha": 0.5, "p1": 2, "p2": 2},
    "pdo_bound": {"s": 0.5, "p1": 2, "p2": 2},
    "leibniz_pdo": {"s": 0.5, "m": 1, "p1": 2, "p2": 2},
    "coro_leibniz_sobolev": {"s": 0.5, "m": 1, "p1": 2, "p2": 2},
    "kato_ponce": {"m": 1, "p1": 4, "p2": 4},
    "bilinear_sobolev": {"p1": 1.5, "p2": 1.5},
    "paraproduct_sobolev": {"s": 0.5, "p1": 2, "p2": 2},
    "sqrt_embedding": {"s": 0.5, "t": 4, "q": "inf"},
    "fracint_I": {"alpha": 0.5, "p1": 2, "p2": 2},
    "fracint_B": {"alpha": 0.5, "p1": 2, "p2": 2},
    "leibniz2_campanato": {"alpha": 0.5, "p1": 2, "p2": 2, "epsilon": 4},
    "leibniz3_campanato": {"alpha": 0.5, "p1": 2, "p2": 2, "epsilon": 4},
}


def test_scaling_cases_cover_registry():
    assert set(SCALING_CASES) == set(INEQUALITIES)


@pytest.mark.parametrize("key", sorted(SCALING_CASES))
def test_scaling_invariance(key):
    ineq = INEQUALITIES[key]
    e = dict(SCALING_CASES[key])
    exp = Experiment(key, "ratio_sweep", key, N_list=(64, 128), exponents=e, families=[GAUSS],
                     ball_family=BallFamily(divisions=4, radii=(0.45,)))
    grid = PeriodicGrid(1, 64)
    ctx = harness._Context(exp, grid, HeatSemigroup(grid, float(e.get("epsilon", 2.0))))
    f, g = GAUSS.members(grid)[0], GAUSS.members(grid)[3]
    B = Ball(0.0, 0.45)
    lhs, rhs = ineq.evaluate(f, g, B, ctx)
    c = 3.0
    lhs_c, rhs_c = ineq.evaluate(c * f, g, B, ctx)
    d = ineq.degree[0]
    assert lhs_c == pytest.approx(c**d * lhs, rel=1e-10)
    assert rhs_c == pytest.approx(c**d * rhs, rel=1e-10)
    assert lhs_c / rhs_c == pytest.approx(lhs / rhs, rel=1e-10)
    if not ineq.single:
        lhs_g, rhs_g = ineq.evaluate(f, c * g, B, ctx)
        assert lhs_g / rhs_g == pytest.approx(lhs / rhs, rel=1e-10)


def test_determinism_and_thread_independence(monkeypatch):
    exp = Experiment("det", "ratio_sweep", "fracint_B", N_list=(64, 128),
                     exponents={"alpha": 0.5, "p1": 2, "p2": 2}, families=[GAUSS])
    monkeypatch.setenv("BIHAT_THREADS", "1")
    a = run_experiment(exp).to_json()
    monkeypatch.setenv("BIHAT_THREADS", "4")
    b = run_experiment(exp).to_json()
    assert a == b
    monkeypatch.setenv("BIHAT_THREADS", "zero")
    with pytest.raises(ValueError):
        harness.thread_count()


def test_report_round_trip():
    exp = Experiment("rt", "ratio_sweep", "fracint_B", N_list=(64, 128),
                     exponents={"alpha": 0.5, "p1": 2, "p2": 2}, families=[GAUSS])
    rep = run_experiment(exp)
    back = VerificationReport.from_dict(__import__("json").loads(rep.to_json()))
    assert back.to_json() == rep.to_json()
    assert back.to_csv() == rep.to_csv()
    assert rep.to_csv().endswith("\r\n")
    assert rep.summary().rstrip().endswith("PASS")
