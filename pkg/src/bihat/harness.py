"""
Experiment driver.

An :class:`Experiment` names an entry of :data:`INEQUALITIES` (or one of the
identity, domination or lemma checks) together with exponents, function
families, a ball family and a list of resolutions.  Running it produces a
:class:`VerificationReport` holding one :class:`TrialRecord` per trial.

Ratio sweeps follow one rule: the sup of LHS/RHS must be finite at every
resolution and change by at most ``stability_factor`` between consecutive
resolutions (in either direction).  A trial with RHS = 0 and LHS = 0 is
vacuous and skipped; RHS = 0 with LHS > 0 fails the experiment.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fracops import bilinear_B, bilinear_I, holder_domination_check, jb_operator_ratio
from .grid import Ball, GridFunction, PeriodicGrid, band_limit, grad_magnitude, lp_norm
from .paraproducts import bony_paraproduct, reconstruct_product, sobolev_norm
from .semigroup import (HeatSemigroup, bilinear_oscillation, double_smoothed_oscillation,
                        poincare_rhs_series, representation_formula_check)
from .symbols import (eval_Tsigma, freqdecoup_residual, make_symbol, three_way_residual,
                      tsigma_domination_check)
from .testbed import FunctionFamily
from .weights import (BallFamily, bilinear_campanato_norm, campanato_norm, semigroup_campanato_tilde,
                      sobolev_exponent)

__all__ = [
    "CHECK_KINDS",
    "Experiment",
    "TrialRecord",
    "VerificationReport",
    "Inequality",
    "INEQUALITIES",
    "IDENTITIES",
    "DOMINATIONS",
    "registry_listing",
    "run_experiment",
    "run_ratio_sweep",
    "run_exact_identity",
    "run_domination",
    "lemma_sum_lhs",
    "lemma_sum_rhs",
    "lemma_check",
    "sqrt_embedding_check",
    "thread_count",
    "resolve_q",
    "scaling_offset",
    "DEFAULT_LEMMA_RANGES",
]

CHECK_KINDS = ("exact_identity", "pointwise_domination", "ratio_sweep", "discrete_lemma")


def thread_count() -> int:
    """Worker count from ``BIHAT_THREADS`` (default: CPU count)."""
    raw = os.environ.get("BIHAT_THREADS")
    if raw:
        try:
            v = int(raw)
        except ValueError:
            raise ValueError("BIHAT_THREADS must be a positive integer") from None
        if v < 1:
            raise ValueError("BIHAT_THREADS must be a positive integer")
        return v
    return os.cpu_count() or 1


def _pmap(fn, items):
    items = list(items)
    workers = min(thread_count(), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# records -------------------------------------------------------------------

@dataclass
class TrialRecord:
    trial_id: int
    params: dict
    lhs: float
    rhs: float
    ratio: float
    status: str = "ok"

    def to_dict(self) -> dict:
        return {"trial_id": self.trial_id, "params": self.params, "lhs": self.lhs,
                "rhs": self.rhs, "ratio": self.ratio, "status": self.status}


def _classify(lhs: float, rhs: float) -> tuple[float, str]:
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return math.inf, "nonfinite"
    if rhs > 0:
        return lhs / rhs, "ok"
    if lhs > 0:
        return math.inf, "degenerate"
    return 0.0, "zero"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass
class VerificationReport:
    experiment_id: str
    check_kind: str
    inequality: str
    records: list = field(default_factory=list)
    sup_by_N: dict = field(default_factory=dict)
    stability_achieved: float = 1.0
    stability_factor: float = 2.0
    tolerance: float = 1e-10
    verdict: bool = False
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    csv_columns: list | None = None

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "check_kind": self.check_kind,
            "inequality": self.inequality,
            "verdict": "PASS" if self.verdict else "FAIL",
            "sup_by_N": {str(k): v for k, v in self.sup_by_N.items()},
            "stability_achieved": self.stability_achieved,
            "stability_factor": self.stability_factor,
            "tolerance": self.tolerance,
            "config": self.config,
            "extra": self.extra,
            "csv_columns": self.csv_columns,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        recs = [TrialRecord(r["trial_id"], r["params"], _unjson(r["lhs"]), _unjson(r["rhs"]),
                            _unjson(r["ratio"]), r["status"]) for r in d["records"]]
        return cls(
            experiment_id=d["experiment_id"], check_kind=d["check_kind"], inequality=d["inequality"],
            records=recs, sup_by_N={k: _unjson(v) for k, v in d["sup_by_N"].items()},
            stability_achieved=_unjson(d["stability_achieved"]), stability_factor=d["stability_factor"],
            tolerance=d["tolerance"], verdict=d["verdict"] == "PASS", config=d.get("config", {}),
            extra=d.get("extra", {}), csv_columns=d.get("csv_columns"),
        )

    def columns(self) -> list[str]:
        if self.csv_columns:
            return list(self.csv_columns)
        keys: list[str] = []
        for r in self.records:
            for k in r.params:
                if k not in keys:
                    keys.append(k)
        return ["trial_id"] + keys + ["lhs", "rhs", "ratio", "status"]

    def to_csv(self) -> str:
        cols = self.columns()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(cols)
        for r in self.records:
            row = {"trial_id": r.trial_id, "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio, "status": r.status}
            row.update(r.params)
            w.writerow([_fmt(row.get(c, "")) for c in cols])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"experiment {self.experiment_id} ({self.check_kind}: {self.inequality})"]
        for k, v in self.sup_by_N.items():
            lines.append(f"  N={k}: sup ratio {_fmt(float(v))}")
        lines.append(f"  trials: {len(self.records)}")
        if self.check_kind == "ratio_sweep":
            lines.append(f"  stability {_fmt(float(self.stability_achieved))} (allowed {_fmt(float(self.stability_factor))})")
        for k in sorted(self.extra):
            lines.append(f"  {k}: {_fmt(self.extra[k]) if not isinstance(self.extra[k], (dict, list)) else json.dumps(_jsonable(self.extra[k]), sort_keys=True)}")
        lines.append("PASS" if self.verdict else "FAIL")
        return "\n".join(lines) + "\n"


def _jsonable(x):
    """Non-finite floats become strings so the JSON stays strict."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating,)):
        x = float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def _unjson(x):
    if isinstance(x, str):
        return float(x)
    return x


# experiments ---------------------------------------------------------------

@dataclass
class Experiment:
    """
    One verification run.  ``exponents`` may carry ``p1, p2, q, s, alpha,
    epsilon, m, lambda1, lambda2, t``; ``families`` holds one or two
    :class:`FunctionFamily` objects whose members are paired by Cartesian
    product (a single family is paired with itself).
    """

    id: str
    check_kind: str
    inequality: str
    n: int = 1
    N_list: tuple = (128, 256)
    L: float = 2 * math.pi
    exponents: dict = field(default_factory=dict)
    families: list = field(default_factory=list)
    ball_family: BallFamily = field(default_factory=BallFamily)
    symbol: dict | None = None
    tolerance: float = 1e-10
    stability_factor: float = 2.0
    ranges: dict | None = None
    seed: int = 0

    def __post_init__(self):
        if self.check_kind not in CHECK_KINDS:
            raise ValueError(f"unknown check_kind {self.check_kind!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.check_kind == "ratio_sweep" and len(self.N_list) < 2:
            raise ValueError("ratio sweeps need at least two resolutions")
        registry = {"ratio_sweep": INEQUALITIES, "exact_identity": IDENTITIES,
                    "pointwise_domination": DOMINATIONS, "discrete_lemma": {"lemma_lem": None}}[self.check_kind]
        if self.inequality not in registry:
            raise ValueError(f"unknown {self.check_kind} key {self.inequality!r}")
        self.N_list = tuple(int(N) for N in self.N_list)
        if self.check_kind == "ratio_sweep":
            resolve_q(self.inequality, self.exponents, self.n)

    def grid(self, N: int) -> PeriodicGrid:
        return PeriodicGrid(self.n, N, self.L)

    def pairs(self, grid: PeriodicGrid):
        fams = list(self.families)
        if not fams:
            raise ValueError("empty family")
        first = list(zip(fams[0].labels(), fams[0].members(grid)))
        second = first if len(fams) == 1 else list(zip(fams[1].labels(), fams[1].members(grid)))
        return [((lf, f), (lg, g)) for lf, f in first for lg, g in second]

    def singles(self, grid: PeriodicGrid):
        out = []
        for fam in self.families:
            out.extend(zip(fam.labels(), fam.members(grid)))
        if not out:
            raise ValueError("empty family")
        return out

    def to_dict(self) -> dict:
        return {
            "id": self.id, "check_kind": self.check_kind, "inequality": self.inequality, "n": self.n,
            "N_list": list(self.N_list), "L": self.L, "exponents": dict(self.exponents),
            "families": [f.to_dict() for f in self.families], "ball_family": self.ball_family.to_dict(),
            "symbol": self.symbol, "tolerance": self.tolerance, "stability_factor": self.stability_factor,
            "ranges": self.ranges, "seed": self.seed,
        }


@dataclass
class _Context:
    exp: Experiment
    grid: PeriodicGrid
    sg: HeatSemigroup

    def e(self, key, default=None):
        v = self.exp.exponents.get(key, default)
        if v is None:
            raise ValueError(f"exponent {key!r} required")
        return v

    def q_scaled(self, s):
        """``q`` given in the config or from ``1/q = 1/p1 + 1/p2 - s/n``."""
        q = self.exp.exponents.get("q")
        if q is not None:
            return _as_q(q)
        return sobolev_exponent(self.e("p1"), self.e("p2"), s, self.grid.n, allow_infinite=True)


def _as_q(q) -> float:
    return math.inf if q in ("inf", math.inf) else float(q)


def scaling_offset(key: str, exponents: dict) -> float | None:
    """Smoothness offset ``s`` in ``1/q = 1/p1 + 1/p2 - s/n`` used by a ratio sweep."""
    e = exponents
    if key in ("thm_bp_poincare", "coro_bp_poincare", "rep_formula", "jb_operator",
               "leibniz2_campanato", "leibniz3_campanato"):
        return None if "alpha" not in e else 1.0 - float(e["alpha"])
    if key in ("pdo_bound", "leibniz_pdo", "coro_leibniz_sobolev", "paraproduct_sobolev", "sqrt_embedding"):
        return None if "s" not in e else float(e["s"])
    if key == "kato_ponce":
        return 0.0
    if key == "bilinear_sobolev":
        return 1.0
    if key in ("fracint_I", "fracint_B"):
        return None if "alpha" not in e else float(e["alpha"])
    return None


def resolve_q(key: str, exponents: dict, n: int) -> float | None:
    """
    Target exponent of a sweep.  An explicit ``q`` (``"inf"`` allowed) must
    satisfy the scaling relation; an omitted one is computed from it and must
    be finite and positive.
    """
    s = scaling_offset(key, exponents)
    if key == "sqrt_embedding":
        if "t" not in exponents or s is None:
            return None
        p1 = p2 = float(exponents["t"])
    else:
        if s is None or "p1" not in exponents or "p2" not in exponents:
            return None
        p1, p2 = float(exponents["p1"]), float(exponents["p2"])
    if exponents.get("q") is None:
        return sobolev_exponent(p1, p2, s, n)
    q = _as_q(exponents["q"])
    expected = sobolev_exponent(p1, p2, s, n, allow_infinite=True)
    given = 0.0 if math.isinf(q) else 1.0 / q
    if abs(given - (0.0 if math.isinf(expected) else 1.0 / expected)) > 1e-12:
        raise ValueError("exponents violate 1/q = 1/p1 + 1/p2 - s/n")
    return q


@dataclass(frozen=True)
class Inequality:
    """
    ``evaluate(f, g, ball, ctx) -> (lhs, rhs)``.  ``degree`` is the common
    homogeneity of both sides in ``(f, g)``; ``uses_ball`` selects per-ball
    trials; ``single`` means one input function (``g`` ignored).
    """

    key: str
    description: str
    evaluate: Callable
    degree: tuple = (1, 1)
    uses_ball: bool = False
    single: bool = False


def _alpha(ctx):
    return float(ctx.e("alpha"))


def _poincare(osc):
    def ev(f, g, B, ctx):
        alpha = _alpha(ctx)
        p1, p2 = ctx.e("p1"), ctx.e("p2")
        q = ctx.q_scaled(1 - alpha)
        lhs = lp_norm(osc(f, g, B, ctx.sg), q, B)
        rhs = poincare_rhs_series(f, g, B, p1, p2, alpha, ctx.sg.epsilon)
        return lhs, rhs
    return ev


def _rep(f, g, B, ctx):
    # the check already reports the smallest admissible constant
    return representation_formula_check(f, g, B, ctx.sg).value, 1.0


def _jb(f, g, B, ctx):
    alpha = _alpha(ctx)
    p1, p2 = ctx.e("p1"), ctx.e("p2")
    q = ctx.q_scaled(1 - alpha)
    ratio = jb_operator_ratio(B, [(f, g)], p1, p2, q, alpha)
    den = lp_norm(f, p1, B) * lp_norm(g, p2, B)
    return (ratio, 1.0) if den > 0 else (0.0, 0.0)


def _pdo(f, g, B, ctx):
    s = float(ctx.e("s"))
    sigma = _symbol(ctx)
    q = ctx.q_scaled(s)
    return lp_norm(eval_Tsigma(sigma, f, g), q), lp_norm(f, ctx.e("p1")) * lp_norm(g, ctx.e("p2"))


def _symbol(ctx):
    sym = ctx.exp.symbol or {"key": "bessel_order", "params": {"s": ctx.e("s")}}
    return make_symbol(sym["key"], sym.get("params"))


def _leibniz_pdo(f, g, B, ctx):
    s, m = float(ctx.e("s")), float(ctx.e("m"))
    sigma = _symbol(ctx)
    q = ctx.q_scaled(s)
    p1, p2 = ctx.e("p1"), ctx.e("p2")
    lhs = lp_norm(eval_Tsigma(sigma, f, g), q)
    rhs = sobolev_norm(f, m + s, p1) * lp_norm(g, p2) + lp_norm(f, p1) * sobolev_norm(g, m + s, p2)
    return lhs, rhs


def _sobolev_leibniz(f, g, B, ctx):
    s, m = float(ctx.e("s")), float(ctx.e("m"))
    p1, p2 = ctx.e("p1"), ctx.e("p2")
    q = ctx.q_scaled(s)
    lhs = sobolev_norm(f * g, m, q)
    rhs = sobolev_norm(f, m + s, p1) * lp_norm(g, p2) + lp_norm(f, p1) * sobolev_norm(g, m + s, p2)
    return lhs, rhs


def _kato_ponce(f, g, B, ctx):
    m = float(ctx.e("m"))
    p1, p2 = ctx.e("p1"), ctx.e("p2")
    q = ctx.q_scaled(0.0)
    lhs = sobolev_norm(f * g, m, q)
    rhs = sobolev_norm(f, m, p1) * lp_norm(g, p2) + lp_norm(f, p1) * sobolev_norm(g, m, p2)
    return lhs, rhs


def _bilinear_sobolev(f, g, B, ctx):
    p1, p2 = ctx.e("p1"), ctx.e("p2")
    q = ctx.q_scaled(1.0)
    lhs = lp_norm(f * g, q)
    rhs = (lp_norm(grad_magnitude(f), p1) * lp_norm(g, p2)
           + lp_norm(f, p1) * lp_norm(grad_magnitude(g), p2))
    return lhs, rhs


def _paraproduct_sobolev(f, g, B, ctx):
    s = float(ctx.e("s"))
    p1, p2 = ctx.e("p1"), ctx.e("p2")
    q = ctx.q_scaled(s)
    lhs = lp_norm(bony_paraproduct(f, g), q)
    rhs = (sobolev_norm(f, s, p1, "hom") * lp_norm(g, p2)
           + lp_norm(f, p1) * sobolev_norm(g, s, p2, "hom"))
    return lhs, rhs


def _sqrt_embedding(f, g, B, ctx):
    s, t = float(ctx.e("s")), float(ctx.e("t"))
    q = ctx.exp.exponents.get("q")
    q = sobolev_exponent(t, t, s, ctx.grid.n, allow_infinite=True) if q is None else _as_q(q)
    return _sqrt_sides(f, s, t, q)


def _sqrt_sides(h, s, t, q):
    v = np.asarray(h.values)
    if np.iscomplexobj(v) or np.any(v < 0):
        raise ValueError("h must be nonnegative")
    root = GridFunction(h.grid, np.sqrt(v))
    return lp_norm(h, q), sobolev_norm(root, s, t) ** 2


def _fracint(op, upper):
    def ev(f, g, B, ctx):
        alpha = float(ctx.e("alpha"))
        q = ctx.q_scaled(alpha)
        return lp_norm(op(f, g, alpha), q), lp_norm(f, ctx.e("p1")) * lp_norm(g, ctx.e("p2"))
    return ev


def _campanato_leibniz(osc_norm):
    def ev(f, g, B, ctx):
        alpha = _alpha(ctx)
        p1, p2 = ctx.e("p1"), ctx.e("p2")
        l1, l2 = float(ctx.e("lambda1", 0.0)), float(ctx.e("lambda2", 0.0))
        n = ctx.grid.n
        q = ctx.q_scaled(1 - alpha)
        lam = 1.0 / n + l1 + l2
        inv_q = 0.0 if math.isinf(q) else 1.0 / q
        if not ctx.sg.epsilon > n * (lam + inv_q):
            raise ValueError("need epsilon > n (lambda + 1/q)")
        fam = ctx.exp.ball_family
        lhs = osc_norm(f, g, q, lam, ctx.sg, fam)
        rhs = (campanato_norm(grad_magnitude(f), p1, l1, fam) * campanato_norm(g, p2, l2, fam)
               + campanato_norm(f, p1, l1, fam) * campanato_norm(grad_magnitude(g), p2, l2, fam))
        return lhs, rhs
    return ev


INEQUALITIES = {
    e.key: e for e in [
        Inequality("thm_bp_poincare", "bilinear Poincare: |fg - S f S g|_{L^q(B)} against the dilated-ball gradient series",
                   _poincare(bilinear_oscillation), uses_ball=True),
        Inequality("coro_bp_poincare", "bilinear Poincare with the doubly smoothed approximant S[S f S g]",
                   _poincare(double_smoothed_oscillation), uses_ball=True),
        Inequality("rep_formula", "pointwise representation constant: |fg - S f S g| against the log-potential series",
                   _rep, degree=(0, 0), uses_ball=True),
        Inequality("jb_operator", "log potential J_B: |J_B(f,g)|_{L^q(B)} / (r^alpha |f|_{L^p1(B)} |g|_{L^p2(B)})",
                   _jb, degree=(0, 0), uses_ball=True),
        Inequality("pdo_bound", "|T_sigma(f,g)|_{L^q} against |f|_{L^p1} |g|_{L^p2}, Sobolev scaling in s", _pdo),
        Inequality("leibniz_pdo", "|T_sigma(f,g)|_{L^q} against W^{m+s} norms of f and g", _leibniz_pdo),
        Inequality("coro_leibniz_sobolev", "|fg|_{W^{m,q}} against W^{m+s} norms, Sobolev scaling (q < 1 allowed)",
                   _sobolev_leibniz),
        Inequality("kato_ponce", "|fg|_{W^{m,q}} against W^{m} norms, Holder scaling", _kato_ponce),
        Inequality("bilinear_sobolev", "|fg|_{L^q} against gradient norms, 1/q = 1/p1 + 1/p2 - 1/n", _bilinear_sobolev),
        Inequality("paraproduct_sobolev", "|Pi(f,g)|_{L^q} against homogeneous Sobolev norms", _paraproduct_sobolev),
        Inequality("sqrt_embedding", "|h|_{L^q} against |sqrt(h)|^2_{W^{s,t}}, 1/q = 2/t - s/n",
                   _sqrt_embedding, degree=(1, 0), single=True),
        Inequality("fracint_I", "|I_alpha(f,g)|_{L^q} against |f|_{L^p1} |g|_{L^p2}", _fracint(bilinear_I, 2)),
        Inequality("fracint_B", "|B_alpha(f,g)|_{L^q} against |f|_{L^p1} |g|_{L^p2}", _fracint(bilinear_B, 1)),
        Inequality("leibniz2_campanato", "bilinear Campanato-Morrey norm of (f,g) against Campanato norms of f, g and gradients",
                   _campanato_leibniz(bilinear_campanato_norm)),
        Inequality("leibniz3_campanato", "as leibniz2_campanato with the doubly smoothed approximant (upper bound)",
                   _campanato_leibniz(semigroup_campanato_tilde)),
    ]
}


def _identity_product(f, g, ctx):
    r = (eval_Tsigma(make_symbol("one"), f, g) - f * g).sup()
    scale = (f * g).sup()
    return r / scale if scale > 0 else r


def _identity_freqdecoup(f, g, ctx):
    return freqdecoup_residual(float(ctx.e("m")), float(ctx.e("s")), band_limit(f), band_limit(g))


def _identity_three_way(f, g, ctx):
    return three_way_residual(float(ctx.e("m")), float(ctx.e("s")), band_limit(f), band_limit(g))


def _identity_paraproduct(f, g, ctx):
    return reconstruct_product(f, g).value


IDENTITIES = {
    "product_sigma_one": ("T_sigma with sigma = 1 equals the pointwise product", _identity_product),
    "freqdecoup": ("J^m(fg) = T_sigma1(f, J^{m+s} g) + T_sigma2(J^{m+s} f, g) on band-limited inputs",
                   _identity_freqdecoup),
    "three_way": ("three-piece decoupling with a balanced middle symbol", _identity_three_way),
    "paraproduct_reconstruction": ("fg = Pi(f,g) + Pi(g,f) + R_-1 + R_0 + R_1", _identity_paraproduct),
}


def _dom_holder(f, g, ctx):
    return holder_domination_check(f, g, float(ctx.e("alpha")), ctx.e("p1"), ctx.e("p2"))


def _dom_tsigma(f, g, ctx):
    s = float(ctx.e("s"))
    return tsigma_domination_check(_symbol(ctx), s, band_limit(abs(f)), band_limit(abs(g)),
                                   slack=float(ctx.exp.exponents.get("slack", 0.05)))


DOMINATIONS = {
    "holder_domination": ("B_alpha(|f|,|g|) below the product of linear Riesz potentials of |f|^r and |g|^s",
                          _dom_holder),
    "tsigma_domination": ("|T_sigma(f,g)| below (1 + slack) C I_s(|f|,|g|)", _dom_tsigma),
}


def registry_listing() -> dict:
    """Sorted registry used by the ``list`` command."""
    return {
        "inequalities": {k: {"description": INEQUALITIES[k].description, "degree": list(INEQUALITIES[k].degree),
                             "per_ball": INEQUALITIES[k].uses_ball} for k in sorted(INEQUALITIES)},
        "identities": {k: IDENTITIES[k][0] for k in sorted(IDENTITIES)},
        "dominations": {k: DOMINATIONS[k][0] for k in sorted(DOMINATIONS)},
        "lemmas": {"lemma_lem": "sum_{k<=l} 2^{k(m+n)}/(a 2^k + b)^{2n-s} against its last term"},
    }


# drivers -------------------------------------------------------------------

def _trial_inputs(exp: Experiment, grid: PeriodicGrid, ineq: Inequality):
    if ineq.single:
        items = [((lab, f), ("-", f)) for lab, f in exp.singles(grid)]
    else:
        items = exp.pairs(grid)
    balls = exp.ball_family.balls(grid) if ineq.uses_ball else [None]
    return [(pair, B) for pair in items for B in balls]


def _ball_params(B):
    if B is None:
        return {}
    return {"center": " ".join(_fmt(c) for c in B.center), "radius": B.radius}


def _stability(sups: list[float]) -> float:
    worst = 1.0
    for a, b in zip(sups, sups[1:]):
        if a == 0 and b == 0:
            continue
        if a == 0 or b == 0 or not (math.isfinite(a) and math.isfinite(b)):
            return math.inf
        worst = max(worst, a / b, b / a)
    return worst


def run_ratio_sweep(exp: Experiment) -> VerificationReport:
    """Ratio sweep over families x balls at every resolution of ``exp``."""
    if exp.check_kind != "ratio_sweep":
        raise ValueError("not a ratio sweep")
    if len(exp.N_list) < 2:
        raise ValueError("ratio sweeps need at least two resolutions")
    ineq = INEQUALITIES[exp.inequality]
    records, sups = [], {}
    tid = 0
    for N in exp.N_list:
        grid = exp.grid(N)
        ctx = _Context(exp, grid, HeatSemigroup(grid, float(exp.exponents.get("epsilon", 2.0))))
        inputs = _trial_inputs(exp, grid, ineq)

        def one(item, ctx=ctx):
            ((lf, f), (lg, g)), B = item
            return ineq.evaluate(f, g, B, ctx)

        results = _pmap(one, inputs)
        best = 0.0
        for (((lf, _), (lg, _)), B), (lhs, rhs) in zip(inputs, results):
            ratio, status = _classify(float(lhs), float(rhs))
            params = {"N": N, "f": lf, "g": lg, **_ball_params(B)}
            records.append(TrialRecord(tid, params, float(lhs), float(rhs), ratio, status))
            tid += 1
            best = max(best, ratio)
        sups[N] = best
    stab = _stability([sups[N] for N in exp.N_list])
    ok = all(math.isfinite(v) for v in sups.values()) and not any(r.status in ("degenerate", "nonfinite") for r in records)
    verdict = ok and stab <= exp.stability_factor
    return VerificationReport(exp.id, exp.check_kind, exp.inequality, records, sups, stab,
                              exp.stability_factor, exp.tolerance, verdict, exp.to_dict())


def run_exact_identity(exp: Experiment) -> VerificationReport:
    """Max residual of the named identity over the family pairs at each resolution."""
    _, fn = IDENTITIES[exp.inequality]
    records, sups = [], {}
    tid = 0
    for N in exp.N_list:
        grid = exp.grid(N)
        ctx = _Context(exp, grid, HeatSemigroup(grid))
        inputs = exp.pairs(grid)
        res = _pmap(lambda p: fn(p[0][1], p[1][1], ctx), inputs)
        for ((lf, _), (lg, _)), r in zip(inputs, res):
            records.append(TrialRecord(tid, {"N": N, "f": lf, "g": lg}, float(r), exp.tolerance,
                                       float(r) / exp.tolerance, "ok" if r <= exp.tolerance else "violated"))
            tid += 1
        sups[N] = max((float(r) for r in res), default=0.0)
    worst = max(sups.values(), default=0.0)
    return VerificationReport(exp.id, exp.check_kind, exp.inequality, records, sups, 1.0, exp.stability_factor,
                              exp.tolerance, worst <= exp.tolerance, exp.to_dict(), {"max_residual": worst})


def run_domination(exp: Experiment) -> VerificationReport:
    """Pointwise domination checks; each record holds the max LHS/RHS over grid points."""
    _, fn = DOMINATIONS[exp.inequality]
    records, sups = [], {}
    ok = True
    tid = 0
    for N in exp.N_list:
        grid = exp.grid(N)
        ctx = _Context(exp, grid, HeatSemigroup(grid))
        inputs = exp.pairs(grid)
        reps = _pmap(lambda p: fn(p[0][1], p[1][1], ctx), inputs)
        for ((lf, _), (lg, _)), rep in zip(inputs, reps):
            records.append(TrialRecord(tid, {"N": N, "f": lf, "g": lg}, rep.value, 1.0, rep.value,
                                       "ok" if rep.passed else "violated"))
            ok = ok and rep.passed
            tid += 1
        sups[N] = max((r.value for r in reps), default=0.0)
    return VerificationReport(exp.id, exp.check_kind, exp.inequality, records, sups, 1.0, exp.stability_factor,
                              exp.tolerance, ok, exp.to_dict())


# discrete lemma ------------------------------------------------------------

DEFAULT_LEMMA_RANGES = {
    "l_max": 24,
    "log2_a": [-8, 8],
    "log2_b": [-8, 8],
    "nms": [[1, 1, 0.5], [1, 2, 0.5], [2, 2, 1.0]],
}


def _lemma_pre(l, a, b, n, m, s):
    if not m > n - s:
        raise ValueError("lemma hypothesis violated")
    if l < 0 or int(l) != l:
        raise ValueError("l must be a nonnegative integer")
    if not (a > 0 and b > 0):
        raise ValueError("a, b must be positive")


def lemma_sum_lhs(l: int, a: float, b: float, n: int, m: float, s: float) -> float:
    """``sum_{k=0}^{l} 2^{k(m+n)} / (a 2^k + b)^(2n-s)``."""
    _lemma_pre(l, a, b, n, m, s)
    k = np.arange(int(l) + 1, dtype=float)
    terms = 2.0 ** (k * (m + n)) / (a * 2.0**k + b) ** (2 * n - s)
    return float(math.fsum(terms))


def lemma_sum_rhs(l: int, a: float, b: float, n: int, m: float, s: float) -> float:
    """``2^{l(m+n)} / (a 2^l + b)^(2n-s)``."""
    _lemma_pre(l, a, b, n, m, s)
    return float(2.0 ** (l * (m + n)) / (a * 2.0**l + b) ** (2 * n - s))


def lemma_check(ranges: dict | None = None, exp_id: str = "lemma_lem") -> VerificationReport:
    """
    Brute-force sweep of the lemma ratio.  ``extra`` reports the sup, where it
    is attained, and the sup over the sweep with its outer ``l``, ``a``, ``b``
    layers removed (equal sups mean the maximum sits away from the boundary).
    """
    r = dict(DEFAULT_LEMMA_RANGES)
    r.update(ranges or {})
    la = range(int(r["log2_a"][0]), int(r["log2_a"][1]) + 1)
    lb = range(int(r["log2_b"][0]), int(r["log2_b"][1]) + 1)
    records = []
    tid = 0
    best, arg, inner = 0.0, None, 0.0
    for n, m, s in r["nms"]:
        _lemma_pre(0, 1.0, 1.0, n, m, s)
        for l in range(int(r["l_max"]) + 1):
            for ea in la:
                for eb in lb:
                    a, b = 2.0**ea, 2.0**eb
                    lhs = lemma_sum_lhs(l, a, b, n, m, s)
                    rhs = lemma_sum_rhs(l, a, b, n, m, s)
                    ratio = lhs / rhs
                    records.append(TrialRecord(tid, {"l": l, "a": a, "b": b, "n": n, "m": m, "s": s},
                                               lhs, rhs, ratio))
                    tid += 1
                    if ratio > best:
                        best, arg = ratio, {"l": l, "a": a, "b": b, "n": n, "m": m, "s": s}
                    if (l < int(r["l_max"]) and la.start < ea < la.stop - 1 and lb.start < eb < lb.stop - 1):
                        inner = max(inner, ratio)
    finite = all(math.isfinite(x.ratio) for x in records)
    rep = VerificationReport(exp_id, "discrete_lemma", "lemma_lem", records, {"-": best}, 1.0, 2.0, 1e-12,
                             finite and bool(records), {"ranges": r},
                             {"sup_ratio": best, "argmax": arg, "sup_interior": inner,
                              "interior_relative_gap": (best - inner) / best if best > 0 else 0.0},
                             ["l", "a", "b", "n", "m", "s", "lhs", "rhs", "ratio"])
    return rep


def sqrt_embedding_check(h_family: FunctionFamily, s: float, t: float, n: int = 1,
                         N_list=(128, 256), L: float = 2 * math.pi, stability_factor: float = 2.0,
                         exp_id: str = "sqrt_embedding") -> VerificationReport:
    """Ratio sweep of ``|h|_{L^q} / |sqrt(h)|^2_{W^{s,t}}`` with ``1/q = 2/t - s/n``."""
    q = sobolev_exponent(t, t, s, n, allow_infinite=True)
    exp = Experiment(exp_id, "ratio_sweep", "sqrt_embedding", n=n, N_list=tuple(N_list), L=L,
                     exponents={"s": s, "t": t, "q": "inf" if math.isinf(q) else q},
                     families=[h_family], stability_factor=stability_factor)
    return run_ratio_sweep(exp)


def run_experiment(exp: Experiment) -> VerificationReport:
    if exp.check_kind == "ratio_sweep":
        return run_ratio_sweep(exp)
    if exp.check_kind == "exact_identity":
        return run_exact_identity(exp)
    if exp.check_kind == "pointwise_domination":
        return run_domination(exp)
    return lemma_check(exp.ranges, exp.id)
