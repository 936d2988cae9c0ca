"""Numerical checks of the boundedness characterisation: hypothesis gate, forward ratio and necessity battery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import INF, Ball, Params, SamplePlan, clean, holder_conjugate
from .hclass import WeightPair, h_ball_value
from .lipschitz import lip_ball_quotient
from .operator import JOperator, necessity_ratio, random_bumps, weighted_lp_norm
from .weights import rh_constant, weight_power


@dataclass
class HypothesisReport:
    """Whether p > n/gamma and every v_i^-p_i' is reverse Hölder of order m on the hypothesis plan.

    For p_i = 1 the reverse Hölder check is applied to v_i^-1 with infinite order.
    """

    p: float
    n_over_gamma: float
    p_ok: bool
    rh: list = field(default_factory=list)
    rh_ok: bool = True

    @property
    def ok(self) -> bool:
        return self.p_ok and self.rh_ok

    @property
    def message(self) -> str:
        if not self.p_ok:
            return f"p = {self.p:g} does not exceed n/gamma = {self.n_over_gamma:g}"
        if not self.rh_ok:
            bad = [r["index"] for r in self.rh if not r["finite"]]
            return f"reverse Hölder estimate infinite for v_i with i in {bad}"
        return "hypotheses hold on the sampled balls"

    def to_dict(self) -> dict:
        return clean({"p": self.p, "n_over_gamma": self.n_over_gamma, "p_ok": self.p_ok,
                      "reverse_holder": self.rh, "rh_ok": self.rh_ok, "ok": self.ok, "message": self.message})


def check_hypotheses(pair: WeightPair, params: Params, plan: SamplePlan | None = None,
                     tol: float = 1e-5) -> HypothesisReport:
    """Gate for the forward check. The reverse Hölder estimate is skipped when p <= n/gamma."""
    pair.check(params)
    p = params.p
    n_over_gamma = params.n / params.gamma
    rep = HypothesisReport(p, n_over_gamma, p > n_over_gamma)
    if not rep.p_ok:
        return rep
    plan = plan or SamplePlan.standard(params.n, n_radii=13, n_centers=6)
    for i, (v, pi) in enumerate(zip(pair.vvec, params.pvec)):
        if pi == 1:
            est = rh_constant(weight_power(v, -1.0), INF, plan, tol)
            cond = "rh_infinity of v^-1"
        else:
            est = rh_constant(weight_power(v, -holder_conjugate(pi)), float(params.m) if params.m > 1 else 2.0,
                              plan, tol)
            cond = f"rh_{max(params.m, 2)} of v^-p'"
        rep.rh.append({"index": i, "condition": cond, "estimate": est.to_dict(), "finite": math.isfinite(est.value)})
        rep.rh_ok &= math.isfinite(est.value)
    return rep


@dataclass
class ForwardBattery:
    """One test tuple: sup over balls of the Lipschitz quotient of J f divided by prod ||f_i v_i||_p_i."""

    fvec: tuple
    norms: list
    sup_ratio: float
    argmax: Ball | None
    per_ball: list

    def to_dict(self) -> dict:
        return clean({
            "functions": [repr(f) for f in self.fvec],
            "norms": self.norms,
            "sup_ratio": self.sup_ratio,
            "argmax": None if self.argmax is None else self.argmax.to_dict(),
        })


def forward_battery(fvec: Sequence, pair: WeightPair, params: Params, balls: Sequence[Ball],
                    tol: float = 1e-6) -> ForwardBattery:
    J = JOperator(fvec, params, tol)
    norms = [weighted_lp_norm(f, v, p) for f, v, p in zip(fvec, pair.vvec, params.pvec)]
    denom = math.prod(norms)
    per, best, arg = [], -INF, None
    for b in balls:
        q = lip_ball_quotient(J, pair.w, params.delta, b, tol) / denom
        per.append((b, q))
        if q > best:
            best, arg = q, b
    return ForwardBattery(tuple(fvec), norms, best, arg, per)


def bump_batteries(params: Params, count: int, seed: int = 0) -> list:
    """``count`` seeded tuples of nonnegative bumps."""
    rng = np.random.default_rng([seed, 7])
    return [random_bumps(params, rng) for _ in range(count)]


def forward_check(pair: WeightPair, params: Params, plan: SamplePlan, batteries: Sequence,
                  tol: float = 1e-6) -> dict:
    """Forward ratios for every battery and their maximum."""
    balls = plan.balls()
    res = [forward_battery(f, pair, params, balls, tol) for f in batteries]
    return {"tol": tol, "batteries": [r.to_dict() for r in res],
            "sup_ratio": max(r.sup_ratio for r in res), "balls_tested": len(balls)}


def necessity_check(pair: WeightPair, params: Params, plan: SamplePlan, batteries: Sequence,
                    tol: float = 1e-8, h_reference: bool = True) -> dict:
    """Per-ball left over right side of the product inequality, reduced to one fitted constant.

    The constant is the maximum ratio over every battery and ball. With
    ``h_reference`` the H_m functional is evaluated on the argmax ball, which
    bounds that ball's ratio by Hölder's inequality.
    """
    balls = plan.balls()
    out, const, arg = [], -INF, None
    for fvec in batteries:
        norms = [weighted_lp_norm(f, v, p) for f, v, p in zip(fvec, pair.vvec, params.pvec)]
        ratios = [necessity_ratio(fvec, pair, params, b, norms, tol) for b in balls]
        k = int(np.argmax(ratios))
        out.append({"functions": [repr(f) for f in fvec], "max_ratio": ratios[k], "argmax": balls[k].to_dict()})
        if ratios[k] > const:
            const, arg = ratios[k], balls[k]
    rep = {"constant": const, "argmax": None if arg is None else arg.to_dict(), "batteries": out,
           "balls_tested": len(balls), "finite": math.isfinite(const)}
    if h_reference and arg is not None:
        rep["h_value_at_argmax"] = h_ball_value(pair, params, arg)
    return clean(rep)


def verify_bound(pair: WeightPair, params: Params, plan: SamplePlan, n_batteries: int = 3,
                 seed: int = 0, tols: Sequence[float] = (1e-5, 1e-6), necessity_batteries: int = 20,
                 necessity_plan: SamplePlan | None = None, hypothesis_plan: SamplePlan | None = None) -> dict:
    """Hypothesis gate, then forward ratios at each tolerance and the necessity battery.

    ``status`` is "hypotheses not met" (nothing computed), "ok", or "divergent"
    when a forward or necessity constant is infinite.
    """
    hyp = check_hypotheses(pair, params, hypothesis_plan)
    report: dict = {"params": params.to_dict(), "pair": pair.to_dict(), "hypotheses": hyp.to_dict()}
    if not hyp.ok:
        report["status"] = "hypotheses not met"
        return clean(report)
    bats = bump_batteries(params, n_batteries, seed)
    fwd = [forward_check(pair, params, plan, bats, t) for t in tols]
    sups = [f["sup_ratio"] for f in fwd]
    change = abs(sups[-1] - sups[0]) / sups[-1] if len(sups) > 1 and sups[-1] > 0 else 0.0
    nec = necessity_check(pair, params, necessity_plan or plan, bump_batteries(params, necessity_batteries, seed + 1))
    finite = all(math.isfinite(s) for s in sups) and nec["finite"]
    report.update({
        "status": "ok" if finite else "divergent",
        "forward": fwd,
        "forward_sup_ratio": sups[-1],
        "forward_relative_change": change,
        "necessity": nec,
    })
    return clean(report)
