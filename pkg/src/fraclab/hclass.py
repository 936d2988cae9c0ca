"""The H_m(p, gamma, delta) functional on balls, its local and global parts, and sup-over-balls reports."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import EQ_TOL, INF, Ball, Params, SamplePlan, clean, holder_conjugate
from .quadrature import Integrand, ess_sup, integrate_complement, integrate_whole
from .weights import (
    Constant,
    Power,
    WeightSpec,
    decay_exponent,
    doubling_constant,
    rh_constant,
    scale_weight,
    singular_at_origin,
    weight_from_dict,
    weight_mean,
    weight_power,
    weight_sup,
    weight_to_dict,
)

BLOWUP_FACTOR = 1e2


@dataclass(frozen=True)
class WeightPair:
    """(w, v_1, ..., v_m); optional ``label`` and ``exponents`` record how it was built."""

    w: WeightSpec
    vvec: tuple
    label: str | None = None
    exponents: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vvec", tuple(self.vvec))

    def check(self, params: Params) -> None:
        if len(self.vvec) != params.m:
            raise ValueError(f"expected {params.m} weights v_i, got {len(self.vvec)}")

    def scaled_w(self, c: float) -> "WeightPair":
        return WeightPair(scale_weight(self.w, c), self.vvec, self.label, self.exponents)

    def permuted(self, perm: Sequence[int]) -> "WeightPair":
        return WeightPair(self.w, tuple(self.vvec[i] for i in perm), self.label, self.exponents)

    def to_dict(self) -> dict:
        d = {"w": weight_to_dict(self.w), "vvec": [weight_to_dict(v) for v in self.vvec]}
        if self.label is not None:
            d["label"] = self.label
        if self.exponents is not None:
            d["exponents"] = self.exponents
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WeightPair":
        return cls(weight_from_dict(d["w"]), tuple(weight_from_dict(v) for v in d["vvec"]),
                   d.get("label"), d.get("exponents"))


@dataclass(frozen=True)
class BallValue:
    """Per-ball value with the index of the first infinite factor (None if finite)."""

    value: float
    failing_factor: int | None = None
    reason: str | None = None


# ---------------------------------------------------------------------------
# analytic integrability tests for power weights


def _power_factor_reason(beta: float, p: float, theta: float, n: int, region: str) -> str | None:
    """Reason the i-th factor is infinite for v_i = |x|^beta, or None if it is finite.

    ``region`` is "whole", "ball" or "complement"; the kernel decays like |y|^-theta.
    """
    near_origin = region in ("whole", "ball")
    at_infinity = region in ("whole", "complement")
    if p == 1:
        if near_origin and beta > EQ_TOL:
            return f"v^-1 = |x|^{-beta:g} is unbounded at the origin (beta > 0)"
        if at_infinity and beta + theta < -EQ_TOL:
            return f"v^-1/|x|^theta grows at infinity (beta + theta = {beta + theta:g} < 0)"
        return None
    q = holder_conjugate(p)
    if near_origin and beta * q >= n - EQ_TOL:
        return f"v^-p' not integrable at the origin (beta p' = {beta * q:g} >= n)"
    if at_infinity and (beta + theta) * q <= n + EQ_TOL:
        return f"tail not integrable (beta + theta = {beta + theta:g} <= n/p' = {n / q:g})"
    return None


def _power_beta(v: WeightSpec) -> float | None:
    if isinstance(v, Power):
        return v.alpha
    if isinstance(v, Constant):
        return 0.0
    return None


# ---------------------------------------------------------------------------
# factor evaluation


def _kernel_integrand(vpow: WeightSpec, n: int, center: np.ndarray, shift: float, power: float) -> Integrand:
    """y -> vpow(y) / (shift + |center - y|)^power."""
    sing = [(0.0,) * n] if singular_at_origin(vpow) else []
    if shift == 0.0:
        sing.append(tuple(center))

    def fn(pts, vpow=vpow, center=center, shift=shift, power=power):
        r = np.sqrt((pts**2).sum(axis=1))
        dist = np.sqrt(((pts - center) ** 2).sum(axis=1))
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = vpow.radial(r) / np.power(shift + dist, power)
        return np.where(np.isnan(out), 0.0, out)

    sing = tuple(dict.fromkeys(sing))
    brk = () if tuple(center) in sing else (tuple(center),)
    return Integrand(fn, n, singular_points=sing, breakpoints=brk,
                     decay_exponent=decay_exponent(vpow) + power)


def _factor(v: WeightSpec, p: float, theta: float, ball: Ball, region: str, shift: float,
            tol: float) -> tuple[float, str | None]:
    """One factor of the product: integral or sup over ``region`` of v^-p' / (shift + |x_B - y|)^(theta p')."""
    n = ball.n
    beta = _power_beta(v)
    if beta is not None:
        reason = _power_factor_reason(beta, p, theta, n, region)
        if reason is not None:
            return INF, reason
    c = ball.center_array
    if p == 1:
        f = _kernel_integrand(weight_power(v, -1.0), n, c, shift, theta)
        val = ess_sup(f, ball, kind=region, points_per_set=1024)
        return val, (None if math.isfinite(val) else "v^-1 factor is unbounded")
    q = holder_conjugate(p)
    f = _kernel_integrand(weight_power(v, -q), n, c, shift, theta * q)
    if region == "whole":
        res = integrate_whole(f, ball, tol)
    else:
        res = integrate_complement(f, ball, tol)
    if not res.finite:
        return INF, ("integral diverges" if res.diverged else "integral overflows")
    return res.value ** (1.0 / q), None


def _local_factor(v: WeightSpec, p: float, ball: Ball, tol: float) -> tuple[float, str | None]:
    beta = _power_beta(v)
    if beta is not None:
        reason = _power_factor_reason(beta, p, 0.0, ball.n, "ball")
        if reason is not None:
            return INF, reason
    if p == 1:
        val = weight_sup(weight_power(v, -1.0), ball)
        return val, (None if math.isfinite(val) else "v^-1 is unbounded on the ball")
    q = holder_conjugate(p)
    res = weight_mean(weight_power(v, -q), ball, tol)
    if not res.finite:
        return INF, "mean of v^-p' diverges"
    return res.value ** (1.0 / q), None


def _product(prefactor: float, factors: list[tuple[float, str | None]]) -> BallValue:
    val = prefactor
    for i, (f, reason) in enumerate(factors):
        if reason is not None or not math.isfinite(f):
            return BallValue(INF, i, reason or "factor is infinite")
        val *= f
    if not math.isfinite(val):
        return BallValue(INF, None, "product overflows")
    return BallValue(val)


def h_ball_detail(pair: WeightPair, params: Params, ball: Ball, tol: float = 1e-5) -> BallValue:
    pair.check(params)
    wsup = weight_sup(pair.w, ball)
    pre = wsup / ball.vol_pow(params.delta - 1.0)
    side = ball.side
    factors = [_factor(v, p, th, ball, "whole", side, tol)
               for v, p, th in zip(pair.vvec, params.pvec, params.theta)]
    return _product(pre, factors)


def h_ball_value(pair: WeightPair, params: Params, ball: Ball, tol: float = 1e-5) -> float:
    """Per-ball H_m functional.

    ||w chi_B||_inf |B|^((1-delta)/n) prod_i ( int v_i^-p_i' / (|B|^(1/n) + |x_B - y|)^(theta_i p_i') )^(1/p_i')
    with theta_i = n - gamma_i + 1/m; for p_i = 1 the factor is the sup of
    v_i^-1 / (|B|^(1/n) + |x_B - y|)^theta_i, and p_i = inf uses p_i' = 1.
    """
    return h_ball_detail(pair, params, ball, tol).value


def local_condition_detail(pair: WeightPair, params: Params, ball: Ball, tol: float = 1e-5) -> BallValue:
    pair.check(params)
    wsup = weight_sup(pair.w, ball)
    pre = wsup / ball.vol_pow(params.delta - params.gamma + params.n * params.inv_p)
    factors = [_local_factor(v, p, ball, tol) for v, p in zip(pair.vvec, params.pvec)]
    return _product(pre, factors)


def local_condition_value(pair: WeightPair, params: Params, ball: Ball, tol: float = 1e-5) -> float:
    """||w chi_B||_inf / |B|^(delta/n - gamma/n + 1/p) times ball averages of v_i^-p_i' (sups for p_i = 1)."""
    return local_condition_detail(pair, params, ball, tol).value


def global_condition_detail(pair: WeightPair, params: Params, ball: Ball, tol: float = 1e-5) -> BallValue:
    pair.check(params)
    wsup = weight_sup(pair.w, ball)
    pre = wsup / ball.vol_pow(params.delta - 1.0)
    factors = [_factor(v, p, th, ball, "complement", 0.0, tol)
               for v, p, th in zip(pair.vvec, params.pvec, params.theta)]
    return _product(pre, factors)


def global_condition_value(pair: WeightPair, params: Params, ball: Ball, tol: float = 1e-5) -> float:
    """H_m product with the integrals and sups restricted to R^n minus B and kernel |x_B - y|^-theta_i."""
    return global_condition_detail(pair, params, ball, tol).value


_DETAIL = {"full": h_ball_detail, "local": local_condition_detail, "global": global_condition_detail}


# ---------------------------------------------------------------------------
# reports over a plan


@dataclass
class HReport:
    """Per-ball H_m values over a sample plan.

    Suprema are over the sampled balls only. ``divergence_witness`` is a ball
    where some value is infinite or, failing that, the extreme origin ball at
    which full_value exceeds its value at B(0, 1) by more than a factor 100.
    """

    params: Params
    pair: WeightPair
    per_ball: list
    sup_full: float
    sup_local: float
    sup_global: float
    argmax_full: Ball | None
    divergence_witness: Ball | None
    divergence_reason: str | None
    slope_diag: float | None
    reference_full: float | None
    blowup_small: float | None
    blowup_large: float | None
    stability: float | None = None
    columns: tuple = ("full", "local", "global")

    @property
    def diverged(self) -> bool:
        return self.divergence_witness is not None

    def to_dict(self) -> dict:
        return clean({
            "note": "suprema are taken over the sampled balls only",
            "params": self.params.to_dict(),
            "pair": self.pair.to_dict(),
            "columns": list(self.columns),
            "sup_full": self.sup_full,
            "sup_local": self.sup_local,
            "sup_global": self.sup_global,
            "argmax_full": None if self.argmax_full is None else self.argmax_full.to_dict(),
            "divergence_witness": None if self.divergence_witness is None else self.divergence_witness.to_dict(),
            "divergence_reason": self.divergence_reason,
            "slope_diag": self.slope_diag,
            "reference_full_at_unit_ball": self.reference_full,
            "blowup_small_radius": self.blowup_small,
            "blowup_large_radius": self.blowup_large,
            "stability_under_doubling": self.stability,
            "balls_tested": len(self.per_ball),
            "per_ball": [
                {"ball": b.to_dict(), "full": f, "local": lo, "global": g} for b, f, lo, g in self.per_ball
            ],
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        n = self.params.n
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow([f"center_{j}" for j in range(n)] + ["radius", "full", "local", "global"])
        for b, f, lo, g in self.per_ball:
            wr.writerow([*clean(list(b.center)), clean(b.radius), clean(f), clean(lo), clean(g)])
        return buf.getvalue()


def _nan_to_none(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def _eval_ball(args):
    pair, params, ball, tol, which = args
    row = []
    for col in ("full", "local", "global"):
        if col in which:
            row.append(_DETAIL[col](pair, params, ball, tol))
        else:
            row.append(None)
    return row


def _col_max(rows, k, balls):
    best, arg = -INF, None
    for r, b in zip(rows, balls):
        if r[k] is not None and r[k].value > best:
            best, arg = r[k].value, b
    return (best if arg is not None else math.nan), arg


def fit_loglog_slope(radii: Sequence[float], values: Sequence[float]) -> float | None:
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.size < 2 or not np.all(np.isfinite(v)) or not np.all(v > 0):
        return None
    return float(np.polyfit(np.log(r), np.log(v), 1)[0])


def h_constant(pair: WeightPair, params: Params, plan: SamplePlan, tol: float = 1e-5,
               which: Sequence[str] = ("full", "local", "global"), workers: int = 1,
               stability: bool = False) -> HReport:
    """Evaluate the per-ball functionals over every plan ball and summarise.

    ``which`` limits the columns computed; skipped columns are NaN. With
    ``stability`` the full sup is recomputed on ``plan.doubled()`` and the
    relative change is recorded.
    """
    pair.check(params)
    which = tuple(which)
    for w in which:
        if w not in _DETAIL:
            raise ValueError(f"unknown column {w!r}")
    balls = plan.balls()
    jobs = [(pair, params, b, tol, which) for b in balls]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_eval_ball, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        rows = [_eval_ball(j) for j in jobs]

    def val(r, k):
        return math.nan if r[k] is None else r[k].value

    per_ball = [(b, val(r, 0), val(r, 1), val(r, 2)) for b, r in zip(balls, rows)]
    sup_full, arg_full = _col_max(rows, 0, balls)
    sup_local, _ = _col_max(rows, 1, balls)
    sup_global, _ = _col_max(rows, 2, balls)

    witness, reason = None, None
    for b, r in zip(balls, rows):
        for cell in r:
            if cell is not None and not math.isfinite(cell.value):
                witness, reason = b, cell.reason or "infinite value"
                break
        if witness is not None:
            break

    zero = tuple(0.0 for _ in range(params.n))
    origin = [(b, r) for b, r in zip(balls, rows) if b.center == zero and r[0] is not None]
    origin.sort(key=lambda t: t[0].radius)
    slope = ref = small = large = None
    if "full" in which and origin:
        slope = fit_loglog_slope([b.radius for b, _ in origin], [r[0].value for _, r in origin])
        ref = h_ball_value(pair, params, Ball(zero, 1.0), tol)
        if math.isfinite(ref) and ref > 0:
            small = origin[0][1][0].value / ref
            large = origin[-1][1][0].value / ref
            if witness is None and small > BLOWUP_FACTOR:
                witness, reason = origin[0][0], f"full value grows by {small:.3g} from R=1 to the smallest radius"
            elif witness is None and large > BLOWUP_FACTOR:
                witness, reason = origin[-1][0], f"full value grows by {large:.3g} from R=1 to the largest radius"

    stab = None
    if stability and "full" in which:
        dbl = h_constant(pair, params, plan.doubled(), tol, which=("full",), workers=workers)
        if math.isfinite(dbl.sup_full) and math.isfinite(sup_full) and sup_full > 0:
            stab = abs(dbl.sup_full - sup_full) / sup_full
        else:
            stab = INF
    return HReport(params, pair, per_ball, sup_full, sup_local, sup_global, arg_full, witness, reason,
                   slope, ref, small, large, stab, which)


# ---------------------------------------------------------------------------
# power weights


def power_h_slope(pair: WeightPair, params: Params) -> float:
    """Exact exponent s with full_value(B(0, R)) proportional to R^s for pure power weights.

    s = alpha - sum(beta_i) + gamma - n/p - delta. Raises ValueError naming the
    failed condition when some factor is infinite.
    """
    pair.check(params)
    alpha = _power_beta(pair.w)
    if alpha is None:
        raise ValueError("power_h_slope needs w = |x|^alpha")
    if alpha < 0:
        raise ValueError(f"w = |x|^{alpha:g} is unbounded on balls containing the origin (alpha < 0)")
    betas = []
    for i, (v, p, th) in enumerate(zip(pair.vvec, params.pvec, params.theta)):
        b = _power_beta(v)
        if b is None:
            raise ValueError("power_h_slope needs v_i = |x|^beta_i")
        reason = _power_factor_reason(b, p, th, params.n, "whole")
        if reason is not None:
            raise ValueError(f"factor {i}: {reason}")
        betas.append(b)
    return alpha - sum(betas) + params.gamma - params.n * params.inv_p - params.delta


# ---------------------------------------------------------------------------
# equivalence experiments


def lemma_2_1_experiment(pair: WeightPair, params: Params, plan: SamplePlan, tol: float = 1e-5,
                         hypothesis_plan: SamplePlan | None = None, workers: int = 1) -> dict:
    """Compare the full functional with the global condition over the plan.

    The hypotheses (v_i^-1 reverse Hölder of infinite order for p_i = 1, v_i^-p_i'
    doubling for p_i > 1) are estimated first; if either is infinite the
    comparison is skipped and the status is "hypotheses not met".
    """
    pair.check(params)
    hplan = hypothesis_plan or plan
    hyp = []
    ok = True
    for i, (v, p) in enumerate(zip(pair.vvec, params.pvec)):
        if p == 1:
            est = rh_constant(weight_power(v, -1.0), INF, hplan, tol)
            kind = "rh_infinity of v^-1"
        else:
            est = doubling_constant(weight_power(v, -holder_conjugate(p)), hplan, tol)
            kind = "doubling of v^-p'"
        hyp.append({"index": i, "condition": kind, "estimate": est.to_dict()})
        ok &= math.isfinite(est.value)
    out = {"params": params.to_dict(), "pair": pair.to_dict(), "hypotheses": hyp}
    if not ok:
        out["status"] = "hypotheses not met"
        return clean(out)
    rep = h_constant(pair, params, plan, tol, which=("full", "global"), workers=workers)
    ratios = [f / g for _, f, _, g in rep.per_ball if math.isfinite(f) and math.isfinite(g) and g > 0]
    out.update({
        "status": "ok",
        "sup_full": rep.sup_full,
        "sup_global": rep.sup_global,
        "ratio": rep.sup_full / rep.sup_global if rep.sup_global > 0 else INF,
        "per_ball_ratio_min": min(ratios) if ratios else None,
        "per_ball_ratio_max": max(ratios) if ratios else None,
        "two_sided": bool(ratios) and math.isfinite(rep.sup_full) and math.isfinite(rep.sup_global),
    })
    return clean(out)


def lemma_2_2_experiment(pair: WeightPair, params: Params, plan: SamplePlan, tol: float = 1e-5,
                         workers: int = 1) -> dict:
    """Check that a finite local sup comes with a finite global sup (requires delta < tau)."""
    pair.check(params)
    if not params.delta < params.tau - EQ_TOL:
        raise ValueError(f"delta = {params.delta:g} is not below tau = {params.tau:g}")
    rep = h_constant(pair, params, plan, tol, which=("local", "global"), workers=workers)
    loc_fin = math.isfinite(rep.sup_local)
    glob_fin = math.isfinite(rep.sup_global)
    return clean({
        "params": params.to_dict(),
        "pair": pair.to_dict(),
        "tau": params.tau,
        "sup_local": rep.sup_local,
        "sup_global": rep.sup_global,
        "local_finite": loc_fin,
        "global_finite": glob_fin,
        "implication_holds": (not loc_fin) or glob_fin,
        "ratio": rep.sup_global / rep.sup_local if loc_fin and rep.sup_local > 0 else None,
    })
