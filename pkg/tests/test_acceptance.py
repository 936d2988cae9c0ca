"""Acceptance suite: one test per criterion, each with its tolerance and runtime limit.

A PASS/FAIL line per criterion is printed in the terminal summary (see conftest.py).
"""

import json
import math
import time

import numpy as np
import pytest

from fraclab.bound import bump_batteries, forward_check, necessity_check
from fraclab.core import Ball, Params, SamplePlan, holder_conjugate
from fraclab.hclass import WeightPair, h_constant, power_h_slope
from fraclab.lipschitz import lip_seminorm
from fraclab.operator import Bump, eval_I, eval_I_many, eval_J_many, random_bumps, sample_kernel_bound
from fraclab.quadrature import integrate_ball
from fraclab.region import (
    TRIVIAL_V_INFINITE,
    TRIVIAL_V_OR_W,
    classify_region,
    construct_example,
    region_plot_data,
)
from fraclab.weights import Constant, Power, as_integrand, power_ball_integral

DESK = {  # one point per sub-band at n = 1, m = 2, gamma = 1.6
    "a": (0.0, (2.0, 2.0)),
    "b": (0.2, (1.45, 1.45)),
    "c": (0.3, (5.0, 5.0)),
    "d": (0.3, (2.0, 2.0)),
    "e": (0.45, (2.0, 2.0)),
    "f": (-0.4, (1.0, 2.0)),
}
CASE_B = Params(1, 2, 1.6, 0.2, (1.45, 1.45))


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f} s, limit {self.limit} s"


def power_bracket(alpha):
    """Bounds of int_B |x|^alpha / (R max(R, |x_B|)^alpha) on the line.

    With t = |x_B|/R the ratio is int_{t-1}^{t+1} |u|^alpha du / max(1, t)^alpha.
    alpha >= 0: |u| <= 2 max(1, t) gives the upper bound; the interval contains
    [t, t+1] (t >= 1) or has at least the centred mass 2/(alpha+1) (t < 1).
    alpha < 0: the centred interval maximises the integral and |u| >= t/2 for t >= 2;
    |u| <= 2 max(1, t) gives the lower bound.
    """
    if alpha >= 0:
        return min(1.0, 2.0 / (alpha + 1.0)), 2.0 ** (alpha + 1.0)
    return 2.0 ** (1.0 + alpha), 2.0 ** (1.0 - alpha) / (alpha + 1.0)


def test_criterion_01_power_ball_bracket():
    rng = np.random.default_rng(20240601)
    worst_rel = 0.0
    with Timer(10):
        for _ in range(500):
            alpha = rng.uniform(-0.95, 3.0)
            R = 10.0 ** rng.uniform(-3, 3)
            c = rng.choice([-1, 1]) * 10.0 ** rng.uniform(-4, 4) * R
            ball = Ball((c,), R)
            res = power_ball_integral(alpha, ball)
            lo, hi = power_bracket(alpha)
            ratio = res.value / res.comparand
            assert lo * (1 - 1e-9) <= ratio <= hi * (1 + 1e-9), (alpha, c, R, ratio)
            quad = integrate_ball(as_integrand(Power(alpha), 1), ball, tol=1e-10)
            rel = abs(quad.value - res.value) / res.value
            worst_rel = max(worst_rel, rel)
    assert worst_rel <= 1e-8


def random_power_case(rng):
    n, m = [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2)][rng.integers(5)]
    gamma = rng.uniform(0.15, m * n - 0.15)
    pvec = tuple(1.0 if rng.random() < 0.15 else float(rng.uniform(1.3, 6.0)) for _ in range(m))
    params = Params(n, m, gamma, float(rng.uniform(-1.0, 1.0)), pvec)
    betas = []
    for p, th in zip(pvec, params.theta):
        # convergent factor: n/p' - theta < beta < n/p' (p > 1), -theta <= beta <= 0 (p = 1)
        hi = n / holder_conjugate(p)
        lo = hi - th
        betas.append(float(lo + (hi - lo) * rng.uniform(0.1, 0.9)))
    alpha = float(rng.uniform(0.0, 2.0))
    pair = WeightPair(Power(alpha) if alpha else Constant(1.0),
                      tuple(Power(b) if b else Constant(1.0) for b in betas))
    return pair, params


def test_criterion_02_power_scaling_law():
    rng = np.random.default_rng(7)
    worst = 0.0
    with Timer(120):
        for _ in range(20):
            pair, params = random_power_case(rng)
            plan = SamplePlan.standard(params.n, n_radii=13, n_centers=0)
            rep = h_constant(pair, params, plan, which=("full",))
            assert rep.slope_diag is not None, rep.divergence_reason
            worst = max(worst, abs(rep.slope_diag - power_h_slope(pair, params)))
    assert worst < 0.02


def test_criterion_03_example_weights_certified():
    plan = SamplePlan.standard(1)
    assert len(plan) >= 2000
    with Timer(600):
        for label, (delta, pvec) in DESK.items():
            params = Params(1, 2, 1.6, delta, pvec)
            pair = construct_example(params)
            assert pair.label == label
            rep = h_constant(pair, params, plan, which=("full",), stability=True)
            assert math.isfinite(rep.sup_full) and not rep.diverged, (label, rep.divergence_reason)
            assert rep.stability < 0.05, (label, rep.stability)


def test_criterion_04_trivial_region_divergence():
    plan = SamplePlan.standard(1, n_radii=7, n_centers=0)
    probes = [
        # delta > 1 with w = v_i = 1: s = gamma - n/p - delta = -1
        (Params(1, 2, 1.5, 1.5, (2.0, 2.0)), (Constant(1.0), Constant(1.0)), "small"),
        # corner delta = gamma - n/p = 1 with v_i = |x|^(1/2): s = -1
        (Params(1, 2, 1.5, 1.0, (4.0, 4.0)), (Power(0.5), Power(0.5)), "small"),
        # delta < gamma - m n with w = v_i = 1: s = 1.5, blow-up as R grows
        (Params(1, 2, 1.5, -1.0, (2.0, 2.0)), (Constant(1.0), Constant(1.0)), "large"),
    ]
    with Timer(60):
        for params, vv, side in probes:
            want = TRIVIAL_V_OR_W if side == "large" else TRIVIAL_V_INFINITE
            assert classify_region(params).status == want
            rep = h_constant(WeightPair(Constant(1.0), vv), params, plan, which=("full",))
            assert rep.diverged
            if side == "small":
                assert rep.blowup_small > 1e2 and rep.divergence_witness.radius == 1e-3
            else:
                assert rep.blowup_large > 1e2 and rep.divergence_witness.radius == 1e3


def test_criterion_05_kernel_difference_bound():
    with Timer(60):
        for n in (1, 2):
            params = Params(n, 2, float(n), 0.0, (2.0, 2.0))  # gamma = m n / 2
            unit = Ball((0.0,) * n, 1.0)
            a = sample_kernel_bound(params, unit, 10_000, seed=0)
            b = sample_kernel_bound(params, unit, 10_000, seed=1)
            assert a["min_ratio"] > 0 and b["min_ratio"] > 0
            assert abs(a["min_ratio"] - b["min_ratio"]) / max(a["min_ratio"], b["min_ratio"]) < 0.2
            big = sample_kernel_bound(params, Ball((0.0,) * n, 50.0), 10_000, seed=0)
            assert big["min_ratio"] == pytest.approx(a["min_ratio"], rel=1e-6)


def test_criterion_06_forward_check():
    pair = construct_example(CASE_B)
    plan = SamplePlan.standard(1, n_radii=20, n_centers=24)
    assert len(plan) == 500
    batteries = bump_batteries(CASE_B, 3)
    with Timer(900):
        coarse = forward_check(pair, CASE_B, plan, batteries, 1e-5)
        fine = forward_check(pair, CASE_B, plan, batteries, 1e-6)
    s0, s1 = coarse["sup_ratio"], fine["sup_ratio"]
    print(f"forward sup ratio {s0:.6g} (tol 1e-5), {s1:.6g} (tol 1e-6)")
    assert math.isfinite(s1) and s1 > 0
    assert abs(s1 - s0) / s1 < 0.05


def test_criterion_07_necessity_inequality():
    pair = construct_example(CASE_B)
    plan = SamplePlan.standard(1)
    with Timer(300):
        rep = necessity_check(pair, CASE_B, plan, bump_batteries(CASE_B, 20, seed=1))
    print(f"necessity constant {rep['constant']:.6g} over {rep['balls_tested']} balls")
    assert rep["finite"] and len(rep["batteries"]) == 20
    assert all(b["max_ratio"] <= rep["constant"] for b in rep["batteries"])
    # the argmax ratio is bounded by the H_m functional on that ball
    assert rep["constant"] <= rep["h_value_at_argmax"] * (1 + 1e-6)


def test_criterion_08_seminorm_algebra():
    plan = SamplePlan.standard(1, n_radii=9, n_centers=4)

    def f(pts):
        return np.sin(3 * pts[:, 0]) + np.abs(pts[:, 0]) ** 0.3

    with Timer(10):
        base = lip_seminorm(f, Power(0.2), 0.4, plan)
        shifted = lip_seminorm(lambda p: f(p) + 1.0, Power(0.2), 0.4, plan)
        scaled = lip_seminorm(lambda p: -2.5 * f(p), Power(0.2), 0.4, plan)
        linear = lip_seminorm(lambda p: p[:, 0], Constant(1.0), 1.0, plan)
        step = lip_seminorm(lambda p: (p[:, 0] > 0.3).astype(float), Power(0.2), 0.4, plan)
        step_shifted = lip_seminorm(lambda p: (p[:, 0] > 0.3) + 1.0, Power(0.2), 0.4, plan)
    for (_, q0), (_, q1) in zip(base.per_ball, shifted.per_ball):
        # f + 1 differs from f by rounding in the last bit of each sample
        assert q1 == pytest.approx(q0, rel=1e-12, abs=1e-15)
    # a step shifted by 1 is exactly representable, so quotients must agree exactly
    for (_, q0), (_, q1) in zip(step.per_ball, step_shifted.per_ball):
        assert q1 == q0
    assert scaled.sup == pytest.approx(2.5 * base.sup, rel=1e-10)
    assert abs(linear.sup - 0.25) <= 1e-8
    constant = lip_seminorm(lambda p: np.full(len(p), 4.0), Power(0.2), 0.4, plan)
    assert all(q == 0.0 for _, q in constant.per_ball)


def test_criterion_09_operator_invariances():
    rng = np.random.default_rng(99)
    cases = [Params(1, 2, 1.0, 0.0, (2.0, 2.0)), Params(1, 3, 1.5, 0.0, (3.0,) * 3),
             Params(2, 2, 2.0, 0.0, (2.0, 2.0))]
    tol = 1e-6
    with Timer(300):
        for k in range(50):
            params = cases[k % 3]
            f = random_bumps(params, rng)
            x = rng.uniform(-2, 2, size=params.n)
            h = rng.uniform(-5, 5, size=params.n)
            lam = 10.0 ** rng.uniform(-1, 1)
            base = eval_I(f, x, params, tol)
            shifted = tuple(Bump(tuple(np.add(g.center, h)), g.radius, g.height) for g in f)
            assert eval_I(shifted, x + h, params, tol) == pytest.approx(base, rel=1e-6)
            dil = tuple(Bump(tuple(np.asarray(g.center) / lam), g.radius / lam, g.height) for g in f)
            expected = lam ** (-params.gamma) * eval_I(f, lam * x, params, tol)
            assert eval_I(dil, x, params, tol) == pytest.approx(expected, rel=1e-6)
            ball = Ball(tuple(rng.uniform(-1, 1, size=params.n)), float(rng.uniform(0.2, 2.0)))
            X = rng.uniform(-2, 2, size=(4, params.n))
            J = eval_J_many(f, X, ball, params, tol)
            I = eval_I_many(f, X, params, tol)
            assert np.all(np.abs((J - J[0]) - (I - I[0])) <= 2 * tol)


def test_criterion_10_region_figures():
    with Timer(10):
        sheets = {g: json.loads(region_plot_data(1, 2, g, 64).polygon_json()) for g in (1.5, 1.0, 0.5)}
    for g, poly in sheets.items():
        assert poly["right_edge"]["inv_p"] == 2.0
        assert poly["bottom_edge"]["delta"] == pytest.approx(g - 2)
        assert poly["tau_line"]["delta"] < poly["apex_delta"]
        assert max(v[0] for v in poly["vertices"]) == 2.0
        if g > 1:
            assert poly["flat_top"]["delta"] == 1.0
            assert poly["flat_top"]["x_to"] == pytest.approx(g - 1)
            assert poly["open_corner"] == pytest.approx([g - 1, 1.0])
        else:
            assert poly["flat_top"] is None and poly["open_corner"] is None
            assert poly["apex_delta"] == g
            assert [0.0, g] in poly["vertices"]
