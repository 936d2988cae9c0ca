import math

import pytest

from fraclab.bound import (
    bump_batteries,
    check_hypotheses,
    forward_battery,
    forward_check,
    necessity_check,
    verify_bound,
)
from fraclab.core import Params, SamplePlan
from fraclab.hclass import WeightPair, h_ball_value
from fraclab.operator import Bump
from fraclab.region import construct_example
from fraclab.weights import Constant, Power

CASE_B = Params(1, 2, 1.6, 0.2, (1.45, 1.45))


def tiny_plan(radii=3, centers=1):
    return SamplePlan.standard(1, n_radii=radii, n_centers=centers)


def test_gate_rejects_small_p():
    p = Params(1, 2, 0.5, -1.0, (2.0, 2.0))
    rep = check_hypotheses(construct_example(p), p)
    assert not rep.ok and not rep.p_ok and rep.rh == []
    assert rep.message == "p = 1 does not exceed n/gamma = 2"
    assert rep.to_dict()["ok"] is False


def test_gate_accepts_case_b():
    rep = check_hypotheses(construct_example(CASE_B), CASE_B, tiny_plan(5, 2))
    assert rep.ok and len(rep.rh) == 2
    assert all(r["condition"] == "rh_2 of v^-p'" for r in rep.rh)
    assert all(r["finite"] and math.isfinite(r["estimate"]["value"]) for r in rep.rh)


def test_gate_uses_rh_infinity_for_p_one():
    p = Params(1, 2, 1.6, -0.4, (1.0, 2.0))
    rep = check_hypotheses(construct_example(p), p, tiny_plan(5, 2))
    assert rep.rh[0]["condition"] == "rh_infinity of v^-1"


def test_gate_flags_infinite_reverse_holder():
    # v^-1 = |x|^-1 is unbounded near the origin, so no reverse Hölder bound of infinite order
    p = Params(1, 2, 1.6, -0.4, (1.0, 2.0))
    pair = WeightPair(Constant(1.0), (Power(1.0), Constant(1.0)))
    rep = check_hypotheses(pair, p, tiny_plan(5, 2))
    assert not rep.rh_ok and "i in [0]" in rep.message


def test_batteries_are_seeded():
    a = bump_batteries(CASE_B, 3, seed=4)
    assert a == bump_batteries(CASE_B, 3, seed=4)
    assert a != bump_batteries(CASE_B, 3, seed=5)
    assert all(len(t) == 2 and all(isinstance(f, Bump) for f in t) for t in a)


def test_forward_ratio_is_scale_free():
    pair = construct_example(CASE_B)
    balls = tiny_plan().balls()
    f1, f2 = bump_batteries(CASE_B, 1)[0]
    base = forward_battery((f1, f2), pair, CASE_B, balls, 1e-6)
    scaled = forward_battery((Bump(f1.center, f1.radius, 3 * f1.height), f2), pair, CASE_B, balls, 1e-6)
    assert 0 < base.sup_ratio < math.inf
    assert scaled.sup_ratio == pytest.approx(base.sup_ratio, rel=1e-5)
    assert scaled.norms[0] == pytest.approx(3 * base.norms[0], rel=1e-9)


def test_forward_check_summary():
    pair = construct_example(CASE_B)
    bats = bump_batteries(CASE_B, 2)
    rep = forward_check(pair, CASE_B, tiny_plan(), bats, 1e-5)
    assert rep["balls_tested"] == 6 and len(rep["batteries"]) == 2
    # battery entries are rounded to 12 significant digits
    assert rep["sup_ratio"] == pytest.approx(max(b["sup_ratio"] for b in rep["batteries"]), rel=1e-11)


def test_necessity_constant_bounded_by_h_functional():
    pair = construct_example(CASE_B)
    plan = tiny_plan(5, 2)
    rep = necessity_check(pair, CASE_B, plan, bump_batteries(CASE_B, 4, seed=1))
    assert rep["finite"] and rep["balls_tested"] == 15
    assert rep["constant"] == pytest.approx(max(b["max_ratio"] for b in rep["batteries"]), rel=1e-11)
    # Hölder's inequality bounds every per-ball ratio by the H_m functional on that ball
    assert rep["constant"] <= rep["h_value_at_argmax"] * (1 + 1e-6)


def test_verify_bound_small_run():
    pair = construct_example(CASE_B)
    rep = verify_bound(pair, CASE_B, tiny_plan(), n_batteries=2, necessity_batteries=3,
                       hypothesis_plan=tiny_plan(5, 2))
    assert rep["status"] == "ok"
    assert [f["tol"] for f in rep["forward"]] == [1e-5, 1e-6]
    assert rep["forward_relative_change"] < 0.05
    assert rep["necessity"]["finite"]


def test_verify_bound_skips_when_gate_fails():
    p = Params(1, 2, 0.5, -1.0, (2.0, 2.0))
    rep = verify_bound(construct_example(p), p, tiny_plan())
    assert rep["status"] == "hypotheses not met" and "forward" not in rep and "necessity" not in rep


def test_necessity_ratio_never_exceeds_h_on_any_ball():
    pair = construct_example(CASE_B)
    plan = tiny_plan(4, 1)
    for b in plan.balls():
        rep = necessity_check(pair, CASE_B, SamplePlan(0, (b.radius,), (b.center,)),
                              bump_batteries(CASE_B, 2, seed=2), h_reference=False)
        assert rep["constant"] <= h_ball_value(pair, CASE_B, b) * (1 + 1e-6)
