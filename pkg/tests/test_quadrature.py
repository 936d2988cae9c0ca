import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fraclab.core import Ball
from fraclab.quadrature import Integrand, ess_sup, integrate_ball, integrate_complement, integrate_whole


def radial(fr, n=1, sing=False, decay=None):
    def fn(pts):
        r = np.sqrt((pts**2).sum(axis=1))
        with np.errstate(divide="ignore"):
            return fr(r)
    # |x| has a kink at the origin, so it is declared either way
    origin = ((0.0,) * n,)
    return Integrand(fn, n, singular_points=origin if sing else (), breakpoints=() if sing else origin,
                     decay_exponent=decay)


def test_constant_over_interval():
    assert integrate_ball(radial(np.ones_like), Ball((0.0,), 1.0)).value == pytest.approx(2.0, rel=1e-12)


def test_inverse_square_root_singularity():
    res = integrate_ball(radial(lambda r: r**-0.5, sing=True), Ball((0.0,), 1.0))
    assert res.value == pytest.approx(4.0, rel=1e-8)
    assert res.abs_error_estimate >= 0


def test_nonintegrable_singularity_diverges():
    res = integrate_ball(radial(lambda r: r**-2.0, sing=True), Ball((0.0,), 1.0))
    assert res.diverged and res.value == math.inf


def test_complement_power_tail():
    res = integrate_complement(radial(lambda r: (1 + r) ** -2.5, decay=2.5), Ball((0.0,), 1.0))
    assert res.value == pytest.approx(2 / 1.5 * 2**-1.5, rel=1e-8)


def test_complement_log_tail_diverges():
    assert integrate_complement(radial(lambda r: 1 / r, decay=1.0), Ball((0.0,), 1.0)).diverged


def test_complement_inverse_cube():
    res = integrate_complement(radial(lambda r: r**-3.0, decay=3.0), Ball((0.0,), 2.0))
    assert res.value == pytest.approx(0.25, rel=1e-8)


def test_complement_requires_decay():
    with pytest.raises(ValueError):
        integrate_complement(radial(np.ones_like), Ball((0.0,), 1.0))


def test_two_dimensional_disk_and_tail():
    assert integrate_ball(radial(np.ones_like, n=2), Ball((0.3, -0.2), 1.5)).value == pytest.approx(
        math.pi * 2.25, rel=1e-8)
    res = integrate_complement(radial(lambda r: r**-3.0, n=2, decay=3.0), Ball((0.0, 0.0), 1.0))
    assert res.value == pytest.approx(2 * math.pi, rel=1e-7)


def test_two_dimensional_off_center_singularity():
    # int over B((0.5, 0), 1) of |y|^-1; oracle from polar coordinates about the origin
    f = radial(lambda r: 1 / r, n=2, sing=True)
    res = integrate_ball(f, Ball((0.5, 0.0), 1.0))

    def chord(phi):  # distance from the origin to the circle along direction phi
        return 0.5 * math.cos(phi) + math.sqrt(0.25 * math.cos(phi) ** 2 + 0.75)
    oracle, _ = integrate.quad(chord, 0, 2 * math.pi, epsabs=1e-13)
    assert res.value == pytest.approx(oracle, rel=1e-7)


@given(st.floats(-0.9, 2.0), st.floats(-3, 3), st.floats(0.1, 3))
def test_additivity_against_scipy(alpha, c, R):
    # f = |y|^alpha (1 + |y|)^-(alpha + 2.5): singular at 0 when alpha < 0, tail |y|^-2.5
    def fr(r):
        return np.power(r, alpha) * np.power(1 + r, -(alpha + 2.5))
    tol = 1e-8
    f = radial(fr, sing=alpha < 0, decay=2.5)
    ball = Ball((c,), R)
    split = integrate_ball(f, ball, tol).value + integrate_complement(f, ball, tol).value

    def g(t):
        return float(fr(np.array([abs(t)]))[0])
    left, _ = integrate.quad(g, -np.inf, 0, epsabs=1e-13, epsrel=1e-12, limit=200)
    right, _ = integrate.quad(g, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    assert split == pytest.approx(left + right, rel=3 * tol, abs=3 * tol)
    assert integrate_whole(f, ball, tol).value == pytest.approx(split, rel=1e-12)


@given(st.floats(-0.9, 3.0), st.floats(0.01, 10.0), st.floats(0.1, 10.0))
def test_power_dilation(alpha, R, lam):
    f = radial(lambda r: np.power(r, alpha), sing=alpha < 0)
    a = integrate_ball(f, Ball((0.0,), R), 1e-10).value
    b = integrate_ball(f, Ball((0.0,), lam * R), 1e-10).value
    assert b == pytest.approx(lam ** (1 + alpha) * a, rel=1e-8)


@given(st.floats(-0.8, 1.0), st.floats(0.0, 2.0), st.floats(-2, 2), st.floats(0.2, 2))
def test_monotonicity(alpha, shift, c, R):
    tol = 1e-8
    f = radial(lambda r: np.power(r, alpha), sing=alpha < 0)
    g = radial(lambda r: np.power(r, alpha) + shift, sing=alpha < 0)
    ball = Ball((c,), R)
    assert integrate_ball(f, ball, tol).value <= integrate_ball(g, ball, tol).value + 2 * tol


def test_ess_sup_examples():
    assert ess_sup(radial(lambda r: r), Ball((0.0,), 1.0)) == pytest.approx(1.0, rel=1e-12)
    f = radial(lambda r: np.exp(-r), decay=10.0)
    assert ess_sup(f, Ball((0.0,), 2.0), kind="complement") == pytest.approx(math.exp(-2), rel=1e-12)
    assert ess_sup(radial(lambda r: r**-0.5, sing=True), Ball((0.0,), 1.0)) == math.inf


def test_ess_sup_finds_interior_peak():
    f = Integrand(lambda p: np.exp(-50 * ((p - 0.3337) ** 2).sum(axis=1)), 1)
    assert ess_sup(f, Ball((0.0,), 1.0), points_per_set=64) == pytest.approx(1.0, rel=1e-9)
    g = Integrand(lambda p: np.exp(-50 * ((p - np.array([0.3337, -0.2])) ** 2).sum(axis=1)), 2, decay_exponent=5)
    assert ess_sup(g, Ball((1.0, 0.0), 0.3), kind="complement") == pytest.approx(1.0, rel=1e-8)


@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(0.5, 5))
def test_ess_sup_never_below_grid(c, R, k):
    f = Integrand(lambda p: np.sin(k * p[:, 0]) + 0.1 * p[:, 0], 1)
    npts = 256
    grid = np.linspace(c - R, c + R, npts)
    assert ess_sup(f, Ball((c,), R), points_per_set=npts) >= f(grid[:, None]).max()


@pytest.mark.parametrize("s", [0.9, 0.97, 0.994, 0.999])
def test_near_critical_singularity_converges(s):
    # int_{-1}^{1} |y|^-s dy = 2 / (1 - s)
    res = integrate_ball(radial(lambda r: r**-s, sing=True), Ball((0.0,), 1.0))
    assert not res.diverged
    assert res.value == pytest.approx(2 / (1 - s), rel=1e-6)


def test_critical_singularity_diverges():
    assert integrate_ball(radial(lambda r: 1 / r, sing=True), Ball((0.0,), 1.0)).diverged
    assert integrate_ball(radial(lambda r: r**-2.0, n=2, sing=True), Ball((0.0, 0.0), 1.0)).diverged
