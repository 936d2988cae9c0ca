"""Quadrature for power-law integrands over balls, complements and R^n (n = 1, 2).

Every integrand met in this package is a ratio of radial powers, so shell
sums taken on dyadic shells around a singular point (inward) or towards
infinity (outward) are asymptotically geometric. Each shell is integrated by
vectorised adaptive Gauss-Legendre panels; the remaining geometric tail is
added by extrapolation once the shell ratio has settled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import Ball, SamplePlan

_GLX, _GLW = np.polynomial.legendre.leggauss(10)

# shell-ratio divergence test towards a singular point: a run of shell ratios at
# or above 1 - 1e-9 is read as a critical or worse singularity; ratios below it
# converge geometrically however close to 1
INWARD_RATIO = 1.0 - 1e-9
INWARD_STREAK = 8
MAX_SHELLS = 400
MAX_OUTWARD_SHELLS = 240
MAX_ACTIVE_PANELS = 4096


@dataclass(frozen=True)
class Integrand:
    """Vectorised integrand: ``fn`` maps an (N, n) array of points to N values.

    ``singular_points`` may carry infinite values and are approached through
    dyadic shells. ``breakpoints`` are kinks or peaks (finite) where panels are
    split; an undeclared kink can fall between quadrature nodes and go unseen.
    ``decay_exponent`` sigma states f = O(|y|^-sigma) at infinity.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    n: int = 1
    singular_points: tuple = ()
    breakpoints: tuple = ()
    decay_exponent: float | None = None

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.n)
        return np.asarray(self.fn(pts), dtype=float).reshape(-1)

    @property
    def singular_array(self) -> np.ndarray:
        return np.asarray(self.singular_points, dtype=float).reshape(-1, self.n)

    @property
    def break_array(self) -> np.ndarray:
        return np.asarray(self.breakpoints, dtype=float).reshape(-1, self.n)


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    shells_used: int
    diverged: bool
    overflow: bool = False

    @property
    def finite(self) -> bool:
        return not (self.diverged or self.overflow) and math.isfinite(self.value)

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return _combine([self, other])


def _combine(parts: Sequence[QuadResult]) -> QuadResult:
    diverged = any(p.diverged for p in parts)
    overflow = any(p.overflow for p in parts)
    shells = sum(p.shells_used for p in parts)
    if diverged or overflow:
        return QuadResult(math.inf, math.inf, shells, diverged, overflow and not diverged)
    value = math.fsum(p.value for p in parts)
    err = math.fsum(p.abs_error_estimate for p in parts)
    if not math.isfinite(value):
        return QuadResult(math.inf, math.inf, shells, False, True)
    return QuadResult(value, err, shells, False, False)


_DIVERGED = QuadResult(math.inf, math.inf, 0, True)


# ---------------------------------------------------------------------------
# panels and shells


def _gl(g, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    t = mid[:, None] + half[:, None] * _GLX[None, :]
    vals = np.asarray(g(t.reshape(-1)), dtype=float).reshape(t.shape)
    with np.errstate(invalid="ignore", over="ignore"):
        return (vals * _GLW).sum(axis=1) * half


def adaptive_panels(g, a, b, rtol: float, max_depth: int = 40, atol_density: float = 0.0):
    """Integrate g over each panel [a_k, b_k]; returns (values, errors) per panel.

    Panels are bisected until the two-half estimate agrees with the whole-panel
    estimate to ``rtol`` relative to the panel's own value, or to
    ``atol_density`` times the panel width.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    npan = a.size
    totals = np.zeros(npan)
    errs = np.zeros(npan)
    owner = np.arange(npan)
    coarse = _gl(g, a, b)
    for depth in range(max_depth):
        mid = 0.5 * (a + b)
        left = _gl(g, a, mid)
        right = _gl(g, mid, b)
        fine = left + right
        with np.errstate(invalid="ignore"):
            err = np.abs(fine - coarse)
            ok = (err <= np.maximum(rtol * np.abs(fine), atol_density * (b - a))) | (err <= 1e-300) | ~np.isfinite(fine)
        # a noisy integrand would otherwise double the active panels every level
        if depth == max_depth - 1 or np.count_nonzero(~ok) > MAX_ACTIVE_PANELS:
            ok[:] = True
        np.add.at(totals, owner[ok], fine[ok])
        np.add.at(errs, owner[ok], np.where(np.isfinite(err[ok]), err[ok], 0.0))
        keep = ~ok
        if not keep.any():
            break
        a = np.concatenate([a[keep], mid[keep]])
        b = np.concatenate([mid[keep], b[keep]])
        owner = np.concatenate([owner[keep], owner[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    return totals, errs


def _shell_series(g, bounds, rtol: float, inward: bool, base: float = 0.0,
                  batch: int = 8, max_shells: int = MAX_SHELLS) -> QuadResult:
    """Sum shell integrals sum_k int_{shell k} g with geometric tail extrapolation.

    ``bounds(k)`` returns the (lo, hi) arrays for shell indices k. ``base`` is the
    value of the rest of the integral, used only for the stopping tolerance.
    """
    sums: list[float] = []
    ratios: list[float] = []
    total = 0.0
    err = 0.0
    streak = 0
    zeros = 0
    k0 = 0
    while k0 < max_shells:
        ks = np.arange(k0, k0 + batch)
        lo, hi = bounds(ks)
        # a kink inside a shell would otherwise be resolved to rtol of its own
        # panel however little the shell adds to the total
        span = float(np.sum(hi - lo))
        floor = 0.01 * rtol * abs(total + base) / span if span > 0 and math.isfinite(total) else 0.0
        s, e = adaptive_panels(g, lo, hi, 0.1 * rtol, atol_density=floor)
        for j in range(batch):
            sk = float(s[j])
            if math.isnan(sk):
                sk = math.inf
            if math.isinf(sk):
                return QuadResult(math.inf, math.inf, len(sums) + 1, False, True)
            sums.append(sk)
            total += sk
            err += float(e[j])
            prev = sums[-2] if len(sums) > 1 else None
            if sk == 0.0:
                zeros += 1
                if zeros >= 2 and len(sums) >= 3:
                    return QuadResult(total, err, len(sums), False)
                continue
            zeros = 0
            if prev is None or prev == 0.0:
                continue
            q = sk / prev
            ratios.append(q)
            if inward:
                streak = streak + 1 if q >= INWARD_RATIO else 0
            if q < 1.0 and len(ratios) >= 2:
                tail = sk * q / (1.0 - q)
                dq = abs(q - ratios[-2])
                scale = rtol * abs(total + base)
                if tail <= 0.1 * scale:
                    return QuadResult(total + tail, err + tail, len(sums), False)
                if len(ratios) >= 3:
                    slack = tail * dq / (1.0 - q) ** 2
                    if slack <= 0.1 * scale and dq <= 0.05 * (1.0 - q):
                        return QuadResult(total + tail, err + slack, len(sums), False)
            if inward and streak >= INWARD_STREAK:
                return QuadResult(math.inf, math.inf, len(sums), True)
        k0 += batch
    # no convergence within the shell budget
    if ratios and ratios[-1] < 1.0 and not (inward and ratios[-1] >= INWARD_RATIO):
        q = ratios[-1]
        tail = sums[-1] * q / (1.0 - q)
        return QuadResult(total + tail, err + tail, len(sums), False)
    return QuadResult(math.inf, math.inf, len(sums), True)


def _integrate_interval(g, a: float, b: float, sing_a: bool, sing_b: bool,
                        rtol: float, scale: float, decay: float | None, atol: float = 0.0) -> QuadResult:
    """int_a^b g for finite a and a <= b <= inf (1-D engine).

    ``atol`` is an absolute error budget for a finite non-singular piece of a
    larger integral.
    """
    if b == math.inf:
        L = scale
        head = _integrate_interval(g, a, a + L, sing_a, False, rtol, scale, None)
        if not head.finite:
            return head
        if decay is None:
            raise ValueError("an infinite range needs a decay exponent")
        if decay <= 1.0:
            return QuadResult(math.inf, math.inf, head.shells_used, True)

        def outward(ks):
            return a + L * 2.0**ks, a + L * 2.0 ** (ks + 1)

        tail = _shell_series(g, outward, rtol, inward=False, base=head.value,
                             max_shells=MAX_OUTWARD_SHELLS)
        return _combine([head, tail])
    if not b > a:
        return QuadResult(0.0, 0.0, 0, False)
    if sing_a and sing_b:
        mid = 0.5 * (a + b)
        return _combine([
            _integrate_interval(g, a, mid, True, False, rtol, scale, None),
            _integrate_interval(g, mid, b, False, True, rtol, scale, None),
        ])
    h = b - a
    if sing_a:
        def inward(ks):
            return a + h * 2.0 ** (-ks - 1), a + h * 2.0 ** (-ks)
        return _shell_series(g, inward, rtol, inward=True)
    if sing_b:
        def inward_b(ks):
            return b - h * 2.0 ** (-ks), b - h * 2.0 ** (-ks - 1)
        return _shell_series(g, inward_b, rtol, inward=True)
    # absolute floor from a rough total keeps endpoint square-root behaviour from
    # forcing bisection to full depth
    edges = np.linspace(a, b, 5)
    rough = float(np.abs(_gl(g, edges[:-1], edges[1:])).sum())
    floor = 0.1 * max(rtol * rough, atol) / h if math.isfinite(rough) else 0.0
    val, e = adaptive_panels(g, edges[:-1], edges[1:], 0.1 * rtol, atol_density=floor)
    v = math.fsum(val)
    if not math.isfinite(v):
        return QuadResult(math.inf, math.inf, 1, False, True)
    return QuadResult(v, float(np.sum(e)), 1, False)


def _is_in(x: float, pts: Sequence[float]) -> bool:
    return any(abs(x - p) <= 1e-14 * max(1.0, abs(p)) for p in pts)


def _integrate_1d(f: Integrand, intervals, tol: float, scale: float) -> QuadResult:
    sing = sorted(float(p) for p in f.singular_array[:, 0])
    special = sorted(set(sing) | {float(p) for p in f.break_array[:, 0]})
    parts = []

    def g_pos(t):
        return f(t[:, None])

    def g_neg(t):
        return f(-t[:, None])

    for lo, hi in intervals:
        cuts = [p for p in special if lo < p < hi]
        if lo == -math.inf and hi == math.inf and not cuts:
            cuts = [0.0]
        nodes = [lo] + cuts + [hi]
        for a, b in zip(nodes[:-1], nodes[1:]):
            sa = math.isfinite(a) and _is_in(a, sing)
            sb = math.isfinite(b) and _is_in(b, sing)
            L = max(scale, abs(a) if math.isfinite(a) else abs(b))
            if a == -math.inf:
                parts.append(_integrate_interval(g_neg, -b, math.inf, sb, False, tol, L, f.decay_exponent))
            else:
                parts.append(_integrate_interval(g_pos, a, b, sa, sb, tol, L, f.decay_exponent))
    return _combine(parts)


# ---------------------------------------------------------------------------
# two dimensions: polar coordinates about a pole


def _angular_panels(lo, hi, dirs, n_base: int, levels: int):
    """Panel edges on [lo, hi] (per radial node), graded towards the angles in ``dirs``."""
    width = hi - lo
    fr = np.linspace(0.0, 1.0, n_base + 1)
    edges = [lo[:, None] + width[:, None] * fr[None, :]]
    for phi in dirs:
        # bring phi into [lo, lo + 2 pi)
        ph = lo + np.mod(phi - lo, 2 * np.pi)
        inside = ph < hi
        off = np.clip(ph - lo, 0.0, width)
        geo = 2.0 ** -np.arange(1, levels + 1)
        span = np.minimum(off, width - off)[:, None]
        e = np.concatenate([ph[:, None] - span * geo, ph[:, None] + span * geo, ph[:, None]], axis=1)
        e = np.where(inside[:, None], e, lo[:, None])
        edges.append(e)
    edges = np.sort(np.concatenate(edges, axis=1), axis=1)
    return edges


def _polar_setup(f: Integrand, ball: Ball, kind: str):
    c = ball.center_array
    R = ball.radius
    sing = f.singular_array
    in_region = [s for s in sing if _in_kind(s, c, R, kind)]
    if len(in_region) > 1:
        raise ValueError("two-dimensional quadrature supports one singular point per region")
    if in_region:
        return in_region[0], True
    # a lone kink, or a singular point just outside the region, makes the best
    # pole: radial functions become constant in angle
    near = [s for s in sing if abs(np.linalg.norm(s - c) - R) < 0.1 * R]
    kinks = [b for b in f.break_array if _in_kind(b, c, R, kind)] + near
    return (kinks[0] if len(kinks) == 1 else c), False


def _is_singular(pt, f: Integrand) -> bool:
    return any(np.array_equal(pt, s) for s in f.singular_array)


def _in_kind(pt, c, R: float, kind: str) -> bool:
    dist = np.linalg.norm(pt - c)
    if kind == "ball":
        return dist <= R * (1 + 1e-14)
    if kind == "complement":
        return dist >= R * (1 - 1e-14)
    return True


def _integrate_2d(f: Integrand, ball: Ball, kind: str, tol: float) -> QuadResult:
    c = ball.center_array
    R = ball.radius
    pole, pole_singular = _polar_setup(f, ball, kind)
    dvec = c - pole
    d = float(np.linalg.norm(dvec))
    # d^2 - R^2 exactly from the float inputs: near tangency its rounding would
    # move the entry radius by more than the radius itself
    gap = float(sum((Fraction(float(ci)) - Fraction(float(pi))) ** 2 for ci, pi in zip(c, pole))
                - Fraction(float(R)) ** 2)
    phi = math.atan2(dvec[1], dvec[0]) if d > 0 else 0.0
    kinks = [b for b in f.break_array if _in_kind(b, c, R, kind)]
    others = [b for b in kinks + list(f.singular_array) if np.linalg.norm(b - pole) > 1e-14 * max(1.0, R)]
    dirs = [math.atan2(b[1] - pole[1], b[0] - pole[0]) for b in others]
    if kind != "whole" and d > 0:
        dirs.append(phi)
    n_base = 4 if tol >= 1e-6 else 8
    levels = 10 if tol >= 1e-6 else 16

    def arc(rho):
        if kind == "whole":
            return np.zeros_like(rho), np.full_like(rho, 2 * np.pi)
        if d == 0.0:
            hw = np.where(rho < R, np.pi, 0.0)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                kappa = (rho**2 + gap) / (2.0 * rho * d)
            kappa = np.where(rho > 0, kappa, np.where(d < R, -1.0, 1.0))
            hw = np.arccos(np.clip(kappa, -1.0, 1.0))
        if kind == "ball":
            return phi - hw, phi + hw
        return phi + hw, phi + 2 * np.pi - hw

    def g(rho):
        lo, hi = arc(rho)
        edges = _angular_panels(lo, hi, dirs, n_base, levels)
        a, b = edges[:, :-1], edges[:, 1:]
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        th = mid[..., None] + half[..., None] * _GLX
        x = pole[0] + rho[:, None, None] * np.cos(th)
        y = pole[1] + rho[:, None, None] * np.sin(th)
        vals = f(np.stack([x.reshape(-1), y.reshape(-1)], axis=1)).reshape(th.shape)
        with np.errstate(invalid="ignore", over="ignore"):
            vals = np.where(half[..., None] > 0, vals, 0.0)
            inner = (vals * _GLW).sum(axis=-1) * half
            return rho * inner.sum(axis=1)

    edge = abs(gap) / (d + R)  # |d - R|
    rad_breaks = {edge, d + R, d}
    rad_breaks |= {float(np.linalg.norm(b - pole)) for b in others}
    if kind == "ball":
        lo_r, hi_r = (edge if d > R else 0.0), d + R
    elif kind == "complement":
        lo_r, hi_r = (edge if d < R else 0.0), math.inf
    else:
        lo_r, hi_r = 0.0, math.inf
    near_singular = pole_singular or _is_singular(pole, f)
    if near_singular and 0.0 < lo_r < 1e-3 * R:
        # the region ends within a hair of a singular pole: shells towards the
        # pole resolve the singular profile, and rays shorter than the entry
        # radius contribute exactly zero
        lo_r = 0.0
        rad_breaks.discard(edge)
    # next to a singular pole the shells resolve kinks at small radii; a cut
    # there would leave a regular piece starting at the singularity
    r_min = 1e-3 * R if near_singular and lo_r == 0.0 else 0.0
    cuts = sorted(r for r in rad_breaks if lo_r < r < hi_r and r > r_min)
    nodes = [lo_r] + cuts + [hi_r]
    decay = None if f.decay_exponent is None else f.decay_exponent - 1.0
    pieces = [(a, b, near_singular and a == 0.0) for a, b in zip(nodes[:-1], nodes[1:])]
    # thin pieces get an absolute budget from the size of the whole integral
    # (singular pieces first, then a rough pass over the regular ones), so a
    # sliver's endpoint behaviour or rounding noise cannot drive bisection
    parts = {}
    for k, (a, b, sa) in enumerate(pieces):
        if sa:
            parts[k] = _integrate_interval(g, a, b, True, False, tol, max(R, a, 1e-300), decay)
    rough = sum(abs(p.value) for p in parts.values())
    for a, b, sa in pieces:
        if not sa and math.isfinite(b) and b > a:
            edges = np.linspace(a, b, 5)
            rough += float(np.abs(_gl(g, edges[:-1], edges[1:])).sum())
    atol = tol * rough if math.isfinite(rough) else 0.0
    for k, (a, b, sa) in enumerate(pieces):
        if k not in parts:
            parts[k] = _integrate_interval(g, a, b, sa, False, tol, max(R, a, 1e-300), decay, atol)
    return _combine([parts[k] for k in range(len(pieces))])


# ---------------------------------------------------------------------------
# public interface


def _check(f: Integrand, ball: Ball, tol: float):
    if not tol > 0:
        raise ValueError("tol must be positive")
    if ball.n != f.n:
        raise ValueError(f"ball dimension {ball.n} does not match integrand dimension {f.n}")
    if f.n not in (1, 2):
        raise ValueError("only n = 1 and n = 2 are supported")


def integrate_ball(f: Integrand, ball: Ball, tol: float = 1e-8) -> QuadResult:
    """Integral of f over the open ball."""
    _check(f, ball, tol)
    if f.n == 1:
        c, R = ball.center[0], ball.radius
        return _integrate_1d(f, [(c - R, c + R)], tol, R)
    return _integrate_2d(f, ball, "ball", tol)


def integrate_complement(f: Integrand, ball: Ball, tol: float = 1e-8) -> QuadResult:
    """Integral of f over R^n minus the ball; needs ``f.decay_exponent``."""
    _check(f, ball, tol)
    if f.decay_exponent is None:
        raise ValueError("integrate_complement needs an integrand with a decay exponent")
    if f.decay_exponent <= f.n:
        return QuadResult(math.inf, math.inf, 0, True)
    if f.n == 1:
        c, R = ball.center[0], ball.radius
        return _integrate_1d(f, [(-math.inf, c - R), (c + R, math.inf)], tol, R)
    return _integrate_2d(f, ball, "complement", tol)


def integrate_whole(f: Integrand, ball: Ball, tol: float = 1e-8) -> QuadResult:
    """Integral over R^n, split as ball plus complement."""
    inner = integrate_ball(f, ball, tol)
    if not inner.finite:
        return inner
    return _combine([inner, integrate_complement(f, ball, tol)])


# ---------------------------------------------------------------------------
# essential supremum


def _zoom_max(h, a: np.ndarray, b: np.ndarray, iters: int = 10, k: int = 17) -> float:
    """Best value of a vectorized h on the brackets [a_j, b_j] by repeated grid zooming.

    Each pass evaluates k points per bracket and shrinks every bracket to the
    neighbours of its best point, so after ``iters`` passes the bracket is
    ((k-1)/2)^-iters of its original width.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = np.linspace(0.0, 1.0, k)
    best = -math.inf
    rows = np.arange(a.size)
    for _ in range(iters):
        xs = a[:, None] + (b - a)[:, None] * t
        vals = np.asarray(h(xs.ravel()), dtype=float).reshape(xs.shape)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        best = max(best, float(vals.max()))
        j = np.argmax(vals, axis=1)
        lo = xs[rows, np.maximum(j - 1, 0)]
        hi = xs[rows, np.minimum(j + 1, k - 1)]
        a, b = lo, hi
    return best


def _scalar(f: Integrand, pt) -> float:
    v = f(np.asarray(pt, dtype=float).reshape(1, f.n))[0]
    return float(v) if not math.isnan(v) else -math.inf


def _sup_1d_segment(f: Integrand, lo: float, hi: float, npts: int, extra: Sequence[float]):
    xs = np.linspace(lo, hi, max(npts, 3))
    xs = np.unique(np.concatenate([xs, [p for p in extra if lo <= p <= hi]]))
    vals = f(xs[:, None])
    vals = np.where(np.isnan(vals), -np.inf, vals)
    best = float(vals.max())
    order = np.argsort(vals)[::-1][:8]
    a = xs[np.maximum(order - 1, 0)]
    b = xs[np.minimum(order + 1, xs.size - 1)]
    keep = b > a
    if np.any(keep):
        best = max(best, _zoom_max(lambda t: f(t[:, None]), a[keep], b[keep]))
    return best


def _sup_2d_annulus(f: Integrand, c, r0: float, r1: float, npts: int, extra):
    k = max(int(math.sqrt(npts)), 4)
    rs = np.linspace(r0, r1, k)
    ths = np.linspace(0.0, 2 * np.pi, 2 * k, endpoint=False)
    RR, TT = np.meshgrid(rs, ths, indexing="ij")
    pts = np.stack([c[0] + RR.ravel() * np.cos(TT.ravel()), c[1] + RR.ravel() * np.sin(TT.ravel())], axis=1)
    ex = [p for p in extra if r0 <= np.linalg.norm(np.asarray(p) - c) <= r1]
    if ex:
        pts = np.concatenate([pts, np.asarray(ex, dtype=float)])
    vals = f(pts)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    best = float(vals.max())
    dr = (r1 - r0) / max(k - 1, 1)
    dth = 2 * np.pi / (2 * k)
    top = np.argsort(vals)[::-1][:8]
    p = pts[top] - c
    r = np.hypot(p[:, 0], p[:, 1])
    t = np.arctan2(p[:, 1], p[:, 0])
    k2 = 9
    u = np.linspace(-1.0, 1.0, k2)
    hr, ht = np.full(r.shape, dr), np.full(t.shape, dth)
    rows = np.arange(r.size)
    for _ in range(12):
        rr, tt = np.broadcast_arrays(
            np.clip(r[:, None, None] + hr[:, None, None] * u[:, None], r0, r1),
            t[:, None, None] + ht[:, None, None] * u[None, :])
        q = np.stack([c[0] + rr * np.cos(tt), c[1] + rr * np.sin(tt)], axis=-1).reshape(-1, 2)
        v = np.asarray(f(q), dtype=float).reshape(r.size, -1)
        v = np.where(np.isnan(v), -np.inf, v)
        best = max(best, float(v.max()))
        j = np.argmax(v, axis=1)
        r, t = rr.reshape(r.size, -1)[rows, j], tt.reshape(r.size, -1)[rows, j]
        hr, ht = hr / 4.0, ht / 4.0
    return best


def ess_sup(f: Integrand, ball: Ball, plan: SamplePlan | None = None, kind: str = "ball",
            points_per_set: int | None = None) -> float:
    """Supremum of a (piecewise continuous) f over the ball, its complement or R^n.

    The grid has ``plan.points_per_set`` points per piece and the best eight grid
    points are refined by repeated local grid zooming. A singular point in the
    closed region where f evaluates to inf makes the result inf. Complement
    regions are swept over dyadic annuli until the annulus maxima decrease
    below the running maximum.
    """
    if kind not in ("ball", "complement", "whole"):
        raise ValueError(f"unknown region kind {kind!r}")
    npts = points_per_set or (plan.points_per_set if plan is not None else 4096)
    c = ball.center_array
    R = ball.radius
    special = [tuple(p) for p in np.concatenate([f.singular_array, f.break_array])]

    def in_region(p):
        dist = float(np.linalg.norm(np.asarray(p) - c))
        if kind == "ball":
            return dist <= R
        if kind == "complement":
            return dist >= R
        return True

    for s in f.singular_array:
        if in_region(s) and _scalar(f, s) == math.inf:
            return math.inf
    best = -math.inf
    if kind in ("ball", "whole"):
        if f.n == 1:
            best = max(best, _sup_1d_segment(f, c[0] - R, c[0] + R, npts, [p[0] for p in special]))
        else:
            best = max(best, _sup_2d_annulus(f, c, 0.0, R, npts, special))
    if kind in ("complement", "whole"):
        sigma = f.decay_exponent
        if sigma is None:
            raise ValueError("ess_sup over a complement needs a decay exponent")
        if sigma < 0:
            return math.inf
        maxima = []
        per = max(npts // 8, 64)
        for k in range(80):
            r0, r1 = R * 2.0**k, R * 2.0 ** (k + 1)
            if f.n == 1:
                a1 = _sup_1d_segment(f, c[0] + r0, c[0] + r1, per, [p[0] for p in special])
                a2 = _sup_1d_segment(f, c[0] - r1, c[0] - r0, per, [p[0] for p in special])
                ak = max(a1, a2)
            else:
                ak = _sup_2d_annulus(f, c, r0, r1, per, special)
            maxima.append(ak)
            best = max(best, ak)
            # every special point must be covered before stopping
            far = max((float(np.linalg.norm(np.asarray(p) - c)) for p in special), default=0.0)
            if k >= 3 and r1 > far and maxima[-1] <= maxima[-2] <= maxima[-3] and maxima[-1] < best:
                break
            if k >= 3 and r1 > far and best > -math.inf and maxima[-1] <= 1e-300:
                break
    return best
