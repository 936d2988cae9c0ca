"""Weighted Lipschitz seminorm as a supremum of per-ball mean-oscillation quotients."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Ball, SamplePlan, clean
from .quadrature import adaptive_panels
from .weights import WeightSpec, weight_sup

_GLX, _GLW = np.polynomial.legendre.leggauss(10)


def _ball_rule(ball: Ball, panels: int = 16):
    """Fixed composite Gauss rule on the ball: (points (N, n), weights (N,))."""
    c = ball.center_array
    R = ball.radius
    edges = np.linspace(-1.0, 1.0, panels + 1) if ball.n == 1 else np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * _GLX).ravel()
    wt = (half[:, None] * _GLW).ravel()
    if ball.n == 1:
        return c + R * t[:, None], R * wt
    # polar: radial nodes with weight rho, angular composite rule
    th_edges = np.linspace(0.0, 2 * np.pi, 2 * panels + 1)
    th_half = 0.5 * np.diff(th_edges)
    th_mid = 0.5 * (th_edges[1:] + th_edges[:-1])
    th = (th_mid[:, None] + th_half[:, None] * _GLX).ravel()
    wth = (th_half[:, None] * _GLW).ravel()
    rho = R * t
    RR, TT = np.meshgrid(rho, th, indexing="ij")
    W = np.outer(R * wt * rho, wth).ravel()
    pts = np.stack([c[0] + RR.ravel() * np.cos(TT.ravel()), c[1] + RR.ravel() * np.sin(TT.ravel())], axis=1)
    return pts, W


def _as_vector(f: Callable, n: int) -> Callable[[np.ndarray], np.ndarray]:
    def g(pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, n)
        return np.asarray(f(pts), dtype=float).reshape(-1)
    return g


def ball_mean(f: Callable, ball: Ball, panels: int = 16) -> float:
    """f_B from the fixed ball rule (the weights sum to |B| up to rounding)."""
    pts, w = _ball_rule(ball, panels)
    vals = _as_vector(f, ball.n)(pts)
    return float(vals[0] + np.dot(w, vals - vals[0]) / w.sum())


def oscillation(f: Callable, ball: Ball, tol: float = 1e-8) -> float:
    """|B|^-1 int_B |f - f_B| by two passes: the mean, then the absolute deviation.

    ``f`` maps an (N, n) array of points to N values. The mean uses a fixed
    composite Gauss rule and deviations are measured from one sample, so adding
    a constant leaves every deviation unchanged when the differences are exact; the deviation is adaptive in one dimension and a polar
    product rule in two.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    g = _as_vector(f, ball.n)
    pts, w = _ball_rule(ball)
    vals = g(pts)
    if not np.all(np.isfinite(vals)):
        raise ValueError("f is not finite on the ball")
    # deviations are taken from one sample, f - f_B = (f - f0) - (f_B - f0), so an
    # added constant cancels exactly whenever f - f0 is exact
    f0 = vals[0]
    offset = float(np.dot(w, vals - f0) / w.sum())
    coarse = float(np.dot(w, np.abs((vals - f0) - offset)))
    if coarse == 0.0:
        return 0.0
    if ball.n == 1:
        c, R = ball.center[0], ball.radius
        edges = np.linspace(c - R, c + R, 17)

        def dev(t):
            return np.abs((g(t[:, None]) - f0) - offset)

        scale = max(coarse, tol * float(np.dot(w, np.abs(vals)))) / (2 * R)
        parts, _ = adaptive_panels(dev, edges[:-1], edges[1:], tol, max_depth=30, atol_density=tol * scale)
        total = float(np.sum(parts))
        return total / (2 * R)
    fine_pts, fine_w = _ball_rule(ball, 48)
    fv = g(fine_pts)
    return float(np.dot(fine_w, np.abs((fv - f0) - offset)) / fine_w.sum())


def double_oscillation(f: Callable, ball: Ball, panels: int = 32) -> float:
    """|B|^-2 int_B int_B |f(x) - f(z)| dx dz; lies between 1 and 2 times :func:`oscillation`."""
    pts, w = _ball_rule(ball, panels)
    vals = _as_vector(f, ball.n)(pts)
    W = w / w.sum()
    return float(W @ np.abs(vals[:, None] - vals[None, :]) @ W)


def lip_ball_quotient(f: Callable, w: WeightSpec, delta: float, ball: Ball, tol: float = 1e-8) -> float:
    """||w chi_B||_inf |B|^-(1 + delta/n) int_B |f - f_B|, i.e. sup_B w * oscillation * |B|^(-delta/n)."""
    osc = oscillation(f, ball, tol)
    if osc == 0.0:
        return 0.0
    return weight_sup(w, ball) * osc / ball.vol_pow(delta)


@dataclass
class LipReport:
    per_ball: list
    sup: float
    argmax: Ball | None
    delta: float
    stability: float | None = None

    def to_dict(self) -> dict:
        return clean({
            "note": "suprema are taken over the sampled balls only",
            "delta": self.delta,
            "sup": self.sup,
            "argmax": None if self.argmax is None else self.argmax.to_dict(),
            "stability_under_doubling": self.stability,
            "balls_tested": len(self.per_ball),
            "per_ball": [{"ball": b.to_dict(), "quotient": q} for b, q in self.per_ball],
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        n = self.per_ball[0][0].n if self.per_ball else 1
        wr.writerow([f"center_{j}" for j in range(n)] + ["radius", "quotient"])
        for b, q in self.per_ball:
            wr.writerow([*clean(list(b.center)), clean(b.radius), clean(q)])
        return buf.getvalue()


def lip_seminorm(f: Callable, w: WeightSpec, delta: float, plan: SamplePlan, tol: float = 1e-8,
                 stability: bool = False) -> LipReport:
    """Sup of :func:`lip_ball_quotient` over the plan, with the argmax ball."""
    balls = plan.balls()
    per = [(b, lip_ball_quotient(f, w, delta, b, tol)) for b in balls]
    sup, arg = -math.inf, None
    for b, q in per:
        if q > sup:
            sup, arg = q, b
    stab = None
    if stability:
        dbl = lip_seminorm(f, w, delta, plan.doubled(), tol)
        stab = abs(dbl.sup - sup) / sup if sup > 0 and math.isfinite(sup) else (0.0 if dbl.sup == sup else math.inf)
    return LipReport(per, sup, arg, delta, stab)
