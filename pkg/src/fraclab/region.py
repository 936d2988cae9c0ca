"""Where the class admits nontrivial weights: classification, example construction and sheet data.

A parameter point (n, m, gamma, delta, p) is placed by comparing delta with
four thresholds: the floor gamma - m n, the local-to-global threshold tau, the
related-weights line gamma - n/p and 1. Inside the admissible band one of six
sub-bands (labelled "a" to "f") supplies an explicit weight pair.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import EQ_TOL, INF, Params, clean, holder_conjugate, inv
from .hclass import WeightPair
from .weights import Constant, ExpRadial, InvPoly, Power, Tabulated

NONTRIVIAL = "nontrivial_example_exists"
TRIVIAL_V_INFINITE = "trivial_v_infinite"
TRIVIAL_V_OR_W = "trivial_v_or_w"
RELATED_LINE = "related_weights_line"
OUTSIDE = "outside_all_results"
INVALID = "invalid"

STATUSES = (NONTRIVIAL, TRIVIAL_V_INFINITE, TRIVIAL_V_OR_W, RELATED_LINE, OUTSIDE)
CASE_LABELS = ("a", "b", "c", "d", "e", "f")

_OPS = {
    ">": lambda a, b: a > b + EQ_TOL,
    "<": lambda a, b: a < b - EQ_TOL,
    "=": lambda a, b: abs(a - b) <= EQ_TOL,
    "!=": lambda a, b: abs(a - b) > EQ_TOL,
    ">=": lambda a, b: a >= b - EQ_TOL,
    "<=": lambda a, b: a <= b + EQ_TOL,
}


def threshold(params: Params, name: str) -> float:
    """Numeric value of a named threshold: delta, 1, tau, gamma - m n, gamma - n/p, min(1, gamma - n/p)."""
    n, m, g = params.n, params.m, params.gamma
    top = g - n * params.inv_p
    table = {
        "delta": params.delta,
        "1": 1.0,
        "tau": params.tau,
        "gamma - m n": g - m * n,
        "gamma - n/p": top,
        "min(1, gamma - n/p)": min(1.0, top),
    }
    if name not in table:
        raise KeyError(f"unknown threshold {name!r}")
    return table[name]


@dataclass(frozen=True)
class Witness:
    """One inequality between named thresholds, with the values it was decided on."""

    lhs: str
    op: str
    rhs: str
    lhs_value: float
    rhs_value: float

    @classmethod
    def of(cls, params: Params, lhs: str, op: str, rhs: str) -> "Witness":
        return cls(lhs, op, rhs, threshold(params, lhs), threshold(params, rhs))

    def holds(self) -> bool:
        return _OPS[self.op](self.lhs_value, self.rhs_value)

    def recheck(self, params: Params) -> bool:
        """Re-evaluate the inequality from ``params`` alone (tolerance 1e-12 on equalities)."""
        return _OPS[self.op](threshold(params, self.lhs), threshold(params, self.rhs))

    def to_dict(self) -> dict:
        return clean({"inequality": f"{self.lhs} {self.op} {self.rhs}",
                      "lhs": self.lhs_value, "rhs": self.rhs_value})


@dataclass(frozen=True)
class RegionVerdict:
    status: str
    case_label: str | None = None
    witnesses: tuple = field(default=())

    @property
    def nontrivial(self) -> bool:
        return self.status == NONTRIVIAL

    def to_dict(self) -> dict:
        return {"status": self.status, "case_label": self.case_label,
                "witnesses": [w.to_dict() for w in self.witnesses]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class TrivialRegionError(ValueError):
    """construct_example was asked for a point with no nontrivial example; carries the verdict."""

    def __init__(self, verdict: RegionVerdict):
        self.verdict = verdict
        super().__init__(f"no nontrivial example: {verdict.status}")


def _case(params: Params) -> tuple[str | None, tuple]:
    """Sub-band label for a point already inside gamma - m n <= delta <= min(1, gamma - n/p)."""

    def w(l, o, r):
        return Witness.of(params, l, o, r)

    def all_hold(*ws):
        return all(x.holds() for x in ws)

    cands = {
        "f": (w("delta", "=", "gamma - m n"),),
        "a": (w("gamma - m n", "<", "delta"), w("delta", "<", "tau"), w("tau", "<=", "gamma - n/p")),
        "b": (w("gamma - m n", "<", "delta"), w("delta", "<=", "gamma - n/p"), w("gamma - n/p", "<", "tau")),
        "c": (w("gamma - m n", "<", "delta"), w("delta", "=", "tau"), w("tau", "<", "1"),
              w("1", "<", "gamma - n/p")),
        "d": (w("gamma - m n", "<", "delta"), w("delta", "=", "tau"), w("tau", "<", "gamma - n/p"),
              w("gamma - n/p", "<", "1")),
        "e": (w("tau", "<", "delta"), w("delta", "<", "min(1, gamma - n/p)")),
    }
    for label in ("f", "a", "b", "c", "d", "e"):
        if all_hold(*cands[label]):
            return label, cands[label]
    return None, ()


def classify_region(params: Params, related: bool = False) -> RegionVerdict:
    """Place ``params`` in the triviality / nontriviality picture.

    The cascade is: delta > 1 or delta > gamma - n/p, then delta = gamma - n/p = 1
    (both trivial_v_infinite), then delta < gamma - m n (trivial_v_or_w), then
    the six sub-bands of the admissible band. Equalities use a 1e-12
    tolerance. A band point that no sub-band covers is reported as
    outside_all_results with witness "no case applies".

    With ``related`` the pair is understood to satisfy w = prod v_i; then only
    delta = gamma - n/p is possible (related_weights_line) and any other delta
    is outside_all_results with the mismatch as witness.
    """
    if related:
        mism = Witness.of(params, "delta", "!=", "gamma - n/p")
        if mism.holds():
            return RegionVerdict(OUTSIDE, None, (mism,))
        return RegionVerdict(RELATED_LINE, None, (Witness.of(params, "delta", "=", "gamma - n/p"),))
    above_one = Witness.of(params, "delta", ">", "1")
    above_line = Witness.of(params, "delta", ">", "gamma - n/p")
    fired = tuple(x for x in (above_one, above_line) if x.holds())
    if fired:
        return RegionVerdict(TRIVIAL_V_INFINITE, None, fired)
    corner = (Witness.of(params, "delta", "=", "gamma - n/p"), Witness.of(params, "gamma - n/p", "=", "1"))
    if all(x.holds() for x in corner):
        return RegionVerdict(TRIVIAL_V_INFINITE, None, corner)
    below = Witness.of(params, "delta", "<", "gamma - m n")
    if below.holds():
        return RegionVerdict(TRIVIAL_V_OR_W, None, (below,))
    label, ws = _case(params)
    if label is None:
        band = (Witness.of(params, "gamma - m n", "<=", "delta"),
                Witness.of(params, "delta", "<=", "min(1, gamma - n/p)"))
        return RegionVerdict(OUTSIDE, "no case applies", band)
    return RegionVerdict(NONTRIVIAL, label, ws)


@dataclass(frozen=True)
class RelatedDelta:
    """gamma - n/p, and whether a supplied delta disagrees with it."""

    value: float
    supplied: float | None
    mismatch: bool | None


def related_weights_delta(params: Params, delta: float | None = None) -> RelatedDelta:
    """The only delta compatible with w = prod v_i; a supplied delta is compared with it."""
    value = params.gamma - params.n * params.inv_p
    if delta is None:
        return RelatedDelta(value, None, None)
    return RelatedDelta(value, float(delta), abs(float(delta) - value) > EQ_TOL)


# ---------------------------------------------------------------------------
# example construction


def profile_radii() -> np.ndarray:
    """Nodes for tabulated radial profiles: 0, then log-spaced on [1e-3, 1e4]."""
    return np.concatenate([[0.0], np.logspace(-3.0, 4.0, 141)])


def lp_profile_reciprocal(n: int, p: float) -> Tabulated:
    """1/g for g(x) = (1 + |x|)^(-(n+1)/p'), which lies in L^p'(R^n) for p > 1."""
    e = (n + 1) / holder_conjugate(p)
    r = profile_radii()
    return Tabulated(tuple(r), tuple((1.0 + r) ** e), tail_exponent=e)


def _powers(alpha: float, betas) -> tuple:
    return (Constant(1.0) if alpha == 0 else Power(alpha)), tuple(
        Constant(1.0) if b == 0 else Power(b) for b in betas)


def construct_example(params: Params, case: str | None = None) -> WeightPair:
    """Explicit weight pair for the sub-band containing ``params``.

    Free parameters are fixed at interior defaults:

    * a: epsilon = (m n - gamma + delta) / (2 (m - m1)); beta_i = n/p_i' - epsilon
      (p_i > 1), 0 (p_i = 1); alpha = sum beta + delta - gamma + n/p.
    * b: w = 1, beta_i = (gamma - delta)/m - n/p_i.
    * c, d: beta_i the midpoint of ((gamma - tau)/m - n/p_i, n/p_i') for p_i > 1,
      0 for p_i = 1; alpha = sum beta + tau - gamma + n/p.
    * e: alpha = delta - tau, beta_i = (gamma - tau)/m - n/p_i.
    * f: w = (1 + |x|)^(-m1), v_i = e^|x| (p_i = 1), v_i = (1 + |x|)^((n+1)/p_i') (p_i > 1).

    A requested ``case`` that does not apply is replaced by the applicable one
    with a warning. Trivial or uncovered points raise TrivialRegionError.
    """
    verdict = classify_region(params)
    if not verdict.nontrivial:
        raise TrivialRegionError(verdict)
    label = verdict.case_label
    if case is not None and case != label:
        warnings.warn(f"case {case!r} does not apply to these parameters; built case {label!r} instead",
                      stacklevel=2)
    n, m, g, d = params.n, params.m, params.gamma, params.delta
    pv, n_over_p = params.pvec, n * params.inv_p
    ex: dict = {"case": label}
    if label == "a":
        eps = (m * n - g + d) / (2 * (m - params.m1))
        betas = [0.0 if p == 1 else n / holder_conjugate(p) - eps for p in pv]
        alpha = sum(betas) + d - g + n_over_p
        w, vv = _powers(alpha, betas)
        ex.update(epsilon=eps, alpha=alpha, betas=betas)
    elif label == "b":
        betas = [(g - d) / m - n * inv(p) for p in pv]
        w, vv = Constant(1.0), _powers(0.0, betas)[1]
        ex.update(alpha=0.0, betas=betas)
    elif label in ("c", "d"):
        t = params.tau
        betas = [0.0 if p == 1 else 0.5 * (((g - t) / m - n * inv(p)) + n / holder_conjugate(p)) for p in pv]
        alpha = sum(betas) + t - g + n_over_p
        w, vv = _powers(alpha, betas)
        ex.update(alpha=alpha, betas=betas, tau=t)
    elif label == "e":
        t = params.tau
        betas = [(g - t) / m - n * inv(p) for p in pv]
        alpha = d - t
        w, vv = _powers(alpha, betas)
        ex.update(alpha=alpha, betas=betas, tau=t)
    else:
        w = InvPoly(1.0, float(params.m1))
        vv = tuple(ExpRadial() if p == 1 else lp_profile_reciprocal(n, p) for p in pv)
        ex.update(w_inv_poly_alpha=1.0, w_inv_poly_k=params.m1,
                  profile_exponents=[None if p == 1 else (n + 1) / holder_conjugate(p) for p in pv])
    return WeightPair(w, vv, label=label, exponents=clean(ex))


# ---------------------------------------------------------------------------
# sheet data


@dataclass
class RegionPlot:
    """Grid verdicts on (1/p, delta) plus the band polygon and reference lines."""

    n: int
    m: int
    gamma: float
    cells: list
    polygon: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["inv_p", "delta", "status", "case_label"])
        for x, d, s, c in self.cells:
            wr.writerow([clean(x), clean(d), s, "" if c is None else c])
        return buf.getvalue()

    def polygon_json(self) -> str:
        return json.dumps(clean(self.polygon), sort_keys=True)


def uniform_params(n: int, m: int, gamma: float, inv_p: float, delta: float) -> Params:
    """Params with every p_i equal and sum of 1/p_i = inv_p (0 gives p_i = inf)."""
    pi = INF if inv_p <= 0 else m / inv_p
    return Params(n, m, gamma, delta, (pi,) * m)


def band_polygon(n: int, m: int, gamma: float) -> dict:
    """Vertices of gamma - m n <= delta <= min(1, gamma - n x), 0 <= x <= m, and the reference lines."""
    bottom = gamma - m * n
    t = (gamma - m * n) * (1.0 - 1.0 / m) + 1.0 / m
    apex = min(1.0, gamma)
    if gamma > 1:
        xc = (gamma - 1.0) / n
        vertices = [[0.0, bottom], [float(m), bottom], [xc, 1.0], [0.0, 1.0]]
        flat_top = {"delta": 1.0, "x_from": 0.0, "x_to": xc}
        open_corner = [xc, 1.0]
        excluded = [open_corner]
    else:
        vertices = [[0.0, bottom], [float(m), bottom], [0.0, gamma]]
        flat_top = None
        open_corner = None
        # for gamma = 1 the apex itself is the corner delta = gamma - n/p = 1
        excluded = [[0.0, 1.0]] if gamma == 1 else []
    if t < apex:
        tau_line = {"delta": t, "x_from": 0.0, "x_to": min(float(m), (gamma - t) / n) if gamma > t else 0.0}
    else:
        tau_line = {"delta": t, "x_from": 0.0, "x_to": 0.0}
    return {
        "n": n, "m": m, "gamma": gamma,
        "axes": {"x": "inv_p", "y": "delta", "x_range": [0.0, m + 0.5], "y_range": [bottom - 0.5, 1.5]},
        "vertices": vertices,
        "bottom_edge": {"delta": bottom, "x_from": 0.0, "x_to": float(m)},
        "right_edge": {"inv_p": float(m)},
        "flat_top": flat_top,
        "open_corner": open_corner,
        "excluded_points": excluded,
        "related_line": {"slope": -float(n), "intercept": gamma, "x_from": 0.0, "x_to": float(m)},
        "tau": t,
        "tau_line": tau_line,
        "apex_delta": apex,
    }


def region_plot_data(n: int, m: int, gamma: float, resolution: int = 64) -> RegionPlot:
    """Verdicts on a resolution x resolution grid over [0, m + 1/2] x [gamma - m n - 1/2, 3/2].

    Cells with 1/p > m have some p_i < 1 and are marked "invalid".
    """
    if resolution < 16:
        raise ValueError("resolution must be at least 16")
    xs = np.linspace(0.0, m + 0.5, resolution)
    ds = np.linspace(gamma - m * n - 0.5, 1.5, resolution)
    cells = []
    for x in xs:
        for d in ds:
            x, d = float(x), float(d)
            if x > m + EQ_TOL:
                cells.append((x, d, INVALID, None))
                continue
            v = classify_region(uniform_params(n, m, gamma, x, d))
            cells.append((x, d, v.status, v.case_label))
    return RegionPlot(n, m, gamma, cells, band_polygon(n, m, gamma))
