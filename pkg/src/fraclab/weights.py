"""Radial weight descriptors and estimators for reverse-Hölder, doubling and A_{p,inf} constants."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import INF, Ball, SamplePlan, _exp_from_json, _exp_to_json, holder_conjugate
from .quadrature import Integrand, QuadResult, ess_sup, integrate_ball

OVERFLOW_LIMIT = 1e300


# ---------------------------------------------------------------------------
# weight variants


@dataclass(frozen=True)
class Power:
    """w(x) = |x|^alpha."""

    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("Power exponent must be finite")

    def radial(self, r):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.alpha == 0:
                return np.ones_like(r)
            out = np.power(r, self.alpha)
            return np.where(r == 0, 0.0 if self.alpha > 0 else INF, out)


@dataclass(frozen=True)
class Constant:
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0 or not math.isfinite(self.c):
            raise ValueError("Constant weight must be positive and finite")

    def radial(self, r):
        return np.full_like(r, self.c)


@dataclass(frozen=True)
class ExpRadial:
    """w(x) = exp(|x|)."""

    def radial(self, r):
        with np.errstate(over="ignore"):
            return np.exp(r)


@dataclass(frozen=True)
class InvPoly:
    """w(x) = (1 + |x|^alpha)^(-k)."""

    alpha: float
    k: float

    def __post_init__(self):
        if not self.alpha > 0 or self.k < 0:
            raise ValueError("InvPoly needs alpha > 0 and k >= 0")

    def radial(self, r):
        with np.errstate(over="ignore"):
            return np.power(1.0 + np.power(r, self.alpha), -self.k)


@dataclass(frozen=True)
class Tabulated:
    """Radial weight given by values on increasing radii.

    Interpolation is linear in log(value) against |x|. Below the first node the
    first value is held; beyond the last node the power law through the last
    two nodes is continued (``tail_exponent`` overrides its exponent).
    """

    radii: tuple
    values: tuple
    tail_exponent: float | None = None

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.size < 2 or r.size != v.size:
            raise ValueError("Tabulated needs at least two (radius, value) pairs of equal length")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("Tabulated radii must be nonnegative and strictly increasing")
        if np.any(~(v > 0)) or np.any(~np.isfinite(v)):
            raise ValueError("Tabulated values must be positive and finite")
        object.__setattr__(self, "radii", tuple(float(x) for x in r))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    @property
    def tail(self) -> float:
        if self.tail_exponent is not None:
            return float(self.tail_exponent)
        r0, r1 = self.radii[-2:]
        v0, v1 = self.values[-2:]
        if r0 <= 0:
            return 0.0
        return math.log(v1 / v0) / math.log(r1 / r0)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        rr = np.asarray(self.radii)
        lv = np.log(np.asarray(self.values))
        inside = np.exp(np.interp(r, rr, lv))
        with np.errstate(divide="ignore", over="ignore"):
            beyond = self.values[-1] * np.power(np.maximum(r, 1e-300) / rr[-1], self.tail)
        return np.where(r > rr[-1], beyond, inside)


@dataclass(frozen=True)
class Pow:
    """Derived weight base(x)^exponent, used for v^(-p') and v^(-1)."""

    base: "WeightSpec"
    exponent: float

    def radial(self, r):
        b = self.base.radial(r)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = np.power(b, self.exponent)
        return out


WeightSpec = Union[Power, Constant, ExpRadial, InvPoly, Tabulated, Pow]


def weight_power(spec: WeightSpec, e: float) -> WeightSpec:
    """spec^e, kept in closed form where possible."""
    if e == 1:
        return spec
    if isinstance(spec, Power):
        return Power(spec.alpha * e)
    if isinstance(spec, Constant):
        return Constant(spec.c**e)
    if isinstance(spec, Pow):
        return weight_power(spec.base, spec.exponent * e)
    if isinstance(spec, InvPoly):
        return InvPoly(spec.alpha, spec.k * e) if spec.k * e >= 0 else Pow(spec, e)
    return Pow(spec, e)


def scale_weight(spec: WeightSpec, c: float) -> WeightSpec:
    """c * spec for c > 0."""
    if isinstance(spec, Constant):
        return Constant(spec.c * c)
    if isinstance(spec, Tabulated):
        return Tabulated(spec.radii, tuple(v * c for v in spec.values), spec.tail_exponent)
    return _Scaled(spec, c)


@dataclass(frozen=True)
class _Scaled:
    base: WeightSpec
    c: float

    def radial(self, r):
        return self.c * self.base.radial(r)


@dataclass(frozen=True)
class _Product:
    factors: tuple

    def radial(self, r):
        out = np.ones_like(np.asarray(r, dtype=float))
        with np.errstate(invalid="ignore", over="ignore"):
            for f in self.factors:
                out = out * f.radial(r)
        return out


def product_weight(specs: Sequence[WeightSpec]) -> WeightSpec:
    """Pointwise product, collapsed to a single power or constant when possible."""
    specs = tuple(specs)
    if all(isinstance(s, (Power, Constant)) for s in specs):
        alpha = sum(s.alpha for s in specs if isinstance(s, Power))
        c = math.prod(s.c for s in specs if isinstance(s, Constant))
        base = Power(alpha) if alpha != 0 else Constant(1.0)
        return base if c == 1.0 else scale_weight(base, c)
    return specs[0] if len(specs) == 1 else _Product(specs)


def decay_exponent(spec: WeightSpec) -> float:
    """sigma with spec(x) ~ |x|^-sigma at infinity (inf for exponential decay, -inf for growth)."""
    if isinstance(spec, Power):
        return -spec.alpha
    if isinstance(spec, Constant):
        return 0.0
    if isinstance(spec, ExpRadial):
        return -INF
    if isinstance(spec, InvPoly):
        return spec.alpha * spec.k
    if isinstance(spec, Tabulated):
        return -spec.tail
    if isinstance(spec, _Scaled):
        return decay_exponent(spec.base)
    if isinstance(spec, _Product):
        ds = [decay_exponent(f) for f in spec.factors]
        return sum(ds)
    if isinstance(spec, Pow):
        d = decay_exponent(spec.base)
        if spec.exponent == 0:
            return 0.0
        if math.isinf(d):
            return d if spec.exponent > 0 else -d
        return d * spec.exponent
    raise TypeError(f"unknown weight {spec!r}")


def singular_at_origin(spec: WeightSpec) -> bool:
    """True when the weight may be 0 or inf at the origin."""
    if isinstance(spec, Power):
        return spec.alpha != 0
    if isinstance(spec, (Pow, _Scaled)):
        return singular_at_origin(spec.base)
    if isinstance(spec, _Product):
        return any(singular_at_origin(f) for f in spec.factors)
    return False


def is_locally_integrable(spec: WeightSpec, n: int) -> bool:
    if isinstance(spec, Power):
        return spec.alpha > -n
    if isinstance(spec, Pow) and isinstance(spec.base, Power):
        return spec.base.alpha * spec.exponent > -n
    return True


def make_power(alpha: float, n: int = 1) -> Power:
    """Power(alpha) with a warning when it is not locally integrable."""
    if alpha <= -n:
        warnings.warn(f"|x|^{alpha} is not locally integrable in dimension {n}", stacklevel=2)
    return Power(alpha)


def eval_weight(spec: WeightSpec, x) -> np.ndarray | float:
    """Pointwise value at x (a point, or an (N, n) array of points)."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim <= 1
    pts = arr.reshape(1, -1) if scalar else arr
    r = np.sqrt((pts**2).sum(axis=1))
    out = np.asarray(spec.radial(r), dtype=float)
    return float(out[0]) if scalar else out


def as_integrand(spec: WeightSpec, n: int, extra_sing=()) -> Integrand:
    origin = ((0.0,) * n,)
    sing = origin if singular_at_origin(spec) else ()
    # radial profiles may kink at the origin
    return Integrand(lambda p: spec.radial(np.sqrt((p**2).sum(axis=1))), n,
                     singular_points=sing + tuple(extra_sing), breakpoints=() if sing else origin,
                     decay_exponent=decay_exponent(spec))


# ---------------------------------------------------------------------------
# serialisation

_VARIANTS = {"Power": Power, "Constant": Constant, "ExpRadial": ExpRadial, "InvPoly": InvPoly,
             "Tabulated": Tabulated, "Pow": Pow}


def weight_to_dict(spec: WeightSpec) -> dict:
    if isinstance(spec, Power):
        return {"variant": "Power", "alpha": spec.alpha}
    if isinstance(spec, Constant):
        return {"variant": "Constant", "c": spec.c}
    if isinstance(spec, ExpRadial):
        return {"variant": "ExpRadial"}
    if isinstance(spec, InvPoly):
        return {"variant": "InvPoly", "alpha": spec.alpha, "k": spec.k}
    if isinstance(spec, Tabulated):
        return {"variant": "Tabulated", "radii": list(spec.radii), "values": list(spec.values),
                "tail_exponent": spec.tail_exponent}
    if isinstance(spec, Pow):
        return {"variant": "Pow", "base": weight_to_dict(spec.base), "exponent": _exp_to_json(spec.exponent)}
    raise TypeError(f"cannot serialise {spec!r}")


def weight_from_dict(d: dict) -> WeightSpec:
    kind = d.get("variant")
    if kind not in _VARIANTS:
        raise ValueError(f"unknown weight variant {kind!r}")
    if kind == "Power":
        return Power(float(d["alpha"]))
    if kind == "Constant":
        return Constant(float(d.get("c", 1.0)))
    if kind == "ExpRadial":
        return ExpRadial()
    if kind == "InvPoly":
        return InvPoly(float(d["alpha"]), float(d["k"]))
    if kind == "Tabulated":
        te = d.get("tail_exponent")
        return Tabulated(tuple(d["radii"]), tuple(d["values"]), None if te is None else float(te))
    return Pow(weight_from_dict(d["base"]), _exp_from_json(d["exponent"]))


# ---------------------------------------------------------------------------
# integrals and suprema of weights over balls


def _power_antiderivative_1d(alpha: float, a: float, b: float) -> float:
    """int_a^b |x|^alpha dx for a < b, alpha > -1."""
    def prim(t):  # odd antiderivative of |x|^alpha
        return math.copysign(abs(t) ** (alpha + 1) / (alpha + 1), t)
    return prim(b) - prim(a)


@dataclass(frozen=True)
class PowerBallIntegral:
    value: float
    comparand: float

    @property
    def ratio(self) -> float:
        return self.value / self.comparand


def power_ball_integral(alpha: float, ball: Ball, tol: float = 1e-10) -> PowerBallIntegral:
    """int_B |x|^alpha, exact in n = 1 and for origin-centred balls in n = 2.

    Also returns the comparand R^n max(R, |x_B|)^alpha.
    """
    n = ball.n
    if not alpha > -n:
        raise ValueError(f"alpha = {alpha} must exceed -n = {-n}")
    R = ball.radius
    dist = float(np.linalg.norm(ball.center_array))
    comparand = R**n * max(R, dist) ** alpha
    if n == 1:
        c = ball.center[0]
        value = _power_antiderivative_1d(alpha, c - R, c + R)
    elif n == 2 and dist == 0.0:
        value = 2 * math.pi * R ** (alpha + 2) / (alpha + 2)
    else:
        res = integrate_ball(as_integrand(Power(alpha), n), ball, tol)
        value = res.value
    return PowerBallIntegral(value, comparand)


def _cap(x: float) -> tuple[float, bool]:
    if math.isnan(x):
        return INF, True
    if x > OVERFLOW_LIMIT and math.isfinite(x):
        return INF, True
    return x, False


def weight_integral(spec: WeightSpec, ball: Ball, tol: float = 1e-8) -> QuadResult:
    """int_B spec, using the closed form for powers."""
    if isinstance(spec, Power):
        if spec.alpha <= -ball.n:
            return QuadResult(INF, INF, 0, True)
        if ball.n == 1 or float(np.linalg.norm(ball.center_array)) == 0.0:
            return QuadResult(power_ball_integral(spec.alpha, ball).value, 0.0, 0, False)
    if isinstance(spec, Constant):
        return QuadResult(spec.c * ball.volume, 0.0, 0, False)
    return integrate_ball(as_integrand(spec, ball.n), ball, tol)


def weight_mean(spec: WeightSpec, ball: Ball, tol: float = 1e-8) -> QuadResult:
    r = weight_integral(spec, ball, tol)
    if not r.finite:
        return r
    return QuadResult(r.value / ball.volume, r.abs_error_estimate / ball.volume, r.shells_used, False)


def weight_sup(spec: WeightSpec, ball: Ball, plan: SamplePlan | None = None) -> float:
    """sup of a radial weight over the closed ball (exact for monotone profiles)."""
    c = ball.center_array
    R = ball.radius
    d = float(np.linalg.norm(c))
    rmin, rmax = max(0.0, d - R), d + R
    if isinstance(spec, Constant):
        return spec.c
    if isinstance(spec, Power):
        if spec.alpha >= 0:
            return rmax**spec.alpha
        return INF if rmin == 0.0 else rmin**spec.alpha
    if isinstance(spec, ExpRadial):
        return float(np.exp(rmax)) if rmax < 700 else INF
    if isinstance(spec, InvPoly):
        return float(spec.radial(np.array([rmin]))[0])
    # radial profile: the ball covers every radius in [rmin, rmax]
    r = np.linspace(rmin, rmax, (plan.points_per_set if plan else 4096))
    special = [x for x in (getattr(spec, "radii", None) or ()) if rmin <= x <= rmax]
    f = Integrand(lambda p: spec.radial(np.abs(p[:, 0])), 1)
    seg = Ball(((rmin + rmax) / 2,), max((rmax - rmin) / 2, 1e-300))
    vals = spec.radial(np.concatenate([r, special]))
    return max(float(np.max(vals)), ess_sup(f, seg, points_per_set=r.size))


# ---------------------------------------------------------------------------
# constants over a sample plan


@dataclass(frozen=True)
class ConstantEstimate:
    value: float
    balls_tested: int
    argmax_ball: Ball | None
    overflow: bool = False
    diverged: bool = False

    def to_dict(self) -> dict:
        return {"value": _exp_to_json(self.value), "balls_tested": self.balls_tested,
                "argmax_ball": None if self.argmax_ball is None else self.argmax_ball.to_dict(),
                "overflow": self.overflow, "diverged": self.diverged}


def _reduce(values: Sequence[tuple[float, bool, bool]], balls: Sequence[Ball]) -> ConstantEstimate:
    best, arg = -INF, None
    over = div = False
    for (v, o, d), b in zip(values, balls):
        over |= o
        div |= d
        if v > best:
            best, arg = v, b
    return ConstantEstimate(best, len(balls), arg, over, div)


def rh_ball_value(spec: WeightSpec, s: float, ball: Ball, tol: float = 1e-8) -> tuple[float, bool, bool]:
    """((1/|B|) int_B w^s)^(1/s) / ((1/|B|) int_B w); returns (value, overflow, diverged)."""
    mean = weight_mean(spec, ball, tol)
    if not mean.finite:
        return INF, mean.overflow, mean.diverged
    if s == INF:
        num = weight_sup(spec, ball)
        if num == INF:
            sing = singular_at_origin(spec)
            return INF, not sing, sing
        div = False
    else:
        ms = weight_mean(weight_power(spec, s), ball, tol)
        if not ms.finite:
            return INF, ms.overflow, ms.diverged
        num, div = ms.value ** (1.0 / s), False
    v, o = _cap(num / mean.value)
    return v, o and not div, div


def rh_constant(spec: WeightSpec, s: float, plan: SamplePlan, tol: float = 1e-5) -> ConstantEstimate:
    """Reverse-Hölder constant RH_s (s = inf allowed) estimated over the plan."""
    if not s > 1:
        raise ValueError("reverse Hölder exponent must exceed 1")
    balls = plan.balls()
    return _reduce([rh_ball_value(spec, s, b, tol) for b in balls], balls)


def doubling_ball_value(spec: WeightSpec, ball: Ball, tol: float = 1e-8) -> tuple[float, bool, bool]:
    a = weight_integral(spec, ball, tol)
    b = weight_integral(spec, ball.dilate(2.0), tol)
    if not (a.finite and b.finite):
        return INF, a.overflow or b.overflow, a.diverged or b.diverged
    if a.value == 0:
        return INF, False, True
    v, o = _cap(b.value / a.value)
    return v, o, False


def doubling_constant(spec: WeightSpec, plan: SamplePlan, tol: float = 1e-5) -> ConstantEstimate:
    """max over the plan of w(2B)/w(B)."""
    balls = plan.balls()
    return _reduce([doubling_ball_value(spec, b, tol) for b in balls], balls)


def a_p_infty_ball_value(vspecs: Sequence[WeightSpec], pvec: Sequence[float], ball: Ball,
                         tol: float = 1e-8) -> tuple[float, bool, bool]:
    prod_sup = weight_sup(product_weight(vspecs), ball)
    factor = 1.0
    for v, p in zip(vspecs, pvec):
        if p == 1:
            f = weight_sup(weight_power(v, -1.0), ball)
        else:
            q = holder_conjugate(p)
            m = weight_mean(weight_power(v, -q), ball, tol)
            if not m.finite:
                return INF, m.overflow, m.diverged
            f = m.value ** (1.0 / q)
        factor *= f
    if math.isinf(factor) or math.isinf(prod_sup):
        return INF, False, True
    v, o = _cap(prod_sup * factor)
    return v, o, False


def a_p_infty_constant(vspecs: Sequence[WeightSpec], pvec: Sequence[float], plan: SamplePlan,
                       tol: float = 1e-5) -> ConstantEstimate:
    """A_{p,inf} constant: sup_B ||prod v_i chi_B||_inf prod_i (mean_B v_i^-p_i')^(1/p_i')."""
    if len(vspecs) != len(pvec):
        raise ValueError("one exponent per weight is required")
    balls = plan.balls()
    return _reduce([a_p_infty_ball_value(vspecs, pvec, b, tol) for b in balls], balls)
