"""Multilinear fractional integral, its normalised form J = a_B + I f, and the kernel-difference geometry.

The m*n dimensional integral is written in generalised polar coordinates about
the evaluation point x: y_i = x + s r_i theta_i with s = sum |y_i - x|, r on the
unit simplex and theta_i unit vectors. Then

    I f(x) = int_0^inf s^(gamma-1) int_simplex prod r_i^(n-1) int_theta prod f_i(x + s r_i theta_i)

and for every (r, theta) node the s-range where all f_i are supported is found
exactly from the support balls. The radial integral is taken in t = s^gamma,
which removes the diagonal singularity. For n = 1, m = 2 and non-smooth test
functions the simplex coordinate is split per point at the rays through kink
corners; elsewhere discontinuous inputs converge at a lower order than bumps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .core import Ball, Params
from .quadrature import Integrand, ess_sup, integrate_ball
from .weights import WeightSpec, as_integrand, weight_sup

# ---------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class Bump:
    """height * exp(1 - 1/(1 - |y - c|^2 / r^2)) inside B(c, r), 0 outside."""

    center: tuple
    radius: float
    height: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0 or self.height < 0:
            raise ValueError("Bump needs radius > 0 and height >= 0")

    @property
    def support(self) -> Ball:
        return Ball(self.center, self.radius)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        q = ((pts - np.asarray(self.center)) ** 2).sum(axis=-1) / self.radius**2
        inside = q < 1.0
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = self.height * np.exp(1.0 - 1.0 / (1.0 - np.where(inside, q, 0.0)))
        return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class Indicator:
    ball: Ball

    @property
    def support(self) -> Ball:
        return self.ball

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        d2 = ((pts - self.ball.center_array) ** 2).sum(axis=-1)
        return np.where(d2 < self.ball.radius**2, 1.0, 0.0)


@dataclass(frozen=True)
class PowerCutoff:
    """|y|^beta on the ball, 0 outside."""

    beta: float
    ball: Ball

    @property
    def support(self) -> Ball:
        return self.ball

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        d2 = ((pts - self.ball.center_array) ** 2).sum(axis=-1)
        r = np.sqrt((pts**2).sum(axis=-1))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = np.power(r, self.beta)
        return np.where(d2 < self.ball.radius**2, val, 0.0)


@dataclass(frozen=True)
class TabulatedFunction:
    """Nonnegative function given on a regular grid, linearly interpolated, 0 off the grid."""

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(a.size for a in axes):
            raise ValueError("grid values do not match the axes")
        if np.any(vals < 0):
            raise ValueError("test functions must be nonnegative")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_interp", RegularGridInterpolator(axes, vals, bounds_error=False, fill_value=0.0))

    @classmethod
    def from_csv(cls, path) -> "TabulatedFunction":
        """Load rows ``x_1, ..., x_n, value`` covering a regular grid."""
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        n = data.shape[1] - 1
        axes = tuple(np.unique(data[:, j]) for j in range(n))
        vals = np.zeros(tuple(a.size for a in axes))
        idx = tuple(np.searchsorted(axes[j], data[:, j]) for j in range(n))
        vals[idx] = data[:, -1]
        return cls(axes, vals)

    @property
    def support(self) -> Ball:
        lo = np.array([a[0] for a in self.axes])
        hi = np.array([a[-1] for a in self.axes])
        c = 0.5 * (lo + hi)
        return Ball(tuple(c), float(np.linalg.norm(hi - c)) * (1 + 1e-12) + 1e-300)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1]
        return self._interp(pts.reshape(-1, pts.shape[-1])).reshape(shape)


TestFunction = Union[Bump, Indicator, PowerCutoff, TabulatedFunction]


def weighted_lp_norm(f: TestFunction, v: WeightSpec, p: float, tol: float = 1e-8) -> float:
    """||f v||_p over the support of f."""
    sup = f.support
    n = sup.n
    if p == math.inf:
        g = Integrand(lambda y: f(y) * v.radial(np.sqrt((y**2).sum(axis=1))), n)
        return ess_sup(g, sup, points_per_set=4096)
    vi = as_integrand(v, n)
    g = Integrand(lambda y: np.power(f(y) * vi(y), p), n, singular_points=vi.singular_points)
    res = integrate_ball(g, sup, tol)
    return res.value ** (1.0 / p) if res.finite else math.inf


# ---------------------------------------------------------------------------
# kernel and quadrature nodes


def kernel(x, yvec, params: Params) -> float:
    """(sum_i |x - y_i|)^(gamma - m n); inf when every y_i equals x."""
    x = np.asarray(x, dtype=float).reshape(-1)
    ys = np.asarray(yvec, dtype=float).reshape(params.m, -1)
    s = float(np.linalg.norm(ys - x, axis=1).sum())
    if s == 0.0:
        return math.inf
    return s ** (params.gamma - params.m * params.n)


def _composite_gl(a: float, b: float, panels: int, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    wts = (half[:, None] * w).ravel()
    return nodes, wts


def _resolution(tol: float) -> tuple[int, int]:
    """(panels per simplex/angle coordinate, radial panels) for a tolerance."""
    k = max(0.0, math.log10(1e-4 / tol))
    return min(32, int(round(4 * 10 ** (0.2 * k)))), 3 + int(round(k / 2))


@dataclass(frozen=True)
class _Nodes:
    r: np.ndarray  # (C, m) simplex coordinates
    dirs: np.ndarray  # (C, m, n) unit directions
    w: np.ndarray  # (C,) weights including prod r_i^(n-1)
    tg: np.ndarray  # (S,) radial fractions on [0, 1], uniform panels
    tw: np.ndarray  # (S,) weights for tg
    gg: np.ndarray  # graded fractions (towards 0)
    gw: np.ndarray


_NODE_CACHE: dict = {}


def _nodes(n: int, m: int, tol: float) -> _Nodes:
    key = (n, m, _resolution(tol))
    if key in _NODE_CACHE:
        return _NODE_CACHE[key]
    P, L = _resolution(tol)
    dims = (m - 1) + (m if n == 2 else 0)
    order = 10 if dims <= 1 else (6 if dims == 2 else 4)
    # simplex by stick breaking
    if m == 1:
        R = np.ones((1, 1))
        WR = np.ones(1)
    else:
        u, wu = _composite_gl(0.0, 1.0, P, order)
        grids = np.meshgrid(*([u] * (m - 1)), indexing="ij")
        wgrids = np.meshgrid(*([wu] * (m - 1)), indexing="ij")
        U = np.stack([g.ravel() for g in grids], axis=1)
        WR = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        R = np.zeros((U.shape[0], m))
        rest = np.ones(U.shape[0])
        for j in range(m - 1):
            R[:, j] = rest * U[:, j]
            WR = WR * rest
            rest = rest * (1.0 - U[:, j])
        R[:, m - 1] = rest
    # directions
    if n == 1:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
        D = signs[:, :, None]
        WD = np.ones(len(signs))
    else:
        th, wth = _composite_gl(0.0, 2 * np.pi, 2 * P, order)
        grids = np.meshgrid(*([th] * m), indexing="ij")
        wgrids = np.meshgrid(*([wth] * m), indexing="ij")
        TH = np.stack([g.ravel() for g in grids], axis=1)
        WD = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        D = np.stack([np.cos(TH), np.sin(TH)], axis=2)
    r = np.repeat(R, len(WD), axis=0)
    dirs = np.tile(D, (len(WR), 1, 1))
    w = np.repeat(WR, len(WD)) * np.tile(WD, len(WR)) * np.prod(r ** (n - 1), axis=1)
    tg, tw = _composite_gl(0.0, 1.0, L, 8)
    # geometric panels towards t = 0, then uniform panels on [1/4, 1]
    U = L + 2 * (L - 3)
    edges = np.concatenate([[0.0], 4.0 ** -np.arange(2 * L + 2, 0, -1), np.linspace(0.25, 1.0, U + 1)[1:]])
    x8, w8 = np.polynomial.legendre.leggauss(8)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    gg = (mid[:, None] + half[:, None] * x8).ravel()
    gw = (half[:, None] * w8).ravel()
    # equal node counts so both rules vectorise together
    if gg.size > tg.size:
        tg, tw = _composite_gl(0.0, 1.0, gg.size // 8, 8)
    out = _Nodes(r, dirs, w, tg, tw, gg, gw)
    _NODE_CACHE[key] = out
    return out


def _support_interval(x, fvec, R, D):
    """Exact s-range (lo, hi) per (x, node) where every f_i(x + s r_i theta_i) may be nonzero.

    ``R`` (Nr, C, m) and ``D`` (Nr, C, m, n) hold simplex coordinates and
    directions, with Nr equal to 1 (shared nodes) or to the number of rows of x.
    """
    Nx = x.shape[0]
    C = R.shape[1]
    lo = np.zeros((Nx, C))
    hi = np.full((Nx, C), np.inf)
    for i, f in enumerate(fvec):
        sup = f.support
        d = x - sup.center_array  # (Nx, n)
        e = (d**2).sum(axis=1) - sup.radius**2  # (Nx,)
        b = (d[:, None, :] * D[:, :, i, :]).sum(axis=2)  # (Nx, C)
        disc = b**2 - e[:, None]
        ok = disc > 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        # stable roots of t^2 + 2 b t + e = 0
        big = -b - np.copysign(sq, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            other = np.where(big != 0, e[:, None] / big, 0.0)
        t_lo = np.minimum(big, other)
        t_hi = np.maximum(big, other)
        ri = R[:, :, i]
        # zero-width split panels put nodes at r_i = 0; their weight is 0
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.maximum(lo, np.where(ok, np.maximum(t_lo, 0.0) / ri, np.inf))
            hi = np.minimum(hi, np.where(ok & (t_hi > 0), t_hi / ri, 0.0))
    return lo, hi


def _kinks_1d(f) -> np.ndarray:
    """Coordinates where a one-dimensional test function is not smooth (empty for bumps)."""
    if isinstance(f, Bump):
        return np.empty(0)
    c, r = f.support.center[0], f.support.radius
    pts = [c - r, c + r]
    if isinstance(f, PowerCutoff):
        pts.append(0.0)
    elif isinstance(f, TabulatedFunction) and f.axes[0].size <= 16:
        pts.extend(f.axes[0].tolist())
    return np.unique(pts)


def _split_simplex_nodes(x, fvec, tol: float, cut: float):
    """Per-point simplex nodes for n = 1, m = 2, split where a ray passes a kink corner.

    A ray y - x = s (u sigma_1, (1 - u) sigma_2) meets the corner (k_1, k_2) at
    u = |k_1 - x| / (|k_1 - x| + |k_2 - x|); between such u the s-range and the
    integrand vary smoothly. The cut box [x - cut, x + cut]^2 adds its own corners.
    """
    P, _ = _resolution(tol)
    t, wt = _composite_gl(0.0, 1.0, max(2, P // 2), 10)
    Nx = x.shape[0]
    ks = []
    for f in fvec:
        k = np.broadcast_to(_kinks_1d(f), (Nx, _kinks_1d(f).size)) - x
        if cut > 0:
            k = np.concatenate([k, np.full((Nx, 2), [-cut, cut])], axis=1)
        ks.append(k)
    d1, d2 = ks[0][:, :, None], ks[1][:, None, :]
    Rs, Ds, Ws = [], [], []
    for s1, s2 in itertools.product((-1.0, 1.0), repeat=2):
        ok = (np.sign(d1) == s1) & (np.sign(d2) == s2)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(ok, np.abs(d1) / (np.abs(d1) + np.abs(d2)), 1.0).reshape(Nx, -1)
        edges = np.sort(np.concatenate([np.zeros((Nx, 1)), u, np.ones((Nx, 1))], axis=1), axis=1)
        a, b = edges[:, :-1, None], edges[:, 1:, None]
        un = (a + (b - a) * t).reshape(Nx, -1)
        Ws.append(((b - a) * wt).reshape(Nx, -1))
        Rs.append(np.stack([un, 1.0 - un], axis=2))
        Ds.append(np.broadcast_to(np.array([[s1], [s2]]), un.shape + (2, 1)))
    return np.concatenate(Rs, axis=1), np.concatenate(Ds, axis=1), np.concatenate(Ws, axis=1)


def _interior_kinks_1d(f) -> np.ndarray:
    """Kinks strictly inside the support, where rays need radial breakpoints."""
    c, r = f.support.center[0], f.support.radius
    if isinstance(f, PowerCutoff):
        pts = np.array([0.0])
    elif isinstance(f, TabulatedFunction) and f.axes[0].size <= 64:
        pts = f.axes[0]
    else:
        return np.empty(0)
    return pts[(pts > c - r) & (pts < c + r)]


def _ray_kinks(x, r_sel, d_sel, interior, n: int):
    """Values of s at which each ray x + s r_i theta_i crosses an interior kink of f_i (n = 1), or None."""
    if interior is None or not any(k.size for k in interior):
        return None
    cols = []
    for i, k in enumerate(interior):
        if k.size:
            step = (r_sel[:, i] * d_sel[:, i, 0])[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                cols.append((k[None, :] - x) / step)
    return np.concatenate(cols, axis=1)


def _radial_rule(lo, hi, gamma: float, nodes: _Nodes, kinks=None):
    """Nodes s (K, S') and weights W for int_lo^hi s^(gamma-1) g(s) ds, in t = s^gamma.

    Without ``kinks`` the range uses the rule graded towards t = 0 when lo = 0
    and the uniform rule otherwise. ``kinks`` (K, Q) splits each range, and
    each piece is halved with both halves graded towards the piece ends, where
    an integrable singularity may sit; kinks outside (lo, hi) give empty pieces.
    """
    def piece(Ta, Tb, frac, fw):
        return (Ta[:, None] + (Tb - Ta)[:, None] * frac) ** (1.0 / gamma), (Tb - Ta)[:, None] * fw / gamma

    if kinks is None:
        graded = (lo == 0.0)[:, None]
        return piece(lo**gamma, hi**gamma, np.where(graded, nodes.gg, nodes.tg), np.where(graded, nodes.gw, nodes.tw))
    inner = np.clip(np.nan_to_num(kinks, nan=0.0, posinf=0.0, neginf=0.0), lo[:, None], hi[:, None])
    T = np.sort(np.concatenate([lo[:, None], inner, hi[:, None]], axis=1), axis=1) ** gamma
    ss, ws = [], []
    for j in range(T.shape[1] - 1):
        Ta, Tb = T[:, j], T[:, j + 1]
        Tm = 0.5 * (Ta + Tb)
        for a, b, frac in ((Ta, Tm, nodes.gg), (Tb, Tm, nodes.gg)):
            s_, w_ = piece(a, b, frac, nodes.gw)
            ss.append(s_)
            ws.append(np.abs(w_))
    return np.concatenate(ss, axis=1), np.concatenate(ws, axis=1)


def _kernel_integral(fvec: Sequence[TestFunction], X: np.ndarray, params: Params, tol: float,
                     cut: float = 0.0, chunk: int = 32) -> np.ndarray:
    """int K(x, y) prod f_i(y_i) over {y : max_i |y_i - x| >= cut}, for each row x of X."""
    n, m, gamma = params.n, params.m, params.gamma
    if m * n > 4:
        raise ValueError("the operator quadrature is limited to m*n <= 4")
    if len(fvec) != m:
        raise ValueError(f"expected {m} test functions, got {len(fvec)}")
    nodes = _nodes(n, m, tol)
    split = n == 1 and m == 2 and any(_kinks_1d(f).size for f in fvec)
    interior = [_interior_kinks_1d(f) for f in fvec] if n == 1 else None
    X = np.asarray(X, dtype=float).reshape(-1, n)
    out = np.empty(X.shape[0])
    for k0 in range(0, X.shape[0], chunk):
        x = X[k0:k0 + chunk]
        if split:
            R, D, Wn = _split_simplex_nodes(x, fvec, tol, cut)
        else:
            R, D, Wn = nodes.r[None], nodes.dirs[None], nodes.w[None]
        lo, hi = _support_interval(x, fvec, R, D)
        if cut > 0:
            lo = np.maximum(lo, cut / R.max(axis=2))
        ix, ic = np.nonzero(hi > lo)  # only node rays that meet every support
        lo, hi = lo[ix, ic], hi[ix, ic]
        rows = ix if split else np.zeros_like(ix)
        r_sel, d_sel, w_sel = R[rows, ic], D[rows, ic], Wn[rows, ic]
        s, W = _radial_rule(lo, hi, gamma, nodes, _ray_kinks(x[ix], r_sel, d_sel, interior, n))
        prod = np.ones_like(s)
        for i, f in enumerate(fvec):
            pts = x[ix][:, None, :] + (s * r_sel[:, i][:, None])[..., None] * d_sel[:, None, i, :]
            prod *= f(pts)
        vals = (prod * W).sum(axis=1) * w_sel
        out[k0:k0 + chunk] = np.bincount(ix, weights=vals, minlength=x.shape[0])
    return out


# ---------------------------------------------------------------------------
# operators


def eval_I_many(fvec: Sequence[TestFunction], X, params: Params, tol: float = 1e-6) -> np.ndarray:
    """I f at each row of X (shape (N, n))."""
    return _kernel_integral(fvec, X, params, tol)


def eval_I(fvec: Sequence[TestFunction], x, params: Params, tol: float = 1e-6) -> float:
    """I f(x) = int prod f_i(y_i) / (sum |x - y_i|)^(m n - gamma) dy for compactly supported f_i."""
    return float(eval_I_many(fvec, np.asarray(x, dtype=float).reshape(1, -1), params, tol)[0])


def _tail_at(fvec, pole, radius, params, tol) -> float:
    """int (1 - chi_{B(pole, radius)^m}(y)) K(pole, y) prod f_i(y_i) dy."""
    return float(_kernel_integral(fvec, np.asarray(pole, dtype=float).reshape(1, -1), params, tol, cut=radius)[0])


def normalisation_constant(fvec, params: Params, tol: float = 1e-6) -> float:
    """c0 = int (1 - chi_{B(0,1)^m}(y)) K(0, y) prod f_i(y_i) dy, so that J f = I f - c0."""
    return _tail_at(fvec, np.zeros(params.n), 1.0, params, tol)


def a_B(fvec: Sequence[TestFunction], ball: Ball, params: Params, tol: float = 1e-6) -> float:
    """a_B for B~ = 2B.

    The integrand of a_B takes four forms according to whether y lies in
    B~^m and in B(0,1)^m: 0 (both), -K(0, y) (only B~^m), K(x_B, y) (only
    B(0,1)^m) and K(x_B, y) - K(0, y) (neither). Summed, this equals the
    integral of K(x_B, .) off B~^m minus that of K(0, .) off B(0,1)^m, and each
    of those is one polar integral about its pole with s cut below.
    """
    tb = _tail_at(fvec, ball.center_array, 2.0 * ball.radius, params, tol)
    return tb - normalisation_constant(fvec, params, tol)


def eval_J_many(fvec, X, ball: Ball, params: Params, tol: float = 1e-6) -> np.ndarray:
    """J f = a_B + I_B f at each row of X, where I_B f(x) = I f(x) - int_{off B~^m} K(x_B, y) prod f_i."""
    tb = _tail_at(fvec, ball.center_array, 2.0 * ball.radius, params, tol)
    ab = tb - normalisation_constant(fvec, params, tol)
    return ab + (eval_I_many(fvec, X, params, tol) - tb)


def eval_J(fvec, x, ball: Ball, params: Params, tol: float = 1e-6) -> float:
    return float(eval_J_many(fvec, np.asarray(x, dtype=float).reshape(1, -1), ball, params, tol)[0])


class JOperator:
    """J f as a vectorised callable with its normalisation constant computed once."""

    def __init__(self, fvec, params: Params, tol: float = 1e-6):
        self.fvec = tuple(fvec)
        self.params = params
        self.tol = tol
        self.c0 = normalisation_constant(self.fvec, params, tol)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.params.n)
        return eval_I_many(self.fvec, X, self.params, self.tol) - self.c0


# ---------------------------------------------------------------------------
# geometric sets around a ball


@dataclass(frozen=True)
class GeometrySets:
    """Quadrant A at x_B and the lower-quadrant balls C1, C2 inside B."""

    ball: Ball

    @property
    def n(self) -> int:
        return self.ball.n

    @property
    def c1_center(self) -> np.ndarray:
        return self.ball.center_array - self.ball.radius / (12 * math.sqrt(self.n))

    @property
    def c1_radius(self) -> float:
        return self.ball.radius / (12 * math.sqrt(self.n))

    @property
    def c2_center(self) -> np.ndarray:
        return self.ball.center_array - self.ball.radius / (3 * math.sqrt(self.n))

    @property
    def c2_radius(self) -> float:
        return 2 * self.ball.radius / 3

    def in_A(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.n)
        return np.all(pts >= self.ball.center_array, axis=1)

    def _in_lower(self, pts, c, r):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.n)
        return (np.linalg.norm(pts - c, axis=1) < r) & np.all(pts <= c, axis=1)

    def in_C1(self, pts) -> np.ndarray:
        return self._in_lower(pts, self.c1_center, self.c1_radius)

    def in_C2(self, pts) -> np.ndarray:
        return self._in_lower(pts, self.c2_center, self.c2_radius)

    def _sample_lower(self, k, rng, c, r):
        """Uniform samples in B(c, r) intersected with {y <= c}."""
        out = []
        while sum(len(o) for o in out) < k:
            pts = c - r * rng.uniform(0.0, 1.0, size=(2 * k + 8, self.n))
            out.append(pts[np.linalg.norm(pts - c, axis=1) < r])
        return np.concatenate(out)[:k]

    def sample_C1(self, k: int, rng: np.random.Generator) -> np.ndarray:
        return self._sample_lower(k, rng, self.c1_center, self.c1_radius)

    def sample_C2(self, k: int, rng: np.random.Generator) -> np.ndarray:
        return self._sample_lower(k, rng, self.c2_center, self.c2_radius)

    def sample_A(self, k: int, rng: np.random.Generator, decades: float = 3.0) -> np.ndarray:
        """Points x_B + h, h >= 0, with |h| log-uniform in R [10^-decades, 10^decades]."""
        dist = self.ball.radius * 10.0 ** rng.uniform(-decades, decades, size=k)
        if self.n == 1:
            dirs = np.ones((k, 1))
        else:
            g = np.abs(rng.normal(size=(k, self.n)))
            dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        return self.ball.center_array + dist[:, None] * dirs

    def measure_ratios(self, rng: np.random.Generator, k: int = 100_000) -> tuple[float, float]:
        """Monte Carlo |C1|/|B| and |C2|/|B| from uniform samples of B."""
        R = self.ball.radius
        pts = self.ball.center_array + R * rng.uniform(-1, 1, size=(k, self.n))
        box = (2 * R) ** self.n
        inB = np.linalg.norm(pts - self.ball.center_array, axis=1) < R
        vb = box * inB.mean()
        return box * self.in_C1(pts).mean() / vb, box * self.in_C2(pts).mean() / vb


def make_geometry(ball: Ball, n: int | None = None) -> GeometrySets:
    if n is not None and n != ball.n:
        raise ValueError("dimension mismatch")
    if ball.n not in (1, 2):
        raise ValueError("geometry sets are provided for n = 1, 2")
    return GeometrySets(ball)


def kernel_diff_ratio(ball: Ball, x, z, yvec, params: Params, check: bool = True) -> float:
    """[K(x, y) - K(z, y)] / [ |B|^(1/n) (|B|^(1/n) + sum |x_B - y_j|)^-(m n - gamma + 1) ]."""
    geo = GeometrySets(ball)
    ys = np.asarray(yvec, dtype=float).reshape(params.m, params.n)
    if check:
        if not geo.in_C1(x)[0]:
            raise ValueError("x must lie in C1")
        if not geo.in_C2(z)[0]:
            raise ValueError("z must lie in C2")
        if not np.all(geo.in_A(ys)):
            raise ValueError("every y_j must lie in A")
    side = ball.side
    num = kernel(x, ys, params) - kernel(z, ys, params)
    spread = np.linalg.norm(ys - ball.center_array, axis=1).sum()
    den = side * (side + spread) ** (-(params.m * params.n - params.gamma + 1.0))
    return num / den


def kernel_diff_ratios(ball: Ball, X, Z, Y, params: Params) -> np.ndarray:
    """Vectorised kernel_diff_ratio over rows: X, Z of shape (k, n), Y of shape (k, m, n)."""
    q = params.gamma - params.m * params.n
    sx = np.linalg.norm(Y - X[:, None, :], axis=2).sum(axis=1)
    sz = np.linalg.norm(Y - Z[:, None, :], axis=2).sum(axis=1)
    spread = np.linalg.norm(Y - ball.center_array, axis=2).sum(axis=1)
    side = ball.side
    return (sx**q - sz**q) / (side * (side + spread) ** (q - 1.0))


def sample_kernel_bound(params: Params, ball: Ball, samples: int = 10_000, seed: int = 0) -> dict:
    """Sampled minimum of the kernel-difference ratio over admissible (x, z, y)."""
    geo = make_geometry(ball)
    rng = np.random.default_rng(seed)
    X = geo.sample_C1(samples, rng)
    Z = geo.sample_C2(samples, rng)
    Y = geo.sample_A(samples * params.m, rng).reshape(samples, params.m, params.n)
    ratios = kernel_diff_ratios(ball, X, Z, Y, params)
    k = int(np.argmin(ratios))
    return {"min_ratio": float(ratios[k]), "max_ratio": float(ratios.max()), "samples": samples,
            "seed": seed, "argmin": {"x": X[k].tolist(), "z": Z[k].tolist(), "y": Y[k].tolist()},
            "all_positive": bool(np.all(ratios > 0))}


# ---------------------------------------------------------------------------
# necessity inequality


def _kernel_moment(f: TestFunction, ball: Ball, theta: float, tol: float) -> float:
    """int f(y) / (|B|^(1/n) + |x_B - y|)^theta dy over the support of f."""
    c = ball.center_array
    side = ball.side
    g = Integrand(lambda y: f(y) / (side + np.linalg.norm(y - c, axis=1)) ** theta, ball.n,
                  breakpoints=(tuple(c),))
    return integrate_ball(g, f.support, tol).value


def necessity_ratio(fvec, pair, params: Params, ball: Ball, norms: Sequence[float] | None = None,
                    tol: float = 1e-8) -> float:
    """Left side over right side of the product inequality that follows from boundedness.

    LHS = ||w chi_B||_inf |B|^((1-delta)/n) prod_i int f_i / (|B|^(1/n) + |x_B - y|)^theta_i,
    RHS = prod_i ||f_i v_i||_p_i.
    """
    if norms is None:
        norms = [weighted_lp_norm(f, v, p) for f, v, p in zip(fvec, pair.vvec, params.pvec)]
    lhs = weight_sup(pair.w, ball) / ball.vol_pow(params.delta - 1.0)
    for f, th in zip(fvec, params.theta):
        lhs *= _kernel_moment(f, ball, th, tol)
    return lhs / math.prod(norms)


def random_bumps(params: Params, rng: np.random.Generator, spread: float = 3.0) -> tuple:
    """m random nonnegative bumps with centers in [-spread, spread]^n and radii in [0.2, 2]."""
    out = []
    for _ in range(params.m):
        c = rng.uniform(-spread, spread, size=params.n)
        r = float(10 ** rng.uniform(math.log10(0.2), math.log10(2.0)))
        h = float(10 ** rng.uniform(-1, 1))
        out.append(Bump(tuple(c), r, h))
    return tuple(out)
