"""Parameter records, exponent arithmetic and ball geometry.

Exponents live in [1, inf] and ``math.inf`` is used as the genuine endpoint
value; every formula that changes shape at p = 1 or p = inf branches on it
explicitly instead of relying on large floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

INF = math.inf
EQ_TOL = 1e-12


def _exp_to_json(p: float):
    return "inf" if p == INF else p


def _exp_from_json(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "+inf"):
            return INF
        return float(p)
    return float(p)


def holder_conjugate(p: float) -> float:
    """Return p' with 1/p + 1/p' = 1, using 1' = inf and inf' = 1."""
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValueError(f"exponent must lie in [1, inf], got {p}")
    if p == 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def aggregate_p(pvec: Sequence[float]) -> float:
    """Return p defined by 1/p = sum(1/p_i); all-infinite input gives inf."""
    inv = 0.0
    for p in pvec:
        p = float(p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"exponent must lie in [1, inf], got {p}")
        if p != INF:
            inv += 1.0 / p
    return INF if inv == 0.0 else 1.0 / inv


def inv(p: float) -> float:
    """1/p with 1/inf = 0."""
    return 0.0 if p == INF else 1.0 / p


def default_gamma_split(n: int, m: int, gamma: float) -> tuple[float, ...]:
    if not 0 < gamma < m * n:
        raise ValueError(f"gamma must lie in (0, m*n) = (0, {m * n}), got {gamma}")
    return tuple(gamma / m for _ in range(m))


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class Params:
    """The tuple (n, m, gamma, delta, p-vector, gamma-split).

    ``gamma_split`` defaults to the uniform split gamma/m.
    """

    n: int
    m: int
    gamma: float
    delta: float
    pvec: tuple[float, ...]
    gamma_split: tuple[float, ...] | None = None

    def __post_init__(self):
        n, m = self.n, self.m
        if int(n) != n or n < 1:
            raise ValueError(f"n must be a positive integer, got {n}")
        if int(m) != m or m < 1:
            raise ValueError(f"m must be a positive integer, got {m}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "delta", float(self.delta))
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if not 0 < self.gamma < m * n:
            raise ValueError(f"gamma must lie in (0, m*n) = (0, {m * n}), got {self.gamma}")
        pvec = tuple(_exp_from_json(p) for p in self.pvec)
        if len(pvec) != m:
            raise ValueError(f"pvec has {len(pvec)} entries, expected m = {m}")
        for p in pvec:
            if math.isnan(p) or p < 1:
                raise ValueError(f"every p_i must lie in [1, inf], got {p}")
        object.__setattr__(self, "pvec", pvec)
        split = self.gamma_split
        if split is None:
            split = default_gamma_split(n, m, self.gamma)
        split = tuple(float(g) for g in split)
        if len(split) != m:
            raise ValueError(f"gamma_split has {len(split)} entries, expected m = {m}")
        if abs(sum(split) - self.gamma) > EQ_TOL:
            raise ValueError(f"gamma_split sums to {sum(split)}, expected gamma = {self.gamma}")
        for g in split:
            if not 0 < g < n:
                raise ValueError(f"every gamma_i must lie in (0, n), got {g}")
        object.__setattr__(self, "gamma_split", split)

    @property
    def p(self) -> float:
        return aggregate_p(self.pvec)

    @property
    def inv_p(self) -> float:
        return sum(inv(p) for p in self.pvec)

    @property
    def pconj(self) -> tuple[float, ...]:
        return tuple(holder_conjugate(p) for p in self.pvec)

    @property
    def I1(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.pvec) if p == 1)

    @property
    def I2(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.pvec) if p > 1)

    @property
    def m1(self) -> int:
        return len(self.I1)

    @property
    def m2(self) -> int:
        return len(self.I2)

    @property
    def theta(self) -> tuple[float, ...]:
        """Kernel exponents n - gamma_i + 1/m of the class functional."""
        return tuple(self.n - g + 1.0 / self.m for g in self.gamma_split)

    @property
    def tau(self) -> float:
        return tau(self)

    def with_delta(self, delta: float) -> "Params":
        return Params(self.n, self.m, self.gamma, delta, self.pvec, self.gamma_split)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "gamma": self.gamma,
            "delta": self.delta,
            "pvec": [_exp_to_json(p) for p in self.pvec],
            "gamma_split": list(self.gamma_split),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        return cls(
            n=d["n"],
            m=d["m"],
            gamma=d["gamma"],
            delta=d["delta"],
            pvec=tuple(_exp_from_json(p) for p in d["pvec"]),
            gamma_split=tuple(d["gamma_split"]) if d.get("gamma_split") is not None else None,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "Params":
        return cls.from_dict(json.loads(s))


def tau(params: Params) -> float:
    """Threshold (gamma - m n)(1 - 1/m) + 1/m below which local implies global."""
    m, n = params.m, params.n
    return (params.gamma - m * n) * (1.0 - 1.0 / m) + 1.0 / m


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(self.center))
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not (r > 0 and math.isfinite(r)):
            raise ValueError(f"ball radius must be positive and finite, got {r}")
        object.__setattr__(self, "radius", r)

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.radius**self.n

    def vol_pow(self, s: float) -> float:
        """|B|^(s/n), computed as omega_n^(s/n) R^s."""
        return unit_ball_volume(self.n) ** (s / self.n) * self.radius**s

    @property
    def side(self) -> float:
        """|B|^(1/n)."""
        return self.vol_pow(1.0)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def dilate(self, lam: float) -> "Ball":
        return Ball(self.center, lam * self.radius)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.n)
        return np.linalg.norm(pts - self.center_array, axis=1) < self.radius

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "Ball":
        return cls(tuple(d["center"]), d["radius"])


def _random_centers(n: int, count: int, rng: np.random.Generator, lo: float, hi: float):
    mags = 10 ** rng.uniform(math.log10(lo), math.log10(hi), size=count)
    dirs = rng.normal(size=(count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return [tuple(float(v) for v in mag * d) for mag, d in zip(mags, dirs)]


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic family of balls over which suprema are estimated.

    Balls are the product ``centers x radii``. Random centers have magnitude
    log-uniform in [1e-3, 1e3] and a uniform direction, so the ratio
    |x_B| / R covers many decades.
    """

    seed: int
    radii: tuple[float, ...]
    centers: tuple[tuple[float, ...], ...]
    points_per_set: int = 4096

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii or any(not (r > 0 and math.isfinite(r)) for r in radii):
            raise ValueError("all plan radii must be positive and finite")
        object.__setattr__(self, "radii", radii)
        centers = tuple(tuple(float(x) for x in c) for c in self.centers)
        if not centers or len({len(c) for c in centers}) != 1:
            raise ValueError("plan centers must be non-empty points of one dimension")
        object.__setattr__(self, "centers", centers)

    @classmethod
    def standard(
        cls,
        n: int,
        seed: int = 0,
        n_radii: int = 64,
        n_centers: int = 32,
        r_min: float = 1e-3,
        r_max: float = 1e3,
        points_per_set: int = 4096,
        extra_centers: Sequence[Sequence[float]] = (),
    ) -> "SamplePlan":
        rng = np.random.default_rng(seed)
        radii = tuple(float(r) for r in np.logspace(math.log10(r_min), math.log10(r_max), n_radii))
        centers = [tuple(0.0 for _ in range(n))]
        centers += _random_centers(n, n_centers, rng, 1e-3, 1e3)
        centers += [tuple(float(x) for x in c) for c in extra_centers]
        return cls(seed, radii, tuple(centers), points_per_set)

    @property
    def n(self) -> int:
        return len(self.centers[0])

    def balls(self) -> list[Ball]:
        return [Ball(c, r) for c in self.centers for r in self.radii]

    def origin_balls(self) -> list[Ball]:
        zero = tuple(0.0 for _ in range(self.n))
        return [Ball(zero, r) for r in self.radii]

    def __len__(self) -> int:
        return len(self.centers) * len(self.radii)

    def doubled(self) -> "SamplePlan":
        """Refined plan: radii grid with midpoints inserted, twice the random centers.

        The refined plan contains every ball of this one.
        """
        lr = np.log10(self.radii)
        mids = tuple(float(10**x) for x in 0.5 * (lr[1:] + lr[:-1]))
        radii = tuple(sorted(self.radii + mids))
        rng = np.random.default_rng([self.seed, 1])
        extra = _random_centers(self.n, len(self.centers) - 1, rng, 1e-3, 1e3)
        return SamplePlan(self.seed, radii, self.centers + tuple(extra), self.points_per_set)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "radii": list(self.radii),
            "centers": [list(c) for c in self.centers],
            "points_per_set": self.points_per_set,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplePlan":
        return cls(
            int(d["seed"]),
            tuple(d["radii"]),
            tuple(tuple(c) for c in d["centers"]),
            int(d.get("points_per_set", 4096)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "SamplePlan":
        return cls.from_dict(json.loads(s))


def clean_float(x: float, digits: int = 12):
    """Round to ``digits`` significant digits for byte-stable reports; inf -> "inf"."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return 0.0
    return float(f"{x:.{digits}g}")


def clean(obj):
    """Recursively apply :func:`clean_float` to a JSON-like structure."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return clean_float(obj)
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [clean(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return clean(obj.to_dict())
    raise TypeError(f"cannot serialise {type(obj).__name__}")
