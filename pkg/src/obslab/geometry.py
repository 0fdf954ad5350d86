"""Control sets in R^d and numerical checks of thickness and the geometric control condition.

Volumes are estimated with scrambled Sobol points (seeded, so every report is
reproducible); line intersections with midpoint samples along each segment.
Quantities below ``1e-6`` of their natural scale (``Vol(B_rho)`` or ``L``)
are reported as zero.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import qmc

from .gramian import ball_volume

PERIOD = 2 * np.pi
NOISE_FLOOR = 1e-6


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise ValueError(f"points have dimension {x.shape[-1]}, set has dimension {d}")
    return x


def _reduce_periodic(x: np.ndarray) -> np.ndarray:
    return np.mod(x + np.pi, PERIOD) - np.pi


class ControlSet:
    """Base class; subclasses implement ``_contains`` on ``(..., d)`` arrays."""

    dimension: int
    periodic: bool = False

    def indicator(self, x) -> np.ndarray:
        x = _as_points(x, self.dimension)
        return self._contains(x).astype(np.int8)

    def _contains(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_box(self, margin: float) -> tuple[np.ndarray, np.ndarray]:
        """Region over which centres/base points must be sampled."""
        raise NotImplementedError

    def special_points(self) -> list:
        return []

    def to_config(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_config())


@dataclass(frozen=True)
class PeriodicBalls(ControlSet):
    """Union of open balls of radius ``radius`` centred on ``2 pi Z^d``."""

    dimension: int
    radius: float
    periodic = True

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    def _contains(self, x):
        y = _reduce_periodic(x)
        return np.sum(y * y, axis=-1) < self.radius**2

    def sample_box(self, margin):
        return np.full(self.dimension, -np.pi), np.full(self.dimension, np.pi)

    def to_config(self):
        return {"dimension": self.dimension, "variant": "periodic-balls",
                "parameters": {"radius": self.radius}}


@dataclass(frozen=True)
class BallComplement(ControlSet):
    dimension: int
    radius: float
    center: tuple = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        c = (0.0,) * self.dimension if self.center is None else tuple(map(float, self.center))
        if len(c) != self.dimension:
            raise ValueError("center has the wrong dimension")
        object.__setattr__(self, "center", c)

    def _contains(self, x):
        y = x - np.asarray(self.center)
        return np.sum(y * y, axis=-1) >= self.radius**2

    def sample_box(self, margin):
        c = np.asarray(self.center)
        return c - self.radius - margin, c + self.radius + margin

    def special_points(self):
        return [np.asarray(self.center)]

    def to_config(self):
        return {"dimension": self.dimension, "variant": "ball-complement",
                "parameters": {"radius": self.radius, "center": list(self.center)}}


@dataclass(frozen=True)
class Clearing(ControlSet):
    """``base`` with the closed ball ``B_radius(center)`` removed."""

    base: ControlSet
    radius: float
    center: tuple = None

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("clearing radius must be non-negative")
        c = (0.0,) * self.base.dimension if self.center is None else tuple(map(float, self.center))
        if len(c) != self.base.dimension:
            raise ValueError("center has the wrong dimension")
        object.__setattr__(self, "center", c)

    @property
    def dimension(self):
        return self.base.dimension

    def _contains(self, x):
        y = x - np.asarray(self.center)
        return self.base._contains(x) & (np.sum(y * y, axis=-1) > self.radius**2)

    def sample_box(self, margin):
        c = np.asarray(self.center)
        lo, hi = self.base.sample_box(margin)
        return np.minimum(lo, c - self.radius - margin), np.maximum(hi, c + self.radius + margin)

    def special_points(self):
        return [np.asarray(self.center)] + self.base.special_points()

    def to_config(self):
        return {"dimension": self.dimension, "variant": "clearing",
                "parameters": {"base": self.base.to_config(), "radius": self.radius,
                               "center": list(self.center)}}


@dataclass(frozen=True, eq=False)
class CustomSet(ControlSet):
    """Indicator sampled on a regular grid (nearest cell lookup).

    Outside the grid the set repeats periodically when ``periodic`` is true,
    and is ``outside`` (0 or 1) otherwise.
    """

    values: np.ndarray
    lower: tuple
    upper: tuple
    periodic: bool = False
    outside: int = 0

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("indicator values must be 0 or 1")
        if len(self.lower) != v.ndim or len(self.upper) != v.ndim:
            raise ValueError("grid bounds do not match the indicator array")
        object.__setattr__(self, "values", v.astype(np.int8))

    @classmethod
    def full(cls, dimension: int) -> "CustomSet":
        return cls(np.ones((1,) * dimension), (0.0,) * dimension, (1.0,) * dimension, outside=1)

    @property
    def dimension(self):
        return self.values.ndim

    def _contains(self, x):
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        shape = np.asarray(self.values.shape)
        rel = (x - lo) / (hi - lo)
        if self.periodic:
            rel = np.mod(rel, 1.0)
            inside = np.ones(x.shape[:-1], dtype=bool)
        else:
            inside = np.all((rel >= 0) & (rel < 1), axis=-1)
        cell = np.clip(np.floor(rel * shape).astype(int), 0, shape - 1)
        vals = self.values[tuple(np.moveaxis(cell, -1, 0))].astype(bool)
        return np.where(inside, vals, bool(self.outside))

    def sample_box(self, margin):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if self.periodic:
            return lo, hi
        return lo - margin, hi + margin

    def to_config(self):
        return {"dimension": self.dimension, "variant": "custom",
                "parameters": {"values": self.values.tolist(), "lower": list(self.lower),
                               "upper": list(self.upper), "periodic": self.periodic,
                               "outside": self.outside}}


def from_config(cfg: dict) -> ControlSet:
    """Build a set from ``{"dimension", "variant", "parameters"}``."""
    for key in ("dimension", "variant"):
        if key not in cfg:
            raise ValueError(f"control set config is missing '{key}'")
    d = int(cfg["dimension"])
    p = cfg.get("parameters", {})
    variant = cfg["variant"]
    if variant == "periodic-balls":
        return PeriodicBalls(d, float(p["radius"]))
    if variant == "ball-complement":
        return BallComplement(d, float(p["radius"]), p.get("center"))
    if variant == "clearing":
        base = from_config(p["base"])
        if base.dimension != d:
            raise ValueError("clearing base has a different dimension")
        return Clearing(base, float(p["radius"]), p.get("center"))
    if variant == "custom":
        if p.get("full"):
            return CustomSet.full(d)
        s = CustomSet(np.asarray(p["values"]), tuple(p["lower"]), tuple(p["upper"]),
                      bool(p.get("periodic", False)), int(p.get("outside", 0)))
        if s.dimension != d:
            raise ValueError("custom indicator has a different dimension")
        return s
    raise ValueError(f"unknown control set variant '{variant}'")


def indicator(S: ControlSet, x) -> np.ndarray:
    return S.indicator(x)


# --- thickness ---------------------------------------------------------------


@dataclass
class ThicknessReport:
    gamma_mass: float
    rho: float
    is_thick: bool
    worst_center: list
    tolerance: float  # +- band of the volume estimate
    samples: int
    seed: int

    def to_dict(self):
        return asdict(self)


def unit_ball_samples(d: int, n: int, seed: int) -> np.ndarray:
    """Scrambled Sobol points in the unit ball (cube points with norm < 1)."""
    m = max(1, math.ceil(math.log2(max(n, 2))))
    pts = 2.0 * qmc.Sobol(d, scramble=True, seed=seed).random_base2(m) - 1.0
    return pts[np.sum(pts * pts, axis=1) < 1.0]


def _center_grid(S: ControlSet, margin: float, per_axis: int) -> np.ndarray:
    lo, hi = S.sample_box(margin)
    axes = [np.linspace(a, b, per_axis, endpoint=S.periodic is False) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, S.dimension)
    extra = S.special_points()
    if extra:
        grid = np.vstack([grid, np.array(extra)])
    return grid


def thickness_check(S: ControlSet, rho: float, centers_per_axis: int = 16,
                    mc_samples: int = 4096, seed: int = 0) -> ThicknessReport:
    if rho <= 0:
        raise ValueError("rho must be positive")
    if mc_samples <= 0 or centers_per_axis <= 0:
        raise ValueError("need a positive number of samples and centres")
    d = S.dimension
    unit = unit_ball_samples(d, mc_samples, seed)
    vol = ball_volume(d, rho)
    centers = _center_grid(S, rho, centers_per_axis)
    masses = np.empty(len(centers))
    for i, c in enumerate(centers):
        masses[i] = vol * np.mean(S._contains(c + rho * unit))
    j = int(np.argmin(masses))
    gamma = float(masses[j])
    if gamma < NOISE_FLOOR * vol:
        gamma = 0.0
    return ThicknessReport(gamma, float(rho), gamma > 0, centers[j].tolist(),
                           float(2.0 * vol / math.sqrt(len(unit))), len(unit), seed)


# --- geometric control condition ---------------------------------------------


@dataclass
class GCCReport:
    L: float
    delta_line: float
    satisfies_gcc: bool
    witness_base: list
    witness_direction: list
    lines_tested: int

    def to_dict(self):
        return asdict(self)


def line_directions(d: int, n: int) -> np.ndarray:
    """Axis directions first, then a near-uniform set on the upper half sphere."""
    axes = list(np.eye(d))
    if d == 1:
        return np.array(axes)
    if d == 2:
        ang = np.pi * np.arange(n) / n
        extra = np.column_stack([np.cos(ang), np.sin(ang)])
    elif d == 3:
        golden = np.pi * (3.0 - math.sqrt(5.0))
        k = np.arange(n)
        z = 1.0 - (k + 0.5) / n  # upper hemisphere
        r = np.sqrt(1.0 - z * z)
        extra = np.column_stack([r * np.cos(golden * k), r * np.sin(golden * k), z])
    else:
        g = qmc.MultivariateNormalQMC(np.zeros(d), seed=0).random(n)
        extra = g / np.linalg.norm(g, axis=1, keepdims=True)
    dirs = np.vstack([axes, extra])
    # drop near-duplicates of the axes (and antipodes)
    keep = []
    for v in dirs:
        if all(abs(abs(np.dot(v, w)) - 1.0) > 1e-9 for w in keep):
            keep.append(v)
    return np.array(keep)


def gcc_check(S: ControlSet, L: float, direction_samples: int = 32, offset_samples: int = 32,
              line_resolution: int = 256) -> GCCReport:
    if L <= 0:
        raise ValueError("L must be positive")
    if min(direction_samples, offset_samples, line_resolution) <= 0:
        raise ValueError("sample counts must be positive")
    d = S.dimension
    dirs = line_directions(d, direction_samples)
    bases = _center_grid(S, L, offset_samples)
    s = (np.arange(line_resolution) + 0.5) / line_resolution * L
    best = (math.inf, None, None)
    for u in dirs:
        pts = bases[:, None, :] + s[None, :, None] * u[None, None, :]
        meas = L * np.mean(S._contains(pts), axis=1)
        i = int(np.argmin(meas))
        if meas[i] < best[0]:
            best = (float(meas[i]), bases[i], u)
    delta = best[0] if best[0] >= NOISE_FLOOR * L else 0.0
    return GCCReport(float(L), delta, delta > 0, best[1].tolist(), best[2].tolist(),
                     len(dirs) * len(bases))
