"""Regions of space and slicing functions, evaluated exactly along segments.

Every region reports the sub-intervals of ``[0, 1]`` of a segment
``p + t (q - p)`` lying inside it, which is all the energy formulas need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import BranchoError


@dataclass(frozen=True, eq=False)
class SliceFunction:
    """``z -> |z - center|`` or ``z -> normal·z + offset``."""

    kind: str
    center: np.ndarray | None = None
    normal: np.ndarray | None = None
    offset: float = 0.0

    @classmethod
    def distance(cls, center) -> "SliceFunction":
        return cls("distance", center=geometry.as_point(center))

    @classmethod
    def affine(cls, normal, offset: float = 0.0) -> "SliceFunction":
        nv = geometry.as_point(normal)
        if not np.any(nv != 0.0):
            raise BranchoError("affine slice function needs a nonzero normal")
        return cls("affine", normal=nv, offset=float(offset))

    @property
    def lipschitz(self) -> float:
        return 1.0 if self.kind == "distance" else float(np.linalg.norm(self.normal))

    def __call__(self, p) -> float:
        p = np.asarray(p, dtype=np.float64)
        if self.kind == "distance":
            return float(np.linalg.norm(p - self.center))
        return float(p @ self.normal + self.offset)

    def values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        if self.kind == "distance":
            return np.linalg.norm(pts - self.center, axis=-1)
        return pts @ self.normal + self.offset

    def sublevel_interval(self, p, q, level: float):
        """Sub-interval of ``[0, 1]`` where ``f <= level`` (convex f), or None."""
        if self.kind == "distance":
            if level < 0:
                return None
            return geometry.segment_ball_interval(p, q, self.center, level)
        fp, fq = self(p), self(q)
        return _linear_le(fp, fq, level)

    def segment_min(self, p, q) -> tuple[float, float]:
        """Parameter and value of the minimum of ``f`` on the segment."""
        if self.kind == "affine":
            fp, fq = self(p), self(q)
            return (0.0, fp) if fp <= fq else (1.0, fq)
        d = q - p
        dd = float(d @ d)
        t = 0.0 if dd == 0.0 else min(max(float((self.center - p) @ d) / dd, 0.0), 1.0)
        return t, self(p + t * d)

    def to_json(self) -> dict:
        if self.kind == "distance":
            return {"kind": "distance", "center": self.center.tolist()}
        return {"kind": "affine", "normal": self.normal.tolist(), "offset": self.offset}

    @classmethod
    def from_json(cls, data: dict) -> "SliceFunction":
        if data["kind"] == "distance":
            return cls.distance(data["center"])
        if data["kind"] == "affine":
            return cls.affine(data["normal"], data.get("offset", 0.0))
        raise BranchoError(f"unknown slice function kind {data['kind']!r}")


def _linear_le(fp: float, fq: float, level: float):
    if fp <= level and fq <= level:
        return (0.0, 1.0)
    if fp > level and fq > level:
        return None
    t = (level - fp) / (fq - fp)
    return (0.0, t) if fp <= level else (t, 1.0)


def _subtract(iv, hole):
    """``iv`` minus the open interval ``hole`` (both closed intervals or None)."""
    if iv is None:
        return []
    if hole is None or hole[1] <= iv[0] or hole[0] >= iv[1]:
        return [iv]
    out = []
    if hole[0] > iv[0]:
        out.append((iv[0], hole[0]))
    if hole[1] < iv[1]:
        out.append((hole[1], iv[1]))
    return out


def merge_intervals(ivs):
    ivs = sorted(iv for iv in ivs if iv[1] > iv[0])
    out: list[tuple[float, float]] = []
    for a, b in ivs:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


class Region:
    def intervals(self, p, q) -> list[tuple[float, float]]:
        raise NotImplementedError

    def contains(self, z) -> bool:
        raise NotImplementedError

    def length_fraction(self, p, q) -> float:
        return sum(b - a for a, b in merge_intervals(self.intervals(p, q)))


@dataclass(frozen=True, eq=False)
class Whole(Region):
    def intervals(self, p, q):
        return [(0.0, 1.0)]

    def contains(self, z) -> bool:
        return True


@dataclass(frozen=True, eq=False)
class Ball(Region):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", geometry.as_point(self.center))
        if not self.radius >= 0:
            raise BranchoError("ball radius must be nonnegative")

    def intervals(self, p, q):
        iv = geometry.segment_ball_interval(np.asarray(p), np.asarray(q), self.center, self.radius)
        return [] if iv is None else [iv]

    def contains(self, z) -> bool:
        return float(np.linalg.norm(np.asarray(z) - self.center)) <= self.radius


@dataclass(frozen=True, eq=False)
class Slab(Region):
    """``{a <= f <= b}``."""

    f: SliceFunction
    a: float
    b: float

    def intervals(self, p, q):
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        upper = self.f.sublevel_interval(p, q, self.b)
        if self.f.kind == "distance":
            lower = self.f.sublevel_interval(p, q, self.a) if self.a > 0 else None
            return _subtract(upper, lower)
        # affine: {f >= a} is {-f <= -a}
        fp, fq = self.f(p), self.f(q)
        lower = _linear_le(-fp, -fq, -self.a)
        if upper is None or lower is None:
            return []
        lo, hi = max(upper[0], lower[0]), min(upper[1], lower[1])
        return [(lo, hi)] if lo <= hi else []

    def contains(self, z) -> bool:
        v = self.f(z)
        return self.a <= v <= self.b


@dataclass(frozen=True, eq=False)
class Union(Region):
    parts: tuple = field(default_factory=tuple)

    def intervals(self, p, q):
        return merge_intervals([iv for r in self.parts for iv in r.intervals(p, q)])

    def contains(self, z) -> bool:
        return any(r.contains(z) for r in self.parts)


def as_region(region) -> Region:
    if region is None:
        return Whole()
    if isinstance(region, Region):
        return region
    raise BranchoError(f"unsupported region {region!r}")


def annulus(center, r0: float, r1: float) -> Slab:
    return Slab(SliceFunction.distance(center), r0, r1)


__all__ = [
    "SliceFunction",
    "Region",
    "Whole",
    "Ball",
    "Slab",
    "Union",
    "as_region",
    "annulus",
    "merge_intervals",
    "edge_fractions",
]


def edge_fractions(vertices: np.ndarray, edges: np.ndarray, region) -> np.ndarray:
    """Fraction of each edge's length lying in ``region`` (all ones for None)."""
    if region is None or isinstance(region, Whole):
        return np.ones(len(edges))
    region = as_region(region)
    return np.array(
        [region.length_fraction(vertices[a], vertices[b]) for a, b in edges], dtype=np.float64
    )
