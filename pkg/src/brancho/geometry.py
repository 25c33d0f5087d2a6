"""Points, cones, polygonal curves and the proper-crossing predicate.

Curves are polylines parametrized by arc length, so they are 1-Lipschitz
and their stopping time equals their length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadInterval, BranchoError, DegenerateCurve, VertexParameter

#: Points closer than this are identified (overlay snapping, predicates).
EPS_GEOM = 1e-9


def eps_geom() -> float:
    return EPS_GEOM


def set_eps_geom(value: float) -> None:
    global EPS_GEOM
    if not value > 0:
        raise ValueError("eps_geom must be positive")
    EPS_GEOM = float(value)


def as_point(p) -> np.ndarray:
    arr = np.array(p, dtype=np.float64).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise BranchoError(f"invalid point {p!r}")
    return arr


def lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    return tuple(a.tolist()) < tuple(b.tolist())


# ---------------------------------------------------------------------------
# cones


@dataclass(frozen=True)
class Cone:
    """Closed cone ``{y : d(y - apex, span axis) <= s |y - apex|}`` cut by a ball.

    ``side`` is ``"two"``, ``"plus"`` or ``"minus"``; one-sided cones also
    require ``±axis·(y - apex) >= 0``.
    """

    apex: np.ndarray
    radius: float
    axis: np.ndarray
    aperture: float
    side: str = "two"

    def __post_init__(self):
        apex = as_point(self.apex)
        axis = as_point(self.axis)
        n = float(np.linalg.norm(axis))
        if n == 0.0:
            raise BranchoError("cone axis must be nonzero")
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "axis", axis / n)
        if not 0.0 < self.aperture < 1.0:
            raise BranchoError("aperture must lie in (0, 1)")
        if not self.radius > 0:
            raise BranchoError("cone radius must be positive (use math.inf for no cap)")
        if self.side not in ("two", "plus", "minus"):
            raise BranchoError(f"unknown cone side {self.side!r}")


def cone_contains(c: Cone, p, tol: float = 0.0) -> bool:
    w = as_point(p) - c.apex
    nw = float(np.linalg.norm(w))
    if nw > c.radius + tol:
        return False
    along = float(w @ c.axis)
    perp = math.sqrt(max(nw * nw - along * along, 0.0))
    if perp > c.aperture * nw + tol:
        return False
    if c.side == "plus" and along < -tol:
        return False
    if c.side == "minus" and along > tol:
        return False
    return True


# ---------------------------------------------------------------------------
# polylines


class PolyCurve:
    """Polyline parametrized by arc length, constant after its last vertex.

    Consecutive vertices closer than ``EPS_GEOM`` are merged on construction;
    a single vertex encodes a constant curve.
    """

    __slots__ = ("vertices", "seg_lengths", "cum", "length")

    def __init__(self, vertices: Sequence[Sequence[float]] | np.ndarray):
        V = np.array(vertices, dtype=np.float64)
        if V.ndim == 1:
            V = V.reshape(1, -1)
        if V.shape[0] == 0 or V.shape[1] == 0:
            raise BranchoError("a curve needs at least one vertex")
        if not np.all(np.isfinite(V)):
            raise BranchoError("curve vertices must be finite")
        keep = [0]
        for i in range(1, V.shape[0]):
            if np.linalg.norm(V[i] - V[keep[-1]]) > EPS_GEOM:
                keep.append(i)
        V = V[keep]
        V.setflags(write=False)
        self.vertices = V
        seg = np.linalg.norm(np.diff(V, axis=0), axis=1)
        self.seg_lengths = seg
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.length = float(self.cum[-1])

    # basic accessors -------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_segments(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def is_constant(self) -> bool:
        return self.n_segments == 0

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1]

    @property
    def stopping_time(self) -> float:
        return self.length

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices[:-1], self.vertices[1:]

    def reversed(self) -> "PolyCurve":
        return PolyCurve(self.vertices[::-1])

    def translated(self, shift) -> "PolyCurve":
        return PolyCurve(self.vertices + as_point(shift))

    def segment_at(self, t: float) -> int:
        """Index of the segment containing parameter ``t`` (clamped)."""
        if self.is_constant:
            return -1
        k = int(np.searchsorted(self.cum, t, side="right")) - 1
        return min(max(k, 0), self.n_segments - 1)

    def point_at(self, t: float) -> np.ndarray:
        if self.is_constant or t <= 0.0:
            return self.vertices[0].copy()
        if t >= self.length:
            return self.vertices[-1].copy()
        k = self.segment_at(t)
        lam = (t - self.cum[k]) / self.seg_lengths[k]
        return self.vertices[k] + lam * (self.vertices[k + 1] - self.vertices[k])

    def direction(self, k: int) -> np.ndarray:
        d = self.vertices[k + 1] - self.vertices[k]
        return d / self.seg_lengths[k]

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyCurve):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(
            np.allclose(self.vertices, other.vertices, rtol=0.0, atol=EPS_GEOM)
        )

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self) -> str:
        return f"PolyCurve({self.vertices.tolist()!r})"


def restrict(curve: PolyCurve, a: float, b: float) -> PolyCurve:
    """Sub-curve ``t -> curve(t + a)`` on ``[0, b - a]`` (clipped at the end)."""
    if a > b:
        raise BadInterval(f"restriction interval [{a}, {b}] is empty")
    L = curve.length
    a = min(max(a, 0.0), L)
    b = min(max(b, 0.0), L)
    if curve.is_constant or b - a <= 0.0:
        return PolyCurve(curve.point_at(a).reshape(1, -1))
    inner = curve.vertices[(curve.cum > a) & (curve.cum < b)]
    pts = np.vstack([curve.point_at(a), inner, curve.point_at(b)])
    return PolyCurve(pts)


# ---------------------------------------------------------------------------
# balls and spheres along polylines


def _seg_quadratic(p, q, c):
    d = q - p
    w = p - c
    return float(d @ d), 2.0 * float(w @ d), float(w @ w)


def segment_ball_interval(p, q, c, r):
    """Sub-interval of ``[0, 1]`` where ``|p + t(q - p) - c| <= r``, or None."""
    A, B, C = _seg_quadratic(p, q, c)
    C -= r * r
    if A == 0.0:
        return (0.0, 1.0) if C <= 0 else None
    disc = B * B - 4 * A * C
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    t0 = (-B - sq) / (2 * A)
    t1 = (-B + sq) / (2 * A)
    lo, hi = max(t0, 0.0), min(t1, 1.0)
    if lo > hi:
        return None
    return lo, hi


def segment_sphere_roots(p, q, c, r) -> list[float]:
    """Parameters in ``[0, 1]`` where the segment meets the sphere ``|z - c| = r``."""
    A, B, C = _seg_quadratic(p, q, c)
    C -= r * r
    if A == 0.0:
        return []
    disc = B * B - 4 * A * C
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    roots = sorted({(-B - sq) / (2 * A), (-B + sq) / (2 * A)})
    return [t for t in roots if -1e-15 <= t <= 1.0 + 1e-15]


def sphere_hits(curve: PolyCurve, center, radius: float) -> np.ndarray:
    """Sorted arc-length parameters at which the curve lies on the sphere."""
    c = as_point(center)
    if curve.is_constant:
        d = float(np.linalg.norm(curve.start - c))
        return np.array([0.0]) if abs(d - radius) <= EPS_GEOM else np.empty(0)
    out = []
    V = curve.vertices
    for k in range(curve.n_segments):
        for t in segment_sphere_roots(V[k], V[k + 1], c, radius):
            out.append(curve.cum[k] + min(max(t, 0.0), 1.0) * curve.seg_lengths[k])
    return np.unique(np.asarray(out, dtype=np.float64))


def ball_first_last(curve: PolyCurve, center, radius: float):
    """First and last parameters with ``|γ(t) - center| <= radius``, or None.

    ``radius`` is inflated by ``EPS_GEOM`` so that ``radius = 0`` tests point
    membership.
    """
    c = as_point(center)
    r = radius + EPS_GEOM
    if curve.is_constant:
        return (0.0, 0.0) if np.linalg.norm(curve.start - c) <= r else None
    V = curve.vertices
    first = last = None
    for k in range(curve.n_segments):
        iv = segment_ball_interval(V[k], V[k + 1], c, r)
        if iv is None:
            continue
        lo = curve.cum[k] + iv[0] * curve.seg_lengths[k]
        hi = curve.cum[k] + iv[1] * curve.seg_lengths[k]
        if first is None:
            first = lo
        last = hi
    if first is None:
        return None
    return float(first), float(last)


# ---------------------------------------------------------------------------
# proper crossing


@dataclass(frozen=True)
class CrossingResult:
    """Entrance/exit times for the queried radius and the largest proper radius."""

    t_in: float
    t_out: float
    max_radius: float
    proper: bool


def _first_reach(pts: np.ndarray, x0: np.ndarray, r: float) -> float:
    """Arc length along ``pts`` (starting at ``x0``) where distance ``r`` is first reached."""
    s = 0.0
    for k in range(len(pts) - 1):
        a, b = pts[k], pts[k + 1]
        seg = float(np.linalg.norm(b - a))
        if seg == 0.0:
            continue
        A, B, C = _seg_quadratic(a, b, x0)
        C -= r * r
        if C >= 0.0:
            return s
        disc = B * B - 4 * A * C
        tau = (-B + math.sqrt(disc)) / (2 * A)
        if tau <= 1.0:
            return s + tau * seg
        s += seg
    return math.nan


def _cone_reach(pts: np.ndarray, x0: np.ndarray, v: np.ndarray, s: float) -> float:
    """Largest distance from ``x0`` reached before ``pts`` first leaves ``X_+(x0, ∞, v, s)``."""
    best = 0.0
    k1 = 1.0 - s * s
    for k in range(len(pts) - 1):
        a0 = pts[k] - x0
        dd = pts[k + 1] - pts[k]
        # g(t) = (1 - s^2)|w|^2 - (w.v)^2 and h(t) = w.v along w = a0 + t dd
        av, dv = float(a0 @ v), float(dd @ v)
        A = k1 * float(dd @ dd) - dv * dv
        B = 2.0 * (k1 * float(a0 @ dd) - av * dv)
        C = k1 * float(a0 @ a0) - av * av
        cuts = {0.0, 1.0}
        if abs(A) > 1e-300:
            disc = B * B - 4 * A * C
            if disc >= 0:
                sq = math.sqrt(disc)
                cuts.update(((-B - sq) / (2 * A), (-B + sq) / (2 * A)))
        elif abs(B) > 1e-300:
            cuts.add(-C / B)
        if abs(dv) > 1e-300:
            cuts.add(-av / dv)
        ts = sorted(t for t in cuts if 0.0 <= t <= 1.0)
        for lo, hi in zip(ts[:-1], ts[1:]):
            if hi - lo <= 1e-15:
                continue
            m = 0.5 * (lo + hi)
            w = a0 + m * dd
            nw2 = float(w @ w)
            along = float(w @ v)
            g = k1 * nw2 - along * along
            if g > 1e-12 * nw2 or along < -1e-12 * math.sqrt(nw2):
                return max(best, float(np.linalg.norm(a0 + lo * dd)))
        best = max(best, float(np.linalg.norm(a0)), float(np.linalg.norm(a0 + dd)))
    return best


def proper_crossing(curve: PolyCurve, t0: float, r: float, s: float) -> CrossingResult:
    """Test whether ``curve`` crosses ``X(γ(t0), r, span γ'(t0), s)`` properly at ``t0``.

    ``max_radius`` is the supremum of radii with a proper crossing; on a
    polyline it is the farthest distance reached on each side before the
    curve first leaves the corresponding one-sided cone.
    """
    if curve.is_constant:
        raise DegenerateCurve("constant curves have no tangent")
    L = curve.length
    if not 0.0 < t0 < L:
        raise BadInterval(f"t0 must lie in (0, {L}), got {t0}")
    if not 0.0 < s < 1.0:
        raise BranchoError("aperture must lie in (0, 1)")
    k = curve.segment_at(t0)
    # vertex parameters: accept only if the tangent is continuous there
    for j in range(1, curve.n_segments):
        if abs(t0 - curve.cum[j]) <= EPS_GEOM:
            if np.linalg.norm(curve.direction(j - 1) - curve.direction(j)) > 1e-9:
                raise VertexParameter(f"t0={t0} is a corner of the polyline")
            k = j
    x0 = curve.point_at(t0)
    v = curve.direction(k)
    V = curve.vertices
    fwd = np.vstack([x0, V[curve.cum > t0]])
    bwd = np.vstack([x0, V[curve.cum < t0][::-1]])
    r_max = min(_cone_reach(fwd, x0, v, s), _cone_reach(bwd, x0, -v, s))
    t_out = _first_reach(fwd, x0, r)
    back = _first_reach(bwd, x0, r)
    t_out = t0 + t_out if not math.isnan(t_out) else math.nan
    t_in = t0 - back if not math.isnan(back) else math.nan
    proper = bool(0.0 < r <= r_max)
    return CrossingResult(t_in=t_in, t_out=t_out, max_radius=r_max, proper=proper)
