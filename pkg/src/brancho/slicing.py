"""Level-set crossings of traffic plans: slice intensity, slice, and level integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import BranchoError, NonGenericLevel, check_alpha
from .measure import AtomicMeasure
from .plan import TrafficPlan, alpha_energy
from .regions import SliceFunction, Slab

__all__ = [
    "SliceFunction",
    "SliceResult",
    "slice_plan",
    "slice",
    "critical_levels",
    "level_profile",
    "SliceBoundReport",
    "check_slice_bounds",
]


@dataclass
class SliceResult:
    level: float
    intensity: AtomicMeasure
    slice: AtomicMeasure
    crossings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "intensity": self.intensity.to_json(),
            "slice": self.slice.to_json(),
            "crossings": [{"atom": i, "t": t, "sign": s} for i, t, s in self.crossings],
        }


def _segment_crossings(f: SliceFunction, p, q, level: float):
    """``(tau, sign)`` of transversal crossings in ``(0, 1)``; raises on tangency."""
    tol = geometry.EPS_GEOM
    if f.kind == "affine":
        fp, fq = f(p), f(q)
        if (fp - level) * (fq - level) < 0:
            return [((level - fp) / (fq - fp), 1 if fq > fp else -1)]
        return []
    d = q - p
    w0 = p - f.center
    A = float(d @ d)
    B = 2.0 * float(w0 @ d)
    C = float(w0 @ w0) - level * level
    tmin, fmin = f.segment_min(p, q)
    if 0.0 < tmin < 1.0 and abs(fmin - level) <= tol:
        raise NonGenericLevel(f"level {level} touches a segment tangentially")
    disc = B * B - 4 * A * C
    if disc <= 0:
        return []
    sq = math.sqrt(disc)
    out = []
    for tau in sorted(((-B - sq) / (2 * A), (-B + sq) / (2 * A))):
        if 0.0 < tau < 1.0:
            slope = float((w0 + tau * d) @ d)
            out.append((tau, 1 if slope > 0 else -1))
    return out


def slice_plan(P: TrafficPlan, f: SliceFunction, level: float) -> SliceResult:
    """Crossings of ``{f = level}`` by every atom, with signs of ``(f∘γ)'``."""
    tol = geometry.EPS_GEOM
    pts, w_int, w_sig, crossings = [], [], [], []
    for i, a in enumerate(P.atoms):
        c = a.curve
        vals = f.values(c.vertices)
        if np.any(np.abs(vals - level) <= tol):
            raise NonGenericLevel(f"a curve vertex lies on the level set f = {level}")
        V = c.vertices
        for k in range(c.n_segments):
            for tau, sgn in _segment_crossings(f, V[k], V[k + 1], level):
                pts.append(V[k] + tau * (V[k + 1] - V[k]))
                w_int.append(a.mass)
                w_sig.append(sgn * a.mass)
                crossings.append((i, float(c.cum[k] + tau * c.seg_lengths[k]), sgn))
    if not pts:
        z = AtomicMeasure.zero(P.dim)
        return SliceResult(level, z, z, [])
    pts = np.array(pts)
    return SliceResult(
        level,
        AtomicMeasure(pts, w_int, positive=True),
        AtomicMeasure(pts, w_sig),
        crossings,
    )


slice = slice_plan


def critical_levels(P: TrafficPlan, f: SliceFunction, a: float, b: float) -> np.ndarray:
    """Levels in ``[a, b]`` where the crossing pattern of ``P`` may change."""
    levels = [a, b]
    for atom in P.atoms:
        V = atom.curve.vertices
        levels.extend(f.values(V).tolist())
        if f.kind == "distance":
            for k in range(atom.curve.n_segments):
                t, v = f.segment_min(V[k], V[k + 1])
                if 0.0 < t < 1.0:
                    levels.append(v)
    lv = np.unique(np.asarray(levels))
    return lv[(lv >= a) & (lv <= b)]


def level_profile(P: TrafficPlan, f: SliceFunction, a: float, b: float, alpha: float):
    """Piecewise-constant ``ℓ -> M^α(⟦P, f, ℓ⟧)`` on ``[a, b]``.

    Returns ``(breaks, values)``: ``values[j]`` holds on ``(breaks[j], breaks[j+1])``.
    """
    alpha = check_alpha(alpha)
    breaks = critical_levels(P, f, a, b)
    vals = np.full(max(len(breaks) - 1, 0), np.nan)
    for j, (lo, hi) in enumerate(zip(breaks[:-1], breaks[1:])):
        try:
            vals[j] = slice_plan(P, f, 0.5 * (lo + hi)).intensity.alpha_mass(alpha)
        except NonGenericLevel:
            # sliver between two nearly equal critical levels
            pass
    for j in np.flatnonzero(np.isnan(vals)):
        near = [vals[k] for k in (j - 1, j + 1) if 0 <= k < len(vals) and not np.isnan(vals[k])]
        vals[j] = max(near, default=0.0)
    return breaks, vals


@dataclass
class SliceBoundReport:
    lhs: float
    rhs: float
    holds: bool
    monte_carlo: float | None = None

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "monte_carlo": self.monte_carlo}


def check_slice_bounds(
    P: TrafficPlan,
    f: SliceFunction,
    a: float,
    b: float,
    alpha: float,
    samples: int = 0,
    rng: np.random.Generator | None = None,
) -> SliceBoundReport:
    """Compare ``∫_a^b M^α(⟦P,f,ℓ⟧) dℓ`` with ``Lip(f) E^α(P, {a <= f <= b})``."""
    if not a < b:
        raise BranchoError("need a < b")
    breaks, vals = level_profile(P, f, a, b, alpha)
    lhs = math.fsum(v * (hi - lo) for v, lo, hi in zip(vals, breaks[:-1], breaks[1:]))
    rhs = f.lipschitz * alpha_energy(P, alpha, Slab(f, a, b))
    mc = None
    if samples:
        rng = rng if rng is not None else np.random.default_rng(0)
        acc = []
        for lv in rng.uniform(a, b, size=samples):
            try:
                acc.append(slice_plan(P, f, float(lv)).intensity.alpha_mass(alpha))
            except NonGenericLevel:
                continue
        mc = (b - a) * float(np.mean(acc)) if acc else None
    return SliceBoundReport(lhs, rhs, lhs <= rhs + 1e-9, mc)
