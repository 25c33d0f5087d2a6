"""Finite signed or positive sums of weighted Dirac masses."""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from . import geometry
from .errors import BranchoError

#: Weights below this (relative to the largest weight, floor 1) are dropped.
ZERO_TOL = 1e-13


class AtomicMeasure:
    """Sum of ``w_i δ_{p_i}`` with distinct points (merged within ``EPS_GEOM``)."""

    __slots__ = ("points", "weights", "positive")

    def __init__(self, points=None, weights=None, dim: int = 2, positive: bool = False):
        if points is None or len(points) == 0:
            pts = np.zeros((0, dim))
            w = np.zeros(0)
        else:
            pts = np.array(points, dtype=np.float64)
            if pts.ndim == 1:
                pts = pts.reshape(1, -1)
            w = np.array(weights, dtype=np.float64).reshape(-1)
            if len(w) != len(pts):
                raise BranchoError("points and weights differ in length")
            if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
                raise BranchoError("measure atoms must be finite")
        pts, w = _merge(pts, w)
        if positive and np.any(w < 0):
            raise BranchoError("positive measure with negative weight")
        pts.setflags(write=False)
        w.setflags(write=False)
        self.points = pts
        self.weights = w
        self.positive = positive

    @classmethod
    def dirac(cls, p, w: float = 1.0) -> "AtomicMeasure":
        p = geometry.as_point(p)
        return cls([p], [w], dim=len(p))

    @classmethod
    def zero(cls, dim: int = 2) -> "AtomicMeasure":
        return cls(dim=dim)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(zip(self.points, self.weights))

    def total(self) -> float:
        """Signed total ``μ(ℝ^d)``."""
        return float(math.fsum(self.weights))

    def mass(self) -> float:
        """Total variation ``|μ|(ℝ^d)``."""
        return float(math.fsum(np.abs(self.weights)))

    def alpha_mass(self, alpha: float) -> float:
        return float(math.fsum(np.abs(self.weights) ** alpha))

    def mass_where(self, pred: Callable[[np.ndarray], bool]) -> float:
        return float(math.fsum(w for p, w in self if pred(p)))

    def abs(self) -> "AtomicMeasure":
        return AtomicMeasure(self.points, np.abs(self.weights), dim=self.dim)

    def scaled(self, c: float) -> "AtomicMeasure":
        return AtomicMeasure(self.points, c * self.weights, dim=self.dim)

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        pts = np.vstack([self.points.reshape(-1, self.dim), other.points.reshape(-1, self.dim)])
        return AtomicMeasure(pts, np.concatenate([self.weights, other.weights]), dim=self.dim)

    def __neg__(self) -> "AtomicMeasure":
        return self.scaled(-1.0)

    def __sub__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return self + (-other)

    def weight_at(self, p, tol: float | None = None) -> float:
        tol = geometry.EPS_GEOM if tol is None else tol
        if len(self) == 0:
            return 0.0
        d = np.linalg.norm(self.points - geometry.as_point(p), axis=1)
        return float(self.weights[d <= tol].sum())

    def allclose(self, other: "AtomicMeasure", tol: float = 1e-9) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff.weights) <= tol))

    def to_json(self) -> dict:
        return {"atoms": [{"p": p.tolist(), "w": float(w)} for p, w in self]}

    @classmethod
    def from_json(cls, data: dict, positive: bool = False) -> "AtomicMeasure":
        atoms = data.get("atoms", [])
        if not atoms:
            return cls(dim=int(data.get("dim", 2)), positive=positive)
        return cls([a["p"] for a in atoms], [a["w"] for a in atoms], positive=positive)

    def __repr__(self) -> str:
        body = ", ".join(f"{w:.6g}@{p.tolist()}" for p, w in self)
        return f"AtomicMeasure({body})"


def _merge(pts: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge points within ``EPS_GEOM``, drop negligible weights, sort lexicographically."""
    d = pts.shape[1]
    if len(pts) == 0:
        return np.zeros((0, d)), np.zeros(0)
    labels = cluster_points(pts, geometry.EPS_GEOM)
    reps: dict[int, int] = {}
    acc: dict[int, list[float]] = {}
    for i, lab in enumerate(labels):
        reps.setdefault(lab, i)
        acc.setdefault(lab, []).append(float(w[i]))
    keys = list(reps)
    P = pts[[reps[k] for k in keys]]
    W = np.array([math.fsum(acc[k]) for k in keys])
    scale = max(1.0, float(np.max(np.abs(w))))
    keep = np.abs(W) > ZERO_TOL * scale
    P, W = P[keep], W[keep]
    order = np.lexsort(P.T[::-1]) if len(P) else np.zeros(0, dtype=int)
    return P[order].copy(), W[order].copy()


def cluster_points(pts: np.ndarray, eps: float) -> np.ndarray:
    """Label points so that points within ``eps`` (transitively) share a label.

    Labels are the smallest member index of each cluster.
    """
    n = len(pts)
    parent = np.arange(n)
    if n > 1:
        from scipy.spatial import cKDTree

        pairs = cKDTree(pts).query_pairs(eps, output_type="ndarray")

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i, j in pairs:
            ri, rj = find(i), find(j)
            if ri != rj:
                lo, hi = (ri, rj) if ri < rj else (rj, ri)
                parent[hi] = lo
        for i in range(n):
            parent[i] = find(i)
    return parent


def sum_measures(measures: Iterable[AtomicMeasure], dim: int = 2) -> AtomicMeasure:
    ms = list(measures)
    if not ms:
        return AtomicMeasure.zero(dim)
    pts = np.vstack([m.points.reshape(-1, ms[0].dim) for m in ms])
    w = np.concatenate([m.weights for m in ms])
    return AtomicMeasure(pts, w, dim=ms[0].dim)
