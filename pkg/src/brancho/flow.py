"""Polyhedral transport paths (weighted oriented edge sets) and the currents induced by plans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import UnbalancedMeasure, check_alpha
from .measure import AtomicMeasure
from .overlay import overlay
from .plan import Network, TrafficPlan
from .regions import edge_fractions

#: Relative threshold below which summed edge multiplicities count as cancelled.
CANCEL_TOL = 1e-12


class EulerFlow:
    """Edges ``a -> b`` (``a`` lexicographically smaller) with nonzero real weights.

    Instances are always overlay-canonical: edges are interior-disjoint and
    sorted, so equal flows have equal edge lists.
    """

    __slots__ = ("vertices", "edges", "weights")

    def __init__(self, vertices: np.ndarray, edges: np.ndarray, weights: np.ndarray, dim: int = 2):
        vertices = np.asarray(vertices, dtype=np.float64)
        if vertices.ndim != 2:
            vertices = vertices.reshape(-1, dim)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        used = np.unique(edges) if len(edges) else np.zeros(0, dtype=np.int64)
        remap = -np.ones(len(vertices), dtype=np.int64)
        remap[used] = np.arange(len(used))
        self.vertices = vertices[used]
        self.edges = remap[edges] if len(edges) else edges
        self.weights = weights
        for arr in (self.vertices, self.edges, self.weights):
            arr.setflags(write=False)

    # construction ----------------------------------------------------------
    @classmethod
    def empty(cls, dim: int = 2) -> "EulerFlow":
        return cls(np.zeros((0, dim)), np.zeros((0, 2)), np.zeros(0), dim=dim)

    @classmethod
    def from_segments(cls, starts, ends, weights, dim: int | None = None) -> "EulerFlow":
        """Overlay weighted oriented segments and sum their multiplicities."""
        starts = np.asarray(starts, dtype=np.float64)
        dim = dim if dim is not None else (starts.shape[1] if starts.ndim == 2 else 2)
        starts = starts.reshape(-1, dim)
        ends = np.asarray(ends, dtype=np.float64).reshape(-1, dim)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        keep = np.linalg.norm(ends - starts, axis=1) > geometry.EPS_GEOM
        starts, ends, weights = starts[keep], ends[keep], weights[keep]
        if len(starts) == 0:
            return cls.empty(dim)
        arr = overlay(starts, ends)
        acc: list[list[float]] = [[] for _ in range(len(arr.edges))]
        for k, seq in enumerate(arr.pieces):
            for e, s in seq:
                acc[e].append(s * weights[k])
        w = np.array([math.fsum(v) for v in acc])
        scale = max(1.0, float(np.max(np.abs(weights))))
        keep = np.abs(w) > CANCEL_TOL * scale
        return cls(arr.vertices, arr.edges[keep], w[keep], dim=dim)

    @classmethod
    def from_network(cls, net: Network) -> "EulerFlow":
        dim = net.vertices.shape[1] if len(net.vertices) else 2
        w = net.theta_vec
        scale = max(1.0, float(np.max(net.Theta))) if len(w) else 1.0
        keep = np.abs(w) > CANCEL_TOL * scale
        return cls(net.vertices, net.edges[keep], w[keep], dim=dim)

    # accessors ---------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def is_empty(self) -> bool:
        return len(self.weights) == 0

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]

    @property
    def lengths(self) -> np.ndarray:
        a, b = self.segments()
        return np.linalg.norm(b - a, axis=1)

    def boundary(self) -> AtomicMeasure:
        return boundary(self)

    def alpha_mass(self, alpha: float, region=None) -> float:
        return alpha_mass(self, alpha, region)

    def mass(self) -> float:
        return float(math.fsum(self.lengths * np.abs(self.weights)))

    def scaled(self, c: float) -> "EulerFlow":
        if c == 0:
            return EulerFlow.empty(self.dim)
        return EulerFlow(self.vertices, self.edges, c * self.weights, dim=self.dim)

    def __neg__(self) -> "EulerFlow":
        return self.scaled(-1.0)

    def __add__(self, other: "EulerFlow") -> "EulerFlow":
        return flow_sum([self, other])

    def __sub__(self, other: "EulerFlow") -> "EulerFlow":
        return flow_sum([self, -other])

    def allclose(self, other: "EulerFlow", tol: float = 1e-9) -> bool:
        return (self - other).mass() <= tol

    def to_json(self) -> dict:
        a, b = self.segments()
        return {
            "edges": [
                {"a": pa.tolist(), "b": pb.tolist(), "w": float(w)}
                for pa, pb, w in zip(a, b, self.weights)
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "EulerFlow":
        es = data.get("edges", [])
        if not es:
            return cls.empty(int(data.get("dim", 2)))
        return cls.from_segments([e["a"] for e in es], [e["b"] for e in es], [e["w"] for e in es])

    def __repr__(self) -> str:
        return f"EulerFlow({len(self)} edges, mass={self.mass():.6g})"


def flow_sum(flows) -> EulerFlow:
    flows = [f for f in flows if not f.is_empty]
    if not flows:
        return EulerFlow.empty()
    starts = np.vstack([f.segments()[0] for f in flows])
    ends = np.vstack([f.segments()[1] for f in flows])
    w = np.concatenate([f.weights for f in flows])
    return EulerFlow.from_segments(starts, ends, w, dim=flows[0].dim)


def induce_current(curve: geometry.PolyCurve, mass: float = 1.0) -> EulerFlow:
    if curve.is_constant:
        return EulerFlow.empty(curve.dim)
    s, e = curve.segments()
    return EulerFlow.from_segments(s, e, np.full(len(s), float(mass)), dim=curve.dim)


def induce_flow(P: TrafficPlan) -> EulerFlow:
    if len(P) == 0:
        return EulerFlow.empty(P.dim)
    return EulerFlow.from_network(P.network)


def boundary(T: EulerFlow) -> AtomicMeasure:
    """Inflow minus outflow at every vertex."""
    if T.is_empty:
        return AtomicMeasure.zero(T.dim)
    nv = len(T.vertices)
    acc: list[list[float]] = [[] for _ in range(nv)]
    for (a, b), w in zip(T.edges.tolist(), T.weights.tolist()):
        acc[b].append(w)
        acc[a].append(-w)
    vals = np.array([math.fsum(v) for v in acc])
    return AtomicMeasure(T.vertices, vals, dim=T.dim)


def alpha_mass(T: EulerFlow, alpha: float, region=None) -> float:
    """``Σ_e |e ∩ region| |w_e|^α``."""
    alpha = check_alpha(alpha)
    if T.is_empty:
        return 0.0
    frac = edge_fractions(T.vertices, T.edges, region)
    return float(math.fsum(T.lengths * frac * np.abs(T.weights) ** alpha))


def cone_over(apex, S: AtomicMeasure) -> EulerFlow:
    """Star of segments ``apex -> p`` weighted by the atoms of a balanced ``S``."""
    apex = geometry.as_point(apex)
    if abs(S.total()) > 1e-12:
        raise UnbalancedMeasure(f"cone over a measure of total {S.total():.3g}")
    if len(S) == 0:
        return EulerFlow.empty(len(apex))
    starts = np.repeat(apex[None, :], len(S), axis=0)
    return EulerFlow.from_segments(starts, S.points, S.weights, dim=len(apex))


@dataclass
class GoodDecompositionReport:
    A_holds: bool
    B_holds: bool
    C_holds: bool
    B_gap: float
    C_gap: float
    offending: list = field(default_factory=list)
    boundary_mass: float = 0.0
    twice_mass: float = 0.0

    @property
    def all_hold(self) -> bool:
        return self.A_holds and self.B_holds and self.C_holds

    def to_json(self) -> dict:
        return {
            "A": self.A_holds,
            "B": self.B_holds,
            "C": self.C_holds,
            "B_gap": self.B_gap,
            "C_gap": self.C_gap,
            "offending_atoms": list(self.offending),
            "boundary_mass": self.boundary_mass,
            "twice_total_mass": self.twice_mass,
        }


def simple_atoms(P: TrafficPlan) -> list[int]:
    """Indices of atoms that are constant or revisit a network vertex."""
    net = P.network
    bad = []
    for i, a in enumerate(P.atoms):
        walk = net.vertex_walks[i]
        if a.curve.is_constant or len(np.unique(walk)) != len(walk):
            bad.append(i)
    return bad


def check_good_decomposition(P: TrafficPlan) -> GoodDecompositionReport:
    net = P.network
    offending = simple_atoms(P)
    w = P.masses
    if len(P) and net.n_edges:
        per_atom = np.abs(net.plus - net.minus) @ net.lengths
        integral_M = math.fsum(w * per_atom)
        M_T = math.fsum(net.lengths * np.abs(net.theta_vec))
    else:
        integral_M = M_T = 0.0
    B_gap = integral_M - M_T
    scale_B = max(1.0, P.total_time)
    dbound = [
        2.0 * a.mass if np.linalg.norm(a.curve.end - a.curve.start) > geometry.EPS_GEOM else 0.0
        for a in P.atoms
    ]
    integral_dM = math.fsum(dbound)
    M_dT = induce_flow(P).boundary().mass()
    C_gap = integral_dM - M_dT
    twice = 2.0 * P.total_mass
    scale_C = max(1.0, P.total_mass)
    tol = 1e-9
    return GoodDecompositionReport(
        A_holds=not offending,
        B_holds=abs(B_gap) <= tol * scale_B,
        C_holds=abs(C_gap) <= tol * scale_C and abs(integral_dM - twice) <= tol * scale_C,
        B_gap=B_gap,
        C_gap=C_gap,
        offending=offending,
        boundary_mass=M_dT,
        twice_mass=twice,
    )
