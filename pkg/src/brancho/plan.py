"""Traffic plans, their marginals, the network they span and their α-energy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import geometry
from .errors import BranchoError, check_alpha
from .geometry import PolyCurve, restrict, sphere_hits
from .measure import AtomicMeasure
from .overlay import Arrangement, overlay
from .regions import edge_fractions


@dataclass(frozen=True)
class WeightedCurve:
    curve: PolyCurve
    mass: float

    def __post_init__(self):
        if not isinstance(self.curve, PolyCurve):
            object.__setattr__(self, "curve", PolyCurve(self.curve))
        m = float(self.mass)
        if not (m > 0 and math.isfinite(m)):
            raise BranchoError(f"atom mass must be positive and finite, got {self.mass}")
        object.__setattr__(self, "mass", m)


class TrafficPlan:
    """Finite positive combination of polygonal curves."""

    def __init__(self, atoms: Iterable[WeightedCurve | tuple] = (), dim: int | None = None):
        out = []
        for a in atoms:
            if not isinstance(a, WeightedCurve):
                curve, mass = a
                a = WeightedCurve(curve if isinstance(curve, PolyCurve) else PolyCurve(curve), mass)
            out.append(a)
        self.atoms: tuple[WeightedCurve, ...] = tuple(out)
        dims = {a.curve.dim for a in self.atoms}
        if len(dims) > 1:
            raise BranchoError("all curves of a plan must live in the same dimension")
        self.dim = dims.pop() if dims else (dim or 2)
        self._network: Network | None = None

    @classmethod
    def from_lists(cls, items: Sequence[tuple[float, Sequence[Sequence[float]]]]) -> "TrafficPlan":
        """Build from ``[(mass, vertices), ...]``."""
        return cls([WeightedCurve(PolyCurve(v), m) for m, v in items])

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __getitem__(self, i) -> WeightedCurve:
        return self.atoms[i]

    def __add__(self, other: "TrafficPlan") -> "TrafficPlan":
        return TrafficPlan(self.atoms + other.atoms, dim=self.dim)

    @property
    def masses(self) -> np.ndarray:
        return np.array([a.mass for a in self.atoms], dtype=np.float64)

    @property
    def total_mass(self) -> float:
        return math.fsum(a.mass for a in self.atoms)

    @property
    def total_time(self) -> float:
        return math.fsum(a.mass * a.curve.length for a in self.atoms)

    def max_norm(self) -> float:
        return max((a.curve.max_norm() for a in self.atoms), default=0.0)

    def check_radius(self, R: float) -> None:
        if self.max_norm() > R + geometry.EPS_GEOM:
            raise BranchoError(f"plan leaves the domain ball of radius {R}")

    @property
    def network(self) -> "Network":
        if self._network is None:
            self._network = build_network(self)
        return self._network

    def to_json(self) -> dict:
        return {
            "atoms": [
                {"mass": a.mass, "vertices": a.curve.vertices.tolist()} for a in self.atoms
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "TrafficPlan":
        return cls([WeightedCurve(PolyCurve(a["vertices"]), a["mass"]) for a in data["atoms"]])

    def __repr__(self) -> str:
        return f"TrafficPlan({len(self.atoms)} atoms, mass={self.total_mass:.6g})"


def marginals(P: TrafficPlan) -> tuple[AtomicMeasure, AtomicMeasure]:
    """Start-point and end-point distributions ``(μ⁻, μ⁺)``."""
    if len(P) == 0:
        return AtomicMeasure.zero(P.dim), AtomicMeasure.zero(P.dim)
    w = P.masses
    starts = np.array([a.curve.start for a in P.atoms])
    ends = np.array([a.curve.end for a in P.atoms])
    return (
        AtomicMeasure(starts, w, dim=P.dim, positive=True),
        AtomicMeasure(ends, w, dim=P.dim, positive=True),
    )


@dataclass(frozen=True, eq=False)
class Network:
    """Overlay of all curves of a plan with per-edge multiplicities.

    ``plus[i, e]`` / ``minus[i, e]`` count how often atom ``i`` runs along
    edge ``e`` with / against its canonical orientation.
    """

    vertices: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    masses: np.ndarray
    walks: list
    vertex_walks: list
    plus: np.ndarray
    minus: np.ndarray
    theta: np.ndarray
    Theta: np.ndarray
    theta_vec: np.ndarray
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    arrangement: Arrangement

    @property
    def theta_bar(self) -> np.ndarray:
        return np.minimum(self.theta_plus, self.theta_minus)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incidences(self, e: int) -> list[tuple[int, int]]:
        """``(atom, signed count)`` pairs for edge ``e``; each direction listed separately."""
        out = []
        for i in range(len(self.masses)):
            if self.plus[i, e]:
                out.append((i, int(self.plus[i, e])))
            if self.minus[i, e]:
                out.append((i, -int(self.minus[i, e])))
        return out

    def edge_points(self, e: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.edges[e]
        return self.vertices[a], self.vertices[b]

    def total_length(self) -> float:
        return float(math.fsum(self.lengths))


def build_network(P: TrafficPlan) -> Network:
    d = P.dim
    starts, ends, owner = [], [], []
    for i, a in enumerate(P.atoms):
        s, e = a.curve.segments()
        starts.append(s)
        ends.append(e)
        owner.extend([i] * len(s))
    S = np.vstack(starts) if starts else np.zeros((0, d))
    E = np.vstack(ends) if ends else np.zeros((0, d))
    anchors = np.array([a.curve.start for a in P.atoms]).reshape(-1, d)
    arr = overlay(S, E, extra_points=anchors)
    na, ne = len(P.atoms), len(arr.edges)
    plus = np.zeros((na, ne), dtype=np.int64)
    minus = np.zeros((na, ne), dtype=np.int64)
    walks: list[list[tuple[int, int]]] = [[] for _ in range(na)]
    for k, i in enumerate(owner):
        walks[i].extend(arr.pieces[k])
    vertex_walks = []
    for i in range(na):
        v = int(arr.point_ids[i])
        seq = [v]
        for e, s in walks[i]:
            a, b = arr.edges[e]
            if s > 0:
                plus[i, e] += 1
                v = int(b)
            else:
                minus[i, e] += 1
                v = int(a)
            seq.append(v)
        vertex_walks.append(np.array(seq, dtype=np.int64))
    w = P.masses
    touched = (plus + minus) > 0
    theta = w @ touched if na else np.zeros(ne)
    Theta = w @ (plus + minus) if na else np.zeros(ne)
    theta_vec = w @ (plus - minus) if na else np.zeros(ne)
    theta_plus = w @ (plus > 0) if na else np.zeros(ne)
    theta_minus = w @ (minus > 0) if na else np.zeros(ne)
    return Network(
        vertices=arr.vertices,
        edges=arr.edges,
        lengths=arr.lengths,
        masses=w,
        walks=walks,
        vertex_walks=vertex_walks,
        plus=plus,
        minus=minus,
        theta=np.asarray(theta, dtype=np.float64),
        Theta=np.asarray(Theta, dtype=np.float64),
        theta_vec=np.asarray(theta_vec, dtype=np.float64),
        theta_plus=np.asarray(theta_plus, dtype=np.float64),
        theta_minus=np.asarray(theta_minus, dtype=np.float64),
        arrangement=arr,
    )


def alpha_energy(P: TrafficPlan, alpha: float, region=None, network: Network | None = None) -> float:
    """``Σ_e |e ∩ region| θ(e)^{α-1} Θ(e)``."""
    alpha = check_alpha(alpha)
    if len(P) == 0:
        return 0.0
    net = network if network is not None else P.network
    if net.n_edges == 0:
        return 0.0
    frac = edge_fractions(net.vertices, net.edges, region)
    terms = net.lengths * frac * net.theta ** (alpha - 1.0) * net.Theta
    return float(math.fsum(terms))


def truncate_outside_ball(curve: PolyCurve, center, eps: float, side: str) -> PolyCurve:
    """Head ``γ|[0, t⁻]`` or tail ``γ|[t⁺, T∞]`` around the sphere ``∂B_eps(center)``.

    ``t⁻``/``t⁺`` are the first/last parameters on the sphere, both 0 when the
    curve never meets it.
    """
    if not eps > 0:
        raise BranchoError("eps must be positive")
    hits = sphere_hits(curve, center, eps)
    if side == "head":
        t = float(hits[0]) if len(hits) else 0.0
        return restrict(curve, 0.0, t)
    if side == "tail":
        t = float(hits[-1]) if len(hits) else 0.0
        return restrict(curve, t, curve.length)
    raise BranchoError(f"side must be 'head' or 'tail', got {side!r}")
