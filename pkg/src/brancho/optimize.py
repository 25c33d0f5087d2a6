"""Brute-force optimal plans for tiny atomic marginals and a cycle-removal improvement loop."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cycles import find_lagrangian_cycles, remove_quasi_cycle
from .errors import BranchoError, MassMismatch, TooManyAtoms, check_alpha
from .flow import CANCEL_TOL, EulerFlow
from .geometry import PolyCurve
from .measure import AtomicMeasure
from .plan import TrafficPlan, WeightedCurve, alpha_energy, marginals

MAX_ATOMS_PER_SIDE = 4


def max_threads() -> int:
    env = os.environ.get("BRANCHO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# marginal bookkeeping


def split_common(mu_minus: AtomicMeasure, mu_plus: AtomicMeasure):
    """``(common, net)``: mass shared by both marginals at a point, and ``μ⁺ − μ⁻``."""
    net = mu_plus - mu_minus
    pts, ws = [], []
    for p, w in mu_minus:
        c = min(w, mu_plus.weight_at(p))
        if c > 0:
            pts.append(p)
            ws.append(c)
    dim = mu_minus.dim
    common = AtomicMeasure(np.array(pts).reshape(-1, dim), ws, dim=dim)
    return common, net


def stationary_atoms(common: AtomicMeasure) -> list[WeightedCurve]:
    return [WeightedCurve(PolyCurve(p.reshape(1, -1)), float(w)) for p, w in common if w > 0]


# ---------------------------------------------------------------------------
# flows to plans


def cancel_cycles(T: EulerFlow) -> EulerFlow:
    """Remove directed cycles from a flow by subtracting their bottleneck repeatedly."""
    if T.is_empty:
        return T
    nv = len(T.vertices)
    # directed edges with residual amounts
    tail = np.where(T.weights > 0, T.edges[:, 0], T.edges[:, 1])
    head = np.where(T.weights > 0, T.edges[:, 1], T.edges[:, 0])
    amt = np.abs(T.weights).astype(np.float64)
    tol = CANCEL_TOL * max(1.0, float(amt.max()))
    while True:
        cyc = _find_cycle(nv, tail, head, amt, tol)
        if cyc is None:
            break
        b = min(amt[e] for e in cyc)
        for e in cyc:
            amt[e] -= b
    keep = amt > tol
    w = np.where(T.weights > 0, amt, -amt)
    return EulerFlow(T.vertices, T.edges[keep], w[keep], dim=T.dim)


def _find_cycle(nv, tail, head, amt, tol):
    out: list[list[int]] = [[] for _ in range(nv)]
    for e in range(len(amt)):
        if amt[e] > tol:
            out[tail[e]].append(e)
    color = [0] * nv
    parent_edge = [-1] * nv
    for root in range(nv):
        if color[root]:
            continue
        stack = [(root, iter(out[root]))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            e = next(it, None)
            if e is None:
                color[v] = 2
                stack.pop()
                continue
            u = head[e]
            if color[u] == 0:
                color[u] = 1
                parent_edge[u] = e
                stack.append((u, iter(out[u])))
            elif color[u] == 1:
                cyc = [e]
                x = v
                while x != u:
                    pe = parent_edge[x]
                    cyc.append(pe)
                    x = tail[pe]
                return cyc
    return None


def decompose_flow(T: EulerFlow) -> list[tuple[np.ndarray, float]]:
    """Greedy widest source-to-sink paths of an acyclic flow.

    Returns ``(vertex coordinates, mass)`` per path; paths follow edge
    orientation, so cycles must be cancelled first.
    """
    T = cancel_cycles(T)
    if T.is_empty:
        return []
    nv = len(T.vertices)
    tail = np.where(T.weights > 0, T.edges[:, 0], T.edges[:, 1])
    head = np.where(T.weights > 0, T.edges[:, 1], T.edges[:, 0])
    amt = np.abs(T.weights).astype(np.float64)
    tol = CANCEL_TOL * max(1.0, float(amt.max()))
    supply = np.zeros(nv)
    for e in range(len(amt)):
        supply[tail[e]] += amt[e]
        supply[head[e]] -= amt[e]
    order = _topo_order(nv, tail, head)
    paths = []
    while True:
        live = amt > tol
        if not np.any(live):
            break
        # widest path by dynamic programming in topological order
        width = np.where(supply > tol, supply, -np.inf)
        prev = np.full(nv, -1, dtype=np.int64)
        for v in order:
            if width[v] == -np.inf:
                continue
            for e in np.flatnonzero(live & (tail == v)):
                cand = min(width[v], amt[e])
                u = head[e]
                if cand > width[u]:
                    width[u] = cand
                    prev[u] = e
        best, best_v = -np.inf, -1
        for v in range(nv):
            if supply[v] < -tol and prev[v] != -1:
                cand = min(width[v], -supply[v])
                if cand > best:
                    best, best_v = cand, v
        if best_v < 0 or best <= tol:
            break
        edges = []
        v = best_v
        while prev[v] != -1:
            e = int(prev[v])
            edges.append(e)
            v = int(tail[e])
        edges.reverse()
        start = v
        best = min(best, supply[start])
        verts = [start] + [int(head[e]) for e in edges]
        for e in edges:
            amt[e] -= best
        supply[start] -= best
        supply[best_v] += best
        paths.append((T.vertices[verts].copy(), float(best)))
    return paths


def _topo_order(nv, tail, head):
    indeg = np.zeros(nv, dtype=np.int64)
    outs: list[list[int]] = [[] for _ in range(nv)]
    for t, h in zip(tail.tolist(), head.tolist()):
        indeg[h] += 1
        outs[t].append(h)
    queue = [v for v in range(nv) if indeg[v] == 0]
    order = []
    while queue:
        v = queue.pop(0)
        order.append(v)
        for h in outs[v]:
            indeg[h] -= 1
            if indeg[h] == 0:
                queue.append(h)
    return order


def plan_from_flow(T: EulerFlow, mu_minus: AtomicMeasure, mu_plus: AtomicMeasure) -> TrafficPlan:
    """Path decomposition of ``T`` plus constant curves for the mass shared by both marginals."""
    common, _ = split_common(mu_minus, mu_plus)
    atoms = [WeightedCurve(PolyCurve(v), m) for v, m in decompose_flow(T)]
    atoms += stationary_atoms(common)
    return TrafficPlan(atoms, dim=mu_minus.dim)


# ---------------------------------------------------------------------------
# Steiner topologies


def full_topologies(k: int):
    """All full Steiner trees on terminals ``0..k-1`` with Steiner nodes ``k..2k-3``."""
    if k <= 1:
        yield []
        return
    if k == 2:
        yield [(0, 1)]
        return

    def grow(edges, t, s):
        if t == k:
            yield list(edges)
            return
        for i, (u, v) in enumerate(edges):
            new = edges[:i] + edges[i + 1:] + [(u, s), (s, v), (t, s)]
            yield from grow(new, t + 1, s + 1)

    yield from grow([(0, k), (1, k), (2, k)], 3, k + 1)


def tree_flows(edges: list[tuple[int, int]], supply: np.ndarray, n_nodes: int) -> np.ndarray:
    """Signed flow on each edge ``(u, v)``: positive means ``u -> v``.

    ``supply`` is the net demand ``μ⁺ − μ⁻`` at the terminals (zero at Steiner
    nodes); on a tree the flow is fixed by subtree sums.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_nodes)]
    for i, (u, v) in enumerate(edges):
        adj[u].append((v, i))
        adj[v].append((u, i))
    dem = np.zeros(n_nodes)
    dem[: len(supply)] = supply
    flows = np.zeros(len(edges))
    parent = [-1] * n_nodes
    order = [0]
    seen = [False] * n_nodes
    seen[0] = True
    for v in order:
        for u, i in adj[v]:
            if not seen[u]:
                seen[u] = True
                parent[u] = i
                order.append(u)
    sub = dem.copy()
    for v in reversed(order[1:]):
        i = parent[v]
        u = edges[i][0] if edges[i][1] == v else edges[i][1]
        # subtree of v needs sub[v] in, supplied from u
        flows[i] = sub[v] if edges[i][1] == v else -sub[v]
        sub[u] += sub[v]
    return flows


@dataclass
class TopologyResult:
    index: int
    edges: list
    coords: np.ndarray
    flows: np.ndarray
    cost: float


def _optimize_topology(idx, edges, terminals, supply, alpha, restarts, rng_seed) -> TopologyResult:
    k, d = terminals.shape
    n = max(k, 2 * k - 2) if k > 2 else k
    flows = tree_flows(edges, supply, n)
    eu = np.array([u for u, _ in edges], dtype=np.int64)
    ev = np.array([v for _, v in edges], dtype=np.int64)
    cw = np.abs(flows) ** alpha
    cw[np.abs(flows) <= 1e-15] = 0.0
    free = np.zeros(n, dtype=np.uint8)
    free[k:] = 1
    lo = terminals.min(axis=0)
    hi = terminals.max(axis=0)
    rng = np.random.default_rng(rng_seed)
    best = None
    for r in range(restarts):
        X = np.zeros((n, d))
        X[:k] = terminals
        if n > k:
            if r == 0:
                X[k:] = terminals.mean(axis=0) + 1e-3 * (hi - lo + 1.0) * np.arange(1, n - k + 1)[:, None] / (n - k)
            else:
                X[k:] = rng.uniform(lo, hi, size=(n - k, d))
            X = _kernels.weber_sweeps(X, free, eu, ev, cw, 200, 1e-12)
            X, cost, _ = _kernels.golden_descent(X, free, eu, ev, cw, lo, hi, 1e-10, 200)
        else:
            cost = _kernels.tree_cost(X, eu, ev, cw)
        if best is None or cost < best[0]:
            best = (float(cost), np.asarray(X).copy())
        if n == k:
            break
    return TopologyResult(idx, edges, best[1], flows, best[0])


@dataclass
class OptimumReport:
    plan: TrafficPlan
    energy: float
    tree_cost: float
    topology: list = field(default_factory=list)
    coords: np.ndarray | None = None
    n_topologies: int = 0


def brute_force_search(
    mu_minus: AtomicMeasure,
    mu_plus: AtomicMeasure,
    alpha: float,
    seed: int = 0,
    restarts: int = 5,
) -> OptimumReport:
    alpha = check_alpha(alpha)
    if len(mu_minus) > MAX_ATOMS_PER_SIDE or len(mu_plus) > MAX_ATOMS_PER_SIDE:
        raise TooManyAtoms(f"at most {MAX_ATOMS_PER_SIDE} atoms per side")
    if abs(mu_minus.total() - mu_plus.total()) > 1e-12:
        raise MassMismatch(f"masses differ: {mu_minus.total()} vs {mu_plus.total()}")
    if np.any(mu_minus.weights < 0) or np.any(mu_plus.weights < 0):
        raise BranchoError("marginals must be positive")
    dim = mu_minus.dim if len(mu_minus) else mu_plus.dim
    common, net = split_common(mu_minus, mu_plus)
    terminals = net.points.reshape(-1, dim)
    supply = net.weights
    k = len(terminals)
    if k == 0:
        plan = TrafficPlan(stationary_atoms(common), dim=dim)
        return OptimumReport(plan, 0.0, 0.0, [], None, 0)
    topologies = list(full_topologies(k))
    seeds = np.random.SeedSequence(seed).spawn(len(topologies))
    jobs = [
        (i, edges, terminals, supply, alpha, restarts, seeds[i]) for i, edges in enumerate(topologies)
    ]
    threads = min(max_threads(), len(jobs))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda j: _optimize_topology(*j), jobs))
    else:
        results = [_optimize_topology(*j) for j in jobs]
    best = min(results, key=lambda r: (r.cost, r.index))
    eu = [u for u, _ in best.edges]
    ev = [v for _, v in best.edges]
    T = EulerFlow.from_segments(best.coords[eu], best.coords[ev], best.flows, dim=dim)
    plan = plan_from_flow(T, mu_minus, mu_plus)
    energy = alpha_energy(plan, alpha)
    return OptimumReport(plan, energy, best.cost, best.edges, best.coords, len(topologies))


def brute_force_optimal(
    mu_minus: AtomicMeasure, mu_plus: AtomicMeasure, alpha: float, seed: int = 0
) -> tuple[TrafficPlan, float]:
    rep = brute_force_search(mu_minus, mu_plus, alpha, seed=seed)
    return rep.plan, rep.energy


# ---------------------------------------------------------------------------
# local improvement


@dataclass
class ImproveTrace:
    plan: TrafficPlan
    energies: list
    rounds: int


def improve_with_trace(
    P: TrafficPlan, alpha: float, max_rounds: int = 10, min_strength: float = 1e-9, tries: int = 5
) -> ImproveTrace:
    alpha = check_alpha(alpha)
    current = P
    energy = alpha_energy(current, alpha)
    energies = [energy]
    rounds = 0
    for _ in range(max_rounds):
        moving = TrafficPlan([a for a in current.atoms if not a.curve.is_constant], dim=current.dim)
        still = [a for a in current.atoms if a.curve.is_constant]
        cycles = find_lagrangian_cycles(moving, min_strength)
        if not cycles:
            break
        accepted = None
        for cyc in cycles[:tries]:
            dist = float(np.linalg.norm(np.subtract(cyc.y, cyc.x)))
            for div in (8, 16, 32, 64):
                try:
                    res = remove_quasi_cycle(moving, cyc.x, cyc.y, dist / div, alpha)
                except BranchoError:
                    continue
                cand = plan_from_flow(res.flow, *marginals(moving))
                cand = TrafficPlan(list(cand.atoms) + still, dim=current.dim)
                e = alpha_energy(cand, alpha)
                if e < energy - 1e-12 * max(1.0, energy):
                    accepted = (cand, e)
                    break
            if accepted:
                break
        if accepted is None:
            break
        current, energy = accepted
        energies.append(energy)
        rounds += 1
    return ImproveTrace(current, energies, rounds)


def local_improve(P: TrafficPlan, alpha: float, max_rounds: int = 10) -> TrafficPlan:
    return improve_with_trace(P, alpha, max_rounds).plan


__all__ = [
    "brute_force_optimal",
    "brute_force_search",
    "OptimumReport",
    "full_topologies",
    "tree_flows",
    "cancel_cycles",
    "decompose_flow",
    "plan_from_flow",
    "split_common",
    "local_improve",
    "improve_with_trace",
    "ImproveTrace",
    "max_threads",
]
