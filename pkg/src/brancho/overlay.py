"""Segment arrangement: split segments at mutual contacts and share common pieces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, geometry
from .errors import OverlayDegeneracy
from .measure import cluster_points


@dataclass(frozen=True)
class Arrangement:
    """Result of :func:`overlay`.

    Vertices are sorted lexicographically, so an edge ``(a, b)`` with
    ``a < b`` is oriented from the lexicographically smaller endpoint.
    ``pieces[k]`` lists ``(edge, sign)`` along input segment ``k``;
    ``point_ids[j]`` is the vertex of the ``j``-th extra point.
    """

    vertices: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    pieces: list
    point_ids: np.ndarray


def overlay(starts, ends, extra_points=None, eps: float | None = None) -> Arrangement:
    eps = geometry.EPS_GEOM if eps is None else eps
    starts = np.asarray(starts, dtype=np.float64)
    ends = np.asarray(ends, dtype=np.float64)
    n = len(starts)
    d = starts.shape[1] if starts.ndim == 2 and starts.size else (
        np.asarray(extra_points).shape[1] if extra_points is not None and len(extra_points) else 2
    )
    extra = np.zeros((0, d)) if extra_points is None else np.asarray(extra_points, dtype=np.float64).reshape(-1, d)
    starts = starts.reshape(-1, d)
    ends = ends.reshape(-1, d)

    if n:
        idx, ts = _kernels.segment_splits(starts, ends, eps)
    else:
        idx, ts = np.zeros(0, dtype=np.int64), np.zeros(0)
    params: list[list[float]] = [[0.0, 1.0] for _ in range(n)]
    for i, t in zip(idx.tolist(), ts.tolist()):
        params[i].append(t)

    # candidate points: every cut point, then the extra points
    seg_pts: list[np.ndarray] = []
    offsets = [0]
    for k in range(n):
        tk = np.unique(np.asarray(params[k]))
        params[k] = tk
        pk = starts[k] + tk[:, None] * (ends[k] - starts[k])
        pk[0], pk[-1] = starts[k], ends[k]
        seg_pts.append(pk)
        offsets.append(offsets[-1] + len(tk))
    allpts = np.vstack(seg_pts + [extra]) if (seg_pts or len(extra)) else np.zeros((0, d))
    labels = cluster_points(allpts, eps)
    reps = np.unique(labels)
    order = np.lexsort(allpts[reps].T[::-1]) if len(reps) else np.zeros(0, dtype=int)
    vid_of_rep = {int(reps[o]): i for i, o in enumerate(order)}
    vertices = allpts[reps[order]].copy() if len(reps) else np.zeros((0, d))
    vid = np.array([vid_of_rep[int(l)] for l in labels], dtype=np.int64)

    edge_index: dict[tuple[int, int], int] = {}
    raw_pieces: list[list[tuple[tuple[int, int], int]]] = []
    for k in range(n):
        ids = vid[offsets[k]:offsets[k + 1]]
        if ids[0] == ids[-1] and len(set(ids.tolist())) == 1:
            raise OverlayDegeneracy(f"segment {k} collapses to a point at eps={eps}")
        seq = []
        for a, b in zip(ids[:-1].tolist(), ids[1:].tolist()):
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            edge_index.setdefault(key, 0)
            seq.append((key, 1 if a < b else -1))
        raw_pieces.append(seq)

    keys = sorted(edge_index)
    for i, key in enumerate(keys):
        edge_index[key] = i
    edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
    if len(edges):
        lengths = np.linalg.norm(vertices[edges[:, 1]] - vertices[edges[:, 0]], axis=1)
    else:
        lengths = np.zeros(0)
    pieces = [[(edge_index[key], s) for key, s in seq] for seq in raw_pieces]
    point_ids = vid[offsets[-1]:]
    vertices.setflags(write=False)
    return Arrangement(vertices, edges, lengths, pieces, point_ids)
