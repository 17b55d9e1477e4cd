"""Geometry and indexing for boxes in Z^d and their metric graphs.

The simulation domain is the cube B(R) = [-R, R]^d with R = floor(pad*N).
Vertices are indexed densely in row-major order; the edge between vertex
``i`` and its +axis neighbor has id ``i*d + axis``.  Every lattice edge
carries a continuous interval of length d (the dimension), so metric
distances come in units of d per lattice step.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class BoxGeometry:
    """A d-dimensional cube with dense vertex and edge indexing.

    Immutable after construction; safe to share across parallel replicas.
    Expensive index tables (coordinates, edge lists) are built lazily and
    cached.
    """

    def __init__(self, d: int, N: int, pad: float = 2.0):
        if int(d) != d or d < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {d}")
        if int(N) != N or N < 1:
            raise ValueError(f"radius must be an integer >= 1, got {N}")
        if pad < 1:
            raise ValueError(f"pad must be >= 1, got {pad}")
        self.d = int(d)
        self.N = int(N)
        self.pad = pad
        # exact floor for int/Fraction pads, conventional floor for floats
        if isinstance(pad, (int, Fraction)):
            self.R = int(Fraction(pad) * N)
        else:
            self.R = math.floor(pad * N)
        self.side = 2 * self.R + 1
        self.n_vertices = self.side**self.d
        self.edge_length = float(self.d)
        self.strides = np.array(
            [self.side ** (self.d - 1 - j) for j in range(self.d)], dtype=np.int64
        )
        self.origin = (self.n_vertices - 1) // 2
        self.metadata = {"d6_log_corrections": self.d == 6}
        self._coords = None
        self._linf = None
        self._edges = None
        self._edges_within = {}

    # -- indexing ---------------------------------------------------------

    def index(self, points) -> np.ndarray:
        """Map lattice points (coordinates in [-R, R]) to dense indices."""
        pts = np.asarray(points, dtype=np.int64)
        squeeze = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.d:
            raise ValueError(f"expected {self.d} coordinates")
        if np.any(np.abs(pts) > self.R):
            raise ValueError("point outside the domain")
        idx = (pts + self.R) @ self.strides
        return idx[0] if squeeze else idx

    def point(self, indices) -> np.ndarray:
        """Inverse of :meth:`index`."""
        idx = np.asarray(indices, dtype=np.int64)
        squeeze = idx.ndim == 0
        idx = np.atleast_1d(idx)
        if np.any((idx < 0) | (idx >= self.n_vertices)):
            raise ValueError("index out of range")
        out = np.empty((len(idx), self.d), dtype=np.int64)
        rem = idx.copy()
        for j in range(self.d):
            out[:, j], rem = np.divmod(rem, self.strides[j])
        out -= self.R
        return out[0] if squeeze else out

    @property
    def coords(self) -> np.ndarray:
        """(n_vertices, d) array of coordinates, cached."""
        if self._coords is None:
            self._coords = self.point(np.arange(self.n_vertices))
        return self._coords

    @property
    def linf(self) -> np.ndarray:
        """Per-vertex L-infinity norm, cached."""
        if self._linf is None:
            self._linf = np.abs(self.coords).max(axis=1).astype(np.int32)
        return self._linf

    def shell(self) -> np.ndarray:
        """Vertices of the outer absorbing shell (linf == R)."""
        return np.flatnonzero(self.linf == self.R)

    # -- edges -------------------------------------------------------------

    @property
    def edges(self):
        """All domain edges as (u, v, edge_id) arrays, v = u + e_axis."""
        if self._edges is None:
            us, vs, ids = [], [], []
            idx = np.arange(self.n_vertices, dtype=np.int64)
            for axis in range(self.d):
                coord = (idx // self.strides[axis]) % self.side
                u = idx[coord < self.side - 1]
                us.append(u)
                vs.append(u + self.strides[axis])
                ids.append(u * self.d + axis)
            self._edges = (
                np.concatenate(us).astype(np.int32),
                np.concatenate(vs).astype(np.int32),
                np.concatenate(ids),
            )
        return self._edges

    @property
    def n_edges(self) -> int:
        return self.d * self.side ** (self.d - 1) * (self.side - 1)

    def edges_within(self, N: int):
        """Edges with both endpoints in B(N), memoized per radius."""
        if N not in self._edges_within:
            eu, ev, ids = self.edges
            keep = (self.linf[eu] <= N) & (self.linf[ev] <= N)
            self._edges_within[N] = (eu[keep], ev[keep], ids[keep])
        return self._edges_within[N]

    def edge_endpoints(self, edge_id: int):
        """(u, v) vertex indices of an edge id; raises if id is invalid."""
        u, axis = divmod(int(edge_id), self.d)
        if not 0 <= u < self.n_vertices:
            raise ValueError(f"bad edge id {edge_id}")
        coord = (u // self.strides[axis]) % self.side
        if coord >= self.side - 1:
            raise ValueError(f"edge id {edge_id} has no +axis neighbor")
        return int(u), int(u + self.strides[axis])

    def edge_slot_count(self) -> int:
        """Size of the dense per-edge-id storage (includes invalid slots)."""
        return self.n_vertices * self.d

    def edge_valid_mask(self) -> np.ndarray:
        mask = np.zeros(self.edge_slot_count(), dtype=bool)
        mask[self.edges[2]] = True
        return mask


def make_box(d: int, N: int, pad: float = 2.0) -> BoxGeometry:
    """Build the simulation domain B(pad*N) with its absorbing shell."""
    return BoxGeometry(d, N, pad)


def boundary(box: BoxGeometry, A) -> np.ndarray:
    """Vertices of A with a lattice neighbor (in Z^d) outside A.

    Neighbors beyond the domain count as outside A, so the domain's own
    surface vertices are always boundary.  Empty A gives an empty result.
    """
    A = np.asarray(A, dtype=np.int64)
    if A.size == 0:
        return A.astype(np.int32)
    in_A = np.zeros(box.n_vertices, dtype=bool)
    in_A[A] = True
    is_boundary = np.zeros(box.n_vertices, dtype=bool)
    idx = np.arange(box.n_vertices, dtype=np.int64)
    for axis in range(box.d):
        coord = (idx // box.strides[axis]) % box.side
        for sign in (1, -1):
            inside = coord < box.side - 1 if sign == 1 else coord > 0
            nb_out = np.ones(box.n_vertices, dtype=bool)
            nb_out[inside] = ~in_A[idx[inside] + sign * box.strides[axis]]
            is_boundary |= in_A & nb_out
    return np.flatnonzero(is_boundary).astype(np.int32)


def euclidean_ball(box: BoxGeometry, r: float) -> np.ndarray:
    """Domain vertices with Euclidean norm <= r (clipped to the domain)."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if r > box.R * math.sqrt(box.d):
        warnings.warn(f"ball radius {r} exceeds the domain; result clipped")
    sq = (box.coords.astype(np.float64) ** 2).sum(axis=1)
    return np.flatnonzero(sq <= float(r) ** 2 + 1e-12).astype(np.int32)


@dataclass(frozen=True)
class MetricCoordinate:
    """A point on the metric graph: an edge id and an offset in [0, d].

    Offsets are exact rationals so accumulated distances carry no float
    drift; offset 0 and offset d are the two lattice endpoints.
    """

    edge_id: int
    offset: Fraction

    def __post_init__(self):
        object.__setattr__(self, "offset", Fraction(self.offset))


def metric_distance(box: BoxGeometry, p: MetricCoordinate, q: MetricCoordinate,
                    k: int = 1) -> Fraction:
    """Shortest-path length between two metric-graph points.

    Points must sit on the resolution-k grid (offsets that are multiples
    of d/k).  Exact for all grid points: inside a cube, vertex-to-vertex
    metric distance is d times the L1 lattice distance, and geodesics
    enter or leave a partially traversed edge only at its endpoints.
    """
    if k < 1 or int(k) != k:
        raise ValueError("resolution k must be an integer >= 1")
    L = Fraction(box.d)
    step = L / k
    for pt in (p, q):
        if not 0 <= pt.offset <= L:
            raise ValueError(f"offset {pt.offset} outside [0, {L}]")
        if (pt.offset / step).denominator != 1:
            raise ValueError(f"offset {pt.offset} not on the d/{k} grid")
    pu, pv = box.edge_endpoints(p.edge_id)
    qu, qv = box.edge_endpoints(q.edge_id)

    best = None
    if p.edge_id == q.edge_id:
        best = abs(p.offset - q.offset)
    cp = box.point(np.array([pu, pv]))
    cq = box.point(np.array([qu, qv]))
    p_ways = ((0, p.offset), (1, L - p.offset))
    q_ways = ((0, q.offset), (1, L - q.offset))
    for ip, cost_p in p_ways:
        for iq, cost_q in q_ways:
            hops = int(np.abs(cp[ip] - cq[iq]).sum())
            cand = cost_p + L * hops + cost_q
            if best is None or cand < best:
                best = cand
    return best
