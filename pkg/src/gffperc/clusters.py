"""Sign-cluster labeling, arm and crossing indicators, minimal distances.

Clusters are vertex sets joined by open edges of one sign; a vertex in
the level set with no open edge is its own (singleton) cluster.  The
minimal distance between two clusters is measured on the ambient metric
graph and is computed in integer units of one sub-segment (d/k), so all
comparisons are exact.
"""

import heapq
from dataclasses import dataclass

import numpy as np

from ._kernels import component_roots
from .lattice import BoxGeometry
from .metric_edges import OpenEdgeSet


class ClusterLabeling:
    """Union-find partitions of the two sign level sets.

    Roots are canonical (the smallest member index), so labelings are
    comparable across backends and runs.
    """

    def __init__(self, box, field, edge_set, pos_roots, neg_roots):
        self.box = box
        self.field = field
        self.edge_set = edge_set
        self.level = edge_set.level
        self.pos_roots = pos_roots
        self.neg_roots = neg_roots

    def roots(self, sign):
        return self.pos_roots if sign > 0 else self.neg_roots

    def member_mask(self, sign):
        if sign > 0:
            return self.field.values >= self.level
        return self.field.values <= self.level

    def members(self, sign, root):
        """Sorted vertex indices of one cluster."""
        return np.flatnonzero((self.roots(sign) == root) & self.member_mask(sign))

    def reach(self, sign, v) -> int:
        """Largest L-infinity norm in the sign cluster of v, or -1."""
        val = self.field.values[v] - self.level
        if sign * val < 0:
            return -1
        mask = self.roots(sign) == self.roots(sign)[v]
        return int(self.box.linf[mask].max())


def label_clusters(edge_set: OpenEdgeSet, field) -> ClusterLabeling:
    """Union-find labeling of both sign level sets, linear in the edges."""
    box = edge_set.box
    eu, ev, ids = box.edges
    st = edge_set.states[ids]
    pos = component_roots(box.n_vertices, eu, ev, (st == 1).astype(np.uint8))
    neg = component_roots(box.n_vertices, eu, ev, (st == -1).astype(np.uint8))
    return ClusterLabeling(box, field, edge_set, pos, neg)


def one_arm_indicator(lab: ClusterLabeling, N: int) -> bool:
    """True iff the origin's nonnegative cluster touches the boundary of B(N)."""
    if N > lab.box.R:
        raise ValueError(f"N={N} exceeds the simulation radius {lab.box.R}")
    if N < 0:
        raise ValueError("N must be nonnegative")
    return lab.reach(1, lab.box.origin) >= N


def _group_members(roots, member_idx):
    """Sort members by root; returns (sorted members, group starts, group roots)."""
    r = roots[member_idx]
    order = np.argsort(r, kind="stable")
    ms = member_idx[order]
    rs = r[order]
    starts = np.flatnonzero(np.r_[True, rs[1:] != rs[:-1]])
    return ms, np.r_[starts, len(rs)], rs[starts]


def crossing_indicator(lab: ClusterLabeling, n: int, N: int) -> bool:
    """True iff some nonnegative cluster joins B(n) to the boundary of B(N)."""
    if not 1 <= n < N:
        raise ValueError(f"need 1 <= n < N, got n={n}, N={N}")
    if N > lab.box.R:
        raise ValueError(f"N={N} exceeds the simulation radius {lab.box.R}")
    member_idx = np.flatnonzero(lab.member_mask(1))
    if member_idx.size == 0:
        return False
    ms, bounds, _ = _group_members(lab.pos_roots, member_idx)
    li = lab.box.linf[ms]
    lo = np.minimum.reduceat(li, bounds[:-1])
    hi = np.maximum.reduceat(li, bounds[:-1])
    return bool(np.any((lo <= n) & (hi >= N)))


def _max_pairwise_distance(coords) -> float:
    """Exact Euclidean diameter of a point set (chunked O(m^2))."""
    pts = coords.astype(np.float64)
    best = 0.0
    chunk = 1024
    for i in range(0, len(pts), chunk):
        block = pts[i:i + chunk]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def cluster_diameter(lab: ClusterLabeling, sign: int, root: int) -> float:
    """Euclidean diameter over the cluster's lattice vertices."""
    members = lab.members(sign, root)
    return _max_pairwise_distance(lab.box.coords[members])


@dataclass
class _Macro:
    sign: int
    root: int
    members: np.ndarray


def _macroscopic(lab: ClusterLabeling, delta: float, N: int):
    """Clusters contained in B(N) (vertex level) with diameter >= delta*N."""
    if not 0 < delta <= 1:
        raise ValueError("delta must be in (0, 1]")
    if N > lab.box.R:
        raise ValueError(f"N={N} exceeds the simulation radius {lab.box.R}")
    threshold = delta * N
    box = lab.box
    out = []
    for sign in (1, -1):
        member_idx = np.flatnonzero(lab.member_mask(sign))
        if member_idx.size == 0:
            continue
        ms, bounds, groot = _group_members(lab.roots(sign), member_idx)
        starts, ends = bounds[:-1], bounds[1:]
        sizes = ends - starts
        maxlinf = np.maximum.reduceat(box.linf[ms], starts)
        # a connected set of s vertices has diameter at most s - 1
        cand = np.flatnonzero((sizes > threshold) & (maxlinf <= N))
        for ci in cand:
            members = ms[starts[ci]:ends[ci]]
            pts = box.coords[members]
            ext = pts.max(axis=0) - pts.min(axis=0)
            lower = float(ext.max())
            upper = float(np.sqrt((ext.astype(np.float64) ** 2).sum()))
            if lower >= threshold:
                ok = True
            elif upper < threshold:
                ok = False
            else:
                ok = _max_pairwise_distance(pts) >= threshold
            if ok:
                out.append(_Macro(sign, int(groot[ci]), members))
    out.sort(key=lambda c: (c.root, -c.sign))
    return out


def macroscopic_clusters(lab: ClusterLabeling, delta: float, N: int):
    """(sign, root) pairs of the clusters in the macroscopic family."""
    return [(c.sign, c.root) for c in _macroscopic(lab, delta, N)]


@dataclass
class MinDistanceResult:
    distance: float                 # metric length; inf when undefined/censored
    units: int | None               # distance in sub-segments of length d/k
    pair: tuple | None              # ((sign, root), (sign, root)) attaining pair
    n_clusters: int
    resolution: float               # d/k
    error_bound: float              # zeros are localized to within 2d/k
    censored: bool = False


def _incident_split_edges(box, members, states):
    """Split-edge ids with at least one endpoint among the members."""
    ids = []
    for axis in range(box.d):
        stride = box.strides[axis]
        coord = (members // stride) % box.side
        up = members[coord < box.side - 1]
        ids.append(up * box.d + axis)
        down = members[coord > 0]
        ids.append((down - stride) * box.d + axis)
    ids = np.unique(np.concatenate(ids))
    return ids[states[ids] == 0]


def min_distance(lab: ClusterLabeling, edge_set: OpenEdgeSet, delta: float,
                 N: int, k: int = 8, cutoff: float | None = None) -> MinDistanceResult:
    """Minimal metric-graph distance between distinct macroscopic clusters.

    Interior bridge samples are attached (lazily, conditional on the edge
    states) to the split edges incident to the macroscopic family, fixing
    how far each cluster reaches into its edges.  The search runs on the
    vertex graph with integer sub-segment weights: full edges cost k
    units, cluster runs shorten the first and last hop.  With fewer than
    two macroscopic clusters the distance is +inf.  ``cutoff`` bounds the
    search; larger distances are reported as censored +inf.
    """
    box = lab.box
    clusters = _macroscopic(lab, delta, N)
    res = box.edge_length / k
    if len(clusters) < 2:
        return MinDistanceResult(np.inf, None, None, len(clusters), res, 2 * res)

    need = [_incident_split_edges(box, c.members, edge_set.states) for c in clusters]
    edge_set.attach_interior(np.concatenate(need), k)

    clid = np.full(box.n_vertices, -1, dtype=np.int64)
    for i, c in enumerate(clusters):
        clid[c.members] = i

    # per cluster: far vertex -> units from the cluster run to that vertex,
    # and per split edge joining two clusters the direct within-edge gap
    reach_out = [dict() for _ in clusters]
    direct = {}
    for i, c in enumerate(clusters):
        for e in need[i]:
            u, v = box.edge_endpoints(int(e))
            if clid[u] != i:
                u, v = v, u
            if clid[u] != i:
                continue  # edge owned by the other side's sweep
            ext = edge_set.extent_from(int(e), u)
            j = clid[v]
            if j == i:
                continue
            if j >= 0:
                ext_far = edge_set.extent_from(int(e), v)
                gap = k - ext_far - ext
                key = (min(i, j), max(i, j))
                if gap < direct.get(key, np.inf):
                    direct[key] = gap
            cand = k - ext
            if cand < reach_out[i].get(v, np.inf):
                reach_out[i][v] = cand

    cut_units = np.inf if cutoff is None else int(np.floor(cutoff / res + 1e-9))
    best_units = np.inf
    best_pair = None
    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            bound = min(best_units, cut_units)
            d_units = direct.get((i, j), np.inf)
            d_units = min(d_units, _pair_dijkstra(
                box, clusters[i].members, reach_out[i],
                set(clusters[j].members.tolist()), reach_out[j], k,
                min(bound, d_units)))
            if d_units < best_units:
                best_units = d_units
                best_pair = ((clusters[i].sign, clusters[i].root),
                             (clusters[j].sign, clusters[j].root))
    if not np.isfinite(best_units) or best_units > cut_units:
        return MinDistanceResult(np.inf, None, None, len(clusters), res, 2 * res,
                                 censored=cutoff is not None)
    return MinDistanceResult(float(best_units * res), int(best_units), best_pair,
                             len(clusters), res, 2 * res)


def _pair_dijkstra(box, src_members, src_out, dst_set, dst_out, k, bound):
    """Shortest source-to-target distance in sub-segment units.

    Sources: cluster vertices at 0 plus far endpoints of source runs.
    Targets: cluster vertices (offset 0) and far endpoints of target runs
    (their run offset).  Edge relaxation costs k units per lattice edge.
    """
    toff = {int(v): 0 for v in dst_set}
    for v, off in dst_out.items():
        if int(v) not in dst_set and off < toff.get(int(v), np.inf):
            toff[int(v)] = off

    heap = [(0, int(v)) for v in src_members]
    for v, off in src_out.items():
        if off <= bound:
            heap.append((int(off), int(v)))
    heapq.heapify(heap)
    best = np.inf
    dist = {}
    side, d, strides = box.side, box.d, box.strides
    while heap:
        units, v = heapq.heappop(heap)
        if units >= best or units > bound:
            break
        if dist.get(v, np.inf) <= units:
            continue
        dist[v] = units
        t = toff.get(v)
        if t is not None and units + t < best:
            best = units + t
        nu = units + k
        if nu >= best or nu > bound:
            continue
        for axis in range(d):
            stride = int(strides[axis])
            coord = (v // stride) % side
            if coord < side - 1:
                w = v + stride
                if dist.get(w, np.inf) > nu:
                    heapq.heappush(heap, (nu, w))
            if coord > 0:
                w = v - stride
                if dist.get(w, np.inf) > nu:
                    heapq.heappush(heap, (nu, w))
    return best
