"""Pivotal-edge census for the one-arm event and near-touch diagnostics.

An open edge is pivotal for {origin connected to the boundary of B(N)}
when the event holds but fails once the edge's whole interval is removed.
Because any path leaving B(N) passes through its vertex boundary, both
the event and pivotality depend only on edges inside B(N).
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import edge_uniforms, origin_cluster, pivotal_flags
from .clusters import ClusterLabeling, _group_members, _macroscopic
from .metric_edges import OpenEdgeSet


def _open_positive_edges_among(box, members, values, level, base):
    """Open-positive edges with both endpoints in the member set."""
    in_set = np.zeros(box.n_vertices, dtype=bool)
    in_set[members] = True
    eus, evs, ids = [], [], []
    for axis in range(box.d):
        stride = box.strides[axis]
        coord = (members // stride) % box.side
        u = members[coord < box.side - 1]
        v = u + stride
        keep = in_set[v]
        eus.append(u[keep])
        evs.append(v[keep])
        ids.append(u[keep] * box.d + axis)
    eu = np.concatenate(eus).astype(np.int64)
    ev = np.concatenate(evs).astype(np.int64)
    ids = np.concatenate(ids)
    a = values[eu] - level
    b = values[ev] - level
    prod = a * b
    with np.errstate(over="ignore", invalid="ignore"):
        p = np.where(prod > 0.0, -np.expm1(-prod / box.edge_length), 0.0)
    open_mask = (prod > 0.0) & (a > 0.0) & (edge_uniforms(base, ids) < p)
    return eu[open_mask], ev[open_mask], ids[open_mask]


def _pivotal_core(box, members, eu, ev, ids, N):
    """Bridge-finding with the boundary contracted to a single terminal."""
    if members.size == 0:
        return np.empty(0, dtype=np.int64)
    linf = box.linf
    if linf[members].max() < N:
        return np.empty(0, dtype=np.int64)  # one-arm event fails
    if N == 0:
        return np.empty(0, dtype=np.int64)  # origin is its own boundary contact
    order = np.sort(members)
    m = len(order)
    terminal = m
    lu = np.searchsorted(order, eu).astype(np.int32)
    lv = np.searchsorted(order, ev).astype(np.int32)
    on_shell_u = linf[eu] == N
    on_shell_v = linf[ev] == N
    lu[on_shell_u] = terminal
    lv[on_shell_v] = terminal
    keep = ~(on_shell_u & on_shell_v)
    lu, lv, kept_ids = lu[keep], lv[keep], ids[keep]
    root = int(np.searchsorted(order, box.origin))
    flags = pivotal_flags(m + 1, lu, lv, root, terminal)
    return np.sort(kept_ids[flags.astype(bool)])


def pivotal_edges(lab: ClusterLabeling, edge_set: OpenEdgeSet, N: int) -> np.ndarray:
    """Edge ids pivotal for the one-arm event at radius N (sorted)."""
    if N > lab.box.R:
        raise ValueError(f"N={N} exceeds the simulation radius {lab.box.R}")
    box = lab.box
    origin = box.origin
    if lab.field.values[origin] < lab.level:
        return np.empty(0, dtype=np.int64)
    mask = (lab.pos_roots == lab.pos_roots[origin]) & (box.linf <= N)
    members = np.flatnonzero(mask)
    eu, ev, ids = _open_positive_edges_among(
        box, members, lab.field.values, lab.level, edge_set.base)
    return _pivotal_core(box, members, eu, ev, ids, N)


def pivotal_edges_from_field(fieldcfg, base, N: int, level: float = 0.0):
    """Same census straight from a field (no full labeling); returns
    (one_arm, pivotal ids).  Used by the replicated experiments."""
    box = fieldcfg.box
    reach, members = origin_cluster(
        fieldcfg.values, level, base, box.d, box.side, box.linf,
        box.origin, 1, N)
    one_arm = reach >= N
    if not one_arm:
        return False, np.empty(0, dtype=np.int64)
    eu, ev, ids = _open_positive_edges_among(
        box, members.astype(np.int64), fieldcfg.values, level, base)
    return True, _pivotal_core(box, members.astype(np.int64), eu, ev, ids, N)


def pivotal_bruteforce(edge_set: OpenEdgeSet, fieldcfg, N: int) -> np.ndarray:
    """Deletion oracle: re-run BFS with each open edge removed in turn."""
    box = fieldcfg.box
    linf = box.linf
    eu, ev, ids = box.edges
    st = edge_set.states[ids]
    keep = (st == 1) & (linf[eu] <= N) & (linf[ev] <= N)
    eu, ev, ids = eu[keep], ev[keep], ids[keep]

    def connected(skip):
        if fieldcfg.values[box.origin] < edge_set.level:
            return False
        adj = {}
        for i in range(len(eu)):
            if i == skip:
                continue
            adj.setdefault(int(eu[i]), []).append(int(ev[i]))
            adj.setdefault(int(ev[i]), []).append(int(eu[i]))
        seen = {int(box.origin)}
        stack = [int(box.origin)]
        while stack:
            v = stack.pop()
            if linf[v] >= N:
                return True
            for w in adj.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False
    if not connected(-1):
        return np.empty(0, dtype=np.int64)
    out = [int(ids[i]) for i in range(len(eu)) if not connected(i)]
    return np.array(sorted(out), dtype=np.int64)


@dataclass
class HeterochromaticCensus:
    edge_ids: np.ndarray
    n_same_sign: int
    n_opposite: int

    @property
    def total(self) -> int:
        return self.n_same_sign + self.n_opposite


def heterochromatic_census(lab: ClusterLabeling, delta: float, N: int,
                           clusters=None) -> HeterochromaticCensus:
    """Edges inside B(N) joining two distinct macroscopic clusters.

    Same-sign (distinct cluster) and opposite-sign contacts are counted
    separately; endpoints must both belong to the macroscopic family.
    A precomputed family can be passed to avoid relabeling.
    """
    box = lab.box
    if clusters is None:
        clusters = _macroscopic(lab, delta, N)
    clid = np.full(box.n_vertices, -1, dtype=np.int64)
    csign = np.zeros(box.n_vertices, dtype=np.int8)
    for i, c in enumerate(clusters):
        clid[c.members] = i
        csign[c.members] = c.sign
    eu, ev, ids = box.edges_within(N)
    cu, cv = clid[eu], clid[ev]
    hit = (cu >= 0) & (cv >= 0) & (cu != cv)
    same = int((hit & (csign[eu] == csign[ev])).sum())
    return HeterochromaticCensus(ids[hit], same, int(hit.sum()) - same)


def two_arm_indicator(lab: ClusterLabeling, v: int, vprime: int, N: int) -> bool:
    """Positive arm from v and negative arm from v', both to the boundary of B(N)."""
    box = lab.box
    if box.linf[v] > N or box.linf[vprime] > N:
        raise ValueError("both vertices must lie in B(N)")
    return lab.reach(1, v) >= N and lab.reach(-1, vprime) >= N
