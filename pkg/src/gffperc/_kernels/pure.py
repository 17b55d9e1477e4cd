"""Pure numpy/scipy implementations of the hot kernels.

Reference backend: every function here must produce bit-identical output
to the compiled twin in ``_core.pyx``.  The compiled module is preferred
at import time; this one keeps the package functional without a C
toolchain and anchors the backend-equivalence tests.
"""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 2.0**-53


def edge_uniforms(base, edge_ids):
    """Counter-based uniform in [0,1) per edge id (splitmix64 finalizer)."""
    with np.errstate(over="ignore"):
        z = np.uint64(base) + (np.asarray(edge_ids).astype(np.uint64) + np.uint64(1)) * _GOLD
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def open_states(phi, eu, ev, edge_ids, base, length, level):
    """Per-edge percolation state: +1 open-positive, -1 open-negative, 0 split.

    An edge with endpoint values a, b (relative to the level) opens with
    the bridge zero-avoidance probability 1 - exp(-a*b/length) when a and
    b share a sign, and never opens otherwise.
    """
    a = phi[eu] - level
    b = phi[ev] - level
    prod = a * b
    u = edge_uniforms(base, edge_ids)
    with np.errstate(over="ignore", invalid="ignore"):
        p = np.where(prod > 0.0, -np.expm1(-prod / length), 0.0)
    is_open = (prod > 0.0) & (u < p)
    states = np.zeros(len(eu), dtype=np.int8)
    states[is_open & (a > 0.0)] = 1
    states[is_open & (a < 0.0)] = -1
    return states


def _canonicalize(rep):
    """Remap arbitrary component representatives to min-member-index roots."""
    n = len(rep)
    order = np.argsort(rep, kind="stable")
    srt = rep[order]
    first = np.flatnonzero(np.r_[True, srt[1:] != srt[:-1]])
    group_min = np.empty(n, dtype=np.int64)
    group_min[srt[first]] = order[first]
    return group_min[rep].astype(np.int32)


def component_roots(n, eu, ev, select):
    """Union of the selected edges; returns the min-index root per vertex."""
    sel = np.asarray(select, dtype=bool)
    u = eu[sel].astype(np.int64)
    v = ev[sel].astype(np.int64)
    if len(u) == 0:
        return np.arange(n, dtype=np.int32)
    adj = coo_matrix((np.ones(len(u), dtype=np.int8), (u, v)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return _canonicalize(labels.astype(np.int64))


def origin_cluster(phi, level, base, d, side, linf, start, sign, limit):
    """Members of the start vertex's sign cluster, optionally boxed.

    Returns ``(max_linf, members)`` where members is the sorted vertex
    list of the cluster of ``start`` in the graph of open-(sign) edges,
    restricted to vertices with linf <= limit when limit >= 0.
    ``max_linf`` is -1 when start is not in the requested level set.
    """
    n = len(phi)
    if sign * (phi[start] - level) < 0:
        return -1, np.empty(0, dtype=np.int32)
    if limit >= 0 and linf[start] > limit:
        return -1, np.empty(0, dtype=np.int32)
    strides = np.array([side ** (d - 1 - j) for j in range(d)], dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    eus, evs, ids = [], [], []
    for axis in range(d):
        coord = (idx // strides[axis]) % side
        u = idx[coord < side - 1]
        eus.append(u)
        evs.append(u + strides[axis])
        ids.append(u * d + axis)
    eu = np.concatenate(eus)
    ev = np.concatenate(evs)
    eid = np.concatenate(ids)
    states = open_states(phi, eu, ev, eid, base, float(d), level)
    sel = states == sign
    if limit >= 0:
        sel &= (linf[eu] <= limit) & (linf[ev] <= limit)
    roots = component_roots(n, eu.astype(np.int32), ev.astype(np.int32),
                            sel.astype(np.uint8))
    members = np.flatnonzero(roots == roots[start]).astype(np.int32)
    return int(linf[members].max()), members


def pivotal_flags(n_nodes, eu, ev, root, terminal):
    """Bridges of the multigraph whose removal separates root from terminal.

    One DFS with low-links; edge-indexed parent tracking so parallel
    edges are never misread as bridges.  Self-loops are ignored.
    """
    m = len(eu)
    flags = np.zeros(m, dtype=np.uint8)
    if m == 0 or root == terminal:
        return flags
    keep = eu != ev
    deg = np.bincount(eu[keep], minlength=n_nodes) + np.bincount(ev[keep], minlength=n_nodes)
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    nbr = np.empty(indptr[-1], dtype=np.int64)
    eidx = np.empty(indptr[-1], dtype=np.int64)
    fill = indptr[:-1].copy()
    for e in range(m):
        u, v = int(eu[e]), int(ev[e])
        if u == v:
            continue
        nbr[fill[u]] = v
        eidx[fill[u]] = e
        fill[u] += 1
        nbr[fill[v]] = u
        eidx[fill[v]] = e
        fill[v] += 1

    tin = np.full(n_nodes, -1, dtype=np.int64)
    tout = np.full(n_nodes, -1, dtype=np.int64)
    low = np.zeros(n_nodes, dtype=np.int64)
    parent_edge = np.full(n_nodes, -1, dtype=np.int64)
    it = indptr[:-1].copy()
    stack = [int(root)]
    tin[root] = low[root] = 0
    timer = 1
    while stack:
        v = stack[-1]
        if it[v] < indptr[v + 1]:
            j = it[v]
            it[v] += 1
            w = int(nbr[j])
            e = int(eidx[j])
            if e == parent_edge[v]:
                continue
            if tin[w] == -1:
                parent_edge[w] = e
                tin[w] = low[w] = timer
                timer += 1
                stack.append(w)
            else:
                low[v] = min(low[v], tin[w])
        else:
            stack.pop()
            tout[v] = timer - 1
            if stack:
                p = stack[-1]
                low[p] = min(low[p], low[v])
                if low[v] > tin[p] and tin[terminal] != -1:
                    if tin[v] <= tin[terminal] <= tout[v]:
                        flags[parent_edge[v]] = 1
    if tin[terminal] == -1:
        flags[:] = 0
    return flags
