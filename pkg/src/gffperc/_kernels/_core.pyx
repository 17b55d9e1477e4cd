# cython: language_level=3
"""Compiled twins of the pure-numpy kernels.

Contracts and output conventions live in ``pure.py``; the two backends
must agree bit for bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport expm1
from libc.stdint cimport int8_t, int32_t, int64_t, uint8_t, uint64_t

cnp.import_array()

cdef uint64_t GOLD = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double INV53 = 2.0 ** -53


cdef inline double _uniform(uint64_t base, int64_t eid) nogil:
    cdef uint64_t z = base + (<uint64_t> eid + 1ULL) * GOLD
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    z = z ^ (z >> 31)
    return <double> (z >> 11) * INV53


def edge_uniforms(base, edge_ids):
    cdef int64_t[::1] ids = np.ascontiguousarray(edge_ids, dtype=np.int64)
    cdef Py_ssize_t n = ids.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef uint64_t b = <uint64_t> int(base)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _uniform(b, ids[i])
    return out_arr


def open_states(phi, eu, ev, edge_ids, base, length, level):
    cdef double[::1] f = np.ascontiguousarray(phi, dtype=np.float64)
    cdef int32_t[::1] u_arr = np.ascontiguousarray(eu, dtype=np.int32)
    cdef int32_t[::1] v_arr = np.ascontiguousarray(ev, dtype=np.int32)
    cdef int64_t[::1] ids = np.ascontiguousarray(edge_ids, dtype=np.int64)
    cdef Py_ssize_t n = u_arr.shape[0]
    states_arr = np.zeros(n, dtype=np.int8)
    cdef int8_t[::1] states = states_arr
    cdef uint64_t b = <uint64_t> int(base)
    cdef double L = length, h = level
    cdef double a, c, prod, p
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            a = f[u_arr[i]] - h
            c = f[v_arr[i]] - h
            prod = a * c
            if prod > 0.0:
                p = -expm1(-prod / L)
                if _uniform(b, ids[i]) < p:
                    states[i] = 1 if a > 0.0 else -1
    return states_arr


cdef inline int32_t _find(int32_t[::1] parent, int32_t x) nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _canonicalize(rep):
    n = len(rep)
    order = np.argsort(rep, kind="stable")
    srt = rep[order]
    first = np.flatnonzero(np.r_[True, srt[1:] != srt[:-1]])
    group_min = np.empty(n, dtype=np.int64)
    group_min[srt[first]] = order[first]
    return group_min[rep].astype(np.int32)


def component_roots(n, eu, ev, select):
    cdef int32_t[::1] u_arr = np.ascontiguousarray(eu, dtype=np.int32)
    cdef int32_t[::1] v_arr = np.ascontiguousarray(ev, dtype=np.int32)
    cdef uint8_t[::1] sel = np.ascontiguousarray(select, dtype=np.uint8)
    cdef Py_ssize_t m = u_arr.shape[0]
    cdef int64_t nn = n
    parent_arr = np.arange(nn, dtype=np.int32)
    rank_arr = np.zeros(nn, dtype=np.uint8)
    cdef int32_t[::1] parent = parent_arr
    cdef uint8_t[::1] rank = rank_arr
    cdef Py_ssize_t i
    cdef int32_t ru, rv
    with nogil:
        for i in range(m):
            if sel[i]:
                ru = _find(parent, u_arr[i])
                rv = _find(parent, v_arr[i])
                if ru != rv:
                    if rank[ru] < rank[rv]:
                        parent[ru] = rv
                    elif rank[ru] > rank[rv]:
                        parent[rv] = ru
                    else:
                        parent[rv] = ru
                        rank[ru] = rank[ru] + 1
        for i in range(nn):
            parent[i] = _find(parent, <int32_t> i)
    return _canonicalize(parent_arr.astype(np.int64))


def origin_cluster(phi, level, base, d, side, linf, start, sign, limit):
    cdef double[::1] f = np.ascontiguousarray(phi, dtype=np.float64)
    cdef int32_t[::1] li = np.ascontiguousarray(linf, dtype=np.int32)
    cdef Py_ssize_t n = f.shape[0]
    cdef uint64_t b = <uint64_t> int(base)
    cdef double h = level
    cdef int dd = d
    cdef int64_t ss = side
    cdef int sgn = sign
    cdef int32_t lim = limit
    cdef int64_t s0 = start

    if sgn * (f[s0] - h) < 0:
        return -1, np.empty(0, dtype=np.int32)
    if lim >= 0 and li[s0] > lim:
        return -1, np.empty(0, dtype=np.int32)

    strides_arr = np.array([ss ** (dd - 1 - j) for j in range(dd)], dtype=np.int64)
    cdef int64_t[::1] strides = strides_arr
    visited_arr = np.zeros(n, dtype=np.uint8)
    queue_arr = np.empty(n, dtype=np.int32)
    cdef uint8_t[::1] visited = visited_arr
    cdef int32_t[::1] queue = queue_arr

    cdef Py_ssize_t head = 0, tail = 0
    cdef int64_t v, w, eid, stride, coord
    cdef int axis, direction
    cdef int32_t max_linf
    cdef double a, c, prod, p, L = <double> dd

    visited[s0] = 1
    queue[tail] = <int32_t> s0
    tail += 1
    max_linf = li[s0]
    with nogil:
        while head < tail:
            v = queue[head]
            head += 1
            a = f[v] - h
            for axis in range(dd):
                stride = strides[axis]
                coord = (v // stride) % ss
                for direction in range(2):
                    if direction == 0:
                        if coord >= ss - 1:
                            continue
                        w = v + stride
                        eid = v * dd + axis
                    else:
                        if coord <= 0:
                            continue
                        w = v - stride
                        eid = w * dd + axis
                    if visited[w]:
                        continue
                    if lim >= 0 and li[w] > lim:
                        continue
                    c = f[w] - h
                    prod = a * c
                    if prod <= 0.0:
                        continue
                    p = -expm1(-prod / L)
                    if _uniform(b, eid) < p:
                        visited[w] = 1
                        queue[tail] = <int32_t> w
                        tail += 1
                        if li[w] > max_linf:
                            max_linf = li[w]
    members = np.sort(queue_arr[:tail].copy())
    return int(max_linf), members


def pivotal_flags(n_nodes, eu, ev, root, terminal):
    cdef int32_t[::1] u_arr = np.ascontiguousarray(eu, dtype=np.int32)
    cdef int32_t[::1] v_arr = np.ascontiguousarray(ev, dtype=np.int32)
    cdef Py_ssize_t m = u_arr.shape[0]
    cdef int64_t nn = n_nodes
    flags_arr = np.zeros(m, dtype=np.uint8)
    cdef uint8_t[::1] flags = flags_arr
    cdef int64_t rt = root, tm = terminal
    if m == 0 or rt == tm:
        return flags_arr

    deg_arr = np.zeros(nn, dtype=np.int64)
    cdef int64_t[::1] deg = deg_arr
    cdef Py_ssize_t i
    for i in range(m):
        if u_arr[i] != v_arr[i]:
            deg[u_arr[i]] += 1
            deg[v_arr[i]] += 1
    indptr_arr = np.zeros(nn + 1, dtype=np.int64)
    np.cumsum(deg_arr, out=indptr_arr[1:])
    cdef int64_t[::1] indptr = indptr_arr
    nbr_arr = np.empty(indptr_arr[nn], dtype=np.int64)
    eidx_arr = np.empty(indptr_arr[nn], dtype=np.int64)
    cdef int64_t[::1] nbr = nbr_arr
    cdef int64_t[::1] eidx = eidx_arr
    fill_arr = indptr_arr[:nn].copy()
    cdef int64_t[::1] fill = fill_arr
    cdef int64_t uu, vv
    for i in range(m):
        uu = u_arr[i]
        vv = v_arr[i]
        if uu == vv:
            continue
        nbr[fill[uu]] = vv
        eidx[fill[uu]] = i
        fill[uu] += 1
        nbr[fill[vv]] = uu
        eidx[fill[vv]] = i
        fill[vv] += 1

    tin_arr = np.full(nn, -1, dtype=np.int64)
    tout_arr = np.full(nn, -1, dtype=np.int64)
    low_arr = np.zeros(nn, dtype=np.int64)
    pedge_arr = np.full(nn, -1, dtype=np.int64)
    it_arr = indptr_arr[:nn].copy()
    stack_arr = np.empty(nn, dtype=np.int64)
    cdef int64_t[::1] tin = tin_arr
    cdef int64_t[::1] tout = tout_arr
    cdef int64_t[::1] low = low_arr
    cdef int64_t[::1] pedge = pedge_arr
    cdef int64_t[::1] it = it_arr
    cdef int64_t[::1] stack = stack_arr

    cdef int64_t top = 0, timer = 1, v, w, e, j, p
    stack[0] = rt
    tin[rt] = 0
    low[rt] = 0
    with nogil:
        while top >= 0:
            v = stack[top]
            if it[v] < indptr[v + 1]:
                j = it[v]
                it[v] += 1
                w = nbr[j]
                e = eidx[j]
                if e == pedge[v]:
                    continue
                if tin[w] == -1:
                    pedge[w] = e
                    tin[w] = timer
                    low[w] = timer
                    timer += 1
                    top += 1
                    stack[top] = w
                else:
                    if tin[w] < low[v]:
                        low[v] = tin[w]
            else:
                top -= 1
                tout[v] = timer - 1
                if top >= 0:
                    p = stack[top]
                    if low[v] < low[p]:
                        low[p] = low[v]
                    if low[v] > tin[p] and tin[tm] != -1:
                        if tin[v] <= tin[tm] and tin[tm] <= tout[v]:
                            flags[pedge[v]] = 1
    if tin_arr[tm] == -1:
        flags_arr[:] = 0
    return flags_arr
