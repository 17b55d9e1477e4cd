"""Brownian-bridge extension of a lattice field to metric-graph percolation.

Each lattice edge carries an interval of length d on which the field is
a Brownian bridge with variance 2 at time 1 between the endpoint values.
An edge is *open* for a sign when the bridge keeps that sign on the whole
interval; otherwise it is *split*.  For a bridge of variance rate 2 over
duration L between same-sign values a and b, the zero-avoidance (open)
probability is 1 - exp(-a*b/L), which the fine-discretization oracle
below validates by brute force.

Interior structure is represented at resolution k by the bridge values at
the k+1 grid nodes plus one crossing flag per sub-segment.  Given the
node values, a same-sign sub-segment of duration u contains a zero with
probability exp(-x*y/u) independently of everything else, so the pair
(values, flags) is an exact simulation of the continuum zero pattern with
zeros localized to sub-segments.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from ._kernels import edge_uniforms, open_states
from .gff import FieldConfig

# rejection sampling is abandoned for the exact first-zero decomposition
# below this conditional acceptance probability
_REJECTION_FLOOR = 0.05
_MAX_ROUNDS = 2000


def edge_open_probability(a: float, b: float, L: float) -> float:
    """Probability that the bridge between a and b keeps their common sign."""
    if L <= 0:
        raise ValueError("edge length must be positive")
    prod = a * b
    if prod <= 0.0:
        return 0.0
    return float(-np.expm1(-prod / L))


def sample_bridge_points(a: float, b: float, L: float, k: int, rng) -> np.ndarray:
    """Interior values of the variance-rate-2 bridge at offsets j*L/k.

    Sequential conditional Gaussians; returns the k-1 interior values.
    """
    if k < 2:
        raise ValueError("need at least 2 sub-segments")
    path = _bridge_paths(np.array([a]), np.array([b]), L, k, rng)
    return path[0, 1:-1].copy()


def _bridge_paths(a, b, L, k, rng):
    """(m, k+1) bridge paths between endpoint arrays a and b (rate 2)."""
    m = len(a)
    u = L / k
    path = np.empty((m, k + 1))
    path[:, 0] = a
    path[:, k] = b
    x = np.asarray(a, dtype=np.float64).copy()
    for j in range(1, k):
        rem = L - (j - 1) * u
        mean = x + (b - x) * (u / rem)
        var = 2.0 * u * (rem - u) / rem
        x = mean + math.sqrt(var) * rng.standard_normal(m)
        path[:, j] = x
    return path


def _crossing_flags(paths, L, rng):
    """Per-sub-segment zero indicators given the node values.

    Same-sign sub-segments cross with probability exp(-x*y*k/L); a sign
    change (or an exact zero) crosses surely.
    """
    m, kp1 = paths.shape
    u = L / (kp1 - 1)
    prod = paths[:, :-1] * paths[:, 1:]
    with np.errstate(over="ignore"):
        p_cross = np.where(prod > 0.0, np.exp(-prod / u), 1.0)
    return (rng.random((m, kp1 - 1)) < p_cross).astype(np.uint8)


def bridge_survival_mc(a: float, b: float, L: float, k: int, trials: int, rng,
                       exact: bool = True, chunk: int = 100_000):
    """Brute-force estimate of the zero-avoidance probability.

    Simulates the bridge by k conditional-Gaussian steps and counts paths
    that keep the sign of a.  With ``exact`` the count is additionally
    thinned by the per-sub-segment crossing probability, which removes the
    O(k^-1/2) bias of checking sign at grid points only.  Returns
    (estimate, binomial standard error).
    """
    if a * b <= 0:
        return 0.0, 0.0
    sgn = 1.0 if a > 0 else -1.0
    u = L / k
    survived = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        x = np.full(m, a)
        alive = np.ones(m, dtype=bool)
        for j in range(1, k + 1):
            rem = L - (j - 1) * u
            mean = x + (b - x) * (u / rem)
            var = 2.0 * u * (rem - u) / rem if j < k else 0.0
            x_next = mean if var == 0.0 else mean + math.sqrt(var) * rng.standard_normal(m)
            if exact:
                with np.errstate(over="ignore"):
                    p_cross = np.exp(-(x * x_next) / u)
                alive &= rng.random(m) >= p_cross
            x = x_next
            if j < k:
                alive &= sgn * x >= 0.0
        survived += int(alive.sum())
        done += m
    p = survived / trials
    return p, math.sqrt(p * (1 - p) / trials)


# -- conditional interior sampling --------------------------------------


def _bridge_at_times(x0, t0, x1, t1, times, rng):
    """Values of a rate-2 bridge from (t0,x0) to (t1,x1) at sorted times."""
    out = np.empty(len(times))
    x, t = x0, t0
    for i, s in enumerate(times):
        rem = t1 - t
        mean = x + (x1 - x) * ((s - t) / rem)
        var = 2.0 * (s - t) * (t1 - s) / rem
        x = mean + math.sqrt(max(var, 0.0)) * rng.standard_normal()
        t = s
        out[i] = x
    return out


def _first_zero_time(a, b, L, rng, grid=2048):
    """Sample the first zero of a bridge between a,b > 0 conditioned to hit 0.

    Density f(t) proportional to (first passage a->0 at t) x (transition
    0->b over L-t); log weights keep extreme endpoint values stable.
    """
    t = (np.arange(grid) + 0.5) * (L / grid)
    logw = -1.5 * np.log(t) - a * a / (4 * t) - 0.5 * np.log(L - t) - b * b / (4 * (L - t))
    logw -= logw.max()
    w = np.exp(logw)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    i = int(np.searchsorted(cdf, rng.random()))
    return (i + rng.random()) * (L / grid)


def _split_by_first_zero(a, b, L, k, rng):
    """Exact interior sample of a same-sign split edge via its first zero.

    Before the first zero the path is the positivity-conditioned bridge
    (a Bessel(3) bridge, realized as the norm of a 3D Gaussian bridge to
    the origin); after it, a plain bridge from 0 to b.  Needed when the
    split probability exp(-a*b/L) is too small for plain rejection.
    """
    sgn = 1.0 if a > 0 else -1.0
    aa, bb = abs(a), abs(b)
    tau = _first_zero_time(aa, bb, L, rng)
    u = L / k
    values = np.empty(k + 1)
    values[0] = aa
    values[k] = bb
    flags = np.zeros(k, dtype=np.uint8)
    j_star = min(int(tau / u), k - 1)
    flags[j_star] = 1
    pre = np.arange(1, k) * u
    pre = pre[pre < tau]
    if len(pre):
        c1 = _bridge_at_times(aa, 0.0, 0.0, tau, pre, rng)
        c2 = _bridge_at_times(0.0, 0.0, 0.0, tau, pre, rng)
        c3 = _bridge_at_times(0.0, 0.0, 0.0, tau, pre, rng)
        values[1:len(pre) + 1] = np.sqrt(c1**2 + c2**2 + c3**2)
    post = np.arange(1, k) * u
    post = post[post > tau]
    if len(post):
        vals = _bridge_at_times(0.0, tau, bb, L, post, rng)
        values[k - len(post):k] = vals
    # plain-bridge flags after the first zero
    for j in range(j_star + 1, k):
        prod = values[j] * values[j + 1]
        if prod <= 0.0:
            flags[j] = 1
        elif rng.random() < math.exp(-prod / u):
            flags[j] = 1
    return sgn * values, flags


def _conditional_interiors(a, b, L, k, states, rng):
    """Interior (values, flags) for each edge, conditioned on its state.

    states: +1/-1 requires no zero (all one sign), 0 requires a zero.
    Joint rejection on (values, flags) is exact; same-sign split edges
    with tiny acceptance fall back to the first-zero decomposition.
    """
    m = len(a)
    values = np.empty((m, k + 1))
    flags = np.empty((m, k), dtype=np.uint8)
    pending = np.ones(m, dtype=bool)

    prod = a * b
    with np.errstate(over="ignore"):
        p_split = np.where(prod > 0, np.exp(-prod / L), 1.0)
    hard = pending & (states == 0) & (prod > 0) & (p_split < _REJECTION_FLOOR)
    for i in np.flatnonzero(hard):
        values[i], flags[i] = _split_by_first_zero(a[i], b[i], L, k, rng)
        pending[i] = False

    rounds = 0
    while pending.any():
        rounds += 1
        if rounds > _MAX_ROUNDS:
            raise RuntimeError(
                f"interior rejection did not finish for {int(pending.sum())} edges"
            )
        idx = np.flatnonzero(pending)
        paths = _bridge_paths(a[idx], b[idx], L, k, rng)
        fl = _crossing_flags(paths, L, rng)
        crossed = fl.any(axis=1)
        ok = np.where(states[idx] == 0, crossed, ~crossed)
        good = idx[ok]
        values[good] = paths[ok]
        flags[good] = fl[ok]
        pending[good] = False
    return values, flags


@dataclass
class Run:
    """Maximal same-sign node interval of an edge interior."""

    start: int
    end: int
    sign: int


def zero_structure(values, flags, level: float = 0.0):
    """Sign runs of one edge interior at resolution L/k.

    Nodes j and j+1 stay connected when their values share a sign and the
    sub-segment between them carries no crossing flag; zeros are localized
    to the flagged sub-segments.
    """
    values = np.asarray(values, dtype=np.float64)
    flags = np.asarray(flags, dtype=np.uint8)
    signs = np.where(values >= level, 1, -1)
    runs = []
    start = 0
    k = len(flags)
    for j in range(k):
        if flags[j] or signs[j] != signs[j + 1]:
            runs.append(Run(start, j, int(signs[start])))
            start = j + 1
    runs.append(Run(start, k, int(signs[start])))
    return runs


def run_extent(values, flags, side: int, level: float = 0.0) -> int:
    """Nodes reachable from one endpoint before the first break.

    side 0 measures from node 0, side 1 from node k; returns the number
    of sub-segments covered by the endpoint's run.
    """
    runs = zero_structure(values, flags, level)
    if side == 0:
        return runs[0].end
    return len(flags) - runs[-1].start


@dataclass
class OpenEdgeSet:
    """Per-edge percolation states with lazily attached interior samples."""

    box: object
    states: np.ndarray          # dense by edge id; +1/-1 open, 0 split
    level: float
    base: np.uint64
    field: FieldConfig
    k: int = 0
    interiors: dict = field(default_factory=dict)

    def state(self, edge_id: int) -> int:
        return int(self.states[edge_id])

    def interior(self, edge_id: int):
        return self.interiors.get(int(edge_id))

    def attach_interior(self, edge_ids, k: int, rng=None):
        """Sample interiors for the given edges, consistent with their states.

        Edges are processed in sorted id order so the result does not
        depend on the caller's ordering; already-attached ids are skipped.
        """
        if k < 2:
            raise ValueError("interior resolution k must be >= 2")
        if self.k and k != self.k:
            raise ValueError(f"edge set already holds interiors at k={self.k}")
        self.k = k
        ids = sorted(int(e) for e in set(np.asarray(edge_ids).tolist()) - set(self.interiors))
        if not ids:
            return
        if rng is None:
            rng = rngmod.generator(self.field.seed, self.field.replica, rngmod.BRIDGE)
        ids_arr = np.asarray(ids, dtype=np.int64)
        eu = ids_arr // self.box.d
        ev = eu + self.box.strides[ids_arr % self.box.d]
        a = self.field.values[eu] - self.level
        b = self.field.values[ev] - self.level
        st = self.states[ids_arr]
        values, flags = _conditional_interiors(a, b, self.box.edge_length, k, st, rng)
        for i, e in enumerate(ids):
            self.interiors[e] = (values[i] + self.level, flags[i])

    def extent_from(self, edge_id: int, vertex: int) -> int:
        """Sub-segments of the vertex's run into this edge (k for open)."""
        u, v = self.box.edge_endpoints(edge_id)
        if vertex not in (u, v):
            raise ValueError("vertex is not an endpoint of the edge")
        if self.states[edge_id] != 0:
            return self.k if self.k else 1
        values, flags = self.interiors[int(edge_id)]
        return run_extent(values, flags, 0 if vertex == u else 1, self.level)


def open_edges(fieldcfg: FieldConfig, level: float = 0.0, base=None) -> OpenEdgeSet:
    """Assign every edge open-positive / open-negative / split.

    Deterministic in the field's (seed, replica): each edge uses its own
    counter-derived uniform, so bulk assignment here and lazy on-demand
    assignment in the cluster kernels agree edge for edge.
    """
    box = fieldcfg.box
    if base is None:
        base = rngmod.edge_base(fieldcfg.seed, fieldcfg.replica)
    eu, ev, ids = box.edges
    st = open_states(fieldcfg.values, eu, ev, ids, base, box.edge_length, level)
    dense = np.zeros(box.edge_slot_count(), dtype=np.int8)
    dense[ids] = st
    return OpenEdgeSet(box, dense, level, np.uint64(base), fieldcfg)
