"""Exact discrete potential theory for the killed random walk.

Everything here is deterministic linear algebra: the killed Green's
function G_D (expected visits before absorption), hitting probabilities,
equilibrium measures and capacities, and the arcsin two-point predictor.
This module is the oracle layer that the Monte Carlo estimates are
validated against.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.sparse import csr_matrix, diags, identity
from scipy.sparse.linalg import cg, splu

from .lattice import BoxGeometry

DIRECT_SOLVER_LIMIT = 50_000
CG_TOL = 1e-10


def _box_adjacency(box: BoxGeometry):
    eu, ev, _ = box.edges
    ones = np.ones(len(eu), dtype=np.float64)
    n = box.n_vertices
    adj = csr_matrix((ones, (eu, ev)), shape=(n, n))
    return adj + adj.T


class GreenOperator:
    """Killed-walk Green's function G_D on a finite graph.

    Convention: G_D(x, y) is the expected number of visits to y before
    hitting D by the walk started from x, so G_D = (I - P_D)^{-1} on the
    complement of D and G_D vanishes as soon as either argument is
    absorbed.  Solves are a sparse direct factorization for small systems
    and conjugate gradients (tolerance 1e-10) above DIRECT_SOLVER_LIMIT.
    Immutable after construction; column queries are cached.
    """

    def __init__(self, adjacency, degrees, absorbing, box=None):
        n = adjacency.shape[0]
        absorbing = np.asarray(absorbing, dtype=bool)
        if absorbing.shape != (n,):
            raise ValueError("absorbing mask has wrong shape")
        free = ~absorbing
        if not free.any():
            raise ValueError("no free vertices: D covers the whole domain")
        self.box = box
        self.absorbing = absorbing
        self.n = n
        self._free_idx = np.flatnonzero(free)
        self._glob2free = np.full(n, -1, dtype=np.int64)
        self._glob2free[self._free_idx] = np.arange(len(self._free_idx))
        deg = np.asarray(degrees, dtype=np.float64)
        sub = adjacency[self._free_idx][:, self._free_idx].tocsr()
        self._deg_free = deg[self._free_idx]
        self._matrix = (diags(self._deg_free, format="csr") - sub).tocsc()
        self._lu = splu(self._matrix) if len(self._free_idx) <= DIRECT_SOLVER_LIMIT else None
        self._columns = {}

    @classmethod
    def for_box(cls, box: BoxGeometry, absorbing) -> "GreenOperator":
        """Green operator on B(R) for an absorbing set containing the shell."""
        mask = _as_mask(box.n_vertices, absorbing)
        if not mask[box.shell()].all():
            raise ValueError("absorbing set must contain the outer shell")
        deg = np.full(box.n_vertices, 2.0 * box.d)
        return cls(_box_adjacency(box), deg, mask, box=box)

    def _solve(self, rhs):
        if self._lu is not None:
            return self._lu.solve(rhs)
        sol, info = cg(self._matrix, rhs, rtol=CG_TOL, atol=0.0, maxiter=50_000)
        if info != 0:
            res = np.linalg.norm(self._matrix @ sol - rhs)
            raise RuntimeError(f"CG failed to converge (info={info}, residual={res:.3e})")
        return sol

    def green_column(self, y: int) -> np.ndarray:
        """G_D(., y) as a full-domain vector (zero on D)."""
        y = int(y)
        if y not in self._columns:
            out = np.zeros(self.n)
            if not self.absorbing[y]:
                rhs = np.zeros(len(self._free_idx))
                fy = self._glob2free[y]
                rhs[fy] = self._deg_free[fy]
                out[self._free_idx] = self._solve(rhs)
            self._columns[y] = out
        return self._columns[y]

    def green(self, x: int, y: int) -> float:
        if self.absorbing[x] or self.absorbing[y]:
            return 0.0
        return float(self.green_column(y)[x])


def _as_mask(n, vertices_or_mask):
    arr = np.asarray(vertices_or_mask)
    if arr.dtype == bool:
        return arr.copy()
    mask = np.zeros(n, dtype=bool)
    mask[arr.astype(np.int64)] = True
    return mask


def killed_green(box: BoxGeometry, D) -> GreenOperator:
    """Green operator for the walk on B(R) absorbed on D (shell included)."""
    return GreenOperator.for_box(box, D)


def hitting_probability(g: GreenOperator, v: int, w: int) -> float:
    """P_v(walk hits w before D), via G_D(v,w) / G_D(w,w)."""
    if g.absorbing[w]:
        raise ValueError("hitting probability undefined for absorbed target")
    if v == w:
        return 1.0
    if g.absorbing[v]:
        return 0.0
    p = g.green(v, w) / g.green(w, w)
    if not -1e-9 <= p <= 1 + 1e-9:
        raise RuntimeError(f"hitting probability {p} outside [0,1]: broken solver")
    return float(min(max(p, 0.0), 1.0))


def arcsin_two_point(g: GreenOperator, x: int, y: int) -> float:
    """Exact connection probability predictor: arcsin(corr)/pi, in [0, 1/2]."""
    if x == y:
        raise ValueError("two-point predictor needs distinct vertices")
    if g.absorbing[x] or g.absorbing[y]:
        raise ValueError("two-point predictor needs free vertices")
    ratio = g.green(x, y) / np.sqrt(g.green(x, x) * g.green(y, y))
    if not -1 - 1e-9 <= ratio <= 1 + 1e-9:
        raise RuntimeError(f"correlation ratio {ratio} outside [-1,1]: broken Green operator")
    return float(np.arcsin(min(max(ratio, -1.0), 1.0)) / np.pi)


@dataclass
class EquilibriumMeasure:
    """Escape-probability weights on the support set; total mass = capacity."""

    support: np.ndarray
    weights: np.ndarray
    capacity: float


def capacity(box: BoxGeometry, A, D_outer, verify: bool = True):
    """Equilibrium measure and capacity of A relative to the absorbing set.

    The weight at a in A is the probability that the walk from a escapes
    to D_outer without returning to A; their sum is the capacity.  The
    last-exit identity P_x(tau_A < tau_D) = sum_a G_D(x,a) * weight(a) is
    spot-checked internally unless ``verify`` is disabled.
    """
    A = np.asarray(A, dtype=np.int64)
    if A.size == 0:
        raise ValueError("capacity of the empty set is undefined")
    a_mask = _as_mask(box.n_vertices, A)
    d_mask = _as_mask(box.n_vertices, D_outer)
    if (a_mask & d_mask).any():
        raise ValueError("A overlaps the outer absorbing set")
    if not d_mask[box.shell()].all():
        raise ValueError("outer absorbing set must contain the shell")

    adj = _box_adjacency(box)
    deg = 2.0 * box.d
    free = ~(a_mask | d_mask)
    free_idx = np.flatnonzero(free)
    h = np.zeros(box.n_vertices)
    h[a_mask] = 1.0
    if free_idx.size:
        sub = adj[free_idx][:, free_idx].tocsr()
        mat = (identity(len(free_idx), format="csr") * deg - sub).tocsc()
        rhs = np.asarray(adj[free_idx][:, np.flatnonzero(a_mask)].sum(axis=1)).ravel()
        if len(free_idx) <= DIRECT_SOLVER_LIMIT:
            sol = splu(mat).solve(rhs)
        else:
            sol, info = cg(mat, rhs, rtol=CG_TOL, atol=0.0, maxiter=50_000)
            if info != 0:
                raise RuntimeError(f"CG failed in capacity solve (info={info})")
        h[free_idx] = sol

    # escape weight: one step out of A, then never touch A before D_outer
    adj_a = adj[A].tocsr()
    weights = np.empty(len(A))
    for i in range(len(A)):
        nbrs = adj_a.indices[adj_a.indptr[i]:adj_a.indptr[i + 1]]
        weights[i] = np.sum(1.0 - h[nbrs]) / deg
    weights = np.clip(weights, 0.0, None)
    cap = float(weights.sum())

    if verify and free_idx.size:
        g = killed_green(box, d_mask)
        rng = np.random.default_rng(0)
        for x in rng.choice(free_idx, size=min(2, len(free_idx)), replace=False):
            lhs = h[x]
            rhs_val = sum(g.green(int(x), int(a)) * w for a, w in zip(A, weights))
            if abs(lhs - rhs_val) > 1e-6 * max(1.0, abs(lhs)):
                raise RuntimeError(
                    f"last-exit identity violated at {x}: {lhs} vs {rhs_val}"
                )
    return EquilibriumMeasure(A.astype(np.int32), weights, cap), cap


def free_green_reference(d: int, x) -> float:
    """Green's function of simple random walk on the infinite lattice.

    Uses G(0,x) = int_0^inf prod_j I_{x_j}(t/d) e^{-t} dt with the
    exponentially scaled Bessel functions absorbing the e^{-t} factor.
    Independent of the killed solver; used to bound truncation bias.
    """
    if d < 3:
        raise ValueError("transient walk needs d >= 3")
    orders = np.abs(np.asarray(x, dtype=np.int64))
    if orders.shape != (d,):
        raise ValueError(f"point must have {d} coordinates")

    def integrand(t):
        return np.prod(special.ive(orders, t / d))

    val, abserr = integrate.quad(integrand, 0.0, np.inf, limit=400,
                                 epsabs=1e-11, epsrel=1e-11)
    if abserr > 1e-6:
        raise RuntimeError(f"lattice Green quadrature did not converge: err={abserr}")
    return float(val)


def hitting_mc(box: BoxGeometry, D, v: int, w: int, n_walks: int, rng) -> float:
    """Monte Carlo frequency of hitting w before D (vectorized killed walks)."""
    d_mask = _as_mask(box.n_vertices, D)
    if not d_mask[box.shell()].all():
        raise ValueError("absorbing set must contain the outer shell")
    if d_mask[w]:
        raise ValueError("target w must be free")
    if v == w:
        return 1.0
    if d_mask[v]:
        return 0.0
    steps = np.concatenate([box.strides, -box.strides]).astype(np.int64)
    pos = np.full(n_walks, v, dtype=np.int64)
    hits = 0
    while pos.size:
        pos += steps[rng.integers(0, 2 * box.d, size=pos.size)]
        at_w = pos == w
        hits += int(at_w.sum())
        pos = pos[~at_w & ~d_mask[pos]]
    return hits / n_walks
