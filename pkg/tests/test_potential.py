"""Potential-theory oracle tests: Green's functions, hitting, capacity."""

import numpy as np
import pytest
from scipy.sparse import csr_matrix

from gffperc import rng as rngmod
from gffperc.lattice import make_box
from gffperc.potential import (GreenOperator, arcsin_two_point, capacity,
                               free_green_reference, hitting_mc,
                               hitting_probability, killed_green)

WATSON_G0 = 1.5163860591519780  # free-lattice value, checked below by quadrature


def _path_operator(n_free=3):
    """Nearest-neighbor walk on a path with absorbing ends."""
    n = n_free + 2
    rows = list(range(n - 1)) + list(range(1, n))
    cols = list(range(1, n)) + list(range(n - 1))
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    absorbing = np.zeros(n, dtype=bool)
    absorbing[[0, n - 1]] = True
    return GreenOperator(adj, np.full(n, 2.0), absorbing)


def test_path_center_self_green_matches_hand_solve():
    g = _path_operator()
    # independent oracle: solve (I - P) G = I densely
    M = np.array([[1, -0.5, 0], [-0.5, 1, -0.5], [0, -0.5, 1]])
    G = np.linalg.inv(M)
    assert g.green(2, 2) == pytest.approx(G[1, 1], abs=1e-12)
    assert g.green(2, 2) == pytest.approx(2.0, abs=1e-12)
    assert g.green(1, 2) == pytest.approx(G[0, 1], abs=1e-12)


def test_path_hitting_probability():
    g = _path_operator()
    assert hitting_probability(g, 1, 2) == pytest.approx(0.5, abs=1e-12)
    assert hitting_probability(g, 2, 2) == 1.0
    assert hitting_probability(g, 0, 2) == 0.0  # absorbed start


def test_hitting_rejects_absorbed_target():
    g = _path_operator()
    with pytest.raises(ValueError):
        hitting_probability(g, 1, 0)


def test_green_zero_on_absorbing_set():
    box = make_box(3, 2, 1)
    g = killed_green(box, box.shell())
    v = int(box.shell()[0])
    assert g.green(v, box.origin) == 0.0
    assert g.green(box.origin, v) == 0.0


def test_killed_green_requires_shell():
    box = make_box(3, 2, 1)
    with pytest.raises(ValueError):
        killed_green(box, [box.origin])


def test_killed_green_rejects_full_domain():
    box = make_box(3, 1, 1)
    with pytest.raises(ValueError):
        killed_green(box, np.ones(box.n_vertices, dtype=bool))


def test_diagonal_below_free_lattice_value():
    box = make_box(3, 8, 1)
    g = killed_green(box, box.shell())
    val = g.green(box.origin, box.origin)
    assert 1.0 < val < WATSON_G0


def test_green_symmetry_on_random_pairs():
    box = make_box(3, 3, 1)
    g = killed_green(box, box.shell())
    rng = np.random.default_rng(2)
    free = np.flatnonzero(~g.absorbing)
    for _ in range(8):
        x, y = rng.choice(free, 2, replace=False)
        assert g.green(int(x), int(y)) == pytest.approx(g.green(int(y), int(x)), rel=1e-9)


def test_green_monotone_in_absorbing_set():
    box = make_box(3, 3, 1)
    small = np.zeros(box.n_vertices, dtype=bool)
    small[box.shell()] = True
    big = small.copy()
    big[box.index((2, 2, 2))] = True
    g1 = killed_green(box, small)
    g2 = killed_green(box, big)
    rng = np.random.default_rng(3)
    free = np.flatnonzero(~big)
    for _ in range(10):
        x, y = rng.choice(free, 2, replace=False)
        assert g2.green(int(x), int(y)) <= g1.green(int(x), int(y)) + 1e-12


def test_hitting_identity_exact():
    # G_D(v,w) = P_v(tau_w < tau_D) G_D(w,w) on random triples
    box = make_box(3, 3, 1)
    rng = np.random.default_rng(4)
    for _ in range(6):
        D = np.zeros(box.n_vertices, dtype=bool)
        D[box.shell()] = True
        D[rng.random(box.n_vertices) < 0.05] = True
        free = np.flatnonzero(~D)
        v, w = (int(a) for a in rng.choice(free, 2, replace=False))
        g = killed_green(box, D)
        lhs = g.green(v, w)
        rhs = hitting_probability(g, v, w) * g.green(w, w)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_hitting_mc_matches_formula():
    box = make_box(3, 4, 1)
    g = killed_green(box, box.shell())
    gen = rngmod.generator(9, 0, rngmod.WALK)
    v, w = int(box.index((2, 1, 0))), int(box.index((0, 0, 1)))
    p = hitting_probability(g, v, w)
    n = 20_000
    freq = hitting_mc(box, box.shell(), v, w, n, gen)
    assert abs(freq - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_capacity_singleton_matches_free_green():
    box = make_box(3, 8, 2)  # escape measured to the shell of B(16)
    _, cap = capacity(box, [box.origin], box.shell())
    assert cap == pytest.approx(1 / WATSON_G0, rel=0.05)


def test_capacity_additivity_for_distant_points():
    box = make_box(3, 8, 2)
    a = int(box.index((-7, 0, 0)))
    b = int(box.index((7, 0, 0)))
    _, cap_a = capacity(box, [a], box.shell())
    _, cap_b = capacity(box, [b], box.shell())
    _, cap_ab = capacity(box, [a, b], box.shell())
    assert cap_ab == pytest.approx(cap_a + cap_b, rel=0.10)


def test_capacity_monotone_under_enlargement():
    box = make_box(3, 4, 2)
    A = [box.origin, int(box.index((1, 0, 0)))]
    A2 = A + [int(box.index((0, 1, 0)))]
    _, c1 = capacity(box, A, box.shell())
    _, c2 = capacity(box, A2, box.shell())
    assert c2 >= c1 * (1 - 1e-9)


def test_capacity_weights_nonnegative_with_positive_mass():
    box = make_box(3, 3, 2)
    eq, cap = capacity(box, [box.origin], box.shell())
    assert np.all(eq.weights >= 0)
    assert cap > 0


def test_capacity_rejects_overlap():
    box = make_box(3, 2, 1)
    with pytest.raises(ValueError):
        capacity(box, [int(box.shell()[0])], box.shell())


def test_arcsin_two_point_values_and_range():
    g = _path_operator()
    val = arcsin_two_point(g, 1, 2)
    ratio = g.green(1, 2) / np.sqrt(g.green(1, 1) * g.green(2, 2))
    assert val == pytest.approx(np.arcsin(ratio) / np.pi, abs=1e-12)
    assert 0 <= val <= 0.5
    # anchor values of the map ratio -> probability
    assert np.arcsin(0.0) / np.pi == 0.0
    assert np.arcsin(0.5) / np.pi == pytest.approx(1 / 6, abs=1e-12)
    assert np.arcsin(1.0) / np.pi == pytest.approx(0.5, abs=1e-12)


def test_arcsin_two_point_monotone_in_offdiagonal():
    # larger G(x,y) with fixed diagonal gives a larger predictor
    box = make_box(3, 4, 1)
    g = killed_green(box, box.shell())
    o = box.origin
    vals = [arcsin_two_point(g, o, int(box.index((r, 0, 0)))) for r in (1, 2, 3)]
    assert vals[0] > vals[1] > vals[2]


def test_arcsin_two_point_rejects_broken_operator():
    g = _path_operator()

    class Broken:
        absorbing = g.absorbing

        def green(self, x, y):
            return 5.0 if x != y else 1.0

    with pytest.raises(RuntimeError):
        arcsin_two_point(Broken(), 1, 2)
    with pytest.raises(ValueError):
        arcsin_two_point(g, 1, 1)


def test_free_green_reference_values():
    assert free_green_reference(3, (0, 0, 0)) == pytest.approx(WATSON_G0, abs=1e-6)
    # G(0,0) = 1 + G(0,e1) by one step of the walk
    assert free_green_reference(3, (1, 0, 0)) == pytest.approx(WATSON_G0 - 1, abs=1e-6)
    for d in (3, 4, 5):
        assert free_green_reference(d, (0,) * d) >= 1.0
    with pytest.raises(ValueError):
        free_green_reference(2, (0, 0))


def test_free_green_asymptotic_ratio_stabilizes():
    # G(0,x) ~ C_d |x|^{2-d}; the ratio settles at large |x|
    vals = []
    for r in (6, 8, 10):
        vals.append(free_green_reference(3, (r, 0, 0)) * r)
    assert abs(vals[-1] - vals[-2]) / vals[-1] < 0.02
    assert vals[-1] == pytest.approx(3 / (2 * np.pi), rel=0.05)


def test_free_green_crosschecked_by_visit_count_mc():
    # long-run visit-count Monte Carlo vs the killed solver on the same box
    box = make_box(3, 6, 1)
    g = killed_green(box, box.shell())
    exact = g.green(box.origin, box.origin)
    gen = rngmod.generator(12, 0, rngmod.ORACLE)
    steps = np.concatenate([box.strides, -box.strides])
    n = 4000
    visits = np.zeros(n)
    pos = np.full(n, box.origin)
    alive = np.ones(n, dtype=bool)
    absorbed = np.zeros(box.n_vertices, dtype=bool)
    absorbed[box.shell()] = True
    while alive.any():
        visits[alive] += pos[alive] == box.origin
        pos[alive] = pos[alive] + steps[gen.integers(0, 6, alive.sum())]
        alive &= ~absorbed[pos]
    est = visits.mean()
    se = visits.std(ddof=1) / np.sqrt(n)
    assert abs(est - exact) < 3.5 * se
