#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure numpy/scipy fallback.

Asserts bit-identical output while timing, so it doubles as an
equivalence check on realistic workloads.

    python benchmarks/bench_kernels.py [--d D] [--N N] [--pad PAD] [--reps R]
"""

import argparse
import time

import numpy as np

from gffperc._kernels import get_backend
from gffperc.gff import make_sampler
from gffperc.lattice import make_box
from gffperc import rng as rngmod


def timed(fn, reps):
    best = float("inf")
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--pad", type=float, default=2.0)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()

    pure = get_backend("pure")
    try:
        comp = get_backend("compiled")
    except ImportError:
        raise SystemExit("compiled backend unavailable; build with pip install -e .")

    box = make_box(args.d, args.N, args.pad)
    print(f"domain B({box.R}) in d={box.d}: {box.n_vertices} vertices, "
          f"{box.n_edges} edges")
    sampler = make_sampler(box)
    replica = 0
    while True:  # pick a replica whose origin cluster is nonempty
        field = sampler.sample(seed=1, replica=replica)
        if field.values[box.origin] >= 0:
            break
        replica += 1
    base = rngmod.edge_base(1, replica)
    eu, ev, ids = box.edges

    jobs = [
        ("edge_uniforms", lambda b: lambda: b.edge_uniforms(base, ids)),
        ("open_states", lambda b: lambda: b.open_states(
            field.values, eu, ev, ids, base, box.edge_length, 0.0)),
    ]
    results = {}
    for name, make in jobs:
        (out_p, t_p) = timed(make(pure), args.reps)
        (out_c, t_c) = timed(make(comp), args.reps)
        assert np.array_equal(out_p, out_c), f"{name}: backend outputs differ"
        results[name] = (t_p, t_c)

    states = pure.open_states(field.values, eu, ev, ids, base, box.edge_length, 0.0)
    sel = (states == 1).astype(np.uint8)
    (r_p, t_p) = timed(lambda: pure.component_roots(box.n_vertices, eu, ev, sel), args.reps)
    (r_c, t_c) = timed(lambda: comp.component_roots(box.n_vertices, eu, ev, sel), args.reps)
    assert np.array_equal(r_p, r_c), "component_roots: backend outputs differ"
    results["component_roots"] = (t_p, t_c)

    (o_p, t_p) = timed(lambda: pure.origin_cluster(
        field.values, 0.0, base, box.d, box.side, box.linf, box.origin, 1, -1), args.reps)
    (o_c, t_c) = timed(lambda: comp.origin_cluster(
        field.values, 0.0, base, box.d, box.side, box.linf, box.origin, 1, -1), args.reps)
    assert o_p[0] == o_c[0] and np.array_equal(o_p[1], o_c[1])
    results["origin_cluster"] = (t_p, t_c)

    # bridge census on the origin cluster of a conditioned replica
    rng = np.random.default_rng(0)
    m = 4000
    lu = rng.integers(0, 1000, m).astype(np.int32)
    lv = rng.integers(0, 1000, m).astype(np.int32)
    (f_p, t_p) = timed(lambda: pure.pivotal_flags(1000, lu, lv, 0, 999), args.reps)
    (f_c, t_c) = timed(lambda: comp.pivotal_flags(1000, lu, lv, 0, 999), args.reps)
    assert np.array_equal(f_p, f_c)
    results["pivotal_flags"] = (t_p, t_c)

    print(f"\n{'kernel':<18}{'pure':>12}{'compiled':>12}{'speedup':>10}")
    for name, (t_p, t_c) in results.items():
        print(f"{name:<18}{t_p * 1e3:>10.2f}ms{t_c * 1e3:>10.2f}ms{t_p / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
