"""Replicated Monte Carlo harness: specs, parallel execution, estimators.

Replicas are the unit of parallel work.  Every replica's randomness is a
pure function of (master seed, global replica index), and partial results
are merged by commutative accumulation in a fixed chunk order, so worker
count never affects output.  Estimates for indicator observables carry
binomial standard errors; scaling laws are fitted by weighted least
squares on log-log scale with jackknife confidence intervals over
replicate blocks.
"""

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng as rngmod
from ._kernels import component_roots, open_states, origin_cluster
from .clusters import (_group_members, _macroscopic, label_clusters,
                       macroscopic_clusters, min_distance)
from .gff import make_sampler
from .lattice import make_box
from .metric_edges import open_edges
from .pivotal import heterochromatic_census, pivotal_edges_from_field

OBSERVABLES = ("two_point", "one_arm", "crossing", "mindist_cdf", "pivotal",
               "heterochromatic")
N_BLOCKS = 20


class SpecError(ValueError):
    """Invalid experiment specification (CLI exit code 2)."""


@dataclass
class ExperimentSpec:
    """One replicated experiment; all fields map 1:1 to config-file keys."""

    observable: str
    d: int = 3
    N: tuple = (8,)
    n: tuple = ()
    delta: float | None = 0.25
    chi: tuple = ()
    k: int = 8
    pad: float = 2.0
    seed: int = 0
    replicas: int = 1000
    x: tuple = ()
    y: tuple = ()
    level: float = 0.0
    nested: bool = False
    out: str = ""

    def validate(self):
        if self.observable not in OBSERVABLES:
            raise SpecError(f"unknown observable {self.observable!r}")
        if self.d < 3:
            raise SpecError("d must be >= 3")
        if self.replicas < 0:
            raise SpecError("replicas must be nonnegative")
        if not self.N or any(int(v) != v or v < 0 for v in self.N):
            raise SpecError("N must be a nonempty list of nonnegative integers")
        if self.pad < 1:
            raise SpecError("pad must be >= 1")
        if self.observable == "crossing":
            if len(self.n) != len(self.N):
                raise SpecError("crossing needs n and N lists of equal length")
            if any(not 1 <= a < b for a, b in zip(self.n, self.N)):
                raise SpecError("crossing needs 1 <= n < N per point")
        if self.observable == "two_point":
            if len(self.x) != self.d or len(self.y) != self.d:
                raise SpecError("two_point needs x and y with d coordinates")
            if tuple(self.x) == tuple(self.y):
                raise SpecError("two_point needs distinct vertices")
        if self.observable == "mindist_cdf":
            if len(self.N) != 1:
                raise SpecError("mindist_cdf runs at a single N")
            if self.k < 2:
                raise SpecError("mindist_cdf needs interior resolution k >= 2")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise SpecError("delta must be in (0, 1]")
        return self

    def chi_grid(self):
        if self.chi:
            return tuple(float(c) for c in self.chi)
        return tuple(self.d * 2.0 ** (-j) for j in range(1, 6))


@dataclass
class ResultRow:
    """One CSV row; schema is fixed by the external interface."""

    observable: str
    d: int
    N: int
    n: object = None
    delta: object = None
    chi: object = None
    k: object = None
    estimate: float = float("nan")
    stderr: float = float("nan")
    replicas: int = 0
    acceptance_rate: object = None
    seed: int = 0


CSV_FIELDS = ("observable", "d", "N", "n", "delta", "chi", "k", "estimate",
              "stderr", "replicas", "acceptance_rate", "seed")


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_points: int


@dataclass
class RunResult:
    spec: ExperimentSpec
    rows: list
    fit: ExponentFit | None
    summary: dict
    partial: bool = False
    error: str | None = None


def _blocks_of(lo, hi, replicas):
    r = np.arange(lo, hi)
    return (r * N_BLOCKS) // max(replicas, 1)


# -- per-observable chunk workers ----------------------------------------


def _chunk_two_point(spec, point, lo, hi):
    box = make_box(spec.d, spec.N[0], spec.pad)
    sampler = make_sampler(box)
    xs = box.index(np.array(spec.x))
    ys = box.index(np.array(spec.y))
    hits = np.zeros(N_BLOCKS, dtype=np.int64)
    count = np.zeros(N_BLOCKS, dtype=np.int64)
    blocks = _blocks_of(lo, hi, spec.replicas)
    for i, r in enumerate(range(lo, hi)):
        f = sampler.sample(spec.seed, r)
        base = rngmod.edge_base(spec.seed, r)
        _, members = origin_cluster(f.values, spec.level, base, box.d, box.side,
                                    box.linf, int(xs), 1, -1)
        hit = members.size and np.searchsorted(members, ys) < members.size \
            and members[np.searchsorted(members, ys)] == ys
        b = blocks[i]
        hits[b] += bool(hit)
        count[b] += 1
    return {"hits": hits, "count": count}


def _chunk_one_arm(spec, point, lo, hi):
    ns = spec.N if spec.nested else (spec.N[point],)
    box = make_box(spec.d, max(ns), spec.pad)
    sampler = make_sampler(box)
    hits = np.zeros((len(ns), N_BLOCKS), dtype=np.int64)
    count = np.zeros(N_BLOCKS, dtype=np.int64)
    blocks = _blocks_of(lo, hi, spec.replicas)
    for i, r in enumerate(range(lo, hi)):
        g = point * spec.replicas + r
        f = sampler.sample(spec.seed, g)
        base = rngmod.edge_base(spec.seed, g)
        reach, _ = origin_cluster(f.values, spec.level, base, box.d, box.side,
                                  box.linf, box.origin, 1, -1)
        b = blocks[i]
        count[b] += 1
        for j, N in enumerate(ns):
            hits[j, b] += reach >= N
    return {"hits": hits, "count": count}


def _chunk_crossing(spec, point, lo, hi):
    n_in, N = spec.n[point], spec.N[point]
    box = make_box(spec.d, N, spec.pad)
    sampler = make_sampler(box)
    eu, ev, ids = box.edges
    hits = np.zeros(N_BLOCKS, dtype=np.int64)
    count = np.zeros(N_BLOCKS, dtype=np.int64)
    blocks = _blocks_of(lo, hi, spec.replicas)
    for i, r in enumerate(range(lo, hi)):
        g = point * spec.replicas + r
        f = sampler.sample(spec.seed, g)
        base = rngmod.edge_base(spec.seed, g)
        st = open_states(f.values, eu, ev, ids, base, box.edge_length, spec.level)
        roots = component_roots(box.n_vertices, eu, ev, (st == 1).astype(np.uint8))
        member_idx = np.flatnonzero(f.values >= spec.level)
        ms, bounds, _ = _group_members(roots, member_idx)
        li = box.linf[ms]
        lo_ = np.minimum.reduceat(li, bounds[:-1])
        hi_ = np.maximum.reduceat(li, bounds[:-1])
        b = blocks[i]
        hits[b] += bool(np.any((lo_ <= n_in) & (hi_ >= N)))
        count[b] += 1
    return {"hits": hits, "count": count}


def _chunk_mindist(spec, point, lo, hi):
    N = spec.N[0]
    box = make_box(spec.d, N, spec.pad)
    sampler = make_sampler(box)
    grid = np.array(spec.chi_grid())
    cutoff = float(grid.max())
    hits = np.zeros((len(grid), N_BLOCKS), dtype=np.int64)
    two = np.zeros(N_BLOCKS, dtype=np.int64)
    count = np.zeros(N_BLOCKS, dtype=np.int64)
    blocks = _blocks_of(lo, hi, spec.replicas)
    for i, r in enumerate(range(lo, hi)):
        f = sampler.sample(spec.seed, r)
        es = open_edges(f, spec.level)
        lab = label_clusters(es, f)
        res = min_distance(lab, es, spec.delta, N, k=spec.k, cutoff=cutoff)
        b = blocks[i]
        count[b] += 1
        two[b] += res.n_clusters >= 2
        if np.isfinite(res.distance):
            hits[:, b] += res.distance <= grid + 1e-12
    return {"hits": hits, "two": two, "count": count}


def _chunk_pivotal(spec, point, lo, hi):
    N = spec.N[point]
    box = make_box(spec.d, N, spec.pad)
    sampler = make_sampler(box)
    rows = np.zeros(hi - lo, dtype=[("replica", np.int64), ("one_arm", np.int8),
                                    ("n_pivotal", np.int64), ("het_same", np.int64),
                                    ("het_opp", np.int64)])
    for i, r in enumerate(range(lo, hi)):
        g = point * spec.replicas + r
        f = sampler.sample(spec.seed, g)
        base = rngmod.edge_base(spec.seed, g)
        arm, piv = pivotal_edges_from_field(f, base, N, spec.level)
        het_same = het_opp = 0
        if spec.delta is not None:
            es = open_edges(f, spec.level, base=base)
            lab = label_clusters(es, f)
            census = heterochromatic_census(
                lab, spec.delta, N, clusters=_macroscopic(lab, spec.delta, N))
            het_same, het_opp = census.n_same_sign, census.n_opposite
        rows[i] = (r, arm, len(piv) if arm else 0, het_same, het_opp)
    return {"per_replica": rows}


def _chunk_hetero(spec, point, lo, hi):
    N = spec.N[point]
    box = make_box(spec.d, N, spec.pad)
    sampler = make_sampler(box)
    tot = np.zeros(N_BLOCKS)
    tot_sq = np.zeros(N_BLOCKS)
    same = np.zeros(N_BLOCKS)
    opp = np.zeros(N_BLOCKS)
    count = np.zeros(N_BLOCKS, dtype=np.int64)
    blocks = _blocks_of(lo, hi, spec.replicas)
    for i, r in enumerate(range(lo, hi)):
        g = point * spec.replicas + r
        f = sampler.sample(spec.seed, g)
        es = open_edges(f, spec.level)
        lab = label_clusters(es, f)
        census = heterochromatic_census(
            lab, spec.delta, N, clusters=_macroscopic(lab, spec.delta, N))
        b = blocks[i]
        count[b] += 1
        tot[b] += census.total
        tot_sq[b] += census.total**2
        same[b] += census.n_same_sign
        opp[b] += census.n_opposite
    return {"tot": tot, "tot_sq": tot_sq, "same": same, "opp": opp, "count": count}


_CHUNK_FN = {
    "two_point": _chunk_two_point,
    "one_arm": _chunk_one_arm,
    "crossing": _chunk_crossing,
    "mindist_cdf": _chunk_mindist,
    "pivotal": _chunk_pivotal,
    "heterochromatic": _chunk_hetero,
}


def _run_chunk(spec_dict, point, lo, hi):
    spec = ExperimentSpec(**spec_dict)
    return _CHUNK_FN[spec.observable](spec, point, lo, hi)


def _merge(accs):
    if not accs:
        return None
    out = {}
    for acc in accs:
        for key, val in acc.items():
            if key == "per_replica":
                out.setdefault(key, []).append(val)
            elif key in out:
                out[key] = out[key] + val
            else:
                out[key] = val.copy()
    if "per_replica" in out:
        out["per_replica"] = np.concatenate(out["per_replica"])
    return out


def _n_workers():
    env = os.environ.get("GFFPERC_WORKERS")
    if env:
        return max(1, int(env))
    return min(os.cpu_count() or 1, 4)


def _execute(spec: ExperimentSpec, n_points: int):
    """Deterministic parallel map-reduce over (point, replica-range) chunks."""
    workers = _n_workers()
    chunk = max(1, math.ceil(spec.replicas / max(1, 2 * workers)))
    tasks = [(p, lo, min(lo + chunk, spec.replicas))
             for p in range(n_points)
             for lo in range(0, spec.replicas, chunk)]
    spec_dict = asdict(spec)
    accs = [[] for _ in range(n_points)]
    partial, err = False, None
    if workers == 1 or len(tasks) <= 1:
        for p, lo, hi in tasks:
            try:
                accs[p].append(_run_chunk(spec_dict, p, lo, hi))
            except (MemoryError, OSError) as exc:  # resource exhaustion: keep what we have
                partial, err = True, repr(exc)
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [(p, pool.submit(_run_chunk, spec_dict, p, lo, hi))
                    for p, lo, hi in tasks]
            for p, fut in futs:
                try:
                    accs[p].append(fut.result())
                except (MemoryError, OSError) as exc:
                    partial, err = True, repr(exc)
                    break
    return [_merge(a) for a in accs], partial, err


# -- estimators and fits --------------------------------------------------


def _indicator_estimate(hits, count):
    n = int(count.sum())
    if n == 0:
        return float("nan"), float("nan")
    p = float(hits.sum()) / n
    return p, math.sqrt(p * (1 - p) / n)


def _block_deleted(hits, count):
    """Estimate with one replicate block removed, per block."""
    tot_h, tot_n = hits.sum(), count.sum()
    out = np.full(N_BLOCKS, np.nan)
    for b in range(N_BLOCKS):
        n = tot_n - count[b]
        if n > 0:
            out[b] = (tot_h - hits[b]) / n
    return out


def fit_exponent(points, block_estimates=None):
    """Weighted least squares on log-log scale.

    points: iterable of (scale, estimate, stderr).  Nonpositive estimates
    are dropped with a warning.  When per-block deleted estimates are
    provided the confidence interval is the delete-one-block jackknife;
    otherwise it comes from the WLS covariance.
    """
    pts = [(s, e, se) for s, e, se in points]
    keep = [i for i, (s, e, se) in enumerate(pts) if e > 0 and np.isfinite(e)]
    if len(keep) < len(pts):
        warnings.warn("dropping nonpositive estimates from the log-log fit")
    if len(keep) < 2:
        raise ValueError("need at least two positive points to fit a slope")
    scales = np.array([pts[i][0] for i in keep], dtype=float)
    est = np.array([pts[i][1] for i in keep], dtype=float)
    se = np.array([pts[i][2] for i in keep], dtype=float)
    x = np.log(scales)
    y = np.log(est)
    with np.errstate(divide="ignore"):
        w = np.where((se > 0) & np.isfinite(se), (est / se) ** 2, np.nan)
    if not np.isfinite(w).all():
        w = np.ones_like(x)

    def wls(yy):
        sw = w.sum()
        xb = (w * x).sum() / sw
        yb = (w * yy).sum() / sw
        sxx = (w * (x - xb) ** 2).sum()
        slope = (w * (x - xb) * (yy - yb)).sum() / sxx
        return slope, yb - slope * xb, sxx

    slope, intercept, sxx = wls(y)
    if block_estimates is not None:
        bl = np.asarray(block_estimates, dtype=float)[keep]
        slopes = []
        for b in range(bl.shape[1]):
            col = bl[:, b]
            if np.all(np.isfinite(col)) and np.all(col > 0):
                slopes.append(wls(np.log(col))[0])
        if len(slopes) >= 2:
            from scipy.stats import t as student_t

            slopes = np.array(slopes)
            B = len(slopes)
            var = (B - 1) / B * ((slopes - slopes.mean()) ** 2).sum()
            half = student_t.ppf(0.975, B - 1) * math.sqrt(var)
            return ExponentFit(float(slope), float(intercept),
                               float(slope - half), float(slope + half), len(keep))
    # WLS covariance with inverse-variance weights: Var(slope) = chi2_red/sxx
    from scipy.stats import t as student_t

    resid = y - slope * x - intercept
    dof = max(len(keep) - 2, 1)
    chi2_red = float((w * resid**2).sum()) / dof
    half = student_t.ppf(0.975, dof) * math.sqrt(max(chi2_red, 1e-300) / sxx)
    return ExponentFit(float(slope), float(intercept),
                       float(slope - half), float(slope + half), len(keep))


def _tune_delta(spec: ExperimentSpec):
    """Largest delta whose two-macroscopic-cluster frequency clears 5%.

    Scanning from delta = 1 down keeps the experiment in the rare-event
    regime; small deltas saturate the family and flatten the distance
    distribution.  One pilot sweep labels each replica once.
    """
    N = spec.N[0]
    box = make_box(spec.d, N, spec.pad)
    sampler = make_sampler(box)
    pilot = 200
    grid = (1.0, 0.875, 0.75, 0.625, 0.5, 0.375, 0.25, 0.125)
    counts = {cand: 0 for cand in grid}
    for r in range(pilot):
        f = sampler.sample(spec.seed, 10**9 + r)
        es = open_edges(f, spec.level)
        lab = label_clusters(es, f)
        for cand in grid:
            if len(macroscopic_clusters(lab, cand, N)) >= 2:
                counts[cand] += 1
    freqs = {cand: counts[cand] / pilot for cand in grid}
    for cand in grid:
        if freqs[cand] >= 0.05:
            return cand, freqs
    return grid[-1], freqs


def run_experiment(spec: ExperimentSpec) -> RunResult:
    """Run all parameter points of a spec; deterministic given the spec."""
    spec.validate()
    t0 = time.time()
    summary = {"observable": spec.observable, "pad": spec.pad, "level": spec.level,
               "backend": __import__("gffperc._kernels", fromlist=["BACKEND"]).BACKEND}
    if spec.observable == "mindist_cdf" and spec.delta is None:
        delta, freqs = _tune_delta(spec)
        spec.delta = delta
        summary["delta_autotuned"] = {"chosen": delta, "two_cluster_freq": freqs}
    rows, fit = [], None
    if spec.replicas == 0:
        summary["wall_time"] = time.time() - t0
        return RunResult(spec, [], None, summary)

    if spec.observable == "one_arm":
        n_points = 1 if spec.nested else len(spec.N)
    elif spec.observable == "two_point":
        n_points = 1
    elif spec.observable == "mindist_cdf":
        n_points = 1
    else:
        n_points = len(spec.N)
    accs, partial, err = _execute(spec, n_points)

    common = dict(observable=spec.observable, d=spec.d, seed=spec.seed)
    if spec.observable == "two_point":
        acc = accs[0]
        if acc is None:
            acc = {"hits": np.zeros(N_BLOCKS, dtype=np.int64),
                   "count": np.zeros(N_BLOCKS, dtype=np.int64)}
        est, se = _indicator_estimate(acc["hits"], acc["count"])
        rows.append(ResultRow(**common, N=spec.N[0], estimate=est, stderr=se,
                              replicas=int(acc["count"].sum())))
        summary["pair"] = {"x": list(spec.x), "y": list(spec.y)}
    elif spec.observable == "one_arm":
        curve, blocks = [], []
        if spec.nested and accs[0] is not None:
            acc = accs[0]
            for j, N in enumerate(spec.N):
                est, se = _indicator_estimate(acc["hits"][j], acc["count"])
                rows.append(ResultRow(**common, N=N, estimate=est, stderr=se,
                                      replicas=int(acc["count"].sum())))
                curve.append((N, est, se))
                blocks.append(_block_deleted(acc["hits"][j], acc["count"]))
        elif not spec.nested:
            for j, N in enumerate(spec.N):
                acc = accs[j]
                if acc is None:
                    continue
                est, se = _indicator_estimate(acc["hits"][0], acc["count"])
                rows.append(ResultRow(**common, N=N, estimate=est, stderr=se,
                                      replicas=int(acc["count"].sum())))
                curve.append((N, est, se))
                blocks.append(_block_deleted(acc["hits"][0], acc["count"]))
        if len(curve) >= 3:
            fit = _try_fit(curve, np.array(blocks))
    elif spec.observable == "crossing":
        for j, (n_in, N) in enumerate(zip(spec.n, spec.N)):
            acc = accs[j]
            if acc is None:
                continue
            est, se = _indicator_estimate(acc["hits"], acc["count"])
            rows.append(ResultRow(**common, N=N, n=n_in, estimate=est, stderr=se,
                                  replicas=int(acc["count"].sum())))
    elif spec.observable == "mindist_cdf":
        acc = accs[0]
        if acc is None:
            acc = {"hits": np.zeros((len(spec.chi_grid()), N_BLOCKS), dtype=np.int64),
                   "two": np.zeros(N_BLOCKS, dtype=np.int64),
                   "count": np.zeros(N_BLOCKS, dtype=np.int64)}
        grid = spec.chi_grid()
        n = int(acc["count"].sum())
        two_rate = float(acc["two"].sum()) / n if n else float("nan")
        curve, blocks = [], []
        for j, chi in enumerate(grid):
            est, se = _indicator_estimate(acc["hits"][j], acc["count"])
            rows.append(ResultRow(**common, N=spec.N[0], delta=spec.delta, chi=chi,
                                  k=spec.k, estimate=est, stderr=se, replicas=n,
                                  acceptance_rate=two_rate))
            curve.append((chi, est, se))
            blocks.append(_block_deleted(acc["hits"][j], acc["count"]))
        if len(curve) >= 3:
            fit = _try_fit(curve, np.array(blocks))
        summary["two_cluster_frequency"] = two_rate
        summary["resolution"] = spec.d / spec.k
        summary["distance_convention"] = (
            "cluster diameters over lattice vertices; zeros localized to "
            "sub-segments of length d/k (additive error at most 2d/k)")
    elif spec.observable == "pivotal":
        curve, blocks = [], []
        per_replica = {}
        for j, N in enumerate(spec.N):
            if accs[j] is None:
                continue
            arr = accs[j]["per_replica"]
            arr = arr[np.argsort(arr["replica"], kind="stable")]
            per_replica[N] = arr
            acc_mask = arr["one_arm"] == 1
            vals = arr["n_pivotal"][acc_mask]
            n = len(arr)
            rate = float(acc_mask.sum()) / n if n else float("nan")
            med = float(np.median(vals)) if len(vals) else float("nan")
            se = _median_se(vals)
            rows.append(ResultRow(**common, N=N, delta=spec.delta, estimate=med,
                                  stderr=se, replicas=n, acceptance_rate=rate))
            curve.append((N, med, se))
            blk = np.full(N_BLOCKS, np.nan)
            rb = (arr["replica"] * N_BLOCKS) // max(spec.replicas, 1)
            for b in range(N_BLOCKS):
                keep = acc_mask & (rb != b)
                if keep.sum():
                    blk[b] = np.median(arr["n_pivotal"][keep])
            blocks.append(blk)
            summary.setdefault("conditional_quartiles", {})[N] = (
                [float(q) for q in np.percentile(vals, [25, 50, 75])] if len(vals) else None)
        if len(curve) >= 3:
            fit = _try_fit(curve, np.array(blocks))
        summary["proxy_note"] = (
            "heterochromatic counts are a distinct-macroscopic-cluster contact "
            "census, reported as a scaling proxy only")
        summary["_per_replica"] = per_replica
    else:  # heterochromatic
        curve, blocks = [], []
        for j, N in enumerate(spec.N):
            acc = accs[j]
            if acc is None:
                continue
            n = int(acc["count"].sum())
            mean = float(acc["tot"].sum()) / n if n else float("nan")
            var = float(acc["tot_sq"].sum()) / n - mean**2 if n else float("nan")
            se = math.sqrt(max(var, 0.0) / n) if n else float("nan")
            rows.append(ResultRow(**common, N=N, delta=spec.delta, estimate=mean,
                                  stderr=se, replicas=n))
            curve.append((N, mean, se))
            tot, cnt = acc["tot"], acc["count"]
            blk = np.full(N_BLOCKS, np.nan)
            for b in range(N_BLOCKS):
                m = cnt.sum() - cnt[b]
                if m > 0:
                    blk[b] = (tot.sum() - tot[b]) / m
            blocks.append(blk)
            summary.setdefault("sign_split", {})[N] = {
                "same_sign": float(acc["same"].sum()) / n if n else None,
                "opposite": float(acc["opp"].sum()) / n if n else None,
            }
        if len(curve) >= 3:
            fit = _try_fit(curve, np.array(blocks))

    summary["wall_time"] = time.time() - t0
    return RunResult(spec, rows, fit, summary, partial=partial, error=err)


def _median_se(vals):
    """Normal-approximation standard error of the sample median."""
    if len(vals) < 4:
        return float("nan")
    return float(max(1.2533 * np.std(vals, ddof=1) / math.sqrt(len(vals)), 1e-6))


def _try_fit(curve, blocks):
    try:
        return fit_exponent(curve, block_estimates=blocks)
    except ValueError:
        return None


# -- emission --------------------------------------------------------------


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_results(result: RunResult, outdir, name=None):
    """Write <name>.csv, <name>_summary.json and a gnuplot curve table.

    Returns the list of written paths; an empty result gives a header-only
    CSV.  Pivotal runs additionally get a per-replica CSV.
    """
    import csv
    import json
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = name or result.spec.observable
    paths = []

    csv_path = outdir / f"{name}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for row in result.rows:
            w.writerow([_csv_cell(getattr(row, f)) for f in CSV_FIELDS])
    paths.append(csv_path)

    summary = {k: v for k, v in result.summary.items() if not k.startswith("_")}
    payload = {
        "spec": asdict(result.spec),
        "fit": asdict(result.fit) if result.fit else None,
        "summary": summary,
        "partial": result.partial,
        "error": result.error,
    }
    json_path = outdir / f"{name}_summary.json"
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, default=str)
    paths.append(json_path)

    if result.rows:
        dat_path = outdir / f"{name}_curve.dat"
        with open(dat_path, "w") as fh:
            fh.write("# scale estimate stderr\n")
            for row in result.rows:
                scale = row.chi if row.chi is not None else row.N
                fh.write(f"{scale} {row.estimate} {row.stderr}\n")
        paths.append(dat_path)

    per = result.summary.get("_per_replica")
    if per:
        rep_path = outdir / f"{name}_replicas.csv"
        with open(rep_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "replica", "one_arm", "n_pivotal",
                        "het_same_sign", "het_opposite"])
            for N, arr in per.items():
                for rec in arr:
                    w.writerow([N, rec["replica"], rec["one_arm"],
                                rec["n_pivotal"], rec["het_same"], rec["het_opp"]])
        paths.append(rep_path)
    return paths


def parse_results(csv_path):
    """Read back an emitted CSV as ResultRow objects (codec inverse)."""
    import csv

    def conv(field, s):
        if s == "":
            return None
        if field in ("observable",):
            return s
        if field in ("d", "N", "replicas", "seed", "k", "n"):
            return int(s)
        return float(s)

    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(CSV_FIELDS):
            raise ValueError(f"unexpected CSV header in {csv_path}")
        for rec in reader:
            rows.append(ResultRow(**{f: conv(f, rec[f]) for f in CSV_FIELDS}))
    return rows
