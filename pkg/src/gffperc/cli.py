"""Command-line interface.

    gffperc <subcommand> --config <file> [--seed S] [--replicas R] [--out DIR]

Config files are flat ``key = value`` text with keys matching the
experiment spec fields; comma-separated lists for N, n, chi, x, y.
GFFPERC_SEED in the environment overrides the config seed; an explicit
--seed flag beats both.  Exit codes: 0 success, 2 bad spec, 3 partial
results.
"""

import argparse
import csv
import os
import struct
import sys

import numpy as np

from .experiments import (ExperimentSpec, SpecError, emit_results,
                          run_experiment)
from .gff import make_sampler
from .lattice import euclidean_ball, make_box
from .potential import arcsin_two_point, hitting_probability, killed_green

_SUBCOMMAND_OBSERVABLE = {
    "two-point": "two_point",
    "one-arm": "one_arm",
    "crossing": "crossing",
    "mindist": "mindist_cdf",
    "pivotal": "pivotal",
    "hetero": "heterochromatic",
}

_LIST_INT = ("N", "n", "x", "y")
_LIST_FLOAT = ("chi",)
_SCALAR = {"observable": str, "d": int, "delta": float, "k": int, "pad": float,
           "seed": int, "replicas": int, "level": float, "nested": bool,
           "out": str}


def _parse_config(path):
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpecError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


def _coerce(key, val):
    if key in _LIST_INT:
        return tuple(int(v) for v in str(val).split(",") if str(v).strip())
    if key in _LIST_FLOAT:
        return tuple(float(v) for v in str(val).split(",") if str(v).strip())
    if key in _SCALAR:
        typ = _SCALAR[key]
        if typ is bool:
            return str(val).strip().lower() in ("1", "true", "yes", "on")
        if key == "delta" and str(val).strip().lower() in ("", "none", "auto"):
            return None
        return typ(val)
    raise SpecError(f"unknown config key {key!r}")


def _build_spec(observable, args):
    fields = {}
    if args.config:
        for key, val in _parse_config(args.config).items():
            fields[key] = _coerce(key, val)
    fields["observable"] = observable or fields.get("observable")
    if fields["observable"] is None:
        raise SpecError("config must set 'observable' when using the run subcommand")
    env_seed = os.environ.get("GFFPERC_SEED")
    if env_seed is not None:
        fields["seed"] = int(env_seed)
    for key in ("d", "delta", "k", "pad", "replicas", "level", "seed", "out"):
        flag = getattr(args, key, None)
        if flag is not None:
            fields[key] = flag
    for key in ("N", "n", "x", "y", "chi"):
        flag = getattr(args, key, None)
        if flag is not None:
            fields[key] = _coerce(key, flag)
    if getattr(args, "nested", False):
        fields["nested"] = True
    if getattr(args, "auto_delta", False):
        fields["delta"] = None
    return ExperimentSpec(**fields).validate()


def _add_common(p, with_pairs=False):
    p.add_argument("--config", help="flat key = value spec file")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--N", default=None, help="comma-separated radii")
    p.add_argument("--n", default=None, help="comma-separated inner radii (crossing)")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--auto-delta", action="store_true",
                   help="tune delta from a pilot run (mindist)")
    p.add_argument("--chi", default=None, help="comma-separated distance grid")
    p.add_argument("--k", type=int, default=None, help="interior resolution")
    p.add_argument("--pad", type=float, default=None)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--nested", action="store_true",
                   help="evaluate all N on shared configurations (one-arm)")
    p.add_argument("--out", default=None, help="output directory")
    if with_pairs:
        p.add_argument("--x", default=None, help="first vertex, comma-separated")
        p.add_argument("--y", default=None, help="second vertex, comma-separated")


def _cmd_experiment(observable, args):
    spec = _build_spec(observable, args)
    result = run_experiment(spec)
    outdir = spec.out or "."
    paths = emit_results(result, outdir)
    for p in paths:
        print(p)
    if result.fit:
        print(f"fitted slope: {result.fit.slope:.4f} "
              f"[{result.fit.ci_low:.4f}, {result.fit.ci_high:.4f}]")
    return 3 if result.partial else 0


def _cmd_greens(args):
    box = make_box(args.d, args.N, args.pad)
    absorbing = np.zeros(box.n_vertices, dtype=bool)
    absorbing[box.shell()] = True
    for r in args.absorb_ball or []:
        absorbing[euclidean_ball(box, float(r))] = True
    for spec in args.absorb_point or []:
        absorbing[box.index(tuple(int(c) for c in spec.split(",")))] = True
    g = killed_green(box, absorbing)
    writer = csv.writer(sys.stdout)
    writer.writerow(["x", "y", "G_D", "hitting", "arcsin_pred"])
    for pair in args.pairs.split(";"):
        xs, ys = pair.split(":")
        x = int(box.index(tuple(int(c) for c in xs.split(","))))
        y = int(box.index(tuple(int(c) for c in ys.split(","))))
        writer.writerow([xs, ys, repr(g.green(x, y)),
                         repr(hitting_probability(g, x, y)),
                         repr(arcsin_two_point(g, x, y)) if x != y else ""])
    return 0


def _cmd_sample(args):
    box = make_box(args.d, args.N, args.pad)
    sampler = make_sampler(box)
    seed = int(os.environ.get("GFFPERC_SEED", args.seed))
    with open(args.out, "wb") as fh:
        fh.write(struct.pack("<3q", box.d, box.side, args.count))
        for r in range(args.count):
            f = sampler.sample(seed, r)
            fh.write(f.values.astype("<f8").tobytes())
    print(f"{args.out}: {args.count} fields on side {box.side} (d={box.d})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gffperc",
                                     description="GFF metric-graph percolation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("run", *_SUBCOMMAND_OBSERVABLE):
        p = sub.add_parser(name)
        _add_common(p, with_pairs=name in ("run", "two-point"))

    g = sub.add_parser("greens", help="killed Green's function queries")
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--pad", type=float, default=1.0)
    g.add_argument("--absorb-ball", action="append", default=None,
                   help="add a euclidean ball of this radius to D")
    g.add_argument("--absorb-point", action="append", default=None,
                   help="add one vertex (comma-separated coords) to D")
    g.add_argument("--pairs", required=True,
                   help="semicolon-separated 'x1,x2,..:y1,y2,..' query pairs")

    s = sub.add_parser("sample", help="dump raw DGFF fields (flat binary)")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--pad", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "greens":
            return _cmd_greens(args)
        if args.command == "sample":
            return _cmd_sample(args)
        observable = _SUBCOMMAND_OBSERVABLE.get(args.command)
        return _cmd_experiment(observable, args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
