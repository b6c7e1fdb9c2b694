"""Command-line entry point.

Subcommands mirror the library surface::

    propa space gen --kind path --length 400 --out space.json
    propa witness build --space space.json --radii 1:40 --out-dir witness/
    propa mixture construct --space space.json --radii 1:40 --I 3 \
        --t dyadic --eps dyadic --margin 60 --out recipe.json
    propa diag uniform --space space.json --kernel k.json --K 2 --nmax 20
    propa diag cesaro --space space.json --kernel k.json --pairs 1-2,3-4
    propa oracle collapse --space space.json --x0 0 --n 10
    propa run --config experiment.json

Exit codes: 0 success, 2 config/usage error, 3 selection exhaustion,
4 assertion (inequality) failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import diagnostics, mixture as mixture_mod
from .config import ConfigError, ExperimentConfig, fmt, run, write_csv
from .measures import Kernel
from .space import MetricSpace, gen_free_group_ball, gen_grid, gen_path
from .witness import WitnessSequence, build_ball_witness, variation_profile

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EXHAUSTION = 3
EXIT_ASSERTION = 4


def _parse_radii(text):
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",")]


def _parse_pairs(text):
    return [tuple(int(v) for v in p.split("-")) for p in text.split(",")]


def _emit(rows, header, out_path):
    if out_path:
        write_csv(out_path, header, rows)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(fmt(c) if isinstance(c, float) else str(c)
                           for c in row))


def build_parser():
    p = argparse.ArgumentParser(prog="propa")
    sub = p.add_subparsers(dest="group", required=True)

    sp = sub.add_parser("space").add_subparsers(dest="cmd", required=True)
    gen = sp.add_parser("gen")
    gen.add_argument("--kind", choices=("path", "grid", "tree"), required=True)
    gen.add_argument("--length", type=int)
    gen.add_argument("--dim", type=int)
    gen.add_argument("--side", type=int)
    gen.add_argument("--rank", type=int)
    gen.add_argument("--radius", type=int)
    gen.add_argument("--out", required=True)

    wp = sub.add_parser("witness").add_subparsers(dest="cmd", required=True)
    wb = wp.add_parser("build")
    wb.add_argument("--space", required=True)
    wb.add_argument("--radii", required=True)
    wb.add_argument("--margin", type=int, default=0)
    wb.add_argument("--K", type=int, default=2)
    wb.add_argument("--out-dir", required=True)

    mp = sub.add_parser("mixture").add_subparsers(dest="cmd", required=True)
    mc = mp.add_parser("construct")
    mc.add_argument("--space", required=True)
    mc.add_argument("--radii", required=True)
    mc.add_argument("--I", type=int, default=3)
    mc.add_argument("--t", default="dyadic")
    mc.add_argument("--eps", default="dyadic")
    mc.add_argument("--margin", type=int, default=0)
    mc.add_argument("--selection", choices=("strict", "best"), default="strict")
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--out", required=True)
    mc.add_argument("--kernel-out")

    dp = sub.add_parser("diag").add_subparsers(dest="cmd", required=True)
    du = dp.add_parser("uniform")
    du.add_argument("--space", required=True)
    du.add_argument("--kernel", required=True)
    du.add_argument("--K", type=int, required=True)
    du.add_argument("--nmax", type=int, required=True)
    du.add_argument("--margin", type=int, default=0)
    du.add_argument("--workers", type=int, default=1)
    du.add_argument("--out")
    dc = dp.add_parser("cesaro")
    dc.add_argument("--space", required=True)
    dc.add_argument("--kernel", required=True)
    dc.add_argument("--pairs", required=True)
    dc.add_argument("--nmax", type=int, required=True)
    dc.add_argument("--out")

    op = sub.add_parser("oracle").add_subparsers(dest="cmd", required=True)
    oc = op.add_parser("collapse")
    oc.add_argument("--space", required=True)
    oc.add_argument("--x0", type=int, default=0)
    oc.add_argument("--n", type=int, required=True)
    oc.add_argument("--emit", choices=("csv",), default="csv")
    oc.add_argument("--out")

    rp = sub.add_parser("run")
    rp.add_argument("--config", required=True)
    rp.add_argument("--seed", type=int)
    rp.add_argument("--workers", type=int)

    return p


def _cmd_space_gen(args):
    if args.kind == "path":
        if args.length is None:
            raise ConfigError("--kind path needs --length")
        space = gen_path(args.length)
    elif args.kind == "grid":
        if args.dim is None or args.side is None:
            raise ConfigError("--kind grid needs --dim and --side")
        space = gen_grid(args.dim, args.side)
    else:
        if args.rank is None or args.radius is None:
            raise ConfigError("--kind tree needs --rank and --radius")
        space = gen_free_group_ball(args.rank, args.radius)
    space.save(args.out)
    print(f"wrote {args.out}: {space.point_count} points")
    return EXIT_OK


def _cmd_witness_build(args):
    space = MetricSpace.load(args.space)
    radii = _parse_radii(args.radii)
    os.makedirs(args.out_dir, exist_ok=True)
    index = []
    var_rows = []
    for level, r in enumerate(radii):
        k = build_ball_witness(space, r)
        fname = f"level{level:03d}.json"
        k.save(os.path.join(args.out_dir, fname))
        index.append({"radius": int(r), "kernel": fname})
        var_rows.append((level, args.K,
                         variation_profile(k, space, args.K, margin=args.margin)))
    with open(os.path.join(args.out_dir, "witness.json"), "w") as fh:
        json.dump(index, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _emit(var_rows, ("level", "K", "sup_variation"), None)
    return EXIT_OK


def _cmd_mixture_construct(args):
    space = MetricSpace.load(args.space)
    radii = _parse_radii(args.radii)
    wit = WitnessSequence.from_ball_radii(space, radii, margin=args.margin)
    I = args.I
    t = mixture_mod.dyadic(I) if args.t == "dyadic" else [float(x) for x in args.t.split(",")]
    eps = mixture_mod.dyadic(I) if args.eps == "dyadic" else [float(x) for x in args.eps.split(",")]
    mk = mixture_mod.assemble(wit, t, eps, I, policy=args.selection,
                              workers=args.workers)
    with open(args.out, "w") as fh:
        json.dump(mk.recipe.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    if args.kernel_out:
        mk.kernel.save(args.kernel_out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_diag_uniform(args):
    space = MetricSpace.load(args.space)
    k = Kernel.load(space, args.kernel)
    rep = diagnostics.uniform_profile(k, space, args.K, args.nmax,
                                      margin=args.margin, workers=args.workers)
    _emit(rep.csv_rows(), ("criterion", "n", "K_or_pair", "value"), args.out)
    return EXIT_OK


def _cmd_diag_cesaro(args):
    space = MetricSpace.load(args.space)
    k = Kernel.load(space, args.kernel)
    rep = diagnostics.cesaro_profile(k, _parse_pairs(args.pairs), args.nmax)
    _emit(rep.csv_rows(), ("criterion", "n", "K_or_pair", "value"), args.out)
    return EXIT_OK


def _cmd_oracle_collapse(args):
    space = MetricSpace.load(args.space)
    rows = []
    for x in range(space.point_count):
        m = diagnostics.collapse_power_oracle(space, args.x0, x, args.n)
        for idx, val in zip(m.idx, m.val):
            rows.append((x, int(idx), float(val)))
    _emit(rows, ("x", "y", "prob"), args.out)
    return EXIT_OK


def _cmd_run(args):
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    code, summary = run(config)
    for entry in summary["inequalities"]:
        status = "PASS" if entry["pass"] else "FAIL"
        print(f"{status} {entry['name']}: lhs={fmt(entry['lhs'])} "
              f"rhs={fmt(entry['rhs'])}")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.group == "space":
            return _cmd_space_gen(args)
        if args.group == "witness":
            return _cmd_witness_build(args)
        if args.group == "mixture":
            return _cmd_mixture_construct(args)
        if args.group == "diag":
            return (_cmd_diag_uniform if args.cmd == "uniform"
                    else _cmd_diag_cesaro)(args)
        if args.group == "oracle":
            return _cmd_oracle_collapse(args)
        if args.group == "run":
            return _cmd_run(args)
        raise ConfigError(f"unknown command group {args.group}")
    except mixture_mod.SelectionExhausted as exc:
        print(f"selection exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTION
    except mixture_mod.BoundViolation as exc:
        print(f"inequality violated: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
