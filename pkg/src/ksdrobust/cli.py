"""Command line entry points: simulate, summarize, bench, estimate.

Examples
--------
::

    python3 -m ksdrobust simulate --p 30 --n 100 --eps 0.2 --gamma 0 \\
        --K 1:30 --reps 200 --variant both --spread all --out sweep.csv
    python3 -m ksdrobust summarize --in sweep.csv --thresholds 8 --out summary.csv
    python3 -m ksdrobust bench --reps 5 --out timing.csv
    python3 -m ksdrobust estimate --in data.csv --variant new --out est.json
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .datagen import SPREADS, read_csv
from .exceptions import KsdError
from .ksd import KsdConfig
from .rocke import RockeConfig


def parse_values(text: str) -> list[float]:
    """Comma list of numbers or inclusive ``start:stop[:step]`` ranges."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [float(b) for b in part.split(":")]
            if len(bits) not in (2, 3):
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1.0
            if step <= 0:
                raise argparse.ArgumentTypeError("range step must be positive")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            out.extend(start + step * i for i in range(max(count, 0)))
        else:
            out.append(float(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def parse_sizes(text: str) -> list[tuple[int, int]]:
    """``20x100,50x250`` -> ``[(20, 100), (50, 250)]``."""
    sizes = []
    for part in text.split(","):
        try:
            p, n = part.lower().split("x")
            sizes.append((int(p), int(n)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad size {part!r}, expected PxN") from None
    return sizes


def _variants(v):
    return ("new", "old") if v == "both" else (v,)


def cmd_simulate(args):
    cfg = harness.ExperimentConfig(
        p=args.p, n=args.n, eps=args.eps, gamma=args.gamma, K=args.K,
        variants=_variants(args.variant), reps=args.reps, seed=args.seed,
        chain=args.chain, spread=args.spread, rocke=args.rocke, cutoff=args.cutoff,
    )
    count = harness.write_records(harness.run_experiment(cfg), args.out)
    print(f"wrote {count} records to {args.out}")


def cmd_summarize(args):
    records = harness.read_records(args.inp)
    rows = harness.summarize(records, thresholds=args.thresholds)
    harness.write_rows(rows, args.out)
    if args.ordered:
        long = []
        for key, values in sorted(harness.ordered_d_sigma(records).items()):
            for rank, v in enumerate(values, 1):
                long.append(dict(zip(("p", "n", "eps", "gamma", "K", "variant"), key),
                                 rank=rank, d_sigma=float(v)))
        harness.write_rows(long, args.ordered)
    print(f"wrote {len(rows)} summary rows to {args.out}")


def cmd_bench(args):
    rows = harness.bench_timing(args.sizes, reps=args.reps, seed=args.seed, rocke=args.rocke)
    harness.write_rows(rows, args.out)
    for r in rows:
        print("p=%3d n=%5d  new %.3fs  old %.3fs  new/old %.3f"
              % (r["p"], r["n"], r["new"], r["old"], r["ratio"]))


def cmd_estimate(args):
    x = read_csv(args.inp)
    n, p = x.shape
    kcfg = KsdConfig(args.variant, cutoff=args.cutoff, seed=args.seed)
    rcfg = RockeConfig.efficient(n, p) if args.rocke == "efficient" else RockeConfig()
    est = harness.run_chain(x, kcfg, args.chain, rcfg)
    out = est.to_dict()
    out["chain"] = args.chain
    out["variant"] = args.variant
    if "scale" in est.diagnostics:
        out["s"] = float(est.diagnostics["scale"])
    text = json.dumps(out, indent=1)
    if args.out == "-":
        print(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")


def build_parser():
    ap = argparse.ArgumentParser(prog="ksdrobust", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo sweep over K, writes record CSV")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--eps", type=float, default=0.2)
    sim.add_argument("--gamma", type=float, default=0.0)
    sim.add_argument("--K", type=parse_values, default=[13.0],
                     help="list and/or inclusive ranges, e.g. 5,10 or 1:30")
    sim.add_argument("--reps", type=int, default=200)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--variant", choices=("old", "new", "both"), default="both")
    sim.add_argument("--chain", choices=harness.CHAINS, default="ksd+rocke")
    sim.add_argument("--spread", choices=SPREADS, default="first")
    sim.add_argument("--rocke", choices=harness.ROCKE_TUNINGS, default="efficient")
    sim.add_argument("--cutoff", type=float, default=4.0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    summ = sub.add_parser("summarize", help="per-cell statistics of a record CSV")
    summ.add_argument("--in", dest="inp", required=True)
    summ.add_argument("--thresholds", type=parse_values, default=[8.0])
    summ.add_argument("--out", required=True)
    summ.add_argument("--ordered", help="also write sorted d_sigma values here")
    summ.set_defaults(func=cmd_summarize)

    bench = sub.add_parser("bench", help="timing of the new and old chains")
    bench.add_argument("--sizes", type=parse_sizes, default=list(harness.BENCH_SIZES))
    bench.add_argument("--reps", type=int, default=5)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--rocke", choices=harness.ROCKE_TUNINGS, default="efficient")
    bench.add_argument("--out", required=True)
    bench.set_defaults(func=cmd_bench)

    est = sub.add_parser("estimate", help="robust estimate of a CSV data matrix, as JSON")
    est.add_argument("--in", dest="inp", required=True)
    est.add_argument("--variant", choices=("old", "new"), default="new")
    est.add_argument("--chain", choices=harness.CHAINS, default="ksd+rocke")
    est.add_argument("--rocke", choices=harness.ROCKE_TUNINGS, default="efficient")
    est.add_argument("--cutoff", type=float, default=4.0)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out", default="-")
    est.set_defaults(func=cmd_estimate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (KsdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
