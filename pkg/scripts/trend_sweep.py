"""Span and origin-reach frequencies over a (p, beta) grid at L = 150.

    python scripts/trend_sweep.py --trials 20000 --out trends.csv
"""
import argparse
import sys

from lrperc.experiments import (estimate_origin_percolation, estimate_span_probability,
                                reports_to_csv)
from lrperc.params import ModelParams, ScaleParams


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, nargs="+", default=[0.9, 0.95, 0.99, 0.999])
    ap.add_argument("--beta", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--l1", type=int, default=10)
    ap.add_argument("--M", type=int, default=3)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    scales = ScaleParams(1.5, 1.4, 2.1, args.l1, args.M)
    reports = []
    for beta in args.beta:
        for p in args.p:
            model = ModelParams(beta, p)
            for fn in (estimate_span_probability, estimate_origin_percolation):
                rep = fn(model, scales, trials=args.trials, seed=args.seed, threads=args.threads)
                rep.params_echo["L"] = scales.L
                reports.append(rep)
                print(f"{rep.name:6s} beta={beta:<4} p={p:<6} {rep.estimate:.6f} "
                      f"[{rep.ci_low:.6f}, {rep.ci_high:.6f}]", file=sys.stderr)
    text = reports_to_csv(reports)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
