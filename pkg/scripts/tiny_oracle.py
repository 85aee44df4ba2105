"""Exact FK law on three vertices against the heat-bath chain, for several kappa.

    python scripts/tiny_oracle.py --sweeps 1000000
"""
import argparse
import json

from lrperc.fk import HeatBathChain, edge_state_table, fk_exact_tiny, total_variation
from lrperc.params import ModelParams


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kappa", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    ap.add_argument("--p", type=float, default=0.6)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--sweeps", type=int, default=10 ** 6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rows = []
    for kappa in args.kappa:
        model = ModelParams(args.beta, args.p, kappa)
        for boundary in ("free", "wired"):
            exact = fk_exact_tiny(model, (-1, 1), boundary)
            chain = HeatBathChain(model, 1, boundary, args.seed)
            hist = chain.run(args.sweeps, record=True)
            emp = hist / hist.sum()
            rows.append({
                "kappa": kappa,
                "boundary": boundary,
                "tv": total_variation(emp, exact.as_vector()),
                "exact_marginals": exact.marginals().round(6).tolist(),
                "mcmc_marginals": (emp @ edge_state_table(len(exact.edges))).round(6).tolist(),
                "connect_ends": exact.connection_probability(-1, 1),
            })
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
