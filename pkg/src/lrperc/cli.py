"""Command line entry point: ``lrperc <command> ...``.

Parameter files are flat ``key = value`` lines (``#`` starts a comment). Output is
JSON on stdout unless ``-o/--out`` names a file; experiment reports ending in
``.csv`` are written as CSV. Exit status: 0 success, 1 domain error, 2 usage.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .config import read_configuration, sample_configuration, write_configuration
from .errors import AdjustmentDidNotConverge, DomainError, LrpercError
from .experiments import EXPERIMENTS, reports_to_csv
from .fk import Boundary, HeatBathChain, edge_state_table, fk_exact_tiny, total_variation
from .params import ModelParams, ScaleParams, check_feasibility, p_threshold
from .renorm import run_renormalization

FLOAT_KEYS = {"beta", "p", "kappa", "alpha", "alpha_prime", "delta", "eta"}
INT_KEYS = {"l1", "M", "L"}
DEFAULT_SCALES = {"alpha": 1.5, "alpha_prime": 1.4, "delta": 2.1, "l1": 10}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        vals = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"line {n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in FLOAT_KEYS:
                vals[key] = float(val)
            elif key in INT_KEYS:
                vals[key] = int(val)
            else:
                raise DomainError(f"line {n}: unknown key {key!r}")
        return cls(vals)

    @classmethod
    def load(cls, path) -> "RunConfig":
        if path is None:
            return cls()
        try:
            return cls.from_text(Path(path).read_text())
        except ValueError as exc:
            raise DomainError(str(exc)) from exc

    def need(self, *keys):
        missing = [k for k in keys if k not in self.values]
        if missing:
            raise DomainError(f"missing parameters: {', '.join(missing)}")
        return [self.values[k] for k in keys]

    def model(self) -> ModelParams:
        beta, p = self.need("beta", "p")
        return ModelParams(beta, p, self.values.get("kappa", 1.0))

    def scales(self, L: int | None = None) -> ScaleParams:
        v = {**DEFAULT_SCALES, **self.values}
        if "M" not in v:
            v["M"] = _infer_levels(v, L)
        return ScaleParams(v["alpha"], v["alpha_prime"], v["delta"], v["l1"], v["M"],
                           v.get("eta", 0.05))


def _infer_levels(v: dict, L: int | None) -> int:
    if L is None:
        raise DomainError("missing parameter M")
    for M in range(1, 12):
        sc = ScaleParams(v["alpha"], v["alpha_prime"], v["delta"], v["l1"], M)
        if sc.L == L:
            return M
        if sc.L > L:
            break
    raise DomainError(f"L={L} is not on the scale ladder from l1={v['l1']}, alpha={v['alpha']}")


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _seed(args) -> int:
    env = os.environ.get("LRPERC_SEED")
    return int(env) if env not in (None, "") else int(args.seed)


def cmd_params(args) -> int:
    cfg = RunConfig.load(args.config)
    beta, alpha, alpha_prime, delta = cfg.need("beta", "alpha", "alpha_prime", "delta")
    rep = check_feasibility(beta, alpha, alpha_prime, delta, cfg.values.get("eta", 0.05))
    out = rep.to_dict()
    if "l1" in cfg.values:
        out["p_threshold"] = p_threshold(cfg.values.get("kappa", 1.0), cfg.values["l1"], delta)
    if "l1" in cfg.values and "M" in cfg.values:
        sc = cfg.scales()
        out["scales"] = list(sc.scales)
        out["bridge_caps"] = [sc.bridge_cap(k) for k in range(1, sc.M + 1)]
    _emit(_dumps(out), args.out)
    return 0


def cmd_sample(args) -> int:
    cfg = RunConfig.load(args.config)
    model = cfg.model()
    L = args.L if args.L is not None else cfg.values.get("L") or cfg.scales().L
    config = sample_configuration(model, L, _seed(args), mode=args.mode)
    if args.out:
        write_configuration(config, args.out)
    else:
        sys.stdout.write(config.to_text())
    return 0


def cmd_analyze(args) -> int:
    config = read_configuration(args.input)
    scales = RunConfig.load(args.config).scales(config.L)
    it = run_renormalization(config, scales)
    _emit(it.to_json(), args.out)
    return 0


def cmd_experiment(args) -> int:
    cfg = RunConfig.load(args.config)
    model = cfg.model()
    scales = cfg.scales(cfg.values.get("L"))
    fn = EXPERIMENTS[args.name]
    kw = {"threads": args.threads}
    if args.name in ("defect", "repair"):
        kw["k"] = args.level
    if args.name == "repair" and args.min_events:
        kw["min_events"] = args.min_events
    rep = fn(model, scales, trials=args.trials, seed=_seed(args), **kw)
    if args.out and str(args.out).endswith(".csv"):
        _emit(reports_to_csv([rep]), args.out)
    else:
        _emit(rep.to_json(), args.out)
    return 0


def cmd_oracle(args) -> int:
    model = RunConfig.load(args.config).model()
    tiny = fk_exact_tiny(model, tuple(args.interval), Boundary(args.boundary))
    a, b = args.interval
    out = {
        "interval": [a, b],
        "boundary": args.boundary,
        "params": model.echo(),
        "edges": [[x, y] for x, y in tiny.edges],
        "marginals": [float(v) for v in tiny.marginals()],
        "connection_probability": tiny.connection_probability(a, b),
    }
    if args.sweeps:
        if (b - a) % 2:
            raise DomainError("the heat-bath comparison needs an interval with an odd vertex count")
        chain = HeatBathChain(model, (b - a) // 2, Boundary(args.boundary), _seed(args))
        hist = chain.run(args.sweeps, record=True)
        emp = hist / hist.sum()
        out["mcmc"] = {
            "sweeps": args.sweeps,
            "marginals": [float(v) for v in emp @ edge_state_table(len(tiny.edges))],
            "total_variation": total_variation(emp, tiny.as_vector()),
        }
    _emit(_dumps(out), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrperc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="parameter checks")
    psub = p.add_subparsers(dest="action", required=True)
    pc = psub.add_parser("check", help="feasibility of (beta, alpha, alpha', delta)")
    pc.add_argument("-c", "--config", required=True)
    pc.add_argument("-o", "--out")
    pc.set_defaults(func=cmd_params)

    s = sub.add_parser("sample", help="draw a configuration")
    s.add_argument("-c", "--config", required=True)
    s.add_argument("--L", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=["skip", "naive"], default="skip")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("analyze", help="renormalise a configuration file")
    a.add_argument("-i", "--input", required=True)
    a.add_argument("-c", "--config")
    a.add_argument("-o", "--out")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("experiment", help="Monte Carlo estimates")
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("-c", "--config", required=True)
    e.add_argument("--trials", type=int, default=1000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--threads", type=int, default=1)
    e.add_argument("--level", type=int, default=1)
    e.add_argument("--min-events", type=int)
    e.add_argument("-o", "--out")
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", help="exact laws on tiny volumes")
    osub = o.add_subparsers(dest="action", required=True)
    ot = osub.add_parser("tiny", help="exact FK law on an interval")
    ot.add_argument("-c", "--config", required=True)
    ot.add_argument("--interval", type=int, nargs=2, default=[0, 2], metavar=("A", "B"))
    ot.add_argument("--boundary", choices=[b.value for b in Boundary], default="free")
    ot.add_argument("--sweeps", type=int, default=0,
                    help="also run a heat-bath chain for this many sweeps and compare")
    ot.add_argument("--seed", type=int, default=0)
    ot.add_argument("-o", "--out")
    ot.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (LrpercError, AdjustmentDidNotConverge, OSError) as exc:
        print(f"lrperc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
