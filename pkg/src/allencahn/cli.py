"""Command line entry point.

Exit codes: 0 success, 2 invalid config, 3 invariant violated in validated
mode, 4 numeric failure (non-finite values or a solver that did not converge).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .config import DtRule, load_config
from .errors import ConfigError, InvariantViolation, IterationFailure, NumericFailure, ParameterError
from .harness import compare, converge, write_run_outputs, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_NUMERIC = 4


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--allow-unsafe", action="store_true",
                   help="run even when the stability conditions fail; checks become reports")
    p.add_argument("--output-dir", help="directory for output files (overrides the config)")
    p.add_argument("--seed", type=int, help="seed for random initial data (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="allencahn", description="Allen-Cahn lattice solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a config file and print the derived parameters")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("run", help="run one simulation")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("converge", help="convergence study under grid refinement")
    p.add_argument("config")
    p.add_argument("--levels", type=int, default=None, help="number of halvings of dx")
    p.add_argument("--dt-rule", choices=[r.value for r in DtRule], default=None)
    _common(p)

    p = sub.add_parser("compare", help="run several configs on one problem side by side")
    p.add_argument("configs", nargs="+")
    _common(p)
    return parser


def _load(path, args):
    cfg = load_config(path, seed=args.seed, output_dir=args.output_dir)
    if args.allow_unsafe:
        cfg = replace(cfg, allow_unsafe=True)
    return cfg


def _dispatch(args) -> int:
    if args.command == "validate":
        cfg = _load(args.config, args)
        params = cfg.validate()
        print(json.dumps({
            "problem": cfg.problem.kind.value,
            "scheme": cfg.scheme.value,
            "grid": {"d": cfg.grid.d, "n": cfg.grid.n, "nbar": cfg.grid.nbar,
                     "dx": cfg.grid.dx, "bc": cfg.grid.bc.value},
            "dt": cfg.dt,
            "steps": cfg.n_steps,
            "eps_interface": params.eps_interface,
            "eps_ratio": params.eps_ratio,
            "omega1": params.omega1,
            "s": params.s,
            "dt_bound": params.dt_bound,
            "violations": list(params.violations),
        }, indent=2))
        return EXIT_OK

    if args.command == "run":
        cfg = _load(args.config, args)
        cfg.validate()
        result = simulate(cfg)
        out = write_run_outputs(result)
        print(json.dumps(result.summary(), indent=2))
        print(f"outputs in {out}", file=sys.stderr)
        if result.status == "invariant_violated":
            print(f"invariant violated: {result.message}", file=sys.stderr)
            return EXIT_INVARIANT
        if result.status == "numeric_failure":
            print(f"numeric failure: {result.message}", file=sys.stderr)
            return EXIT_NUMERIC
        return EXIT_OK

    if args.command == "converge":
        cfg = _load(args.config, args)
        cfg.validate()
        reports = converge(cfg, args.levels, args.dt_rule)
        print("dx,err_inf,err_l2,cr_inf,cr_l2")
        for r in reports:
            print(",".join("" if v is None else f"{v:.6g}" for v in (r.dx, r.err_inf, r.err_l2, r.cr_inf, r.cr_l2)))
        return EXIT_OK

    cfgs = [_load(path, args) for path in args.configs]
    for cfg in cfgs:
        cfg.validate()
    rows = compare(cfgs, out_dir=args.output_dir)
    print("scheme,dt,status,err_inf,max_abs_max,energy_monotone")
    for r in rows:
        err = "" if r.err_inf is None else f"{r.err_inf:.6g}"
        print(f"{r.scheme},{r.dt:.6g},{r.status},{err},{r.max_abs_max:.6g},{r.energy_monotone}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (NumericFailure, IterationFailure) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
