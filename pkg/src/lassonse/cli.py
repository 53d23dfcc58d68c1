"""Command-line entry point: ``lassonse <command> [options]``.

Commands print JSON to stdout (or ``--out``); ``sweep`` writes CSV or JSON.
Exit status: 0 on success, 2 on a configuration error, 3 when ``--strict``
is given and a solver failed to converge.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import geometry, gordon, harness, regimes, solvers
from .models import DimensionError, make_model, model_from_dict

EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3


def _model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--model-json", help="model as JSON text or a path to a JSON file")
    g.add_argument("--kind", choices=["sparse", "lowrank", "blocksparse"], default="sparse")
    for name in ("n", "k", "d", "r", "t", "b"):
        g.add_argument(f"--{name}", type=int)
    g.add_argument("--model-seed", type=int, default=0)


def _global_args(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=["csv", "json"], default=None)


def _load_model(args):
    if args.model_json:
        text = args.model_json
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        return model_from_dict(text)
    dims = {k: getattr(args, k) for k in ("n", "k", "d", "r", "t", "b")
            if getattr(args, k) is not None}
    return make_model(args.kind, dims, seed=args.model_seed)


def _sigma(args):
    if args.sigma2 is None:
        raise harness.ConfigError("--sigma2 is required")
    return math.sqrt(args.sigma2)


def _emit(obj, args):
    text = json.dumps(obj, indent=1, default=_json_default)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def cmd_geometry(args):
    model = _load_model(args)
    if args.cone:
        _emit(geometry.mc_cone(model, args.samples, args.seed).to_dict(), args)
        return 0
    if args.lam is None:
        raise harness.ConfigError("--lambda is required (or pass --cone)")
    if args.method == "closed":
        summary = geometry.closed_form_summary(model, args.lam)
    else:
        summary = geometry.mc_summary(model, args.lam, args.samples, args.seed)
    _emit(summary.to_dict(), args)
    return 0


def cmd_regimes(args):
    model = _load_model(args)
    rep = regimes.regime_report(model, args.m, source=args.source, samples=args.samples,
                                seed=args.seed)
    _emit(rep.to_dict(), args)
    return 0


def cmd_predict(args):
    if args.program == "ls":
        n = args.n if args.n is not None else _load_model(args).n
        _emit({"program": "ls", "nse": regimes.predict_nse_ls(n, args.m)}, args)
        return 0
    model = _load_model(args)
    rep = regimes.regime_report(model, args.m)
    if args.program == "classo":
        prog = regimes.Program.classo()
    elif args.program == "ell2":
        prog = regimes.Program.ell2(rep.lambda_best if args.lam is None else args.lam)
    else:
        prog = regimes.Program.ell22(regimes.tau_best(rep) if args.tau is None else args.tau)
    _emit(regimes.predict_nse(rep, model, prog, d_cone=args.d_cone).to_dict(), args)
    return 0


def cmd_solve(args):
    model = _load_model(args)
    inst = solvers.generate(model, args.m, _sigma(args), seed=args.seed)
    if args.program == "classo":
        res = solvers.solve_classo(inst, tol=args.tol)
    elif args.program == "ell2":
        if args.lam is None:
            raise harness.ConfigError("--lambda is required for ell2")
        res = solvers.solve_ell2(inst, args.lam)
    else:
        if args.tau is None:
            raise harness.ConfigError("--tau is required for ell22")
        res = solvers.solve_ell22(inst, args.tau, tol=args.tol)
    _emit(res.to_dict(with_x=args.with_x), args)
    if args.strict and not res.converged:
        return EXIT_NONCONVERGED
    return 0


def cmd_sweep(args):
    overrides = {
        "scenario": args.scenario, "kind": args.kind, "m": args.m, "trials": args.trials,
        "grid": args.grid, "sigma2": args.sigma2_list, "seed": args.seed,
        "threads": args.threads, "out": args.out, "format": args.format,
        **{k: getattr(args, k) for k in ("n", "k", "d", "r", "t", "b")},
    }
    if args.config:
        cfg = harness.load_config(args.config, overrides)
    else:
        cfg = harness._from_raw({k: v for k, v in overrides.items() if v is not None})
    rows = harness.run(cfg, write=bool(cfg.out))
    if not cfg.out:
        harness.write_csv(rows, sys.stdout)
    if args.strict and any(r.nonconverged for r in rows):
        return EXIT_NONCONVERGED
    return 0


def cmd_gordon(args):
    model = _load_model(args)
    if args.cone:
        D = geometry.mc_cone(model, args.samples, args.seed).D_cone
        scale = gordon.CONE
    else:
        if args.lam is None:
            raise harness.ConfigError("--lambda or --cone is required")
        D, scale = None, args.lam
    sigma = math.sqrt(args.sigma2) if args.sigma2 else 1.0
    _emit(gordon.concentration_experiment(model, args.m, scale, sigma, args.trials,
                                          args.seed, D=D), args)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="lassonse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geometry", help="D, C, P at a scale (or D_cone)")
    _model_args(p)
    _global_args(p)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--cone", action="store_true")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--method", choices=["closed", "mc"], default="closed")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("regimes", help="lambda_crit, lambda_best, lambda_max")
    _model_args(p)
    _global_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--source", choices=["closed", "mc"], default="closed")
    p.add_argument("--samples", type=int, default=400)
    p.set_defaults(func=cmd_regimes)

    p = sub.add_parser("predict", help="predicted NSE")
    _model_args(p)
    _global_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--program", choices=["classo", "ell2", "ell22", "ls"], required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--d-cone", type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("solve", help="solve one random instance")
    _model_args(p)
    _global_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--program", choices=["classo", "ell2", "ell22"], required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--with-x", action="store_true")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="simulation sweep against theory")
    p.add_argument("config", nargs="?", help="key = value config file")
    _global_args(p)
    p.add_argument("--scenario", choices=harness.SCENARIOS)
    p.add_argument("--kind", choices=["sparse", "lowrank", "blocksparse"])
    for name in ("n", "k", "d", "r", "t", "b", "m", "trials"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--grid", help="comma-separated values or auto:K")
    p.add_argument("--sigma2", dest="sigma2_list", help="comma-separated noise variances")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gordon", help="concentration of the key optimization")
    _model_args(p)
    _global_args(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--cone", action="store_true")
    p.add_argument("--sigma2", type=float)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_gordon)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, DimensionError, regimes.InsufficientMeasurements,
            regimes.DomainError, regimes.UnstableRegion, geometry.BoundNotApplicable,
            json.JSONDecodeError, OSError) as exc:
        print(f"lassonse: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
