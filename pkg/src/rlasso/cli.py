"""Command line entry point: ``rlasso <subcommand> ...``.

Exit codes: 0 on success, 2 for bad input or configuration, 3 when a
numerical routine fails (infeasible program, NSP violation, singular
matrix, bisection without a bracket).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench, core, ensembles, oracle, solvers, tuning
from .errors import BudgetExceeded, ConfigError, DimensionError, DomainError, RlassoError, UnsupportedNormError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _emit(obj) -> None:
    print(json.dumps(obj, allow_nan=True))


def cmd_gen_matrix(args) -> None:
    if args.ensemble == "gaussian":
        A = ensembles.gaussian_matrix(args.m, args.n, args.seed)
    else:
        if args.d is None:
            raise ConfigError("--d is required for the lrbg ensemble", field="d")
        A = ensembles.lrbg_matrix(ensembles.GraphSpec(args.m, args.n, args.d), args.seed)
    core.write_matrix(A, args.out)


def cmd_solve(args) -> None:
    A = core.read_matrix(args.matrix)
    y = core.read_vector(args.y)
    cfg = solvers.SolverConfig(max_iter=args.max_iter, tol=args.tol)

    def need(name):
        v = getattr(args, name)
        if v is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required for decoder {args.decoder}", field=name)
        return v

    if args.decoder == "rlasso":
        sol = solvers.solve_rlasso(A, y, need("lam"), args.q, cfg)
    elif args.decoder == "bp":
        sol = solvers.solve_bp(A, y, cfg)
    elif args.decoder == "bpdn":
        sol = solvers.solve_bpdn(A, y, need("epsilon"), args.q, cfg)
    else:
        sol = solvers.solve_clr(A, y, need("tau_budget"), args.q, cfg)
    if args.out:
        core.write_vector(sol.x_hat, args.out)
    _emit({"objective": sol.objective, "residual": sol.residual_norm, "l1_norm": sol.l1_norm,
           "iterations": sol.iterations, "gap": sol.gap, "status": sol.status.value})


def cmd_tune(args) -> None:
    def need(name):
        v = getattr(args, name)
        if v is None:
            raise ConfigError(f"--{name} is required for rule {args.rule}", field=name)
        return v

    if args.rule == "lambda-inf":
        A = core.read_matrix(need("matrix"))
        _emit(tuning.lambda_infinity_report(A, args.p).to_dict())
        return
    for S in need("s"):
        if args.rule == "gaussian":
            rep = tuning.gaussian_lambda(need("m"), need("n"), S, need("rho"), args.eta)
        elif args.rule == "expander":
            rep = tuning.expander_report(args.theta, need("n"), S)
        else:
            c = tuning.NspConstants(args.q, S, need("rho"), need("tau"))
            rep = tuning.eq1_lambda(c)
        _emit(rep.to_dict())


def cmd_nsp_oracle(args) -> None:
    A = core.read_matrix(args.matrix)
    res = oracle.nsp_shape_constant_l1(A, args.s)
    out = res.to_dict()
    if args.empirical:
        out["empirical_tau10"] = oracle.empirical_tau10(A, args.s, args.q, args.tol)
        out["q"] = args.q
    _emit(out)


def cmd_experiment(args) -> None:
    cfg = bench.read_config(args.config)
    records = bench.run_experiment(cfg, threads=args.threads)
    bench.write_csv(records, args.out, timing=not args.no_timing)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rlasso", description="rLASSO decoders, tuning rules and experiments")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-matrix", help="draw a random measurement matrix")
    g.add_argument("--ensemble", choices=("gaussian", "lrbg"), required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_matrix)

    s = sub.add_parser("solve", help="run one decoder")
    s.add_argument("--decoder", choices=bench.DECODERS, default="rlasso")
    s.add_argument("--q", type=float, choices=(1.0, 2.0), default=2.0)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--tau-budget", dest="tau_budget", type=float)
    s.add_argument("--matrix", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--out")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=50000)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("tune", help="evaluate a tuning rule")
    t.add_argument("--rule", choices=("gaussian", "expander", "eq1", "lambda-inf"), required=True)
    t.add_argument("--m", type=int)
    t.add_argument("--n", type=int)
    t.add_argument("--s", type=int, nargs="+", help="one output line per value")
    t.add_argument("--rho", type=float)
    t.add_argument("--eta", type=float, default=0.5)
    t.add_argument("--theta", type=float, default=0.1)
    t.add_argument("--tau", type=float)
    t.add_argument("--q", type=float, default=2.0)
    t.add_argument("--p", type=float, choices=(1.0, 2.0), default=2.0)
    t.add_argument("--matrix")
    t.set_defaults(func=cmd_tune)

    o = sub.add_parser("nsp-oracle", help="exact l1 NSP shape constant of a small matrix")
    o.add_argument("--matrix", required=True)
    o.add_argument("--s", type=int, required=True)
    o.add_argument("--empirical", action="store_true", help="also bisect on lambda with the solver")
    o.add_argument("--q", type=float, choices=(1.0, 2.0), default=1.0)
    o.add_argument("--tol", type=float, default=1e-3)
    o.set_defaults(func=cmd_nsp_oracle)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--threads", type=int, default=1)
    e.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for reproducible bytes")
    e.set_defaults(func=cmd_experiment)
    return p


_INPUT_ERRORS = (ConfigError, DomainError, DimensionError, UnsupportedNormError, BudgetExceeded, OSError, ValueError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except np.linalg.LinAlgError as exc:
        # a ValueError subclass, but a numerical failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RlassoError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
