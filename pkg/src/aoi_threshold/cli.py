"""Command-line interface.

Subcommands ``solve``, ``simulate``, ``sweep`` and ``table1`` write CSV or
JSON rows. Output depends only on the flags and the seed.

Exit codes: 0 success, 2 bad arguments, 3 a Monte Carlo solve did not reach
its confidence target (rows are still written), 4 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from .core_model import EnergyCausalityError, RechargeModel
from .epoch import EpochCapExceeded, SolveBudget, generic_solve
from .ibr import solve_ibr
from .rbr import MAX_BATTERY, solve_rbr
from .sim import (
    POLICY_NAMES,
    InvariantViolation,
    MarkovOnOff,
    OptimalThreshold,
    Poisson,
    baseline_policy,
    monte_carlo,
)

SIM_FIELDS = ("model", "B", "policy", "arrival", "q0", "q1", "T", "replicates", "seed", "avg_age", "ci95")
SOLVE_FIELDS = ("model", "B", "method", "lambda_star", "thresholds", "residual", "iterations", "ci95", "converged")

EXIT_OK, EXIT_ARGS, EXIT_NONCONVERGED, EXIT_INVARIANT = 0, 2, 3, 4

# Table 1 layout: (model, B) columns by arrival rows
TABLE1_SETTINGS = (("rbr", 1), ("rbr", 4), ("ibr", 4))
TABLE1_ARRIVALS = (None, 0.1, 0.5, 1.0)


class _ArgumentError(Exception):
    pass


class _Context:
    """Solver cache plus a flag raised by any non-converged solve."""

    def __init__(self, args):
        self.args = args
        self.nonconverged = False
        self._solutions = {}

    def solve(self, model: str, B: int, generic: bool = False):
        key = (model, B, generic)
        if key not in self._solutions:
            self._solutions[key] = self._solve(model, B, generic)
        sol = self._solutions[key]
        if not sol.converged:
            self.nonconverged = True
        return sol

    def _solve(self, model, B, generic):
        a = self.args
        if generic or (model == "ibr" and B not in (1, 4)):
            budget = SolveBudget(n_epochs=a.solve_epochs) if a.solve_epochs else None
            return generic_solve(model, B, budget, seed=a.seed)
        if model == "rbr":
            return solve_rbr(B, a.tol)
        return solve_ibr(B, a.tol)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def _emit(rows: list[dict], fields: Sequence[str], fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps([{k: r[k] for k in fields} for r in rows], indent=2))
        out.write("\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in fields])
    out.write(buf.getvalue())


# --------------------------------------------------------------------------
# row builders


def _solve_row(model: str, B: int, sol) -> dict:
    return {
        "model": model,
        "B": B,
        "method": sol.source,
        "lambda_star": float(sol.lambda_star),
        "thresholds": [float(x) for x in sol.thresholds],
        "residual": float(sol.residual),
        "iterations": int(sol.iterations),
        "ci95": float(sol.ci95),
        "converged": bool(sol.converged),
    }


def _arrival(args_q0, args_q1):
    if args_q0 is None:
        return Poisson()
    return MarkovOnOff(args_q0, args_q1)


def _sim_row(ctx: _Context, model: str, B: int, policy: str, q0, q1) -> dict:
    a = ctx.args
    proc = _arrival(q0, q1)
    if policy == "optimal":
        spec = OptimalThreshold(ctx.solve(model, B, getattr(a, "generic", False)).policy())
    else:
        spec = baseline_policy(policy, model, B)
    res = monte_carlo(model, B, spec, proc, a.horizon, a.replicates, a.seed)
    return {
        "model": model,
        "B": B,
        "policy": policy,
        "arrival": proc.label,
        "q0": q0,
        "q1": q1,
        "T": float(a.horizon),
        "replicates": a.replicates,
        "seed": a.seed,
        "avg_age": res.avg_age,
        "ci95": res.ci95_halfwidth,
    }


# --------------------------------------------------------------------------
# commands


def _markov_params(args):
    q0, q1 = args.q0, args.q1
    if args.q is not None:
        if q0 is not None or q1 is not None:
            raise _ArgumentError("--q cannot be combined with --q0/--q1")
        q0 = q1 = args.q
    if args.arrivals == "markov":
        if q0 is None or q1 is None:
            raise _ArgumentError("markov arrivals need --q or both --q0 and --q1")
        for name, q in (("q0", q0), ("q1", q1)):
            if not 0 < q <= 1:
                raise _ArgumentError(f"{name} must be in (0, 1]")
        return q0, q1
    if q0 is not None or q1 is not None:
        raise _ArgumentError("--q/--q0/--q1 apply to markov arrivals only")
    return None, None


def cmd_solve(args, ctx) -> list[dict]:
    if args.model == "ibr" and args.battery not in (1, 2, 3, 4) and not args.generic:
        raise _ArgumentError("IBR closed forms cover B in {1, 2, 3, 4}; pass --generic for other sizes")
    sol = ctx.solve(args.model, args.battery, args.generic)
    return [_solve_row(args.model, args.battery, sol)]


def cmd_simulate(args, ctx) -> list[dict]:
    q0, q1 = _markov_params(args)
    return [_sim_row(ctx, args.model, args.battery, args.policy, q0, q1)]


def cmd_sweep(args, ctx) -> list[dict]:
    q0, q1 = _markov_params(args)
    return [
        _sim_row(ctx, args.model, B, pol, q0, q1)
        for B in args.batteries
        for pol in args.policies
    ]


def cmd_table1(args, ctx) -> list[dict]:
    rows = []
    for q in TABLE1_ARRIVALS:
        for model, B in TABLE1_SETTINGS:
            if q is None and not args.simulate_all:
                sol = ctx.solve(model, B)
                rows.append({
                    "model": model, "B": B, "policy": "optimal", "arrival": "poisson",
                    "q0": None, "q1": None, "T": None, "replicates": 0,
                    "seed": args.seed, "avg_age": float(sol.lambda_star), "ci95": 0.0,
                })
            else:
                rows.append(_sim_row(ctx, model, B, "optimal", q, q))
    return rows


# --------------------------------------------------------------------------
# parser


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}")
    return v


def _battery(s: str) -> int:
    v = _positive_int(s)
    if v > MAX_BATTERY:
        raise argparse.ArgumentTypeError(f"battery size must be at most {MAX_BATTERY}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not (v > 0 and v < float("inf")):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {s!r}")
    return v


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _q(s: str) -> float:
    v = float(s)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"switch probability must be in (0, 1], got {s!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="root seed (default 0)")
    common.add_argument("--tol", type=_positive_float, default=1e-9, help="solver residual tolerance")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default="-", help="output path (default stdout)")
    common.add_argument(
        "--solve-epochs", type=_positive_int, default=None,
        help="epochs (or simulated time) per evaluation in Monte Carlo solves",
    )

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--arrivals", choices=("poisson", "markov"), default="poisson")
    sim.add_argument("--q", type=_q, default=None, help="set q0 = q1")
    sim.add_argument("--q0", type=_q, default=None, help="ON to OFF switch probability")
    sim.add_argument("--q1", type=_q, default=None, help="OFF to ON switch probability")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--horizon", "-T", type=_positive_float, default=1000.0)
    runs.add_argument("--replicates", type=_positive_int, default=1000)

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", choices=("rbr", "ibr"), required=True)

    p = argparse.ArgumentParser(prog="aoi-threshold", description="Age-optimal threshold policies for energy-harvesting sensors.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common, model], help="optimal threshold policy")
    s.add_argument("--battery", "-B", type=_battery, required=True)
    s.add_argument("--generic", action="store_true", help="use the Monte Carlo optimizer")
    s.set_defaults(func=cmd_solve, fields=SOLVE_FIELDS)

    s = sub.add_parser("simulate", parents=[common, model, sim, runs], help="long-horizon simulation of one policy")
    s.add_argument("--battery", "-B", type=_battery, required=True)
    s.add_argument("--policy", choices=POLICY_NAMES, default="optimal")
    s.add_argument("--generic", action="store_true", help="solve the optimal policy by Monte Carlo")
    s.set_defaults(func=cmd_simulate, fields=SIM_FIELDS)

    s = sub.add_parser("sweep", parents=[common, model, sim, runs], help="simulate several sizes and policies")
    s.add_argument("--batteries", "-B", type=_battery, nargs="+", required=True)
    s.add_argument("--policies", choices=POLICY_NAMES, nargs="+", default=list(POLICY_NAMES))
    s.set_defaults(func=cmd_sweep, fields=SIM_FIELDS)

    s = sub.add_parser("table1", parents=[common, runs], help="optimal policies under Poisson and Markov arrivals")
    s.add_argument("--simulate-all", action="store_true", help="simulate the Poisson row as well")
    s.set_defaults(func=cmd_table1, fields=SIM_FIELDS)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    ctx = _Context(args)
    try:
        rows = args.func(args, ctx)
    except _ArgumentError as e:
        parser.error(str(e))
    except (InvariantViolation, EnergyCausalityError, EpochCapExceeded) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVARIANT

    if args.out == "-":
        _emit(rows, args.fields, args.format, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            _emit(rows, args.fields, args.format, fh)
    if ctx.nonconverged:
        print("warning: Monte Carlo solve did not reach its confidence target", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
