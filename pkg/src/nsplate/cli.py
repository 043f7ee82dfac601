"""Command line driver.

Subcommands: ``solve`` runs the manufactured test problem on one mesh,
``study`` runs the refinement study and writes the error table, and
``infsup`` prints the discrete inf-sup diagnostic.  Exit codes: 0 on
success, 2 for configuration/usage errors, 3 when the Picard loop fails
to converge, 4 on linear-solver failure, 1 for any other library error.
"""

import argparse
import contextlib
import sys
from pathlib import Path

from . import assembly, mms, reporting
from .errors import (
    ConfigError,
    NonconvergenceError,
    NSPlateError,
    SolverFailureError,
)
from .infsup import MAX_INFSUP_LEVEL, infsup_table
from .meshing import dump_mesh
from .solver import BENDING_SCALINGS, SolverConfig

DEFAULT_LEVELS = (4, 8, 16, 32, 64)


def _add_common(parser):
    parser.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="zeroth-order parameter (default 1)")
    parser.add_argument("--nu", type=float, default=1.0,
                        help="fluid viscosity (default 1)")
    parser.add_argument("--rho", type=float, default=1.0,
                        help="rotational inertia (default 1)")
    parser.add_argument("--iters", type=int, default=20,
                        help="maximum Picard sweeps (default 20)")
    parser.add_argument("--tol", type=float, default=1e-10,
                        help="relative successive-iterate tolerance")
    parser.add_argument("--bending-scaling", choices=BENDING_SCALINGS,
                        default="one-over-lambda",
                        help="scaling of the plate bending block")
    parser.add_argument("--log-json", type=Path, default=None, metavar="PATH",
                        help="write one JSON line per Picard sweep")


def _config(args):
    try:
        return SolverConfig(
            lam=args.lam, nu=args.nu, rho=args.rho,
            max_iterations=args.iters, picard_tol=args.tol,
            bending_scaling=args.bending_scaling,
        )
    except ConfigError:
        raise
    except Exception as exc:  # non-numeric values and similar
        raise ConfigError(str(exc)) from exc


def _parse_levels(text):
    try:
        levels = [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise ConfigError(f"could not parse level list {text!r}") from exc
    if not levels or any(n < 2 for n in levels):
        raise ConfigError("levels must be integers >= 2")
    return levels


@contextlib.contextmanager
def _json_log(path):
    if path is None:
        yield None
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii") as handle:
        yield handle


def _cmd_solve(args):
    if args.n < 2:
        raise ConfigError("--n must be at least 2")
    config = _config(args)
    with _json_log(args.log_json) as log:
        state, fluid, plate, problem = mms.solve_level(args.n, config=config, log=log)
    row = mms.compute_errors(state, problem, fluid, plate)
    print(f"level n={args.n} (h={fluid.h:g}), "
          f"{state.iterations} Picard sweeps, converged={state.converged}")
    print(f"  |grad e_u1| = {row.err_u1_h1:.6e}")
    print(f"  |grad e_u2| = {row.err_u2_h1:.6e}")
    print(f"  |e_p|       = {row.err_p_l2:.6e}")
    print(f"  |e_w1''|    = {row.err_w1_h2:.6e}")
    print(f"  multipliers: mu = {state.mu:.3e}, s = {state.s:.6f}")
    if args.dump_fields is not None:
        paths = reporting.write_fields(state, fluid, plate, args.dump_fields)
        paths += reporting.render_field_figures(state, fluid, plate,
                                                args.dump_fields, problem=problem)
        dump_mesh(fluid, Path(args.dump_fields) / "mesh.txt")
        for path in paths:
            print(f"  wrote {path}")
    if args.dump_matrices is not None:
        system = assembly.assemble_constant_matrices(fluid, plate)
        for path in assembly.dump_matrices(system, args.dump_matrices,
                                           blocks=args.blocks):
            print(f"  wrote {path}")
    return 0


def _cmd_study(args):
    levels = _parse_levels(args.levels)
    config = _config(args)
    with _json_log(args.log_json) as log:
        report = mms.run_convergence_study(levels, config=config, log=log)
    print(report.to_text(), end="")
    if args.out is not None:
        for path in reporting.write_study(report, args.out):
            print(f"wrote {path}")
    else:
        print(report.to_csv(), end="")
    return 3 if any(row.failed for row in report.rows) else 0


def _cmd_infsup(args):
    levels = _parse_levels(args.levels)
    if any(n > MAX_INFSUP_LEVEL for n in levels):
        raise ConfigError(f"inf-sup diagnostic is gated to n <= {MAX_INFSUP_LEVEL}")
    print(infsup_table(levels).to_text(), end="")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nsplate",
        description="Coupled cavity-flow / clamped-plate finite element solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the test problem on one mesh")
    p_solve.add_argument("--n", type=int, required=True,
                         help="subdivisions per side")
    _add_common(p_solve)
    p_solve.add_argument("--dump-fields", type=Path, default=None, metavar="DIR",
                         help="write field CSVs and figures into DIR")
    p_solve.add_argument("--dump-matrices", type=Path, default=None, metavar="DIR",
                         help="write assembled blocks in MatrixMarket format")
    p_solve.add_argument("--blocks", type=lambda s: s.split(","), default=None,
                         help="comma list of blocks for --dump-matrices")
    p_solve.set_defaults(func=_cmd_solve)

    p_study = sub.add_parser("study", help="run the refinement study")
    p_study.add_argument("--levels", default=",".join(map(str, DEFAULT_LEVELS)),
                         help="comma list of subdivision counts")
    _add_common(p_study)
    p_study.add_argument("--out", type=Path, default=None, metavar="PATH",
                         help="write the CSV (and a PNG alongside) to PATH")
    p_study.set_defaults(func=_cmd_study)

    p_inf = sub.add_parser("infsup", help="print the inf-sup diagnostic")
    p_inf.add_argument("--levels", default="4,8",
                       help="comma list of subdivision counts")
    p_inf.set_defaults(func=_cmd_infsup)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NonconvergenceError as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        return 3
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4
    except NSPlateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
