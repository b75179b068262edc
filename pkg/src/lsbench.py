"""
Command-line front end.

    lsbench gen      --rows M --cols N --cond K --seed S --out H.cmat
    lsbench bound    H.cmat [--mantissa-bits B | --precision half] [--format csv]
    lsbench solve    H.cmat|DIR [--rhs Y.cmat | --random-rhs SEED]
    lsbench sweep    [--preset square32] [--rows ...] --out-csv sweep.csv [--out-svg sweep.svg]
    lsbench selftest

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from bounds import bound_report
from cmat_io import list_cmat_files, read_cmat, write_cmat
from config import Config
from ensembles import RandsvdSpec, RngStream, haar_unitary, randsvd, random_unit_vector
from errors import EXIT_NUMERICAL, EXIT_OK, ValidationError, exit_code_for
from ls_pipeline import ErrorMeasurement, consistent_rhs, measure_error, solve_lp
from precision import PRECISION_PRESETS, ExponentRange, PrecisionContext
from run_sweep import SweepConfig, config_from_preset, run_sweep_workflow
from selftest import run_selftest_workflow
from utils import LOG_FORMAT, build_report
from workflow_result import WorkflowResult

logger = logging.getLogger('lsbench')

# stream id of the random right-hand side drawn by `solve`
RHS_STREAM = (1,)


def _add_precision_args(parser: argparse.ArgumentParser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--mantissa-bits', '-b', type=int, default=None,
                       help=f"stored fraction bits (default {Config.DEFAULT_MANTISSA_BITS})")
    group.add_argument('--precision', choices=sorted(PRECISION_PRESETS), default=None,
                       help="named format instead of --mantissa-bits")
    parser.add_argument('--no-fma', action='store_true', help="round products before accumulating")
    parser.add_argument('--clamp', action='store_true', help="apply the IEEE binary16 exponent range")


def context_from_args(args: argparse.Namespace) -> PrecisionContext:
    fma = not args.no_fma
    if args.precision:
        return PrecisionContext.preset(args.precision, fma=fma, clamp=args.clamp)
    bits = args.mantissa_bits if args.mantissa_bits is not None else Config.DEFAULT_MANTISSA_BITS
    exponent_range = ExponentRange.IEEE_BINARY16 if args.clamp else ExponentRange.UNBOUNDED
    return PrecisionContext(bits, fma=fma, exponent_range=exponent_range)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='lsbench',
                                     description="Low-precision Cholesky least-squares error bench")
    parser.add_argument('--verbose', '-v', action='store_true', help="log progress to stderr")
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help="write a RANDSVD (or Haar unitary) matrix to a CMAT file")
    gen.add_argument('--rows', type=int, required=True)
    gen.add_argument('--cols', type=int, default=None, help="defaults to --rows")
    gen.add_argument('--cond', type=float, default=1.0)
    gen.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    gen.add_argument('--haar', action='store_true', help="Haar unitary of size --rows instead")
    gen.add_argument('--out', type=Path, required=True)

    bound = sub.add_parser('bound', help="evaluate every error bound for a matrix H")
    bound.add_argument('matrix', type=Path)
    bound.add_argument('--format', choices=('text', 'csv'), default='text')
    _add_precision_args(bound)

    solve = sub.add_parser('solve', help="measure the low-precision solve error for H (or a folder of H)")
    solve.add_argument('matrix', type=Path, help="CMAT file or directory of CMAT files")
    rhs = solve.add_mutually_exclusive_group()
    rhs.add_argument('--rhs', type=Path, default=None, help="CMAT file with Y")
    rhs.add_argument('--random-rhs', type=int, default=None, metavar='SEED',
                     help="Y = H x0 for a random unit x0 (default, seed from --seed)")
    solve.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    solve.add_argument('--no-lp-apply', action='store_true', help="form W Y in working precision")
    solve.add_argument('--out-solution', type=Path, default=None, help="write the emulated X to a CMAT file")
    _add_precision_args(solve)

    sweep = sub.add_parser('sweep', help="Monte-Carlo sweep over the condition number")
    sweep.add_argument('--preset', default=None, help="named configuration from the presets file")
    sweep.add_argument('--rows', type=int, default=None)
    sweep.add_argument('--cols', type=int, default=None)
    sweep.add_argument('--cond-min', type=float, default=None)
    sweep.add_argument('--cond-max', type=float, default=None)
    sweep.add_argument('--points', type=int, default=None, dest='cond_points')
    sweep.add_argument('--trials', type=int, default=None)
    sweep.add_argument('--seed', type=int, default=None)
    sweep.add_argument('--workers', type=int, default=None)
    apply = sweep.add_mutually_exclusive_group()
    apply.add_argument('--lp-apply', dest='apply_wy_in_lp', action='store_const', const=True, default=None,
                       help="form W Y in low precision (default outside presets)")
    apply.add_argument('--no-lp-apply', dest='apply_wy_in_lp', action='store_const', const=False,
                       help="form W Y in working precision")
    sweep.add_argument('--out-csv', type=Path, default=None)
    sweep.add_argument('--out-svg', type=Path, default=None)
    sweep.add_argument('--out-xlsx', type=Path, default=None)
    _add_precision_args(sweep)

    selftest = sub.add_parser('selftest', help="run the statistical invariant suite")
    selftest.add_argument('--seed', type=int, default=Config.DEFAULT_SEED)
    selftest.add_argument('--scale', type=float, default=1.0, help="sample-count multiplier")

    return parser


def cmd_gen(args: argparse.Namespace) -> WorkflowResult:
    cols = args.cols if args.cols is not None else args.rows
    if args.haar:
        matrix = haar_unitary(args.rows, RngStream(args.seed))
        comment = f"haar unitary n={args.rows} seed={args.seed}"
    else:
        spec = RandsvdSpec(args.rows, cols, cond=args.cond, seed=args.seed)
        matrix = randsvd(spec)
        comment = f"randsvd rows={args.rows} cols={cols} cond={args.cond!r} seed={args.seed}"
    path = write_cmat(args.out, matrix, comment=comment)
    print(f"Wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {path}")
    return WorkflowResult(success=True, data=path)


def cmd_bound(args: argparse.Namespace) -> WorkflowResult:
    ctx = context_from_args(args)
    report = bound_report(read_cmat(args.matrix), ctx)
    if args.format == 'csv':
        sys.stdout.write(pd.DataFrame([report.as_dict()]).to_csv(index=False, float_format='%.10e'))
    else:
        print(build_report(f"Bound report: {args.matrix.name}", {
            "Precision": {"context": ctx.describe()},
            "Bounds": report.as_dict(),
        }))
    return WorkflowResult(success=True, data=report)


def _rhs_for(h, args: argparse.Namespace):
    if args.rhs is not None:
        return read_cmat(args.rhs)
    seed = args.random_rhs if args.random_rhs is not None else args.seed
    return consistent_rhs(h, random_unit_vector(h.shape[1], RngStream(seed, RHS_STREAM)))


def _measurement_row(name: str, h, m: ErrorMeasurement) -> dict:
    return {
        'file': name, 'rows': h.shape[0], 'cols': h.shape[1],
        'rel_err': m.rel_err, 'backward_err': m.backward_err, 'gram_err': m.gram_err,
        'apply_err': m.apply_err, 'failed': m.failed, 'failure_stage': m.failure_stage.value,
    }


def cmd_solve(args: argparse.Namespace) -> WorkflowResult:
    ctx = context_from_args(args)
    apply_wy_in_lp = not args.no_lp_apply

    if args.matrix.is_dir():
        if args.rhs is not None:
            raise ValidationError("--rhs cannot be combined with a directory of matrices")
        files = list_cmat_files(args.matrix)
        if not files:
            raise ValidationError(f"No CMAT files in {args.matrix}")
        rows = []
        for path in files:
            h = read_cmat(path)
            rows.append(_measurement_row(path.name, h, measure_error(h, _rhs_for(h, args), ctx, apply_wy_in_lp)))
        table = pd.DataFrame(rows)
        print(table.to_string(index=False, float_format=lambda v: f"{v:.6e}"))
        return WorkflowResult(success=True, data=table)

    h = read_cmat(args.matrix)
    y = _rhs_for(h, args)
    m = measure_error(h, y, ctx, apply_wy_in_lp)
    fields = {k: v for k, v in _measurement_row(args.matrix.name, h, m).items() if k != 'file'}
    if m.error:
        fields['error'] = m.error
    print(build_report(f"Solve report: {args.matrix.name}", {
        "Precision": {"context": ctx.describe()},
        "Errors": fields,
    }))

    if args.out_solution is not None and not m.failed:
        write_cmat(args.out_solution, solve_lp(h, y, ctx, apply_wy_in_lp).x, comment=f"solution {ctx.describe()}")

    if m.failed:
        return WorkflowResult(success=False, data=m, exit_code=EXIT_NUMERICAL,
                              error=f"Solve failed at {m.failure_stage.value} stage: {m.error}")
    return WorkflowResult(success=True, data=m)


def sweep_config_from_args(args: argparse.Namespace) -> SweepConfig:
    ctx = context_from_args(args)
    overrides = {
        'rows': args.rows, 'cols': args.cols, 'cond_min': args.cond_min, 'cond_max': args.cond_max,
        'cond_points': args.cond_points, 'trials': args.trials, 'seed': args.seed, 'workers': args.workers,
        'out_csv': args.out_csv, 'out_svg': args.out_svg, 'out_xlsx': args.out_xlsx,
        'mantissa_bits': ctx.mantissa_bits, 'fma': ctx.fma,
        'clamp': ctx.exponent_range is ExponentRange.IEEE_BINARY16,
        'apply_wy_in_lp': args.apply_wy_in_lp,
    }
    if args.preset:
        return config_from_preset(args.preset, **overrides)
    config = SweepConfig(**{k: v for k, v in overrides.items() if v is not None})
    if config.cols != config.rows and args.cols is None:
        config.cols = config.rows
    return config


def cmd_sweep(args: argparse.Namespace) -> WorkflowResult:
    result = run_sweep_workflow(sweep_config_from_args(args))
    if result.success:
        print(result.data.to_string(index=False, float_format=lambda v: f"{v:.4e}"))
    return result


def cmd_selftest(args: argparse.Namespace) -> WorkflowResult:
    result = run_selftest_workflow(seed=args.seed, scale=args.scale)
    if result.data is not None:
        table = result.data.assign(passed=result.data['passed'].map({True: 'PASS', False: 'FAIL'}))
        print(table.to_string(index=False))
    return result


COMMANDS = {
    'gen': cmd_gen,
    'bound': cmd_bound,
    'solve': cmd_solve,
    'sweep': cmd_sweep,
    'selftest': cmd_selftest,
}


_console_handler: Optional[logging.Handler] = None


def _configure_console_logging(verbose: bool):
    global _console_handler
    root = logging.getLogger()
    if _console_handler is not None:
        root.removeHandler(_console_handler)
    _console_handler = logging.StreamHandler(sys.stderr)
    _console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    # module loggers stay at INFO for their files; the console follows --verbose
    _console_handler.setLevel(logging.INFO if verbose else logging.WARNING)
    root.addHandler(_console_handler)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_console_logging(args.verbose)

    try:
        Config.validate()
        result = COMMANDS[args.command](args)
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code

    if not result.success:
        print(f"error: {result.error}", file=sys.stderr)
        return result.exit_code or 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
