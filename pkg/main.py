import argparse
import sys
from typing import Optional, Sequence

import config
from models.pydantic_models import ErrorResponse, FitConfig
from services.evaluation_service import TARGETS
from services.report_service import run_fit, run_reproduce, run_simulate
from services.simulation_service import DESIGNS, ERROR_LAWS
from utils import error_utils
from utils.error_utils import EXIT_INPUT_ERROR, EXIT_OK, InputValidationError


def _parse_cutpoints(text: Optional[str]):
    if text is None:
        return None
    try:
        return tuple(float(value) for value in text.split(","))
    except ValueError:
        raise InputValidationError(f"--fixed-cutpoints must be comma-separated numbers, got {text!r}")


def _report_failure(error: Exception) -> int:
    """Print the error payload to stderr and return the mapped exit code"""
    error_response = error_utils.handle_exception(error)
    print(ErrorResponse(**error_response).model_dump_json(exclude_none=True), file=sys.stderr)
    return error_response["exit_code"]


def _print_outputs(paths) -> None:
    for path in paths:
        print(path)


def cmd_fit(args: argparse.Namespace) -> int:
    """
    Fit the ordinal quantile regression at each requested quantile.
    Writes summary.json, coefficients.csv and manifest.json to --out.
    """
    try:
        if args.variant == "fixed" and args.fixed_cutpoints is None:
            raise InputValidationError("--variant fixed requires --fixed-cutpoints (e.g. \"5,8\")")
        if args.fast:
            iterations = args.iterations or config.FAST_ITERATIONS
            burnin = args.burnin if args.burnin is not None else config.FAST_BURNIN
        else:
            iterations = args.iterations or config.DEFAULT_ITERATIONS
            burnin = args.burnin if args.burnin is not None else config.DEFAULT_BURNIN
        try:
            fit_config = FitConfig(
                iterations=iterations,
                burnin=burnin,
                seed=args.seed,
                variant=args.variant,
                fixed_cutpoints=_parse_cutpoints(args.fixed_cutpoints),
                thin=args.thin,
            )
        except ValueError as e:
            raise InputValidationError(str(e))
        _print_outputs(run_fit(
            args.input,
            args.response,
            args.quantile or list(config.DEFAULT_QUANTILES),
            fit_config,
            args.out,
            runs=args.runs,
            bootstrap=args.bootstrap,
            level=args.level,
            levels=args.levels,
            standardize=args.standardize,
            emit_draws=args.emit_draws,
        ))
        return EXIT_OK
    except Exception as error:
        return _report_failure(error)


def cmd_simulate(args: argparse.Namespace) -> int:
    """Write one simulated dataset (data.csv) and its ground truth (truth.json)."""
    try:
        _print_outputs(run_simulate(args.design, args.error_law, args.quantile, args.n, args.seed, args.out))
        return EXIT_OK
    except Exception as error:
        return _report_failure(error)


def cmd_reproduce(args: argparse.Namespace) -> int:
    """Run a table or figure of the simulation study and write its RMSE/coverage report."""
    try:
        _print_outputs(run_reproduce(
            args.target, args.runs, args.seed, args.out,
            fast=args.fast, bootstrap=args.bootstrap, level=args.level, error_laws=args.error_law,
        ))
        return EXIT_OK
    except Exception as error:
        return _report_failure(error)


def _quantile(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"quantile must lie in (0, 1), got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be zero or positive, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=config.APP_NAME,
        description=config.APP_DESCRIPTION,
        epilog="Environment: BORPS_THREADS caps concurrency; BORPS_LOG_LEVEL sets verbosity.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {config.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Fit ordinal quantile regression to a CSV")
    fit.add_argument("input", help="CSV with a header row")
    fit.add_argument("--response", required=True, help="Name of the ordinal response column")
    fit.add_argument("--quantile", type=_quantile, action="append",
                     help="Target quantile (repeatable; default 0.05,0.25,0.5,0.75,0.95)")
    fit.add_argument("--iterations", type=_positive, default=None, help="Gibbs sweeps (default 20000)")
    fit.add_argument("--burnin", type=_non_negative, default=None, help="Discarded sweeps (default 10000)")
    fit.add_argument("--thin", type=_positive, default=config.DEFAULT_THIN, help="Keep every k-th draw")
    fit.add_argument("--seed", type=_seed, default=0, help="Master seed")
    fit.add_argument("--variant", choices=("collapsed", "full", "fixed"), default="collapsed")
    fit.add_argument("--fixed-cutpoints", default=None, help='Interior cutpoints for --variant fixed, e.g. "5,8"')
    fit.add_argument("--levels", default=None, help='Ordered response labels, e.g. "low,mid,high"')
    fit.add_argument("--standardize", action="store_true", help="z-score covariates before fitting")
    fit.add_argument("--runs", type=_positive, default=1, help="Independent chains averaged per quantile")
    fit.add_argument("--bootstrap", type=_non_negative, default=0, help="Bootstrap replicates (0 = off)")
    fit.add_argument("--level", type=_quantile, default=config.DEFAULT_BOOTSTRAP_LEVEL, help="Interval level")
    fit.add_argument("--emit-draws", action="store_true", help="Also write draws_q<q>.csv")
    fit.add_argument("--fast", action="store_true", help="5000/2500 chains unless overridden")
    fit.add_argument("--out", required=True, help="Output directory")
    fit.set_defaults(handler=cmd_fit)

    simulate = sub.add_parser("simulate", help="Generate a simulated dataset with known truth")
    simulate.add_argument("--design", choices=DESIGNS, required=True)
    simulate.add_argument("--error-law", choices=ERROR_LAWS, required=True)
    simulate.add_argument("--quantile", type=_quantile, required=True)
    simulate.add_argument("--n", type=_positive, default=config.SIM_N)
    simulate.add_argument("--seed", type=_seed, default=0)
    simulate.add_argument("--out", required=True, help="Output directory")
    simulate.set_defaults(handler=cmd_simulate)

    reproduce = sub.add_parser("reproduce", help="Reproduce a table or figure of the simulation study")
    reproduce.add_argument("target", choices=TARGETS)
    reproduce.add_argument("--runs", type=_positive, default=config.DEFAULT_RUNS)
    reproduce.add_argument("--seed", type=_seed, default=0)
    reproduce.add_argument("--fast", action="store_true", help="5000/2500 chains")
    reproduce.add_argument("--bootstrap", type=_positive, default=config.DEFAULT_BOOTSTRAP_REPLICATES,
                           help="Replicates per fig5 cell")
    reproduce.add_argument("--level", type=_quantile, default=config.DEFAULT_BOOTSTRAP_LEVEL)
    reproduce.add_argument("--error-law", choices=ERROR_LAWS, action="append",
                           help="Restrict to an error law (repeatable)")
    reproduce.add_argument("--out", required=True, help="Output directory")
    reproduce.set_defaults(handler=cmd_reproduce)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        # argparse exits 2 on usage errors and 0 for --help/--version
        return EXIT_INPUT_ERROR if exit_.code else EXIT_OK
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
