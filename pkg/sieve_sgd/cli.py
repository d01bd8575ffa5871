"""cli: Command line front end for fitting, simulating and tuning.

Example:

    # Fit the averaged estimator to a CSV file and write the result as json
    sieve-sgd fit --input survey.csv --output fit.json

    # Reproduce the normal-error simulation table at both sample sizes
    sieve-sgd simulate --preset paper-normal --reps 100 --format csv

    # Show the admissible iteration window for n = 5000
    sieve-sgd tune --n 5000 --gamma 0.8

Exit codes are 0 on success, 2 for usage and parse errors, 3 for invalid
data or settings and 4 for numeric failures.

"""

# Imports from other packages
import argparse
import logging
import sys
# Imports from this package
from .config import SsgdConfig
from .errors import (
    ConfigurationError,
    CsvParseError,
    DatasetValidationError,
    DimensionMismatchError,
    MonteCarloFailure,
    NormalizationError,
    NumericalError,
)
from .estimator import default_tuning, run_estimator
from .inference import (
    FORMS,
    confidence_intervals,
    link_for_inference,
    normalized_confidence_intervals,
    sandwich_vcov,
)
from .model import LINKS, get_link
from .reporting import (
    read_csv_dataset,
    report_to_dict,
    result_to_dict,
    write_csv_file,
    write_json_file,
)
from .simulation import (
    ERROR_DISTS,
    REFERENCE_BETA0,
    REFERENCE_SIZES,
    X_DISTS,
    DgpSpec,
    run_monte_carlo,
)

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_NUMERIC = 4

PRESETS = {
    "paper-normal": "normal",
    "paper-cauchy": "cauchy",
}


def _add_config_args(parser):
    """Flags shared by fit and simulate, one per SsgdConfig field."""
    parser.add_argument("--seed", type=int, default=0,
            help="root seed for every random draw (default 0)")
    parser.add_argument("--gamma1", type=float, default=2.0,
            help="learning-rate scale, > 1 (default 2.0)")
    parser.add_argument("--gamma", type=float, default=0.8,
            help="learning-rate exponent in (0.5, 1] (default 0.8)")
    parser.add_argument("--iterations", type=int, default=None,
            help="iteration count K (default: the sample size)")
    parser.add_argument("--sieve-powers", type=int, default=3,
            help="polynomial powers in the sieve (default 3)")
    parser.add_argument("--trim", type=int, default=0,
            help="iterates dropped from the end of the average (default 0)")
    parser.add_argument("--refit-every", type=int, default=1,
            help="refit the sieve every this many iterations (default 1)")
    parser.add_argument("--normalize-index", type=int, default=1,
            help="1-based coefficient the others are reported relative to "
            "(default 1)")
    parser.add_argument("--estimator", choices=("group", "average"),
            default="average", help="sieve estimator (default average)")
    parser.add_argument("--known-g", action="store_true",
            help="use SGD with the known link given by --link")
    parser.add_argument("--link", choices=sorted(LINKS), default="logistic",
            help="known link for --known-g (default logistic)")


def build_parser():
    """The argparse parser with the fit, simulate and tune subcommands."""
    parser = argparse.ArgumentParser(prog="sieve-sgd",
            description="Sieve-SGD estimation of binary choice models.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
            help="-v for progress, -vv for debug output")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    fit = commands.add_parser("fit", help="fit a CSV dataset")
    fit.add_argument("--input", required=True,
            help="CSV with a header, a 0/1 column y and numeric regressors")
    fit.add_argument("--output", default=None, help="json file (default stdout)")
    fit.add_argument("--format", choices=("json",), default="json")
    _add_config_args(fit)
    fit.add_argument("--include-f", action=argparse.BooleanOptionalAction,
            default=True, help="include the link-estimation correction in the "
            "sandwich (default on)")
    fit.add_argument("--form", choices=FORMS, default="main",
            help="sandwich form (default main)")
    fit.add_argument("--level", type=float, default=0.95,
            help="confidence level (default 0.95)")
    fit.set_defaults(func=cmd_fit)

    simulate = commands.add_parser("simulate", help="run a Monte Carlo study")
    simulate.add_argument("--preset", choices=sorted(PRESETS), default=None,
            help="the nine-regressor design at n = 5000 and 10000")
    simulate.add_argument("--n", type=int, action="append", default=None,
            help="sample size; repeat for several (default 5000)")
    simulate.add_argument("--beta0", default=None,
            help="comma separated true coefficients")
    simulate.add_argument("--error-dist", choices=ERROR_DISTS, default="normal")
    simulate.add_argument("--x-dist", choices=X_DISTS, default="normal")
    simulate.add_argument("--reps", type=int, default=100,
            help="replications, at least 2 (default 100)")
    simulate.add_argument("--jobs", type=int, default=None,
            help="parallel workers (default all CPUs, capped by SSGD_THREADS)")
    simulate.add_argument("--coverage-level", type=float, default=None,
            help="also record coverage of intervals at this level")
    simulate.add_argument("--output", default=None, help="file (default stdout)")
    simulate.add_argument("--format", choices=("json", "csv"), default="json")
    _add_config_args(simulate)
    simulate.set_defaults(func=cmd_simulate)

    tune = commands.add_parser("tune", help="print tuning-rule defaults")
    tune.add_argument("--n", type=int, required=True, help="sample size")
    tune.add_argument("--p", type=int, default=1, help="number of regressors")
    tune.add_argument("--gamma", type=float, default=0.8,
            help="learning-rate exponent (default 0.8)")
    tune.set_defaults(func=cmd_tune)
    return parser


def _config_from_args(args):
    if args.normalize_index < 1:
        raise ConfigurationError("--normalize-index is 1-based, got {}".format(
                args.normalize_index))
    return SsgdConfig(gamma1=args.gamma1, gamma=args.gamma, K=args.iterations,
            q=args.sieve_powers, trim_t=args.trim, seed=args.seed,
            refit_every=args.refit_every, numeraire=args.normalize_index - 1)


def _estimator_name(args):
    return "known-g" if args.known_g else args.estimator


def _emit(text, output):
    """Write text to a file, or to stdout."""
    if output is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_fit(args):
    """Fit a CSV dataset and write the result with inference as json."""
    config = _config_from_args(args)
    data = read_csv_dataset(args.input)
    link = get_link(args.link) if args.known_g else None
    result = run_estimator(_estimator_name(args), data, config, link=link)
    for note in result.warnings:
        _logger.warning(note)

    # Inference failing leaves the point estimate usable
    payload_intervals = None
    normalized = None
    if link is None and result.sieve_fit is None:
        _logger.warning("inference skipped: no sieve fit was estimated")
    else:
        try:
            fit = link if link is not None else link_for_inference(data, result)
            vcov = sandwich_vcov(data, result.beta_avg, fit,
                    include_f=args.include_f, form=args.form)
            result = result.with_vcov(vcov)
            payload_intervals = confidence_intervals(result, vcov, args.level)
            if data.p > 1:
                normalized = normalized_confidence_intervals(result, vcov,
                        args.level, config.numeraire)
        except (NumericalError, NormalizationError) as err:
            _logger.warning("inference skipped: %s", err)

    payload = result_to_dict(result, payload_intervals)
    payload["columns"] = list(data.columns)
    # Intervals are centered on the averaged iterate for every estimator
    payload["inference_center"] = "beta_avg"
    payload["seed"] = config.seed
    if normalized is not None:
        payload["normalized_intervals"] = {
            "level": normalized.level,
            "estimate": normalized.estimate,
            "std_err": normalized.std_err,
            "lower": normalized.lower,
            "upper": normalized.upper,
        }
    _emit(write_json_file(payload, args.output), args.output)
    return EXIT_OK


def _simulation_specs(args):
    """DgpSpecs for each requested sample size."""
    if args.preset is not None:
        beta0 = REFERENCE_BETA0
        error_dist = PRESETS[args.preset]
        sizes = args.n or list(REFERENCE_SIZES)
    else:
        if args.beta0 is None:
            raise ConfigurationError("simulate needs --beta0 or --preset")
        try:
            beta0 = tuple(float(b) for b in args.beta0.split(","))
        except ValueError as err:
            raise ConfigurationError("--beta0 must be comma separated numbers, got "
                    "{!r}".format(args.beta0)) from err
        error_dist = args.error_dist
        sizes = args.n or [5000]
    return [DgpSpec(beta0, error_dist, args.x_dist, n, args.seed) for n in sizes]


def cmd_simulate(args):
    """Run the Monte Carlo harness for each sample size and emit the reports."""
    config = _config_from_args(args)
    if args.reps < 2:
        raise ConfigurationError("--reps must be at least 2, got {}".format(
                args.reps))
    reports = []
    for spec in _simulation_specs(args):
        report = run_monte_carlo(spec, config, args.reps, _estimator_name(args),
                level=args.coverage_level, n_jobs=args.jobs)
        _logger.info("n=%d: %d replications in %.1fs, %d failed", spec.n,
                report.replications, report.total_seconds, report.failures)
        reports.append(report)

    if args.format == "csv":
        text = write_csv_file(reports, args.output)
    else:
        text = write_json_file([report_to_dict(r) for r in reports], args.output)
    _emit(text, args.output)
    return EXIT_OK


def cmd_tune(args):
    """Print the tuning-rule defaults for a sample size."""
    tuning = default_tuning(args.n, args.p, args.gamma)
    lower, upper = tuning["window"]
    lines = [
        "n = {}, p = {}, gamma = {}".format(args.n, args.p, args.gamma),
        "admissible K window: [{}, {}]".format(lower, upper),
        "K = {}".format(tuning["K"]),
        "q = {}".format(tuning["q"]),
        "p * K^-gamma = {:.4f}".format(tuning["dimension_ratio"]),
    ]
    lines.extend("warning: {}".format(note) for note in tuning["warnings"])
    _emit("\n".join(lines), None)
    return EXIT_OK


def main(argv=None):
    """Entry point. Returns the exit status instead of exiting."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit:
        return exit.code

    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, stream=sys.stderr,
            format="%(asctime)s %(name)s %(levelname)s: %(message)s")

    try:
        return args.func(args)
    except CsvParseError as err:
        _logger.error("%s", err)
        return EXIT_USAGE
    except (ConfigurationError, DatasetValidationError, DimensionMismatchError,
            NormalizationError) as err:
        _logger.error("%s", err)
        return EXIT_INVALID
    except MonteCarloFailure as err:
        _logger.error("%s", err)
        return EXIT_NUMERIC
    except NumericalError as err:
        if err.iteration is not None:
            _logger.error("numeric failure at iteration %d: %s", err.iteration, err)
        else:
            _logger.error("numeric failure: %s", err)
        return EXIT_NUMERIC


def run():
    """Console script wrapper."""
    sys.exit(main())
