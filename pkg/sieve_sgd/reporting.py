"""reporting: Reading datasets and writing fit results and simulation tables.

Example:

    # Load a CSV with a header, a 0/1 column named y and numeric regressors
    data = read_csv_dataset("survey.csv")
    result = run_ssgd_average(data, SsgdConfig())

    # Write the fit to json and read it back
    write_json_file(result_to_dict(result), "fit.json")
    same = read_json_result("fit.json")

    # Write a Monte Carlo report as a Beta / Bias / RMSE table
    write_csv_file([report_5000, report_10000], "table.csv")

"""

# Imports from other packages
import json
import logging
import os
import re
import numpy as np
import pandas as pd
# Imports from this package
from .errors import CsvParseError, DatasetValidationError
from .estimator import FitResult, IteratePath
from .inference import SandwichVcov
from .model import validate_dataset
from .sieve import SieveBasis, SieveFit

_logger = logging.getLogger(__name__)

SCHEMA = 1
NUMBER = re.compile(r"-?\d+(\.\d+)?([eE][+-]?\d+)?")
OUTCOME_COLUMN = "y"


def _to_builtin(obj):
    """json.dumps hook for numpy values."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError("{} is not JSON serializable".format(type(obj).__name__))


def _array(values):
    out = np.array(values, dtype=float)
    out.setflags(write=False)
    return out


def _basis_to_dict(basis):
    return {
        "order_q": basis.order_q,
        "center": basis.center,
        "scale": basis.scale,
        "monomial_means": basis.monomial_means,
        "orthonormalizer": basis.orthonormalizer,
        "condition_number": basis.condition_number,
        "iota": basis.iota,
        "includes_intercept": basis.includes_intercept,
    }


def _sieve_to_dict(fit):
    if fit is None:
        return None
    return {
        "pi": fit.pi,
        "basis": _basis_to_dict(fit.basis),
        "loglik": fit.loglik,
        "newton_iters": fit.newton_iters,
        "converged": fit.converged,
        "separation_suspected": fit.separation_suspected,
        "gradient_norm": fit.gradient_norm,
        "loglik_path": list(fit.loglik_path),
    }


def _sieve_from_dict(raw):
    if raw is None:
        return None
    basis = raw["basis"]
    basis = SieveBasis(int(basis["order_q"]), basis["center"], basis["scale"],
            _array(basis["monomial_means"]),
            _array(np.reshape(basis["orthonormalizer"],
                    (basis["order_q"], basis["order_q"]))),
            basis["condition_number"], basis["iota"], basis["includes_intercept"])
    # Fitted values belong to the training index, which is not stored
    return SieveFit(_array(raw["pi"]), basis, raw["loglik"], int(raw["newton_iters"]),
            raw["converged"], raw["separation_suspected"], raw["gradient_norm"],
            tuple(raw["loglik_path"]))


def _vcov_to_dict(vcov):
    if vcov is None:
        return None
    return {
        "sigma1_hat": vcov.sigma1_hat,
        "sigma2_hat": vcov.sigma2_hat,
        "vcov": vcov.vcov,
        "n": vcov.n,
        "f_correction_included": vcov.f_correction_included,
        "form": vcov.form,
        "whitened": vcov.whitened,
        "rcond": vcov.rcond,
        "sigma1_min_eigenvalue": vcov.sigma1_min_eigenvalue,
    }


def _vcov_from_dict(raw):
    if raw is None:
        return None
    return SandwichVcov(_array(raw["sigma1_hat"]), _array(raw["sigma2_hat"]),
            _array(raw["vcov"]), int(raw["n"]), raw["f_correction_included"],
            raw["form"], raw["whitened"], raw["rcond"], raw["sigma1_min_eigenvalue"])


def result_to_dict(result, intervals=None):
    """Convert a FitResult to a JSON-ready dictionary.

    Args:
        result (FitResult): The fit.
        intervals (ConfidenceIntervals): Intervals to include for readers.
            They are output only and ignored by result_from_dict.

    Returns:
        A dictionary carrying a "schema" version field.

    """

    out = {
        "schema": SCHEMA,
        "estimator": result.estimator,
        "K": result.K,
        "beta_final": result.beta_final,
        "beta_avg": result.beta_avg,
        "beta_normalized": result.beta_normalized,
        "numeraire": result.numeraire,
        "trim_t": result.trim_t,
        "seconds": result.seconds,
        "warnings": list(result.warnings),
        "config": result.config,
        "window": list(result.window),
        "sieve_fit": _sieve_to_dict(result.sieve_fit),
        "vcov": _vcov_to_dict(result.vcov),
        "path": {
            "betas": result.path.betas,
            "gradient_norms": result.path.gradient_norms,
            "sieve_fits": [_sieve_to_dict(fit) for fit in result.path.sieve_fits],
        },
    }
    if intervals is not None:
        out["intervals"] = {
            "level": intervals.level,
            "estimate": intervals.estimate,
            "std_err": intervals.std_err,
            "lower": intervals.lower,
            "upper": intervals.upper,
        }
    return out


def result_from_dict(raw):
    """Rebuild a FitResult from result_to_dict output.

    Raises:
        ValueError: The schema version is missing or unknown.

    """

    if raw.get("schema") != SCHEMA:
        raise ValueError("unsupported result schema {!r}, expected {}".format(
                raw.get("schema"), SCHEMA))
    path = raw["path"]
    betas = np.array(path["betas"], dtype=float).reshape(raw["K"] + 1, -1)
    iterates = IteratePath(_array(betas), _array(path["gradient_norms"]),
            tuple(_sieve_from_dict(fit) for fit in path["sieve_fits"]))
    return FitResult(raw["estimator"], _array(raw["beta_final"]),
            _array(raw["beta_avg"]), _array(raw["beta_normalized"]),
            int(raw["numeraire"]), _sieve_from_dict(raw["sieve_fit"]), iterates,
            int(raw["trim_t"]), raw["seconds"], _vcov_from_dict(raw["vcov"]),
            tuple(raw["warnings"]), raw["config"], tuple(raw["window"]))


def report_to_dict(report):
    """Convert an McReport to a JSON-ready dictionary."""
    return {
        "schema": SCHEMA,
        "estimator": report.estimator,
        "spec": report.spec,
        "config": report.config,
        "truth": report.truth,
        "bias": report.bias,
        "rmse": report.rmse,
        "median_bias": report.median_bias,
        "mad": report.mad,
        "coverage": report.coverage,
        "replications": report.replications,
        "failures": report.failures,
        "total_seconds": report.total_seconds,
        "mean_seconds": report.mean_seconds,
        "reference": report.reference,
        "rmse_ratio": report.rmse_ratio,
        "records": [
            {"index": r.index, "seed": r.seed, "estimate": list(r.estimate),
             "seconds": r.seconds, "covered": list(r.covered), "error": r.error}
            for r in report.records
        ],
    }


def write_json_file(payload, file_path=None):
    """Write a dictionary as indented json.

    Args:
        payload (dict): Output of result_to_dict, report_to_dict, or a list
            of them.
        file_path (str): Where to write. None returns the text instead.

    Returns:
        The file path written to, or the json text when file_path is None.

    """

    # Convert the dict to json
    json_obj = json.dumps(payload, indent=4, default=_to_builtin)
    if file_path is None:
        return json_obj

    if os.path.exists(file_path):
        _logger.info("overwriting %s", file_path)
    with open(file_path, "w") as file:
        file.write(json_obj)
        file.write("\n")
    return file_path


def read_json_result(file_path):
    """Read a FitResult written by write_json_file."""
    with open(file_path, "r") as file:
        raw = json.load(file)
    return result_from_dict(raw)


def report_table(reports):
    """Lay out Monte Carlo reports as a Beta / Bias / RMSE table.

    Args:
        reports (list): McReport objects, typically one per sample size.

    Returns:
        A pandas DataFrame with a Beta column naming each normalized
        coefficient, then Bias_N=<n> and RMSE_N=<n> columns per report.

    """

    if not reports:
        raise ValueError("need at least one report")
    numeraire = reports[0].config.get("numeraire", 0)
    p = len(reports[0].spec["beta0"])
    table = pd.DataFrame({"Beta": ["beta{}".format(j + 1) for j in range(p)
            if j != numeraire]})
    for report in reports:
        table["Bias_N={}".format(report.n)] = report.bias
        table["RMSE_N={}".format(report.n)] = report.rmse
    return table


def write_csv_file(reports, file_path=None):
    """Write Monte Carlo reports as a CSV table.

    Args:
        reports (list): McReport objects.
        file_path (str): Where to write. None returns the text instead.

    Returns:
        The file path written to, or the CSV text when file_path is None.

    """

    table = report_table(reports)
    text = table.to_csv(index=False, float_format="%.6f", lineterminator="\n")
    if file_path is None:
        return text
    with open(file_path, "w") as file:
        file.write(text)
    return file_path


def _line_of(violation):
    """Render a violation with the file line of its row."""
    row = getattr(violation, "row", None)
    if row is None:
        return str(violation)
    # Line 1 is the header
    return "line {}: {}".format(row + 2, violation)


def read_csv_dataset(file_path):
    """Read a Dataset from a CSV file.

    The file needs a header row and a column named y holding 0/1 outcomes;
    every other column is a regressor, in file order. Numbers must match
    -?d+(.d+)?([eE][+-]?d+)?, independent of locale.

    Args:
        file_path (str): The CSV file.

    Returns:
        A Dataset.

    Raises:
        CsvParseError: Malformed file or a cell that is not a number; carries
            the 1-based file line.
        DatasetValidationError: The numbers breach a Dataset invariant; the
            message names file lines.

    """

    try:
        frame = pd.read_csv(file_path, dtype=str, keep_default_na=False,
                skip_blank_lines=False)
    except pd.errors.EmptyDataError as err:
        raise CsvParseError("{} is empty".format(file_path), line=1) from err
    except pd.errors.ParserError as err:
        match = re.search(r"line (\d+)", str(err))
        raise CsvParseError("{}: {}".format(file_path, err),
                line=int(match.group(1)) if match else None) from err

    frame.columns = [str(name).strip() for name in frame.columns]
    if OUTCOME_COLUMN not in frame.columns:
        raise CsvParseError("{}: no column named {!r} in the header".format(
                file_path, OUTCOME_COLUMN), line=1)
    regressors = [name for name in frame.columns if name != OUTCOME_COLUMN]
    if not regressors:
        raise CsvParseError("{}: no regressor columns".format(file_path), line=1)

    # First cell, in file order, that is not a number
    valid = frame.apply(lambda col: col.str.strip().str.fullmatch(NUMBER.pattern))
    valid = valid.fillna(False).astype(bool)
    bad_rows = np.flatnonzero(~valid.to_numpy().all(axis=1))
    if bad_rows.size:
        row = int(bad_rows[0])
        column = frame.columns[int(np.argmin(valid.iloc[row].to_numpy()))]
        value = frame.iloc[row][column]
        raise CsvParseError("{}, line {}: {!r} in column {!r} is not a number"
                .format(file_path, row + 2, value, column), line=row + 2)

    values = frame.apply(lambda col: col.str.strip().astype(float))
    try:
        data = validate_dataset(values[regressors].to_numpy(),
                values[OUTCOME_COLUMN].to_numpy(), regressors)
    except DatasetValidationError as err:
        raise DatasetValidationError(err.violations, describe=_line_of) from None
    _logger.info("read %d rows and %d regressors from %s", data.n, data.p,
            file_path)
    return data
