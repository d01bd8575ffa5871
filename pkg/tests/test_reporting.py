"""Test suite for the json and CSV readers and writers."""

# Imports from other packages
import json
import numpy as np
import pytest
# Imports from this package
from sieve_sgd.config import SsgdConfig
from sieve_sgd.errors import CsvParseError, DatasetValidationError
from sieve_sgd.estimator import run_ssgd_average
from sieve_sgd.inference import confidence_intervals, link_for_inference, sandwich_vcov
from sieve_sgd.reporting import (
    SCHEMA,
    read_csv_dataset,
    read_json_result,
    report_table,
    report_to_dict,
    result_from_dict,
    result_to_dict,
    write_csv_file,
    write_json_file,
)
from sieve_sgd.simulation import (
    REFERENCE_BETA0,
    DgpSpec,
    ReplicationRecord,
    generate,
    reference_spec,
    summarize,
)


@pytest.fixture(scope="module")
def fitted():
    """A small averaged fit with a sandwich covariance attached."""

    data = generate(DgpSpec((1.0, -1.0, 0.5), "logistic", "normal", 400, seed=8))
    config = SsgdConfig(K=60, q=2, refit_every=10, seed=3)
    result = run_ssgd_average(data, config)
    vcov = sandwich_vcov(data, result.beta_avg, link_for_inference(data, result))
    return result.with_vcov(vcov)


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_json_round_trip(fitted, tmp_path):
    """A FitResult written to json reads back field for field."""

    path = write_json_file(result_to_dict(fitted), str(tmp_path / "fit.json"))
    restored = read_json_result(path)

    assert restored.estimator == fitted.estimator and restored.K == fitted.K
    for name in ("beta_final", "beta_avg", "beta_normalized"):
        assert np.array_equal(getattr(restored, name), getattr(fitted, name))
    assert np.array_equal(restored.path.betas, fitted.path.betas)
    assert np.array_equal(restored.path.gradient_norms, fitted.path.gradient_norms)
    assert restored.config == fitted.config
    assert restored.window == fitted.window
    assert restored.warnings == fitted.warnings

    # Sieve fit, minus the training fitted values
    assert restored.sieve_fit == fitted.sieve_fit
    assert np.array_equal(restored.sieve_fit.pi, fitted.sieve_fit.pi)
    assert np.array_equal(restored.sieve_fit.basis.orthonormalizer,
            fitted.sieve_fit.basis.orthonormalizer)
    assert restored.sieve_fit.fitted is None
    z = np.linspace(-2.0, 2.0, 9)
    assert np.array_equal(restored.sieve_fit.basis.design(z),
            fitted.sieve_fit.basis.design(z))

    assert np.array_equal(restored.vcov.vcov, fitted.vcov.vcov)
    assert restored.vcov.form == fitted.vcov.form
    assert restored.vcov.f_correction_included


def test_json_carries_schema_and_intervals(fitted):
    """The json text has the schema version and optional intervals."""

    intervals = confidence_intervals(fitted, fitted.vcov)
    raw = json.loads(write_json_file(result_to_dict(fitted, intervals)))

    assert raw["schema"] == SCHEMA
    assert raw["intervals"]["level"] == 0.95
    assert len(raw["intervals"]["lower"]) == 3
    # Intervals are output only
    assert result_from_dict(raw).vcov is not None


def test_unknown_schema(fitted):
    """Other schema versions are refused."""

    raw = result_to_dict(fitted)
    raw["schema"] = SCHEMA + 1
    with pytest.raises(ValueError):
        result_from_dict(raw)
    del raw["schema"]
    with pytest.raises(ValueError):
        result_from_dict(raw)


def _reference_report(n):
    spec = reference_spec("normal", n=n)
    truth = np.array(REFERENCE_BETA0[1:])
    records = [ReplicationRecord(i, i, tuple(truth + 0.01 * (i - 1)))
            for i in range(3)]
    return summarize(records, spec, SsgdConfig(), "group")


def test_report_table_layout():
    """One Beta row per normalized coefficient, Bias and RMSE per n."""

    table = report_table([_reference_report(5000), _reference_report(10000)])

    assert list(table.columns) == ["Beta", "Bias_N=5000", "RMSE_N=5000",
            "Bias_N=10000", "RMSE_N=10000"]
    assert list(table["Beta"]) == ["beta{}".format(j) for j in range(2, 10)]
    assert np.allclose(table["Bias_N=5000"], 0.0, atol=1e-15)


def test_write_csv_file(tmp_path):
    """The CSV text has a header and eight rows with six decimals."""

    text = write_csv_file([_reference_report(5000)])
    lines = text.splitlines()

    assert lines[0] == "Beta,Bias_N=5000,RMSE_N=5000"
    assert len(lines) == 9
    beta, bias, rmse = lines[1].split(",")
    assert beta == "beta2" and abs(float(bias)) < 1e-6
    assert len(rmse.split(".")[1]) == 6

    path = write_csv_file([_reference_report(5000)], str(tmp_path / "table.csv"))
    with open(path) as file:
        assert file.read() == text


def test_report_to_dict():
    """Reports serialize with their records."""

    raw = json.loads(write_json_file(report_to_dict(_reference_report(5000))))

    assert raw["replications"] == 3 and raw["failures"] == 0
    assert len(raw["records"]) == 3
    assert raw["spec"]["n"] == 5000
    assert len(raw["rmse_ratio"]) == 8


def test_read_csv_dataset(tmp_path):
    """Header, a y column anywhere and numeric regressors."""

    path = _write(tmp_path, "y,x1,x2\n1,0.5,1\n0,-1.2,2e-1\n1,3,-7.5E+0\n")
    data = read_csv_dataset(path)

    assert (data.n, data.p) == (3, 2)
    assert tuple(data.columns) == ("x1", "x2")
    assert np.array_equal(data.y, [1.0, 0.0, 1.0])
    assert np.array_equal(data.X[:, 1], [1.0, 0.2, -7.5])


@pytest.mark.parametrize("cell", ["abc", "nan", "1.", "+2", "1,5", ""])
def test_read_csv_not_a_number(tmp_path, cell):
    """Cells outside the number grammar fail with their file line."""

    rows = ["x1,x2,y", "1,2,0", "2,1,1", "3,0.5,1"]
    rows[3] = '3,"{}",1'.format(cell)
    path = _write(tmp_path, "\n".join(rows) + "\n")

    with pytest.raises(CsvParseError) as err:
        read_csv_dataset(path)
    assert err.value.line == 4
    assert "line 4" in str(err.value)


def test_read_csv_bad_outcome_names_line(tmp_path):
    """An outcome of 2 on line 17 is reported at line 17."""

    rows = ["x1,y"] + ["{},{}".format(i, i % 2) for i in range(15)] + ["15,2"]
    path = _write(tmp_path, "\n".join(rows) + "\n")

    with pytest.raises(DatasetValidationError) as err:
        read_csv_dataset(path)
    assert err.value.codes == ("non_binary_outcome",)
    assert "line 17" in str(err.value)


def test_read_csv_structure_errors(tmp_path):
    """Empty files, a missing y column and a lone y column fail."""

    with pytest.raises(CsvParseError):
        read_csv_dataset(_write(tmp_path, "", "empty.csv"))
    with pytest.raises(CsvParseError) as err:
        read_csv_dataset(_write(tmp_path, "a,b\n1,0\n2,1\n", "no_y.csv"))
    assert err.value.line == 1
    with pytest.raises(CsvParseError):
        read_csv_dataset(_write(tmp_path, "y\n1\n0\n", "only_y.csv"))
