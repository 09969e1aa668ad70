import warnings
from unittest.mock import MagicMock, patch

import pytest
from typer.testing import CliRunner

from multiperiod.cli import app
from multiperiod.exceptions import PreconditionError, RwaValidityWarning
from multiperiod.runner import CheckResult
from multiperiod.verify import VerificationSummary

runner = CliRunner()


# --- Fixtures ---


@pytest.fixture
def write_config(tmp_path):
    """Writes a scenario config into the temp directory and returns its path."""

    def write(text, name="scenario.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def mock_run_scenario():
    """Mocks the sweep runner with an empty, passing report."""
    with patch("multiperiod.cli.run_scenario") as mock_run:
        report = MagicMock()
        report.checks = []
        report.rows = []
        report.n_points = 0
        report.passed = True
        mock_run.return_value = report
        yield mock_run


@pytest.fixture
def mock_verify_all():
    with patch("multiperiod.cli.verify_all") as mock_verify:
        yield mock_verify


def _result(name, passed, reference=False):
    return CheckResult(
        name=name,
        passed=passed,
        worst_residual=1e-3,
        tol=4e-5,
        detail="details of " + name,
        reference=reference,
    )


# --- run ---


def test_run_command(tmp_path, write_config):
    """Test that 'run' writes the CSV and JSON reports into --out."""
    config = write_config(
        'scenario = "two-qubit-crossing"\n[fixed]\nmu = 0.6\n[sweep.F]\nvalues = [0.4, 0.8]\n'
    )

    result = runner.invoke(app, ["run", str(config), "--out", str(tmp_path / "out")])

    assert result.exit_code == 0, result.output
    assert "Scenario successfully completed" in result.output
    assert (tmp_path / "out" / "two-qubit-crossing.csv").exists()
    assert (tmp_path / "out" / "two-qubit-crossing.json").exists()


def test_run_seed_override(tmp_path, write_config):
    config = write_config(
        'scenario = "chain-ed"\nseeds = [1]\n[fixed]\nL = 2\nmu = 0.6\nF = 0.8\n'
    )

    result = runner.invoke(
        app, ["run", str(config), "--out", str(tmp_path), "--seed", "4,5", "--threads", "2"]
    )

    assert result.exit_code == 0, result.output
    csv_lines = (tmp_path / "chain-ed.csv").read_text(encoding="utf-8").splitlines()
    assert csv_lines[2] == "# seeds = 4,5"


def test_run_missing_config(tmp_path):
    result = runner.invoke(app, ["run", str(tmp_path / "missing.toml")])

    assert result.exit_code == 2
    assert "not found" in result.output


def test_run_unknown_key(write_config):
    """Test that config errors exit with code 2 and name the offending line."""
    config = write_config('scenario = "ramsey"\ncolour = "red"\n')

    result = runner.invoke(app, ["run", str(config)])

    assert result.exit_code == 2
    assert "line 2" in result.output
    assert "colour" in result.output


def test_run_invalid_seed(write_config):
    config = write_config('scenario = "ramsey"\n[fixed]\nnu1 = 1.0\n')

    result = runner.invoke(app, ["run", str(config), "--seed", "one"])

    assert result.exit_code == 2


def test_run_capacity(tmp_path, write_config):
    config = write_config('scenario = "chain-ed"\n[fixed]\nL = 15\nmu = 0.4\nF = 0.7\n')

    result = runner.invoke(app, ["run", str(config), "--out", str(tmp_path)])

    assert result.exit_code == 3
    assert "L_max" in result.output


def test_run_failed_invariant(tmp_path, write_config):
    """Test that a tolerance below the floating-point floor fails with exit code 1."""
    config = write_config(
        'scenario = "single-qubit-quasienergy"\n[fixed]\nF1 = 2.1\n'
        "[sweep.Omega]\nstart = 0.3\nstop = 5.0\ncount = 5\n"
    )

    result = runner.invoke(app, ["run", str(config), "--out", str(tmp_path), "--tol", "1e-30"])

    assert result.exit_code == 1
    assert "invariant checks failed" in result.output


def test_run_precondition_error(write_config, mock_run_scenario):
    config = write_config('scenario = "ramsey"\n[fixed]\nnu1 = 1.0\n')
    mock_run_scenario.side_effect = PreconditionError("Error: max_N must be at least 2")

    result = runner.invoke(app, ["run", str(config)])

    assert result.exit_code == 2
    assert "max_N" in result.output


def test_run_reports_rwa_warnings_once(write_config, mock_run_scenario):
    """Test that physics advisories raised during the sweep are printed once."""
    config = write_config('scenario = "ramsey"\n[fixed]\nnu1 = 1.0\n')

    def warn(*args, **kwargs):
        for _ in range(3):
            warnings.warn("coupling 0.5 is not small compared to omega0", RwaValidityWarning)
        return mock_run_scenario.return_value

    mock_run_scenario.side_effect = warn

    result = runner.invoke(app, ["run", str(config)])

    assert result.exit_code == 0
    assert result.output.count("Warning: coupling 0.5") == 1


def test_run_passes_options(tmp_path, write_config, mock_run_scenario):
    config = write_config('scenario = "ramsey"\n[fixed]\nnu1 = 1.0\n')

    runner.invoke(app, ["run", str(config), "--threads", "3", "--tol", "1e-8"])

    mock_run_scenario.assert_called_once()
    _, kwargs = mock_run_scenario.call_args
    assert kwargs == {"threads": 3, "tol": 1e-8}


def test_run_rejects_zero_threads(write_config):
    config = write_config('scenario = "ramsey"\n[fixed]\nnu1 = 1.0\n')

    result = runner.invoke(app, ["run", str(config), "--threads", "0"])

    assert result.exit_code == 2


# --- verify ---


def test_verify_success(mock_verify_all):
    mock_verify_all.return_value = VerificationSummary([_result("closed-form", True)])

    result = runner.invoke(app, ["verify"])

    assert result.exit_code == 0
    assert "All checks passed" in result.output
    assert "closed-form" in result.output


def test_verify_failure(mock_verify_all):
    """Test that a failing check exits with code 1 and prints its detail."""
    mock_verify_all.return_value = VerificationSummary(
        [_result("closed-form", True), _result("jordan-wigner", False)]
    )

    result = runner.invoke(app, ["verify"])

    assert result.exit_code == 1
    assert "details of jordan-wigner" in result.output


def test_verify_reference_only(mock_verify_all):
    """Test that published reference bounds are shown but do not fail the suite."""
    mock_verify_all.return_value = VerificationSummary(
        [_result("fig3-threshold-F0.3", False, reference=True)]
    )

    result = runner.invoke(app, ["verify"])

    assert result.exit_code == 0
    assert "above reference" in result.output


def test_verify_passes_tol(mock_verify_all):
    mock_verify_all.return_value = VerificationSummary([])

    runner.invoke(app, ["verify", "--tol", "1e-16"])

    args, _ = mock_verify_all.call_args
    assert args[0] == 1e-16
