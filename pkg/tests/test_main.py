import pytest

import main as main_module
from config import OUTPUT_DIR_ENV
from main import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


def test_profile_command(tmp_path, capsys):
    code = main(['profile', '--d', '2', '--n-samples', '64', '--output-dir', str(tmp_path)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert out.startswith("CRITICAL PROFILE\n")
    assert "status: PASS" in out
    assert f"wrote {tmp_path / 'profile.txt'}" in out


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("d = 2\nn_samples = 64\nrho = 9\n")
    code = main(['profile', '-c', str(path), '--rho', '4', '--output-dir', str(tmp_path)])
    assert code == EXIT_OK
    assert "# rho: 4.0" in (tmp_path / 'profile.txt').read_text()


@pytest.mark.parametrize("argv", [
    ['profile', '--rho', 'abc', '--d', '2'],
    ['profile', '--d', '2', '--m', '3', '--n', '2'],
    ['profile', '--n-samples', '100', '--d', '2'],
    ['profile', '--d', '2', '--tol', 'el_residual'],
])
def test_configuration_errors(argv, tmp_path):
    assert main(argv + ['--output-dir', str(tmp_path)]) == EXIT_CONFIG


def test_config_error_shows_file_context(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("d = 2\nrho 4\n")
    assert main(['profile', '-c', str(path)]) == EXIT_CONFIG
    out = capsys.readouterr().out
    assert "Configuration Error: Line 2, Column 5" in out
    assert ">" in out and "^" in out


def test_numerical_error_exits_with_failure(tmp_path, capsys):
    assert main(['profile', '--d', '0.5', '--n-samples', '64', '--output-dir', str(tmp_path)]) == EXIT_FAILED
    assert capsys.readouterr().out.startswith("Error: d below the Blaschke range")


def test_unexpected_error_exits_with_failure(tmp_path, capsys, monkeypatch):
    def broken_run(subcommand, config):
        raise ValueError("array shapes disagree")

    monkeypatch.setattr(main_module, 'run', broken_run)
    assert main(['profile', '--d', '2', '--n-samples', '64', '--output-dir', str(tmp_path)]) == EXIT_FAILED
    assert capsys.readouterr().out.startswith("Unexpected error: array shapes disagree")
