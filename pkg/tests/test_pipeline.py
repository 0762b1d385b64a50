import math
import os

import numpy as np
import pytest

from config import OUTPUT_DIR_ENV, PipelineConfig
from errors import ConfigError
from pipeline import (_grid_columns, clifford_checks, curvature_maxima, hopf_report, merged_tolerances, run,
                      run_close, run_verify)


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


def test_profile_stage_writes_artifacts(tmp_path):
    result = run('profile', PipelineConfig(d=2.0, n_samples=64, output_dir=str(tmp_path)))
    assert result.passed
    names = sorted(os.path.basename(path) for path in result.artifacts)
    assert names == ['profile.txt', 'profile_report.json', 'profile_report.txt']
    table = (tmp_path / 'profile.txt').read_text().splitlines()
    assert "# energy: extended_blaschke" in table
    assert "# s kappa kappa_s kappa_ss" in table
    rows = [line for line in table if not line.startswith("#")]
    assert len(rows) == 64
    assert result.report.values['kappa_max'] == pytest.approx(4.0 / (4.0 - math.sqrt(12.0)), rel=1e-12)


def test_profile_output_is_reproducible(tmp_path):
    first = run('profile', PipelineConfig(d=2.0, n_samples=64, output_dir=str(tmp_path / 'a')))
    second = run('profile', PipelineConfig(d=2.0, n_samples=64, output_dir=str(tmp_path / 'b')))
    assert first.report.passed and second.report.passed
    assert (tmp_path / 'a' / 'profile.txt').read_bytes() == (tmp_path / 'b' / 'profile.txt').read_bytes()


def test_tolerance_override_fails_a_check(tmp_path):
    config = PipelineConfig(d=2.0, n_samples=64, output_dir=str(tmp_path), tolerances={'first_integral': 1e-300})
    result = run('profile', config)
    check = result.report.get_check('first_integral')
    assert check.tolerance == 1e-300
    assert merged_tolerances(config)['first_integral'] == 1e-300
    assert merged_tolerances(config)['el_residual'] == 1e-6
    if check.value > 0.0:
        assert not result.passed


def test_close_stage_on_shared_curve(tmp_path, gamma_32):
    _, curve = gamma_32
    config = PipelineConfig(m=3, n=2, output_dir=str(tmp_path))
    result = run_close(config, curve=curve)
    assert result.passed, result.report.generate_report()
    assert result.report.values['curvature_maxima'] == 3
    assert (tmp_path / 'curve_m3_n2.obj').exists()


def test_stages_run_in_order(tmp_path):
    config = PipelineConfig(d=2.0, n_samples=64, output_dir=str(tmp_path), stages=('profile',))
    result = run('stages', config)
    assert result.passed
    assert result.report.get_check('profile.el_residual') is not None


def test_stages_need_a_list(tmp_path):
    with pytest.raises(ConfigError):
        run('stages', PipelineConfig(d=2.0, output_dir=str(tmp_path)))


def test_unknown_subcommand():
    with pytest.raises(ConfigError):
        run('render', PipelineConfig(d=2.0))


def test_clifford_controls():
    report = clifford_checks(64)
    assert report.passed, report.generate_report()
    assert report.values['R'] == pytest.approx(math.sqrt(2.0))


def test_curvature_maxima():
    theta = np.arange(256) * (2.0 * math.pi / 256)
    assert curvature_maxima(2.0 + np.cos(3.0 * theta)) == 3
    assert curvature_maxima(np.full(16, 2.0)) == 0


def test_grid_columns_flatten_rows_first():
    columns = _grid_columns(np.array([0.0, 1.0]), np.array([0.0, 0.5, 1.0]),
                            kappa1=np.array([1.0, 2.0]), H=np.arange(6.0).reshape(2, 3))
    assert list(columns['s']) == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    assert list(columns['t']) == [0.0, 0.5, 1.0, 0.0, 0.5, 1.0]
    assert list(columns['kappa1']) == [1.0, 1.0, 1.0, 2.0, 2.0, 2.0]
    assert list(columns['H']) == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]


def test_hopf_report_ties_area_cover_to_lift(gamma_32):
    _, curve = gamma_32
    config = PipelineConfig(m=3, n=2, n_t=16)
    report, mesh = hopf_report(curve, config, merged_tolerances(config))
    assert report.get_check('holonomy_area').passed
    assert report.get_check('cover_consistency').passed
    expected = mesh.lift.m_cover if mesh.lift.m_cover is not None else 'none'
    assert report.values['area_cover'] == expected
    assert report.get_check('mean_curvature_refinement') is not None


def test_recover_stage_on_open_profile(tmp_path):
    result = run('recover', PipelineConfig(d=2.0, n_samples=256, n_t=16, output_dir=str(tmp_path)))
    assert result.passed, result.report.generate_report()
    assert result.report.values['branch_samples'] >= 16
    assert (tmp_path / 'recovered_energy.txt').exists()


def test_verify_is_deterministic(tmp_path):
    reports = []
    for name in ('first', 'second'):
        config = PipelineConfig(n_samples=256, n_t=16, output_dir=str(tmp_path / name))
        result = run_verify(config)
        assert len(result.report.checks) > 100
        reports.append((tmp_path / name / 'verify_report.json').read_bytes())
    assert reports[0] == reports[1]
