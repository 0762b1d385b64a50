import json

from reports import Check, VerificationReport


def test_check_gate():
    assert Check('x', 1.0).passed
    assert Check('x', 1e-9, 1e-6).passed
    assert not Check('x', 1e-3, 1e-6).passed
    assert not Check('x', float('nan'), 1e-6).passed


def test_add_check_replaces_and_fills_note():
    report = VerificationReport("profile")
    report.add_check('el_residual', 1.0, 1e-6)
    check = report.add_check('el_residual', 1e-9, 1e-6)
    assert len(report.checks) == 1
    assert check.note == "Euler-Lagrange equation of the curve"
    assert report.passed


def test_failures_and_lookup():
    report = VerificationReport("lift")
    report.add_check('unit_speed', 1e-12, 1e-9)
    report.add_check('horizontality', 1e-3, 1e-9)
    assert not report.passed
    assert [check.name for check in report.failures()] == ['horizontality']
    assert report.get_check('missing') is None


def test_apply_tolerances_by_dotted_suffix():
    report = VerificationReport("verify")
    report.add_check('blaschke.el_residual', 1e-5, 1e-6)
    report.add_check('tct.el_residual', 1e-5, 1e-6)
    report.apply_tolerances({'blaschke.el_residual': 1e-4})
    assert report.get_check('blaschke.el_residual').passed
    assert not report.get_check('tct.el_residual').passed
    report.apply_tolerances({'el_residual': 1e-4})
    assert report.passed


def test_extend_prefixes_names():
    inner = VerificationReport("profile")
    inner.add_check('first_integral', 0.0, 1e-8)
    inner.add_value('period', 1.5)
    inner.add_warning("zero curvature")
    outer = VerificationReport("stages")
    outer.extend(inner, prefix="profile.")
    assert outer.get_check('profile.first_integral') is not None
    assert outer.values == {'profile.period': 1.5}
    assert outer.warnings == ["zero curvature"]


def test_generate_report_layout():
    report = VerificationReport("close", {'rho': '4.0'})
    report.add_value('d_star', 2.0)
    report.add_check('closure_gap', 1e-12, 1e-9)
    report.add_warning("sheared lift")
    lines = report.generate_report().split("\n")
    assert lines[:3] == ["CLOSE", "=" * 50, "rho: 4.0"]
    assert "d_star: 2" in lines
    assert "  closure_gap: 1.000000e-12 <= 1e-09 [PASS]  (closed curve)" in lines
    assert "  - sheared lift" in lines
    assert lines[-1] == "status: PASS"


def test_json_keeps_nan_readable():
    report = VerificationReport("verify")
    report.add_check('speed', float('nan'), 1e-8)
    data = json.loads(report.to_json())
    assert set(data) == {'title', 'passed', 'provenance', 'values', 'checks', 'warnings'}
    assert data['passed'] is False
    assert data['checks'][0]['value'] == 'nan'
    assert data['checks'][0]['note'] == "evolution speed |P'|"
