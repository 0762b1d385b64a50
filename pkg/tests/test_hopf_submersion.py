import math

import numpy as np
import pytest

from critical_profiles import blaschke_profile, constant_profile
from energy_catalog import EnergyKind, EnergySpec
from errors import ChartExit, NotClosedLift, OffSphere, ParameterError
from hopf_submersion import (bcv_circle, bcv_line, bcv_tensors, bcv_vertical_check, closing_cover,
                             hopf_project, hopf_torus, horizontal_lift, phase_rotate, sectional_curvature,
                             subgrid_residuals, verify_vertical_geometry)
from sphere_curves import curve_stats, reconstruct


@pytest.fixture(scope='module')
def equator():
    return reconstruct(constant_profile(EnergySpec(EnergyKind.BENDING), 4.0, 0.0, n_samples=128))


@pytest.fixture(scope='module')
def gamma_32_lift(gamma_32):
    return horizontal_lift(gamma_32[1])


def test_hopf_map_lands_on_sphere_of_curvature_four():
    rng = np.random.default_rng(7)
    points = rng.normal(size=(50, 4))
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    image = hopf_project(points)
    assert np.allclose(np.linalg.norm(image, axis=1), 0.5, atol=1e-14)


def test_hopf_map_is_constant_on_fibers():
    point = np.array([0.6, 0.0, 0.0, 0.8])
    fiber = phase_rotate(point[None, :], np.linspace(0.0, 2.0 * math.pi, 9)[:, None])
    assert np.allclose(hopf_project(fiber), hopf_project(point[None, :]), atol=1e-14)


def test_hopf_map_rejects_points_off_sphere():
    with pytest.raises(OffSphere):
        hopf_project(np.array([[1.0, 1.0, 0.0, 0.0]]))


def test_great_circle_lift_closes_after_two_covers(equator):
    lift = horizontal_lift(equator)
    assert lift.m_cover == 2
    assert abs(math.remainder(lift.phase_advance, 2.0 * math.pi)) == pytest.approx(math.pi, abs=1e-9)
    assert lift.horizontality_residual <= 1e-7
    assert lift.unit_speed_residual <= 1e-7
    assert lift.projection_residual <= 1e-9


def test_great_circle_torus_is_minimal_and_flat(equator):
    mesh = hopf_torus(horizontal_lift(equator), n_t=128, strict=True)
    assert mesh.covers == 2
    assert not mesh.sheared
    assert mesh.shape == (256, 128)
    report = verify_vertical_geometry(mesh)
    assert report.passed, report.generate_report()
    assert float(np.max(np.abs(mesh.H))) <= 1e-5


def test_lift_invariants_on_closed_curve(gamma_32, gamma_32_lift):
    _, curve = gamma_32
    lift = gamma_32_lift
    assert lift.horizontality_residual <= 1e-7
    assert lift.unit_speed_residual <= 1e-7
    assert lift.projection_residual <= 1e-9
    stats = curve_stats(curve)
    assert abs(math.remainder(lift.phase_advance + 2.0 * stats.area, 2.0 * math.pi)) <= 1e-6
    assert stats.rational_cover == lift.m_cover


def test_vertical_torus_over_closed_curve(gamma_32_lift):
    mesh = hopf_torus(gamma_32_lift, m_covers=1, n_t=32)
    report = verify_vertical_geometry(mesh)
    for name in ('sphere_constraint', 'projection', 'horizontality', 'unit_speed', 'fiber_great_circle'):
        assert report.get_check(name).passed, name
    assert mesh.kappa.shape == (mesh.shape[0],)


def test_vertical_torus_residuals_shrink_under_refinement(gamma_32_lift):
    mesh = hopf_torus(gamma_32_lift, m_covers=1, n_t=64)
    report = verify_vertical_geometry(mesh)
    for name in ('mean_curvature', 'flatness'):
        assert report.get_check(name + '_refinement').passed, report.generate_report()
        assert report.values[name + '_fine'] == report.get_check(name).value
    coarse_mean, coarse_flat = subgrid_residuals(mesh)
    assert report.values['mean_curvature_coarse'] == coarse_mean
    assert report.values['flatness_coarse'] == coarse_flat


def test_strict_torus_needs_closing_cover(equator):
    lift = horizontal_lift(equator)
    with pytest.raises(NotClosedLift):
        hopf_torus(lift, m_covers=1, n_t=16, strict=True)


def test_non_strict_torus_shears_rows(equator):
    mesh = hopf_torus(horizontal_lift(equator), m_covers=1, n_t=16)
    assert mesh.sheared
    assert mesh.covers == 1


def test_lift_needs_sphere_of_curvature_four():
    curve = reconstruct(blaschke_profile(1.0, 0.0, 1.0, 64))
    with pytest.raises(ParameterError):
        horizontal_lift(curve)


def test_closing_cover():
    assert closing_cover(-math.pi) == 2
    assert closing_cover(2.0 * math.pi / 5.0) == 5
    assert closing_cover(math.nan) is None
    assert closing_cover(1.0, m_max=10) is None


def test_bcv_space_form_sectional_curvature():
    # 4a = b^2 is the round 3-sphere, here of curvature 1/4
    tensors = bcv_tensors(0.25, 1.0, 0.3, -0.2)
    e = np.eye(3)
    for u, v in ((e[0], e[1]), (e[0], e[2]), (e[1], e[2])):
        assert sectional_curvature(tensors, u, v) == pytest.approx(0.25, rel=1e-10)


def test_bcv_product_sectional_curvature():
    tensors = bcv_tensors(0.25, 0.0, 0.3, -0.2)
    e = np.eye(3)
    assert sectional_curvature(tensors, e[0], e[1]) == pytest.approx(1.0, rel=1e-10)
    assert sectional_curvature(tensors, e[0], e[2]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("a, b", [(0.25, 1.0), (-0.5, 2.0), (0.0, 1.0), (1.0, 0.0)])
def test_bcv_vertical_circle(a, b):
    report = bcv_vertical_check(a, b, bcv_circle(a, 0.5, n_samples=32))
    assert report.passed, report.generate_report()


def test_bcv_vertical_plane():
    report = bcv_vertical_check(0.0, 0.0, bcv_line(0.0, n_samples=16))
    assert report.passed


def test_bcv_geodesic_lines():
    for a in (0.5, -0.5):
        assert bcv_vertical_check(a, 1.0, bcv_line(a, n_samples=16)).passed


def test_bcv_chart_exit():
    with pytest.raises(ChartExit):
        bcv_circle(-1.0, 1.5)
    with pytest.raises(ChartExit):
        bcv_line(4.0, half_length=1.0)
