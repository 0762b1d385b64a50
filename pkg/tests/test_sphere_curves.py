import math

import numpy as np
import pytest

from critical_profiles import blaschke_profile, constant_profile
from energy_catalog import EnergyKind, EnergySpec
from errors import ConstraintViolation, NoRoot, NotClosed, ParameterError
from pipeline import curvature_maxima
from sphere_curves import (admissible_pairs, check_closure_pair, closure_search, curve_stats,
                           holonomy_cover_from_area, progression_angle, reconstruct, solid_angle)


def test_closed_curve_progression(gamma_32):
    d_star, curve = gamma_32
    assert d_star > 1.0
    assert curve.progression == pytest.approx(4.0 * math.pi / 3.0, abs=1e-7)
    assert curve.closure_gap <= 1e-6
    assert curve.is_closed
    assert curve.lobes == 3 and curve.windings == 2


def test_closed_curve_shape(gamma_32):
    _, curve = gamma_32
    assert curvature_maxima(curve.kappa) == 3
    assert np.allclose(np.linalg.norm(curve.points, axis=1), 0.5, atol=1e-9)
    assert np.allclose(np.linalg.norm(curve.tangents, axis=1), 1.0, atol=1e-9)
    assert np.max(np.abs(np.einsum('ij,ij->i', curve.points, curve.tangents))) <= 1e-9


def test_closed_curve_area_cross_check(gamma_32):
    _, curve = gamma_32
    stats = curve_stats(curve)
    assert stats.length == pytest.approx(3.0 * math.pi / 2.0)
    assert stats.polygon_area == pytest.approx(stats.area, abs=1e-6)
    assert stats.energy > 0.0


def test_progression_is_period_independent(gamma_32):
    _, curve = gamma_32
    second, _ = progression_angle(curve.profile, period_index=1)
    assert second == pytest.approx(curve.progression, abs=1e-8)


def test_admissible_pairs():
    pairs = admissible_pairs(7)
    assert (3, 2) in pairs
    assert (5, 3) in pairs
    assert (7, 4) in pairs
    assert (4, 3) not in pairs
    assert all(m < 2 * n < math.sqrt(2.0) * m and math.gcd(m, n) == 1 for m, n in pairs)


def test_pair_outside_range_warns(blaschke_spec):
    with pytest.warns(ConstraintViolation):
        check_closure_pair(blaschke_spec, 2, 2)
    with pytest.warns(ConstraintViolation):
        check_closure_pair(blaschke_spec, 3, 1)
    with pytest.raises(ParameterError):
        check_closure_pair(blaschke_spec, 0, 1)


def test_unreachable_target_has_no_root(blaschke_spec):
    # 2 pi / 3 lies below every progression angle of the Blaschke family
    with pytest.warns(ConstraintViolation):
        with pytest.raises(NoRoot):
            closure_search(blaschke_spec, 4.0, 3, 1, d_bracket=(1.5, 3.0), n_samples=64)


def test_great_circle_closes():
    profile = constant_profile(EnergySpec(EnergyKind.BENDING), 4.0, 0.0, n_samples=64)
    curve = reconstruct(profile)
    assert curve.total_length == pytest.approx(math.pi)
    assert curve.closure_gap <= 1e-9
    assert np.allclose(curve.points[0], [0.5, 0.0, 0.0])
    assert np.allclose(curve.tangents[0], [0.0, 1.0, 0.0])
    # Half the sphere of area pi lies on the left
    assert curve_stats(curve).area == pytest.approx(0.5 * math.pi)


def test_constant_profile_progression_axis():
    profile = constant_profile(EnergySpec(EnergyKind.BENDING), 4.0, 0.0)
    angle, axis = progression_angle(profile)
    assert angle == pytest.approx(2.0 * math.pi)
    assert np.allclose(axis, [0.0, 0.0, 1.0])


def test_open_curve_reports_gap():
    profile = blaschke_profile(4.0, 0.0, 2.0, 256)
    curve = reconstruct(profile)
    assert not curve.is_closed
    with pytest.raises(NotClosed):
        curve_stats(curve)


def test_planar_circle():
    profile = constant_profile(EnergySpec(EnergyKind.BENDING), 0.0, 2.0, n_samples=1024)
    curve = reconstruct(profile)
    assert curve.radius == math.inf
    assert np.all(curve.points[:, 2] == 0.0)
    assert curve.closure_gap <= 1e-9
    assert curve_stats(curve).area == pytest.approx(0.25 * math.pi, rel=1e-4)


def test_negative_rho_rejected():
    profile = blaschke_profile(4.0, 0.0, 2.0, 64)
    with pytest.raises(ParameterError):
        reconstruct(profile, rho=-1.0)


def test_solid_angle_of_octant():
    e = np.eye(3)
    assert solid_angle(e[0], e[1], e[2]) == pytest.approx(0.5 * math.pi)
    assert solid_angle(e[0], e[2], e[1]) == pytest.approx(-0.5 * math.pi)


def test_holonomy_cover_from_area():
    assert holonomy_cover_from_area(0.5 * math.pi) == 2
    assert holonomy_cover_from_area(math.pi / 3.0) == 3
    assert holonomy_cover_from_area(1.0, m_max=8) is None
