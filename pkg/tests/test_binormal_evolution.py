from dataclasses import replace

import numpy as np
import pytest

from binormal_evolution import (analytic_curvatures, embed_and_fit, evolve, measured_profile, mesh_checks,
                                recover_energy, skew_exp, surface_curvatures, weingarten_residual)
from critical_profiles import blaschke_profile, constant_profile, total_curvature_profile
from energy_catalog import EnergyKind, EnergySpec
from errors import IsoparametricInput, ParameterError, PoorFit
from pipeline import CATALOG_EXAMPLES
from sphere_curves import profile_for, reconstruct


@pytest.fixture(scope='module')
def blaschke_mesh():
    profile = blaschke_profile(4.0, 0.0, 2.0, 1024)
    embedded, motion = embed_and_fit(reconstruct(profile))
    return evolve(embedded, motion, n_t=64)


def test_minimal_torus_over_closed_curve(gamma_32, blaschke_spec):
    _, curve = gamma_32
    embedded, motion = embed_and_fit(curve, spec=blaschke_spec)
    mesh = evolve(embedded, motion, n_t=64)
    assert embedded.closed
    fields = surface_curvatures(mesh)
    assert float(np.nanmax(np.abs(fields.numeric_H))) <= 1e-4
    assert float(np.nanmax(np.abs(mesh.H))) <= 1e-5
    report = mesh_checks(mesh)
    for name in ('sphere_constraint', 'orbit_circles', 'congruent_rows', 'speed'):
        assert report.get_check(name).passed, report.generate_report()


def test_orbit_is_periodic(blaschke_mesh):
    motion = blaschke_mesh.motion
    assert motion.is_rank_two
    assert motion.fit_residual <= 1e-8
    start = blaschke_mesh.embedded.points
    assert np.allclose(motion.apply(motion.period, start), start, atol=1e-10)


def test_finite_difference_curvatures_match(blaschke_mesh):
    fields = surface_curvatures(blaschke_mesh)
    assert fields.report.passed, fields.report.generate_report()
    assert fields.report.values['catalog_invariant'] == 'H'
    for name in ('numeric_vs_analytic_H', 'gauss_equation'):
        assert fields.report.get_check(name + '_refinement').passed
    assert fields.report.values['numeric_vs_analytic_H_fine'] < fields.report.values['numeric_vs_analytic_H_coarse']


def test_measured_profile_matches_analytic_fields(blaschke_mesh):
    kappa, speed = measured_profile(blaschke_mesh)
    # Open mesh: the difference stencils lose two rows at each end
    assert np.count_nonzero(np.isnan(kappa)) == 4
    inner = slice(2, -2)
    scale = float(np.max(np.abs(blaschke_mesh.kappa)))
    assert np.max(np.abs(kappa[inner] - blaschke_mesh.kappa[inner])) <= 1e-6 * scale
    fields = surface_curvatures(blaschke_mesh)
    assert np.nanmax(np.abs(kappa[inner] + fields.numeric_kappa1[inner, 0])) <= 1e-4 * scale

    dp = blaschke_mesh.embedded.dP
    factor = float(speed @ dp / (dp @ dp))
    assert factor == pytest.approx(1.0, abs=1e-4)
    assert np.max(np.abs(speed - factor * dp)) <= 1e-7 * float(np.max(np.abs(dp)))


CATALOG_IDS = [spec.kind.value for spec, _ in CATALOG_EXAMPLES]
TORUS_EXAMPLES = [example for example in CATALOG_EXAMPLES if example[0].kind is not EnergyKind.BENDING]


@pytest.mark.parametrize("spec, d", CATALOG_EXAMPLES, ids=CATALOG_IDS)
def test_weingarten_residual_on_catalog(spec, d):
    profile = profile_for(spec, 4.0, d, 512)
    # Elastic curves cross kappa = 0, where the relation divides by kappa P'
    tol = 1e-5 if spec.kind is EnergyKind.BENDING else 1e-6
    assert weingarten_residual(profile) <= tol


@pytest.mark.parametrize("spec, d", TORUS_EXAMPLES, ids=[spec.kind.value for spec, _ in TORUS_EXAMPLES])
def test_catalog_constant_on_evolution_torus(spec, d):
    profile = profile_for(spec, 4.0, d, 256)
    embedded, motion = embed_and_fit(reconstruct(profile), profile)
    mesh = evolve(embedded, motion, n_t=16)
    check = surface_curvatures(mesh).report.get_check('catalog_constant')
    assert check.value <= 1e-5


def two_period_mesh(profile, n_t=16):
    embedded, motion = embed_and_fit(reconstruct(profile, m_periods=2), profile)
    return evolve(embedded, motion, n_t=n_t)


@pytest.mark.parametrize("spec, d", TORUS_EXAMPLES, ids=[spec.kind.value for spec, _ in TORUS_EXAMPLES])
def test_energy_recovery(spec, d):
    recovered = recover_energy(two_period_mesh(profile_for(spec, 4.0, d, 512)))
    assert recovered.spec is not None
    assert recovered.spec.kind is spec.kind
    assert recovered.lambda_shift == pytest.approx(spec.lam, abs=1e-3 * max(1.0, abs(spec.lam)))
    assert recovered.relative_error <= 1e-3
    assert set(recovered.tabulated()) == {'kappa', 'P', 'dP'}


def test_recovery_reads_the_grid():
    mesh = two_period_mesh(blaschke_profile(4.0, 0.0, 2.0, 256))
    blank = replace(mesh, kappa=np.zeros_like(mesh.kappa), signed_speed=np.zeros_like(mesh.signed_speed))
    recovered = recover_energy(blank)
    assert recovered.spec is not None
    assert recovered.spec.kind is EnergyKind.EXTENDED_BLASCHKE
    assert recovered.relative_error <= 1e-3


def test_recovery_follows_the_surface_geometry():
    blaschke = two_period_mesh(blaschke_profile(4.0, 0.0, 2.0, 256))
    tct = two_period_mesh(total_curvature_profile(4.0, 3.0, 3.5, 1, 256))
    # Same profile metadata, total-curvature surface
    swapped = replace(blaschke, vertices=tct.vertices, reference_normals=tct.reference_normals,
                      motion=tct.motion, embedded=replace(blaschke.embedded, step=tct.embedded.step,
                                                          binormal=tct.embedded.binormal),
                      profile=replace(blaschke.profile, period=tct.profile.period))
    recovered = recover_energy(swapped)
    assert recovered.spec.kind is EnergyKind.TOTAL_CURVATURE_TYPE


def test_recovery_needs_more_than_one_open_period(blaschke_mesh):
    with pytest.raises(ParameterError):
        recover_energy(blaschke_mesh)


def test_mismatched_energy_has_no_killing_extension():
    curve = reconstruct(blaschke_profile(4.0, 0.0, 2.0, 256))
    with pytest.raises(PoorFit):
        embed_and_fit(curve, spec=EnergySpec(EnergyKind.EXPONENTIAL, lam=0.2))


def test_circle_is_isoparametric():
    curve = reconstruct(constant_profile(EnergySpec(EnergyKind.BENDING), 4.0, 1.0, n_samples=64))
    with pytest.raises(IsoparametricInput):
        embed_and_fit(curve)


def test_analytic_curvatures_follow_relation():
    profile = blaschke_profile(4.0, 0.5, 2.0, 128)
    kappa1, kappa2 = analytic_curvatures(profile.kappa, profile.kappa_s, profile.kappa_ss, profile.spec, 4.0)
    assert np.allclose(kappa1, -profile.kappa)
    assert np.allclose(0.5 * (kappa1 + kappa2), -0.5, atol=1e-9)


def test_skew_exp_is_a_rotation():
    generator = np.zeros((4, 4))
    generator[1, 0], generator[0, 1] = 2.0, -2.0
    rotation = skew_exp(generator, np.pi / 4.0)
    assert np.allclose(rotation @ rotation.T, np.eye(4))
    assert np.allclose(rotation[:2, :2], [[0.0, -1.0], [1.0, 0.0]], atol=1e-15)
