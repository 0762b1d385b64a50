"""
Pipeline Stages - Profile, closure, lift, evolution and recovery runs
Shared by the command-line interface and the HTTP run service. Every stage
returns a StageResult holding its verification report and written artifacts.
"""

import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from binormal_evolution import (EvolutionTorusMesh, embed_and_fit, evolve, mesh_checks, recover_energy,
                                surface_curvatures, weingarten_residual)
from config import PipelineConfig
from critical_profiles import (CurvatureProfile, blaschke_profile, constant_profile, el_residual,
                               fib_derivative_check, first_integral_check, solve_profile,
                               total_curvature_profile)
from energy_catalog import EnergyKind, EnergySpec
from errors import ConfigError, PoorFit
from hopf_submersion import (VerticalTorusMesh, bcv_circle, bcv_line, bcv_vertical_check, hopf_torus,
                             horizontal_lift, verify_vertical_geometry)
from mesh_io import (ExportFormat, euler_characteristic, export, export_report_json, grid_angle_deviation,
                     project_mesh, quad_faces, torus_of_revolution_fit)
from reports import VerificationReport
from sphere_curves import SphereCurve, closure_search, curve_stats, profile_for, progression_angle, reconstruct

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = {
    'el_residual': 1e-6,
    'first_integral': 1e-8,
    'first_integral_numeric': 1e-6,
    'profile_oracle': 1e-7,
    'progression': 1e-7,
    'closure_gap': 1e-6,
    'area_cross_check': 1e-6,
    'holonomy_area': 1e-6,
    'weingarten_residual': 1e-6,
    'minimal_torus_H': 1e-5,
    'minimal_torus_numeric_H': 1e-4,
    'recovery_error': 1e-3,
    'recovered_lambda': 1e-3,
    'clifford_mean_curvature': 1e-6,
    'torus_fit': 1e-9,
    'conformality': 1e-9,
}

# Catalog examples on S^2(4): (energy, first-integral level)
CATALOG_EXAMPLES: Tuple[Tuple[EnergySpec, float], ...] = (
    (EnergySpec(EnergyKind.EXTENDED_BLASCHKE, lam=0.0), 2.0),
    (EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=3.0, epsilon=1), 3.5),
    (EnergySpec(EnergyKind.ASTIGMATISM, lam=0.9), 4.9),
    (EnergySpec(EnergyKind.EXPONENTIAL, lam=0.2), 1.1),
    (EnergySpec(EnergyKind.Q_ELASTIC, lam=0.5, q=1.0 / 3.0), 0.8),
    (EnergySpec(EnergyKind.BENDING, lam=0.0), 80.0),
)


@dataclass
class StageResult:
    """Outcome of one subcommand."""
    name: str
    report: VerificationReport
    artifacts: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.report.passed


def merged_tolerances(config: PipelineConfig) -> Dict[str, float]:
    merged = dict(DEFAULT_TOLERANCES)
    merged.update(config.tolerances)
    return merged


def _headers(config: PipelineConfig) -> Dict[str, str]:
    """Artifact provenance; the output directory is left out so runs compare byte-for-byte."""
    data = config.to_mapping()
    data.pop('output_dir', None)
    return data


def _path(config: PipelineConfig, name: str) -> str:
    return os.path.join(config.resolved_output_dir(), name)


def _write_report(report: VerificationReport, config: PipelineConfig, stem: str) -> List[str]:
    return [export(report, ExportFormat.REPORT, _path(config, stem + '.txt')),
            export_report_json(report, _path(config, stem + '.json'))]


def _grid_columns(s: np.ndarray, t: np.ndarray, **fields: np.ndarray) -> Dict[str, np.ndarray]:
    """Flatten per-row or per-vertex fields over an (s, t) grid, rows outermost."""
    n_s, n_t = len(s), len(t)
    columns = {'s': np.repeat(s, n_t), 't': np.tile(t, n_s)}
    for name, values in fields.items():
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = np.repeat(values[:, None], n_t, axis=1)
        columns[name] = values.reshape(-1)
    return columns


def curvature_maxima(kappa: np.ndarray) -> int:
    """Strict local maxima of a periodic sample sequence."""
    kappa = np.asarray(kappa, dtype=float)
    if np.ptp(kappa) <= 1e-12 * max(1.0, float(np.max(np.abs(kappa)))):
        return 0
    return int(np.count_nonzero((kappa > np.roll(kappa, 1)) & (kappa >= np.roll(kappa, -1))))


def build_profile(config: PipelineConfig) -> CurvatureProfile:
    """Profile at the configured d, or the closing profile of an (m, n) search."""
    spec = config.spec()
    if config.d is not None:
        return profile_for(spec, config.rho, config.d, config.n_samples)
    _, curve = closure_search(spec, config.rho, config.m, config.n, n_samples=config.n_samples,
                              workers=config.workers)
    return curve.profile


def build_curve(config: PipelineConfig) -> SphereCurve:
    """Closed gamma_{m,n}, or one period of the profile at d (closed only if it happens to be)."""
    spec = config.spec()
    if config.m is not None:
        d_star, curve = closure_search(spec, config.rho, config.m, config.n, n_samples=config.n_samples,
                                       workers=config.workers)
        logger.info("closed curve (%d, %d) at d=%.17g", config.m, config.n, d_star)
        return curve
    return reconstruct(profile_for(spec, config.rho, config.d, config.n_samples), config.rho)


def profile_report(profile: CurvatureProfile, tolerances: Dict[str, float]) -> VerificationReport:
    """Euler-Lagrange and first-integral checks of one profile."""
    report = VerificationReport("critical profile", profile.provenance())
    d_est, deviation = first_integral_check(profile)
    report.add_value('d_est', d_est)
    report.add_value('period', float(profile.period))
    report.add_value('kappa_min', float(np.min(profile.kappa)))
    report.add_value('kappa_max', float(np.max(profile.kappa)))
    report.add_check('el_residual', el_residual(profile), tolerances['el_residual'])
    gate = tolerances['first_integral'] if profile.closed_form else tolerances['first_integral_numeric']
    report.add_check('first_integral', deviation, gate)
    report.add_check('fib_derivative', fib_derivative_check(profile))
    return report


def closed_form_grid() -> List[Tuple[EnergyKind, float, float, float]]:
    """
    (family, rho, lambda, d) points for the closed-form and solver checks.

    Blaschke d sits at d_lo + f * sqrt(rho + lambda^2), which keeps the profile
    shape fixed across rho; total-curvature d runs between lambda and rho.
    """
    points = []
    for rho in (1.0, 4.0, 9.0):
        for lam in (-0.5, 0.0, 0.5):
            omega = math.sqrt(rho + lam * lam)
            for fraction in (0.1, 0.25, 0.5):
                points.append((EnergyKind.EXTENDED_BLASCHKE, rho, lam, 0.5 * (omega - lam) + fraction * omega))
        for lam in (0.25 * rho, 0.5 * rho, 0.75 * rho):
            for fraction in (0.25, 0.5, 0.75):
                points.append((EnergyKind.TOTAL_CURVATURE_TYPE, rho, lam, lam + fraction * (rho - lam)))
    return points


def closed_form_profile(kind: EnergyKind, rho: float, lam: float, d: float, n_samples: int) -> CurvatureProfile:
    if kind is EnergyKind.EXTENDED_BLASCHKE:
        return blaschke_profile(rho, lam, d, n_samples)
    return total_curvature_profile(rho, lam, d, 1, n_samples)


def oracle_deviation(closed: CurvatureProfile) -> float:
    """
    Pointwise distance between a closed-form profile and the numerical solver.

    The solver starts at kappa_min, which the closed forms reach at 3/4 of the period.
    """
    numeric = solve_profile(closed.spec, closed.rho, closed.d, closed.n_samples)
    shifted = closed.evaluate(numeric.s + 0.75 * closed.period)[0]
    return max(float(np.max(np.abs(shifted - numeric.kappa))), abs(numeric.period - closed.period))


def run_profile(config: PipelineConfig) -> StageResult:
    config.validate()
    tolerances = merged_tolerances(config)
    profile = build_profile(config)
    report = profile_report(profile, tolerances)
    report.apply_tolerances(config.tolerances)

    columns = {'s': profile.s, 'kappa': profile.kappa, 'kappa_s': profile.kappa_s,
               'kappa_ss': profile.kappa_ss}
    headers = dict(_headers(config), **profile.provenance())
    artifacts = [export(columns, ExportFormat.COLUMNS, _path(config, 'profile.txt'), headers)]
    artifacts += _write_report(report, config, 'profile_report')
    return StageResult('profile', report, artifacts)


def curve_report(curve: SphereCurve, config: PipelineConfig,
                 tolerances: Dict[str, float]) -> VerificationReport:
    """Closure, progression and area checks of a reconstructed curve."""
    report = VerificationReport("closed curve", curve.provenance())
    report.add_value('lobes', curve.lobes)
    report.add_value('windings', curve.windings)
    report.add_value('curvature_maxima', curvature_maxima(curve.kappa))
    report.add_check('el_residual', el_residual(curve.profile), tolerances['el_residual'])

    if config.m is None:
        advance = progression_angle(curve.profile)[0] if curve.rho > 0.0 else math.nan
        report.add_value('progression_angle', advance)
        report.add_value('closure_gap', curve.closure_gap)
        return report

    target = 2.0 * math.pi * config.n / config.m
    report.add_value('progression_angle', curve.progression)
    report.add_value('target_angle', target)
    report.add_check('progression', abs(curve.progression - target), tolerances['progression'])
    report.add_check('closure_gap', curve.closure_gap, tolerances['closure_gap'])
    stats = curve_stats(curve, config.spec(), tol=tolerances['closure_gap'])
    report.add_value('length', stats.length)
    report.add_value('energy', stats.energy)
    report.add_value('area', stats.area)
    report.add_value('polygon_area', stats.polygon_area)
    report.add_value('rational_cover', stats.rational_cover if stats.rational_cover is not None else 'none')
    report.add_check('area_cross_check', abs(stats.area - stats.polygon_area), tolerances['area_cross_check'])
    return report


def run_close(config: PipelineConfig, curve: Optional[SphereCurve] = None) -> StageResult:
    config.validate()
    tolerances = merged_tolerances(config)
    curve = build_curve(config) if curve is None else curve
    report = curve_report(curve, config, tolerances)
    report.apply_tolerances(config.tolerances)

    stem = f"curve_m{config.m}_n{config.n}" if config.m is not None else "curve"
    headers = dict(_headers(config), **curve.provenance())
    artifacts = [export(curve, ExportFormat.OBJ, _path(config, stem + '.obj'), headers)]
    columns = {'s': curve.s, 'x': curve.points[:, 0], 'y': curve.points[:, 1], 'z': curve.points[:, 2],
               'kappa': curve.kappa}
    artifacts.append(export(columns, ExportFormat.COLUMNS, _path(config, stem + '.txt'), headers))
    artifacts += _write_report(report, config, stem + '_report')
    return StageResult('close', report, artifacts)


def hopf_report(curve: SphereCurve, config: PipelineConfig,
                tolerances: Dict[str, float]) -> Tuple[VerificationReport, VerticalTorusMesh]:
    """Vertical torus over the curve with its H = kappa/2 report."""
    lift = horizontal_lift(curve)
    mesh = hopf_torus(lift, m_covers=config.m_covers, n_t=config.n_t, strict=config.strict)
    report = verify_vertical_geometry(mesh, tolerances=tolerances)
    if curve.is_closed and math.isfinite(lift.phase_advance):
        stats = curve_stats(curve, config.spec(), tol=tolerances['closure_gap'])
        report.add_value('enclosed_area', stats.area)
        report.add_check('holonomy_area', abs(math.remainder(lift.phase_advance + 2.0 * stats.area, 2.0 * math.pi)),
                         tolerances['holonomy_area'], "holonomy = -2 area mod 2 pi")
        report.add_value('area_cover', stats.rational_cover if stats.rational_cover is not None else 'none')
        report.add_check('cover_consistency', 0.0 if stats.rational_cover == lift.m_cover else 1.0, 0.5)
    return report, mesh


def run_lift(config: PipelineConfig, curve: Optional[SphereCurve] = None) -> StageResult:
    config.validate()
    tolerances = merged_tolerances(config)
    curve = build_curve(config) if curve is None else curve
    report, mesh = hopf_report(curve, config, tolerances)
    report.apply_tolerances(config.tolerances)

    headers = dict(_headers(config), **curve.profile.provenance())
    projected = project_mesh(mesh.vertices)
    headers['pole'] = " ".join(f"{x:.17g}" for x in projected.pole)
    artifacts = [export(projected, ExportFormat.OBJ, _path(config, 'hopf_torus.obj'), headers)]
    sidecar = _grid_columns(mesh.s, mesh.t, H=mesh.H, K_S=mesh.K_S)
    artifacts.append(export(sidecar, ExportFormat.COLUMNS, _path(config, 'hopf_torus_curvatures.txt'), headers))
    artifacts += _write_report(report, config, 'hopf_torus_report')
    return StageResult('lift', report, artifacts)


def evolution_report(curve: SphereCurve, config: PipelineConfig,
                     tolerances: Dict[str, float]) -> Tuple[VerificationReport, EvolutionTorusMesh]:
    """Binormal-evolution torus with mesh, curvature and Weingarten checks."""
    embedded, motion = embed_and_fit(curve, spec=config.spec())
    mesh = evolve(embedded, motion, n_t=config.n_t, strict=config.strict)
    report = mesh_checks(mesh, tolerances)
    fields = surface_curvatures(mesh, strict=config.strict, tolerances=tolerances)
    report.extend(fields.report)
    report.add_check('weingarten_residual', weingarten_residual(mesh.profile), tolerances['weingarten_residual'])
    report.add_value('max_abs_H', float(np.nanmax(np.abs(mesh.H))))
    spec = embedded.spec
    if spec.kind is EnergyKind.EXTENDED_BLASCHKE and spec.lam == 0.0 and mesh.rho > 0.0:
        report.add_check('minimal_torus_H', float(np.nanmax(np.abs(mesh.H))), tolerances['minimal_torus_H'],
                         "minimal torus H = 0")
        report.add_check('minimal_torus_numeric_H', float(np.nanmax(np.abs(fields.numeric_H))),
                         tolerances['minimal_torus_numeric_H'])
    return report, mesh


def _export_evolution(mesh: EvolutionTorusMesh, config: PipelineConfig, stem: str,
                      headers: Dict[str, str]) -> List[str]:
    faces = quad_faces(mesh.shape[0], mesh.shape[1], wrap=(mesh.embedded.closed, True))
    surface = mesh.vertices
    if mesh.rho > 0.0:
        surface = project_mesh(mesh.vertices, radius=1.0 / math.sqrt(mesh.rho))
        headers = dict(headers, pole=" ".join(f"{x:.17g}" for x in surface.pole))
    path = export(surface, ExportFormat.OBJ, _path(config, stem + '.obj'), headers, faces=faces)
    sidecar = _grid_columns(mesh.s, mesh.t, kappa1=mesh.kappa1, kappa2=mesh.kappa2, H=mesh.H, K=mesh.K)
    return [path, export(sidecar, ExportFormat.COLUMNS, _path(config, stem + '_curvatures.txt'), headers)]


def run_evolve(config: PipelineConfig, curve: Optional[SphereCurve] = None) -> StageResult:
    config.validate()
    tolerances = merged_tolerances(config)
    curve = build_curve(config) if curve is None else curve
    report, mesh = evolution_report(curve, config, tolerances)
    report.apply_tolerances(config.tolerances)

    headers = dict(_headers(config), **curve.profile.provenance())
    artifacts = _export_evolution(mesh, config, 'evolution_torus', headers)
    artifacts += _write_report(report, config, 'evolution_torus_report')
    return StageResult('evolve', report, artifacts)


def recovery_report(mesh: EvolutionTorusMesh, expected: EnergySpec,
                    tolerances: Dict[str, float]) -> Tuple[VerificationReport, Dict[str, np.ndarray]]:
    """Recover the energy from the torus and compare it with the one that built it."""
    recovered = recover_energy(mesh)
    report = VerificationReport("energy recovery", mesh.profile.provenance())
    report.add_value('recovered_energy', recovered.spec.label if recovered.spec is not None else 'none')
    report.add_value('integration_constant', recovered.integration_constant)
    report.add_value('branch_samples', len(recovered.kappa))
    for name, error in sorted(recovered.candidates.items()):
        report.add_value(f'candidate.{name}', error)
    report.add_check('recovery_error', recovered.relative_error, tolerances['recovery_error'])
    kind_ok = recovered.spec is not None and recovered.spec.kind is expected.kind
    report.add_check('recovered_kind', 0.0 if kind_ok else 1.0, 0.5)
    if kind_ok:
        report.add_check('recovered_lambda', abs(recovered.lambda_shift - expected.lam) / max(1.0, abs(expected.lam)),
                         tolerances['recovered_lambda'])
    return report, recovered.tabulated()


def run_recover(config: PipelineConfig, curve: Optional[SphereCurve] = None) -> StageResult:
    config.validate()
    tolerances = merged_tolerances(config)
    curve = build_curve(config) if curve is None else curve
    if not curve.is_closed and curve.n_points <= curve.profile.n_samples:
        # Open meshes lose their end rows to the difference stencils
        curve = reconstruct(curve.profile, curve.rho, m_periods=2)
    embedded, motion = embed_and_fit(curve, spec=config.spec())
    mesh = evolve(embedded, motion, n_t=config.n_t, strict=config.strict)
    report, table = recovery_report(mesh, config.spec(), tolerances)
    report.apply_tolerances(config.tolerances)

    headers = dict(_headers(config), **curve.profile.provenance())
    artifacts = [export(table, ExportFormat.COLUMNS, _path(config, 'recovered_energy.txt'), headers)]
    artifacts += _write_report(report, config, 'recovered_energy_report')
    return StageResult('recover', report, artifacts)


def clifford_checks(n_grid: int = 128) -> VerificationReport:
    """Stereographic image of the Clifford torus: torus of revolution R = sqrt(2), r = 1."""
    report = VerificationReport("clifford torus", {'n_grid': str(n_grid)})
    angles = np.arange(n_grid) * (2.0 * math.pi / n_grid)
    u, v = np.meshgrid(angles, angles, indexing='ij')
    vertices = np.stack((np.cos(u), np.sin(u), np.cos(v), np.sin(v)), axis=-1) / math.sqrt(2.0)
    projected = project_mesh(vertices, pole=np.array([0.0, 0.0, 0.0, 1.0]))
    fit = torus_of_revolution_fit(projected.vertices)
    report.add_value('R', fit['R'])
    report.add_value('r', fit['r'])
    report.add_check('torus_fit', max(abs(fit['R'] - math.sqrt(2.0)), abs(fit['r'] - 1.0), fit['residual']),
                     DEFAULT_TOLERANCES['torus_fit'])
    report.add_check('euler_characteristic', float(abs(euler_characteristic(n_grid * n_grid, projected.faces))), 0.5)
    step = angles[1]
    report.add_check('conformality', grid_angle_deviation(vertices, projected.vertices, step, step),
                     DEFAULT_TOLERANCES['conformality'])
    return report


def clifford_lift_report(n_samples: int = 256, n_t: int = 256) -> VerificationReport:
    """Vertical torus over a great circle of S^2(4): the Clifford torus, H = 0."""
    equator = reconstruct(constant_profile(EnergySpec(EnergyKind.BENDING), 4.0, 0.0, n_samples))
    lift = horizontal_lift(equator)
    mesh = hopf_torus(lift, n_t=n_t, strict=True)
    report = VerificationReport("clifford control", equator.provenance())
    report.add_value('m_cover', lift.m_cover)
    report.add_value('phase_advance', lift.phase_advance)
    report.add_check('clifford_mean_curvature', float(np.nanmax(np.abs(mesh.H))),
                     DEFAULT_TOLERANCES['clifford_mean_curvature'], "great-circle torus is minimal")
    return report


def run_verify(config: PipelineConfig) -> StageResult:
    """
    Acceptance suite: closed-form criticality, solver oracle, gamma_{3,2}
    closure with its Hopf and evolution tori, the Weingarten table, energy
    recovery, BCV cylinders and the Clifford controls.
    """
    tolerances = merged_tolerances(config)
    n_samples = config.n_samples
    report = VerificationReport("acceptance suite", {'n_samples': str(n_samples), 'n_t': str(config.n_t)})

    for kind, rho, lam, d in closed_form_grid():
        closed = closed_form_profile(kind, rho, lam, d, n_samples)
        prefix = f"{kind.value}[rho={rho:g},lambda={lam:g},d={d:.6g}]."
        report.extend(profile_report(closed, tolerances), prefix)
        report.add_check(prefix + 'profile_oracle', oracle_deviation(closed), tolerances['profile_oracle'],
                         "closed form agrees with the numerical solver")

    figure = replace(config, energy=EnergyKind.EXTENDED_BLASCHKE.value, lam=0.0, q=None, epsilon=1, rho=4.0,
                     d=None, m=3, n=2, m_covers=None, strict=False, tolerances=dict(config.tolerances))
    curve = build_curve(figure)
    report.extend(curve_report(curve, figure, tolerances), "gamma_3_2.")
    report.add_check('gamma_3_2.curvature_maxima', abs(curvature_maxima(curve.kappa) - 3), 0.5,
                     "three lobes")
    hopf, _ = hopf_report(curve, figure, tolerances)
    report.extend(hopf, "hopf.")
    evolution, _ = evolution_report(curve, figure, tolerances)
    report.extend(evolution, "minimal_torus.")
    report.extend(clifford_lift_report(), "clifford_lift.")

    for spec, d in CATALOG_EXAMPLES:
        profile = profile_for(spec, 4.0, d, n_samples)
        prefix = f"catalog.{spec.kind.value}."
        report.add_check(prefix + 'weingarten_residual', weingarten_residual(profile),
                         tolerances['weingarten_residual'])
        embedded, motion = embed_and_fit(reconstruct(profile, m_periods=2), profile)
        mesh = evolve(embedded, motion, n_t=config.n_t)
        fields = surface_curvatures(mesh, tolerances=tolerances)
        constant = fields.report.get_check('catalog_constant')
        if constant is not None:
            report.add_check(prefix + 'catalog_constant', constant.value, constant.tolerance, constant.note)
        if spec.kind is not EnergyKind.BENDING:
            recovered, _ = recovery_report(mesh, spec, tolerances)
            report.extend(recovered, prefix)

    blaschke = reconstruct(blaschke_profile(4.0, 0.0, 2.0, n_samples))
    try:
        embed_and_fit(blaschke, spec=EnergySpec(EnergyKind.EXPONENTIAL, lam=0.2))
        mismatch = 1.0
    except PoorFit:
        mismatch = 0.0
    report.add_check('poor_fit_control', mismatch, 0.5, "mismatched energy has no Killing extension")

    report.extend(bcv_vertical_check(config.a, config.b, bcv_circle(config.a, 0.5), tolerances=tolerances),
                  "bcv_circle.")
    report.extend(bcv_vertical_check(0.0, 0.0, bcv_line(0.0), tolerances=tolerances), "bcv_plane.")
    report.extend(clifford_checks(), "clifford.")
    report.apply_tolerances(config.tolerances)

    artifacts = _write_report(report, config, 'verify_report')
    logger.info("acceptance suite: %d checks, %d failures", len(report.checks), len(report.failures()))
    return StageResult('verify', report, artifacts)


def run_figure1(config: PipelineConfig) -> StageResult:
    """Blaschke lambda = 0 on S^2(4), gamma_{3,2}: curve, minimal torus and Hopf torus."""
    preset = replace(config, energy=EnergyKind.EXTENDED_BLASCHKE.value, lam=0.0, q=None, epsilon=1, rho=4.0,
                     d=None, m=3, n=2, tolerances=dict(config.tolerances))
    curve = build_curve(preset)
    report = VerificationReport("figure 1", _headers(preset))
    artifacts: List[str] = []
    for stage in (run_close, run_evolve, run_lift):
        result = stage(preset, curve=curve)
        report.extend(result.report, result.name + ".")
        artifacts.extend(result.artifacts)
    artifacts += _write_report(report, preset, 'figure1_report')
    return StageResult('figure1', report, artifacts)


def run_stages(config: PipelineConfig) -> StageResult:
    """Run the configured `stages` in order on one shared curve."""
    if not config.stages:
        raise ConfigError("no stages configured", key='stages')
    config.validate()
    curve = build_curve(config) if any(name != 'profile' for name in config.stages) else None
    report = VerificationReport("stages", _headers(config))
    artifacts: List[str] = []
    for name in config.stages:
        result = run_profile(config) if name == 'profile' else SUBCOMMANDS[name](config, curve=curve)
        report.extend(result.report, name + ".")
        artifacts.extend(result.artifacts)
    return StageResult('stages', report, artifacts)


SUBCOMMANDS: Dict[str, Callable[..., StageResult]] = {
    'profile': run_profile,
    'close': run_close,
    'lift': run_lift,
    'evolve': run_evolve,
    'recover': run_recover,
    'verify': run_verify,
    'figure1': run_figure1,
}


def run(subcommand: str, config: PipelineConfig) -> StageResult:
    """
    Run one subcommand.

    Raises:
        ConfigError: unknown subcommand or invalid configuration
        CriticalToriError: any numerical failure of the stage
    """
    if subcommand == 'stages':
        return run_stages(config)
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand '{subcommand}'")
    logger.info("running %s", subcommand)
    return SUBCOMMANDS[subcommand](config)
