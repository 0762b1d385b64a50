"""
Binormal Evolution - Rotational Weingarten tori swept by Killing motions
A critical curve on S^2(rho), placed in a totally geodesic sphere of S^3(rho)
(or in the plane z = 0 of R^3 when rho = 0), extends its binormal field
P'(kappa) B to a Killing field; the orbit of the curve under that motion is a
torus whose principal curvatures satisfy kappa1 = kappa2 - P/P'.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from critical_profiles import CurvatureProfile, spectral_antiderivative, spectral_derivative
from energy_catalog import EnergyKind, EnergySpec, catalog_constant
from errors import (BranchTooShort, CurvatureZeroCrossing, IsoparametricInput, NonPeriodicOrbit,
                    ParameterError, PoorFit)
from mesh_io import add_refinement_check, cross4, difference, fundamental_forms
from reports import VerificationReport
from sphere_curves import SphereCurve

logger = logging.getLogger(__name__)

FIT_TOL = 1e-5
RATE_TOL = 1e-6
SCREW_TOL = 1e-7
MIN_BRANCH = 16
CLASSIFY_TOL = 1e-3
STENCIL_REACH = 2
# Order in which catalog members win ties
CLASSIFY_ORDER = (EnergyKind.EXTENDED_BLASCHKE, EnergyKind.BENDING, EnergyKind.TOTAL_CURVATURE_TYPE,
                  EnergyKind.ASTIGMATISM, EnergyKind.EXPONENTIAL, EnergyKind.Q_ELASTIC)


@dataclass(frozen=True)
class KillingMotion:
    """
    Generator of a one-parameter isometry group.

    rho > 0: a skew 4x4 matrix acting on R^4. rho = 0: a 4x4 homogeneous
    matrix [[Omega, v], [0, 0]] acting on (x, 1).
    """
    ambient_rho: float
    generator: np.ndarray
    fit_residual: float
    rates: Tuple[float, float]
    screw: float = 0.0

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.rates[0]

    @property
    def is_rank_two(self) -> bool:
        return self.rates[1] <= 1e-10 * max(1.0, self.rates[0])

    def exp(self, t: float) -> np.ndarray:
        return skew_exp(self.generator, t) if self.ambient_rho > 0.0 and self.is_rank_two \
            else expm(t * self.generator)

    def apply(self, t: float, points: np.ndarray) -> np.ndarray:
        """Move points (N, dim) by the isometry at time t."""
        flow = self.exp(t)
        if self.ambient_rho > 0.0:
            return points @ flow.T
        return points @ flow[:3, :3].T + flow[:3, 3]

    def rotate_vectors(self, t: float, vectors: np.ndarray) -> np.ndarray:
        flow = self.exp(t)
        linear = flow if self.ambient_rho > 0.0 else flow[:3, :3]
        return vectors @ linear.T

    def velocity(self, points: np.ndarray) -> np.ndarray:
        if self.ambient_rho > 0.0:
            return points @ self.generator.T
        return points @ self.generator[:3, :3].T + self.generator[:3, 3]


def skew_exp(generator: np.ndarray, t: float) -> np.ndarray:
    """exp(t A) for a rank-2 skew A: I + sin(theta t) K + (1 - cos(theta t)) K^2, K = A / theta."""
    theta = float(np.linalg.norm(generator) / math.sqrt(2.0))
    if theta == 0.0:
        return np.eye(len(generator))
    k = generator / theta
    return np.eye(len(generator)) + math.sin(theta * t) * k + (1.0 - math.cos(theta * t)) * (k @ k)


def _skew_basis(dim: int) -> List[np.ndarray]:
    basis = []
    for i in range(dim):
        for k in range(i + 1, dim):
            e = np.zeros((dim, dim))
            e[k, i], e[i, k] = 1.0, -1.0
            basis.append(e)
    return basis


@dataclass(frozen=True)
class EmbeddedCurve:
    """Profile curve inside the ambient space form with its Frenet data."""
    rho: float
    points: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    binormal: np.ndarray
    kappa: np.ndarray
    dP: np.ndarray
    s: np.ndarray
    step: float
    closed: bool
    curve: SphereCurve
    profile: CurvatureProfile
    spec: EnergySpec


def embed_and_fit(curve: SphereCurve, profile: Optional[CurvatureProfile] = None,
                  spec: Optional[EnergySpec] = None, rho: Optional[float] = None,
                  fit_tol: float = FIT_TOL) -> Tuple[EmbeddedCurve, KillingMotion]:
    """
    Embed the curve and fit the Killing field extending P'(kappa) B.

    Args:
        curve (SphereCurve): Critical curve (one or more periods)
        profile (CurvatureProfile): Its curvature profile (defaults to the curve's)
        spec (EnergySpec): Energy whose P' is extended (defaults to the profile's)
        rho (float): Ambient curvature (defaults to the curve's)
        fit_tol (float): Accepted defect relative to max(1, max |P'|)

    Returns:
        tuple: (EmbeddedCurve, KillingMotion)

    Raises:
        IsoparametricInput: constant curvature
        PoorFit: no Killing field matches P' B, e.g. the curve is not critical for spec
    """
    profile = curve.profile if profile is None else profile
    spec = profile.spec if spec is None else spec
    rho = curve.rho if rho is None else float(rho)
    if profile.is_constant or np.ptp(curve.kappa) <= 1e-12 * max(1.0, float(np.max(np.abs(curve.kappa)))):
        raise IsoparametricInput("constant curvature: the binormal evolution is isoparametric",
                                 kappa=float(curve.kappa[0]))
    if profile.d <= 0.0:
        raise ParameterError("binormal evolution needs a positive first integral", "d > 0", d=profile.d)

    dp = spec.evaluate(curve.kappa, check=False)[1]
    count = curve.n_points
    if rho > 0.0:
        pad = np.zeros((count, 1))
        points = np.hstack((curve.points, pad))
        tangents = np.hstack((curve.tangents, pad))
        normals = np.hstack((curve.normals, pad))
        binormal = np.tile([0.0, 0.0, 0.0, 1.0], (count, 1))
        basis = _skew_basis(4)
        design = np.column_stack([(points @ e.T).ravel() for e in basis])
        target = (dp[:, None] * binormal).ravel()
    else:
        points, tangents, normals = curve.points, curve.tangents, curve.normals
        binormal = np.tile([0.0, 0.0, 1.0], (count, 1))
        basis = []
        for e in _skew_basis(3):
            h = np.zeros((4, 4))
            h[:3, :3] = e
            basis.append(h)
        for i in range(3):
            h = np.zeros((4, 4))
            h[i, 3] = 1.0
            basis.append(h)
        homogeneous = np.hstack((points, np.ones((count, 1))))
        design = np.column_stack([(homogeneous @ e.T)[:, :3].ravel() for e in basis])
        target = (dp[:, None] * binormal).ravel()

    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    generator = sum(c * e for c, e in zip(coeffs, basis))
    defect = (design @ coeffs - target).reshape(count, -1)
    residual = float(np.max(np.linalg.norm(defect, axis=1)))
    scale = max(1.0, float(np.max(np.abs(dp))))
    if residual > fit_tol * scale:
        raise PoorFit("no Killing field extends P' B along the curve", energy=spec.label,
                      fit_residual=residual)

    if rho > 0.0:
        singular = np.linalg.svd(generator, compute_uv=False)
        rates = (float(singular[0]), float(singular[2]))
        screw = 0.0
    else:
        omega = np.array([generator[2, 1], generator[0, 2], generator[1, 0]])
        rate = float(np.linalg.norm(omega))
        rates = (rate, 0.0)
        screw = abs(float(generator[:3, 3] @ omega)) / rate if rate > 0.0 else math.inf

    motion = KillingMotion(ambient_rho=rho, generator=generator, fit_residual=residual,
                           rates=rates, screw=screw)
    embedded = EmbeddedCurve(rho=rho, points=points, tangents=tangents, normals=normals,
                             binormal=binormal, kappa=curve.kappa, dP=dp, s=curve.s, step=curve.step,
                             closed=curve.is_closed, curve=curve, profile=profile, spec=spec)
    logger.info("killing fit %s: residual %.2e, rates %.12g / %.2e", spec.label, residual, *rates)
    return embedded, motion


@dataclass(frozen=True)
class EvolutionTorusMesh:
    """Orbit grid y(s, t) = exp(t A) gamma(s) with analytic curvature fields."""
    vertices: np.ndarray
    s: np.ndarray
    t: np.ndarray
    G: np.ndarray
    signed_speed: np.ndarray
    kappa: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    H: np.ndarray
    K: np.ndarray
    reference_normals: np.ndarray
    motion: KillingMotion
    embedded: EmbeddedCurve
    profile: CurvatureProfile
    warnings: List[str] = field(default_factory=list)

    @property
    def rho(self) -> float:
        return self.motion.ambient_rho

    @property
    def shape(self) -> Tuple[int, int]:
        return self.vertices.shape[0], self.vertices.shape[1]

    @property
    def ds(self) -> float:
        return self.embedded.step

    @property
    def dt(self) -> float:
        return self.motion.period / self.vertices.shape[1]


def analytic_curvatures(profile_kappa: np.ndarray, kappa_s: np.ndarray, kappa_ss: np.ndarray,
                        spec: EnergySpec, rho: float,
                        kappa_eps: float = 1e-6) -> Tuple[np.ndarray, np.ndarray]:
    """
    Principal curvatures of the binormal-evolution torus along the profile.

    kappa1 = -kappa and kappa2 = (P'_ss/P' + rho)/kappa; near kappa = 0 the
    equivalent P/P' - kappa is used. Samples with P' = 0 are NaN.
    """
    p, dp, ddp, dddp = spec.evaluate(profile_kappa, check=False)
    dp_ss = ddp * kappa_ss + dddp * kappa_s ** 2
    kappa1 = -profile_kappa
    with np.errstate(divide='ignore', invalid='ignore'):
        h22 = (dp_ss / dp + rho) / profile_kappa
        limit = p / dp - profile_kappa
    kappa2 = np.where(np.abs(profile_kappa) >= kappa_eps, h22, limit)
    singular = np.abs(dp) <= 1e-12 * max(1.0, float(np.max(np.abs(dp))))
    kappa2 = np.where(singular, np.nan, kappa2)
    return kappa1, kappa2


def _tile(values: np.ndarray, count: int) -> np.ndarray:
    return np.resize(values, count)


def evolve(embedded: EmbeddedCurve, motion: KillingMotion, n_t: int = 64,
           strict: bool = False) -> EvolutionTorusMesh:
    """
    Sweep the curve by the Killing motion over one orbit period.

    Raises:
        NonPeriodicOrbit: second rotation rate (or screw pitch) above tolerance in strict mode
    """
    problems = []
    if motion.ambient_rho > 0.0 and motion.rates[1] > RATE_TOL:
        problems.append(f"second rotation rate {motion.rates[1]:.3e} exceeds {RATE_TOL:g}")
    if motion.ambient_rho == 0.0 and motion.screw > SCREW_TOL:
        problems.append(f"screw component {motion.screw:.3e} exceeds {SCREW_TOL:g}")
    for problem in problems:
        if strict:
            raise NonPeriodicOrbit("orbit is not periodic", detail=problem)
        logger.warning("orbit may not close: %s", problem)
    if n_t < 8:
        raise ParameterError("too few orbit samples", "n_t >= 8", n_t=n_t)

    period = motion.period
    t = np.arange(n_t) * (period / n_t)
    vertices = np.stack([motion.apply(tk, embedded.points) for tk in t], axis=1)
    reference = np.stack([motion.rotate_vectors(tk, -embedded.normals) for tk in t], axis=1)
    speed = np.linalg.norm(np.stack([motion.velocity(vertices[:, k]) for k in range(n_t)], axis=1), axis=-1)
    signed = motion.velocity(embedded.points) @ embedded.binormal[0]

    profile = embedded.profile
    count = len(embedded.s)
    kappa1, kappa2 = analytic_curvatures(embedded.kappa, _tile(profile.kappa_s, count),
                                         _tile(profile.kappa_ss, count), embedded.spec, embedded.rho)
    mesh = EvolutionTorusMesh(
        vertices=vertices, s=embedded.s, t=t, G=speed, signed_speed=signed, kappa=embedded.kappa,
        kappa1=kappa1, kappa2=kappa2, H=0.5 * (kappa1 + kappa2), K=kappa1 * kappa2 + embedded.rho,
        reference_normals=reference, motion=motion, embedded=embedded, profile=profile,
        warnings=problems)
    logger.info("binormal torus: %d x %d, orbit period %.12g", count, n_t, period)
    return mesh


def _circle_defect(orbit: np.ndarray) -> float:
    """Planarity and constant-radius defect of points sampled uniformly around a circle."""
    center = orbit.mean(axis=0)
    offsets = orbit - center
    radii = np.linalg.norm(offsets, axis=1)
    singular = np.linalg.svd(offsets, compute_uv=False)
    flatness = float(singular[2]) / math.sqrt(len(orbit)) if len(singular) > 2 else 0.0
    return max(float(np.max(np.abs(radii - radii.mean()))), flatness)


def _congruence_defect(row: np.ndarray, reference: np.ndarray) -> float:
    """Residual after the best rigid alignment of `row` onto `reference`."""
    a = row - row.mean(axis=0)
    b = reference - reference.mean(axis=0)
    u, _, vt = np.linalg.svd(a.T @ b)
    d = np.eye(len(u))
    d[-1, -1] = np.sign(np.linalg.det(u @ vt))
    rotation = u @ d @ vt
    return float(np.max(np.linalg.norm(a @ rotation - b, axis=1)))


def mesh_checks(mesh: EvolutionTorusMesh,
                tolerances: Optional[Mapping[str, float]] = None) -> VerificationReport:
    """Sphere constraint, orbit circles, congruent rows, speed and induced metric."""
    tol = {'sphere_constraint': 1e-9, 'orbit_circles': 1e-7, 'congruent_rows': 1e-7,
           'speed': 1e-6, 'metric_E': 1e-6, 'metric_F': 1e-6, 'metric_G': 1e-6}
    tol.update(tolerances or {})
    report = VerificationReport("binormal torus", mesh.profile.provenance())
    report.add_value('n_s', mesh.shape[0])
    report.add_value('n_t', mesh.shape[1])
    report.add_value('orbit_period', mesh.motion.period)
    report.add_value('fit_residual', mesh.motion.fit_residual)
    if mesh.rho > 0.0:
        radius = 1.0 / math.sqrt(mesh.rho)
        report.add_check('sphere_constraint',
                         float(np.max(np.abs(np.linalg.norm(mesh.vertices, axis=-1) - radius))),
                         tol['sphere_constraint'])
    report.add_check('orbit_circles', max(_circle_defect(orbit) for orbit in mesh.vertices),
                     tol['orbit_circles'])
    report.add_check('congruent_rows', max(_congruence_defect(mesh.vertices[:, k], mesh.vertices[:, 0])
                                           for k in range(0, mesh.shape[1], max(1, mesh.shape[1] // 8))),
                     tol['congruent_rows'])
    report.add_check('speed', float(np.max(np.abs(mesh.G - np.abs(mesh.embedded.dP)[:, None]))), tol['speed'])

    forms = fundamental_forms(mesh.vertices, mesh.ds, mesh.dt, periodic=(mesh.embedded.closed, True),
                              sphere_radius=1.0 / math.sqrt(mesh.rho) if mesh.rho > 0.0 else None,
                              reference_normal=mesh.reference_normals)
    report.add_check('metric_E', float(np.nanmax(np.abs(forms.E - 1.0))), tol['metric_E'])
    report.add_check('metric_F', float(np.nanmax(np.abs(forms.F))), tol['metric_F'])
    report.add_check('metric_G', float(np.nanmax(np.abs(forms.G - mesh.embedded.dP[:, None] ** 2))),
                     tol['metric_G'])
    for message in mesh.warnings:
        report.add_warning(message)
    return report


@dataclass(frozen=True)
class CurvatureFields:
    """Analytic and finite-difference principal curvatures on the torus grid."""
    kappa1: np.ndarray
    kappa2: np.ndarray
    H: np.ndarray
    K: np.ndarray
    numeric_kappa1: np.ndarray
    numeric_kappa2: np.ndarray
    numeric_H: np.ndarray
    numeric_K: np.ndarray
    report: VerificationReport


def _refinement_checks(mesh: EvolutionTorusMesh, report: VerificationReport,
                       h_error: np.ndarray, k_error: np.ndarray):
    """Compare the H and K residuals with those of the every-other-sample subgrid."""
    dp = np.abs(mesh.embedded.dP)
    # Well-conditioned rows only: |P'| >= max |P'| / 10
    rows = np.where(dp >= 0.1 * float(np.max(dp)), 1.0, np.nan)[:, None]
    coarse = fundamental_forms(mesh.vertices[::2, ::2], 2.0 * mesh.ds, 2.0 * mesh.dt,
                               periodic=(mesh.embedded.closed, True),
                               sphere_radius=1.0 / math.sqrt(mesh.rho) if mesh.rho > 0.0 else None,
                               reference_normal=mesh.reference_normals[::2, ::2])
    h = 0.5 * (mesh.kappa1 + mesh.kappa2)[::2, None]
    k = (mesh.kappa1 * mesh.kappa2 + mesh.rho)[::2, None]
    with np.errstate(invalid='ignore', divide='ignore'):
        coarse_h = float(np.nanmax(np.abs(coarse.mean_curvature - h) * rows[::2]))
        coarse_k = float(np.nanmax(np.abs(coarse.gauss_curvature + mesh.rho - k) * rows[::2]))
    add_refinement_check(report, 'numeric_vs_analytic_H', float(np.nanmax(np.abs(h_error) * rows)), coarse_h)
    add_refinement_check(report, 'gauss_equation', float(np.nanmax(np.abs(k_error) * rows)), coarse_k)


def surface_curvatures(mesh: EvolutionTorusMesh, strict: bool = False,
                       speed_floor: float = 1e-3,
                       tolerances: Optional[Mapping[str, float]] = None) -> CurvatureFields:
    """
    Principal curvatures two ways: analytic along the profile and from the
    finite-difference second fundamental form with normal -N carried by the motion.

    Rows where |P'| < speed_floor * max |P'| are masked (the orbit degenerates).

    Raises:
        CurvatureZeroCrossing: kappa vanishes on the grid and strict is set
    """
    tol = {'principal_curvatures': 1e-4, 'gauss_equation': 1e-4, 'catalog_constant': 1e-5}
    tol.update(tolerances or {})
    n_t = mesh.shape[1]
    forms = fundamental_forms(mesh.vertices, mesh.ds, mesh.dt, periodic=(mesh.embedded.closed, True),
                              sphere_radius=1.0 / math.sqrt(mesh.rho) if mesh.rho > 0.0 else None,
                              reference_normal=mesh.reference_normals)
    dp = mesh.embedded.dP
    valid = np.abs(dp) >= speed_floor * float(np.max(np.abs(dp)))
    mask = np.where(valid, 1.0, np.nan)[:, None]
    with np.errstate(invalid='ignore', divide='ignore'):
        num_k1 = forms.L / forms.E * mask
        num_k2 = forms.N / forms.G * mask
        num_h = forms.mean_curvature * mask
        num_k = (forms.gauss_curvature + mesh.rho) * mask

    def grid(values):
        return np.repeat(values[:, None], n_t, axis=1)

    k1, k2 = grid(mesh.kappa1), grid(mesh.kappa2)
    h, k = grid(mesh.H), grid(mesh.K)

    report = VerificationReport("principal curvatures", mesh.profile.provenance())
    report.add_value('masked_rows', int(np.count_nonzero(~valid)))
    report.add_check('principal_curvatures',
                     float(np.nanmax(np.abs(np.concatenate([(num_k1 - k1).ravel(), (num_k2 - k2).ravel()])))),
                     tol['principal_curvatures'])
    report.add_check('gauss_equation', float(np.nanmax(np.abs(num_k - k))), tol['gauss_equation'])
    report.add_check('numeric_vs_analytic_H', float(np.nanmax(np.abs(num_h - h))), tol['principal_curvatures'])
    if mesh.shape[0] % 2 == 0 and n_t % 2 == 0:
        _refinement_checks(mesh, report, num_h - h, num_k - k)

    spec = mesh.embedded.spec
    rows = valid & np.isfinite(mesh.kappa2)
    if spec.kind is not EnergyKind.BENDING or spec.lam == 0.0:
        name, values, expected = catalog_constant(spec, mesh.rho, mesh.kappa1[rows], mesh.kappa2[rows])
        report.add_value('catalog_invariant', name)
        report.add_value('catalog_expected', expected)
        report.add_check('catalog_constant', float(np.max(np.abs(values - expected))), tol['catalog_constant'])

    fields = CurvatureFields(kappa1=k1, kappa2=k2, H=h, K=k, numeric_kappa1=num_k1,
                             numeric_kappa2=num_k2, numeric_H=num_h, numeric_K=num_k, report=report)

    zero = np.abs(mesh.kappa) < 1e-12
    if np.any(zero) or np.any(np.isnan(mesh.kappa2)):
        message = "analytic kappa2 undefined where kappa or P' vanishes; numeric values kept"
        report.add_warning(message)
        if strict:
            raise CurvatureZeroCrossing(message, numeric=fields,
                                        samples=int(np.count_nonzero(zero | np.isnan(mesh.kappa2))))
    return fields


def weingarten_residual(profile: CurvatureProfile, spec: Optional[EnergySpec] = None,
                        rho: Optional[float] = None) -> float:
    """
    max |kappa1 - kappa2 + P/P'| over the profile samples with kappa != 0 and P' != 0.

    Uses kappa2 = (P'_ss/P' + rho)/kappa, so the residual measures how well the
    samples satisfy the Euler-Lagrange equation.
    """
    spec = profile.spec if spec is None else spec
    rho = profile.rho if rho is None else float(rho)
    kappa = profile.kappa
    p, dp, ddp, dddp = spec.evaluate(kappa)
    dp_ss = ddp * profile.kappa_ss + dddp * profile.kappa_s ** 2
    usable = (np.abs(kappa) > 1e-8 * max(1.0, float(np.max(np.abs(kappa))))) & \
             (np.abs(dp) > 1e-8 * max(1.0, float(np.max(np.abs(dp)))))
    if not np.any(usable):
        raise CurvatureZeroCrossing("no sample with kappa != 0 and P' != 0", energy=spec.label)
    k, q, q1, q_ss = kappa[usable], p[usable], dp[usable], dp_ss[usable]
    kappa1 = -k
    kappa2 = (q_ss / q1 + rho) / k
    return float(np.max(np.abs(kappa1 - kappa2 + q / q1)))


@dataclass(frozen=True)
class RecoveredEnergy:
    """Energy density recovered from the evolution speed along a monotone branch."""
    kappa: np.ndarray
    P: np.ndarray
    dP: np.ndarray
    integration_constant: float
    spec: Optional[EnergySpec]
    lambda_shift: float
    relative_error: float
    candidates: Dict[str, float] = field(default_factory=dict)

    def tabulated(self) -> Dict[str, np.ndarray]:
        return {'kappa': self.kappa, 'P': self.P, 'dP': self.dP}


def _monotone_branch(kappa: np.ndarray) -> np.ndarray:
    """Indices from the minimum of kappa to the next maximum (cyclic)."""
    start, stop = int(np.argmin(kappa)), int(np.argmax(kappa))
    count = len(kappa)
    length = (stop - start) % count + 1
    return (start + np.arange(length)) % count


def _candidate_specs(kappa: np.ndarray, ratio: np.ndarray) -> List[EnergySpec]:
    """Catalog members whose lambda (and q, epsilon) is fit to P/P' by least squares."""
    specs = []
    attempts = {
        EnergyKind.EXTENDED_BLASCHKE: lambda: EnergySpec(EnergyKind.EXTENDED_BLASCHKE,
                                                         lam=float(np.mean(kappa - 0.5 * ratio))),
        EnergyKind.BENDING: lambda: EnergySpec(EnergyKind.BENDING,
                                               lam=float(np.mean(2.0 * kappa * ratio - kappa ** 2))),
        EnergyKind.ASTIGMATISM: lambda: EnergySpec(EnergyKind.ASTIGMATISM,
                                                   lam=float(np.mean(kappa - kappa ** 2 / ratio))),
        EnergyKind.EXPONENTIAL: lambda: EnergySpec(EnergyKind.EXPONENTIAL, lam=1.0 / float(np.mean(ratio))),
    }

    def total_curvature():
        lam = float(np.mean(kappa * ratio - kappa ** 2))
        epsilon = 1 if float(np.min(kappa ** 2 + lam)) > 0.0 else -1
        return EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=lam, epsilon=epsilon)

    def q_elastic():
        slope, intercept = np.polyfit(kappa, ratio, 1)
        q = 1.0 / float(slope)
        return EnergySpec(EnergyKind.Q_ELASTIC, lam=-float(intercept) * q, q=q)

    attempts[EnergyKind.TOTAL_CURVATURE_TYPE] = total_curvature
    attempts[EnergyKind.Q_ELASTIC] = q_elastic
    for kind in CLASSIFY_ORDER:
        try:
            specs.append(attempts[kind]())
        except (ParameterError, ZeroDivisionError, FloatingPointError, np.linalg.LinAlgError) as exc:
            logger.debug("no %s candidate: %s", kind.value, exc)
    return specs


def classify(kappa: np.ndarray, P: np.ndarray, dP: np.ndarray,
             tol: float = CLASSIFY_TOL) -> Tuple[Optional[EnergySpec], float, Dict[str, float]]:
    """
    Best catalog match for a tabulated P(kappa) up to a multiplicative constant.

    Returns:
        tuple: (spec or None, relative error, {label: relative error})
    """
    usable = np.abs(dP) > 1e-6 * float(np.max(np.abs(dP)))
    ratio = P[usable] / dP[usable]
    scale = float(np.max(np.abs(P)))
    errors: Dict[str, float] = {}
    ranked = []
    for candidate in _candidate_specs(kappa[usable], ratio):
        with np.errstate(all='ignore'):
            values = np.asarray(candidate.evaluate(kappa, check=False)[0], dtype=float)
        if not np.all(np.isfinite(values)) or not np.any(values):
            continue
        mu = float(values @ P / (values @ values))
        error = float(np.max(np.abs(P - mu * values))) / scale
        errors[candidate.label] = error
        ranked.append((candidate.with_scale(1.0), error))
    for candidate, error in ranked:
        if error <= tol:
            return candidate, error, errors
    if not ranked:
        return None, math.inf, errors
    best = min(ranked, key=lambda item: item[1])
    return best[0], best[1], errors


def measured_profile(mesh: EvolutionTorusMesh) -> Tuple[np.ndarray, np.ndarray]:
    """
    Curvature and signed evolution speed of the generating row, read off the grid.

    The binormal is the normal of the hyperplane (the plane when rho = 0) the
    row spans. kappa = <X_ss + rho X, N> with N completing (X, X_s, B), which
    is -kappa1 since the rows are curvature lines; the speed is the periodic
    t-difference of the vertices projected on B. Open meshes give NaN in the
    two rows at each end.
    """
    row = mesh.vertices[:, 0]
    closed = mesh.embedded.closed
    x_s = difference(mesh.vertices, 0, mesh.ds, closed)[:, 0]
    x_ss = difference(mesh.vertices, 0, mesh.ds, closed, second=True)[:, 0]
    x_t = difference(mesh.vertices, 1, mesh.dt)[:, 0]

    if mesh.rho > 0.0:
        binormal = np.linalg.svd(row, full_matrices=False)[2][-1]
    else:
        binormal = np.linalg.svd(row - row.mean(axis=0), full_matrices=False)[2][-1]
    if float(binormal @ mesh.embedded.binormal[0]) < 0.0:
        binormal = -binormal

    frame_b = np.broadcast_to(binormal, row.shape)
    if mesh.rho > 0.0:
        normal = cross4(row * math.sqrt(mesh.rho), x_s, frame_b)
    else:
        normal = np.cross(frame_b, x_s)
    with np.errstate(invalid='ignore', divide='ignore'):
        normal = normal / np.linalg.norm(normal, axis=-1, keepdims=True)
    # Orientation of the Frenet normal carried by the mesh
    if float(np.nanmean(np.einsum('ij,ij->i', normal, -mesh.reference_normals[:, 0]))) < 0.0:
        normal = -normal
    kappa = np.einsum('ij,ij->i', x_ss + mesh.rho * row, normal)
    return kappa, x_t @ binormal


def recover_energy(mesh: EvolutionTorusMesh, min_branch: int = MIN_BRANCH) -> RecoveredEnergy:
    """
    Recover P(kappa) from the torus: P' is the signed evolution speed on a
    monotone curvature branch, P = Q + mu with Q' = G and mu fit to
    G_ss + G(kappa^2 + rho) - kappa Q = mu kappa by least squares.

    Curvature and speed are measured on the grid (see measured_profile) over
    one curvature period; the profile only supplies that period. P' comes out
    up to the constant factor of the t-difference, which the classification
    absorbs.

    Raises:
        ParameterError: an open mesh spans less than one period plus the stencil reach
        IsoparametricInput: constant curvature
        BranchTooShort: the monotone branch has fewer than min_branch samples
    """
    profile = mesh.profile
    n = profile.n_samples
    start = 0 if mesh.embedded.closed else STENCIL_REACH
    if start + n > mesh.shape[0]:
        raise ParameterError("open mesh is too short to measure a full curvature period",
                             "more than one period of rows", rows=mesh.shape[0], period_rows=n)
    measured_kappa, measured_speed = measured_profile(mesh)
    kappa = measured_kappa[start:start + n]
    speed = measured_speed[start:start + n]
    if np.ptp(kappa) <= 1e-9 * max(1.0, float(np.max(np.abs(kappa)))):
        raise IsoparametricInput("constant curvature: no energy can be recovered")

    period = profile.period
    kappa_s = spectral_derivative(kappa, period)
    speed_ss = spectral_derivative(speed, period, order=2)
    base = spectral_antiderivative(speed * kappa_s, period)

    branch = _monotone_branch(kappa)
    if len(branch) < min_branch or np.any(np.diff(kappa[branch]) <= 0.0):
        raise BranchTooShort("no monotone curvature branch with enough samples",
                             samples=len(branch), required=min_branch)

    k, g, q0, g_ss = kappa[branch], speed[branch], base[branch], speed_ss[branch]
    lhs = g_ss + g * (k * k + mesh.rho) - k * q0
    mu = float(k @ lhs / (k @ k))
    energy = q0 + mu

    spec, error, candidates = classify(k, energy, g)
    logger.info("recovered energy: %s (relative error %.2e)", spec.label if spec else "none", error)
    return RecoveredEnergy(kappa=k, P=energy, dP=g, integration_constant=mu, spec=spec,
                           lambda_shift=spec.lam if spec is not None else math.nan,
                           relative_error=error, candidates=candidates)
