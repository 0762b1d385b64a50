"""
Hopf Submersion - Horizontal lifts and vertical (Hopf) tori over curves on S^2(4)
Also carries the coordinate checks for vertical cylinders in the two-parameter
BCV family of Killing submersions.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import sympy as sp
from scipy.integrate import cumulative_trapezoid

from critical_profiles import CurvatureProfile, el_residual, spectral_antiderivative
from errors import (ChartExit, ChartSingularity, NotClosedLift, OffSphere, ParameterError)
from mesh_io import add_refinement_check, fundamental_forms
from reports import VerificationReport
from sphere_curves import M_MAX, SphereCurve, progression_angle

logger = logging.getLogger(__name__)

HOPF_RHO = 4.0
EPS_CHART = 0.1
PHASE_TOL = 1e-6

DEFAULT_TOLERANCES: Dict[str, float] = {
    'sphere_constraint': 1e-9,
    'projection': 1e-9,
    'horizontality': 1e-7,
    'unit_speed': 1e-7,
    'fiber_great_circle': 1e-9,
    'mean_curvature': 1e-4,
    'flatness': 1e-4,
    'el_residual': 1e-6,
    'bcv_mean_curvature': 1e-6,
    'bcv_curvature_identity': 1e-6,
    'bcv_unit_speed': 1e-9,
}


def to_complex(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(p1, p2, p3, p4) -> (z, w) = (p1 + i p2, p3 + i p4)."""
    points = np.asarray(points, dtype=float)
    return points[..., 0] + 1j * points[..., 1], points[..., 2] + 1j * points[..., 3]


def to_real(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.stack((z.real, z.imag, w.real, w.imag), axis=-1)


def phase_rotate(points: np.ndarray, angle) -> np.ndarray:
    """(z, w) -> e^{i angle} (z, w); angle broadcasts against the leading axes."""
    z, w = to_complex(points)
    factor = np.exp(1j * np.asarray(angle, dtype=float))
    return to_real(factor * z, factor * w)


def hopf_project(points: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """
    Hopf map S^3(1) -> S^2(4): (z, w) -> (1/2 (|z|^2 - |w|^2), Re(conj(z) w), Im(conj(z) w)).

    Raises:
        OffSphere: a point is off the unit sphere by more than tol
    """
    points = np.asarray(points, dtype=float)
    deviation = np.max(np.abs(np.linalg.norm(points, axis=-1) - 1.0))
    if deviation > tol:
        raise OffSphere("point is not on the unit 3-sphere", deviation=float(deviation), tol=tol)
    z, w = to_complex(points)
    zw = np.conj(z) * w
    return np.stack((0.5 * (np.abs(z) ** 2 - np.abs(w) ** 2), zw.real, zw.imag), axis=-1)


def hopf_differential(points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Pushforward of tangent vectors (a, b) at (z, w): (Re(conj(z)a) - Re(conj(w)b), conj(a)w + conj(z)b)."""
    z, w = to_complex(points)
    a, b = to_complex(vectors)
    second = np.conj(a) * w + np.conj(z) * b
    return np.stack(((np.conj(z) * a).real - (np.conj(w) * b).real, second.real, second.imag), axis=-1)


def rotation_to_e1(direction: np.ndarray) -> np.ndarray:
    """Rotation matrix sending the unit vector `direction` to e1."""
    u = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
    e1 = np.array([1.0, 0.0, 0.0])
    axis = np.cross(u, e1)
    sin, cos = np.linalg.norm(axis), float(u @ e1)
    if sin < 1e-14:
        return np.eye(3) if cos > 0 else np.diag([-1.0, -1.0, 1.0])
    k = axis / sin
    skew = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + sin * skew + (1.0 - cos) * skew @ skew


def closing_cover(holonomy: float, m_max: int = M_MAX, tol: float = PHASE_TOL) -> Optional[int]:
    """Smallest m <= m_max with m * holonomy a multiple of 2 pi to tol * 2 pi."""
    if not math.isfinite(holonomy):
        return None
    for m in range(1, m_max + 1):
        if abs(math.remainder(m * holonomy, 2.0 * math.pi)) <= tol * 2.0 * math.pi:
            return m
    return None


@dataclass(frozen=True)
class HopfLift:
    """Horizontal lift of a (rotated) base curve on S^2(4) to S^3(1)."""
    base: SphereCurve
    base_rotation: np.ndarray
    base_points: np.ndarray
    base_normals: np.ndarray
    lift_points: np.ndarray
    lift_tangents: np.ndarray
    beta: np.ndarray
    beta_sign: int
    phase_advance: float
    holonomy_per_cover: float
    m_cover: Optional[int]

    @property
    def length(self) -> float:
        return self.base.total_length

    @property
    def n_points(self) -> int:
        return len(self.lift_points)

    @property
    def horizontality_residual(self) -> float:
        """max |<lift', i lift>|."""
        z, w = to_complex(self.lift_points)
        dz, dw = to_complex(self.lift_tangents)
        return float(np.max(np.abs((np.conj(z) * dz + np.conj(w) * dw).imag)))

    @property
    def unit_speed_residual(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.lift_tangents, axis=-1) - 1.0)))

    @property
    def projection_residual(self) -> float:
        return float(np.max(np.linalg.norm(hopf_project(self.lift_points) - self.base_points, axis=-1)))

    def cover_points(self, covers: int) -> np.ndarray:
        """Lift continued over `covers` traversals of the base curve."""
        return np.concatenate([phase_rotate(self.lift_points, k * self.phase_advance)
                               for k in range(covers)])


def _chart_direction(curve: SphereCurve, points: np.ndarray) -> np.ndarray:
    """Unit direction u maximizing min <A, u> over the curve."""
    candidates = []
    centroid = points.mean(axis=0)
    if np.linalg.norm(centroid) > 1e-9:
        candidates.append(centroid)
    _, _, vt = np.linalg.svd(points - centroid)
    candidates.extend((vt[-1], -vt[-1]))
    if curve.axis is not None:
        candidates.extend((curve.axis, -curve.axis))
    elif curve.profile.is_constant:
        axis = progression_angle(curve.profile, curve.rho)[1]
        candidates.extend((axis, -axis))
    candidates = [c / np.linalg.norm(c) for c in candidates]
    return max(candidates, key=lambda u: float(np.min(points @ u)))


def _lift_with_sign(points, tangents, alpha1, beta_rate, beta, sign):
    phase = np.exp(1j * sign * beta)
    u = (points[:, 1] + 1j * points[:, 2]) / alpha1
    d_alpha1 = tangents[:, 0] / (2.0 * alpha1)
    du = (tangents[:, 1] + 1j * tangents[:, 2]) / alpha1 - u * d_alpha1 / alpha1
    z, w = alpha1 * phase, u * phase
    dz = (d_alpha1 + 1j * alpha1 * sign * beta_rate) * phase
    dw = (du + 1j * u * sign * beta_rate) * phase
    return to_real(z, w), to_real(dz, dw)


def horizontal_lift(curve: SphereCurve, m_max: int = M_MAX, eps_chart: float = EPS_CHART,
                    phase_tol: float = PHASE_TOL) -> HopfLift:
    """
    Horizontal lift of a curve on S^2(4) through the Hopf map.

    alpha1 = sqrt(A1 + 1/2), alpha_i = A_i / alpha1 and
    beta' = (A3 A2' - A2 A3') / (A1 + 1/2); the lift is
    (alpha1 e^{i beta}, (alpha2 + i alpha3) e^{i beta}). Curves that approach
    A1 = -1/2 are rotated first so the chart condition holds with margin.

    Args:
        curve (SphereCurve): Base curve on the sphere of curvature 4
        m_max (int): Largest cover tried for closing the lift
        eps_chart (float): Required margin min(A1 + 1/2)
        phase_tol (float): Closing tolerance as a fraction of 2 pi

    Returns:
        HopfLift: lift samples, phase beta and the closing cover (or None)
    """
    if not math.isclose(curve.rho, HOPF_RHO, rel_tol=1e-12):
        raise ParameterError("Hopf lifts need a base of curvature 4", "rho = 4", rho=curve.rho)

    rotation = np.eye(3)
    if float(np.min(curve.points[:, 0])) + 0.5 < eps_chart:
        rotation = rotation_to_e1(_chart_direction(curve, curve.points))
        logger.info("base curve rotated for the lift chart")
    points = curve.points @ rotation.T
    tangents = curve.tangents @ rotation.T
    normals = curve.normals @ rotation.T
    margin = float(np.min(points[:, 0])) + 0.5
    if margin < eps_chart:
        raise ChartSingularity("curve approaches A1 = -1/2 in every chart tried",
                               margin=margin, eps_chart=eps_chart)

    alpha1 = np.sqrt(points[:, 0] + 0.5)
    beta_rate = (points[:, 2] * tangents[:, 1] - points[:, 1] * tangents[:, 2]) / (points[:, 0] + 0.5)
    if curve.is_closed:
        beta = spectral_antiderivative(beta_rate, curve.total_length)
        advance = float(np.mean(beta_rate)) * curve.total_length
    else:
        beta = cumulative_trapezoid(beta_rate, curve.s, initial=0.0)
        advance = math.nan

    best = None
    for sign in (1, -1):
        lift, lift_t = _lift_with_sign(points, tangents, alpha1, beta_rate, beta, sign)
        z, w = to_complex(lift)
        dz, dw = to_complex(lift_t)
        residual = float(np.max(np.abs((np.conj(z) * dz + np.conj(w) * dw).imag)))
        if best is None or residual < best[0]:
            best = (residual, sign, lift, lift_t)
    _, sign, lift, lift_t = best

    phase_advance = sign * advance
    holonomy = phase_advance % (2.0 * math.pi) if math.isfinite(phase_advance) else math.nan
    m_cover = closing_cover(phase_advance, m_max, phase_tol)
    logger.debug("lift: beta sign %+d, holonomy %.15g, m_cover %s", sign, holonomy, m_cover)
    return HopfLift(base=curve, base_rotation=rotation, base_points=points, base_normals=normals,
                    lift_points=lift, lift_tangents=lift_t, beta=sign * beta, beta_sign=sign,
                    phase_advance=phase_advance, holonomy_per_cover=holonomy, m_cover=m_cover)


@dataclass(frozen=True)
class VerticalTorusMesh:
    """Grid e^{it} lift(s) on S^3(1); rows are lifts, columns are Hopf fibers."""
    vertices: np.ndarray
    s: np.ndarray
    t: np.ndarray
    normals: np.ndarray
    kappa: np.ndarray
    H: np.ndarray
    K_S: np.ndarray
    covers: int
    sheared: bool
    lift: HopfLift
    profile: CurvatureProfile

    @property
    def shape(self) -> Tuple[int, int]:
        return self.vertices.shape[0], self.vertices.shape[1]

    @property
    def ds(self) -> float:
        return self.lift.length * self.covers / self.vertices.shape[0]

    @property
    def dt(self) -> float:
        return 2.0 * math.pi / self.vertices.shape[1]


def hopf_torus(lift: HopfLift, m_covers: Optional[int] = None, n_t: int = 64,
               strict: bool = False) -> VerticalTorusMesh:
    """
    Vertical torus over the lift's base curve.

    When the lift closes after m_covers traversals the grid runs over those
    covers with horizontal rows. Otherwise (non-strict) one traversal is meshed
    with rows sheared along the fibers so the grid still closes.
    """
    covers = lift.m_cover if m_covers is None else int(m_covers)
    closes = covers is not None and math.isfinite(lift.phase_advance) and abs(
        math.remainder(covers * lift.phase_advance, 2.0 * math.pi)) <= PHASE_TOL * 2.0 * math.pi
    if not closes:
        if strict:
            raise NotClosedLift("lift does not close", m_covers=covers,
                                holonomy=lift.holonomy_per_cover)
        if not math.isfinite(lift.phase_advance):
            raise NotClosedLift("base curve is not closed", closure_gap=lift.base.closure_gap)
        logger.warning("lift does not close after %s covers; meshing sheared fundamental domain", covers)
        covers = 1
    if n_t < 8:
        raise ParameterError("too few fiber samples", "n_t >= 8", n_t=n_t)

    n = lift.n_points
    length = lift.length
    s = np.arange(covers * n) * (length / n)
    t = np.arange(n_t) * (2.0 * math.pi / n_t)
    rows = lift.cover_points(covers)
    row_tangents = np.concatenate([phase_rotate(lift.lift_tangents, k * lift.phase_advance)
                                   for k in range(covers)])
    base_normals = np.tile(lift.base_normals, (covers, 1))
    kappa = np.tile(lift.base.kappa, covers)

    shear = np.zeros_like(s) if closes else -lift.phase_advance * s / length
    angles = shear[:, None] + t[None, :]
    vertices = phase_rotate(rows[:, None, :], angles)

    # Unit normal i * lift', oriented so its image under the Hopf map is the base normal
    z, w = to_complex(row_tangents)
    i_tangent = to_real(1j * z, 1j * w)
    sign = 1.0 if float(np.mean(np.einsum('ij,ij->i', hopf_differential(rows, i_tangent),
                                          base_normals))) >= 0.0 else -1.0
    normals = phase_rotate(sign * i_tangent[:, None, :], angles)

    forms = fundamental_forms(vertices, length / n, t[1], periodic=(True, True), sphere_radius=1.0,
                              reference_normal=normals)
    mesh = VerticalTorusMesh(vertices=vertices, s=s, t=t, normals=normals, kappa=kappa,
                             H=forms.mean_curvature, K_S=forms.gauss_curvature + 1.0,
                             covers=covers, sheared=not closes, lift=lift, profile=lift.base.profile)
    logger.info("hopf torus: %d x %d grid over %d cover(s)%s", mesh.shape[0], n_t, covers,
                " (sheared)" if not closes else "")
    return mesh


def subgrid_residuals(mesh: VerticalTorusMesh) -> Tuple[float, float]:
    """max |H - kappa/2| and max |K_S| on the every-other-sample subgrid (steps doubled)."""
    forms = fundamental_forms(mesh.vertices[::2, ::2], 2.0 * mesh.ds, 2.0 * mesh.dt, periodic=(True, True),
                              sphere_radius=1.0, reference_normal=mesh.normals[::2, ::2])
    mean = float(np.nanmax(np.abs(forms.mean_curvature - 0.5 * mesh.kappa[::2, None])))
    flat = float(np.nanmax(np.abs(forms.gauss_curvature + 1.0)))
    return mean, flat


def verify_vertical_geometry(mesh: VerticalTorusMesh, profile: Optional[CurvatureProfile] = None,
                             tolerances: Optional[Mapping[str, float]] = None) -> VerificationReport:
    """
    Check the vertical-torus identities on a mesh.

    Reports the sphere constraint, the lift invariants, fiber geometry,
    max |H - kappa/2| and max |K_S| from finite-difference fundamental forms,
    and on even grids how much both residuals shrink against the coarser subgrid.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    profile = mesh.profile if profile is None else profile
    lift = mesh.lift

    report = VerificationReport("vertical torus", profile.provenance())
    report.add_value('covers', mesh.covers)
    report.add_value('sheared', mesh.sheared)
    report.add_value('n_s', mesh.shape[0])
    report.add_value('n_t', mesh.shape[1])
    report.add_value('holonomy_per_cover', lift.holonomy_per_cover)
    report.add_value('m_cover', lift.m_cover if lift.m_cover is not None else 'none')
    report.add_value('beta_sign', lift.beta_sign)

    report.add_check('sphere_constraint',
                     float(np.max(np.abs(np.linalg.norm(mesh.vertices, axis=-1) - 1.0))),
                     tol['sphere_constraint'])
    report.add_check('projection', lift.projection_residual, tol['projection'])
    report.add_check('horizontality', lift.horizontality_residual, tol['horizontality'])
    report.add_check('unit_speed', lift.unit_speed_residual, tol['unit_speed'])

    first = mesh.vertices[:, :1, :]
    z, w = to_complex(first)
    circle = (np.cos(mesh.t)[None, :, None] * first
              + np.sin(mesh.t)[None, :, None] * to_real(1j * z, 1j * w))
    report.add_check('fiber_great_circle', float(np.max(np.abs(mesh.vertices - circle))),
                     tol['fiber_great_circle'])

    mean_residual = float(np.nanmax(np.abs(mesh.H - 0.5 * mesh.kappa[:, None])))
    flat_residual = float(np.nanmax(np.abs(mesh.K_S)))
    report.add_check('mean_curvature', mean_residual, tol['mean_curvature'])
    report.add_check('flatness', flat_residual, tol['flatness'])
    if mesh.shape[0] % 2 == 0 and mesh.shape[1] % 2 == 0:
        coarse_mean, coarse_flat = subgrid_residuals(mesh)
        add_refinement_check(report, 'mean_curvature', mean_residual, coarse_mean)
        add_refinement_check(report, 'flatness', flat_residual, coarse_flat)
    report.add_check('el_residual', el_residual(profile), tol['el_residual'])
    if mesh.sheared:
        report.add_warning("lift does not close; mesh rows are sheared along the fibers")
    return report


@dataclass(frozen=True)
class BaseCurve2D:
    """Arc-length samples of a base curve in BCV coordinates (x, y)."""
    a: float
    s: np.ndarray
    points: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    kappa: np.ndarray
    length: float


def _chart_factor(a: float, points: np.ndarray) -> np.ndarray:
    factor = 1.0 + a * np.sum(points ** 2, axis=-1)
    if np.any(factor <= 1e-12):
        raise ChartExit("curve leaves the chart 1 + a(x^2 + y^2) > 0", a=a,
                        min_factor=float(np.min(factor)))
    return factor


def bcv_circle(a: float, r0: float, n_samples: int = 256) -> BaseCurve2D:
    """
    Coordinate circle of radius r0 traversed counterclockwise at unit base speed.

    Its geodesic curvature in (dx^2 + dy^2)/(1 + a r^2)^2 is (1 - a r0^2)/r0.
    """
    if r0 <= 0.0:
        raise ParameterError("circle radius must be positive", "r0 > 0", r0=r0)
    if 1.0 + a * r0 * r0 <= 0.0:
        raise ChartExit("circle leaves the chart", a=a, r0=r0)
    sigma = 1.0 / (1.0 + a * r0 * r0)
    length = 2.0 * math.pi * sigma * r0
    s = np.arange(n_samples) * (length / n_samples)
    phi = s / (sigma * r0)
    cos, sin = np.cos(phi), np.sin(phi)
    return BaseCurve2D(a=a, s=s, points=r0 * np.column_stack((cos, sin)),
                       velocity=np.column_stack((-sin, cos)) / sigma,
                       acceleration=-np.column_stack((cos, sin)) / (sigma * sigma * r0),
                       kappa=np.full(n_samples, (1.0 - a * r0 * r0) / r0), length=length)


def bcv_line(a: float, half_length: float = 0.5, n_samples: int = 256) -> BaseCurve2D:
    """Geodesic along the x-axis through the origin, s in [-half_length, half_length)."""
    s = np.linspace(-half_length, half_length, n_samples, endpoint=False)
    if a > 0.0:
        root = math.sqrt(a)
        if root * half_length >= 0.5 * math.pi:
            raise ChartExit("line leaves the chart", a=a, half_length=half_length)
        x = np.tan(root * s) / root
    elif a < 0.0:
        root = math.sqrt(-a)
        x = np.tanh(root * s) / root
    else:
        x = s.copy()
    dx = 1.0 + a * x * x
    zeros = np.zeros_like(s)
    return BaseCurve2D(a=a, s=s, points=np.column_stack((x, zeros)),
                       velocity=np.column_stack((dx, zeros)),
                       acceleration=np.column_stack((2.0 * a * x * dx, zeros)),
                       kappa=zeros, length=2.0 * half_length)


@lru_cache(maxsize=1)
def _bcv_geometry():
    """Lambdified metric, inverse, Christoffel symbols and their x, y derivatives."""
    x, y, a, b = sp.symbols('x y a b', real=True)
    z = sp.Symbol('z', real=True)
    coords = (x, y, z)
    sigma = 1 / (1 + a * (x ** 2 + y ** 2))
    half_b = b / 2
    g = sp.Matrix([
        [sigma ** 2 + half_b ** 2 * sigma ** 2 * y ** 2, -half_b ** 2 * sigma ** 2 * x * y, half_b * sigma * y],
        [-half_b ** 2 * sigma ** 2 * x * y, sigma ** 2 + half_b ** 2 * sigma ** 2 * x ** 2, -half_b * sigma * x],
        [half_b * sigma * y, -half_b * sigma * x, 1],
    ])
    g_inv = sp.Matrix([
        [1 / sigma ** 2, 0, -half_b * y / sigma],
        [0, 1 / sigma ** 2, half_b * x / sigma],
        [-half_b * y / sigma, half_b * x / sigma, 1 + half_b ** 2 * (x ** 2 + y ** 2)],
    ])
    gamma = [[[sum(g_inv[r, l] * (sp.diff(g[l, n], coords[m]) + sp.diff(g[l, m], coords[n])
                                   - sp.diff(g[m, n], coords[l])) for l in range(3)) / 2
               for n in range(3)] for m in range(3)] for r in range(3)]
    d_gamma = [[[[sp.diff(gamma[r][m][n], coords[k]) for n in range(3)] for m in range(3)]
                for r in range(3)] for k in range(2)]
    args = (x, y, a, b)
    return (sp.lambdify(args, g, 'numpy'), sp.lambdify(args, g_inv, 'numpy'),
            sp.lambdify(args, gamma, 'numpy'), sp.lambdify(args, d_gamma, 'numpy'))


def bcv_tensors(a: float, b: float, x: float, y: float) -> Dict[str, np.ndarray]:
    """
    Metric, inverse metric, Christoffel symbols and Riemann tensor at one point.

    Riemann components follow R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms}
    + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}.
    """
    metric_fn, inverse_fn, gamma_fn, d_gamma_fn = _bcv_geometry()
    metric = np.array(metric_fn(x, y, a, b), dtype=float)
    inverse = np.array(inverse_fn(x, y, a, b), dtype=float)
    gamma = np.array(gamma_fn(x, y, a, b), dtype=float)
    d_gamma = np.zeros((3, 3, 3, 3))
    d_gamma[:2] = np.array(d_gamma_fn(x, y, a, b), dtype=float)
    riemann = (np.einsum('mrns->rsmn', d_gamma) - np.einsum('nrms->rsmn', d_gamma)
               + np.einsum('rml,lns->rsmn', gamma, gamma) - np.einsum('rnl,lms->rsmn', gamma, gamma))
    return {'metric': metric, 'inverse': inverse, 'gamma': gamma, 'riemann': riemann,
            'ricci': np.einsum('rsrn->sn', riemann)}


def sectional_curvature(tensors: Mapping[str, np.ndarray], u: np.ndarray, v: np.ndarray) -> float:
    g, riemann = tensors['metric'], tensors['riemann']
    r_uvv = np.einsum('rsmn,s,m,n->r', riemann, v, u, v)
    area2 = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    return float(u @ g @ r_uvv / area2)


def bcv_vertical_check(a: float, b: float, base_curve: BaseCurve2D,
                       profile: Optional[CurvatureProfile] = None,
                       tolerances: Optional[Mapping[str, float]] = None) -> VerificationReport:
    """
    Vertical cylinder (x(s), y(s), t) in BCV coordinates.

    Checks H = kappa/2 with the second fundamental form built from the
    Christoffel symbols of g_{a,b}, and 2R + Ric(eta, eta) = 4a where R is the
    sectional curvature of the tangent plane and eta the inward unit normal.

    Args:
        a (float): Base curvature is 4a
        b (float): Bundle curvature is b/2
        base_curve (BaseCurve2D): Arc-length parametrized in the base metric
        profile (CurvatureProfile): Optional profile the base curvature must match

    Returns:
        VerificationReport: checks bcv_unit_speed, bcv_mean_curvature, bcv_curvature_identity
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    factor = _chart_factor(a, base_curve.points)

    kappa = base_curve.kappa
    report = VerificationReport("bcv vertical cylinder", {'a': repr(float(a)), 'b': repr(float(b))})
    if profile is not None:
        expected = profile.evaluate(base_curve.s)[0]
        report.add_check('profile_match', float(np.max(np.abs(kappa - expected))), 1e-9)
        report.add_value('el_residual', el_residual(profile))
        kappa = np.broadcast_to(expected, kappa.shape)

    vertical = np.array([0.0, 0.0, 1.0])
    speed_dev, h_dev, identity_dev = 0.0, 0.0, 0.0
    for j, ((x, y), (dx, dy), (ddx, ddy)) in enumerate(zip(base_curve.points, base_curve.velocity,
                                                         base_curve.acceleration)):
        tensors = bcv_tensors(a, b, float(x), float(y))
        g, g_inv, gamma = tensors['metric'], tensors['inverse'], tensors['gamma']
        x_s = np.array([dx, dy, 0.0])
        x_ss = np.array([ddx, ddy, 0.0])
        covector = np.array([-dy, dx, 0.0])
        eta = g_inv @ covector
        eta /= math.sqrt(float(covector @ eta))

        horizontal_speed = math.hypot(dx, dy) / factor[j]
        speed_dev = max(speed_dev, abs(horizontal_speed - 1.0))

        big_e, big_f, big_g = x_s @ g @ x_s, x_s @ g @ vertical, 1.0
        big_l = (x_ss + np.einsum('rmn,m,n->r', gamma, x_s, x_s)) @ g @ eta
        big_m = np.einsum('rmn,m,n->r', gamma, x_s, vertical) @ g @ eta
        big_n = np.einsum('rmn,m,n->r', gamma, vertical, vertical) @ g @ eta
        mean = (big_e * big_n + big_g * big_l - 2.0 * big_f * big_m) / (2.0 * (big_e * big_g - big_f ** 2))
        h_dev = max(h_dev, abs(mean - 0.5 * float(kappa[j])))

        sectional = sectional_curvature(tensors, x_s, vertical)
        ricci = float(eta @ tensors['ricci'] @ eta)
        identity_dev = max(identity_dev, abs(2.0 * sectional + ricci - 4.0 * a))

    report.add_value('samples', len(base_curve.s))
    report.add_check('bcv_unit_speed', speed_dev, tol['bcv_unit_speed'])
    report.add_check('bcv_mean_curvature', h_dev, tol['bcv_mean_curvature'])
    report.add_check('bcv_curvature_identity', identity_dev, tol['bcv_curvature_identity'])
    return report
