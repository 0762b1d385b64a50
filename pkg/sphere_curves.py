"""
Sphere Curves - Critical curves on round 2-spheres from their curvature profiles
Frame reconstruction, progression angle per curvature period, and the shooting
search for the closed curves with m lobes and n windings.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from critical_profiles import (CurvatureProfile, blaschke_profile, lower_bound_d,
                               solve_profile, total_curvature_profile)
from energy_catalog import EnergyKind, EnergySpec
from errors import (ConstraintViolation, DegenerateRotation, IntegrationDiverged, NoRoot,
                    NotClosed, ParameterError)

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-6
DRIFT_TOL = 1e-6
M_MAX = 64


@dataclass(frozen=True)
class SphereCurve:
    """Arc-length samples of a curve on S^2(rho) (or the plane z = 0 when rho = 0)."""
    rho: float
    s: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    kappa: np.ndarray
    kappa_s: np.ndarray
    kappa_ss: np.ndarray
    total_length: float
    lobes: int
    windings: int
    closure_gap: float
    profile: CurvatureProfile
    axis: Optional[np.ndarray] = None
    progression: Optional[float] = None

    @property
    def radius(self) -> float:
        return 1.0 / math.sqrt(self.rho) if self.rho > 0 else math.inf

    @property
    def n_points(self) -> int:
        return len(self.s)

    @property
    def step(self) -> float:
        return self.total_length / self.n_points

    @property
    def is_closed(self) -> bool:
        return self.closure_gap <= CLOSURE_TOL

    def provenance(self) -> Dict[str, str]:
        data = self.profile.provenance()
        data.update({'m': str(self.lobes), 'n': str(self.windings),
                     'length': repr(float(self.total_length)),
                     'closure_gap': repr(float(self.closure_gap))})
        return data


def project_rotation(frame: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar factor)."""
    u, _, vt = np.linalg.svd(frame)
    rotation = u @ vt
    if np.linalg.det(rotation) < 0:
        u[:, -1] *= -1.0
        rotation = u @ vt
    return rotation


def _frame_samples(profile: CurvatureProfile, rho: float, total: float, n_out: int) -> np.ndarray:
    """Integrate rows (sqrt(rho) gamma, T, N) of the Frenet-type frame; F' = A F."""
    root = math.sqrt(rho)
    grid = np.linspace(0.0, total, n_out + 1)

    def rhs(s, y):
        kappa = float(profile.evaluate(s)[0])
        frame = y.reshape(3, 3)
        out = np.empty((3, 3))
        out[0] = root * frame[1]
        out[1] = -root * frame[0] + kappa * frame[2]
        out[2] = -kappa * frame[1]
        return out.ravel()

    sol = solve_ivp(rhs, (0.0, total), np.eye(3).ravel(), method='DOP853', t_eval=grid,
                    rtol=1e-12, atol=1e-13)
    if not sol.success:
        raise IntegrationDiverged("frame integration failed", message=sol.message)

    frames = sol.y.T.reshape(-1, 3, 3)
    drift = np.max(np.abs(np.einsum('nij,nkj->nik', frames, frames) - np.eye(3)))
    if drift > DRIFT_TOL:
        raise IntegrationDiverged("frame left SO(3)", drift=float(drift))
    return np.array([project_rotation(f) for f in frames])


def _planar_samples(profile: CurvatureProfile, total: float, n_out: int) -> np.ndarray:
    """Planar curve: x' = cos(phi), y' = sin(phi), phi' = kappa."""
    grid = np.linspace(0.0, total, n_out + 1)

    def rhs(s, y):
        kappa = float(profile.evaluate(s)[0])
        return [math.cos(y[2]), math.sin(y[2]), kappa]

    sol = solve_ivp(rhs, (0.0, total), [0.0, 0.0, 0.0], method='DOP853', t_eval=grid,
                    rtol=1e-12, atol=1e-13)
    if not sol.success:
        raise IntegrationDiverged("planar integration failed", message=sol.message)
    return sol.y.T


def reconstruct(profile: CurvatureProfile, rho: Optional[float] = None, m_periods: int = 1,
                windings: int = 1) -> SphereCurve:
    """
    Realize a curvature profile as a curve on S^2(rho).

    Starts at (1/sqrt(rho), 0, 0) with T = (0, 1, 0) and N = sqrt(rho) gamma x T.
    For rho = 0 the curve is laid in the plane z = 0 starting at the origin
    along the x-axis.

    Args:
        profile (CurvatureProfile): One period of kappa(s)
        rho (float): Sphere curvature (defaults to the profile's)
        m_periods (int): Number of curvature periods to integrate
        windings (int): Recorded winding number about the symmetry axis

    Returns:
        SphereCurve: m_periods * n_samples samples; closure_gap from the endpoint
    """
    rho = profile.rho if rho is None else float(rho)
    if rho < 0.0:
        raise ParameterError("base must be a sphere or the plane", "rho >= 0", rho=rho)
    if m_periods < 1:
        raise ParameterError("need at least one period", "m_periods >= 1", m_periods=m_periods)
    if not math.isclose(rho, profile.rho, rel_tol=1e-12, abs_tol=1e-14):
        logger.warning("reconstructing a profile built for rho=%g on rho=%g", profile.rho, rho)

    n_out = m_periods * profile.n_samples
    total = m_periods * profile.period

    if rho > 0.0:
        frames = _frame_samples(profile, rho, total, n_out)
        points = frames[:, 0, :] / math.sqrt(rho)
        tangents = frames[:, 1, :]
        normals = frames[:, 2, :]
    else:
        state = _planar_samples(profile, total, n_out)
        cos, sin = np.cos(state[:, 2]), np.sin(state[:, 2])
        points = np.column_stack((state[:, 0], state[:, 1], np.zeros(len(state))))
        tangents = np.column_stack((cos, sin, np.zeros(len(state))))
        normals = np.column_stack((-sin, cos, np.zeros(len(state))))

    gap = float(np.linalg.norm(points[-1] - points[0]))
    logger.debug("reconstruct %s over %d periods: closure gap %.3e", profile.spec.label, m_periods, gap)
    return SphereCurve(
        rho=rho,
        s=np.arange(n_out) * (total / n_out),
        points=points[:-1], tangents=tangents[:-1], normals=normals[:-1],
        kappa=np.tile(profile.kappa, m_periods),
        kappa_s=np.tile(profile.kappa_s, m_periods),
        kappa_ss=np.tile(profile.kappa_ss, m_periods),
        total_length=total, lobes=m_periods, windings=windings, closure_gap=gap,
        profile=profile,
    )


def _longitude_advance(points: np.ndarray, axis: np.ndarray) -> float:
    helper = np.eye(3)[int(np.argmin(np.abs(axis)))]
    e_a = np.cross(axis, helper)
    e_a /= np.linalg.norm(e_a)
    e_b = np.cross(axis, e_a)
    longitude = np.unwrap(np.arctan2(points @ e_b, points @ e_a))
    return float(longitude[-1] - longitude[0])


def progression_angle(profile: CurvatureProfile, rho: Optional[float] = None,
                      period_index: int = 0) -> Tuple[float, np.ndarray]:
    """
    Rotation about the curve's symmetry axis accumulated over one curvature period.

    Args:
        profile (CurvatureProfile): Non-constant periodic profile
        rho (float): Sphere curvature (> 0)
        period_index (int): Which period to measure (the result is period independent)

    Returns:
        tuple: (Lambda in (0, 2 pi) unwrapped as a longitude advance, unit axis)
    """
    rho = profile.rho if rho is None else float(rho)
    if rho <= 0.0:
        raise ParameterError("progression angle needs a sphere", "rho > 0", rho=rho)
    if profile.is_constant:
        kappa0 = float(profile.kappa[0])
        axis = np.array([kappa0, 0.0, math.sqrt(rho)])
        return 2.0 * math.pi, axis / np.linalg.norm(axis)

    n = profile.n_samples
    frames = _frame_samples(profile, rho, (period_index + 1) * profile.period,
                            (period_index + 1) * n)
    start, end = frames[period_index * n], frames[(period_index + 1) * n]
    rotation = end.T @ start
    _, sigma, vt = np.linalg.svd(rotation - np.eye(3))
    if sigma[0] < 1e-9:
        raise DegenerateRotation("curve closes within one period", rho=rho, d=profile.d)
    axis = vt[-1]

    points = frames[period_index * n:(period_index + 1) * n + 1, 0, :]
    advance = _longitude_advance(points, axis)
    if advance < 0.0:
        axis, advance = -axis, -advance
    return advance, axis


def profile_for(spec: EnergySpec, rho: float, d: float, n_samples: int) -> CurvatureProfile:
    """Closed form where one exists, numerical profile otherwise."""
    if spec.kind is EnergyKind.EXTENDED_BLASCHKE and spec.scale == 1.0:
        return blaschke_profile(rho, spec.lam, d, n_samples)
    if spec.kind is EnergyKind.TOTAL_CURVATURE_TYPE and spec.scale == 1.0:
        return total_curvature_profile(rho, spec.lam, d, spec.epsilon, n_samples)
    return solve_profile(spec, rho, d, n_samples)


def admissible_pairs(max_m: int) -> List[Tuple[int, int]]:
    """Coprime (m, n) with m < 2n < sqrt(2) m."""
    pairs = []
    for m in range(2, max_m + 1):
        for n in range(1, m + 1):
            if m < 2 * n < math.sqrt(2.0) * m and math.gcd(m, n) == 1:
                pairs.append((m, n))
    return pairs


def check_closure_pair(spec: EnergySpec, m: int, n: int):
    """Warn (ConstraintViolation) when (m, n) is outside the existence range."""
    if m < 1 or n < 1:
        raise ParameterError("lobes and windings must be positive", "m, n >= 1", m=m, n=n)
    if math.gcd(m, n) != 1:
        warnings.warn(f"(m, n) = ({m}, {n}) is not coprime; the curve repeats itself",
                      ConstraintViolation, stacklevel=3)
    if spec.kind is EnergyKind.EXTENDED_BLASCHKE and spec.lam == 0.0:
        if not m < 2 * n < math.sqrt(2.0) * m:
            warnings.warn(f"(m, n) = ({m}, {n}) violates m < 2n < sqrt(2) m",
                          ConstraintViolation, stacklevel=3)


def scan_progression(spec: EnergySpec, rho: float, d_values: Sequence[float], n_samples: int = 512,
                     workers: int = 1) -> List[Tuple[float, float]]:
    """Progression angle at each d; results ordered by d."""
    def angle(d):
        try:
            return d, progression_angle(profile_for(spec, rho, d, n_samples), rho)[0]
        except Exception as exc:
            logger.debug("progression angle failed at d=%g: %s", d, exc)
            return d, math.nan

    ordered = sorted(float(d) for d in d_values)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(angle, ordered))
    else:
        results = [angle(d) for d in ordered]
    return sorted(results)


def default_scan(spec: EnergySpec, rho: float, decades: Tuple[float, float] = (-3.0, 2.0),
                 count: int = 26) -> np.ndarray:
    """Geometric offsets above the well floor of the first-integral potential."""
    if spec.kind is EnergyKind.EXTENDED_BLASCHKE:
        d_lo = 0.5 * (-spec.lam + math.sqrt(rho + spec.lam ** 2))
    else:
        d_lo = lower_bound_d(spec, rho)[0]
    return d_lo + max(abs(d_lo), 1.0) * np.logspace(decades[0], decades[1], count)


def closure_search(spec: EnergySpec, rho: float, m: int, n: int,
                   d_bracket: Optional[Tuple[float, float]] = None, n_samples: int = 1024,
                   workers: int = 1, angle_tol: float = 1e-10) -> Tuple[float, SphereCurve]:
    """
    Find d with progression angle 2 pi n / m and return the closed curve.

    Args:
        spec (EnergySpec): Energy
        rho (float): Sphere curvature
        m (int): Lobes (curvature periods in the closed curve)
        n (int): Windings about the symmetry axis
        d_bracket (tuple): Interval whose ends straddle the target; scanned when omitted
        n_samples (int): Samples per period of the returned curve
        workers (int): Threads for the bracket scan

    Returns:
        tuple: (d_star, closed SphereCurve)
    """
    check_closure_pair(spec, m, n)
    target = 2.0 * math.pi * n / m

    def mismatch(d):
        profile = profile_for(spec, rho, d, n_samples)
        return progression_angle(profile, rho)[0] - target

    if d_bracket is not None:
        lo, hi = sorted(float(v) for v in d_bracket)
        f_lo, f_hi = mismatch(lo), mismatch(hi)
        if not f_lo * f_hi < 0.0:
            raise NoRoot("bracket does not straddle the closure target", d_bracket=(lo, hi),
                         target=target)
    else:
        bracket = None
        for decades in ((-3.0, 2.0), (2.0, 4.0)):
            scan = scan_progression(spec, rho, default_scan(spec, rho, decades), 256, workers)
            for (d_a, l_a), (d_b, l_b) in zip(scan, scan[1:]):
                if math.isfinite(l_a) and math.isfinite(l_b) and (l_a - target) * (l_b - target) < 0.0:
                    bracket = (d_a, d_b)
                    break
            if bracket is not None:
                break
        if bracket is None:
            raise NoRoot("scan found no d with the closure angle", m=m, n=n, target=target)
        lo, hi = bracket
    logger.info("closure (%d, %d): bracket [%.12g, %.12g]", m, n, lo, hi)

    d_star = brentq(mismatch, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
    profile = profile_for(spec, rho, d_star, n_samples)
    advance, axis = progression_angle(profile, rho)
    if abs(advance - target) > max(angle_tol, 1e-9):
        raise NoRoot("root refinement missed the closure angle", d_star=d_star,
                     angle_error=advance - target)

    curve = reconstruct(profile, rho, m_periods=m, windings=n)
    if not curve.is_closed:
        raise NotClosed("closed curve did not close", closure_gap=curve.closure_gap, d_star=d_star)
    curve = replace(curve, axis=axis, progression=advance)
    logger.info("closure (%d, %d): d*=%.15g gap=%.2e", m, n, d_star, curve.closure_gap)
    return d_star, curve


def solid_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed solid angle of the spherical triangles (a, b, c) on the unit sphere."""
    numerator = np.einsum('...i,...i->...', a, np.cross(b, c))
    denominator = (1.0 + np.einsum('...i,...i->...', a, b) + np.einsum('...i,...i->...', b, c)
                   + np.einsum('...i,...i->...', c, a))
    return 2.0 * np.arctan2(numerator, denominator)


def polygon_area(curve: SphereCurve, center: np.ndarray) -> float:
    """
    Area on the left of a closed curve by spherical triangle fans from `center`.

    The chord-to-arc segments are restored with the kappa h^3 / 12 correction.
    """
    radius = curve.radius
    unit = curve.points / radius
    nxt = np.roll(unit, -1, axis=0)
    apex = np.broadcast_to(center / np.linalg.norm(center), unit.shape)
    fan = float(np.sum(solid_angle(apex, unit, nxt))) * radius ** 2
    h = curve.step
    kappa_mid = 0.5 * (curve.kappa + np.roll(curve.kappa, -1))
    return fan + float(np.sum(kappa_mid)) * h ** 3 / 12.0


def curve_energy(spec: EnergySpec, kappa: np.ndarray, ds: float) -> float:
    """Periodic rectangle rule for the integral of P(kappa)."""
    return float(np.sum(spec.evaluate(kappa)[0]) * ds)


def holonomy_cover_from_area(area: float, m_max: int = M_MAX, tol: float = 1e-6) -> Optional[int]:
    """Smallest m <= m_max with m * 2 * area a multiple of 2 pi (area on S^2(4))."""
    for m in range(1, m_max + 1):
        phase = math.remainder(m * 2.0 * area, 2.0 * math.pi)
        if abs(phase) <= tol * 2.0 * math.pi:
            return m
    return None


@dataclass(frozen=True)
class CurveStats:
    length: float
    energy: float
    area: float
    closure_gap: float
    polygon_area: float
    rational_cover: Optional[int]


def curve_stats(curve: SphereCurve, spec: Optional[EnergySpec] = None,
                tol: float = CLOSURE_TOL) -> CurveStats:
    """
    Length, energy, enclosed area and closure gap of a closed curve.

    Area by Gauss-Bonnet (2 pi n - integral of kappa) / rho with the turning
    index taken as the winding number n, cross-checked by the polygon excess
    about the symmetry axis.
    """
    if curve.closure_gap > tol:
        raise NotClosed("curve is not closed", closure_gap=curve.closure_gap, tol=tol)
    spec = curve.profile.spec if spec is None else spec
    h = curve.step
    energy = curve_energy(spec, curve.kappa, h)
    total_kappa = float(np.sum(curve.kappa)) * h

    if curve.rho > 0.0:
        area = (2.0 * math.pi * curve.windings - total_kappa) / curve.rho
        center = curve.axis if curve.axis is not None else progression_angle(curve.profile, curve.rho)[1]
        excess = polygon_area(curve, center)
    else:
        x, y = curve.points[:, 0], curve.points[:, 1]
        area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        excess = area

    cover = holonomy_cover_from_area(area) if math.isclose(curve.rho, 4.0) else None
    return CurveStats(length=curve.total_length, energy=energy, area=area,
                      closure_gap=curve.closure_gap, polygon_area=excess, rational_cover=cover)
