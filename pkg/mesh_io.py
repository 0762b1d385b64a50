"""
Mesh I/O - Stereographic projection, discrete curvature estimates and artifact export
Structured (s, t) grids are the only mesh layout; faces are quads with torus
wraparound and all text output uses 17 significant digits.
"""

import logging
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from errors import ArtifactIOError, AtPole, DegenerateCell, ParameterError
from reports import VerificationReport

logger = logging.getLogger(__name__)

EPS_POLE = 1e-3
EPS_AREA = 1e-12
DEFAULT_POLE = np.array([0.0, 0.0, 0.0, 1.0])
NUMBER_FORMAT = "{:.17g}"
# Residual drop required when both grid steps halve; coarse residuals below the floor are exempt
REFINEMENT_FACTOR = 4.0
REFINEMENT_FLOOR = 1e-8


class ExportFormat(Enum):
    OBJ = "obj"
    COLUMNS = "columns"
    REPORT = "report"


# Central-difference stencils: offsets and weights for d/dx and d2/dx2
_STENCILS = {
    2: ((-1, 1), (-0.5, 0.5), (-1, 0, 1), (1.0, -2.0, 1.0)),
    4: ((-2, -1, 1, 2), (1 / 12, -2 / 3, 2 / 3, -1 / 12),
        (-2, -1, 0, 1, 2), (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)),
}


def _diff(values: np.ndarray, axis: int, step: float, periodic: bool, order: int,
          second: bool = False) -> np.ndarray:
    offsets1, weights1, offsets2, weights2 = _STENCILS[order]
    offsets, weights = (offsets2, weights2) if second else (offsets1, weights1)
    out = np.zeros_like(values)
    for offset, weight in zip(offsets, weights):
        out += weight * np.roll(values, -offset, axis=axis)
    out /= step ** 2 if second else step
    if not periodic:
        reach = max(offsets)
        index = [slice(None)] * values.ndim
        index[axis] = np.r_[0:reach, values.shape[axis] - reach:values.shape[axis]]
        out[tuple(index)] = np.nan
    return out


def _mixed(values: np.ndarray, ds: float, dt: float, periodic: Tuple[bool, bool], order: int) -> np.ndarray:
    return _diff(_diff(values, 0, ds, periodic[0], order), 1, dt, periodic[1], order)


def difference(values: np.ndarray, axis: int, step: float, periodic: bool = True, order: int = 4,
               second: bool = False) -> np.ndarray:
    """Central difference along one grid axis; open axes get NaN at both ends."""
    if order not in _STENCILS:
        raise ParameterError("unsupported difference order", "order in {2, 4}", order=order)
    return _diff(np.asarray(values, dtype=float), axis, step, periodic, order, second)


def refinement_deficit(fine: float, coarse: float, factor: float = REFINEMENT_FACTOR,
                       floor: float = REFINEMENT_FLOOR) -> float:
    """
    factor * fine / coarse for one residual measured on a grid and on its
    every-other-sample subgrid. At most 1 when the residual dropped by the
    factor under refinement; 0 when the coarse residual is already below floor.
    """
    if not (math.isfinite(fine) and math.isfinite(coarse)):
        return math.inf
    if coarse <= floor:
        return 0.0
    return factor * fine / coarse


def add_refinement_check(report: VerificationReport, name: str, fine: float, coarse: float):
    """Record both residuals and the '<name>_refinement' check (tolerance 1)."""
    report.add_value(f'{name}_coarse', coarse)
    report.add_value(f'{name}_fine', fine)
    report.add_check(f'{name}_refinement', refinement_deficit(fine, coarse), 1.0)


def cross4(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vector orthogonal to a, b, c in R^4 (generalized cross product)."""
    stacked = np.stack((a, b, c), axis=-2)
    out = np.empty(a.shape)
    for i in range(4):
        minor = np.delete(stacked, i, axis=-1)
        out[..., i] = (-1) ** i * np.linalg.det(minor)
    return out


@dataclass(frozen=True)
class FundamentalForms:
    """First and second fundamental forms sampled on a structured grid."""
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    normal: np.ndarray
    x_s: np.ndarray
    x_t: np.ndarray

    @property
    def area_element(self) -> np.ndarray:
        return np.sqrt(self.E * self.G - self.F ** 2)

    @property
    def mean_curvature(self) -> np.ndarray:
        return ((self.E * self.N + self.G * self.L - 2.0 * self.F * self.M)
                / (2.0 * (self.E * self.G - self.F ** 2)))

    @property
    def gauss_curvature(self) -> np.ndarray:
        """Extrinsic (determinant of the shape operator)."""
        return (self.L * self.N - self.M ** 2) / (self.E * self.G - self.F ** 2)

    @property
    def principal_curvatures(self) -> Tuple[np.ndarray, np.ndarray]:
        h, k = self.mean_curvature, self.gauss_curvature
        root = np.sqrt(np.maximum(h * h - k, 0.0))
        return h + root, h - root


def fundamental_forms(vertices: np.ndarray, ds: float, dt: float,
                      periodic: Tuple[bool, bool] = (True, True),
                      sphere_radius: Optional[float] = None,
                      reference_normal: Optional[np.ndarray] = None,
                      order: int = 4) -> FundamentalForms:
    """
    Finite-difference fundamental forms of a grid surface X(s, t).

    Surfaces in R^3 take the normal X_s x X_t; surfaces on S^3(r) in R^4 take
    the normal orthogonal to X, X_s and X_t, so second derivatives are
    projected onto the sphere's tangent space.

    Args:
        vertices (np.ndarray): (n_s, n_t, 3) or (n_s, n_t, 4) samples
        ds (float): Grid step in s
        dt (float): Grid step in t
        periodic (tuple): Wraparound per axis; open axes get NaN edge rows
        sphere_radius (float): Radius of the ambient 3-sphere for 4-vectors
        reference_normal (np.ndarray): Per-vertex field the normal is oriented against
        order (int): Difference order, 2 or 4

    Returns:
        FundamentalForms: E, F, G, L, M, N and the unit normal
    """
    if order not in _STENCILS:
        raise ParameterError("unsupported difference order", "order in {2, 4}", order=order)
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[-1]

    x_s = _diff(vertices, 0, ds, periodic[0], order)
    x_t = _diff(vertices, 1, dt, periodic[1], order)
    x_ss = _diff(vertices, 0, ds, periodic[0], order, second=True)
    x_tt = _diff(vertices, 1, dt, periodic[1], order, second=True)
    x_st = _mixed(vertices, ds, dt, periodic, order)

    if dim == 3:
        normal = np.cross(x_s, x_t)
    elif dim == 4:
        if sphere_radius is None:
            raise ParameterError("4-vector meshes must lie on a 3-sphere", "sphere_radius > 0")
        normal = cross4(vertices / sphere_radius, x_s, x_t)
    else:
        raise ParameterError("vertices must be 3- or 4-vectors", dim=dim)
    length = np.linalg.norm(normal, axis=-1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        normal = normal / length

    if reference_normal is not None:
        sign = np.sign(np.einsum('...i,...i->...', normal, reference_normal))
        normal = normal * np.where(sign == 0, 1.0, sign)[..., None]

    def dot(u, v):
        return np.einsum('...i,...i->...', u, v)

    return FundamentalForms(E=dot(x_s, x_s), F=dot(x_s, x_t), G=dot(x_t, x_t),
                            L=dot(x_ss, normal), M=dot(x_st, normal), N=dot(x_tt, normal),
                            normal=normal, x_s=x_s, x_t=x_t)


def discrete_curvatures(vertices: np.ndarray, ds: float, dt: float,
                        periodic: Tuple[bool, bool] = (True, True),
                        sphere_radius: Optional[float] = None,
                        reference_normal: Optional[np.ndarray] = None,
                        order: int = 4) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-vertex (H, K) estimates; K is extrinsic.

    For meshes on S^3(r) add 1/r^2 to K for the intrinsic curvature.
    """
    forms = fundamental_forms(vertices, ds, dt, periodic, sphere_radius, reference_normal, order)
    det = forms.E * forms.G - forms.F ** 2
    finite = np.isfinite(det)
    if np.any(det[finite] < EPS_AREA):
        worst = np.unravel_index(np.nanargmin(np.where(finite, det, np.nan)), det.shape)
        raise DegenerateCell("quad cell area below tolerance", index=tuple(int(i) for i in worst),
                             det=float(det[worst]))
    return forms.mean_curvature, forms.gauss_curvature


def grid_angle(vertices: np.ndarray, ds: float, dt: float,
               periodic: Tuple[bool, bool] = (True, True)) -> np.ndarray:
    """Angle between the s and t grid directions at each vertex."""
    x_s = _diff(np.asarray(vertices, dtype=float), 0, ds, periodic[0], 4)
    x_t = _diff(np.asarray(vertices, dtype=float), 1, dt, periodic[1], 4)
    cos = (np.einsum('...i,...i->...', x_s, x_t)
           / (np.linalg.norm(x_s, axis=-1) * np.linalg.norm(x_t, axis=-1)))
    return np.arccos(np.clip(cos, -1.0, 1.0))


def grid_angle_deviation(source: np.ndarray, projected: np.ndarray, ds: float, dt: float,
                         periodic: Tuple[bool, bool] = (True, True)) -> float:
    """Max change of the grid angle under a map (zero for conformal maps)."""
    delta = grid_angle(source, ds, dt, periodic) - grid_angle(projected, ds, dt, periodic)
    return float(np.nanmax(np.abs(delta)))


def householder_to_last_axis(pole: np.ndarray) -> np.ndarray:
    """Orthogonal matrix sending the unit vector `pole` to the last basis vector."""
    dim = len(pole)
    target = np.zeros(dim)
    target[-1] = 1.0
    v = pole - target
    norm = np.linalg.norm(v)
    if norm < 1e-15:
        return np.eye(dim)
    v = v / norm
    return np.eye(dim) - 2.0 * np.outer(v, v)


def stereographic(points: np.ndarray, pole: Optional[np.ndarray] = None, radius: float = 1.0,
                  eps_pole: float = EPS_POLE) -> np.ndarray:
    """
    Project points of S^3(radius) from `pole` onto the equatorial 3-space.

    q = r (p - <p, pole> pole) / (r - <p, pole>), expressed in coordinates of
    the hyperplane orthogonal to the pole.

    Args:
        points (np.ndarray): (..., 4) points with |p| = radius
        pole (np.ndarray): Unit 4-vector (default (0, 0, 0, 1))
        radius (float): Sphere radius

    Returns:
        np.ndarray: (..., 3) projected points
    """
    pole = DEFAULT_POLE if pole is None else np.asarray(pole, dtype=float)
    pole = pole / np.linalg.norm(pole)
    points = np.asarray(points, dtype=float)
    height = points @ pole
    closest = float(np.max(height)) / radius
    if closest > 1.0 - eps_pole:
        raise AtPole("point at the projection pole", closeness=closest, eps_pole=eps_pole)
    q = radius * (points - height[..., None] * pole) / (radius - height)[..., None]
    return (q @ householder_to_last_axis(pole).T)[..., :3]


def choose_pole(points: np.ndarray, radius: float = 1.0, eps_pole: float = EPS_POLE,
                attempts: int = 64) -> np.ndarray:
    """Default pole unless a vertex is near it; otherwise the best of seeded random poles."""
    flat = np.asarray(points, dtype=float).reshape(-1, 4) / radius
    if float(np.max(flat @ DEFAULT_POLE)) <= 1.0 - eps_pole:
        return DEFAULT_POLE.copy()
    rng = np.random.default_rng(0)
    candidates = rng.normal(size=(attempts, 4))
    candidates /= np.linalg.norm(candidates, axis=1, keepdims=True)
    closeness = np.max(flat @ candidates.T, axis=0)
    best = int(np.argmin(closeness))
    if closeness[best] > 1.0 - eps_pole:
        raise AtPole("no admissible projection pole found", attempts=attempts)
    logger.info("projection pole re-picked: %s", np.array2string(candidates[best], precision=6))
    return candidates[best]


def quad_faces(n_s: int, n_t: int, wrap: Tuple[bool, bool] = (True, True)) -> np.ndarray:
    """0-based quads (i,j) (i+1,j) (i+1,j+1) (i,j+1) on an n_s x n_t grid."""
    rows = n_s if wrap[0] else n_s - 1
    cols = n_t if wrap[1] else n_t - 1
    i, j = np.meshgrid(np.arange(rows), np.arange(cols), indexing='ij')
    i, j = i.ravel(), j.ravel()
    i1, j1 = (i + 1) % n_s, (j + 1) % n_t
    return np.column_stack((i * n_t + j, i1 * n_t + j, i1 * n_t + j1, i * n_t + j1))


def euler_characteristic(n_vertices: int, faces: np.ndarray) -> int:
    edges = set()
    for face in faces:
        for a, b in zip(face, np.roll(face, -1)):
            edges.add((min(a, b), max(a, b)))
    return n_vertices - len(edges) + len(faces)


@dataclass(frozen=True)
class ProjectedMesh:
    vertices: np.ndarray
    faces: np.ndarray
    pole: np.ndarray
    radius: float
    source_shape: Tuple[int, ...]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0] * self.vertices.shape[1]


def project_mesh(vertices: np.ndarray, radius: float = 1.0, pole: Optional[np.ndarray] = None,
                 eps_pole: float = EPS_POLE) -> ProjectedMesh:
    """Stereographic image of an (n_s, n_t, 4) torus grid with closed quad faces."""
    vertices = np.asarray(vertices, dtype=float)
    if pole is None:
        pole = choose_pole(vertices, radius, eps_pole)
    projected = stereographic(vertices, pole, radius, eps_pole)
    n_s, n_t = vertices.shape[:2]
    return ProjectedMesh(vertices=projected, faces=quad_faces(n_s, n_t), pole=np.asarray(pole, dtype=float),
                         radius=radius, source_shape=vertices.shape)


def _format(values: Sequence[float]) -> str:
    return " ".join(NUMBER_FORMAT.format(float(v)) for v in values)


def _header_lines(provenance: Optional[Mapping[str, Any]]) -> str:
    if not provenance:
        return ""
    return "".join(f"# {key}: {value}\n" for key, value in provenance.items())


def _write(path: str, text: str):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
    except OSError as exc:
        raise ArtifactIOError(f"Could not write artifact ({exc.strerror})", path) from exc
    logger.info("wrote %s", path)


def obj_curve_text(points: np.ndarray, closed: bool = True,
                   provenance: Optional[Mapping[str, Any]] = None) -> str:
    """OBJ polyline; a closed curve of N samples has N segments."""
    points = np.asarray(points, dtype=float)
    lines = [_header_lines(provenance)]
    lines.extend(f"v {_format(p)}\n" for p in points)
    count = len(points)
    segments = count if closed else count - 1
    lines.extend(f"l {k + 1} {(k + 1) % count + 1}\n" for k in range(segments))
    return "".join(lines)


def obj_mesh_text(vertices: np.ndarray, faces: Optional[np.ndarray] = None,
                  provenance: Optional[Mapping[str, Any]] = None) -> str:
    """OBJ quads with 1-based indices; faces default to the closed torus grid."""
    vertices = np.asarray(vertices, dtype=float)
    if faces is None:
        faces = quad_faces(vertices.shape[0], vertices.shape[1])
    lines = [_header_lines(provenance)]
    lines.extend(f"v {_format(p)}\n" for p in vertices.reshape(-1, vertices.shape[-1]))
    lines.extend("f " + " ".join(str(int(i) + 1) for i in face) + "\n" for face in faces)
    return "".join(lines)


def columns_text(columns: Mapping[str, np.ndarray], provenance: Optional[Mapping[str, Any]] = None) -> str:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])
    lines = [_header_lines(provenance), "# " + " ".join(names) + "\n"]
    lines.extend(_format(row) + "\n" for row in data)
    return "".join(lines)


def export(artifact: Any, fmt: ExportFormat, path: str,
           provenance: Optional[Mapping[str, Any]] = None, faces: Optional[np.ndarray] = None) -> str:
    """
    Write a curve, mesh, column table or report.

    Args:
        artifact: SphereCurve-like (has `points`), ProjectedMesh, (n_s, n_t, 3) array,
            mapping of column name to samples, or VerificationReport
        fmt (ExportFormat): Output format
        path (str): Destination file
        provenance (dict): Header entries
        faces (ndarray): Quad faces overriding the closed torus grid

    Returns:
        str: The path written
    """
    fmt = ExportFormat(fmt)
    if fmt is ExportFormat.REPORT:
        if not isinstance(artifact, VerificationReport):
            raise ParameterError("report export needs a VerificationReport")
        text = artifact.generate_report() + "\n"
    elif fmt is ExportFormat.COLUMNS:
        text = columns_text(artifact, provenance)
    elif isinstance(artifact, ProjectedMesh):
        text = obj_mesh_text(artifact.vertices, artifact.faces if faces is None else faces, provenance)
    elif hasattr(artifact, 'points'):
        text = obj_curve_text(artifact.points, closed=bool(getattr(artifact, 'is_closed', True)), provenance=provenance)
    else:
        array = np.asarray(artifact, dtype=float)
        if array.ndim == 3 and array.shape[-1] == 3:
            text = obj_mesh_text(array, faces, provenance)
        elif array.ndim == 2 and array.shape[-1] == 3:
            text = obj_curve_text(array, provenance=provenance)
        else:
            raise ParameterError("cannot export array as OBJ", shape=array.shape)
    _write(path, text)
    return path


def export_report_json(report: VerificationReport, path: str) -> str:
    _write(path, report.to_json() + "\n")
    return path


def torus_of_revolution_fit(points: np.ndarray) -> Dict[str, float]:
    """
    Least-squares torus about the z-axis: returns center radius R and tube radius r.

    Fits (rho_c - R)^2 + z^2 = r^2 in the meridian plane by linear least squares.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    rho_c = np.hypot(points[:, 0], points[:, 1])
    z = points[:, 2]
    # rho^2 + z^2 = 2 R rho + (r^2 - R^2)
    design = np.column_stack((2.0 * rho_c, np.ones_like(rho_c)))
    (big_r, offset), *_ = np.linalg.lstsq(design, rho_c ** 2 + z ** 2, rcond=None)
    small_r = float(np.sqrt(offset + big_r ** 2))
    residual = float(np.max(np.abs(np.hypot(rho_c - big_r, z) - small_r)))
    return {'R': float(big_r), 'r': small_r, 'residual': residual}
