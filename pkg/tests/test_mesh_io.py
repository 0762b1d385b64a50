import math

import numpy as np
import pytest

from errors import ArtifactIOError, AtPole, ParameterError
from mesh_io import (ExportFormat, add_refinement_check, choose_pole, difference, discrete_curvatures,
                     euler_characteristic, export, export_report_json, grid_angle_deviation, obj_curve_text,
                     obj_mesh_text, project_mesh, quad_faces, refinement_deficit, stereographic,
                     torus_of_revolution_fit)
from reports import VerificationReport


def clifford_grid(n):
    angles = np.arange(n) * (2.0 * math.pi / n)
    u, v = np.meshgrid(angles, angles, indexing='ij')
    return np.stack((np.cos(u), np.sin(u), np.cos(v), np.sin(v)), axis=-1) / math.sqrt(2.0), angles[1]


def test_clifford_torus_projects_to_torus_of_revolution():
    vertices, _ = clifford_grid(64)
    projected = project_mesh(vertices, pole=np.array([0.0, 0.0, 0.0, 1.0]))
    fit = torus_of_revolution_fit(projected.vertices)
    assert fit['R'] == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert fit['r'] == pytest.approx(1.0, abs=1e-10)
    assert fit['residual'] <= 1e-10


def test_closed_grid_is_a_torus():
    faces = quad_faces(12, 8)
    assert faces.shape == (96, 4)
    assert euler_characteristic(96, faces) == 0


def test_open_grid_is_a_disk():
    faces = quad_faces(5, 4, wrap=(False, False))
    assert faces.shape == (12, 4)
    assert euler_characteristic(20, faces) == 1


def test_stereographic_projection_is_conformal():
    vertices, step = clifford_grid(64)
    projected = stereographic(vertices)
    assert grid_angle_deviation(vertices, projected, step, step) <= 1e-9


def test_projection_rejects_pole():
    points = np.array([[0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]])
    with pytest.raises(AtPole):
        stereographic(points)


def test_pole_is_repicked_near_default():
    vertices = np.array([[[0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]]])
    pole = choose_pole(vertices)
    assert np.linalg.norm(pole) == pytest.approx(1.0)
    assert float(np.max(vertices.reshape(-1, 4) @ pole)) < 1.0 - 1e-3
    mesh = project_mesh(vertices)
    assert np.all(np.isfinite(mesh.vertices))


def sphere_grid(radius=2.0):
    theta = np.linspace(0.3, math.pi - 0.3, 64)
    phi = np.arange(128) * (2.0 * math.pi / 128)
    t, p = np.meshgrid(theta, phi, indexing='ij')
    vertices = radius * np.stack((np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)), axis=-1)
    return vertices, theta[1] - theta[0], phi[1]


def test_sphere_curvatures():
    vertices, ds, dt = sphere_grid()
    mean, gauss = discrete_curvatures(vertices, ds, dt, periodic=(False, True))
    interior = slice(2, -2)
    assert np.allclose(np.abs(mean[interior]), 0.5, atol=1e-5)
    assert np.allclose(gauss[interior], 0.25, atol=1e-5)
    assert np.all(np.isnan(mean[:2]))


def test_fourth_order_differences_beat_second_order():
    vertices, ds, dt = sphere_grid()
    errors = {}
    for order in (2, 4):
        _, gauss = discrete_curvatures(vertices, ds, dt, periodic=(False, True), order=order)
        errors[order] = float(np.max(np.abs(gauss[2:-2] - 0.25)))
    assert errors[4] < errors[2]
    with pytest.raises(ParameterError):
        discrete_curvatures(vertices, ds, dt, periodic=(False, True), order=3)


def torus_grid(n, big=2.0, small=1.0):
    angles = np.arange(n) * (2.0 * math.pi / n)
    u, v = np.meshgrid(angles, angles, indexing='ij')
    ring = big + small * np.cos(v)
    vertices = np.stack((ring * np.cos(u), ring * np.sin(u), small * np.sin(v)), axis=-1)
    return vertices, angles[1], np.cos(v) / (small * ring)


def test_curvature_error_shrinks_under_refinement():
    vertices, step, gauss_exact = torus_grid(64)
    errors = []
    for stride in (1, 2):
        _, gauss = discrete_curvatures(vertices[::stride, ::stride], stride * step, stride * step)
        errors.append(float(np.max(np.abs(gauss - gauss_exact[::stride, ::stride]))))
    fine, coarse = errors
    assert coarse > 1e-8
    assert refinement_deficit(fine, coarse) <= 1.0
    report = VerificationReport("torus")
    add_refinement_check(report, 'gauss', fine, coarse)
    assert report.get_check('gauss_refinement').passed
    assert report.values['gauss_coarse'] == coarse


def test_refinement_deficit():
    assert refinement_deficit(1e-6, 1.6e-5) == pytest.approx(0.25)
    assert refinement_deficit(1e-6, 2e-6) == pytest.approx(2.0)
    assert refinement_deficit(5e-10, 1e-9) == 0.0
    assert refinement_deficit(math.nan, 1e-3) == math.inf


def test_difference_along_one_axis():
    angles = np.arange(32) * (2.0 * math.pi / 32)
    values = np.sin(angles)
    assert np.allclose(difference(values, 0, angles[1]), np.cos(angles), atol=1e-4)
    assert np.allclose(difference(values, 0, angles[1], second=True), -values, atol=1e-4)
    open_ends = difference(values, 0, angles[1], periodic=False)
    assert np.all(np.isnan(open_ends[[0, 1, -2, -1]]))
    with pytest.raises(ParameterError):
        difference(values, 0, angles[1], order=6)


def test_obj_curve_text():
    text = obj_curve_text(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
                          provenance={'energy': 'bending'})
    lines = text.splitlines()
    assert lines[0] == "# energy: bending"
    assert lines[2] == "v 1 0 0"
    assert lines[-1] == "l 3 1"
    open_text = obj_curve_text(np.zeros((3, 3)), closed=False)
    assert [line for line in open_text.splitlines() if line.startswith("l ")] == ["l 1 2", "l 2 3"]


def test_obj_mesh_text_uses_one_based_quads():
    vertices = np.zeros((3, 4, 3))
    text = obj_mesh_text(vertices)
    faces = [line for line in text.splitlines() if line.startswith("f ")]
    assert len(faces) == 12
    assert faces[0] == "f 1 5 6 2"


def test_numbers_round_trip_at_full_precision():
    value = 1.0 / 3.0
    text = obj_curve_text(np.array([[value, math.pi, -math.e]]))
    numbers = [float(x) for x in text.splitlines()[0].split()[1:]]
    assert numbers == [value, math.pi, -math.e]


def test_export_writes_artifacts(tmp_path):
    report = VerificationReport("sample", {'rho': '4.0'})
    report.add_check('el_residual', 1e-9, 1e-6)
    columns = {'s': np.array([0.0, 0.5]), 'kappa': np.array([1.0, 2.0])}
    table = export(columns, ExportFormat.COLUMNS, str(tmp_path / "out" / "profile.txt"), {'d': '2.0'})
    assert open(table).read() == "# d: 2.0\n# s kappa\n0 1\n0.5 2\n"
    text = open(export(report, ExportFormat.REPORT, str(tmp_path / "report.txt"))).read()
    assert text.startswith("SAMPLE\n")
    assert text.endswith("status: PASS\n")
    assert '"passed": true' in open(export_report_json(report, str(tmp_path / "report.json"))).read()


def test_export_rejects_bad_inputs(tmp_path):
    with pytest.raises(ParameterError):
        export({'s': np.zeros(2)}, ExportFormat.REPORT, str(tmp_path / "r.txt"))
    with pytest.raises(ParameterError):
        export(np.zeros((2, 2)), ExportFormat.OBJ, str(tmp_path / "bad.obj"))
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ArtifactIOError):
        export(np.zeros((2, 3)), ExportFormat.OBJ, str(blocker / "curve.obj"))
