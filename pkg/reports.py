"""
Verification Reports - Named numerical checks with tolerance gates
Every verification routine returns a VerificationReport; the CLI prints it as
a key-value block and writes it as JSON next to the exported artifacts.
"""

import json
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional

# Identity each named check instantiates
IDENTITIES = {
    'el_residual': "Euler-Lagrange equation of the curve",
    'first_integral': "first integral",
    'fib_derivative': "first integral derivative equals 2 P'_s times EL",
    'profile_oracle': "closed-form profile",
    'progression': "progression angle 2 pi n / m",
    'closure_gap': "closed curve",
    'area_cross_check': "Gauss-Bonnet area",
    'sphere_constraint': "ambient sphere",
    'projection': "Hopf projection of the lift",
    'horizontality': "horizontal lift",
    'unit_speed': "arc-length lift",
    'fiber_great_circle': "Hopf fibers are great circles",
    'mean_curvature': "H = kappa/2",
    'flatness': "vertical tori are flat",
    'mean_curvature_refinement': "H residual drops 4x when the grid is refined",
    'flatness_refinement': "K_S residual drops 4x when the grid is refined",
    'cover_consistency': "area holonomy and lift close after the same cover",
    'bcv_unit_speed': "arc-length base curve",
    'bcv_mean_curvature': "H = kappa/2",
    'bcv_curvature_identity': "2 K(X_s, xi) + Ric(eta, eta) = 4a",
    'profile_match': "base curvature matches the profile",
    'orbit_circles': "orbits are Euclidean circles",
    'congruent_rows': "Killing motion is an isometry",
    'speed': "evolution speed |P'|",
    'metric_E': "induced metric",
    'metric_F': "induced metric",
    'metric_G': "induced metric",
    'principal_curvatures': "kappa1 = -kappa, kappa2 = kappa1 + P/P'",
    'gauss_equation': "Gauss equation K = kappa1 kappa2 + rho",
    'numeric_vs_analytic_H': "mean curvature",
    'numeric_vs_analytic_H_refinement': "H residual drops 4x when the grid is refined",
    'gauss_equation_refinement': "K residual drops 4x when the grid is refined",
    'minimal_torus_numeric_H': "minimal torus H = 0 on the grid",
    'catalog_constant': "Weingarten relation",
    'weingarten_residual': "Weingarten relation kappa1 = kappa2 - P/P'",
    'recovery_error': "energy recovered from the evolution speed",
    'recovered_lambda': "energy recovered from the evolution speed",
    'recovered_kind': "energy recovered from the evolution speed",
    'euler_characteristic': "torus topology",
    'conformality': "stereographic projection is conformal",
    'torus_fit': "Clifford torus projects to a torus of revolution",
}


@dataclass
class Check:
    """One measured quantity against its tolerance (None means informational)."""
    name: str
    value: float
    tolerance: Optional[float] = None
    note: str = ""

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return True
        return math.isfinite(self.value) and self.value <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'value': _plain(self.value), 'tolerance': self.tolerance,
                'passed': self.passed, 'note': self.note}


def _plain(value: Any) -> Any:
    """JSON-safe scalar."""
    if getattr(value, 'ndim', None) == 0:
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


class VerificationReport:
    """Collects checks, plain values and warnings for one pipeline stage."""

    def __init__(self, title: str, provenance: Optional[Mapping[str, str]] = None):
        self.title = title
        self.provenance: Dict[str, str] = dict(provenance or {})
        self.checks: List[Check] = []
        self.values: Dict[str, Any] = {}
        self.warnings: List[str] = []
        self.output: List[str] = []
        self.indent_level = 0

    def add_check(self, name: str, value: float, tolerance: Optional[float] = None,
                  note: str = "") -> Check:
        """Record a measured residual; replaces an earlier check of the same name."""
        check = Check(name, float(value), tolerance, note or IDENTITIES.get(name, ""))
        self.checks = [c for c in self.checks if c.name != name]
        self.checks.append(check)
        return check

    def add_value(self, name: str, value: Any):
        self.values[name] = value

    def add_warning(self, message: str):
        self.warnings.append(message)

    def get_check(self, name: str) -> Optional[Check]:
        for check in self.checks:
            if check.name == name:
                return check
        return None

    def apply_tolerances(self, tolerances: Mapping[str, float]):
        """Override gate tolerances by full check name or by its last dotted segment."""
        for check in self.checks:
            key = check.name if check.name in tolerances else check.name.rsplit('.', 1)[-1]
            if key in tolerances:
                check.tolerance = float(tolerances[key])

    def extend(self, other: 'VerificationReport', prefix: str = ""):
        """Merge another report's checks, values and warnings under a name prefix."""
        for check in other.checks:
            self.add_check(prefix + check.name, check.value, check.tolerance, check.note)
        for name, value in other.values.items():
            self.values[prefix + name] = value
        self.warnings.extend(other.warnings)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[Check]:
        return [check for check in self.checks if not check.passed]

    def _emit(self, text: str = ""):
        """Emit a line with the current indentation."""
        if text:
            self.output.append("  " * self.indent_level + text)
        else:
            self.output.append("")

    def generate_report(self) -> str:
        """
        Render the report as a plain-text key-value block.

        Returns:
            str: One line per provenance entry, value and check; a final status line
        """
        self.output = []
        self.indent_level = 0
        self._emit(self.title.upper())
        self._emit("=" * 50)
        for key, value in self.provenance.items():
            self._emit(f"{key}: {value}")
        if self.values:
            self._emit()
            for key, value in self.values.items():
                rendered = f"{value:.17g}" if isinstance(value, float) else str(value)
                self._emit(f"{key}: {rendered}")
        if self.checks:
            self._emit()
            self._emit("Checks:")
            self.indent_level += 1
            for check in self.checks:
                status = "PASS" if check.passed else "FAIL"
                gate = "" if check.tolerance is None else f" <= {check.tolerance:.3g}"
                note = f"  ({check.note})" if check.note else ""
                self._emit(f"{check.name}: {check.value:.6e}{gate} [{status}]{note}")
            self.indent_level -= 1
        if self.warnings:
            self._emit()
            self._emit("Warnings:")
            self.indent_level += 1
            for warning in self.warnings:
                self._emit(f"- {warning}")
            self.indent_level -= 1
        self._emit()
        self._emit(f"status: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(self.output)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'title': self.title,
            'passed': self.passed,
            'provenance': self.provenance,
            'values': {key: _plain(value) for key, value in self.values.items()},
            'checks': [check.to_dict() for check in self.checks],
            'warnings': list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str)

    def __str__(self) -> str:
        return self.generate_report()
