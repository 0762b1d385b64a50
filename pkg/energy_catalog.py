"""
Energy Catalog - Curvature Lagrangians P(kappa) with closed-form derivatives
Maps Weingarten relations of rotational tori to curvature energies and back.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from errors import DomainError, ParameterError, UnsupportedRelation

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Relative tolerance for recognising special exponents and parameters
_SPECIAL_TOL = 1e-12


class EnergyKind(Enum):
    BENDING = 'bending'
    EXTENDED_BLASCHKE = 'extended_blaschke'
    TOTAL_CURVATURE_TYPE = 'total_curvature_type'
    ASTIGMATISM = 'astigmatism'
    EXPONENTIAL = 'exponential'
    Q_ELASTIC = 'q_elastic'


class RelationKind(Enum):
    LINEAR = 'linear'
    CONSTANT_GAUSS = 'constant_gauss'
    CONSTANT_ASTIGMATISM = 'constant_astigmatism'
    CONSTANT_SKEW = 'constant_skew'


@dataclass(frozen=True)
class EnergySpec:
    """
    A curvature Lagrangian P(kappa) from the catalog.

    `domain` overrides the default kappa interval; `scale` multiplies P and
    leaves every critical curve unchanged.
    """
    kind: EnergyKind
    lam: float = 0.0
    q: Optional[float] = None
    epsilon: int = 1
    scale: float = 1.0
    domain: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.scale == 0.0:
            raise ParameterError("energy scale must be nonzero", "scale != 0")
        if self.kind is EnergyKind.Q_ELASTIC:
            if self.q is None or self.q == 0.0 or self.q == 1.0:
                raise ParameterError("q-elastic exponent excluded", "q not in {0, 1}", q=self.q)
        if self.kind is EnergyKind.ASTIGMATISM and self.lam == 0.0:
            raise ParameterError("astigmatism energy needs lambda != 0", "lambda != 0")
        if self.kind is EnergyKind.EXPONENTIAL and self.lam == 0.0:
            raise ParameterError("exponential energy needs lambda != 0", "lambda != 0")
        if self.kind is EnergyKind.TOTAL_CURVATURE_TYPE:
            if self.epsilon not in (1, -1):
                raise ParameterError("epsilon must be a sign", "epsilon in {+1, -1}", epsilon=self.epsilon)
            if self.epsilon == -1 and self.lam >= 0.0:
                raise ParameterError("epsilon = -1 leaves no real kappa", "lambda < 0", lam=self.lam)
        if self.domain is not None and not self.domain[0] < self.domain[1]:
            raise ParameterError("empty kappa domain", "lo < hi", domain=self.domain)

    @property
    def kappa_domain(self) -> Tuple[float, float]:
        """Open interval on which P is real and smooth."""
        if self.domain is not None:
            return self.domain
        lam = self.lam
        if self.kind in (EnergyKind.BENDING, EnergyKind.EXPONENTIAL):
            return (-math.inf, math.inf)
        if self.kind in (EnergyKind.EXTENDED_BLASCHKE, EnergyKind.Q_ELASTIC):
            return (lam, math.inf)
        if self.kind is EnergyKind.TOTAL_CURVATURE_TYPE:
            if self.epsilon == -1:
                root = math.sqrt(-lam)
                return (-root, root)
            if lam > 0.0:
                return (-math.inf, math.inf)
            return (math.sqrt(-lam), math.inf)
        # Astigmatism: branch where P' has no zero
        if lam < 0.0:
            return (0.0, math.inf)
        return (lam, math.inf)

    @property
    def label(self) -> str:
        if self.kind is EnergyKind.Q_ELASTIC:
            return f"{self.kind.value}(lambda={self.lam:g}, q={self.q:g})"
        if self.kind is EnergyKind.TOTAL_CURVATURE_TYPE:
            return f"{self.kind.value}(lambda={self.lam:g}, epsilon={self.epsilon:+d})"
        return f"{self.kind.value}(lambda={self.lam:g})"

    def contains(self, kappa: ArrayLike) -> bool:
        lo, hi = self.kappa_domain
        k = np.asarray(kappa, dtype=float)
        return bool(np.all(np.isfinite(k)) and np.all(k > lo) and np.all(k < hi))

    def check_domain(self, kappa: ArrayLike):
        if not self.contains(kappa):
            k = np.atleast_1d(np.asarray(kappa, dtype=float))
            raise DomainError("kappa outside the energy's domain", energy=self.label,
                              domain=self.kappa_domain,
                              kappa_range=(float(np.min(k)), float(np.max(k))))

    def evaluate(self, kappa: ArrayLike, check: bool = True) -> Tuple[ArrayLike, ArrayLike, ArrayLike, ArrayLike]:
        """
        Evaluate P and its first three kappa-derivatives.

        Args:
            kappa (float or ndarray): Curvature values
            check (bool): Enforce the kappa domain

        Returns:
            tuple: (P, dP, ddP, dddP), same shape as kappa
        """
        if check:
            self.check_domain(kappa)
        k = np.asarray(kappa, dtype=float)
        lam = self.lam

        if self.kind is EnergyKind.BENDING:
            values = (k * k + lam, 2.0 * k, np.full_like(k, 2.0), np.zeros_like(k))
        elif self.kind in (EnergyKind.EXTENDED_BLASCHKE, EnergyKind.Q_ELASTIC):
            q = 0.5 if self.kind is EnergyKind.EXTENDED_BLASCHKE else float(self.q)
            u = k - lam
            values = (u ** q,
                      q * u ** (q - 1.0),
                      q * (q - 1.0) * u ** (q - 2.0),
                      q * (q - 1.0) * (q - 2.0) * u ** (q - 3.0))
        elif self.kind is EnergyKind.TOTAL_CURVATURE_TYPE:
            eps = float(self.epsilon)
            p = np.sqrt(eps * (k * k + lam))
            values = (p, eps * k / p, lam / p ** 3, -3.0 * lam * eps * k / p ** 5)
        elif self.kind is EnergyKind.ASTIGMATISM:
            e = np.exp(lam / k)
            values = (k * e,
                      e * (1.0 - lam / k),
                      e * lam * lam / k ** 3,
                      -lam * lam * e * (lam + 3.0 * k) / k ** 5)
        else:
            e = np.exp(lam * k)
            values = (e, lam * e, lam * lam * e, lam ** 3 * e)

        mu = self.scale
        out = tuple(mu * np.asarray(v, dtype=float) for v in values)
        if np.ndim(kappa) == 0:
            return tuple(float(v) for v in out)
        return out

    def with_scale(self, scale: float) -> 'EnergySpec':
        return replace(self, scale=scale)

    def to_mapping(self) -> Dict[str, str]:
        """Plain key-value serialization."""
        data = {'kind': self.kind.value, 'lambda': repr(float(self.lam))}
        if self.kind is EnergyKind.Q_ELASTIC:
            data['q'] = repr(float(self.q))
        if self.kind is EnergyKind.TOTAL_CURVATURE_TYPE:
            data['epsilon'] = str(self.epsilon)
        if self.scale != 1.0:
            data['scale'] = repr(float(self.scale))
        return data

    def to_text(self) -> str:
        return "\n".join(f"{key}={value}" for key, value in self.to_mapping().items())


def spec_from_mapping(data: Mapping[str, object]) -> EnergySpec:
    """Build an EnergySpec from key-value pairs such as `kind=extended_blaschke`."""
    kind_name = str(data.get('kind', data.get('energy', ''))).strip().lower()
    try:
        kind = EnergyKind(kind_name)
    except ValueError:
        raise ParameterError(f"unknown energy kind '{kind_name}'",
                             "kind in " + ", ".join(k.value for k in EnergyKind))
    q = data.get('q')
    return EnergySpec(
        kind=kind,
        lam=float(data.get('lambda', data.get('lam', 0.0))),
        q=float(q) if q is not None else None,
        epsilon=int(float(data.get('epsilon', 1))),
        scale=float(data.get('scale', 1.0)),
    )


def spec_from_text(text: str) -> EnergySpec:
    pairs = {}
    for raw in text.splitlines():
        line = raw.split('#', 1)[0].strip()
        if line:
            key, _, value = line.partition('=')
            pairs[key.strip()] = value.strip()
    return spec_from_mapping(pairs)


def eval_energy(spec: EnergySpec, kappa: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike, ArrayLike]:
    """Return (P, dP, ddP, dddP) at kappa; DomainError outside spec.kappa_domain."""
    return spec.evaluate(kappa)


def weingarten_ratio(spec: EnergySpec, kappa: ArrayLike) -> ArrayLike:
    """P/P' at kappa, the skew between the two principal curvatures."""
    p, dp, _, _ = spec.evaluate(kappa)
    if np.any(np.asarray(dp) == 0.0):
        raise DomainError("P' vanishes; Weingarten ratio undefined", energy=spec.label)
    return p / dp


def weingarten_of(spec: EnergySpec) -> Callable[[ArrayLike, ArrayLike], ArrayLike]:
    """
    Weingarten relation satisfied by binormal-evolution tori of spec.

    Returns:
        callable: residual(kappa1, kappa2) = kappa1 - kappa2 + P(k)/P'(k) with k = -kappa1
    """
    def relation_residual(kappa1: ArrayLike, kappa2: ArrayLike) -> ArrayLike:
        k1 = np.asarray(kappa1, dtype=float)
        residual = k1 - np.asarray(kappa2, dtype=float) + weingarten_ratio(spec, -k1)
        if np.ndim(residual) == 0:
            return float(residual)
        return residual

    return relation_residual


@dataclass(frozen=True)
class WeingartenRelation:
    """
    Relation between the principal curvatures of a rotational torus.

    Linear: kappa1 = a*kappa2 + b. ConstantGauss: K = K_o. ConstantAstigmatism:
    1/kappa2 - 1/kappa1 = c. ConstantSkew: kappa1 - kappa2 = b.
    """
    kind: RelationKind
    a: float = 0.0
    b: float = 0.0
    K_o: float = 0.0
    c: float = 0.0
    ambient_rho: float = 0.0
    epsilon: Optional[int] = None

    def __post_init__(self):
        if self.kind is RelationKind.LINEAR and self.a == 0.0:
            raise UnsupportedRelation("linear relation with a = 0 is trivial", a=self.a)
        if self.kind is RelationKind.CONSTANT_ASTIGMATISM and self.c == 0.0:
            raise ParameterError("constant astigmatism needs c != 0", "c != 0")


def relation_from_mapping(data: Mapping[str, object]) -> WeingartenRelation:
    kind_name = str(data.get('relation', data.get('kind', ''))).strip().lower()
    try:
        kind = RelationKind(kind_name)
    except ValueError:
        raise UnsupportedRelation(f"relation '{kind_name}' is not in the catalog")
    eps = data.get('epsilon')
    return WeingartenRelation(
        kind=kind,
        a=float(data.get('a', 0.0)),
        b=float(data.get('b', 0.0)),
        K_o=float(data.get('K_o', 0.0)),
        c=float(data.get('c', 0.0)),
        ambient_rho=float(data.get('rho', 0.0)),
        epsilon=int(float(eps)) if eps is not None else None,
    )


def energy_from_weingarten(rel: WeingartenRelation) -> EnergySpec:
    """
    Integrate a Weingarten relation to the energy whose critical curves generate it.

    Args:
        rel (WeingartenRelation): One of the four catalog relations

    Returns:
        EnergySpec: Normalized to unit multiplicative constant
    """
    if not isinstance(rel, WeingartenRelation) or not isinstance(rel.kind, RelationKind):
        raise UnsupportedRelation("relation outside the catalog", relation=rel)

    if rel.kind in (RelationKind.LINEAR, RelationKind.CONSTANT_SKEW):
        a = 1.0 if rel.kind is RelationKind.CONSTANT_SKEW else rel.a
        b = rel.b
        if math.isclose(a, 1.0, rel_tol=_SPECIAL_TOL):
            if b == 0.0:
                raise UnsupportedRelation("kappa1 = kappa2 is the umbilic relation", a=a, b=b)
            return EnergySpec(EnergyKind.EXPONENTIAL, lam=-1.0 / b)
        lam = b / (a - 1.0)
        q = a / (a - 1.0)
        if math.isclose(q, 0.5, rel_tol=_SPECIAL_TOL):
            return EnergySpec(EnergyKind.EXTENDED_BLASCHKE, lam=lam)
        if math.isclose(q, 2.0, rel_tol=_SPECIAL_TOL) and lam == 0.0:
            return EnergySpec(EnergyKind.BENDING, lam=0.0)
        return EnergySpec(EnergyKind.Q_ELASTIC, lam=lam, q=q)

    if rel.kind is RelationKind.CONSTANT_GAUSS:
        lam = rel.ambient_rho - rel.K_o
        eps = rel.epsilon if rel.epsilon is not None else (1 if lam >= 0.0 else -1)
        return EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=lam, epsilon=eps)

    if rel.kind is RelationKind.CONSTANT_ASTIGMATISM:
        return EnergySpec(EnergyKind.ASTIGMATISM, lam=1.0 / rel.c)

    raise UnsupportedRelation("relation outside the catalog", kind=rel.kind)


def relation_of(spec: EnergySpec, rho: float) -> WeingartenRelation:
    """Inverse of energy_from_weingarten for the catalog members that have one."""
    lam = spec.lam
    if spec.kind is EnergyKind.EXTENDED_BLASCHKE:
        return WeingartenRelation(RelationKind.LINEAR, a=-1.0, b=-2.0 * lam, ambient_rho=rho)
    if spec.kind is EnergyKind.Q_ELASTIC:
        q = float(spec.q)
        return WeingartenRelation(RelationKind.LINEAR, a=q / (q - 1.0), b=lam / (q - 1.0),
                                  ambient_rho=rho)
    if spec.kind is EnergyKind.BENDING and lam == 0.0:
        return WeingartenRelation(RelationKind.LINEAR, a=2.0, b=0.0, ambient_rho=rho)
    if spec.kind is EnergyKind.EXPONENTIAL:
        return WeingartenRelation(RelationKind.CONSTANT_SKEW, b=-1.0 / lam, ambient_rho=rho)
    if spec.kind is EnergyKind.TOTAL_CURVATURE_TYPE:
        return WeingartenRelation(RelationKind.CONSTANT_GAUSS, K_o=rho - lam,
                                  ambient_rho=rho, epsilon=spec.epsilon)
    if spec.kind is EnergyKind.ASTIGMATISM:
        return WeingartenRelation(RelationKind.CONSTANT_ASTIGMATISM, c=1.0 / lam, ambient_rho=rho)
    raise UnsupportedRelation("bending energy with lambda != 0 has no catalog relation",
                              energy=spec.label)


def catalog_constant(spec: EnergySpec, rho: float, kappa1: ArrayLike, kappa2: ArrayLike) -> Tuple[str, ArrayLike, float]:
    """
    Evaluate the invariant a catalog torus keeps constant.

    Returns:
        tuple: (name, per-sample value, expected constant)
    """
    k1 = np.asarray(kappa1, dtype=float)
    k2 = np.asarray(kappa2, dtype=float)
    lam = spec.lam
    if spec.kind is EnergyKind.EXTENDED_BLASCHKE:
        return "H", 0.5 * (k1 + k2), -lam
    if spec.kind is EnergyKind.EXPONENTIAL:
        return "kappa1 - kappa2", k1 - k2, -1.0 / lam
    if spec.kind is EnergyKind.TOTAL_CURVATURE_TYPE:
        return "K", k1 * k2 + rho, rho - lam
    if spec.kind is EnergyKind.ASTIGMATISM:
        return "1/kappa2 - 1/kappa1", 1.0 / k2 - 1.0 / k1, 1.0 / lam
    if spec.kind is EnergyKind.Q_ELASTIC:
        q = float(spec.q)
        return "kappa1 - a*kappa2", k1 - q / (q - 1.0) * k2, lam / (q - 1.0)
    # Bending keeps no constant; report the relation residual
    return "kappa1 - kappa2 + P/P'", k1 - k2 + weingarten_ratio(spec, -k1), 0.0
