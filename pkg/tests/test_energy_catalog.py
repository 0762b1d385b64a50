import math

import numpy as np
import pytest

from energy_catalog import (EnergyKind, EnergySpec, RelationKind, WeingartenRelation, catalog_constant,
                            energy_from_weingarten, eval_energy, relation_from_mapping, relation_of,
                            spec_from_mapping, spec_from_text, weingarten_of, weingarten_ratio)
from errors import DomainError, ParameterError, UnsupportedRelation

CATALOG = [
    EnergySpec(EnergyKind.BENDING, lam=0.0),
    EnergySpec(EnergyKind.EXTENDED_BLASCHKE, lam=0.3),
    EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=3.0),
    EnergySpec(EnergyKind.ASTIGMATISM, lam=0.9),
    EnergySpec(EnergyKind.EXPONENTIAL, lam=0.2),
    EnergySpec(EnergyKind.Q_ELASTIC, lam=0.5, q=1.0 / 3.0),
]


@pytest.mark.parametrize("spec, kappa, expected", [
    (EnergySpec(EnergyKind.BENDING), 3.0, (9.0, 6.0, 2.0, 0.0)),
    (EnergySpec(EnergyKind.EXTENDED_BLASCHKE), 4.0, (2.0, 0.25, -0.03125, 0.01171875)),
    (EnergySpec(EnergyKind.EXPONENTIAL, lam=1.0), 0.0, (1.0, 1.0, 1.0, 1.0)),
])
def test_eval_energy_values(spec, kappa, expected):
    assert eval_energy(spec, kappa) == pytest.approx(expected, rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("spec", CATALOG, ids=lambda spec: spec.kind.value)
def test_derivatives_match_central_differences(spec):
    kappa = np.linspace(1.2, 2.5, 7)
    h = 1e-5
    values = spec.evaluate(kappa)
    for order in range(3):
        upper = spec.evaluate(kappa + h)[order]
        lower = spec.evaluate(kappa - h)[order]
        estimate = (upper - lower) / (2.0 * h)
        assert np.allclose(estimate, values[order + 1], rtol=1e-6, atol=1e-7)


def test_scalar_input_gives_floats():
    values = eval_energy(EnergySpec(EnergyKind.BENDING, lam=1.0), 2.0)
    assert all(isinstance(v, float) for v in values)


def test_domain_error_outside_interval():
    with pytest.raises(DomainError):
        eval_energy(EnergySpec(EnergyKind.EXTENDED_BLASCHKE, lam=0.0), -1.0)
    with pytest.raises(DomainError):
        eval_energy(EnergySpec(EnergyKind.Q_ELASTIC, lam=0.5, q=2.5), np.array([1.0, 0.5]))


@pytest.mark.parametrize("kwargs", [
    {'kind': EnergyKind.Q_ELASTIC, 'q': 1.0},
    {'kind': EnergyKind.Q_ELASTIC, 'q': None},
    {'kind': EnergyKind.ASTIGMATISM, 'lam': 0.0},
    {'kind': EnergyKind.EXPONENTIAL, 'lam': 0.0},
    {'kind': EnergyKind.TOTAL_CURVATURE_TYPE, 'lam': 1.0, 'epsilon': -1},
    {'kind': EnergyKind.BENDING, 'scale': 0.0},
])
def test_excluded_parameters(kwargs):
    with pytest.raises(ParameterError):
        EnergySpec(**kwargs)


def test_kappa_domains():
    assert EnergySpec(EnergyKind.EXTENDED_BLASCHKE, lam=-1.0).kappa_domain == (-1.0, math.inf)
    assert EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=-4.0, epsilon=-1).kappa_domain == (-2.0, 2.0)
    assert EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=-4.0).kappa_domain == (2.0, math.inf)
    assert EnergySpec(EnergyKind.ASTIGMATISM, lam=-0.5).kappa_domain == (0.0, math.inf)


@pytest.mark.parametrize("spec", CATALOG, ids=lambda spec: spec.kind.value)
def test_weingarten_ratio_is_scale_invariant(spec):
    kappa = np.array([1.5, 2.0, 3.0])
    assert np.allclose(weingarten_ratio(spec.with_scale(-2.5), kappa), weingarten_ratio(spec, kappa),
                       rtol=1e-14)


def test_weingarten_of_vanishes_on_generated_curvatures():
    spec = EnergySpec(EnergyKind.EXTENDED_BLASCHKE)
    # kappa = 4: P/P' = 8, so kappa1 = -4 and kappa2 = 4
    residual = weingarten_of(spec)
    assert residual(-4.0, 4.0) == pytest.approx(0.0, abs=1e-14)
    assert residual(-4.0, 3.0) == pytest.approx(1.0)


@pytest.mark.parametrize("relation, kind, lam", [
    (WeingartenRelation(RelationKind.LINEAR, a=-1.0, b=2.0), EnergyKind.EXTENDED_BLASCHKE, -1.0),
    (WeingartenRelation(RelationKind.CONSTANT_GAUSS, K_o=1.0, ambient_rho=4.0),
     EnergyKind.TOTAL_CURVATURE_TYPE, 3.0),
    (WeingartenRelation(RelationKind.LINEAR, a=1.0, b=2.0), EnergyKind.EXPONENTIAL, -0.5),
    (WeingartenRelation(RelationKind.CONSTANT_SKEW, b=2.0), EnergyKind.EXPONENTIAL, -0.5),
    (WeingartenRelation(RelationKind.CONSTANT_ASTIGMATISM, c=2.0), EnergyKind.ASTIGMATISM, 0.5),
    (WeingartenRelation(RelationKind.LINEAR, a=2.0, b=0.0), EnergyKind.BENDING, 0.0),
])
def test_energy_from_weingarten(relation, kind, lam):
    spec = energy_from_weingarten(relation)
    assert spec.kind is kind
    assert spec.lam == pytest.approx(lam, rel=1e-14)


def test_linear_relation_gives_q_elastic():
    spec = energy_from_weingarten(WeingartenRelation(RelationKind.LINEAR, a=3.0, b=1.0))
    assert spec.kind is EnergyKind.Q_ELASTIC
    assert spec.q == pytest.approx(1.5)
    assert spec.lam == pytest.approx(0.5)


def test_constant_gauss_negative_lambda_picks_negative_sign():
    spec = energy_from_weingarten(WeingartenRelation(RelationKind.CONSTANT_GAUSS, K_o=5.0, ambient_rho=4.0))
    assert spec.epsilon == -1
    assert spec.lam == pytest.approx(-1.0)


@pytest.mark.parametrize("spec", CATALOG, ids=lambda spec: spec.kind.value)
def test_relation_of_inverts_energy_from_weingarten(spec):
    recovered = energy_from_weingarten(relation_of(spec, 4.0))
    assert recovered.kind is spec.kind
    assert recovered.lam == pytest.approx(spec.lam, rel=1e-12, abs=1e-15)
    if spec.q is not None:
        assert recovered.q == pytest.approx(spec.q, rel=1e-12)


def test_unsupported_relations():
    with pytest.raises(UnsupportedRelation):
        energy_from_weingarten(WeingartenRelation(RelationKind.CONSTANT_SKEW, b=0.0))
    with pytest.raises(UnsupportedRelation):
        WeingartenRelation(RelationKind.LINEAR, a=0.0, b=1.0)
    with pytest.raises(UnsupportedRelation):
        relation_of(EnergySpec(EnergyKind.BENDING, lam=1.0), 4.0)
    with pytest.raises(UnsupportedRelation):
        relation_from_mapping({'relation': 'cubic'})


@pytest.mark.parametrize("spec, rho", [
    (EnergySpec(EnergyKind.EXTENDED_BLASCHKE, lam=0.3), 4.0),
    (EnergySpec(EnergyKind.EXPONENTIAL, lam=0.2), 4.0),
    (EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=3.0), 4.0),
    (EnergySpec(EnergyKind.ASTIGMATISM, lam=0.9), 4.0),
    (EnergySpec(EnergyKind.Q_ELASTIC, lam=0.5, q=1.0 / 3.0), 4.0),
    (EnergySpec(EnergyKind.BENDING), 4.0),
])
def test_catalog_constant_on_generated_curvatures(spec, rho):
    kappa = np.linspace(1.5, 3.0, 9)
    p, dp, _, _ = spec.evaluate(kappa)
    kappa1 = -kappa
    kappa2 = kappa1 + p / dp
    _, values, expected = catalog_constant(spec, rho, kappa1, kappa2)
    assert np.allclose(values, expected, rtol=1e-12, atol=1e-12)


def test_mapping_round_trip():
    spec = EnergySpec(EnergyKind.Q_ELASTIC, lam=0.5, q=1.0 / 3.0, scale=2.0)
    assert spec_from_mapping(spec.to_mapping()) == spec
    assert spec_from_text(spec.to_text()) == spec


def test_spec_from_text_accepts_energy_alias_and_comments():
    spec = spec_from_text("energy = total_curvature_type  # signed\nlambda = 3\nepsilon = 1\n")
    assert spec == EnergySpec(EnergyKind.TOTAL_CURVATURE_TYPE, lam=3.0, epsilon=1)


def test_unknown_kind():
    with pytest.raises(ParameterError):
        spec_from_mapping({'kind': 'willmore'})
