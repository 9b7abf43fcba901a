import math

import numpy as np
import pytest

from src.errors import DomainError, OutsideConeError, RangeError, SamplingError
from src.symcone import (
    STRUCTURE_TABLE,
    ConeSpec,
    OperatorFamily,
    OperatorSpec,
    concavity_midpoint_check,
    cone_contains,
    diagonal_level_point,
    elementary_symmetric,
    f_eval,
    f_grad,
    gamma_infinity_contains,
    gamma_infinity_witness,
    gradient_fd_error,
    normal_vector,
    run_cone_suite,
    sample_cone_points,
    symmetry_error,
    verify_growth_criteria,
)


@pytest.mark.parametrize(
    "lam, k, expected",
    [
        ((2, 3, 4), 1, 9.0),
        ((1, 2, 3), 3, 6.0),
        ((-0.1, 1, 1), 2, 0.8),
        ((5, 7), 0, 1.0),
    ],
)
def test_elementary_symmetric_examples(lam, k, expected):
    assert elementary_symmetric(lam, k) == pytest.approx(expected, abs=1e-14)


def test_elementary_symmetric_batches_along_last_axis():
    values = elementary_symmetric(np.array([[1.0, 2.0, 3.0], [1.0, 1.0, 1.0]]), 2)
    np.testing.assert_allclose(values, [11.0, 3.0])


@pytest.mark.parametrize("k", [-1, 4])
def test_elementary_symmetric_rejects_k_out_of_range(k):
    with pytest.raises(DomainError):
        elementary_symmetric((1.0, 2.0, 3.0), k)


def test_eigenvector_validation():
    with pytest.raises(DomainError):
        elementary_symmetric((1.0,), 1)
    with pytest.raises(DomainError):
        elementary_symmetric((1.0, math.nan), 1)


@pytest.mark.parametrize(
    "cone, lam, expected",
    [
        (ConeSpec.gamma(2, 2), (1, 1), True),
        (ConeSpec.gamma(3, 2), (-0.1, 1, 1), True),
        (ConeSpec.gamma(3, 3), (-0.1, 1, 1), False),
        (ConeSpec.positive(3), (-0.1, 1, 1), False),
        (ConeSpec.gamma(3, 1), (-0.1, 1, 1), True),
    ],
)
def test_cone_contains_examples(cone, lam, expected):
    assert cone_contains(cone, lam) is expected


def test_cone_contains_rejects_dimension_mismatch():
    with pytest.raises(DomainError):
        cone_contains(ConeSpec.gamma(3, 2), (1.0, 1.0))


def test_cone_margin_normalized():
    cone = ConeSpec.gamma(3, 2)
    assert cone.margin((1.0, 1.0, 1.0), normalized=True) == pytest.approx(1.0)
    assert cone.margin((1.0, 1.0, 1.0)) == pytest.approx(3.0)
    assert ConeSpec.positive(2).margin((0.5, 2.0)) == pytest.approx(0.5)


def test_sampler_lands_in_cone(rng):
    cone = ConeSpec.gamma(4, 2)
    points = sample_cone_points(cone, rng, 500)
    assert points.shape == (500, 4)
    assert np.all(cone.contains(points))


def test_sampler_gives_up(rng):
    with pytest.raises(SamplingError):
        sample_cone_points(ConeSpec.positive(8), rng, 10, spread=1e6, max_rounds=1)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="log_ma", n=1),
        dict(family="log_ma", n=2, k=2),
        dict(family="sigma_k_root", n=3, k=5),
        dict(family="sigma_k_root", n=3, k=0),
        dict(family="hessian_quotient", n=3, k=2, l=2),
    ],
)
def test_operator_spec_rejects_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        OperatorSpec(**kwargs)


def test_f_eval_and_grad_examples():
    op = OperatorSpec.log_ma(3)
    assert f_eval(op, np.ones(3)) == 0.0
    np.testing.assert_allclose(f_grad(op, np.ones(3)), np.ones(3))
    assert f_eval(OperatorSpec.sigma_k_root(3, 2), (1, 1, 1)) == pytest.approx(math.sqrt(3))
    op2 = OperatorSpec.log_ma(2)
    assert f_eval(op2, (2, 8)) == pytest.approx(math.log(16))
    np.testing.assert_allclose(f_grad(op2, (2, 8)), [0.5, 0.125])


def test_quotient_value_on_diagonal():
    op = OperatorSpec.hessian_quotient(3, 2, 1)
    assert f_eval(op, (2.0, 2.0, 2.0)) == pytest.approx(2.0)


def test_f_eval_outside_cone():
    with pytest.raises(OutsideConeError):
        f_eval(OperatorSpec.log_ma(2), (1.0, -1.0))
    with pytest.raises(OutsideConeError):
        f_grad(OperatorSpec.sigma_k_root(3, 3), (-0.1, 1.0, 1.0))


@pytest.mark.parametrize(
    "op, lam, expected",
    [
        (OperatorSpec.log_ma(4), np.ones(4), np.full(4, 0.5)),
        (OperatorSpec.log_ma(2), (1, 2), (2 / math.sqrt(5), 1 / math.sqrt(5))),
        (OperatorSpec.sigma_k_root(3, 2), (1, 1, 1), np.full(3, 1 / math.sqrt(3))),
    ],
)
def test_normal_vector_examples(op, lam, expected):
    np.testing.assert_allclose(normal_vector(op, lam), expected, atol=1e-15)


def test_concavity_midpoint_examples(rng):
    op = OperatorSpec.log_ma(2)
    assert concavity_midpoint_check(op, (1, 4), (1, 4)) == pytest.approx(0.0, abs=1e-15)
    midpoint_gap = math.log(6.25) - math.log(4.0)
    assert concavity_midpoint_check(op, (1, 4), (4, 1)) == pytest.approx(midpoint_gap)
    sig = OperatorSpec.sigma_k_root(3, 2)
    lam, mu = sample_cone_points(sig.cone, rng, 2)
    assert concavity_midpoint_check(sig, lam, mu) >= -1e-12


OPERATORS = [
    OperatorSpec.log_ma(2),
    OperatorSpec.log_ma(3),
    OperatorSpec.sigma_k_root(2, 1),
    OperatorSpec.sigma_k_root(3, 2),
    OperatorSpec.sigma_k_root(4, 3),
    OperatorSpec.sigma_k_root(4, 4),
    OperatorSpec.hessian_quotient(3, 2, 1),
]


@pytest.mark.parametrize("op", OPERATORS, ids=lambda op: op.label)
def test_growth_criteria_have_no_violations(op):
    report = verify_growth_criteria(op, samples=2000, seed=11)
    assert report.passed, report.slacks
    assert report.slacks["sum_fi_mu"] > 0.0
    assert report.slacks["monotone"] > 0.0


@pytest.mark.parametrize("op", OPERATORS, ids=lambda op: op.label)
def test_gradient_is_positive_and_matches_differences(op, rng):
    lam = sample_cone_points(op.cone, rng, 200, spread=0.2)
    assert np.all(op.gradient(lam) > 0.0)
    assert gradient_fd_error(op, lam) < 1e-6


@pytest.mark.parametrize("op", OPERATORS, ids=lambda op: op.label)
def test_operators_are_symmetric(op, rng):
    lam = sample_cone_points(op.cone, rng, 100)
    assert symmetry_error(op, lam, rng) < 1e-12


def test_growth_criteria_example_pairs():
    op = OperatorSpec.sigma_k_root(3, 2)
    assert f_eval(op, (3, 3, 3)) == pytest.approx(3 * math.sqrt(3))
    assert f_eval(op, (3, 3, 3)) > f_eval(op, (1, 1, 1))
    assert float(np.sum(f_grad(OperatorSpec.log_ma(3), np.ones(3)) * np.ones(3))) == pytest.approx(3.0)


def test_growth_criteria_rejects_zero_samples():
    with pytest.raises(DomainError):
        verify_growth_criteria(OperatorSpec.log_ma(2), samples=0, seed=0)


@pytest.mark.parametrize(
    "op, sigma, expected",
    [
        (OperatorSpec.log_ma(2), 0.0, 1.0),
        (OperatorSpec.sigma_k_root(3, 3), 2.0, 2.0),
        (OperatorSpec.hessian_quotient(3, 2, 1), 1.0, 1.0),
    ],
)
def test_diagonal_level_point_examples(op, sigma, expected):
    point = diagonal_level_point(op, sigma)
    assert point.c_sigma == pytest.approx(expected, rel=1e-12)
    assert point.residual < 1e-12


def test_diagonal_level_point_is_monotone():
    op = OperatorSpec.sigma_k_root(3, 2)
    assert diagonal_level_point(op, 1.0).c_sigma < diagonal_level_point(op, 2.0).c_sigma


@pytest.mark.parametrize("sigma", [0.0, -1.0, math.inf])
def test_diagonal_level_point_rejects_unattainable_levels(sigma):
    with pytest.raises(RangeError):
        diagonal_level_point(OperatorSpec.sigma_k_root(3, 2), sigma)


def test_gamma_infinity_examples():
    positive = OperatorSpec.log_ma(3)
    assert gamma_infinity_contains(positive, (1.0, 1.0))
    assert not gamma_infinity_contains(positive, (-1.0, 1.0))
    gamma2 = OperatorSpec.sigma_k_root(3, 2)
    assert gamma_infinity_contains(gamma2, (-0.1, 1.0))
    assert cone_contains(gamma2.cone, (-0.1, 1.0, 10.0))
    assert gamma_infinity_witness(gamma2, (-0.1, 1.0)) <= 1.0


def test_gamma_infinity_rejects_wrong_length():
    with pytest.raises(DomainError):
        gamma_infinity_witness(OperatorSpec.log_ma(3), (1.0, 1.0, 1.0))


def test_structure_table():
    assert STRUCTURE_TABLE[OperatorFamily.HESSIAN_QUOTIENT].unbounded_last_direction is False
    assert STRUCTURE_TABLE[OperatorFamily.LOG_MA].continuous_to_boundary is False
    assert OperatorSpec.sigma_k_root(3, 2).structure.continuous_to_boundary
    assert OperatorSpec.log_ma(2).sup_boundary_f == -math.inf
    assert OperatorSpec.sigma_k_root(2, 2).sup_boundary_f == 0.0


def test_cone_suite_rows():
    rows = run_cone_suite([OperatorSpec.log_ma(2), OperatorSpec.hessian_quotient(3, 2, 1)], samples=300, seed=3)
    assert [row["operator"] for row in rows] == ["log_ma_n2", "hessian_quotient_2_1_n3"]
    for row in rows:
        assert row["violations"] == 0
        assert row["slack_concavity"] >= -1e-12
        assert row["level_monotone"]
        assert row["grad_fd_error"] < 1e-6


def test_cone_suite_is_deterministic():
    ops = [OperatorSpec.sigma_k_root(3, 2)]
    assert run_cone_suite(ops, samples=200, seed=5) == run_cone_suite(ops, samples=200, seed=5)
