import numpy as np
import pytest

from src.errors import DomainError
from src.harness import (
    admissibility_margin_field,
    analytic_profile_problem,
    boundary_estimate_ratio,
    convergence_study,
    geodesic_problem,
    global_second_ratio,
    guan_inequality_probe,
    guan_slack,
    ladder_grid,
    manufactured_problem,
    mesh_width,
    plateau,
    probe_rows,
    run_ladder,
    solve_instance,
)
from src.prodgrid import HermitianField, ScalarField, build_grid
from src.symcone import OperatorSpec


class TestRatios:
    def test_zero_field(self, small_grid, identity2):
        u = ScalarField.constant(small_grid, 0.0)
        assert boundary_estimate_ratio(u, small_grid, identity2) == 0.0
        assert global_second_ratio(u, small_grid, identity2) == 0.0

    def test_affine_in_s_has_no_second_derivatives(self, small_grid, identity2):
        u = ScalarField.from_expression(small_grid, "3*s")
        assert boundary_estimate_ratio(u, small_grid, identity2) == pytest.approx(0.0, abs=1e-10)
        assert global_second_ratio(u, small_grid, identity2) == pytest.approx(0.0, abs=1e-10)

    def test_ratios_ignore_constants(self, small_grid, identity2):
        u = manufactured_problem(OperatorSpec.log_ma(2), small_grid).reference
        shifted = u + 5.0
        assert boundary_estimate_ratio(shifted, small_grid, identity2) == pytest.approx(
            boundary_estimate_ratio(u, small_grid, identity2), rel=1e-12)
        assert global_second_ratio(shifted, small_grid, identity2) == pytest.approx(
            global_second_ratio(u, small_grid, identity2), rel=1e-12)

    def test_margin_field_positive_at_manufactured_solution(self, small_grid):
        instance = manufactured_problem(OperatorSpec.sigma_k_root(2, 2), small_grid)
        margin = admissibility_margin_field(instance.reference, instance.problem)
        assert margin.values.shape == small_grid.shape
        assert np.all(margin.values > 0.0)


class TestConcavityGain:
    def test_slack_closed_form(self):
        slack, ratio = guan_slack(OperatorSpec.log_ma(2), [4.0, 0.25], [1.0, 1.0])
        assert slack == pytest.approx(2.25)
        assert ratio == pytest.approx(2.25 / 5.25)

    @pytest.mark.parametrize("op", [
        OperatorSpec.log_ma(2),
        OperatorSpec.sigma_k_root(3, 2),
        OperatorSpec.hessian_quotient(3, 2, 1),
    ], ids=lambda op: op.label)
    @pytest.mark.parametrize("beta", [0.1, 0.5])
    def test_gain_is_positive(self, op, beta):
        result = guan_inequality_probe(op, np.ones(op.n), beta, samples=2000, seed=3)
        assert not result.inconclusive
        assert result.qualifying > 0
        assert result.epsilon_hat > 0.0

    def test_probe_is_deterministic(self):
        op = OperatorSpec.sigma_k_root(3, 2)
        first = guan_inequality_probe(op, np.ones(3), 0.1, samples=500, seed=11)
        second = guan_inequality_probe(op, np.ones(3), 0.1, samples=500, seed=11)
        assert first == second

    def test_linear_operator_is_inconclusive(self):
        # σ_1 has a constant normal, so no sample is ever separated from ν_μ
        result = guan_inequality_probe(OperatorSpec.sigma_k_root(3, 1), np.ones(3), 0.1, samples=200)
        assert result.inconclusive
        assert result.epsilon_hat is None

    def test_beta_must_be_positive(self):
        with pytest.raises(DomainError):
            guan_inequality_probe(OperatorSpec.log_ma(2), np.ones(2), 0.0, samples=10)


class TestFamilies:
    def test_manufactured_rejects_inadmissible_amplitude(self, small_grid):
        with pytest.raises(DomainError):
            manufactured_problem(OperatorSpec.log_ma(2), small_grid, amplitude=2.0)

    def test_manufactured_boundary_data(self, small_grid):
        instance = manufactured_problem(OperatorSpec.log_ma(2), small_grid)
        np.testing.assert_array_equal(instance.problem.phi.values, instance.reference.boundary().values)
        assert instance.eps_schedule is None

    def test_geodesic_requires_two_dimensions(self):
        with pytest.raises(DomainError):
            geodesic_problem(build_grid(p=2, torus_res=4, s_res=4, theta_res=4))

    def test_geodesic_instance(self, small_grid):
        instance = geodesic_problem(small_grid, c=2.0, eps_schedule=(1e-1, 1e-2))
        assert instance.problem.delta == 0.0
        report = solve_instance(instance)
        assert report.epsilon == 1e-2
        assert (report.u - instance.reference).sup_norm() < 1e-3


class TestLadder:
    def test_plateau(self):
        assert plateau([1.0, 2.0, 2.1])
        assert not plateau([1.0, 2.0, 3.0])
        assert plateau([5.0])
        assert plateau([-1.0, 0.0])
        assert not plateau([1.0, -1.0, 0.5])

    def test_ladder_grid(self, small_grid):
        assert ladder_grid(small_grid, 12).shape == (4, 4, 12, 4)
        assert ladder_grid(small_grid, 6, refine_all=True).shape == (6, 6, 6, 6)

    def test_run_ladder(self, small_grid):
        verdict = run_ladder(lambda g: manufactured_problem(OperatorSpec.log_ma(2), g), small_grid, [4, 6, 8])
        assert verdict.ladder == [4, 6, 8]
        assert [row.resolution for row in verdict.rows] == [4, 6, 8]
        for row in verdict.rows:
            assert row.residual_sup < 1e-9
            assert row.margin_min > 0.0
            assert np.isfinite(row.ratio_boundary) and np.isfinite(row.ratio_global)
        rows = probe_rows(verdict)
        assert len(rows) == 3 and rows[0]["family"] == verdict.family

    def test_ladder_must_increase(self, small_grid):
        with pytest.raises(DomainError):
            run_ladder(lambda g: manufactured_problem(OperatorSpec.log_ma(2), g), small_grid, [8, 4])

    def test_manufactured_ladder_is_bounded(self, small_grid):
        verdict = run_ladder(lambda g: manufactured_problem(OperatorSpec.log_ma(2), g), small_grid, [4, 8, 16])
        assert verdict.bounded_boundary and verdict.bounded_global
        assert verdict.bounded


class TestConvergence:
    def test_analytic_profile_is_not_a_discrete_solution(self, small_grid):
        instance = analytic_profile_problem(OperatorSpec.log_ma(2), small_grid)
        report = solve_instance(instance)
        assert report.residual_sup < 1e-9
        assert (report.u - instance.reference).sup_norm() > 1e-6
        np.testing.assert_allclose(instance.problem.phi.values, 0.0, atol=1e-15)

    def test_analytic_profile_rejects_large_amplitude(self, small_grid):
        with pytest.raises(DomainError):
            analytic_profile_problem(OperatorSpec.log_ma(2), small_grid, amplitude=1.0)
        with pytest.raises(DomainError):
            analytic_profile_problem(OperatorSpec.log_ma(3), small_grid)

    @pytest.mark.parametrize("op", [OperatorSpec.log_ma(2), OperatorSpec.sigma_k_root(2, 2)],
                             ids=lambda op: op.label)
    def test_second_order_on_s_ladder(self, small_grid, op):
        study = convergence_study(lambda g: analytic_profile_problem(op, g), small_grid, [16, 32])
        assert [row.resolution for row in study.rows] == [16, 32]
        assert study.rows[0].order is None
        assert study.rows[1].mesh_width == pytest.approx(1 / 31)
        assert study.rows[1].error < study.rows[0].error
        assert study.min_order >= 1.8
        assert study.family.startswith("analytic_")

    def test_mesh_width_follows_s(self, small_grid):
        assert mesh_width(small_grid) == pytest.approx(1 / 7)

    def test_study_rejects_bad_ladder(self, small_grid):
        with pytest.raises(DomainError):
            convergence_study(lambda g: analytic_profile_problem(OperatorSpec.log_ma(2), g), small_grid, [8, 8])
