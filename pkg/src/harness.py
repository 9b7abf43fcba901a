"""
Estimate Probes
===============

Scale-invariant ratio diagnostics for the a-priori estimates of the
Dirichlet problem, evaluated on solved fields and across grid ladders:

- boundary ratio   sup_∂M Δu / (1 + sup_M |∇u|²)
- global ratio     sup_M |∂∂̄u| / (1 + sup_M |∇u|² + sup_∂M |∂∂̄u|)
- admissibility margin per node
- the sampled concavity gain ε̂ for normals separated by β
- observed convergence order against a known continuous solution

A constant C cannot be certified numerically; what can be observed is the
absence of blow-up. A ladder is declared bounded when the ratio on the
finest grid is at most 1.1 times the ratio on the middle grid.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from .dirichlet import (
    DEFAULT_SETTINGS,
    DirichletProblem,
    SolveReport,
    SolverSettings,
    solve,
    solve_degenerate,
)
from .errors import DomainError
from .prodgrid import (
    BoundaryField,
    HermitianField,
    ProductGrid,
    ScalarField,
    build_grid,
    complex_hessian,
    eigenvalues_rel,
    laplacian_and_gradient,
)
from .reports import ConvergenceRow, ConvergenceStudy, GuanProbeResult, LadderRow, ProbeVerdict
from .symcone import OperatorSpec, as_eigenvector, f_eval, f_grad, normal_vector, sample_cone_points

logger = logging.getLogger(__name__)

PLATEAU_FACTOR = 1.1
PLATEAU_ABS = 1e-12
GUAN_SPREAD = 2.0


# ============================================================================
# RATIOS
# ============================================================================

def boundary_estimate_ratio(u: ScalarField, grid: ProductGrid, omega: HermitianField) -> float:
    """sup_∂M Δu / (1 + sup_M |∇u|²), Δu on ∂M taken from the first interior layer."""
    lap, grad = laplacian_and_gradient(u, grid, omega)
    sup_boundary_lap = float(np.max(lap.values[grid.boundary_mask]))
    return sup_boundary_lap / (1.0 + float(np.max(grad.values)) ** 2)


def hessian_norm_field(u: ScalarField, grid: ProductGrid, omega: HermitianField) -> ScalarField:
    """Spectral norm of ∂∂̄u relative to ω at every node."""
    lam = eigenvalues_rel(complex_hessian(u, grid), omega)
    return ScalarField(grid, np.max(np.abs(lam), axis=-1))


def global_second_ratio(u: ScalarField, grid: ProductGrid, omega: HermitianField) -> float:
    """sup_M|∂∂̄u| / (1 + sup_M|∇u|² + sup_∂M|∂∂̄u|)."""
    norm = hessian_norm_field(u, grid, omega).values
    _, grad = laplacian_and_gradient(u, grid, omega)
    denominator = 1.0 + float(np.max(grad.values)) ** 2 + float(np.max(norm[grid.boundary_mask]))
    return float(np.max(norm)) / denominator


def admissibility_margin_field(u: ScalarField, prob: DirichletProblem) -> ScalarField:
    """
    Per-node margin of λ(𝔤[u]): min_j σ_j/binom(n, j) on Γ_k, min_i λ_i on Γ_n.
    Boundary nodes carry the interior-limit value.
    """
    g = complex_hessian(u, prob.grid) + prob.chi
    lam = eigenvalues_rel(g, prob.omega)
    return ScalarField(prob.grid, prob.op.cone.margin(lam, normalized=True))


# ============================================================================
# CONCAVITY GAIN
# ============================================================================

def guan_slack(op: OperatorSpec, lam: ArrayLike, mu: ArrayLike) -> Tuple[float, float]:
    """
    For one pair: (Σf_i(λ)(μ_i − λ_i) − f(μ) + f(λ), that slack / (1 + Σf_i(λ))).
    """
    lam = as_eigenvector(lam, op.n)
    grad = f_grad(op, lam)
    slack = float(np.sum(grad * (np.asarray(mu, dtype=float) - lam)) - f_eval(op, mu) + f_eval(op, lam))
    return slack, slack / (1.0 + float(np.sum(grad)))


def guan_inequality_probe(op: OperatorSpec, mu: ArrayLike, beta: float, samples: int,
                          seed: int = 0) -> GuanProbeResult:
    """
    ε̂ = min over sampled λ ∈ Γ with |ν_μ − ν_λ| ≥ β of
    [Σf_i(λ)(μ_i − λ_i) − f(μ) + f(λ)] / (1 + Σf_i(λ)).

    ``inconclusive`` is set when no sample meets the separation condition.
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    mu = as_eigenvector(mu, op.n)
    nu_mu = normal_vector(op, mu)
    f_mu = f_eval(op, mu)
    rng = np.random.default_rng(seed)
    lam = sample_cone_points(op.cone, rng, samples, spread=GUAN_SPREAD)
    f_lam, grad = op.value_and_gradient(lam)
    nu_lam = grad / np.linalg.norm(grad, axis=-1, keepdims=True)
    separated = np.linalg.norm(nu_lam - nu_mu, axis=-1) >= beta
    result = GuanProbeResult(operator=op.label, beta=beta, samples=samples,
                             qualifying=int(np.count_nonzero(separated)))
    if result.qualifying == 0:
        result.inconclusive = True
        logger.warning(f"GUAN_PROBE: {op.label} β={beta} no sample separated from ν_μ")
        return result
    slack = np.sum(grad * (mu - lam), axis=-1) - f_mu + f_lam
    ratio = slack / (1.0 + np.sum(grad, axis=-1))
    result.epsilon_hat = float(np.min(ratio[separated]))
    logger.debug(f"GUAN_PROBE: {op.label} β={beta} ε̂={result.epsilon_hat:.6g} over {result.qualifying}")
    return result


# ============================================================================
# PROBLEM FAMILIES AND LADDERS
# ============================================================================

@dataclass
class ProblemInstance:
    """A problem plus how to solve it and what it should converge to."""
    family: str
    problem: DirichletProblem
    reference: Optional[ScalarField] = None
    eps_schedule: Optional[Sequence[float]] = None


def manufactured_field(grid: ProductGrid, amplitude: float = 0.1) -> ScalarField:
    """u* = a·(cos 2πx₁ + cos 2πθ + s²)."""
    return ScalarField.from_function(
        grid, lambda c: amplitude * (np.cos(2 * np.pi * c["x1"]) + np.cos(2 * np.pi * c["theta"]) + c["s"] ** 2))


def manufactured_problem(op: OperatorSpec, grid: ProductGrid, amplitude: float = 0.1,
                         chi: Optional[HermitianField] = None,
                         omega: Optional[HermitianField] = None,
                         u_star: Optional[ScalarField] = None) -> ProblemInstance:
    """
    ψ* := the discrete F(𝔤[u*]) and φ := u*|∂ on the same grid, so u* is the
    exact discrete solution.
    """
    chi = HermitianField.identity(grid.n) if chi is None else chi
    omega = HermitianField.identity(grid.n) if omega is None else omega
    u_star = manufactured_field(grid, amplitude) if u_star is None else u_star
    lam = eigenvalues_rel(complex_hessian(u_star, grid) + chi, omega)
    if not np.all(op.cone.contains(lam)):
        raise DomainError(f"manufactured u* with amplitude {amplitude} is not admissible on {grid.shape}")
    psi = ScalarField(grid, op.value(lam))
    prob = DirichletProblem(op, grid, chi, omega, psi, u_star.boundary())
    return ProblemInstance(family=f"manufactured_{op.label}_a{amplitude:g}", problem=prob, reference=u_star)


def analytic_profile_problem(op: OperatorSpec, grid: ProductGrid, amplitude: float = 0.1) -> ProblemInstance:
    """
    u* = a·sin(πs) with χ = ω = I and the continuous right-hand side
    ψ(s) = f(1, …, 1, 1 − aπ²/4·sin(πs)).

    u* solves the continuous equation only, so the discrete solution carries
    the truncation error of the scheme.
    """
    s = grid.coordinates["s"]
    lam = np.ones(grid.shape + (grid.n,))
    lam[..., -1] = 1.0 - 0.25 * amplitude * np.pi ** 2 * np.sin(np.pi * s)
    if op.n != grid.n or not np.all(op.cone.contains(lam)):
        raise DomainError(f"analytic profile with amplitude {amplitude} is not admissible for {op.label}")
    identity = HermitianField.identity(grid.n)
    u_star = ScalarField(grid, amplitude * np.sin(np.pi * s))
    prob = DirichletProblem(op, grid, identity, identity, ScalarField(grid, op.value(lam)), u_star.boundary())
    return ProblemInstance(family=f"analytic_{op.label}_a{amplitude:g}", problem=prob, reference=u_star)


def geodesic_problem(grid: ProductGrid, c: float = 1.0,
                     eps_schedule: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)) -> ProblemInstance:
    """
    σ_2^{1/2} with χ = π₁*ω_X, ψ ≡ 0 and φ = c·s: the weak solution is the
    affine geodesic c·s between the endpoint potentials 0 and c.
    """
    if grid.n != 2:
        raise DomainError(f"geodesic family is set up for n=2, got n={grid.n}")
    op = OperatorSpec.sigma_k_root(2, 2)
    chi = HermitianField.constant(np.diag([1.0, 0.0]))
    omega = HermitianField.identity(2)
    psi = ScalarField.constant(grid, 0.0)
    phi = BoundaryField.constant(grid, 0.0, c)
    reference = ScalarField(grid, c * grid.coordinates["s"])
    prob = DirichletProblem(op, grid, chi, omega, psi, phi)
    return ProblemInstance(family=f"geodesic_c{c:g}", problem=prob, reference=reference,
                           eps_schedule=tuple(eps_schedule))


def solve_instance(instance: ProblemInstance, margin_target: float = 0.1,
                   settings: SolverSettings = DEFAULT_SETTINGS) -> SolveReport:
    if instance.eps_schedule:
        report, _ = solve_degenerate(instance.problem, instance.eps_schedule, settings, instance.reference)
    else:
        report, _ = solve(instance.problem, margin_target, settings)
    return report


def ladder_grid(base: ProductGrid, resolution: int, refine_all: bool = False) -> ProductGrid:
    """Refine s only (default) or every direction to ``resolution`` nodes."""
    if refine_all:
        return build_grid(base.p, resolution, resolution, resolution)
    return build_grid(base.p, base.torus_res, resolution, base.theta_res)


def plateau(values: Sequence[float]) -> bool:
    """Finest ≤ 1.1 × middle (negative middle values count as zero)."""
    if len(values) < 2:
        return True
    middle, finest = values[-2], values[-1]
    return finest <= PLATEAU_FACTOR * max(middle, 0.0) + PLATEAU_ABS


def _check_ladder(ladder: Sequence[int]):
    if list(ladder) != sorted(set(ladder)):
        raise DomainError(f"ladder must be strictly increasing, got {list(ladder)}")


def run_ladder(builder: Callable[[ProductGrid], ProblemInstance], base: ProductGrid,
               ladder: Sequence[int], refine_all: bool = False, margin_target: float = 0.1,
               settings: SolverSettings = DEFAULT_SETTINGS) -> ProbeVerdict:
    """Solve one family on each ladder grid and tabulate the estimate ratios."""
    _check_ladder(ladder)
    rows: List[LadderRow] = []
    family = ""
    for resolution in ladder:
        grid = ladder_grid(base, resolution, refine_all)
        instance = builder(grid)
        family = instance.family
        report = solve_instance(instance, margin_target, settings)
        omega = instance.problem.omega
        row = LadderRow(
            resolution=resolution,
            ratio_boundary=boundary_estimate_ratio(report.u, grid, omega),
            ratio_global=global_second_ratio(report.u, grid, omega),
            margin_min=float(np.min(admissibility_margin_field(report.u, instance.problem).values)),
            residual_sup=report.residual_sup,
        )
        rows.append(row)
        logger.info(f"LADDER: {family} res={resolution} boundary={row.ratio_boundary:.6g} "
                    f"global={row.ratio_global:.6g}")
    return ProbeVerdict(
        family=family,
        ladder=list(ladder),
        rows=rows,
        bounded_boundary=plateau([row.ratio_boundary for row in rows]),
        bounded_global=plateau([row.ratio_global for row in rows]),
    )


def probe_rows(verdict: ProbeVerdict) -> List[Dict[str, float]]:
    return [{"family": verdict.family, **row.model_dump()} for row in verdict.rows]


def mesh_width(grid: ProductGrid) -> float:
    """Node spacing in s, the direction every ladder refines."""
    return 1.0 / (grid.s_res - 1)


def convergence_study(builder: Callable[[ProductGrid], ProblemInstance], base: ProductGrid,
                      ladder: Sequence[int], refine_all: bool = False, margin_target: float = 0.1,
                      settings: SolverSettings = DEFAULT_SETTINGS) -> ConvergenceStudy:
    """
    Solve one family with a known continuous solution on each ladder grid.

    The observed order between neighbouring grids is
    log(err_coarse/err_fine) / log(h_coarse/h_fine), i.e. log2 of the error
    ratio when h halves.
    """
    _check_ladder(ladder)
    rows: List[ConvergenceRow] = []
    family = ""
    for resolution in ladder:
        grid = ladder_grid(base, resolution, refine_all)
        instance = builder(grid)
        if instance.reference is None:
            raise DomainError(f"{instance.family} has no reference solution to converge to")
        family = instance.family
        report = solve_instance(instance, margin_target, settings)
        row = ConvergenceRow(
            resolution=resolution,
            mesh_width=mesh_width(grid),
            error=(report.u - instance.reference).sup_norm(),
            residual_sup=report.residual_sup,
        )
        if rows and rows[-1].error > 0.0 and row.error > 0.0:
            row.order = math.log(rows[-1].error / row.error) / math.log(rows[-1].mesh_width / row.mesh_width)
        rows.append(row)
        logger.info(f"CONVERGENCE: {family} res={resolution} error={row.error:.3e} order={row.order}")
    return ConvergenceStudy(family=family, ladder=list(ladder), rows=rows)
