"""
Dirichlet Solvers
=================

Discrete solvers for F(𝔤[u]) = f(λ(χ + i∂∂̄u)) = ψ on the product grid with
u = φ on ∂M:

- Poisson construction of the strict subsolution u̲ = φ + t·π₂*h
- the linear supersolution Δǔ + tr_ω χ = 0
- damped Newton with an admissibility-preserving Armijo line search
- the continuity path F(𝔤[uᵗ]) = (1−t)F(𝔤[u̲]) + tψ
- degenerate right-hand sides through the lifted data ψ + ε

Every accepted Newton iterate keeps λ(𝔤[u]) strictly inside the cone at all
interior nodes. Boundary rows of every system are Dirichlet rows u = φ.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.sparse.linalg import spsolve

from .errors import (
    ContinuationStuck,
    DomainError,
    LabError,
    NoConvergence,
    NonAdmissibleStep,
    NoSubsolution,
    NumericalError,
    PreconditionError,
)
from .prodgrid import (
    BoundaryField,
    CylinderGrid,
    HermitianField,
    ProductGrid,
    ScalarField,
    boundary_normal_derivative,
    hessian_components,
    inverse_cholesky,
    inverse_metric,
    laplacian_and_gradient,
    laplacian_operator,
    pullback_cylinder,
    reduced_matrices,
)
from .reports import CauchyRow, CauchyTable, SolveSummary
from .symcone import OperatorSpec

logger = logging.getLogger(__name__)

TOL_NEWTON = 1e-9
MAX_NEWTON_ITERS = 200
ARMIJO_C = 1e-4
MIN_STEP = 2.0 ** -30
LINEAR_SOLVE_TOL = 1e-12
SUBSOLUTION_T_MAX = 2.0 ** 20
SUBSOLUTION_RATIO = 1.05
PATH_INITIAL_STEP = 0.25
PATH_GROW = 1.5
PATH_MIN_STEP = 1e-4


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and caps shared by Newton and the continuity path."""
    tol_newton: float = TOL_NEWTON
    max_newton_iters: int = MAX_NEWTON_ITERS
    armijo_c: float = ARMIJO_C
    min_step: float = MIN_STEP
    path_initial_step: float = PATH_INITIAL_STEP
    path_grow: float = PATH_GROW
    path_min_step: float = PATH_MIN_STEP
    subsolution_t_max: float = SUBSOLUTION_T_MAX

    def tolerances(self) -> dict:
        return {
            "tol_newton": self.tol_newton,
            "armijo_c": self.armijo_c,
            "min_step": self.min_step,
            "path_min_step": self.path_min_step,
            "linear_solve": LINEAR_SOLVE_TOL,
        }


DEFAULT_SETTINGS = SolverSettings()


# ============================================================================
# PROBLEM
# ============================================================================

@dataclass(frozen=True, eq=False)
class DirichletProblem:
    """F(𝔤[u]) = ψ in M, u = φ on ∂M, with 𝔤[u] = χ + i∂∂̄u and eigenvalues relative to ω."""

    op: OperatorSpec
    grid: ProductGrid
    chi: HermitianField
    omega: HermitianField
    psi: ScalarField
    phi: BoundaryField

    def __post_init__(self):
        n = self.grid.n
        if self.op.n != n or self.chi.n != n or self.omega.n != n:
            raise DomainError(f"dimension mismatch: grid n={n}, operator n={self.op.n}, "
                              f"χ {self.chi.n}×{self.chi.n}, ω {self.omega.n}×{self.omega.n}")
        if self.psi.grid != self.grid or self.phi.grid != self.grid:
            raise DomainError("ψ and φ must live on the problem grid")
        # raises GeometryError for an indefinite ω
        inverse_metric(self.omega)

    @property
    def delta(self) -> float:
        """inf ψ − sup_{∂Γ} f; positive exactly for nondegenerate problems."""
        return float(np.min(self.psi.values)) - self.op.sup_boundary_f

    def with_psi(self, psi: ScalarField) -> "DirichletProblem":
        return replace(self, psi=psi)

    def lifted(self, epsilon: float) -> "DirichletProblem":
        """Same problem with ψ + ε."""
        return self.with_psi(self.psi + epsilon)


@dataclass
class OperatorState:
    """f, Df and the spectral data of 𝔤[u] at the interior nodes."""
    values: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128]
    admissible: NDArray[np.bool_]

    @property
    def all_admissible(self) -> bool:
        return bool(np.all(self.admissible))


def _interior_metric(prob: DirichletProblem, u: ScalarField) -> NDArray[np.complex128]:
    g = HermitianField(hessian_components(u, prob.grid)[prob.grid.interior_mask]).matrices
    return g + prob.chi.matrices if prob.chi.is_constant else g + prob.chi.matrices[prob.grid.interior_mask]


def operator_state(prob: DirichletProblem, u: ScalarField) -> OperatorState:
    """Evaluate f(λ(𝔤[u])) at interior nodes; values are NaN where inadmissible."""
    reduced, _ = reduced_matrices(HermitianField(_interior_metric(prob, u)), prob.omega)
    w, q = np.linalg.eigh(reduced)
    admissible = prob.op.cone.contains(w)
    values = np.full(w.shape[:-1], np.nan)
    if np.any(admissible):
        values[admissible] = prob.op.value(w[admissible])
    return OperatorState(values=values, eigenvalues=w, eigenvectors=q, admissible=admissible)


def admissibility_margin(prob: DirichletProblem, state: OperatorState) -> float:
    """min_j σ_j(λ)/binom(n, j) for Γ_k, min_i λ_i for Γ_n, over interior nodes."""
    return float(np.min(prob.op.cone.margin(state.eigenvalues, normalized=True)))


def _interior_flat(grid: ProductGrid) -> NDArray[np.bool_]:
    return grid.interior_mask.reshape(-1)


def residual_vector(prob: DirichletProblem, u: ScalarField, target: NDArray[np.float64],
                    phi_ext: ScalarField, state: Optional[OperatorState] = None) -> NDArray[np.float64]:
    """F − target at interior nodes, u − φ at boundary nodes (flattened)."""
    state = operator_state(prob, u) if state is None else state
    interior = _interior_flat(prob.grid)
    r = u.flat - phi_ext.flat
    r[interior] = state.values - target.reshape(-1)[interior]
    return r


def linearized_operator(prob: DirichletProblem, state: OperatorState) -> sp.csr_matrix:
    """
    Jacobian of u ↦ F(𝔤[u]) with Dirichlet rows pinned.

    F′ = L^{-*} Q diag(f_i(λ)) Q* L^{-1} with ω = LL* and the eigen-
    decomposition L^{-1}𝔤L^{-*} = QΛQ*; symmetric f makes this well defined at
    repeated eigenvalues.
    """
    grid = prob.grid
    grad = prob.op.gradient(state.eigenvalues)
    inv_chol = inverse_cholesky(prob.omega)
    q = state.eigenvectors
    spectral = (q * grad[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))
    dual = np.conj(np.swapaxes(inv_chol, -1, -2)) @ spectral @ inv_chol
    coeffs = np.zeros(grid.shape + (grid.n, grid.n), dtype=complex)
    coeffs[grid.interior_mask] = np.swapaxes(dual, -1, -2)
    jac = grid.contraction_operator(coeffs)
    return sp.csr_matrix(jac + sp.diags(grid.boundary_mask.reshape(-1).astype(float)))


def residual_jacobian(prob: DirichletProblem, u: ScalarField, target: NDArray[np.float64],
                      phi_ext: Optional[ScalarField] = None) -> Tuple[NDArray[np.float64], sp.csr_matrix]:
    """Residual vector and sparse Jacobian at an admissible state."""
    phi_ext = extend_boundary_data(prob.grid, prob.phi) if phi_ext is None else phi_ext
    state = operator_state(prob, u)
    if not state.all_admissible:
        raise PreconditionError("Jacobian requested at an inadmissible state")
    return residual_vector(prob, u, target, phi_ext, state), linearized_operator(prob, state)


def _sparse_solve(matrix: sp.spmatrix, rhs: NDArray[np.float64], what: str) -> NDArray[np.float64]:
    """Direct solve with a normwise backward-error check."""
    try:
        x = spsolve(sp.csc_matrix(matrix), rhs)
    except RuntimeError as e:
        raise NumericalError(f"{what}: sparse factorization failed: {e}") from e
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"{what}: singular linear system")
    residual = np.max(np.abs(matrix @ x - rhs))
    scale = abs(matrix).sum(axis=1).max() * np.max(np.abs(x)) + np.max(np.abs(rhs))
    if residual > LINEAR_SOLVE_TOL * max(scale, np.finfo(float).tiny):
        raise NumericalError(f"{what}: linear residual {residual:.3e} above tolerance")
    return x


# ============================================================================
# BOUNDARY DATA, POISSON, BARRIERS
# ============================================================================

def extend_boundary_data(grid: ProductGrid, phi: BoundaryField) -> ScalarField:
    """φ extended linearly in s along each (X, θ)-line: (1−s)φ|_{s=0} + sφ|_{s=1}."""
    s = grid.coordinates["s"]
    lower = np.expand_dims(phi.lower, grid.s_axis)
    upper = np.expand_dims(phi.upper, grid.s_axis)
    return ScalarField(grid, (1.0 - s) * lower + s * upper)


def solve_poisson_S(cylinder: CylinderGrid, rhs: float) -> NDArray[np.float64]:
    """
    Solve ¼(h_ss + h_θθ) = rhs on the cylinder with h = 0 at s ∈ {0, 1}.

    Returns the cylinder array of shape (s_res, theta_res).
    """
    if not math.isfinite(rhs):
        raise DomainError(f"rhs must be finite, got {rhs}")
    mask = np.zeros(cylinder.shape, dtype=bool)
    mask[0, :] = mask[-1, :] = True
    boundary = mask.reshape(-1)
    matrix = cylinder.laplacian + sp.diags(boundary.astype(float))
    b = np.where(boundary, 0.0, rhs)
    h = _sparse_solve(matrix, b, "poisson").reshape(cylinder.shape)
    logger.debug(f"POISSON: rhs={rhs} min={h.min():.6g}")
    return h


@dataclass
class SubsolutionResult:
    """u̲ = φ_ext + t·π₂*h with min-node f(λ(𝔤[u̲])) − ψ = margin."""
    u_sub: ScalarField
    t_star: float
    margin: float
    h: Optional[ScalarField] = None
    normal_derivative_max: float = float("nan")


def _subsolution_margin(prob: DirichletProblem, u: ScalarField) -> Tuple[float, int]:
    """(min over interior nodes of f − ψ, flat index of the worst node); −inf if inadmissible."""
    state = operator_state(prob, u)
    psi = prob.psi.values[prob.grid.interior_mask]
    gap = np.where(state.admissible, state.values - psi, -np.inf)
    worst = int(np.argmin(gap))
    interior_index = np.flatnonzero(_interior_flat(prob.grid))[worst]
    return float(gap[worst]), int(interior_index)


def construct_subsolution(prob: DirichletProblem, margin_target: float,
                          settings: SolverSettings = DEFAULT_SETTINGS) -> SubsolutionResult:
    """
    Smallest t (within a factor 1.05) with min f(λ(𝔤[φ + t·h])) ≥ ψ + margin_target,
    where Δ_S h = 1, h = 0 on ∂S. Doubling search on t, then bisection.

    Raises:
        NoSubsolution: the cone condition fails at some node up to t_max
    """
    if not margin_target > 0.0:
        raise DomainError(f"margin_target must be positive, got {margin_target}")
    grid = prob.grid
    phi_ext = extend_boundary_data(grid, prob.phi)
    h = pullback_cylinder(solve_poisson_S(grid.cylinder(), 1.0), grid)

    def candidate(t: float) -> ScalarField:
        return phi_ext + t * h

    def good(t: float) -> bool:
        return _subsolution_margin(prob, candidate(t))[0] >= margin_target

    if good(0.0):
        t_star = 0.0
    else:
        hi = 1.0
        while not good(hi):
            hi *= 2.0
            if hi > settings.subsolution_t_max:
                margin, worst = _subsolution_margin(prob, candidate(settings.subsolution_t_max))
                node = grid.node_index(worst)
                raise NoSubsolution(
                    f"cone condition fails: margin {margin} at node {node} with t={settings.subsolution_t_max:g}",
                    worst_node=node, worst_margin=margin)
        lo = hi / 2.0 if hi > 1.0 else 0.0
        while hi > SUBSOLUTION_RATIO * lo and hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if good(mid):
                hi = mid
            else:
                lo = mid
        t_star = hi

    u_sub = candidate(t_star)
    margin, _ = _subsolution_margin(prob, u_sub)
    normal = boundary_normal_derivative(u_sub, grid)
    logger.info(f"SUBSOLUTION: t*={t_star:.6g} margin={margin:.6g}")
    return SubsolutionResult(u_sub=u_sub, t_star=t_star, margin=margin, h=h,
                             normal_derivative_max=float(np.max(normal.values)))


def solve_supersolution(prob: DirichletProblem) -> ScalarField:
    """Δǔ + tr_ω χ = 0 in M, ǔ = φ on ∂M (one sparse solve)."""
    grid = prob.grid
    inv = inverse_metric(prob.omega)
    trace = np.real(np.einsum("...ij,...ji->...", inv, prob.chi.matrices))
    trace = np.broadcast_to(trace, grid.shape).reshape(-1)
    boundary = grid.boundary_mask.reshape(-1)
    matrix = laplacian_operator(grid, prob.omega) + sp.diags(boundary.astype(float))
    phi_ext = extend_boundary_data(grid, prob.phi).flat
    rhs = np.where(boundary, phi_ext, -trace)
    return ScalarField.from_flat(grid, _sparse_solve(matrix, rhs, "supersolution"))


# ============================================================================
# NEWTON
# ============================================================================

@dataclass
class SolveReport:
    """Solution field plus continuation and Newton diagnostics."""
    u: ScalarField
    operator: str
    residual_sup: float
    newton_iters: List[int] = field(default_factory=list)
    t_path: List[float] = field(default_factory=list)
    admissibility_margin: float = float("nan")
    min_margin_along_path: float = float("nan")
    wall_ms: float = 0.0
    epsilon: Optional[float] = None

    @property
    def continuation_steps(self) -> int:
        return max(len(self.t_path) - 1, 0)

    def summary(self) -> SolveSummary:
        return SolveSummary(
            operator=self.operator,
            grid=self.u.grid.to_dict(),
            residual_sup=self.residual_sup,
            newton_iters=self.newton_iters,
            t_path=self.t_path,
            admissibility_margin=self.admissibility_margin,
            continuation_steps=self.continuation_steps,
            wall_ms=self.wall_ms,
            epsilon=self.epsilon,
        )


@dataclass
class _NewtonResult:
    u: ScalarField
    iterations: int
    residual_sup: float
    margin: float
    min_margin: float


def _newton(prob: DirichletProblem, u: ScalarField, target: NDArray[np.float64], phi_ext: ScalarField,
            settings: SolverSettings) -> _NewtonResult:
    state = operator_state(prob, u)
    if not state.all_admissible:
        bad = int(np.count_nonzero(~state.admissible))
        raise PreconditionError(f"initial iterate is inadmissible at {bad} interior nodes")
    r = residual_vector(prob, u, target, phi_ext, state)
    margin = admissibility_margin(prob, state)
    min_margin = margin

    for iteration in range(settings.max_newton_iters + 1):
        sup = float(np.max(np.abs(r)))
        if sup < settings.tol_newton:
            return _NewtonResult(u, iteration, sup, margin, min_margin)
        if iteration == settings.max_newton_iters:
            break

        delta = _sparse_solve(linearized_operator(prob, state), -r, "newton step")
        merit = 0.5 * float(r @ r)
        step = 1.0
        while True:
            trial = ScalarField.from_flat(prob.grid, u.flat + step * delta)
            trial_state = operator_state(prob, trial)
            if trial_state.all_admissible:
                trial_r = residual_vector(prob, trial, target, phi_ext, trial_state)
                if 0.5 * float(trial_r @ trial_r) <= (1.0 - 2.0 * settings.armijo_c * step) * merit:
                    break
            step *= 0.5
            if step < settings.min_step:
                raise NonAdmissibleStep(
                    f"line search underflow at iteration {iteration}: residual {sup:.3e}",
                    step=step, residual=sup)
        u, state, r = trial, trial_state, trial_r
        margin = admissibility_margin(prob, state)
        min_margin = min(min_margin, margin)
        logger.debug(f"NEWTON_ITER: {iteration + 1} step={step:g} residual={np.max(np.abs(r)):.3e} "
                     f"margin={margin:.3e}")

    sup = float(np.max(np.abs(r)))
    raise NoConvergence(f"Newton did not converge in {settings.max_newton_iters} iterations "
                        f"(residual {sup:.3e})", iterations=settings.max_newton_iters, residual=sup)


def newton_solve(prob: DirichletProblem, u_init: ScalarField,
                 settings: SolverSettings = DEFAULT_SETTINGS) -> SolveReport:
    """
    Damped Newton on f(λ(𝔤[u])) − ψ with admissible Armijo backtracking.

    Raises:
        PreconditionError: u_init inadmissible
        NonAdmissibleStep: backtracking fell below 2⁻³⁰
        NoConvergence: iteration cap reached
    """
    start = time.perf_counter()
    phi_ext = extend_boundary_data(prob.grid, prob.phi)
    result = _newton(prob, u_init, prob.psi.values, phi_ext, settings)
    logger.info(f"NEWTON_DONE: iterations={result.iterations} residual={result.residual_sup:.3e}")
    return SolveReport(
        u=result.u,
        operator=prob.op.label,
        residual_sup=result.residual_sup,
        newton_iters=[result.iterations],
        t_path=[1.0],
        admissibility_margin=result.margin,
        min_margin_along_path=result.min_margin,
        wall_ms=1000.0 * (time.perf_counter() - start),
    )


# ============================================================================
# CONTINUITY PATH
# ============================================================================

def _check_nondegenerate(prob: DirichletProblem):
    if not prob.delta > 0.0:
        raise PreconditionError(
            f"inf ψ = {np.min(prob.psi.values):.6g} does not exceed sup_∂Γ f = {prob.op.sup_boundary_f}")


def continuity_solve(prob: DirichletProblem, sub: SubsolutionResult,
                     settings: SolverSettings = DEFAULT_SETTINGS) -> SolveReport:
    """
    Follow F(𝔤[uᵗ]) = (1−t)F(𝔤[u̲]) + tψ from t = 0 (where u̲ is exact) to t = 1.

    The step starts at 0.25, grows by 1.5 after each converged Newton solve
    and halves after any NumericalError from the Newton solve.

    Raises:
        PreconditionError: inf ψ ≤ sup_{∂Γ} f, or u̲ inadmissible
        ContinuationStuck: the step fell below its minimum (carries the last good t)
    """
    _check_nondegenerate(prob)
    start = time.perf_counter()
    grid = prob.grid
    phi_ext = extend_boundary_data(grid, prob.phi)

    state = operator_state(prob, sub.u_sub)
    if not state.all_admissible:
        raise PreconditionError("subsolution is inadmissible")
    f_sub = np.zeros(grid.shape)
    f_sub[grid.interior_mask] = state.values
    psi = prob.psi.values

    def target(t: float) -> NDArray[np.float64]:
        return (1.0 - t) * f_sub + t * psi

    result = _newton(prob, sub.u_sub, target(0.0), phi_ext, settings)
    u = result.u
    t_path, iters = [0.0], [result.iterations]
    min_margin = result.min_margin
    t, step = 0.0, settings.path_initial_step
    while t < 1.0:
        t_next = min(1.0, t + step)
        try:
            result = _newton(prob, u, target(t_next), phi_ext, settings)
        except NumericalError as e:
            step *= 0.5
            logger.debug(f"CONTINUATION_RETRY: t={t:.6g} -> {t_next:.6g} failed ({e}); step={step:g}")
            if step < settings.path_min_step:
                raise ContinuationStuck(f"continuation stuck after t={t:.6g}", last_t=t) from e
            continue
        t, u = t_next, result.u
        t_path.append(t)
        iters.append(result.iterations)
        min_margin = min(min_margin, result.min_margin)
        step *= settings.path_grow
        logger.debug(f"CONTINUATION_STEP: t={t:.6g} iterations={result.iterations} "
                     f"residual={result.residual_sup:.3e}")

    logger.info(f"CONTINUATION_DONE: steps={len(t_path) - 1} residual={result.residual_sup:.3e}")
    return SolveReport(
        u=u,
        operator=prob.op.label,
        residual_sup=result.residual_sup,
        newton_iters=iters,
        t_path=t_path,
        admissibility_margin=result.margin,
        min_margin_along_path=min_margin,
        wall_ms=1000.0 * (time.perf_counter() - start),
    )


def solve(prob: DirichletProblem, margin_target: float = 0.1,
          settings: SolverSettings = DEFAULT_SETTINGS) -> Tuple[SolveReport, SubsolutionResult]:
    """Subsolution construction followed by the continuity path."""
    _check_nondegenerate(prob)
    sub = construct_subsolution(prob, margin_target, settings)
    return continuity_solve(prob, sub, settings), sub


# ============================================================================
# DEGENERATE EQUATIONS
# ============================================================================

def solve_degenerate(prob: DirichletProblem, eps_schedule: Sequence[float],
                     settings: SolverSettings = DEFAULT_SETTINGS,
                     reference: Optional[ScalarField] = None) -> Tuple[SolveReport, CauchyTable]:
    """
    Solve F(𝔤[u_ε]) = ψ + ε for each ε of a descending schedule. Each solution
    is a strict subsolution of the next lifted problem and starts its path.

    Returns the last report and the table of successive sup-norm differences
    (plus the distance to ``reference`` when one is given).
    """
    if not math.isfinite(prob.op.sup_boundary_f):
        raise PreconditionError(f"{prob.op.label} has sup_∂Γ f = -inf; degenerate data is not defined")
    eps = [float(e) for e in eps_schedule]
    if not eps or any(e <= 0.0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError(f"eps_schedule must be positive and strictly descending, got {eps}")
    if prob.delta < 0.0:
        raise PreconditionError(f"inf ψ is below sup_∂Γ f = {prob.op.sup_boundary_f}")

    table = CauchyTable()
    previous: Optional[SolveReport] = None
    report: Optional[SolveReport] = None
    for index, epsilon in enumerate(eps):
        lifted = prob.lifted(epsilon)
        try:
            if previous is None:
                sub = construct_subsolution(lifted, epsilon, settings)
            else:
                sub = SubsolutionResult(u_sub=previous.u, t_star=float("nan"), margin=eps[index - 1] - epsilon)
            report = continuity_solve(lifted, sub, settings)
        except LabError as e:
            e.epsilon = epsilon
            e.add_note(f"while solving the lifted problem with ε={epsilon:g}")
            raise
        report.epsilon = epsilon
        diff = None if previous is None else float(np.max(np.abs(report.u.values - previous.u.values)))
        table.rows.append(CauchyRow(
            eps=epsilon,
            sup_diff_to_prev=diff,
            admissibility_margin=report.admissibility_margin,
            residual_sup=report.residual_sup,
            sup_dev_reference=None if reference is None else (report.u - reference).sup_norm(),
        ))
        logger.info(f"DEGENERATE_STEP: ε={epsilon:g} diff={diff} margin={report.admissibility_margin:.3e}")
        previous = report
    if not table.monotone:
        logger.warning(f"CAUCHY_NOT_MONOTONE: {table.diffs}")
    return report, table


# ============================================================================
# COMPARISON AND SANDWICH
# ============================================================================

def comparison_check(u1: ScalarField, u2: ScalarField, phi1: BoundaryField, phi2: BoundaryField) -> float:
    """sup_M|u¹ − u²| − sup_∂M|φ¹ − φ²|; at most the comparison tolerance for solutions."""
    return float(np.max(np.abs(u1.values - u2.values)) - np.max(np.abs(phi1.values - phi2.values)))


@dataclass
class SandwichReport:
    lower_violation: float
    upper_violation: float
    normal_order_violation: float
    sup_u: float
    sup_boundary_gradient: float
    barrier_bound: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.lower_violation <= self.tol and self.upper_violation <= self.tol


def sandwich_check(u: ScalarField, u_sub: ScalarField, u_sup: ScalarField, omega: HermitianField,
                   tol: float = 1e-10) -> SandwichReport:
    """
    u̲ ≤ u ≤ ǔ nodewise, the induced ordering of inner normal derivatives, and
    the C⁰ + boundary-gradient bound the barriers give for u.
    """
    grid = u.grid
    lower = float(np.max(u_sub.values - u.values))
    upper = float(np.max(u.values - u_sup.values))
    dn = [boundary_normal_derivative(f, grid).values for f in (u_sub, u, u_sup)]
    order = float(max(np.max(dn[0] - dn[1]), np.max(dn[1] - dn[2])))

    def boundary_gradient(f: ScalarField) -> float:
        _, grad = laplacian_and_gradient(f, grid, omega)
        return grad.boundary().sup_norm()

    bound = max(u_sub.sup_norm(), u_sup.sup_norm()) + max(boundary_gradient(u_sub), boundary_gradient(u_sup))
    return SandwichReport(
        lower_violation=lower,
        upper_violation=upper,
        normal_order_violation=order,
        sup_u=u.sup_norm(),
        sup_boundary_gradient=boundary_gradient(u),
        barrier_bound=bound,
        tol=tol,
    )


@dataclass(frozen=True)
class ExhaustionStrip:
    """The region {h < −α} = {s_lower < s < s_upper} and the shift −tα u̲ carries on {h = −α}."""
    alpha: float
    s_lower: float
    s_upper: float
    node_count: int
    level_shift: float


def exhaustion_strips(sub: SubsolutionResult, alphas: Sequence[float]) -> List[ExhaustionStrip]:
    """Level sets of the Poisson function h = 2s(s−1) exhausting M for α ↓ 0."""
    if sub.h is None:
        raise PreconditionError("subsolution carries no Poisson function")
    strips = []
    for alpha in sorted(alphas, reverse=True):
        if not 0.0 < alpha <= 0.5:
            raise DomainError(f"level α must lie in (0, 1/2], got {alpha}")
        root = math.sqrt(1.0 - 2.0 * alpha)
        strips.append(ExhaustionStrip(
            alpha=alpha,
            s_lower=0.5 * (1.0 - root),
            s_upper=0.5 * (1.0 + root),
            node_count=int(np.count_nonzero(sub.h.values < -alpha)),
            level_shift=-sub.t_star * alpha,
        ))
    return strips
