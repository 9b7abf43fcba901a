"""
Arrow Matrix Eigenvalue Localization
====================================

Hermitian arrow (bordered) matrices

    A = [ diag(d_1, …, d_{n−1})   a ]
        [ a*                      𝐚 ]

and the quantitative statements that localize their spectrum once the corner
𝐚 grows quadratically in |a|: the n−1 smallest eigenvalues sit within ε of
the diagonal and the largest within (n−1)ε above the corner.

The spectral oracle is a dense Hermitian eigensolver that never uses the
arrow structure, so every check here is independent of the formulas it
verifies. Batch routines take stacks ``d: (m, n−1)``, ``a: (m, n−1)``,
``corner: (m,)`` and run the oracle on all m matrices at once.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, NumericalError, PreconditionError

logger = logging.getLogger(__name__)

ORACLE_RESIDUAL_TOL = 1e-10
TRACE_TOL = 1e-10
CHAR_POLY_TOL = 1e-8
CLOSED_FORM_TOL = 1e-12
DEFLATION_TOL = 1e-9
TOP_GAP_TOL = 1e-12


class ThresholdKind(str, Enum):
    """Which corner threshold (and conclusion) a localization check uses."""
    MAIN = "main"
    ORDERED = "ordered"
    DISTINCT = "distinct"


@dataclass(frozen=True, eq=False)
class ArrowMatrix:
    """Diagonal d (real), last column a (complex), corner 𝐚 (real)."""

    d: NDArray[np.float64]
    a: NDArray[np.complex128]
    corner: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).reshape(-1)
        a = np.asarray(self.a, dtype=complex).reshape(-1)
        if d.size < 1 or d.shape != a.shape:
            raise DomainError(f"arrow matrix needs len(d) == len(a) >= 1, got {d.size} and {a.size}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(a)) and math.isfinite(self.corner)):
            raise DomainError("arrow matrix entries must be finite")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "corner", float(self.corner))

    @property
    def n(self) -> int:
        return self.d.size + 1

    @property
    def trace(self) -> float:
        return float(np.sum(self.d) + self.corner)

    def dense(self) -> NDArray[np.complex128]:
        return arrow_stack(self.d[None, :], self.a[None, :], np.array([self.corner]))[0]

    def with_corner(self, corner: float) -> "ArrowMatrix":
        return ArrowMatrix(self.d, self.a, corner)


def arrow_stack(d: NDArray[np.float64], a: NDArray[np.complex128],
                corner: NDArray[np.float64]) -> NDArray[np.complex128]:
    """Dense Hermitian stack (m, n, n) from batched arrow data."""
    m, n1 = d.shape
    stack = np.zeros((m, n1 + 1, n1 + 1), dtype=complex)
    idx = np.arange(n1)
    stack[:, idx, idx] = d
    stack[:, idx, n1] = a
    stack[:, n1, idx] = np.conj(a)
    stack[:, n1, n1] = corner
    return stack


# ============================================================================
# SPECTRAL ORACLE
# ============================================================================

def dense_eigenvalues(stack: NDArray[np.complex128]) -> NDArray[np.float64]:
    """
    Ascending eigenvalues of a stack of dense Hermitian matrices.

    Every eigenpair is checked: ‖Av − λv‖ < 1e−10·‖A‖.

    Raises:
        NumericalError: the eigensolver failed or a residual check failed
    """
    try:
        w, v = np.linalg.eigh(stack)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigensolver did not converge: {e}") from e
    residual = np.linalg.norm(stack @ v - v * w[..., None, :], axis=-2)
    norm = np.maximum(np.max(np.abs(w), axis=-1), np.finfo(float).tiny)
    worst = np.max(residual, axis=-1) / norm
    if np.any(worst >= ORACLE_RESIDUAL_TOL):
        raise NumericalError(f"eigen residual {np.max(worst):.3e} exceeds {ORACLE_RESIDUAL_TOL:g}·‖A‖")
    return w


def eigen_oracle(m: ArrowMatrix) -> NDArray[np.float64]:
    """Ascending eigenvalues of the full dense matrix."""
    return dense_eigenvalues(m.dense()[None])[0]


def closed_form_2x2(m: ArrowMatrix) -> Tuple[float, float]:
    """λ = (𝐚 + d_1 ∓ √((𝐚 − d_1)² + 4|a_1|²))/2 for n = 2."""
    if m.n != 2:
        raise DomainError(f"closed form needs n=2, got n={m.n}")
    d1 = float(m.d[0])
    root = math.sqrt((m.corner - d1) ** 2 + 4.0 * abs(m.a[0]) ** 2)
    return (m.corner + d1 - root) / 2.0, (m.corner + d1 + root) / 2.0


# ============================================================================
# THRESHOLDS
# ============================================================================

def _check_epsilon(epsilon: float):
    if not epsilon > 0.0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")


def _threshold_main(epsilon: float, d: NDArray, a: NDArray) -> NDArray[np.float64]:
    n = d.shape[-1] + 1
    mass = np.sum(np.abs(a) ** 2, axis=-1)
    return ((2 * n - 3) / epsilon * mass + (n - 1) * np.sum(np.abs(d), axis=-1)
            + (n - 2) * epsilon / (2 * n - 3))


def _threshold_ordered(epsilon: float, d: NDArray, a: NDArray) -> NDArray[np.float64]:
    n = d.shape[-1] + 1
    mass = np.sum(np.abs(a) ** 2, axis=-1)
    return mass / epsilon + np.sum(d + (n - 2) * np.abs(d), axis=-1) + (n - 2) * epsilon


def _threshold_distinct(epsilon: float, d: NDArray, a: NDArray) -> NDArray[np.float64]:
    n = d.shape[-1] + 1
    mass = np.sum(np.abs(a) ** 2, axis=-1)
    return mass / epsilon + (n - 1) * np.sum(np.abs(d), axis=-1) + (n - 2) * epsilon


_THRESHOLDS: Dict[ThresholdKind, Callable[[float, NDArray, NDArray], NDArray]] = {
    ThresholdKind.MAIN: _threshold_main,
    ThresholdKind.ORDERED: _threshold_ordered,
    ThresholdKind.DISTINCT: _threshold_distinct,
}


def threshold_main(epsilon: float, m: ArrowMatrix) -> float:
    """(2n−3)/ε·Σ|a_i|² + (n−1)Σ|d_i| + (n−2)ε/(2n−3)."""
    _check_epsilon(epsilon)
    return float(_threshold_main(epsilon, m.d, m.a))


def threshold_ordered(epsilon: float, m: ArrowMatrix) -> float:
    """1/ε·Σ|a_i|² + Σ(d_i + (n−2)|d_i|) + (n−2)ε."""
    _check_epsilon(epsilon)
    return float(_threshold_ordered(epsilon, m.d, m.a))


def threshold_distinct(epsilon: float, m: ArrowMatrix) -> float:
    """1/ε·Σ|a_i|² + (n−1)Σ|d_i| + (n−2)ε, meant for ε ≤ applicable_epsilon_bound(d)."""
    _check_epsilon(epsilon)
    return float(_threshold_distinct(epsilon, m.d, m.a))


def scaled_corner(threshold: ArrayLike, corner_factor: float) -> NDArray[np.float64]:
    """
    threshold + (corner_factor − 1)·max(|threshold|, 1).

    Factor 1 sits on the threshold; larger factors move the corner further
    above it, including when the threshold is negative (ordered kind, n = 2).
    """
    if not corner_factor >= 1.0:
        raise DomainError(f"corner factor must be >= 1, got {corner_factor}")
    t = np.asarray(threshold, dtype=float)
    return t + (corner_factor - 1.0) * np.maximum(np.abs(t), 1.0)


def applicable_epsilon_bound(d: ArrayLike) -> float:
    """½·min |d_i − d_j| over distinct values of d; +inf when all d coincide."""
    values = np.unique(np.asarray(d, dtype=float))
    if values.size < 2:
        return math.inf
    return 0.5 * float(np.min(np.diff(values)))


# ============================================================================
# LOCALIZATION
# ============================================================================

@dataclass
class LocalizationReport:
    """
    Outcome of one localization check.

    ``applicable`` says whether the corner meets the threshold; the
    conclusions are evaluated either way but only asserted when applicable.
    ``alpha_deviations[α]`` is |λ_{π(α)} − d_α| under the chosen assignment π.
    """
    epsilon: float
    which: ThresholdKind
    threshold: float
    applicable: bool
    satisfied: bool
    eigenvalues: NDArray[np.float64]
    alpha_deviations: NDArray[np.float64]
    assignment: NDArray[np.int64]
    top_gap: float
    top_bound: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "which": self.which.value,
            "threshold": self.threshold,
            "applicable": self.applicable,
            "satisfied": self.satisfied,
            "eigenvalues": self.eigenvalues.tolist(),
            "alpha_deviations": self.alpha_deviations.tolist(),
            "top_gap": self.top_gap,
            "top_bound": self.top_bound,
        }


def _sorted_assignment(lower: NDArray, d: NDArray) -> Tuple[NDArray, NDArray]:
    """
    Match the n−1 lower eigenvalues to d sorted-to-sorted.

    On the real line this matching minimizes the maximum deviation over all
    permutations. Returns (deviation per d_α, eigenvalue index per d_α).
    """
    order = np.argsort(d, axis=-1, kind="stable")
    assignment = np.empty_like(order)
    np.put_along_axis(assignment, order, np.broadcast_to(np.arange(d.shape[-1]), d.shape), axis=-1)
    matched = np.take_along_axis(np.sort(lower, axis=-1), assignment, axis=-1)
    return np.abs(matched - d), assignment


def _nearest_assignment(lower: NDArray, d: NDArray) -> Tuple[NDArray, NDArray]:
    """Each lower eigenvalue matched to its nearest d_i (indices may repeat)."""
    dist = np.abs(lower[..., :, None] - d[..., None, :])
    nearest = np.argmin(dist, axis=-1)
    return np.take_along_axis(dist, nearest[..., None], axis=-1)[..., 0], nearest


def _conclusions(which: ThresholdKind, epsilon: float, d: NDArray, corner: NDArray,
                 w: NDArray) -> Dict[str, NDArray]:
    n = d.shape[-1] + 1
    lower = w[..., :-1]
    top_gap = w[..., -1] - corner
    if which == ThresholdKind.ORDERED:
        deviations, assignment = _nearest_assignment(lower, d)
        drift = np.abs(np.sum(d, axis=-1) - np.sum(np.take_along_axis(d, assignment, axis=-1), axis=-1))
        top_bound = (n - 1) * epsilon + drift
    else:
        deviations, assignment = _sorted_assignment(lower, d)
        top_bound = np.full(top_gap.shape, (n - 1) * epsilon)
    scale = np.maximum(1.0, np.max(np.abs(w), axis=-1))
    ok = (np.all(deviations < epsilon, axis=-1)
          & (top_gap >= -TOP_GAP_TOL * scale)
          & (top_gap < top_bound))
    return {"deviations": deviations, "assignment": assignment, "top_gap": top_gap,
            "top_bound": top_bound, "ok": ok}


def check_localization(m: ArrowMatrix, epsilon: float,
                       which: ThresholdKind = ThresholdKind.MAIN) -> LocalizationReport:
    """
    Compute the selected threshold and compare the oracle spectrum against
    the localization conclusion: |λ_α − d_α| < ε and 0 ≤ λ_n − 𝐚 < (n−1)ε
    (for the ordered variant every λ_α is within ε of some d_i and the top
    bound grows by |Σ(d_α − d_{i_α})|).
    """
    _check_epsilon(epsilon)
    which = ThresholdKind(which)
    threshold = float(_THRESHOLDS[which](epsilon, m.d, m.a))
    w = eigen_oracle(m)
    out = _conclusions(which, epsilon, m.d, np.float64(m.corner), w)
    report = LocalizationReport(
        epsilon=epsilon,
        which=which,
        threshold=threshold,
        applicable=m.corner >= threshold,
        satisfied=bool(out["ok"]),
        eigenvalues=w,
        alpha_deviations=out["deviations"],
        assignment=out["assignment"],
        top_gap=float(out["top_gap"]),
        top_bound=float(out["top_bound"]),
    )
    if report.applicable and not report.satisfied:
        logger.warning(f"LOCALIZATION_VIOLATION: {which.value} n={m.n} ε={epsilon} "
                       f"max_dev={np.max(report.alpha_deviations):.3e} top_gap={report.top_gap:.3e}")
    return report


# ============================================================================
# IDENTITIES
# ============================================================================

def _poly_from_roots(roots: NDArray) -> NDArray[np.float64]:
    """Batched monic coefficients (highest degree first) of ∏(x − r_i)."""
    coeffs = np.ones(roots.shape[:-1] + (1,))
    for i in range(roots.shape[-1]):
        r = roots[..., i:i + 1]
        pad = np.zeros(roots.shape[:-1] + (1,))
        coeffs = np.concatenate([coeffs, pad], axis=-1) - r * np.concatenate([pad, coeffs], axis=-1)
    return coeffs


def _char_poly_coefficients(d: NDArray, a: NDArray, corner: NDArray) -> NDArray[np.float64]:
    """Coefficients of det(λI − A) expanded from the arrow structure."""
    coeffs = _poly_from_roots(np.concatenate([d, corner[..., None]], axis=-1))
    weights = np.abs(a) ** 2
    for i in range(d.shape[-1]):
        rest = _poly_from_roots(np.delete(d, i, axis=-1))
        coeffs[..., 2:] -= weights[..., i:i + 1] * rest
    return coeffs


def _char_poly_values(d: NDArray, a: NDArray, corner: NDArray, lam: NDArray) -> NDArray[np.float64]:
    """(λ−𝐚)∏(λ−d_i) − Σ|a_i|²∏_{j≠i}(λ−d_j), broadcast over λ[..., k]."""
    diff = lam[..., :, None] - d[..., None, :]
    value = (lam - corner[..., None]) * np.prod(diff, axis=-1)
    weights = np.abs(a) ** 2
    for i in range(d.shape[-1]):
        value = value - weights[..., i:i + 1] * np.prod(np.delete(diff, i, axis=-1), axis=-1)
    return value


def _char_poly_scale(d: NDArray, a: NDArray, corner: NDArray, lam: NDArray) -> NDArray[np.float64]:
    """Σ_k |c_k|·max(1, |λ|)^k, the magnitude the residual is measured against."""
    coeffs = np.abs(_char_poly_coefficients(d, a, corner))
    powers = np.maximum(1.0, np.abs(lam))[..., :, None] ** np.arange(coeffs.shape[-1] - 1, -1, -1)
    return np.sum(coeffs[..., None, :] * powers, axis=-1)


def char_poly_residual(m: ArrowMatrix, lam: float) -> float:
    """(λ−𝐚)∏_i(λ−d_i) − Σ_i |a_i|² ∏_{j≠i}(λ−d_j)."""
    value = _char_poly_values(m.d[None], m.a[None], np.array([m.corner]), np.array([[float(lam)]]))
    return float(value[0, 0])


def char_poly_scale(m: ArrowMatrix, lam: float) -> float:
    scale = _char_poly_scale(m.d[None], m.a[None], np.array([m.corner]), np.array([[float(lam)]]))
    return float(scale[0, 0])


def trace_identity_check(m: ArrowMatrix) -> float:
    """|Σ oracle eigenvalues − (Σd + 𝐚)|."""
    return abs(float(np.sum(eigen_oracle(m))) - m.trace)


def deflate_duplicate(m: ArrowMatrix, i0: int, j0: int) -> ArrowMatrix:
    """
    Remove a repeated diagonal entry: a_{j0} ← (|a_{j0}|² + |a_{i0}|²)^{1/2},
    then delete row and column i0. The spectrum loses exactly one copy of d[i0].

    Raises:
        PreconditionError: i0 == j0, index out of range, or d[i0] ≠ d[j0]
    """
    size = m.d.size
    if not (0 <= i0 < size and 0 <= j0 < size) or i0 == j0:
        raise PreconditionError(f"need distinct indices in 0..{size - 1}, got i0={i0}, j0={j0}")
    if m.d[i0] != m.d[j0]:
        raise PreconditionError(f"d[{i0}]={m.d[i0]} differs from d[{j0}]={m.d[j0]}")
    a = m.a.copy()
    a[j0] = math.sqrt(abs(a[j0]) ** 2 + abs(a[i0]) ** 2)
    return ArrowMatrix(np.delete(m.d, i0), np.delete(a, i0), m.corner)


def spectrum_matches(left: ArrayLike, right: ArrayLike, tol: float = DEFLATION_TOL) -> bool:
    """Multiset equality of two real spectra to ``tol`` (relative to scale)."""
    x = np.sort(np.asarray(left, dtype=float))
    y = np.sort(np.asarray(right, dtype=float))
    if x.shape != y.shape:
        return False
    scale = max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(y))))
    return bool(np.max(np.abs(x - y)) <= tol * scale)


# ============================================================================
# RANDOM INSTANCES AND BATCHES
# ============================================================================

def random_arrow_data(rng: np.random.Generator, m: int, n: int, d_range: float = 3.0,
                      a_radius: float = 3.0) -> Tuple[NDArray, NDArray]:
    """d uniform in [−d_range, d_range]; a uniform in the disc of radius a_radius."""
    d = rng.uniform(-d_range, d_range, size=(m, n - 1))
    radius = a_radius * np.sqrt(rng.uniform(0.0, 1.0, size=(m, n - 1)))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(m, n - 1))
    return d, radius * np.exp(1j * phase)


@dataclass
class BatchSummary:
    """Worst slacks of one (n, ε, corner factor, threshold) group."""
    n: int
    epsilon: float
    corner_factor: float
    which: ThresholdKind
    instances: int
    worst_alpha_slack: float
    worst_top_low_slack: float
    worst_top_high_slack: float
    worst_trace_residual: float
    worst_char_poly_residual: float
    violations: int
    identity_violations: int

    def to_row(self) -> Dict[str, Any]:
        row = dict(self.__dict__)
        row["which"] = self.which.value
        return row


def localization_batch(d: NDArray, a: NDArray, epsilon: float, corner_factor: float = 1.0,
                       which: ThresholdKind = ThresholdKind.MAIN) -> BatchSummary:
    """
    Place every corner at or above its threshold and check the conclusion,
    the trace identity and the characteristic polynomial on the whole stack.
    See scaled_corner for how corner_factor moves the corner.
    """
    _check_epsilon(epsilon)
    which = ThresholdKind(which)
    corner = scaled_corner(_THRESHOLDS[which](epsilon, d, a), corner_factor)
    w = dense_eigenvalues(arrow_stack(d, a, corner))
    out = _conclusions(which, epsilon, d, corner, w)

    trace_res = np.abs(np.sum(w, axis=-1) - (np.sum(d, axis=-1) + corner))
    trace_rel = trace_res / (1.0 + np.abs(np.sum(d, axis=-1) + corner))
    poly_rel = np.max(np.abs(_char_poly_values(d, a, corner, w)) / _char_poly_scale(d, a, corner, w), axis=-1)

    scale = np.maximum(1.0, np.max(np.abs(w), axis=-1))
    identity_bad = (trace_rel >= TRACE_TOL) | (poly_rel >= CHAR_POLY_TOL)
    summary = BatchSummary(
        n=d.shape[-1] + 1,
        epsilon=epsilon,
        corner_factor=corner_factor,
        which=which,
        instances=d.shape[0],
        worst_alpha_slack=float(np.min(epsilon - np.max(out["deviations"], axis=-1))),
        worst_top_low_slack=float(np.min(out["top_gap"] / scale)),
        worst_top_high_slack=float(np.min(out["top_bound"] - out["top_gap"])),
        worst_trace_residual=float(np.max(trace_rel)),
        worst_char_poly_residual=float(np.max(poly_rel)),
        violations=int(np.count_nonzero(~out["ok"])),
        identity_violations=int(np.count_nonzero(identity_bad)),
    )
    logger.debug(f"ARROW_BATCH: n={summary.n} ε={epsilon} factor={corner_factor} "
                 f"{which.value} violations={summary.violations}")
    return summary


def closed_form_batch_error(rng: np.random.Generator, instances: int) -> float:
    """Max relative gap between the oracle and the n=2 closed form."""
    d, a = random_arrow_data(rng, instances, 2)
    corner = rng.uniform(-10.0, 10.0, size=instances)
    w = dense_eigenvalues(arrow_stack(d, a, corner))
    root = np.sqrt((corner - d[:, 0]) ** 2 + 4.0 * np.abs(a[:, 0]) ** 2)
    exact = np.stack([(corner + d[:, 0] - root) / 2.0, (corner + d[:, 0] + root) / 2.0], axis=-1)
    scale = np.maximum(np.max(np.abs(exact), axis=-1), np.finfo(float).tiny)
    return float(np.max(np.max(np.abs(w - exact), axis=-1) / scale))


def random_duplicate_arrow(rng: np.random.Generator, n: int) -> Tuple[ArrowMatrix, int, int]:
    """Random arrow matrix (n ≥ 3) with d[i0] == d[j0] for a random pair."""
    if n < 3:
        raise DomainError(f"duplicate diagonal needs n >= 3, got {n}")
    d, a = random_arrow_data(rng, 1, n)
    i0, j0 = rng.choice(n - 1, size=2, replace=False)
    d[0, i0] = d[0, j0]
    corner = float(rng.uniform(-5.0, 5.0))
    return ArrowMatrix(d[0], a[0], corner), int(i0), int(j0)


def deflation_failures(rng: np.random.Generator, instances: int, n_values: Sequence[int]) -> int:
    """Count duplicate instances whose deflated spectrum ∪ {d[i0]} differs from the original."""
    failures = 0
    sizes = [n for n in n_values if n >= 3]
    for index in range(instances if sizes else 0):
        m, i0, j0 = random_duplicate_arrow(rng, sizes[index % len(sizes)])
        reduced = deflate_duplicate(m, i0, j0)
        expected = np.append(eigen_oracle(reduced), m.d[i0])
        if not spectrum_matches(eigen_oracle(m), expected):
            failures += 1
    return failures


@dataclass
class ArrowSuiteResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    closed_form_error: float = 0.0
    deflation_failures: int = 0

    @property
    def violations(self) -> int:
        count = sum(row["violations"] + row["identity_violations"] for row in self.rows)
        count += self.deflation_failures
        return count + int(self.closed_form_error >= CLOSED_FORM_TOL)


def run_arrow_suite(n_values: Sequence[int], instances: int, epsilons: Sequence[float],
                    corner_factors: Sequence[float], seed: int, chunk: int = 20000,
                    kinds: Sequence[ThresholdKind] = (ThresholdKind.MAIN, ThresholdKind.ORDERED),
                    closed_form_instances: int = 10000,
                    deflation_instances: int = 1000) -> ArrowSuiteResult:
    """Full property sweep; one summary row per (n, ε, factor, threshold kind)."""
    rng = np.random.default_rng(seed)
    result = ArrowSuiteResult()
    for n in n_values:
        if n < 2:
            raise DomainError(f"arrow matrices need n >= 2, got {n}")
        d, a = random_arrow_data(rng, instances, n)
        for which in kinds:
            for epsilon in epsilons:
                for factor in corner_factors:
                    parts = [localization_batch(d[s:s + chunk], a[s:s + chunk], epsilon, factor, which)
                             for s in range(0, instances, chunk)]
                    result.rows.append(_merge(parts).to_row())
        logger.info(f"ARROW_SUITE: n={n} done")
    result.closed_form_error = closed_form_batch_error(rng, closed_form_instances)
    result.deflation_failures = deflation_failures(rng, deflation_instances, n_values)
    return result


def _merge(parts: List[BatchSummary]) -> BatchSummary:
    first = parts[0]
    return BatchSummary(
        n=first.n,
        epsilon=first.epsilon,
        corner_factor=first.corner_factor,
        which=first.which,
        instances=sum(p.instances for p in parts),
        worst_alpha_slack=min(p.worst_alpha_slack for p in parts),
        worst_top_low_slack=min(p.worst_top_low_slack for p in parts),
        worst_top_high_slack=min(p.worst_top_high_slack for p in parts),
        worst_trace_residual=max(p.worst_trace_residual for p in parts),
        worst_char_poly_residual=max(p.worst_char_poly_residual for p in parts),
        violations=sum(p.violations for p in parts),
        identity_violations=sum(p.identity_violations for p in parts),
    )
