"""
Symmetric Concave Operators on Gårding Cones
============================================

Calculus of the operators f(λ) that drive the Dirichlet problem
F(𝔤[u]) = f(λ(𝔤[u])) = ψ, together with sampled checks of their structural
conditions.

Three families are supported:

- ``log_ma``            f = Σ log λ_i                      on Γ_n
- ``sigma_k_root``      f = σ_k^{1/k}                      on Γ_k
- ``hessian_quotient``  f = (σ_k/σ_l)^{1/(k−l)}, 1 ≤ l < k on Γ_k

All evaluation routines accept a single eigenvalue vector of shape ``(n,)``
or a batch of shape ``(..., n)``; batches are what the grid solvers feed in.

Usage:
    from src.symcone import OperatorSpec, f_eval, diagonal_level_point

    op = OperatorSpec.sigma_k_root(n=3, k=2)
    f_eval(op, [1.0, 1.0, 1.0])            # sqrt(3)
    diagonal_level_point(op, 2.0).c_sigma  # t with f(t·1) = 2
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from scipy.special import comb

from .errors import DomainError, OutsideConeError, RangeError, SamplingError

logger = logging.getLogger(__name__)

TOL_CHECK = 1e-12
TOL_ROOT = 1e-12
T_MAX = 2.0 ** 40
SUMFI_RADII = (1.0, 10.0, 100.0)
RAY_FACTORS = (2.0, 10.0, 100.0)

EigenVector = NDArray[np.float64]
Scalar = Union[float, NDArray[np.float64]]


def as_eigenvector(values: ArrayLike, n: Optional[int] = None) -> EigenVector:
    """Validate an eigenvalue vector (or batch): finite entries, n ≥ 2."""
    lam = np.asarray(values, dtype=float)
    if lam.ndim == 0 or lam.shape[-1] < 2:
        raise DomainError(f"eigenvalue vector needs n >= 2 entries, got shape {lam.shape}")
    if n is not None and lam.shape[-1] != n:
        raise DomainError(f"dimension mismatch: expected n={n}, got {lam.shape[-1]}")
    if not np.all(np.isfinite(lam)):
        raise DomainError("eigenvalue vector has non-finite entries")
    return lam


def _scalar(x: NDArray[np.float64]) -> Scalar:
    return float(x) if np.ndim(x) == 0 else x


# ============================================================================
# ELEMENTARY SYMMETRIC FUNCTIONS
# ============================================================================

def _elementary_table(lam: NDArray[np.float64], kmax: int) -> NDArray[np.float64]:
    """σ_0..σ_kmax along the last axis, by the usual one-pass recurrence."""
    table = np.zeros(lam.shape[:-1] + (kmax + 1,))
    table[..., 0] = 1.0
    for i in range(lam.shape[-1]):
        x = lam[..., i]
        for j in range(min(i + 1, kmax), 0, -1):
            table[..., j] += x * table[..., j - 1]
    return table


def _elementary_deleted(lam: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    """σ_k(λ|i) for every i: σ_k of λ with the i-th entry removed."""
    n = lam.shape[-1]
    if k < 0:
        return np.zeros(lam.shape)
    out = np.empty(lam.shape)
    for i in range(n):
        out[..., i] = _elementary_table(np.delete(lam, i, axis=-1), k)[..., k]
    return out


def elementary_symmetric(lam: ArrayLike, k: int) -> Scalar:
    """
    σ_k(λ) = Σ_{i_1<…<i_k} λ_{i_1}…λ_{i_k}, with σ_0 = 1.

    Raises:
        DomainError: k outside 0..n
    """
    values = as_eigenvector(lam)
    n = values.shape[-1]
    if not 0 <= k <= n:
        raise DomainError(f"k={k} out of range 0..{n}")
    return _scalar(_elementary_table(values, k)[..., k])


# ============================================================================
# CONES
# ============================================================================

class ConeKind(str, Enum):
    """Supported open symmetric convex cones."""
    GAMMA_K = "gamma_k"
    POSITIVE = "positive_cone"


@dataclass(frozen=True)
class ConeSpec:
    """Γ_k = {σ_1 > 0, …, σ_k > 0} or the positive orthant Γ_n."""

    kind: ConeKind
    n: int
    k: Optional[int] = None

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"cone dimension must be >= 2, got {self.n}")
        if self.kind == ConeKind.GAMMA_K:
            if self.k is None or not 1 <= self.k <= self.n:
                raise DomainError(f"Γ_k needs 1 <= k <= n, got k={self.k}, n={self.n}")
        elif self.k is not None:
            raise DomainError("the positive cone takes no k")

    @classmethod
    def gamma(cls, n: int, k: int) -> "ConeSpec":
        return cls(ConeKind.GAMMA_K, n, k)

    @classmethod
    def positive(cls, n: int) -> "ConeSpec":
        return cls(ConeKind.POSITIVE, n)

    @property
    def order(self) -> int:
        """k for Γ_k, n for the positive orthant."""
        return self.k if self.kind == ConeKind.GAMMA_K else self.n

    def contains(self, lam: ArrayLike) -> Union[bool, NDArray[np.bool_]]:
        values = as_eigenvector(lam, self.n)
        if self.kind == ConeKind.POSITIVE:
            inside = np.all(values > 0.0, axis=-1)
        else:
            table = _elementary_table(values, self.k)
            inside = np.all(table[..., 1:] > 0.0, axis=-1)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def margin(self, lam: ArrayLike, normalized: bool = False) -> Scalar:
        """
        Distance-like admissibility margin: min_i λ_i for the positive cone,
        min_j σ_j(λ) (optionally divided by binom(n, j)) for Γ_k.
        """
        values = as_eigenvector(lam, self.n)
        if self.kind == ConeKind.POSITIVE:
            return _scalar(np.min(values, axis=-1))
        sig = _elementary_table(values, self.k)[..., 1:]
        if normalized:
            sig = sig / comb(self.n, np.arange(1, self.k + 1))
        return _scalar(np.min(sig, axis=-1))


def cone_contains(cone: ConeSpec, lam: ArrayLike) -> Union[bool, NDArray[np.bool_]]:
    """True iff λ ∈ Γ (strict inequalities)."""
    return cone.contains(lam)


def sample_cone_points(cone: ConeSpec, rng: np.random.Generator, size: int,
                       spread: float = 0.5, max_rounds: int = 1000) -> NDArray[np.float64]:
    """
    Draw interior points λ = c·1 + r·g with c ∈ [0.5, 5], r ∈ [0, spread·c],
    g standard normal, keeping only the draws that land in the cone.

    Raises:
        SamplingError: fewer than ``size`` hits after ``max_rounds`` batches
    """
    if size < 1:
        raise DomainError(f"sample size must be >= 1, got {size}")
    kept: List[NDArray[np.float64]] = []
    count = 0
    for _ in range(max_rounds):
        c = rng.uniform(0.5, 5.0, size=(size, 1))
        r = rng.uniform(0.0, spread, size=(size, 1)) * c
        draws = c + r * rng.standard_normal((size, cone.n))
        hits = draws[cone.contains(draws)]
        kept.append(hits)
        count += len(hits)
        if count >= size:
            return np.concatenate(kept)[:size]
    raise SamplingError(f"only {count}/{size} draws landed in {cone.kind.value} after {max_rounds} rounds")


# ============================================================================
# OPERATORS
# ============================================================================

class OperatorFamily(str, Enum):
    LOG_MA = "log_ma"
    SIGMA_K_ROOT = "sigma_k_root"
    HESSIAN_QUOTIENT = "hessian_quotient"


@dataclass(frozen=True)
class StructureFlags:
    """Which structural conditions hold for a family (derived analytically)."""
    elliptic: bool
    concave: bool
    bounded_below_rays: bool
    unbounded_last_direction: bool
    continuous_to_boundary: bool


# f(λ', λ_n + t) → sup f = +∞ fails for quotients: the ratio tends to
# (σ_{k−1}(λ')/σ_{l−1}(λ'))^{1/(k−l)}.
STRUCTURE_TABLE: Dict[OperatorFamily, StructureFlags] = {
    OperatorFamily.LOG_MA: StructureFlags(True, True, True, True, False),
    OperatorFamily.SIGMA_K_ROOT: StructureFlags(True, True, True, True, True),
    OperatorFamily.HESSIAN_QUOTIENT: StructureFlags(True, True, True, False, True),
}


@dataclass(frozen=True)
class OperatorSpec:
    """
    A concrete pair (f, Γ).

    ``value``/``gradient`` skip the cone check and are meant for callers that
    have already established admissibility; ``f_eval``/``f_grad`` check it.
    """

    family: OperatorFamily
    n: int
    k: Optional[int] = None
    l: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "family", OperatorFamily(self.family))
        if self.n < 2:
            raise DomainError(f"operator dimension must be >= 2, got {self.n}")
        if self.family == OperatorFamily.LOG_MA:
            if self.k is not None or self.l is not None:
                raise DomainError("log_ma takes neither k nor l")
        elif self.family == OperatorFamily.SIGMA_K_ROOT:
            if self.k is None or not 1 <= self.k <= self.n:
                raise DomainError(f"sigma_k_root needs 1 <= k <= n, got k={self.k}, n={self.n}")
            if self.l is not None:
                raise DomainError("sigma_k_root takes no l")
        else:
            if self.k is None or self.l is None or not 1 <= self.l < self.k <= self.n:
                raise DomainError(
                    f"hessian_quotient needs 1 <= l < k <= n, got k={self.k}, l={self.l}, n={self.n}")

    @classmethod
    def log_ma(cls, n: int) -> "OperatorSpec":
        return cls(OperatorFamily.LOG_MA, n)

    @classmethod
    def sigma_k_root(cls, n: int, k: int) -> "OperatorSpec":
        return cls(OperatorFamily.SIGMA_K_ROOT, n, k)

    @classmethod
    def hessian_quotient(cls, n: int, k: int, l: int) -> "OperatorSpec":
        return cls(OperatorFamily.HESSIAN_QUOTIENT, n, k, l)

    @property
    def label(self) -> str:
        if self.family == OperatorFamily.LOG_MA:
            return f"log_ma_n{self.n}"
        if self.family == OperatorFamily.SIGMA_K_ROOT:
            return f"sigma_{self.k}_root_n{self.n}"
        return f"hessian_quotient_{self.k}_{self.l}_n{self.n}"

    @property
    def cone(self) -> ConeSpec:
        if self.family == OperatorFamily.LOG_MA:
            return ConeSpec.positive(self.n)
        return ConeSpec.gamma(self.n, self.k)

    @property
    def sup_boundary_f(self) -> float:
        """sup_{∂Γ} f: −∞ for log_ma, 0 for the σ_k families."""
        return -math.inf if self.family == OperatorFamily.LOG_MA else 0.0

    @property
    def sup_f(self) -> float:
        return math.inf

    @property
    def structure(self) -> StructureFlags:
        return STRUCTURE_TABLE[self.family]

    def value(self, lam: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.family == OperatorFamily.LOG_MA:
            return np.sum(np.log(lam), axis=-1)
        table = _elementary_table(lam, self.k)
        if self.family == OperatorFamily.SIGMA_K_ROOT:
            return table[..., self.k] ** (1.0 / self.k)
        return (table[..., self.k] / table[..., self.l]) ** (1.0 / (self.k - self.l))

    def gradient(self, lam: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.value_and_gradient(lam)[1]

    def value_and_gradient(self, lam: NDArray[np.float64]):
        if self.family == OperatorFamily.LOG_MA:
            return np.sum(np.log(lam), axis=-1), 1.0 / lam
        table = _elementary_table(lam, self.k)
        sk = table[..., self.k]
        dk = _elementary_deleted(lam, self.k - 1)
        if self.family == OperatorFamily.SIGMA_K_ROOT:
            f = sk ** (1.0 / self.k)
            return f, (f / (self.k * sk))[..., None] * dk
        # logarithmic differentiation keeps both ratios O(1) near ∂Γ_k
        sl = table[..., self.l]
        dl = _elementary_deleted(lam, self.l - 1)
        f = (sk / sl) ** (1.0 / (self.k - self.l))
        grad = (f / (self.k - self.l))[..., None] * (dk / sk[..., None] - dl / sl[..., None])
        return f, grad

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family.value, "n": self.n, "k": self.k, "l": self.l}


def _checked(op: OperatorSpec, lam: ArrayLike) -> NDArray[np.float64]:
    values = as_eigenvector(lam, op.n)
    inside = op.cone.contains(values)
    if not np.all(inside):
        raise OutsideConeError(f"{op.label}: eigenvalues outside {op.cone.kind.value}")
    return values


def f_eval(op: OperatorSpec, lam: ArrayLike) -> Scalar:
    """f(λ) in closed form. Raises OutsideConeError unless λ ∈ Γ."""
    return _scalar(op.value(_checked(op, lam)))


def f_grad(op: OperatorSpec, lam: ArrayLike) -> NDArray[np.float64]:
    """Df(λ) = (f_1, …, f_n); every component is positive on Γ."""
    return op.gradient(_checked(op, lam))


def normal_vector(op: OperatorSpec, lam: ArrayLike) -> NDArray[np.float64]:
    """ν_λ = Df(λ)/|Df(λ)|, the unit normal of the level set through λ."""
    grad = f_grad(op, lam)
    return grad / np.linalg.norm(grad, axis=-1, keepdims=True)


# ============================================================================
# STRUCTURAL CHECKS
# ============================================================================

@dataclass
class CriteriaReport:
    """Minimum observed slack per sampled inequality (negative = violated)."""
    operator: str
    samples: int
    slacks: Dict[str, float] = field(default_factory=dict)
    violations: Dict[str, int] = field(default_factory=dict)
    tol: float = TOL_CHECK

    @property
    def passed(self) -> bool:
        return all(count == 0 for count in self.violations.values())

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {"operator": self.operator, "samples": self.samples}
        row.update({f"slack_{name}": value for name, value in self.slacks.items()})
        row["violations"] = sum(self.violations.values())
        return row


def verify_growth_criteria(op: OperatorSpec, samples: int, seed: int,
                           tol: float = TOL_CHECK) -> CriteriaReport:
    """
    Sample pairs (λ, μ) in Γ and record the minimum slack of:

    - ``sum_fi_mu``     Σ f_i(λ) μ_i ≥ 0 (strictly > 0)
    - ``monotone``      f(λ + μ) − f(λ) ≥ 0 (strictly > 0)
    - ``euler``         Σ f_i(λ) λ_i ≥ 0
    - ``sumfi_R*``      Σ f_i(λ) − (f(R·1) − f(λ))/R > 0
    - ``ray_monotone``  f(tλ) − f(λ) ≥ 0 for t ∈ {2, 10, 100}
    - ``ray_dominance`` f(T_MAX·λ) − f(μ) > 0
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    lam = sample_cone_points(op.cone, rng, samples)
    mu = sample_cone_points(op.cone, rng, samples)

    f_lam, df_lam = op.value_and_gradient(lam)
    checks: Dict[str, NDArray[np.float64]] = {
        "sum_fi_mu": np.sum(df_lam * mu, axis=-1),
        "monotone": op.value(lam + mu) - f_lam,
        "euler": np.sum(df_lam * lam, axis=-1),
    }
    sum_fi = np.sum(df_lam, axis=-1)
    for radius in SUMFI_RADII:
        f_radius = float(op.value(np.full(op.n, radius)))
        checks[f"sumfi_R{radius:g}"] = sum_fi - (f_radius - f_lam) / radius
    checks["ray_monotone"] = np.min(
        [op.value(t * lam) - f_lam for t in RAY_FACTORS], axis=0)
    checks["ray_dominance"] = op.value(T_MAX * lam) - op.value(mu)

    report = CriteriaReport(operator=op.label, samples=samples, tol=tol)
    for name, slack in checks.items():
        report.slacks[name] = float(np.min(slack))
        report.violations[name] = int(np.count_nonzero(slack < -tol))
    if not report.passed:
        logger.warning(f"CRITERIA_VIOLATION: {op.label} {report.violations}")
    return report


def concavity_midpoint_check(op: OperatorSpec, lam: ArrayLike, mu: ArrayLike) -> Scalar:
    """
    min( f((λ+μ)/2) − (f(λ)+f(μ))/2 , Σ f_i(λ)(μ_i − λ_i) − (f(μ) − f(λ)) ).

    Both terms are ≥ 0 for concave f; the result must stay ≥ −TOL_CHECK.
    """
    lam = _checked(op, lam)
    mu = _checked(op, mu)
    f_lam, df_lam = op.value_and_gradient(lam)
    f_mu = op.value(mu)
    midpoint = op.value(0.5 * (lam + mu)) - 0.5 * (f_lam + f_mu)
    tangent = np.sum(df_lam * (mu - lam), axis=-1) - (f_mu - f_lam)
    return _scalar(np.minimum(midpoint, tangent))


def gradient_fd_error(op: OperatorSpec, lam: ArrayLike, step: float = 1e-5) -> float:
    """Relative error between f_grad and centered differences of f_eval."""
    values = _checked(op, lam)
    grad = op.gradient(values)
    fd = np.empty_like(grad)
    for i in range(op.n):
        shift = np.zeros(op.n)
        shift[i] = step
        fd[..., i] = (op.value(values + shift) - op.value(values - shift)) / (2.0 * step)
    err = np.linalg.norm(fd - grad, axis=-1) / np.linalg.norm(grad, axis=-1)
    return float(np.max(err))


def symmetry_error(op: OperatorSpec, lam: ArrayLike, rng: np.random.Generator) -> float:
    """Max deviation of f and Df under a random permutation of λ."""
    values = _checked(op, lam)
    perm = rng.permutation(op.n)
    f0, g0 = op.value_and_gradient(values)
    f1, g1 = op.value_and_gradient(values[..., perm])
    scale = 1.0 + np.max(np.abs(f0))
    return float(max(np.max(np.abs(f1 - f0)) / scale,
                     np.max(np.abs(g1 - g0[..., perm])) / (1.0 + np.max(np.abs(g0)))))


# ============================================================================
# LEVEL SETS AND Γ_∞
# ============================================================================

@dataclass(frozen=True)
class LevelSetPoint:
    """c_σ·1 ∈ ∂Γ^σ, i.e. f(c_σ·1) = σ."""
    sigma: float
    c_sigma: float
    residual: float


def diagonal_level_point(op: OperatorSpec, sigma: float) -> LevelSetPoint:
    """
    Solve f(t·1) = σ for t > 0 (bracketing by doubling, then Brent).

    t ↦ f(t·1) is strictly increasing, so the root is unique.

    Raises:
        RangeError: σ ≤ sup_{∂Γ} f, σ ≥ sup_Γ f, or no bracket inside [2⁻⁴⁰, 2⁴⁰]
    """
    if not (sigma > op.sup_boundary_f and sigma < op.sup_f):
        raise RangeError(f"σ={sigma} not attainable by {op.label} "
                         f"(needs {op.sup_boundary_f} < σ < {op.sup_f})")

    def gap(t: float) -> float:
        return float(op.value(np.full(op.n, t))) - sigma

    hi = 1.0
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > T_MAX:
            raise RangeError(f"no upper bracket for σ={sigma} below T_MAX")
    lo = hi
    while gap(lo) > 0.0:
        lo *= 0.5
        if lo < 1.0 / T_MAX:
            raise RangeError(f"no lower bracket for σ={sigma} above 1/T_MAX")
    c = lo if gap(lo) == 0.0 else brentq(gap, lo, hi, xtol=1e-300,
                                         rtol=4.0 * np.finfo(float).eps, maxiter=500)
    residual = abs(gap(c))
    logger.debug(f"LEVEL_POINT: {op.label} σ={sigma} c_σ={c!r} residual={residual:.3e}")
    return LevelSetPoint(sigma=float(sigma), c_sigma=float(c), residual=residual)


def gamma_infinity_witness(op: OperatorSpec, lambda_prime: ArrayLike) -> Optional[float]:
    """
    Smallest doubling T ∈ {1, 2, 4, …, T_MAX} with (λ', T) ∈ Γ, or None.

    Membership is monotone in T because Γ + Γ_n ⊆ Γ. ``None`` means
    "not found within the search bound", not a proof of non-membership.
    """
    head = np.asarray(lambda_prime, dtype=float)
    if head.shape != (op.n - 1,):
        raise DomainError(f"λ' must have n-1={op.n - 1} entries, got shape {head.shape}")
    cone = op.cone
    t = 1.0
    while t <= T_MAX:
        if cone.contains(np.append(head, t)):
            return t
        t *= 2.0
    logger.debug(f"GAMMA_INFINITY: {head.tolist()} not found within T_MAX={T_MAX:g}")
    return None


def gamma_infinity_contains(op: OperatorSpec, lambda_prime: ArrayLike) -> bool:
    """λ' ∈ Γ_∞ (projection of Γ) up to the doubling bound T_MAX."""
    return gamma_infinity_witness(op, lambda_prime) is not None


# ============================================================================
# PROPERTY SUITE
# ============================================================================

def run_cone_suite(ops: Sequence[OperatorSpec], samples: int, seed: int) -> List[Dict[str, Any]]:
    """One CSV row per operator with every sampled slack and consistency error."""
    rows = []
    for index, op in enumerate(ops):
        report = verify_growth_criteria(op, samples, seed + index)
        rng = np.random.default_rng(seed + 7919 * (index + 1))
        lam = sample_cone_points(op.cone, rng, samples)
        mu = sample_cone_points(op.cone, rng, samples)
        interior = sample_cone_points(op.cone, rng, min(samples, 1000), spread=0.2)

        level_a = diagonal_level_point(op, _level_value(op, 1.0))
        level_b = diagonal_level_point(op, _level_value(op, 2.0))

        row = report.to_row()
        row["slack_concavity"] = float(np.min(concavity_midpoint_check(op, lam, mu)))
        row["min_grad_component"] = float(np.min(op.gradient(lam)))
        row["grad_fd_error"] = gradient_fd_error(op, interior)
        row["symmetry_error"] = symmetry_error(op, lam, rng)
        row["level_residual"] = max(level_a.residual, level_b.residual)
        row["level_monotone"] = level_a.c_sigma < level_b.c_sigma
        rows.append(row)
        logger.info(f"CONE_SUITE: {op.label} violations={row['violations']}")
    return rows


def _level_value(op: OperatorSpec, t: float) -> float:
    return float(op.value(np.full(op.n, t)))
