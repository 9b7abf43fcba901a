"""
Product Grid Discretization
===========================

Finite-difference discretization of M = X × S where X is a flat complex torus
of complex dimension p (real periods 1) and S = [0, 1] × S¹ is the flat
cylinder with coordinate z_n = s + iθ.

Axes are ordered ``x1, y1, …, xp, yp, s, theta``; complex direction j uses
real axes (2j, 2j+1), so the last complex direction is the cylinder. Only the
s-direction has a boundary; every other axis is periodic.

Second derivatives are sparse matrices D_ab acting on flattened node values
(rows at boundary nodes are zero). The complex Hessian, the Laplacian and
the linearized operator of the solver are all built from the same D_ab, so
residuals and Jacobians are consistent by construction.

Usage:
    grid = build_grid(p=1, torus_res=8, s_res=8, theta_res=8)
    u = ScalarField.from_expression(grid, "x1**2 + s**2")
    hess = complex_hessian(u, grid)
    lam = eigenvalues_rel(hess, HermitianField.identity(grid.n))
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, GeometryError
from .expressions import compile_expression

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 4


# ============================================================================
# ONE-DIMENSIONAL STENCILS
# ============================================================================

def _second_1d(r: int, h: float, periodic: bool) -> sp.csr_matrix:
    """(u_{i+1} − 2u_i + u_{i−1})/h²; boundary rows empty when not periodic."""
    main = np.full(r, -2.0)
    off = np.ones(r - 1)
    op = sp.diags([off, main, off], [-1, 0, 1], shape=(r, r), format="lil")
    if periodic:
        op[0, r - 1] = 1.0
        op[r - 1, 0] = 1.0
    else:
        op[0, :] = 0.0
        op[r - 1, :] = 0.0
    return (op / h ** 2).tocsr()


def _central_1d(r: int, h: float, periodic: bool, one_sided_ends: bool = False) -> sp.csr_matrix:
    """
    (u_{i+1} − u_{i−1})/(2h). On a bounded axis the end rows are either empty
    or the second-order one-sided (∓3u_0 ± 4u_1 ∓ u_2)/(2h).
    """
    off = np.ones(r - 1)
    op = sp.diags([-off, off], [-1, 1], shape=(r, r), format="lil")
    if periodic:
        op[0, r - 1] = -1.0
        op[r - 1, 0] = 1.0
    else:
        op[0, :] = 0.0
        op[r - 1, :] = 0.0
        if one_sided_ends:
            op[0, 0:3] = [-3.0, 4.0, -1.0]
            op[r - 1, r - 3:r] = [1.0, -4.0, 3.0]
    return (op / (2.0 * h)).tocsr()


def _kron_along(ops: List[sp.spmatrix]) -> sp.csr_matrix:
    """Kronecker product matching C-order flattening (axis 0 outermost)."""
    out = ops[0]
    for op in ops[1:]:
        out = sp.kron(out, op, format="csr")
    return sp.csr_matrix(out)


# ============================================================================
# GRID
# ============================================================================

@dataclass(frozen=True)
class ProductGrid:
    """Node lattice of X × S with periodic torus/θ axes and Dirichlet s-ends."""

    p: int
    torus_res: int
    s_res: int
    theta_res: int

    def __post_init__(self):
        if self.p < 1:
            raise DomainError(f"p must be >= 1, got {self.p}")
        for name in ("torus_res", "s_res", "theta_res"):
            value = getattr(self, name)
            if value < MIN_RESOLUTION:
                raise DomainError(f"{name}={value} is too coarse (minimum {MIN_RESOLUTION})")

    @property
    def n(self) -> int:
        """Complex dimension of M."""
        return self.p + 1

    @property
    def ndim(self) -> int:
        return 2 * self.n

    @property
    def s_axis(self) -> int:
        return 2 * self.p

    @property
    def theta_axis(self) -> int:
        return 2 * self.p + 1

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.torus_res,) * (2 * self.p) + (self.s_res, self.theta_res)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> Tuple[float, ...]:
        return (1.0 / self.torus_res,) * (2 * self.p) + (1.0 / (self.s_res - 1), 1.0 / self.theta_res)

    @property
    def periodic(self) -> Tuple[bool, ...]:
        return (True,) * (2 * self.p) + (False, True)

    @property
    def axis_names(self) -> Tuple[str, ...]:
        names: List[str] = []
        for j in range(1, self.p + 1):
            names += [f"x{j}", f"y{j}"]
        return tuple(names + ["s", "theta"])

    @property
    def boundary_shape(self) -> Tuple[int, ...]:
        """Shape of boundary data: (2,) for s ∈ {0, 1}, then the X and θ axes."""
        return (2,) + (self.torus_res,) * (2 * self.p) + (self.theta_res,)

    @cached_property
    def axes(self) -> Tuple[NDArray[np.float64], ...]:
        out = []
        for res, periodic in zip(self.shape, self.periodic):
            out.append(np.arange(res) / res if periodic else np.linspace(0.0, 1.0, res))
        return tuple(out)

    @cached_property
    def coordinates(self) -> Dict[str, NDArray[np.float64]]:
        """Full coordinate arrays keyed by axis name."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return dict(zip(self.axis_names, mesh))

    @cached_property
    def boundary_mask(self) -> NDArray[np.bool_]:
        mask = np.zeros(self.shape, dtype=bool)
        mask[self.s_layer(0)] = True
        mask[self.s_layer(self.s_res - 1)] = True
        return mask

    @property
    def interior_mask(self) -> NDArray[np.bool_]:
        return ~self.boundary_mask

    @property
    def boundary_count(self) -> int:
        return int(np.count_nonzero(self.boundary_mask))

    @property
    def interior_count(self) -> int:
        return self.size - self.boundary_count

    def s_layer(self, index: int) -> Tuple:
        """Index tuple selecting the s = s_index layer of a node array."""
        return (slice(None),) * self.s_axis + (index,)

    def node_index(self, flat: int) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def to_dict(self) -> Dict[str, int]:
        return {"p": self.p, "torus_res": self.torus_res, "s_res": self.s_res, "theta_res": self.theta_res}

    # ------------------------------------------------------------------
    # Sparse difference operators
    # ------------------------------------------------------------------

    def _identity_ops(self) -> List[sp.spmatrix]:
        return [sp.identity(r, format="csr") for r in self.shape]

    @cached_property
    def _interior_rows(self) -> sp.dia_matrix:
        return sp.diags(self.interior_mask.reshape(-1).astype(float))

    def second_difference(self, a: int, b: int) -> sp.csr_matrix:
        """D_ab ≈ ∂²/∂x_a∂x_b on all nodes; boundary rows are zero."""
        return self._second_differences[(min(a, b), max(a, b))]

    @cached_property
    def _second_differences(self) -> Dict[Tuple[int, int], sp.csr_matrix]:
        ops: Dict[Tuple[int, int], sp.csr_matrix] = {}
        for a in range(self.ndim):
            for b in range(a, self.ndim):
                factors = self._identity_ops()
                if a == b:
                    factors[a] = _second_1d(self.shape[a], self.spacing[a], self.periodic[a])
                else:
                    factors[a] = _central_1d(self.shape[a], self.spacing[a], self.periodic[a])
                    factors[b] = _central_1d(self.shape[b], self.spacing[b], self.periodic[b])
                ops[(a, b)] = sp.csr_matrix(self._interior_rows @ _kron_along(factors))
        return ops

    def first_difference(self, a: int) -> sp.csr_matrix:
        """Central ∂/∂x_a; one-sided second order on the s-boundary rows."""
        return self._first_differences[a]

    @cached_property
    def _first_differences(self) -> List[sp.csr_matrix]:
        ops = []
        for a in range(self.ndim):
            factors = self._identity_ops()
            factors[a] = _central_1d(self.shape[a], self.spacing[a], self.periodic[a], one_sided_ends=True)
            ops.append(_kron_along(factors))
        return ops

    def contraction_operator(self, coeffs: NDArray[np.complex128]) -> sp.csr_matrix:
        """
        Sparse operator v ↦ Σ_{jk} B_jk (∂∂̄v)_{jk̄} for per-node (or constant)
        complex coefficients B of shape (..., n, n).

        With B = (ω^{-1})ᵀ this is the Laplacian Δ = tr_ω i∂∂̄; with
        B = (F^{jk̄})ᵀ it is the linearized operator of F.
        """
        real = _real_coefficients(np.asarray(coeffs), self.n)
        total = sp.csr_matrix((self.size, self.size))
        for (a, b), op in self._second_differences.items():
            weight = real[..., a, b]
            if np.ndim(weight) == 0:
                if weight != 0.0:
                    total = total + float(weight) * op
            else:
                total = total + sp.diags(weight.reshape(-1)) @ op
        return sp.csr_matrix(total)

    def cylinder(self) -> "CylinderGrid":
        return CylinderGrid(self.s_res, self.theta_res)


def _real_coefficients(coeffs: NDArray[np.complex128], n: int) -> NDArray[np.float64]:
    """
    Real weights c_ab (a ≤ b) with Σ_{jk} B_jk u_{jk̄} = Σ_{a≤b} c_ab ∂_a∂_b u, using
    u_{jk̄} = ¼[(∂_{x_j x_k} + ∂_{y_j y_k}) + i(∂_{x_j y_k} − ∂_{y_j x_k})]u.
    """
    full = np.zeros(coeffs.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    quarter = 0.25 * coeffs
    full[..., 0::2, 0::2] += quarter
    full[..., 1::2, 1::2] += quarter
    full[..., 0::2, 1::2] += 1j * quarter
    full[..., 1::2, 0::2] -= 1j * quarter
    sym = full + np.swapaxes(full, -1, -2)
    diag = np.arange(2 * n)
    sym[..., diag, diag] = full[..., diag, diag]
    return np.triu(sym.real)


def build_grid(p: int = 1, torus_res: int = 8, s_res: int = 8, theta_res: int = 8) -> ProductGrid:
    """Construct and validate a product grid (all resolutions ≥ 4, p ≥ 1)."""
    grid = ProductGrid(p=p, torus_res=torus_res, s_res=s_res, theta_res=theta_res)
    logger.debug(f"GRID: shape={grid.shape} nodes={grid.size} boundary={grid.boundary_count}")
    return grid


@dataclass(frozen=True)
class CylinderGrid:
    """The S factor alone: s ∈ [0, 1] with s_res nodes, θ periodic with theta_res nodes."""

    s_res: int
    theta_res: int

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.s_res, self.theta_res)

    @property
    def h_s(self) -> float:
        return 1.0 / (self.s_res - 1)

    @property
    def h_theta(self) -> float:
        return 1.0 / self.theta_res

    @cached_property
    def s(self) -> NDArray[np.float64]:
        return np.linspace(0.0, 1.0, self.s_res)

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """¼(∂_ss + ∂_θθ) = ∂²/∂z∂z̄; boundary rows zero."""
        dss = sp.kron(_second_1d(self.s_res, self.h_s, False), sp.identity(self.theta_res))
        dtt = sp.kron(sp.identity(self.s_res), _second_1d(self.theta_res, self.h_theta, True))
        mask = np.ones(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = False
        return sp.csr_matrix(sp.diags(mask.reshape(-1).astype(float)) @ (0.25 * (dss + dtt)))


# ============================================================================
# FIELDS
# ============================================================================

@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real value per grid node; ``values`` has shape ``grid.shape``."""

    grid: ProductGrid
    values: NDArray[np.float64]

    def __post_init__(self):
        try:
            values = np.array(np.broadcast_to(np.asarray(self.values, dtype=float), self.grid.shape))
        except ValueError as e:
            raise DomainError(f"field values do not fit grid shape {self.grid.shape}") from e
        if not np.all(np.isfinite(values)):
            raise DomainError("scalar field has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: ProductGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: ProductGrid,
                      fn: Callable[[Dict[str, NDArray[np.float64]]], ArrayLike]) -> "ScalarField":
        return cls(grid, fn(grid.coordinates))

    @classmethod
    def from_expression(cls, grid: ProductGrid, expr: str) -> "ScalarField":
        """Evaluate an expression of the closed grammar on the node coordinates."""
        return cls.from_function(grid, compile_expression(expr, grid.axis_names))

    @classmethod
    def from_flat(cls, grid: ProductGrid, flat: ArrayLike) -> "ScalarField":
        return cls(grid, np.asarray(flat, dtype=float).reshape(grid.shape))

    @property
    def flat(self) -> NDArray[np.float64]:
        return self.values.reshape(-1)

    def boundary(self) -> "BoundaryField":
        return BoundaryField.from_field(self)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other: Union["ScalarField", float]) -> "ScalarField":
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values + other_values)

    def __sub__(self, other: Union["ScalarField", float]) -> "ScalarField":
        other_values = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values - other_values)

    def __mul__(self, scalar: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Values on ∂M = X × {s=0, s=1} × S¹; ``values[0]`` is s=0, ``values[1]`` is s=1."""

    grid: ProductGrid
    values: NDArray[np.float64]

    def __post_init__(self):
        values = np.array(np.broadcast_to(np.asarray(self.values, dtype=float), self.grid.boundary_shape))
        if not np.all(np.isfinite(values)):
            raise DomainError("boundary field has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_field(cls, field: ScalarField) -> "BoundaryField":
        grid = field.grid
        return cls(grid, np.stack([field.values[grid.s_layer(0)], field.values[grid.s_layer(grid.s_res - 1)]]))

    @classmethod
    def constant(cls, grid: ProductGrid, lower: float, upper: Optional[float] = None) -> "BoundaryField":
        upper = lower if upper is None else upper
        values = np.empty(grid.boundary_shape)
        values[0] = lower
        values[1] = upper
        return cls(grid, values)

    @property
    def lower(self) -> NDArray[np.float64]:
        return self.values[0]

    @property
    def upper(self) -> NDArray[np.float64]:
        return self.values[1]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class HermitianField:
    """
    Hermitian n×n matrix per node, shape ``(..., n, n)``.

    A field with no node axes (shape ``(n, n)``) is constant and broadcasts.
    Only the upper triangle of the input is read; the lower triangle is its
    conjugate and the diagonal is real, so symmetry is exact.
    """

    matrices: NDArray[np.complex128]

    def __post_init__(self):
        raw = np.asarray(self.matrices, dtype=complex)
        if raw.ndim < 2 or raw.shape[-1] != raw.shape[-2] or raw.shape[-1] < 2:
            raise DomainError(f"Hermitian field needs trailing (n, n) with n >= 2, got {raw.shape}")
        upper = np.triu(raw, 1)
        diag = np.real(np.diagonal(raw, axis1=-2, axis2=-1))
        mats = upper + np.conj(np.swapaxes(upper, -1, -2))
        idx = np.arange(raw.shape[-1])
        mats[..., idx, idx] = diag
        if not np.all(np.isfinite(mats)):
            raise DomainError("Hermitian field has non-finite entries")
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def constant(cls, matrix: ArrayLike) -> "HermitianField":
        return cls(np.asarray(matrix, dtype=complex))

    @classmethod
    def identity(cls, n: int) -> "HermitianField":
        return cls(np.eye(n, dtype=complex))

    @property
    def n(self) -> int:
        return self.matrices.shape[-1]

    @property
    def is_constant(self) -> bool:
        return self.matrices.ndim == 2

    def __add__(self, other: "HermitianField") -> "HermitianField":
        return HermitianField(self.matrices + other.matrices)

    def scaled(self, factor: float) -> "HermitianField":
        return HermitianField(self.matrices * factor)


def _cholesky(omega: HermitianField) -> NDArray[np.complex128]:
    try:
        return np.linalg.cholesky(omega.matrices)
    except np.linalg.LinAlgError as e:
        raise GeometryError(f"metric ω is not positive definite: {e}") from e


def inverse_cholesky(omega: HermitianField) -> NDArray[np.complex128]:
    """L^{-1} for ω = LL* (raises GeometryError unless ω > 0)."""
    return np.linalg.inv(_cholesky(omega))


def inverse_metric(omega: HermitianField) -> NDArray[np.complex128]:
    """ω^{-1} as a matrix (raises GeometryError unless ω > 0)."""
    inv_chol = inverse_cholesky(omega)
    return np.conj(np.swapaxes(inv_chol, -1, -2)) @ inv_chol


def reduced_matrices(g: HermitianField, omega: HermitianField) -> Tuple[NDArray, NDArray]:
    """
    L^{-1} g L^{-*} with ω = L L*; its eigenvalues are those of g relative to ω.
    Returns the reduced stack and L^{-1}.
    """
    if g.n != omega.n:
        raise DomainError(f"dimension mismatch: g is {g.n}×{g.n}, ω is {omega.n}×{omega.n}")
    inv_chol = inverse_cholesky(omega)
    reduced = inv_chol @ g.matrices @ np.conj(np.swapaxes(inv_chol, -1, -2))
    return reduced, inv_chol


def eigenvalues_rel(g: HermitianField, omega: HermitianField) -> NDArray[np.float64]:
    """
    Ascending eigenvalues of g with respect to ω at every node: the
    solutions of g v = λ ω v, shape ``(..., n)``.

    Raises:
        GeometryError: ω is not positive definite
    """
    reduced, _ = reduced_matrices(g, omega)
    return np.linalg.eigvalsh(reduced)


# ============================================================================
# DIFFERENTIAL QUANTITIES
# ============================================================================

def _fill_boundary_layers(values: NDArray, grid: ProductGrid) -> NDArray:
    """Copy the first/last interior s-layers onto the boundary layers."""
    values[grid.s_layer(0)] = values[grid.s_layer(1)]
    values[grid.s_layer(grid.s_res - 1)] = values[grid.s_layer(grid.s_res - 2)]
    return values


def hessian_components(u: ScalarField, grid: ProductGrid) -> NDArray[np.complex128]:
    """u_{jk̄} at every node, shape grid.shape + (n, n); boundary rows are zero."""
    n = grid.n
    flat = u.flat
    d = {key: (op @ flat).reshape(grid.shape) for key, op in grid._second_differences.items()}

    def dd(a: int, b: int) -> NDArray:
        return d[(min(a, b), max(a, b))]

    out = np.zeros(grid.shape + (n, n), dtype=complex)
    for j in range(n):
        for k in range(j, n):
            out[..., j, k] = 0.25 * ((dd(2 * j, 2 * k) + dd(2 * j + 1, 2 * k + 1))
                                     + 1j * (dd(2 * j, 2 * k + 1) - dd(2 * j + 1, 2 * k)))
    return out


def complex_hessian(u: ScalarField, grid: ProductGrid) -> HermitianField:
    """
    ∂∂̄u by second-order central differences at interior nodes; boundary
    layers carry the value of the adjacent interior layer.
    """
    return HermitianField(_fill_boundary_layers(hessian_components(u, grid), grid))


def gradient_components(u: ScalarField, grid: ProductGrid) -> NDArray[np.complex128]:
    """u_j = ∂u/∂z_j = ½(∂_{x_j} − i∂_{y_j})u, shape grid.shape + (n,)."""
    flat = u.flat
    real = [(grid.first_difference(a) @ flat).reshape(grid.shape) for a in range(grid.ndim)]
    return np.stack([0.5 * (real[2 * j] - 1j * real[2 * j + 1]) for j in range(grid.n)], axis=-1)


def laplacian_and_gradient(u: ScalarField, grid: ProductGrid,
                           omega: HermitianField) -> Tuple[ScalarField, ScalarField]:
    """
    Δu = Σ ω^{jk̄}u_{jk̄} = tr(ω^{-1}∂∂̄u) and |∇u| with |∇u|² = 2ω^{jk̄}u_j u_k̄.

    Boundary Δu is the interior-limit value; boundary gradients use
    one-sided second-order differences in s.
    """
    inv = inverse_metric(omega)
    hess = complex_hessian(u, grid).matrices
    lap = np.real(np.einsum("...ij,...ji->...", inv, hess))
    grad = gradient_components(u, grid)
    sq = 2.0 * np.real(np.einsum("...i,...ij,...j->...", np.conj(grad), inv, grad))
    return ScalarField(grid, lap), ScalarField(grid, np.sqrt(np.maximum(sq, 0.0)))


def laplacian_operator(grid: ProductGrid, omega: HermitianField) -> sp.csr_matrix:
    """Sparse Δ = tr_ω i∂∂̄ (boundary rows zero)."""
    return grid.contraction_operator(np.swapaxes(inverse_metric(omega), -1, -2))


def boundary_normal_derivative(u: ScalarField, grid: ProductGrid) -> BoundaryField:
    """∂u/∂ν along the inner normal: +∂_s u at s=0, −∂_s u at s=1."""
    ds = (grid.first_difference(grid.s_axis) @ u.flat).reshape(grid.shape)
    return BoundaryField(grid, np.stack([ds[grid.s_layer(0)], -ds[grid.s_layer(grid.s_res - 1)]]))


def boundary_distance(grid: ProductGrid) -> ScalarField:
    """σ(z) = min(s, 1 − s)."""
    s = grid.coordinates["s"]
    return ScalarField(grid, np.minimum(s, 1.0 - s))


def pullback_cylinder(values: NDArray[np.float64], grid: ProductGrid) -> ScalarField:
    """π₂* of a field on the cylinder (shape (s_res, theta_res))."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.s_res, grid.theta_res):
        raise DomainError(f"cylinder field has shape {values.shape}, expected {(grid.s_res, grid.theta_res)}")
    return ScalarField(grid, np.broadcast_to(values, grid.shape))


# ============================================================================
# FIELD DUMPS
# ============================================================================

def write_field_csv(path: Union[str, Path], fields: Dict[str, ScalarField]) -> Path:
    """
    Write node_id, coordinates and one column per field, 17 significant digits.
    """
    if not fields:
        raise DomainError("no fields to write")
    grid = next(iter(fields.values())).grid
    coords = grid.coordinates
    columns = [np.arange(grid.size, dtype=float)] + [coords[name].reshape(-1) for name in grid.axis_names]
    columns += [field.flat for field in fields.values()]
    header = ",".join(["node_id", *grid.axis_names, *fields.keys()])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack(columns), delimiter=",", fmt="%.17g", header=header, comments="")
    return path


def read_field_csv(path: Union[str, Path], grid: ProductGrid, column: Optional[str] = None) -> ScalarField:
    """Read one value column (default: the last) written by ``write_field_csv``."""
    path = Path(path)
    with open(path, "r") as f:
        header = f.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.size:
        raise DomainError(f"{path} has {data.shape[0]} nodes, grid has {grid.size}")
    if column is not None and column not in header:
        raise DomainError(f"{path} has no column {column!r}")
    index = len(header) - 1 if column is None else header.index(column)
    order = data[:, 0].astype(int)
    values = np.empty(grid.size)
    values[order] = data[:, index]
    return ScalarField.from_flat(grid, values)
