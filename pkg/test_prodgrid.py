import numpy as np
import pytest

from src.errors import DomainError, GeometryError
from src.prodgrid import (
    BoundaryField,
    HermitianField,
    ScalarField,
    boundary_distance,
    boundary_normal_derivative,
    build_grid,
    complex_hessian,
    eigenvalues_rel,
    inverse_metric,
    laplacian_and_gradient,
    laplacian_operator,
    read_field_csv,
    write_field_csv,
)


def test_grid_counts():
    grid = build_grid(p=1, torus_res=8, s_res=8, theta_res=8)
    assert grid.shape == (8, 8, 8, 8)
    assert grid.size == 8 ** 4
    assert grid.boundary_count == 2 * 8 ** 2 * 8
    assert grid.interior_count == grid.size - grid.boundary_count
    assert grid.axis_names == ("x1", "y1", "s", "theta")


@pytest.mark.parametrize("kwargs", [dict(s_res=2), dict(s_res=3), dict(torus_res=3), dict(p=0)])
def test_grid_rejects_coarse_or_empty(kwargs):
    with pytest.raises(DomainError):
        build_grid(**kwargs)


def test_grid_p2_has_n3():
    grid = build_grid(p=2, torus_res=4, s_res=4, theta_res=4)
    assert grid.n == 3
    assert grid.axis_names == ("x1", "y1", "x2", "y2", "s", "theta")
    assert complex_hessian(ScalarField.constant(grid, 1.0), grid).n == 3


def test_coordinates_are_periodic_and_closed():
    grid = build_grid(p=1, torus_res=4, s_res=5, theta_res=4)
    np.testing.assert_allclose(grid.axes[0], [0.0, 0.25, 0.5, 0.75])
    np.testing.assert_allclose(grid.axes[grid.s_axis], [0.0, 0.25, 0.5, 0.75, 1.0])


def test_hessian_of_s_squared(small_grid):
    hess = complex_hessian(ScalarField.from_expression(small_grid, "s**2"), small_grid).matrices
    np.testing.assert_allclose(hess[..., 1, 1].real, 0.5, atol=1e-10)
    np.testing.assert_allclose(hess[..., 0, 0], 0.0, atol=1e-10)
    np.testing.assert_allclose(hess[..., 0, 1], 0.0, atol=1e-10)


def test_hessian_of_linear_function_vanishes(small_grid):
    hess = complex_hessian(ScalarField.from_expression(small_grid, "3*s - 1"), small_grid).matrices
    np.testing.assert_allclose(hess, 0.0, atol=1e-10)


def test_hessian_mixed_terms_are_hermitian():
    grid = build_grid(p=1, torus_res=8, s_res=6, theta_res=4)
    h = grid.spacing[0]
    y1 = grid.coordinates["y1"]
    hess = complex_hessian(ScalarField.from_expression(grid, "sin(2*pi*y1)*s"), grid).matrices
    expected = -0.25j * np.cos(2 * np.pi * y1) * np.sin(2 * np.pi * h) / h
    interior = grid.interior_mask
    np.testing.assert_allclose(hess[..., 0, 1][interior], expected[interior], atol=1e-10)
    np.testing.assert_allclose(hess[..., 1, 0], np.conj(hess[..., 0, 1]))


def test_hessian_converges_at_second_order():
    errors = []
    for res in (8, 16):
        grid = build_grid(p=1, torus_res=res, s_res=4, theta_res=4)
        u = ScalarField.from_expression(grid, "cos(2*pi*x1)")
        hess = complex_hessian(u, grid).matrices[..., 0, 0].real
        exact = -np.pi ** 2 * np.cos(2 * np.pi * grid.coordinates["x1"])
        errors.append(np.max(np.abs(hess - exact)))
    assert 3.5 < errors[0] / errors[1] < 4.5


@pytest.mark.parametrize(
    "g, omega, expected",
    [
        (np.eye(2), np.eye(2), [1.0, 1.0]),
        (np.diag([1.0, 7.0]), np.eye(2), [1.0, 7.0]),
        (np.diag([2.0, 3.0]), np.diag([2.0, 1.0]), [1.0, 3.0]),
    ],
)
def test_eigenvalues_rel_examples(g, omega, expected):
    lam = eigenvalues_rel(HermitianField.constant(g), HermitianField.constant(omega))
    np.testing.assert_allclose(lam, expected)


def test_eigenvalues_rel_equal_metric_gives_ones(small_grid, rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    omega = HermitianField.constant(a @ a.conj().T + np.eye(2))
    np.testing.assert_allclose(eigenvalues_rel(omega, omega), 1.0, atol=1e-12)


def test_indefinite_metric_raises():
    with pytest.raises(GeometryError):
        inverse_metric(HermitianField.constant(np.diag([1.0, -1.0])))


def test_hermitian_field_reads_upper_triangle():
    field = HermitianField.constant(np.array([[1.0, 2 + 1j], [99.0, 3.0]]))
    np.testing.assert_array_equal(field.matrices, [[1.0, 2 + 1j], [2 - 1j, 3.0]])
    assert field.is_constant
    with pytest.raises(DomainError):
        HermitianField.constant(np.ones((1, 1)))


def test_laplacian_and_gradient_examples(small_grid, identity2):
    lap, grad = laplacian_and_gradient(ScalarField.from_expression(small_grid, "2*s**2 - 2*s"), small_grid, identity2)
    np.testing.assert_allclose(lap.values, 1.0, atol=1e-10)

    lap, grad = laplacian_and_gradient(ScalarField.constant(small_grid, 4.0), small_grid, identity2)
    np.testing.assert_allclose(lap.values, 0.0, atol=1e-12)
    np.testing.assert_allclose(grad.values, 0.0, atol=1e-12)

    _, grad = laplacian_and_gradient(ScalarField.from_expression(small_grid, "s"), small_grid, identity2)
    np.testing.assert_allclose(grad.values, np.sqrt(0.5), atol=1e-10)


def test_laplacian_operator_matches_field_laplacian(small_grid):
    omega = HermitianField.constant(np.array([[2.0, 0.5j], [-0.5j, 1.0]]))
    u = ScalarField.from_expression(small_grid, "cos(2*pi*x1)*s + s**2*sin(2*pi*theta)")
    lap, _ = laplacian_and_gradient(u, small_grid, omega)
    applied = (laplacian_operator(small_grid, omega) @ u.flat).reshape(small_grid.shape)
    interior = small_grid.interior_mask
    np.testing.assert_allclose(applied[interior], lap.values[interior], atol=1e-9)
    np.testing.assert_allclose(applied[small_grid.boundary_mask], 0.0)


@pytest.mark.parametrize(
    "expr, lower, upper",
    [
        ("s", 1.0, -1.0),
        ("2*s**2 - 2*s", -2.0, -2.0),
        ("5", 0.0, 0.0),
    ],
)
def test_boundary_normal_derivative_examples(small_grid, expr, lower, upper):
    normal = boundary_normal_derivative(ScalarField.from_expression(small_grid, expr), small_grid)
    np.testing.assert_allclose(normal.lower, lower, atol=1e-10)
    np.testing.assert_allclose(normal.upper, upper, atol=1e-10)


def test_cylinder_laplacian_is_exact_on_quadratics():
    cylinder = build_grid(p=1, torus_res=4, s_res=9, theta_res=4).cylinder()
    h = 2 * cylinder.s * (cylinder.s - 1)
    applied = (cylinder.laplacian @ np.repeat(h, cylinder.theta_res)).reshape(cylinder.shape)
    np.testing.assert_allclose(applied[1:-1], 1.0, atol=1e-10)
    np.testing.assert_allclose(applied[[0, -1]], 0.0)


def test_boundary_distance(small_grid):
    sigma = boundary_distance(small_grid)
    assert sigma.values.min() == 0.0
    assert sigma.values.max() <= 0.5


def test_scalar_field_validation(small_grid):
    with pytest.raises(DomainError):
        ScalarField(small_grid, np.full(small_grid.shape, np.nan))
    with pytest.raises(DomainError):
        ScalarField(small_grid, np.zeros(7))
    with pytest.raises(DomainError):
        ScalarField.from_expression(small_grid, "z + 1")


def test_scalar_field_arithmetic(small_grid):
    u = ScalarField.from_expression(small_grid, "s")
    v = 2.0 * u + 1.0 - u
    np.testing.assert_allclose(v.values, small_grid.coordinates["s"] + 1.0)
    assert not v.values.flags.writeable


def test_boundary_field_layers(small_grid):
    phi = BoundaryField.constant(small_grid, 0.0, 2.0)
    assert phi.values.shape == small_grid.boundary_shape
    np.testing.assert_allclose(phi.upper, 2.0)
    u = ScalarField.from_expression(small_grid, "2*s")
    np.testing.assert_allclose(u.boundary().values, phi.values)


def test_field_csv_dump(tmp_path, small_grid):
    u = ScalarField.from_expression(small_grid, "cos(2*pi*x1) + s/3")
    path = write_field_csv(tmp_path / "u.csv", {"u": u})
    header = path.read_text().splitlines()[0]
    assert header == "node_id,x1,y1,s,theta,u"
    np.testing.assert_array_equal(read_field_csv(path, small_grid, "u").values, u.values)
    with pytest.raises(DomainError):
        read_field_csv(path, small_grid, "missing")
    with pytest.raises(DomainError):
        read_field_csv(path, build_grid(p=1, torus_res=4, s_res=6, theta_res=4))
