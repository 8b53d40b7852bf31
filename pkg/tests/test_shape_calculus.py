import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nsshape.geometry import generate_disk, generate_naca0012, mesh_area
from nsshape.geometry.mesh import edge_quadrature
from nsshape.geometry.perturb import boundary_vector_field, deform_mesh, quartic_bump
from nsshape.shape_calculus import (dirichlet_local_derivative, neumann_local_derivative,
                                    normal_material_derivative, shape_derivative_boundary,
                                    shape_derivative_volume, tangential_divergence,
                                    tangential_gradient, tangential_green_residual)


def ones(x):
    return np.ones(x.shape[:-1])


def zeros_vec(x):
    return np.zeros(x.shape)


def normal_field(x, n):
    return np.ones(x.shape[:-1])


@pytest.fixture(scope="module")
def circle_quad():
    return edge_quadrature(generate_disk(16), 8)


def test_gradient_of_normal_is_zero():
    n = np.array([[0.6, 0.8]])
    assert_allclose(tangential_gradient(n, n), 0.0, atol=1e-16)


def test_tangential_gradient_at_top_of_circle():
    assert_allclose(tangential_gradient([1.0, 0.0], [0.0, 1.0]), [1.0, 0.0])


def test_divergence_of_constant_field():
    n = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert_allclose(tangential_divergence(np.zeros((2, 2, 2)), n), 0.0)


def test_divergence_of_identity_on_circle(circle_quad):
    jac = np.broadcast_to(np.eye(2), circle_quad.x.shape + (2,))
    assert_allclose(tangential_divergence(jac, circle_quad.normal), 1.0, atol=1e-14)


def test_divergence_of_normal_is_curvature(circle_quad):
    # W = x / |x| has DW = (I - n n^T) / |x|
    x = circle_quad.x
    r = np.linalg.norm(x, axis=-1)
    nn = x / r[..., None]
    jac = (np.eye(2) - np.einsum("...i,...j->...ij", nn, nn)) / r[..., None, None]
    assert_allclose(tangential_divergence(jac, circle_quad.normal), 1.0, atol=1e-9)
    assert_allclose(circle_quad.curvature, 1.0, atol=1e-6)


def test_green_constant_f(circle_quad):
    W = lambda x: np.stack([np.sin(x[..., 0]), x[..., 0] * x[..., 1]], -1)  # noqa: E731
    jW = lambda x: np.stack([np.stack([np.cos(x[..., 0]), 0 * x[..., 0]], -1),  # noqa: E731
                             np.stack([x[..., 1], x[..., 0]], -1)], -2)
    assert abs(tangential_green_residual(circle_quad, ones, zeros_vec, W, jW)) < 1e-10


def test_green_zero_f(circle_quad):
    W = lambda x: x  # noqa: E731
    jW = lambda x: np.broadcast_to(np.eye(2), x.shape + (2,))  # noqa: E731
    zero = lambda x: np.zeros(x.shape[:-1])  # noqa: E731
    assert tangential_green_residual(circle_quad, zero, zeros_vec, W, jW) == 0.0


def _xy2():
    f = lambda x: x[..., 0]  # noqa: E731
    gf = lambda x: np.stack([np.ones_like(x[..., 0]), 0 * x[..., 0]], -1)  # noqa: E731
    W = lambda x: np.stack([x[..., 1] ** 2, 0 * x[..., 0]], -1)  # noqa: E731
    jW = lambda x: np.stack([np.stack([0 * x[..., 0], 2 * x[..., 1]], -1), np.zeros(x.shape)], -2)  # noqa: E731
    return f, gf, W, jW


def test_green_residual_converges():
    res = [abs(tangential_green_residual(edge_quadrature(generate_disk(n), 8), *_xy2())) for n in (8, 16, 32)]
    assert res[-1] <= 1e-8
    # by symmetry this pair already cancels to round-off on coarse meshes
    assert max(res) < 1e-12


def test_green_residual_generic_pair():
    # the identity holds on the discrete curve itself, so there is nothing left to converge
    f = lambda x: np.exp(x[..., 0] + 0.3 * x[..., 1])  # noqa: E731
    gf = lambda x: f(x)[..., None] * np.array([1.0, 0.3])  # noqa: E731
    W = lambda x: np.stack([x[..., 1] ** 2 + x[..., 0], x[..., 0] * x[..., 1]], -1)  # noqa: E731
    jW = lambda x: np.stack([np.stack([np.ones_like(x[..., 0]), 2 * x[..., 1]], -1),  # noqa: E731
                             np.stack([x[..., 1], x[..., 0]], -1)], -2)
    res = [abs(tangential_green_residual(edge_quadrature(generate_disk(n), 8), f, gf, W, jW)) for n in (8, 16, 32)]
    assert max(res) < 1e-12


@settings(max_examples=5, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), c=st.floats(-2, 2), k=st.integers(1, 3))
def test_green_random_pairs(a, b, c, k):
    quad = _QUAD.setdefault("q", edge_quadrature(generate_disk(32), 10))
    f = lambda x: a * x[..., 0] ** k + b * x[..., 1]  # noqa: E731
    gf = lambda x: np.stack([a * k * x[..., 0] ** (k - 1), b + 0 * x[..., 0]], -1)  # noqa: E731
    W = lambda x: np.stack([c * x[..., 1], x[..., 0] ** 2], -1)  # noqa: E731
    jW = lambda x: np.stack([np.stack([0 * x[..., 0], c + 0 * x[..., 0]], -1),  # noqa: E731
                             np.stack([2 * x[..., 0], 0 * x[..., 0]], -1)], -2)
    assert abs(tangential_green_residual(quad, f, gf, W, jW)) < 1e-8


_QUAD = {}


def test_disk_area_growth():
    m = generate_disk(32)
    assert_allclose(shape_derivative_volume(m, None, ones, normal_field), 2 * np.pi, atol=1e-8)


def test_volume_derivative_without_normal_motion():
    m = generate_disk(16)
    dj = shape_derivative_volume(m, ones, ones, lambda x, n: np.zeros(x.shape[:-1]))
    assert_allclose(dj, mesh_area(m), rtol=1e-14)
    assert shape_derivative_volume(m, None, lambda x: 0 * x[..., 0], normal_field) == 0.0


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_perimeter_growth(R):
    m = generate_disk(32, radius=R)
    assert_allclose(shape_derivative_boundary(m, None, ones, zeros_vec, normal_field), 2 * np.pi, atol=1e-8)


def test_boundary_derivative_zero_motion():
    m = generate_disk(16)
    assert shape_derivative_boundary(m, None, ones, zeros_vec, lambda x, n: 0 * x[..., 0]) == 0.0


@pytest.mark.parametrize("which", ["disk", "naca"])
def test_volume_formula_against_deformation(which):
    if which == "disk":
        m = generate_disk(16)
        V = boundary_vector_field(m, lambda x: np.stack([x[..., 0] ** 2, x[..., 1]], -1), support_radius=0.3)
    else:
        m = generate_naca0012(16, n_radial=6, first_layer=0.05)
        V = quartic_bump(m, 5)
    # the mesh domain is the fluid; its boundary includes the far field, where V = 0
    t = 1e-4
    fd = (mesh_area(deform_mesh(m, V, t)) - mesh_area(deform_mesh(m, V, -t))) / (2 * t)
    dj = shape_derivative_volume(m, None, ones, V)
    assert_allclose(dj, fd, atol=1e-6)


def test_uniform_inflation_keeps_normals():
    n = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert_allclose(normal_material_derivative(np.zeros((2, 2)), n), 0.0)


def test_normal_derivative_for_cos_theta():
    th = np.linspace(0, 2 * np.pi, 13)
    n = np.stack([np.cos(th), np.sin(th)], -1)
    t = np.stack([-np.sin(th), np.cos(th)], -1)
    # V.n = cos(theta) = x on the unit circle, so grad(V.n) = (1, 0)
    dn = normal_material_derivative(np.broadcast_to([1.0, 0.0], n.shape), n)
    assert_allclose(dn, np.sin(th)[:, None] * t, atol=1e-14)


def test_tangential_field_warns():
    n = np.array([[0.0, 1.0]])
    with pytest.warns(UserWarning):
        normal_material_derivative(np.zeros((1, 2)), n, V=np.array([[1.0, 1.0]]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        normal_material_derivative(np.zeros((1, 2)), n, V=np.array([[0.0, 2.0]]))


def test_dirichlet_derivative():
    assert dirichlet_local_derivative(2.0, 2.0, 0.3) == 0.0
    assert_allclose(dirichlet_local_derivative(0.0, 1.0, 0.1), -0.1)


def test_neumann_derivative():
    assert neumann_local_derivative(0.5, 0.0, 0.0, [1.0, 2.0], [0.0, 0.0]) == 0.0
    assert_allclose(neumann_local_derivative(0.2, 0.0, 3.0, [0.0, 0.0], [0.0, 0.0]), -0.6)
