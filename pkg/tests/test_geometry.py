import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from nsshape.basis import embed_coefficients, gauss_legendre, legendre_1d, tensor_gauss
from nsshape.geometry import (AirfoilGeometry, BoundaryTag, InvalidMeshError, edge_integral,
                              generate_disk, generate_naca0012, generate_rectangle, mesh_area,
                              surface_frame)
from nsshape.geometry.mesh import edge_quadrature
from nsshape.geometry.meshio import load_mesh, save_mesh
from nsshape.geometry.perturb import (DeformationError, boundary_vector_field, deform_mesh,
                                      quartic_bump, quartic_bump_profile)


@pytest.fixture(scope="module")
def naca():
    return generate_naca0012(16, n_radial=6, first_layer=0.05)


@pytest.fixture(scope="module")
def disk():
    return generate_disk(16, degree=4)


def min_jacobian(mesh, n=6):
    pts, _ = tensor_gauss(n)
    _, jac, _ = mesh.map_points(pts)
    return (jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]).min()


# -- basis ---------------------------------------------------------------

def test_legendre_orthonormal():
    x, w = gauss_legendre(10)
    P = legendre_1d(5, x)[0]
    assert_allclose(P.T @ (w[:, None] * P), np.eye(6), atol=1e-13)


def test_legendre_derivative_matches_fd():
    x = np.linspace(-0.9, 0.9, 7)
    h = 1e-6
    P = legendre_1d(4, x)
    fd = (legendre_1d(4, x + h)[0] - legendre_1d(4, x - h)[0]) / (2 * h)
    assert_allclose(P[1], fd, atol=1e-7)


def test_embedding_keeps_polynomial():
    rng = np.random.default_rng(0)
    U = rng.normal(size=(3, 9, 4))
    V = embed_coefficients(U, 2, 4)
    assert V.shape == (3, 25, 4)
    assert_allclose(embed_coefficients(V, 4, 2), U)


# -- airfoil ---------------------------------------------------------------

def test_thickness_zero_at_leading_edge():
    assert AirfoilGeometry().thickness(0.0) == 0.0


def test_closed_trailing_edge_thickness():
    # oracle: 0.6 * (a0 + a1 + a2 + a3 + a4) with the closed-TE last coefficient
    foil = AirfoilGeometry(closed_te=True)
    assert abs(float(foil.thickness(1.0))) < 1e-15
    open_te = AirfoilGeometry(closed_te=False)
    assert_allclose(float(open_te.thickness(1.0)), 0.6 * (0.2969 - 0.1260 - 0.3516 + 0.2843 - 0.1015))


def test_thickness_outside_chord_raises():
    with pytest.raises(ValueError):
        AirfoilGeometry().thickness(1.2)


# -- generation ---------------------------------------------------------------

def test_paper_sized_wall():
    m = generate_naca0012(40, n_radial=4, first_layer=0.05)
    assert m.wall_edges.size == 40
    assert m.degree == 4
    # every wall edge has q+1 geometry nodes
    from nsshape.geometry.mesh import face_node_indices
    e, f, _ = m.boundary[m.wall_edges[0]]
    assert face_node_indices(m.degree, f).size == 5


@pytest.mark.parametrize("kwargs", [dict(n_wall_edges=6), dict(farfield_radius=5.0), dict(degree=5),
                                    dict(degree=0)])
def test_generator_rejects_bad_input(kwargs):
    with pytest.raises(ValueError):
        generate_naca0012(**kwargs)


def test_generated_jacobians_positive(naca):
    assert min_jacobian(naca) > 0


def test_tags_partition_boundary(naca):
    tags = naca.tags
    assert set(np.unique(tags)) == {int(BoundaryTag.WALL_ADIA), int(BoundaryTag.FARFIELD)}
    walls = naca.wall_edges
    assert_array_equal(walls, np.arange(walls.size))


def test_wall_normal_points_into_body(naca):
    # at the leading edge the body lies in +x
    q = edge_quadrature(naca, 4)
    k = np.argmin(q.x[..., 0].min(axis=1))
    j = np.argmin(q.x[k, :, 0])
    assert q.normal[k, j, 0] > 0.9


def test_inverted_mesh_is_rejected(naca):
    nodes = naca.nodes.copy()
    e0 = naca.elements[0]
    nodes[e0[6]] += 3.0  # drag an interior node far outside its element
    with pytest.raises(InvalidMeshError, match="element"):
        naca.with_nodes(nodes)


# -- frames ---------------------------------------------------------------

def test_circle_curvature():
    m = generate_disk(16, degree=4, radius=2.0)
    for k in m.wall_edges[:4]:
        fr = surface_frame(m, int(k), np.linspace(-1, 1, 9))
        assert_allclose(fr.curvature, 0.5, atol=1e-6)


def test_straight_edge_has_zero_curvature():
    m = generate_rectangle(2, degree=4)
    fr = surface_frame(m, 0, np.linspace(-1, 1, 5))
    assert np.all(fr.curvature == 0.0)


def test_frame_orthonormal(naca):
    q = edge_quadrature(naca, 6)
    assert_allclose(np.linalg.norm(q.normal, axis=-1), 1.0, atol=1e-12)
    assert_allclose(np.sum(q.normal * q.tangent, axis=-1), 0.0, atol=1e-12)


@pytest.mark.parametrize("n", [8, 16, 32])
def test_unit_circle_length(n):
    m = generate_disk(n, degree=4)
    assert abs(edge_integral(m, lambda fr: np.ones_like(fr.ds)) - 2 * np.pi) < 1e-8 * (32 / n) ** 4 + 1e-8


def test_disk_area(disk):
    assert_allclose(mesh_area(disk), np.pi, atol=1e-8)


def test_arclength_accumulates(naca):
    q = edge_quadrature(naca, 4)
    s = q.arclength.ravel()
    assert np.all(np.diff(s) > 0)
    total = edge_integral(naca, lambda fr: np.ones_like(fr.ds))
    assert s[-1] < total


# -- mesh IO ---------------------------------------------------------------

def test_mesh_round_trip(tmp_path, naca):
    path = tmp_path / "m.txt"
    save_mesh(naca, path, config_hash="abc")
    back = load_mesh(path)
    assert_array_equal(back.nodes, naca.nodes)
    assert_array_equal(back.elements, naca.elements)
    assert_array_equal(back.boundary, naca.boundary)
    assert back.content_hash == naca.content_hash


def test_load_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("hello\n")
    with pytest.raises(ValueError):
        load_mesh(p)


# -- perturbations ---------------------------------------------------------------

def test_bump_profile_values():
    assert quartic_bump_profile(0.0) == 0.0
    assert quartic_bump_profile(1.0) == 0.0
    assert quartic_bump_profile(0.5) == 1.0
    h = 1e-7
    for x0 in (0.0, 1.0):
        slope = (quartic_bump_profile(x0 + h) - quartic_bump_profile(x0 - h)) / (2 * h)
        assert abs(slope) < 1e-6


def test_bump_confined_to_edge(naca):
    V = quartic_bump(naca, 3, amplitude=0.2)
    # exact at the geometry nodes; between them V is the degree-q interpolant of B n
    nodes = np.linspace(-1, 1, naca.degree + 1)
    assert_allclose(V.normal_velocity(naca, 3, nodes), 0.2 * quartic_bump_profile((nodes + 1) / 2), atol=1e-14)
    s = np.linspace(-1, 1, 11)
    assert_allclose(V.normal_velocity(naca, 3, s), 0.2 * quartic_bump_profile((s + 1) / 2), atol=1e-5)
    for k in naca.wall_edges:
        if k != 3:
            assert_allclose(V.normal_velocity(naca, int(k), s), 0.0, atol=1e-14)


def test_bump_on_farfield_edge_raises(naca):
    far = int(np.flatnonzero(naca.tags == BoundaryTag.FARFIELD)[0])
    with pytest.raises(ValueError):
        quartic_bump(naca, far)


def test_support_radius_must_clear_farfield(naca):
    with pytest.raises(ValueError):
        quartic_bump(naca, 0, support_radius=50.0)


def test_field_vanishes_outside_support(naca):
    V = quartic_bump(naca, 5, support_radius=0.4)
    from nsshape.geometry.perturb import closest_wall_points
    dist = closest_wall_points(naca, naca.nodes)[0]
    assert np.all(V.node_values[dist >= 0.4] == 0.0)


def test_deform_zero_is_identity(naca):
    V = quartic_bump(naca, 2)
    assert_array_equal(deform_mesh(naca, V, 0.0).nodes, naca.nodes)


def test_deform_round_trip(naca):
    V = quartic_bump(naca, 4, amplitude=1.0)
    there = deform_mesh(naca, V, 1e-3)
    back = deform_mesh(there, V, -1e-3)
    assert_allclose(back.nodes, naca.nodes, atol=1e-12)
    assert min_jacobian(there) > 0


def test_disk_normal_field_scales_radius():
    m = generate_disk(16)
    V = boundary_vector_field(m, lambda x: x / np.linalg.norm(x, axis=-1, keepdims=True), support_radius=0.3)
    moved = deform_mesh(m, V, 0.1)
    from nsshape.geometry.mesh import face_node_indices
    for k in m.wall_edges:
        e, f, _ = m.boundary[k]
        idx = m.elements[e, face_node_indices(m.degree, f)]
        assert_allclose(np.linalg.norm(moved.nodes[idx], axis=-1), 1.1, atol=1e-12)


def test_tangential_field_keeps_wall(naca):
    V = quartic_bump(naca, 6, amplitude=0.0)
    moved = deform_mesh(naca, V, 0.3)
    assert_array_equal(moved.nodes, naca.nodes)


def test_inversion_reports_admissible_t(naca):
    V = quartic_bump(naca, 0, amplitude=1.0)
    with pytest.raises(DeformationError) as info:
        deform_mesh(naca, V, 5.0)
    assert 0 < info.value.max_admissible_t < 5.0


@settings(max_examples=15, deadline=None)
@given(t=st.floats(-2e-3, 2e-3), edge=st.integers(0, 15))
def test_small_deformations_stay_valid(t, edge):
    m = _cached_mesh()
    V = quartic_bump(m, edge)
    assert min_jacobian(deform_mesh(m, V, t), n=3) > 0


_MESH = {}


def _cached_mesh():
    if "m" not in _MESH:
        _MESH["m"] = generate_naca0012(16, n_radial=6, first_layer=0.05)
    return _MESH["m"]
