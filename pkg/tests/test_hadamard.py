import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nsshape.adjoint import solve_adjoint
from nsshape.dg.space import DGSpace
from nsshape.gas import conserved_from_primitive
from nsshape.geometry.perturb import PerturbationField, quartic_bump
from nsshape.hadamard import (MODES, ConfigurationError, adjoint_stress, edge_bump_pairings,
                              gradient_density, momentum_identity_residual, pair_with_field,
                              preliminary_gradient, wall_points, write_gradient_csv)
from nsshape.mms import injected_wall_density, no_slip_wall_solution


@pytest.fixture(scope="module")
def density(small_flow):
    case, objs = small_flow
    z = solve_adjoint(case.disc, case.U, objs["drag"], case.lu)
    wp = wall_points(case.mesh, 8)
    return gradient_density(case.space, case.U, case.space, z, case.gas, wp=wp)


def test_zero_adjoint_gives_zero_density(small_flow):
    case, _ = small_flow
    d = gradient_density(case.space, case.U, case.space, np.zeros_like(case.U), case.gas)
    for mode in MODES:
        assert np.all(d.density(mode) == 0.0)


def test_modes_differ_by_framed_terms(density):
    assert_allclose(density.variational - density.pointwise, density.framed, atol=1e-15)
    with pytest.raises(ValueError):
        density.density("hybrid")


def test_adiabatic_wall_needs_p2(small_flow):
    case, _ = small_flow
    low = DGSpace(case.mesh, 1)
    U = np.zeros((case.space.n_elements, 4, 4))
    with pytest.raises(ConfigurationError):
        gradient_density(low, U, low, U, case.gas)


def test_pairing_is_linear(small_flow, density):
    case, _ = small_flow
    a, b = quartic_bump(case.mesh, 3), quartic_bump(case.mesh, 4, amplitude=0.5)
    both = PerturbationField(a.node_values + b.node_values, a.support_radius)
    g = density.variational
    wp = density.points
    assert_allclose(pair_with_field(g, wp, case.mesh, both),
                    pair_with_field(g, wp, case.mesh, a) + pair_with_field(g, wp, case.mesh, b), rtol=1e-12)
    assert pair_with_field(g, wp, case.mesh, quartic_bump(case.mesh, 3, amplitude=0.0)) == 0.0


def test_bump_pairing_close_to_exact_profile(small_flow, density):
    # pairing with the interpolated field vs with the exact quartic profile
    case, _ = small_flow
    g = density.pointwise
    exact = edge_bump_pairings(g, density.points)
    interp = [pair_with_field(g, density.points, case.mesh, quartic_bump(case.mesh, k)) for k in range(4)]
    assert_allclose(interp, exact[:4], rtol=1e-3, atol=1e-6 * np.abs(exact).max())


def test_adjoint_stress_example():
    gz = np.zeros((4, 2))
    gz[1] = [0.0, 1.0]  # d z2 / dy = 1
    assert_allclose(adjoint_stress(gz, 1.0), [[0.0, 1.0], [1.0, 0.0]])
    assert np.all(adjoint_stress(np.zeros((4, 2)), 1.0) == 0.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=8, max_size=8), st.floats(0.001, 2.0))
def test_adjoint_stress_symmetric(vals, mu):
    S = adjoint_stress(np.array(vals).reshape(4, 2), mu)
    assert np.abs(S - S.T).max() <= 1e-14 * max(1.0, np.abs(S).max())


def test_framed_terms_vanish_for_exact_field():
    sol = no_slip_wall_solution()
    framed = []
    for p in (2, 3, 4):
        d = injected_wall_density(sol, p)
        framed.append(d.points.integrate(np.abs(d.framed)))
        assert_allclose(d.variational - d.pointwise, d.framed, atol=1e-15)
    assert framed[0] > framed[1] > framed[2]
    assert framed[2] < 0.05 * framed[0]


def test_momentum_identity_for_wall_field():
    from nsshape.geometry import generate_rectangle
    from nsshape.geometry.mesh import edge_quadrature

    sol = no_slip_wall_solution()
    mesh = generate_rectangle(2, degree=4)
    wp = edge_quadrature(mesh, 6, edges=np.array([0, 2]))
    res = []
    for p in (2, 3, 4):
        space = DGSpace(mesh, p)
        res.append(np.abs(momentum_identity_residual(space, space.project(sol.state), sol.gas, wp)).max())
    assert res[2] < res[1] < res[0]
    # a state at rest satisfies the identity exactly
    space = DGSpace(mesh, 2)
    rest = space.constant(conserved_from_primitive(np.array(1.2), np.zeros(2), np.array(0.7), sol.gas))
    assert np.abs(momentum_identity_residual(space, rest, sol.gas, wp)).max() < 1e-14


def test_preliminary_gradient_vanishes_at_rest(small_flow):
    case, objs = small_flow
    V = quartic_bump(case.mesh, 5)
    rest = case.space.constant(conserved_from_primitive(np.array(1.0), np.zeros(2), np.array(0.8), case.gas))
    wp = wall_points(case.mesh, 8)
    dj = preliminary_gradient(case.space, rest, (case.space, rest), (case.space, rest), V, 1e-4, case.gas,
                              objs["drag"].direction, 1.0, wp)
    assert abs(dj) < 1e-12


def test_gradient_csv(tmp_path, density):
    path = tmp_path / "g.csv"
    write_gradient_csv(path, density, config_hash="abc", objective="drag")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_hash abc"
    rows = list(csv.DictReader(lines[2:]))
    assert list(rows[0]) == ["edge_id", "s", "x", "y", "g_pointwise", "g_variational", "g_framed_terms"]
    assert len(rows) == density.pointwise.size
    assert_allclose([float(r["g_framed_terms"]) for r in rows], density.framed.ravel(), rtol=1e-15)
