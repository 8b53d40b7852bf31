import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nsshape import gas as G
from nsshape.gas import GasModel, InadmissibleStateError

from conftest import random_states

GAS = GasModel(mu=0.013)


def central(f, u, h=1e-6):
    cols = []
    for j in range(u.shape[-1]):
        du = np.zeros_like(u)
        du[..., j] = h
        cols.append((f(u + du) - f(u - du)) / (2 * h))
    return np.stack(cols, axis=-1)


def test_pressure_of_unit_state():
    # rho = 1, v = 0, rho E = 2.5 -> p = 0.4 * 2.5 = 1
    u = np.array([1.0, 0.0, 0.0, 2.5])
    assert G.pressure(u, GAS) == pytest.approx(1.0, abs=1e-15)


def test_primitive_roundtrip(rng):
    u = random_states(rng, 50, GAS)
    prim = G.primitive_from_conserved(u, GAS)
    back = G.conserved_from_primitive(prim.rho, prim.velocity, prim.pressure, GAS)
    assert_allclose(back, u, rtol=1e-14)
    assert_allclose(prim.temperature, prim.pressure / prim.rho, rtol=1e-15)


@pytest.mark.parametrize("u", [[-1.0, 0, 0, 2.5], [1.0, 0, 0, -0.1], [1.0, 3.0, 0, 1.0]])
def test_inadmissible_states_raise(u):
    with pytest.raises(InadmissibleStateError):
        G.primitive_from_conserved(np.array(u), GAS)


def test_convective_jacobian_matches_fd(rng):
    u = random_states(rng, 100, GAS)
    A = G.convective_jacobian(u, GAS)
    fd = central(lambda w: np.swapaxes(G.convective_flux(w, GAS), -1, -2), u)
    assert np.max(np.abs(A - fd)) / np.max(np.abs(A)) < 1e-6


def test_viscous_flux_u_matches_fd(rng):
    u = random_states(rng, 100, GAS)
    Q = rng.normal(size=(100, 4, 2))
    Fu = G.viscous_flux_u(u, Q, GAS)
    fd = central(lambda w: np.swapaxes(G.viscous_flux(w, Q, GAS), -1, -2), u)
    assert np.max(np.abs(Fu - fd)) / np.max(np.abs(Fu)) < 1e-6


def test_homogeneity_tensor_reproduces_flux(rng):
    u = random_states(rng, 20, GAS)
    Q = rng.normal(size=(20, 4, 2))
    Gt = G.homogeneity_tensor(u, GAS)
    F = np.einsum("nklij,njl->nik", Gt, Q)
    assert_allclose(F, G.viscous_flux(u, Q, GAS), atol=1e-14)


def test_wall_homogeneity_matrices():
    rho, E = 1.3, 2.1
    u = np.array([rho, 0.0, 0.0, rho * E])
    Gw = G.wall_homogeneity_tensor(u, GAS)
    c = GAS.mu / rho
    gp = GAS.gamma / GAS.prandtl
    G11 = c * np.array([[0, 0, 0, 0], [0, 4 / 3, 0, 0], [0, 0, 1, 0], [-gp * E, 0, 0, gp]])
    G12 = c * np.array([[0, 0, 0, 0], [0, 0, -2 / 3, 0], [0, 1, 0, 0], [0, 0, 0, 0]])
    G21 = c * np.array([[0, 0, 0, 0], [0, 0, 1, 0], [0, -2 / 3, 0, 0], [0, 0, 0, 0]])
    G22 = c * np.array([[0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 4 / 3, 0], [-gp * E, 0, 0, gp]])
    for (k, l), M in {(0, 0): G11, (0, 1): G12, (1, 0): G21, (1, 1): G22}.items():
        assert np.max(np.abs(Gw[k, l] - M)) <= 1e-14


def test_wall_tensor_rejects_moving_state():
    with pytest.raises(InadmissibleStateError):
        G.wall_homogeneity_tensor(np.array([1.0, 0.1, 0.0, 2.5]), GAS)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_viscous_stress_symmetric_traceless(vals):
    gv = np.array(vals).reshape(2, 2)
    tau = G.viscous_stress(gv, 1.7)
    assert_allclose(tau, tau.T, atol=1e-14)
    # 2D with the 2/3 factor: trace = 2 mu div v (1 - 2/3)
    assert np.trace(tau) == pytest.approx(1.7 * (2 - 4 / 3) * np.trace(gv), abs=1e-12)


@settings(max_examples=50)
@given(st.floats(0.3, 3.0), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.3, 3.0),
       st.floats(0, 2 * np.pi))
def test_llf_consistency(rho, v1, v2, p, ang):
    u = G.conserved_from_primitive(rho, np.array([v1, v2]), p, GAS)
    n = np.array([np.cos(ang), np.sin(ang)])
    assert_allclose(G.llf_flux(u, u, n, GAS), G.convective_flux(u, GAS) @ n, rtol=1e-13, atol=1e-13)


def test_llf_jacobians_match_fd(rng):
    uL = random_states(rng, 30, GAS)
    uR = uL * (1 + 0.05 * rng.normal(size=uL.shape))
    ang = rng.uniform(0, 2 * np.pi, 30)
    n = np.stack([np.cos(ang), np.sin(ang)], -1)
    dL, dR = G.llf_jacobians(uL, uR, n, GAS)
    fdL = central(lambda w: G.llf_flux(w, uR, n, GAS), uL, 1e-7)
    fdR = central(lambda w: G.llf_flux(uL, w, n, GAS), uR, 1e-7)
    assert np.max(np.abs(dL - fdL)) < 1e-6 * np.max(np.abs(dL))
    assert np.max(np.abs(dR - fdR)) < 1e-6 * np.max(np.abs(dR))


def test_freestream_state():
    gas = GasModel.for_flow(0.5, 5000.0)
    prim = G.primitive_from_conserved(G.freestream_state(0.5, 0.0, gas), gas)
    c = np.sqrt(gas.gamma * prim.pressure / prim.rho)
    assert np.linalg.norm(prim.velocity) / c == pytest.approx(0.5, rel=1e-14)
    assert gas.mu == pytest.approx(0.5 * np.sqrt(1.4) / 5000.0)
