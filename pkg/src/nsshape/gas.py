r"""Calorically perfect gas with constant viscosity: states, fluxes and their derivatives.

Conserved states ``u = (rho, rho v1, rho v2, rho E)`` carry the component in the
last axis.  Fluxes are arrays ``(..., 4, 2)`` with ``F[..., i, k]`` the i-th
component of the flux in direction k.  Gradients ``grad_u`` are ``(..., 4, 2)``
with ``grad_u[..., j, l] = du_j / dx_l``.

Derivative conventions

* ``convective_jacobian(u)[..., k, i, j] = d(f^c_k)_i / du_j``
* ``viscous_jacobians`` returns ``Fv_u[..., k, i, j] = d(f^v_k)_i / du_j`` at fixed
  gradient and the homogeneity tensor ``G[..., k, l, i, j] = d(f^v_k)_i / d(du_j/dx_l)``,
  so that ``f^v_k = sum_l G[k, l] @ du/dx_l``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class GasModel:
    gamma: float = 1.4
    prandtl: float = 0.72
    mu: float = 1e-3
    R: float = 1.0

    @property
    def c_v(self) -> float:
        return self.R / (self.gamma - 1.0)

    @property
    def kappa(self) -> float:
        return self.mu * self.gamma * self.c_v / self.prandtl

    @property
    def heat_coeff(self) -> float:
        """kappa / c_v = mu gamma / Pr, multiplying grad of the internal energy."""
        return self.mu * self.gamma / self.prandtl

    @classmethod
    def for_flow(cls, mach: float, reynolds: float, gamma: float = 1.4, prandtl: float = 0.72,
                 chord: float = 1.0) -> "GasModel":
        """Non-dimensional gas with rho_inf = p_inf = 1, so |v_inf| = M sqrt(gamma) and
        mu = rho_inf |v_inf| chord / Re."""
        return cls(gamma=gamma, prandtl=prandtl, mu=float(mach * np.sqrt(gamma) * chord / reynolds),
                   R=1.0)


class InadmissibleStateError(ValueError):
    pass


class Primitive(NamedTuple):
    rho: np.ndarray
    velocity: np.ndarray
    pressure: np.ndarray
    temperature: np.ndarray
    energy: np.ndarray


def pressure(u, gas: GasModel):
    return (gas.gamma - 1.0) * (u[..., 3] - 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / u[..., 0])


def primitive_from_conserved(u, gas: GasModel, check: bool = True) -> Primitive:
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    if check and np.any(~(rho > 0)):
        bad = u[~(rho > 0)]
        raise InadmissibleStateError(f"non-positive density in state(s) {bad[:3].tolist()}")
    v = u[..., 1:3] / rho[..., None]
    E = u[..., 3] / rho
    p = (gas.gamma - 1.0) * (u[..., 3] - 0.5 * rho * np.sum(v * v, axis=-1))
    if check and np.any(~(p > 0)):
        mask = ~(p > 0)
        raise InadmissibleStateError(
            f"non-positive pressure {p[mask][:3].tolist()} in state(s) {u[mask][:3].tolist()}")
    T = p / (rho * gas.R)
    return Primitive(rho, v, p, T, E)


def conserved_from_primitive(rho, velocity, p, gas: GasModel):
    rho = np.asarray(rho, float)
    v = np.asarray(velocity, float)
    p = np.asarray(p, float)
    E = p / ((gas.gamma - 1.0) * rho) + 0.5 * np.sum(v * v, axis=-1)
    return np.concatenate([rho[..., None], rho[..., None] * v, (rho * E)[..., None]], axis=-1)


def freestream_state(mach: float, alpha_deg: float, gas: GasModel):
    """rho = p = 1, speed M sqrt(gamma), flow angle alpha."""
    a = np.deg2rad(alpha_deg)
    speed = mach * np.sqrt(gas.gamma * 1.0 / 1.0)
    return conserved_from_primitive(1.0, speed * np.array([np.cos(a), np.sin(a)]), 1.0, gas)


def convective_flux(u, gas: GasModel):
    u = np.asarray(u, float)
    rho = u[..., 0]
    v = u[..., 1:3] / rho[..., None]
    p = pressure(u, gas)
    F = np.empty(u.shape + (2,))
    F[..., 0, :] = u[..., 1:3]
    F[..., 1:3, :] = u[..., 1:3, None] * v[..., None, :]
    F[..., 1, 0] += p
    F[..., 2, 1] += p
    F[..., 3, :] = (u[..., 3] + p)[..., None] * v
    return F


def convective_jacobian(u, gas: GasModel):
    """A[..., k, i, j] = d(f^c_k)_i / du_j."""
    u = np.asarray(u, float)
    g1 = gas.gamma - 1.0
    rho = u[..., 0]
    v = u[..., 1:3] / rho[..., None]
    q2 = np.sum(v * v, axis=-1)
    p = pressure(u, gas)
    H = (u[..., 3] + p) / rho
    pu = np.stack([0.5 * g1 * q2, -g1 * v[..., 0], -g1 * v[..., 1], np.full_like(rho, g1)], axis=-1)
    A = np.zeros(u.shape[:-1] + (2, 4, 4))
    for k in range(2):
        A[..., k, 0, 1 + k] = 1.0
        for i in range(2):
            # d(m_i v_k)/du = (-v_i v_k, delta_ij v_k + v_i delta_jk, 0)
            A[..., k, 1 + i, 0] = -v[..., i] * v[..., k]
            A[..., k, 1 + i, 1 + i] += v[..., k]
            A[..., k, 1 + i, 1 + k] += v[..., i]
        A[..., k, 1 + k, :] += pu
        # d(rho H v_k)/du = (e_3 + p_u) v_k + rho H dv_k/du
        A[..., k, 3, :] = pu * v[..., k, None]
        A[..., k, 3, 3] += v[..., k]
        A[..., k, 3, 0] -= H * v[..., k]
        A[..., k, 3, 1 + k] += H
    return A


def viscous_stress(grad_v, mu: float):
    """tau = mu (grad v + grad v^T - 2/3 div v I), grad_v[..., i, l] = dv_i/dx_l."""
    grad_v = np.asarray(grad_v, float)
    div = grad_v[..., 0, 0] + grad_v[..., 1, 1]
    tau = mu * (grad_v + np.swapaxes(grad_v, -1, -2))
    tau[..., 0, 0] -= mu * 2.0 / 3.0 * div
    tau[..., 1, 1] -= mu * 2.0 / 3.0 * div
    return tau


def _viscous_core(u, grad_u, gas: GasModel):
    a = 1.0 / u[..., 0]
    v = u[..., 1:3] * a[..., None]
    E = u[..., 3] * a
    Q0 = grad_u[..., 0, :]
    gv = (grad_u[..., 1:3, :] - v[..., :, None] * Q0[..., None, :]) * a[..., None, None]
    gE = (grad_u[..., 3, :] - E[..., None] * Q0) * a[..., None]
    ge = gE - np.einsum("...i,...il->...l", v, gv)
    return a, v, E, gv, gE, ge


def primitive_gradients(u, grad_u, gas: GasModel):
    """Gradients of velocity (..., 2, 2), specific total energy (..., 2),
    internal energy (..., 2) and temperature (..., 2)."""
    _, _, _, gv, gE, ge = _viscous_core(np.asarray(u, float), np.asarray(grad_u, float), gas)
    return gv, gE, ge, ge / gas.c_v


def viscous_flux(u, grad_u, gas: GasModel):
    u = np.asarray(u, float)
    grad_u = np.asarray(grad_u, float)
    _, v, _, gv, _, ge = _viscous_core(u, grad_u, gas)
    tau = viscous_stress(gv, gas.mu)
    F = np.zeros(u.shape + (2,))
    F[..., 1:3, :] = tau
    F[..., 3, :] = np.einsum("...kj,...j->...k", tau, v) + gas.heat_coeff * ge
    return F


def viscous_flux_u(u, grad_u, gas: GasModel):
    """Fv_u[..., k, i, j] = d(f^v_k)_i / du_j at fixed grad_u."""
    u = np.asarray(u, float)
    grad_u = np.asarray(grad_u, float)
    a, v, E, gv, gE, ge = _viscous_core(u, grad_u, gas)
    mu = gas.mu
    shape = u.shape[:-1]
    Q0 = grad_u[..., 0, :]
    # d v_i / du_m and dE/du_m
    v_u = np.zeros(shape + (2, 4))
    v_u[..., :, 0] = -v * a[..., None]
    v_u[..., 0, 1] = a
    v_u[..., 1, 2] = a
    E_u = np.zeros(shape + (4,))
    E_u[..., 0] = -E * a
    E_u[..., 3] = a
    ratio = np.zeros(shape + (4,))  # (da/du_m) / a
    ratio[..., 0] = -a
    gv_u = ratio[..., None, None, :] * gv[..., None] - a[..., None, None, None] * v_u[..., :, None, :] * Q0[..., None, :, None]
    gE_u = ratio[..., None, :] * gE[..., None] - a[..., None, None] * E_u[..., None, :] * Q0[..., :, None]
    ge_u = gE_u - np.einsum("...im,...il->...lm", v_u, gv) - np.einsum("...i,...ilm->...lm", v, gv_u)
    div_u = gv_u[..., 0, 0, :] + gv_u[..., 1, 1, :]
    tau = viscous_stress(gv, mu)
    tau_u = mu * (gv_u + np.swapaxes(gv_u, -2, -3))
    tau_u[..., 0, 0, :] -= mu * 2.0 / 3.0 * div_u
    tau_u[..., 1, 1, :] -= mu * 2.0 / 3.0 * div_u
    out = np.zeros(shape + (2, 4, 4))
    for k in range(2):
        out[..., k, 1:3, :] = tau_u[..., :, k, :]
        out[..., k, 3, :] = (np.einsum("...jm,...j->...m", tau_u[..., k, :, :], v)
                             + np.einsum("...j,...jm->...m", tau[..., k, :], v_u)
                             + gas.heat_coeff * ge_u[..., k, :])
    return out


def homogeneity_tensor(u, gas: GasModel):
    """G[..., k, l, i, j] with f^v_k = sum_l G[k, l] du/dx_l (f^v is linear in grad u)."""
    u = np.asarray(u, float)
    shape = u.shape[:-1]
    G = np.empty(shape + (2, 2, 4, 4))
    for j in range(4):
        for l in range(2):
            Q = np.zeros(shape + (4, 2))
            Q[..., j, l] = 1.0
            F = viscous_flux(u, Q, gas)  # (..., 4, 2)
            G[..., :, l, :, j] = np.swapaxes(F, -1, -2)
    return G


def viscous_jacobians(u, grad_u, gas: GasModel):
    return viscous_flux_u(u, grad_u, gas), homogeneity_tensor(u, gas)


def wall_homogeneity_tensor(u, gas: GasModel, atol: float = 1e-12):
    """Homogeneity tensor at a no-slip wall state (zero velocity).

    Returns G (..., 2, 2, 4, 4); raises if the state carries momentum.
    """
    u = np.asarray(u, float)
    if np.any(np.abs(u[..., 1:3]) > atol * np.maximum(1.0, np.abs(u[..., 0:1]))):
        raise InadmissibleStateError("wall homogeneity tensor requires zero momentum")
    return homogeneity_tensor(u, gas)


def llf_flux(uL, uR, n, gas: GasModel):
    """Local Lax-Friedrichs flux n . {F^c} - lambda/2 (uR - uL)."""
    FL = convective_flux(uL, gas)
    FR = convective_flux(uR, gas)
    lam = np.maximum(max_wave_speed(uL, n, gas), max_wave_speed(uR, n, gas))
    return 0.5 * np.einsum("...ik,...k->...i", FL + FR, n) - 0.5 * lam[..., None] * (uR - uL)


def max_wave_speed(u, n, gas: GasModel):
    rho = u[..., 0]
    vn = np.einsum("...k,...k->...", u[..., 1:3], n) / rho
    c = np.sqrt(gas.gamma * np.maximum(pressure(u, gas), 0.0) / rho)
    return np.abs(vn) + c


def max_wave_speed_u(u, n, gas: GasModel):
    """d(|v.n| + c)/du."""
    g1 = gas.gamma - 1.0
    rho = u[..., 0]
    v = u[..., 1:3] / rho[..., None]
    vn = np.einsum("...k,...k->...", v, n)
    p = pressure(u, gas)
    c = np.sqrt(gas.gamma * p / rho)
    q2 = np.sum(v * v, axis=-1)
    pu = np.stack([0.5 * g1 * q2, -g1 * v[..., 0], -g1 * v[..., 1], np.full_like(rho, g1)], axis=-1)
    vn_u = np.stack([-vn / rho, n[..., 0] / rho, n[..., 1] / rho, np.zeros_like(rho)], axis=-1)
    # c^2 = gamma p / rho
    c_u = gas.gamma / (2 * c)[..., None] * (pu / rho[..., None])
    c_u[..., 0] -= gas.gamma * p / (2 * c * rho**2)
    return np.sign(vn)[..., None] * vn_u + c_u


def llf_jacobians(uL, uR, n, gas: GasModel):
    """Derivatives of the LLF flux with respect to uL and uR, each (..., 4, 4)."""
    AL = np.einsum("...kij,...k->...ij", convective_jacobian(uL, gas), n)
    AR = np.einsum("...kij,...k->...ij", convective_jacobian(uR, gas), n)
    sL = max_wave_speed(uL, n, gas)
    sR = max_wave_speed(uR, n, gas)
    left = sL >= sR
    lam = np.where(left, sL, sR)
    dlam_L = np.where(left[..., None], max_wave_speed_u(uL, n, gas), 0.0)
    dlam_R = np.where(left[..., None], 0.0, max_wave_speed_u(uR, n, gas))
    jump = (uR - uL)[..., :, None]
    eye = np.eye(4)
    dL = 0.5 * AL + 0.5 * lam[..., None, None] * eye - 0.5 * jump * dlam_L[..., None, :]
    dR = 0.5 * AR - 0.5 * lam[..., None, None] * eye - 0.5 * jump * dlam_R[..., None, :]
    return dL, dR
