r"""Hadamard-form shape gradients of wall force coefficients.

At a no-slip wall with normal n pointing into the body,

    g = dv/dn . (Sigma n) + dv/dn . (rho n z1 + (rho H n - tau n) z4)
        + [iso]  dT/dn kappa (n . grad z4)
        - [adia] (d2T/dn2 kappa z4 + div_Gamma(kappa z4 grad T))

with the adjoint stress Sigma = mu (grad z_{2,3} + grad z_{2,3}^T - 2/3 div z_{2,3} I).
Differentiating the weak form of the equations adds the strong-residual terms

    framed = - rho (div v) z1 - [adia] (rho H div v - tau : grad v - kappa Lap T) z4,

which vanish for an exact solution.  "pointwise" uses g, "variational" uses
g + framed; dJ(V) = \int (V . n) g ds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gas as G
from .basis import face_points
from .dg.space import DGSpace
from .geometry.mesh import BoundaryTag, EdgeQuadrature, edge_quadrature

MODES = ("pointwise", "variational")


class ConfigurationError(ValueError):
    pass


WallPoints = EdgeQuadrature


def wall_points(mesh, n_points: int = 8) -> EdgeQuadrature:
    return edge_quadrature(mesh, n_points)


def trace_derivatives(space: DGSpace, U, wp: WallPoints):
    """Interior trace values, gradients and Hessians at wall points: (F, P, m, ...)."""
    mesh = space.mesh
    F, P = wp.x.shape[:2]
    m = U.shape[-1]
    u = np.empty((F, P, m))
    g = np.empty((F, P, m, 2))
    H = np.empty((F, P, m, 2, 2))
    e_all = mesh.boundary[wp.edges, 0]
    f_all = mesh.boundary[wp.edges, 1]
    for f in range(4):
        sel = np.flatnonzero(f_all == f)
        if sel.size == 0:
            continue
        uu, gg, hh, _ = space.evaluate_at(U, face_points(f, wp.s), e_all[sel])
        u[sel], g[sel], H[sel] = uu, gg, hh
    return u, g, H


def _state_function_derivs(u, gas):
    """Derivatives of T(u) and of v_i(u): first (…, 4) and second (…, 4, 4)."""
    r, m1, m2, e = u[..., 0], u[..., 1], u[..., 2], u[..., 3]
    cv = gas.c_v
    q = m1 * m1 + m2 * m2
    T_u = np.stack([-e / r**2 + q / r**3, -m1 / r**2, -m2 / r**2, 1.0 / r], -1) / cv
    T_uu = np.zeros(u.shape + (4,))
    T_uu[..., 0, 0] = 2 * e / r**3 - 3 * q / r**4
    T_uu[..., 0, 1] = T_uu[..., 1, 0] = 2 * m1 / r**3
    T_uu[..., 0, 2] = T_uu[..., 2, 0] = 2 * m2 / r**3
    T_uu[..., 0, 3] = T_uu[..., 3, 0] = -1 / r**2
    T_uu[..., 1, 1] = T_uu[..., 2, 2] = -1 / r**2
    T_uu /= cv
    v_u = np.zeros(u.shape[:-1] + (2, 4))
    v_uu = np.zeros(u.shape[:-1] + (2, 4, 4))
    for i, mi in enumerate((m1, m2)):
        v_u[..., i, 0] = -mi / r**2
        v_u[..., i, 1 + i] = 1 / r
        v_uu[..., i, 0, 0] = 2 * mi / r**3
        v_uu[..., i, 0, 1 + i] = v_uu[..., i, 1 + i, 0] = -1 / r**2
    return T_u, T_uu, v_u, v_uu


def _chain(f_u, f_uu, g, H):
    """Gradient and Hessian of f(u(x)) from u's gradient g (…,4,2) and Hessian H (…,4,2,2)."""
    grad = np.einsum("...j,...jl->...l", f_u, g)
    hess = np.einsum("...j,...jab->...ab", f_u, H) + np.einsum("...jk,...ja,...kb->...ab", f_uu, g, g)
    return grad, hess


@dataclass
class WallFields:
    """Primitive quantities and derivatives at wall points."""

    rho: np.ndarray
    v: np.ndarray
    p: np.ndarray
    rhoH: np.ndarray
    grad_v: np.ndarray       # (…, 2, 2) dv_i/dx_l
    hess_v: np.ndarray       # (…, 2, 2, 2)
    grad_T: np.ndarray
    hess_T: np.ndarray
    grad_p: np.ndarray
    tau: np.ndarray


def wall_fields(u, g, H, gas) -> WallFields:
    T_u, T_uu, v_u, v_uu = _state_function_derivs(u, gas)
    gT, HT = _chain(T_u, T_uu, g, H)
    gv = np.empty(u.shape[:-1] + (2, 2))
    Hv = np.empty(u.shape[:-1] + (2, 2, 2))
    for i in range(2):
        gv[..., i, :], Hv[..., i, :, :] = _chain(v_u[..., i, :], v_uu[..., i, :, :], g, H)
    rho = u[..., 0]
    v = u[..., 1:3] / rho[..., None]
    p = G.pressure(u, gas)
    g1 = gas.gamma - 1.0
    p_u = np.stack([0.5 * g1 * np.sum(v * v, -1), -g1 * v[..., 0], -g1 * v[..., 1], np.full_like(rho, g1)], -1)
    gp = np.einsum("...j,...jl->...l", p_u, g)
    tau = G.viscous_stress(gv, gas.mu)
    return WallFields(rho, v, p, u[..., 3] + p, gv, Hv, gT, HT, gp, tau)


@dataclass
class GradientDensity:
    pointwise: np.ndarray
    variational: np.ndarray
    framed: np.ndarray
    points: WallPoints

    def density(self, mode: str) -> np.ndarray:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        return self.pointwise if mode == "pointwise" else self.variational


def gradient_density(flow_space: DGSpace, U, adj_space: DGSpace, z, gas: G.GasModel,
                     n_points: int = 8, wp: WallPoints | None = None) -> GradientDensity:
    """Pointwise and variational gradient densities at wall quadrature points."""
    mesh = flow_space.mesh
    wp = wp or wall_points(mesh, n_points)
    tags = wp.tags
    adia = (tags == BoundaryTag.WALL_ADIA)[:, None]
    iso = (tags == BoundaryTag.WALL_ISO)[:, None]
    if np.any(adia) and flow_space.p < 2:
        raise ConfigurationError("adiabatic-wall gradients need second derivatives of T: use p >= 2")
    u, g, H = trace_derivatives(flow_space, U, wp)
    zz, gz, _ = trace_derivatives(adj_space, z, wp)
    f = wall_fields(u, g, H, gas)
    n, t = wp.normal, wp.tangent
    kappa = gas.kappa
    dvdn = np.einsum("...il,...l->...i", f.grad_v, n)
    Sigma = G.viscous_stress(gz[..., 1:3, :], gas.mu)
    z1, z4 = zz[..., 0], zz[..., 3]
    gz4 = gz[..., 3, :]
    tau_n = np.einsum("...ij,...j->...i", f.tau, n)
    g_pw = np.einsum("...i,...ij,...j->...", dvdn, Sigma, n)
    g_pw += np.einsum("...i,...i->...", dvdn, f.rho[..., None] * n * z1[..., None]
                      + (f.rhoH[..., None] * n - tau_n) * z4[..., None])
    dTdn = np.einsum("...l,...l->...", f.grad_T, n)
    ndz4 = np.einsum("...l,...l->...", gz4, n)
    # isothermal: - d(T_W - T)/dn kappa n.grad z4 with T_W constant
    g_pw += np.where(iso, dTdn * kappa * ndz4, 0.0)
    Tnn = np.einsum("...a,...ab,...b->...", n, f.hess_T, n)
    Ttt = np.einsum("...a,...ab,...b->...", t, f.hess_T, t)
    div_gamma = kappa * (np.einsum("...l,...l->...", gz4, t) * np.einsum("...l,...l->...", f.grad_T, t) + z4 * Ttt)
    g_pw -= np.where(adia, Tnn * kappa * z4 + div_gamma, 0.0)
    div_v = f.grad_v[..., 0, 0] + f.grad_v[..., 1, 1]
    tau_grad_v = np.einsum("...ij,...ji->...", f.tau, f.grad_v)
    lapT = f.hess_T[..., 0, 0] + f.hess_T[..., 1, 1]
    framed = -f.rho * div_v * z1 - np.where(adia, (f.rhoH * div_v - tau_grad_v - kappa * lapT) * z4, 0.0)
    return GradientDensity(g_pw, g_pw + framed, framed, wp)


def pair_with_field(density: np.ndarray, wp: WallPoints, mesh, V) -> float:
    """\\int (V_h . n) g ds for a perturbation field V (see geometry.perturb)."""
    total = 0.0
    for k, edge in enumerate(wp.edges):
        vn = np.sum(V.edge_velocity(mesh, int(edge), wp.s) * wp.normal[k], axis=-1)
        total += float(np.sum(wp.wds[k] * vn * density[k]))
    return total


def edge_bump_pairings(density: np.ndarray, wp: WallPoints) -> np.ndarray:
    """\\int B(xi) g ds over each wall edge, i.e. the gradient for the unit normal bump
    on that edge (with the bump's normal velocity taken as exactly B)."""
    from .geometry.perturb import quartic_bump_profile

    B = quartic_bump_profile((wp.s + 1) / 2)
    return np.sum(wp.wds * B[None, :] * density, axis=1)


def edge_summaries(density: np.ndarray, wp: WallPoints) -> np.ndarray:
    """Arc-length weighted mean of the density per wall edge."""
    return np.sum(wp.wds * density, axis=1) / np.sum(wp.wds, axis=1)


def momentum_identity_residual(flow_space: DGSpace, U, gas, wp: WallPoints) -> np.ndarray:
    """(div(F^c - F^v))_{2,3} - div(p I - tau) at wall points; vanishes where v = 0 holds."""
    u, g, H = trace_derivatives(flow_space, U, wp)
    f = wall_fields(u, g, H, gas)
    gm = g[..., 1:3, :]
    div_v = f.grad_v[..., 0, 0] + f.grad_v[..., 1, 1]
    # div(rho v (x) v)_i = sum_k (dm_i/dx_k) v_k + m_i div v
    return np.einsum("...ik,...k->...i", gm, f.v) + u[..., 1:3] * div_v[..., None]


def stress_divergence(f: WallFields, mu: float) -> np.ndarray:
    """div tau (…, 2): mu (Lap v_i + 1/3 d_i div v)."""
    lap = f.hess_v[..., :, 0, 0] + f.hess_v[..., :, 1, 1]
    grad_div = f.hess_v[..., 0, 0, :] + f.hess_v[..., 1, 1, :]
    return mu * (lap + grad_div / 3.0)


def stress_gradient(f: WallFields, mu: float) -> np.ndarray:
    """d tau_ij / dx_k as (…, 2, 2, 2) [i, j, k]."""
    Hv = f.hess_v  # [i, a, b] = d2 v_i / dx_a dx_b
    grad_div = Hv[..., 0, 0, :] + Hv[..., 1, 1, :]
    out = mu * (Hv + np.swapaxes(Hv, -3, -2))
    eye = np.eye(2)
    out -= mu * 2.0 / 3.0 * eye[:, :, None] * grad_div[..., None, None, :]
    return out


def adjoint_stress(grad_z, mu: float) -> np.ndarray:
    """Sigma from the momentum rows of the adjoint gradient (…, 4, 2); same formula as tau."""
    return G.viscous_stress(np.asarray(grad_z)[..., 1:3, :], mu)


def write_gradient_csv(path, dens: GradientDensity, config_hash: str = "-", objective: str = "-") -> None:
    import csv

    wp = dens.points
    with open(path, "w", newline="") as f:
        f.write(f"# config_hash {config_hash}\n# objective {objective}\n")
        w = csv.writer(f)
        w.writerow(["edge_id", "s", "x", "y", "g_pointwise", "g_variational", "g_framed_terms"])
        for k, e in enumerate(wp.edges):
            for j in range(wp.s.size):
                w.writerow([int(e), repr(float(wp.arclength[k, j])), repr(float(wp.x[k, j, 0])),
                            repr(float(wp.x[k, j, 1])), repr(float(dens.pointwise[k, j])),
                            repr(float(dens.variational[k, j])), repr(float(dens.framed[k, j]))])


def write_plot_data(path, s, curves: dict, title: str = "") -> None:
    """Gnuplot-style blocks: one two-column (s, value) block per curve, separated by blank lines."""
    with open(path, "w") as f:
        if title:
            f.write(f"# {title}\n")
        for name, vals in curves.items():
            f.write(f"# curve {name}\n")
            for a, b in zip(s, vals):
                f.write(f"{float(a)!r} {float(b)!r}\n")
            f.write("\n\n")


def _traction_terms(space: DGSpace, U, gas, wp: WallPoints):
    u, g, H = trace_derivatives(space, U, wp)
    return wall_fields(u, g, H, gas)


def preliminary_gradient(base: DGSpace, U, plus: tuple, minus: tuple, V, h: float, gas,
                         psi, c_inf: float, wp: WallPoints) -> float:
    r"""Shape derivative of J = (1/C) \int (p n - tau n) . psi from local derivatives:

        dJ = (1/C) \int (p' n - tau' n) . psi + (V . n) div(p psi - tau psi) ds,

    with p' = (p_{+h} o T_{+h} - p_{-h} o T_{-h}) / 2h - grad p . V and likewise tau'.
    ``plus``/``minus`` are (space, U) on the meshes deformed by +-h V; the same
    reference points are used on every mesh, so composition with T_t is implicit.
    """
    mesh = base.mesh
    f0 = _traction_terms(base, U, gas, wp)
    fp = _traction_terms(*plus, gas, wp)
    fm = _traction_terms(*minus, gas, wp)
    Vw = np.stack([V.edge_velocity(mesh, int(e), wp.s) for e in wp.edges])
    n = wp.normal
    p_loc = (fp.p - fm.p) / (2 * h) - np.einsum("...l,...l->...", f0.grad_p, Vw)
    tau_loc = (fp.tau - fm.tau) / (2 * h) - np.einsum("...ijk,...k->...ij", stress_gradient(f0, gas.mu), Vw)
    psi = np.asarray(psi, float)
    local = p_loc * (n @ psi) - np.einsum("...ij,...j,i->...", tau_loc, n, psi)
    div = f0.grad_p @ psi - stress_divergence(f0, gas.mu) @ psi
    vn = np.sum(Vw * n, axis=-1)
    return wp.integrate(local + vn * div) / c_inf


def preliminary_gradient_check(case, V, obj, h: float = 1e-4, n_points: int = 12, noise: float = 0.0):
    """(dJ_preliminary, dJ_fd, flagged) for one perturbation field.

    Both use the interior-trace force; ``flagged`` is set when the FD value lies
    below the noise floor, in which case agreement is not meaningful.
    """
    from .dg.objective import ForceObjective, compute_objective

    obj = ForceObjective(obj.kind, obj.alpha_deg, obj.c_inf, "interior")
    wp = wall_points(case.mesh, n_points)
    sp_, sm_ = case.perturbed(V, h), case.perturbed(V, -h)
    dj_fd = (compute_objective(sp_.disc, sp_.U, obj) - compute_objective(sm_.disc, sm_.U, obj)) / (2 * h)
    dj_pre = preliminary_gradient(case.space, case.U, (sp_.disc.space, sp_.U), (sm_.disc.space, sm_.U),
                                  V, h, case.gas, obj.direction, obj.c_inf, wp)
    return dj_pre, dj_fd, bool(abs(dj_fd) <= noise)
