r"""Aerodynamic force coefficients on the wall and their state derivatives.

J = (1 / C_inf) \int_wall (p n - tau n) . psi ds, with n pointing into the body,
psi_lift = (-sin a, cos a), psi_drag = (cos a, sin a), C_inf = rho |v|^2 chord / 2.

Two wall traces are available:

* ``"flux"`` uses the momentum part of the discrete wall flux (pressure and
  viscous stress of the no-slip wall state with the lifted gradient), which is
  the force the scheme actually exchanges with the wall;
* ``"interior"`` evaluates p and tau from the interior trace u^- and grad u^-.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import gas as G
from .residual import NavierStokesDG


@dataclass(frozen=True)
class ForceObjective:
    kind: str = "drag"          # "drag" or "lift"
    alpha_deg: float = 2.0
    c_inf: float = 1.0
    trace: str = "flux"

    def __post_init__(self):
        if self.kind not in ("drag", "lift"):
            raise ValueError(f"objective must be 'drag' or 'lift', got {self.kind!r}")
        if self.trace not in ("flux", "interior"):
            raise ValueError(f"trace must be 'flux' or 'interior', got {self.trace!r}")
        if not self.c_inf > 0:
            raise ValueError("normalisation C_inf must be positive")

    @property
    def direction(self) -> np.ndarray:
        a = np.deg2rad(self.alpha_deg)
        if self.kind == "lift":
            return np.array([-np.sin(a), np.cos(a)])
        return np.array([np.cos(a), np.sin(a)])

    @classmethod
    def for_freestream(cls, kind, u_inf, gas, alpha_deg, chord=1.0, trace="flux"):
        prim = G.primitive_from_conserved(np.asarray(u_inf), gas)
        c_inf = 0.5 * prim.rho * float(np.sum(prim.velocity**2)) * chord
        return cls(kind, alpha_deg, float(c_inf), trace)


def wall_traction(disc: NavierStokesDG, U, trace: str = "flux"):
    """p n - tau n at wall face quadrature points, (n_wall_faces, F, 2)."""
    s, gas = disc.space, disc.gas
    faces = s.wall_faces
    tr = disc.traces(U)
    if trace == "flux":
        return disc._boundary_flux(tr, faces)[..., 1:3]
    be, bf = s.bnd_elem[faces], s.bnd_face[faces]
    u = tr["uf"][be, bf]
    g = s.eval_faces_grad(U)[be, bf]
    n = s.normal[be, bf]
    p = G.pressure(u, gas)
    gv = G.primitive_gradients(u, g, gas)[0]
    tau = G.viscous_stress(gv, gas.mu)
    return p[..., None] * n - np.einsum("fqij,fqj->fqi", tau, n)


def compute_objective(disc: NavierStokesDG, U, obj: ForceObjective) -> float:
    s = disc.space
    faces = s.wall_faces
    P = wall_traction(disc, U, obj.trace)
    w = s.wds[s.bnd_elem[faces], s.bnd_face[faces]]
    return float(np.sum(w * (P @ obj.direction)) / obj.c_inf)


def objective_linearization(disc: NavierStokesDG, U, obj: ForceObjective) -> np.ndarray:
    """dJ/dU with the layout of U."""
    s, gas = disc.space, disc.gas
    faces = s.wall_faces
    be, bf = s.bnd_elem[faces], s.bnd_face[faces]
    w = s.wds[be, bf]
    psi = obj.direction
    if obj.trace == "flux":
        tr = disc.traces(U)
        J = disc._boundary_flux_jacobian(tr, faces)  # (f, q, c, b, j)
        dP = J[:, :, 1:3]
    else:
        u = s.eval_faces(U)[be, bf]
        g = s.eval_faces_grad(U)[be, bf]
        n = s.normal[be, bf]
        phi = s.phi_f[bf]
        gphi = s.gphi_f[be, bf]
        g1 = gas.gamma - 1.0
        rho = u[..., 0]
        v = u[..., 1:3] / rho[..., None]
        pu = np.stack([0.5 * g1 * np.sum(v * v, -1), -g1 * v[..., 0], -g1 * v[..., 1], np.full_like(rho, g1)], -1)
        Fu, Gt = G.viscous_jacobians(u, g, gas)
        Vn = np.einsum("fqkij,fqk->fqij", Fu, n)[:, :, 1:3]
        Gn = np.einsum("fqklij,fqk->fqijl", Gt, n)[:, :, 1:3]
        dP = np.einsum("fqc,fqj,fqb->fqcbj", n, pu, phi) - np.einsum("fqcj,fqb->fqcbj", Vn, phi)
        dP -= np.einsum("fqcjl,fqlb->fqcbj", Gn, gphi)
    contrib = np.einsum("fq,fqcbj,c->fbj", w, dP, psi) / obj.c_inf
    out = np.zeros_like(U)
    np.add.at(out, be, contrib)
    return out
