r"""DG residual of the compressible Navier-Stokes equations and its exact Jacobian.

Weak form per element K and test function phi:

    R = -(F^c(u) - F^v(u, Q), grad phi)_K + <H(u^-, u^+, n), phi>_{dK} - (s, phi)_K

with Q = grad u + sum_f r_f the BR2-lifted gradient, H = LLF(u^-, u^+) - {F^v(u, grad u + eta r_f)} . n
on interior faces, and boundary states u_b(u^-) on walls (no slip, adiabatic or
isothermal) and far field / prescribed-state boundaries.  ``s`` is an optional
source used for manufactured solutions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .. import gas as G
from ..gas import GasModel
from ..geometry.mesh import BoundaryTag
from .space import DGSpace


@dataclass(frozen=True)
class BoundaryData:
    """Far-field state, isothermal wall temperature, optional prescribed state u_D(x)."""

    u_inf: np.ndarray
    wall_temperature: float | None = None
    dirichlet: Callable | None = None


class NavierStokesDG:
    def __init__(self, space: DGSpace, gas: GasModel, bc: BoundaryData, eta: float | None = None,
                 source: Callable | None = None):
        self.space = space
        self.gas = gas
        self.bc = bc
        self.eta = 4.0 if eta is None else eta  # at least the number of element faces
        self.u_inf = np.asarray(bc.u_inf, float)
        sp_ = space
        tags = sp_.bnd_tag
        if np.any(tags == BoundaryTag.WALL_ISO) and bc.wall_temperature is None:
            raise ValueError("isothermal wall requires a wall temperature")
        if np.any(tags == BoundaryTag.DIRICHLET) and bc.dirichlet is None:
            raise ValueError("prescribed-state boundary requires a state function")
        self.source_vals = None if source is None else np.asarray(source(sp_.xq))
        # constant boundary-state derivatives B = du_b/du per boundary face
        nbf = tags.size
        self.B = np.zeros((nbf, 4, 4))
        self.visc_mask = np.ones((nbf, 4))
        for k, t in enumerate(tags):
            if t == BoundaryTag.WALL_ADIA:
                self.B[k] = np.diag([1.0, 0.0, 0.0, 1.0])
                self.visc_mask[k, 3] = 0.0
            elif t == BoundaryTag.WALL_ISO:
                self.B[k, 0, 0] = 1.0
                self.B[k, 3, 0] = gas.c_v * bc.wall_temperature
        self.is_wall = np.isin(tags, [BoundaryTag.WALL_ADIA, BoundaryTag.WALL_ISO])
        self.dirichlet_states = None
        if bc.dirichlet is not None:
            self.dirichlet_states = np.asarray(bc.dirichlet(sp_.xf[sp_.bnd_elem, sp_.bnd_face]))
        self._build_operators()
        self._build_pattern()

    # -- setup ----------------------------------------------------------------
    def _build_operators(self):
        s = self.space
        E, nb = s.n_elements, s.nb
        ifc = s.interior
        eL, fL, eR, fR = ifc.T
        self.PL = s.phi_f[fL]
        self.PR = s.phi_f[fR][:, ::-1]
        LFL = s.lift_face[eL, fL]
        LFR = s.lift_face[eR, fR][:, ::-1, :, ::-1]
        GL = s.gphi_f[eL, fL]
        GR = s.gphi_f[eR, fR][:, ::-1]
        h = 0.5 * self.eta
        self.ZLL = GL - h * np.einsum("kqlp,kpb->kqlb", LFL, self.PL)
        self.ZLR = h * np.einsum("kqlp,kpb->kqlb", LFL, self.PR)
        self.ZRR = GR - h * np.einsum("kqlp,kpb->kqlb", LFR, self.PR)
        self.ZRL = h * np.einsum("kqlp,kpb->kqlb", LFR, self.PL)
        self.wL = s.wds[eL, fL]
        self.nL = s.normal[eL, fL]
        # volume lifted-gradient derivative, scalar (component-diagonal) part
        S = s.gphi.copy()
        LV = s.lift_vol
        for k in range(ifc.shape[0]):
            S[eL[k]] -= 0.5 * LV[eL[k], fL[k]] @ s.phi_f[fL[k]]
            S[eR[k]] -= 0.5 * LV[eR[k], fR[k]] @ s.phi_f[fR[k]]
        self.S_self = S
        self.N_LR = 0.5 * np.einsum("kqlp,kpb->kqlb", LV[eL, fL], self.PR[:, :, :])  # dQ_L/dU_R
        self.N_RL = 0.5 * np.einsum("kqlp,kpb->kqlb", LV[eR, fR][:, :, :, ::-1], self.PL)  # dQ_R/dU_L
        be, bf = s.bnd_elem, s.bnd_face
        self.T_bnd = np.einsum("kqlp,kpb->kqlb", LV[be, bf], s.phi_f[bf])  # times (B - I)
        self.Pb = s.phi_f[bf]
        self.Gb = s.gphi_f[be, bf]
        self.Z1b = self.eta * np.einsum("kqlp,kpb->kqlb", s.lift_face[be, bf], self.Pb)
        self.wb = s.wds[be, bf]
        self.nb_ = s.normal[be, bf]
        self.W = s.wJ[:, :, None, None] * s.gphi  # (E, Q, 2, nb)

    def _build_pattern(self):
        s = self.space
        E = s.n_elements
        ifc = s.interior
        rows = np.concatenate([np.arange(E), ifc[:, 0], ifc[:, 2]])
        cols = np.concatenate([np.arange(E), ifc[:, 2], ifc[:, 0]])
        order = np.lexsort((cols, rows))
        self._perm = order
        self._cols = cols[order]
        self._indptr = np.searchsorted(rows[order], np.arange(E + 1))
        self._nslots = rows.size

    # -- traces -----------------------------------------------------------------
    def boundary_states(self, ufb):
        """Boundary states u_b (nbf, F, 4) from interior traces."""
        ub = np.einsum("kij,kqj->kqi", self.B, ufb)
        far = self.space.bnd_tag == BoundaryTag.FARFIELD
        ub[far] = self.u_inf
        dirich = self.space.bnd_tag == BoundaryTag.DIRICHLET
        if np.any(dirich):
            ub[dirich] = self.dirichlet_states[dirich]
        return ub

    def traces(self, U):
        """Volume and face values with BR2-lifted gradients."""
        s = self.space
        ifc = s.interior
        eL, fL, eR, fR = ifc.T
        be, bf = s.bnd_elem, s.bnd_face
        uv = s.eval_volume(U)
        gv = s.eval_volume_grad(U)
        uf = s.eval_faces(U)
        gf = s.eval_faces_grad(U)
        delta = np.zeros_like(uf)
        uLf = uf[eL, fL]
        uRf = uf[eR, fR][:, ::-1]
        delta[eL, fL] = 0.5 * (uRf - uLf)
        delta[eR, fR] = 0.5 * (uLf - uRf)[:, ::-1]
        ufb = uf[be, bf]
        ub = self.boundary_states(ufb)
        delta[be, bf] = ub - ufb
        Qv = gv + np.einsum("efqdp,efpc->eqcd", s.lift_vol, delta)
        Qf = gf + self.eta * np.einsum("efqdp,efpc->efqcd", s.lift_face, delta)
        return dict(uv=uv, Qv=Qv, uf=uf, Qf=Qf, ub=ub, ufb=ufb)

    def admissible(self, U) -> bool:
        s = self.space
        uv = s.eval_volume(U)
        uf = s.eval_faces(U)
        for u in (uv, uf):
            if not (np.all(u[..., 0] > 0) and np.all(G.pressure(u, self.gas) > 0)):
                return False
        return True

    # -- fluxes -----------------------------------------------------------------
    def _boundary_flux(self, tr, faces):
        """Numerical flux on boundary faces ``faces`` (indices into the boundary list)."""
        s, gas = self.space, self.gas
        be, bf = s.bnd_elem[faces], s.bnd_face[faces]
        u = tr["ufb"][faces]
        ub = tr["ub"][faces]
        n = self.nb_[faces]
        Q = tr["Qf"][be, bf]
        wall = self.is_wall[faces]
        Hc = np.empty_like(u)
        if np.any(wall):
            Hc[wall] = np.einsum("fqid,fqd->fqi", G.convective_flux(ub[wall], gas), n[wall])
        if np.any(~wall):
            Hc[~wall] = G.llf_flux(u[~wall], ub[~wall], n[~wall], gas)
        Hv = np.einsum("fqid,fqd->fqi", G.viscous_flux(ub, Q, gas), n) * self.visc_mask[faces][:, None, :]
        return Hc - Hv

    def residual(self, U) -> np.ndarray:
        s, gas = self.space, self.gas
        tr = self.traces(U)
        F = G.convective_flux(tr["uv"], gas) - G.viscous_flux(tr["uv"], tr["Qv"], gas)
        R = -np.einsum("eqdb,eqcd->ebc", self.W, F)
        if self.source_vals is not None:
            R -= np.einsum("eq,qb,eqc->ebc", s.wJ, s.phi, self.source_vals)
        ifc = s.interior
        eL, fL, eR, fR = ifc.T
        uf, Qf = tr["uf"], tr["Qf"]
        uL, uR = uf[eL, fL], uf[eR, fR][:, ::-1]
        QL, QR = Qf[eL, fL], Qf[eR, fR][:, ::-1]
        n = self.nL
        H = G.llf_flux(uL, uR, n, gas) - 0.5 * np.einsum(
            "fqid,fqd->fqi", G.viscous_flux(uL, QL, gas) + G.viscous_flux(uR, QR, gas), n)
        wH = self.wL[..., None] * H
        np.add.at(R, eL, np.einsum("kqb,kqc->kbc", self.PL, wH))
        np.add.at(R, eR, -np.einsum("kqb,kqc->kbc", self.PR, wH))
        allb = np.arange(s.bnd_tag.size)
        Hb = self._boundary_flux(tr, allb)
        np.add.at(R, s.bnd_elem, np.einsum("kqb,kqc->kbc", self.Pb, self.wb[..., None] * Hb))
        return R

    # -- Jacobian -------------------------------------------------------------------
    def _boundary_flux_jacobian(self, tr, faces):
        """dH/dU of boundary fluxes w.r.t. the owning element, (nf, F, 4, nb, 4)."""
        s, gas = self.space, self.gas
        be, bf = s.bnd_elem[faces], s.bnd_face[faces]
        u = tr["ufb"][faces]
        ub = tr["ub"][faces]
        n = self.nb_[faces]
        Q = tr["Qf"][be, bf]
        B = self.B[faces]
        wall = self.is_wall[faces]
        C = np.empty(u.shape + (4,))
        if np.any(wall):
            A = np.einsum("kqmij,kqm->kqij", G.convective_jacobian(ub[wall], gas), n[wall])
            C[wall] = np.einsum("kqij,kjl->kqil", A, B[wall])
        if np.any(~wall):
            dL, dR = G.llf_jacobians(u[~wall], ub[~wall], n[~wall], gas)
            C[~wall] = dL + np.einsum("kqij,kjl->kqil", dR, B[~wall])
        Fu, Gt = G.viscous_jacobians(ub, Q, gas)
        mask = self.visc_mask[faces][:, None, :, None]
        Vb = np.einsum("kqmij,kqm->kqij", Fu, n) * mask
        Gn = np.einsum("kqmlij,kqm->kqijl", Gt, n) * mask[..., None]
        P = self.Pb[faces]
        Cm = C - np.einsum("kqij,kjl->kqil", Vb, B)
        J = np.einsum("fqcm,fqb->fqcbm", Cm, P)
        J -= np.einsum("fqcml,fqlb->fqcbm", Gn, self.Gb[faces])
        BmI = B - np.eye(4)
        J -= np.einsum("kqcjl,kjm,kqlb->kqcbm", Gn, BmI, self.Z1b[faces])
        return J

    def jacobian(self, U) -> sp.csr_matrix:
        s, gas = self.space, self.gas
        E, nb = s.n_elements, s.nb
        tr = self.traces(U)
        blocks = np.zeros((self._nslots, nb, 4, nb, 4))
        # volume
        uv, Qv = tr["uv"], tr["Qv"]
        A = G.convective_jacobian(uv, gas) - G.viscous_flux_u(uv, Qv, gas)
        Gt = G.homogeneity_tensor(uv, gas)
        W = self.W
        Q = uv.shape[1]
        WA = np.einsum("eqkb,eqkcj->eqbcj", W, A).reshape(E, Q, -1)
        blocks[:E] -= np.einsum("eqx,qd->exd", WA, s.phi, optimize=True).reshape(E, nb, 4, 4, nb).transpose(0, 1, 2, 4, 3)
        KK = np.einsum("eqkb,eqklcj->eqbcjl", W, Gt, optimize=True)  # (E, Q, nb, 4, 4, 2)
        blocks[:E] += np.einsum("eqbcjl,eqld->ebcdj", KK, self.S_self, optimize=True)
        ifc = s.interior
        eL, fL, eR, fR = ifc.T
        nif = eL.size
        slotLR = E + np.arange(nif)
        slotRL = E + nif + np.arange(nif)
        blocks[slotLR] += np.einsum("kqbcjl,kqld->kbcdj", KK[eL], self.N_LR, optimize=True)
        blocks[slotRL] += np.einsum("kqbcjl,kqld->kbcdj", KK[eR], self.N_RL, optimize=True)
        be = s.bnd_elem
        BmI = self.B - np.eye(4)
        M = np.einsum("kqbcjl,kqld->kbcjd", KK[be], self.T_bnd, optimize=True)
        np.add.at(blocks, be, np.einsum("kbcjd,kjm->kbcdm", M, BmI))
        # interior faces
        uf, Qf = tr["uf"], tr["Qf"]
        uL, uR = uf[eL, fL], uf[eR, fR][:, ::-1]
        QL, QR = Qf[eL, fL], Qf[eR, fR][:, ::-1]
        n = self.nL
        CL, CR = G.llf_jacobians(uL, uR, n, gas)
        FuL, GtL = G.viscous_jacobians(uL, QL, gas)
        FuR, GtR = G.viscous_jacobians(uR, QR, gas)
        VL = np.einsum("kqmij,kqm->kqij", FuL, n)
        VR = np.einsum("kqmij,kqm->kqij", FuR, n)
        GnL = np.einsum("kqmlij,kqm->kqijl", GtL, n)
        GnR = np.einsum("kqmlij,kqm->kqijl", GtR, n)
        dUL = np.einsum("kqcj,kqb->kqcbj", CL - 0.5 * VL, self.PL)
        dUL -= 0.5 * (np.einsum("kqcjl,kqlb->kqcbj", GnL, self.ZLL) + np.einsum("kqcjl,kqlb->kqcbj", GnR, self.ZRL))
        dUR = np.einsum("kqcj,kqb->kqcbj", CR - 0.5 * VR, self.PR)
        dUR -= 0.5 * (np.einsum("kqcjl,kqlb->kqcbj", GnR, self.ZRR) + np.einsum("kqcjl,kqlb->kqcbj", GnL, self.ZLR))
        wPL = self.wL[..., None] * self.PL
        wPR = self.wL[..., None] * self.PR
        np.add.at(blocks, eL, np.einsum("kqa,kqcbj->kacbj", wPL, dUL))
        blocks[slotLR] += np.einsum("kqa,kqcbj->kacbj", wPL, dUR)
        blocks[slotRL] -= np.einsum("kqa,kqcbj->kacbj", wPR, dUL)
        np.add.at(blocks, eR, -np.einsum("kqa,kqcbj->kacbj", wPR, dUR))
        # boundary faces
        allb = np.arange(s.bnd_tag.size)
        Jb = self._boundary_flux_jacobian(tr, allb)
        np.add.at(blocks, be, np.einsum("kqa,kqcbj->kacbj", self.wb[..., None] * self.Pb, Jb))
        data = blocks.reshape(self._nslots, nb * 4, nb * 4)[self._perm]
        return sp.bsr_matrix((data, self._cols, self._indptr), shape=(E * nb * 4, E * nb * 4)).tocsr()

    def jvp(self, U, W) -> np.ndarray:
        return (self.jacobian(U) @ W.ravel()).reshape(W.shape)
