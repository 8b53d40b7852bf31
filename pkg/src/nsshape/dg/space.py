"""Modal DG space on a curvilinear mesh: quadrature, metric terms and lifting operators."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from ..basis import FACE_TANGENTS, face_points, gauss_legendre, modal_basis, tensor_gauss
from ..geometry.mesh import BoundaryTag, CurvilinearMesh


def default_quadrature(p: int, q: int) -> int:
    """Gauss points per direction, integrating degree-(2p + q) integrands exactly."""
    return p + 1 + (q + 1) // 2


class DGSpace:
    """Orthonormal Legendre modal space of degree p per element.

    Arrays follow (element, quadrature point, ...) ordering.  On faces, points
    run along the counter-clockwise face parameter, so the neighbour across an
    interior face sees them in reverse order.
    """

    def __init__(self, mesh: CurvilinearMesh, p: int, n_quad: int | None = None):
        if p < 0:
            raise ValueError("polynomial degree must be non-negative")
        self.mesh = mesh
        self.p = p
        self.nb = (p + 1) ** 2
        self.nq1 = n_quad or default_quadrature(p, mesh.degree)
        E = mesh.n_elements
        # volume
        pts, w = tensor_gauss(self.nq1)
        self.vol_ref = pts
        self.phi, dphi_ref, self.hphi_ref = modal_basis(p, pts)
        x, jac, hess = mesh.map_points(pts)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        inv = np.empty_like(jac)  # inv[..., r, d] = dxi_r/dx_d
        inv[..., 0, 0] = jac[..., 1, 1] / det
        inv[..., 0, 1] = -jac[..., 0, 1] / det
        inv[..., 1, 0] = -jac[..., 1, 0] / det
        inv[..., 1, 1] = jac[..., 0, 0] / det
        self.xq = x
        self.jac, self.jac_inv, self.geo_hess = jac, inv, hess
        self.detJ = det
        self.wJ = det * w
        self.gphi = np.einsum("eqrd,qrb->eqdb", inv, dphi_ref)  # (E, Q, 2, nb)
        self.mass = np.einsum("eq,qa,qb->eab", self.wJ, self.phi, self.phi)
        self.mass_inv = np.linalg.inv(self.mass)
        # faces
        s, ws = gauss_legendre(self.nq1)
        self.face_s, self.face_w = s, ws
        nf = s.size
        self.phi_f = np.empty((4, nf, self.nb))
        dphi_f = np.empty((4, nf, 2, self.nb))
        self.xf = np.empty((E, 4, nf, 2))
        self.normal = np.empty((E, 4, nf, 2))
        self.wds = np.empty((E, 4, nf))
        self.gphi_f = np.empty((E, 4, nf, 2, self.nb))
        self.jac_inv_f = np.empty((E, 4, nf, 2, 2))
        for f in range(4):
            fp = face_points(f, s)
            val, grad, _ = modal_basis(p, fp)
            self.phi_f[f] = val
            dphi_f[f] = grad
            xf, jf, _ = mesh.map_points(fp)
            t = jf @ FACE_TANGENTS[f]
            speed = np.linalg.norm(t, axis=-1)
            self.xf[:, f] = xf
            self.normal[:, f] = np.stack([t[..., 1], -t[..., 0]], axis=-1) / speed[..., None]
            self.wds[:, f] = speed * ws
            detf = jf[..., 0, 0] * jf[..., 1, 1] - jf[..., 0, 1] * jf[..., 1, 0]
            invf = np.stack([np.stack([jf[..., 1, 1], -jf[..., 0, 1]], -1),
                             np.stack([-jf[..., 1, 0], jf[..., 0, 0]], -1)], -2) / detf[..., None, None]
            self.jac_inv_f[:, f] = invf
            self.gphi_f[:, f] = np.einsum("eqrd,qrb->eqdb", invf, grad)
        self.dphi_f_ref = dphi_f
        # connectivity
        self.interior = mesh.interior_faces
        self.bnd_elem = mesh.boundary[:, 0]
        self.bnd_face = mesh.boundary[:, 1]
        self.bnd_tag = mesh.boundary[:, 2]
        # lifting: r_f = M^{-1} int_f phi n (jump) ds, stored as operator (E, 4, nb, 2, nf)
        self.lift = np.einsum("eab,fqb,efqd,efq->efadq", self.mass_inv, self.phi_f, self.normal, self.wds)
        # lifting evaluated at volume points and at the face's own points
        self.lift_vol = np.einsum("qa,efadp->efqdp", self.phi, self.lift)
        self.lift_face = np.einsum("fqa,efadp->efqdp", self.phi_f, self.lift)

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    @property
    def ndof(self) -> int:
        return self.n_elements * self.nb * 4

    def project(self, func) -> np.ndarray:
        """L2 projection of func(x) -> (..., m) onto the space, coefficients (E, nb, m)."""
        vals = np.asarray(func(self.xq))
        rhs = np.einsum("eq,qb,eqc->ebc", self.wJ, self.phi, vals)
        return np.einsum("eab,ebc->eac", self.mass_inv, rhs)

    def constant(self, state) -> np.ndarray:
        state = np.asarray(state, float)
        return self.project(lambda x: np.broadcast_to(state, x.shape[:-1] + state.shape))

    def eval_volume(self, U):
        return np.einsum("qb,ebc->eqc", self.phi, U)

    def eval_volume_grad(self, U):
        return np.einsum("eqdb,ebc->eqcd", self.gphi, U)

    def eval_faces(self, U):
        return np.einsum("fqb,ebc->efqc", self.phi_f, U)

    def eval_faces_grad(self, U):
        return np.einsum("efqdb,ebc->efqcd", self.gphi_f, U)

    def l2_error(self, U, exact, n_quad: int | None = None) -> np.ndarray:
        """Componentwise L2 norm of U - exact using a finer quadrature."""
        n = n_quad or self.nq1 + 3
        pts, w = tensor_gauss(n)
        phi = modal_basis(self.p, pts)[0]
        x, jac, _ = self.mesh.map_points(pts)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        diff = np.einsum("qb,ebc->eqc", phi, U) - exact(x)
        return np.sqrt(np.einsum("eq,eqc->c", det * w, diff**2))

    def evaluate_at(self, U, ref_pts, elements=None):
        """Values, physical gradients and physical Hessians at reference points.

        Returns u (E, P, m), grad (E, P, m, 2), hess (E, P, m, 2, 2) using
        Hess_x u = J^-T (Hess_xi u - sum_d du/dx_d Hess_xi x_d) J^-1.
        """
        el = np.arange(self.n_elements) if elements is None else np.asarray(elements)
        val, grad, hess = modal_basis(self.p, ref_pts)
        x, jac, ghess = self.mesh.map_points(ref_pts, el)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        inv = np.stack([np.stack([jac[..., 1, 1], -jac[..., 0, 1]], -1),
                        np.stack([-jac[..., 1, 0], jac[..., 0, 0]], -1)], -2) / det[..., None, None]
        Ue = U[el]
        u = np.einsum("pb,ebc->epc", val, Ue)
        g_ref = np.einsum("prb,ebc->epcr", grad, Ue)
        g = np.einsum("epcr,eprd->epcd", g_ref, inv)
        h_ref = np.einsum("psb,ebc->epcs", hess, Ue)
        h_ref = h_ref - np.einsum("epcd,epds->epcs", g, ghess)
        H = np.empty(h_ref.shape[:-1] + (2, 2))
        H[..., 0, 0] = h_ref[..., 0]
        H[..., 0, 1] = H[..., 1, 0] = h_ref[..., 1]
        H[..., 1, 1] = h_ref[..., 2]
        H = np.einsum("eprd,epcrs,epst->epcdt", inv, H, inv)
        return u, g, H, x

    @cached_property
    def wall_faces(self) -> np.ndarray:
        return np.flatnonzero(np.isin(self.bnd_tag, [BoundaryTag.WALL_ADIA, BoundaryTag.WALL_ISO]))
