r"""Discrete adjoint of the DG scheme.

Solves (dR/du)^T z = (dJ/du)^T.  With this sign convention the total derivative
of J with respect to any parameter beta entering the residual is
dJ/dbeta = partial J / partial beta - z^T partial R / partial beta.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import embed_coefficients
from .dg.newton import factorize
from .dg.objective import ForceObjective, objective_linearization
from .dg.residual import NavierStokesDG
from .dg.space import DGSpace


@dataclass
class AdjointResult:
    z: np.ndarray
    disc: NavierStokesDG       # discretization the adjoint lives in
    U: np.ndarray              # flow state in that discretization
    p: int


def solve_adjoint(disc: NavierStokesDG, U, obj: ForceObjective, lu=None) -> np.ndarray:
    """Adjoint coefficients z (layout of U).  ``lu`` may be a factorization of dR/du at U."""
    g = objective_linearization(disc, U, obj).ravel()
    if not np.any(g):
        return np.zeros_like(U)
    if lu is None:
        lu = factorize(disc.jacobian(U))
    return lu.solve(g, trans="T").reshape(U.shape)


def enriched_adjoint(disc: NavierStokesDG, U, obj: ForceObjective) -> AdjointResult:
    """Adjoint at degree p + 1 around the flow state embedded from degree p."""
    s = disc.space
    s1 = DGSpace(s.mesh, s.p + 1)
    d1 = NavierStokesDG(s1, disc.gas, disc.bc, eta=disc.eta)
    U1 = embed_coefficients(U, s.p, s.p + 1)
    return AdjointResult(solve_adjoint(d1, U1, obj), d1, U1, s.p + 1)


def adjoint(disc: NavierStokesDG, U, obj: ForceObjective, mode: str = "same-p", lu=None) -> AdjointResult:
    if mode == "same-p":
        return AdjointResult(solve_adjoint(disc, U, obj, lu), disc, U, disc.space.p)
    if mode == "p-plus-one":
        return enriched_adjoint(disc, U, obj)
    raise ValueError(f"unknown adjoint mode {mode!r}")


def duality_gaps(disc: NavierStokesDG, U, z, obj: ForceObjective, directions) -> np.ndarray:
    """|J'(u) w - z^T R'(u) w| / max(|J'(u) w|, tiny) for each direction w."""
    g = objective_linearization(disc, U, obj).ravel()
    Jac = disc.jacobian(U)
    out = []
    for w in directions:
        lhs = g @ w.ravel()
        rhs = z.ravel() @ (Jac @ w.ravel())
        out.append(abs(lhs - rhs) / max(abs(lhs), 1e-300))
    return np.array(out)


def transpose_consistency(disc: NavierStokesDG, U, rng=None) -> float:
    """|<a, J b> - <J^T a, b>| / (|a||J||b|) for random a, b."""
    rng = np.random.default_rng(rng)
    J = disc.jacobian(U)
    a = rng.standard_normal(J.shape[0])
    b = rng.standard_normal(J.shape[1])
    lhs = a @ (J @ b)
    rhs = (J.T @ a) @ b
    scale = np.linalg.norm(a) * np.linalg.norm(b) * abs(J).max()
    return abs(lhs - rhs) / scale


def residual_parameter_derivative(make_disc, U, value: float, h: float = 1e-6) -> np.ndarray:
    """Central difference of R(U; beta) in a scalar parameter beta at fixed U.

    ``make_disc(beta)`` builds the discretization for parameter value beta.
    """
    return (make_disc(value + h).residual(U) - make_disc(value - h).residual(U)) / (2 * h)


@dataclass
class AdjointBCReport:
    s: np.ndarray              # arc length along the wall
    x: np.ndarray
    momentum_dev: np.ndarray   # |z_{2,3} - psi / C_inf|
    energy_dev: np.ndarray     # |z_4| (isothermal) or |grad z_4 . n| (adiabatic)
    isothermal: bool

    def summary(self) -> dict:
        return dict(momentum_mean=float(np.mean(self.momentum_dev)),
                    momentum_max=float(np.max(self.momentum_dev)),
                    energy_mean=float(np.mean(self.energy_dev)),
                    energy_max=float(np.max(self.energy_dev)))

    def to_csv(self, path, config_hash: str = "-") -> None:
        hdr = f"# config_hash {config_hash}\ns,x,y,momentum_deviation,energy_deviation"
        np.savetxt(path, np.column_stack([self.s, self.x, self.momentum_dev, self.energy_dev]),
                   delimiter=",", header=hdr, comments="", fmt="%.17g")


def adjoint_bc_report(disc: NavierStokesDG, z, obj: ForceObjective) -> AdjointBCReport:
    """Deviation of the discrete adjoint trace from the continuous wall conditions
    z_{2,3} = psi / C_inf and z_4 = 0 (isothermal) or grad z_4 . n = 0 (adiabatic)."""
    from .geometry.mesh import BoundaryTag

    s = disc.space
    faces = s.wall_faces
    be, bf = s.bnd_elem[faces], s.bnd_face[faces]
    zf = s.eval_faces(z)[be, bf]
    gz = s.eval_faces_grad(z)[be, bf]
    n = s.normal[be, bf]
    mom = np.linalg.norm(zf[..., 1:3] - obj.direction / obj.c_inf, axis=-1)
    iso = bool(np.all(s.bnd_tag[faces] == BoundaryTag.WALL_ISO))
    energy = np.abs(zf[..., 3]) if iso else np.abs(np.einsum("fqd,fqd->fq", gz[..., 3, :], n))
    # arc length coordinate at quadrature points
    w = s.wds[be, bf]
    seg = w.sum(axis=1)
    start = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    frac = (s.face_s + 1) / 2
    arc = start[:, None] + seg[:, None] * frac[None, :]  # approximate within a face
    return AdjointBCReport(arc.ravel(), s.xf[be, bf].reshape(-1, 2), mom.ravel(), energy.ravel(), iso)
