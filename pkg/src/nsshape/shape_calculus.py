r"""Tangential calculus on curves and shape derivatives of domain and boundary integrals.

Conventions: n is the unit normal pointing out of the domain, t = (-n_y, n_x)
the tangent, K = div_Gamma n the additive curvature (1/R on a disk of radius R).
Callables take points (..., 2) and return values (...), gradients (..., 2) or
Jacobians (..., 2, 2) with jac[..., i, j] = dW_i/dx_j.
"""
from __future__ import annotations

import warnings

import numpy as np

from .basis import tensor_gauss
from .geometry.mesh import CurvilinearMesh, EdgeQuadrature, edge_quadrature


def tangential_gradient(grad_f, n):
    """grad_Gamma f = grad f - (grad f . n) n."""
    grad_f = np.asarray(grad_f, float)
    n = np.asarray(n, float)
    return grad_f - np.sum(grad_f * n, axis=-1, keepdims=True) * n


def tangential_divergence(jac_W, n):
    """div_Gamma W = div W - (DW n) . n."""
    jac_W = np.asarray(jac_W, float)
    n = np.asarray(n, float)
    div = jac_W[..., 0, 0] + jac_W[..., 1, 1]
    return div - np.einsum("...i,...ij,...j->...", n, jac_W, n)


def tangential_green_residual(quad: EdgeQuadrature, f, grad_f, W, jac_W) -> float:
    r"""\int W . grad_Gamma f ds - \int (f K (W . n) - f div_Gamma W) ds over a closed curve.

    Vanishes (up to quadrature and geometry error) for smooth f, W.
    """
    x, n, K = quad.x, quad.normal, quad.curvature
    fv = f(x)
    Wv = W(x)
    lhs = np.sum(Wv * tangential_gradient(grad_f(x), n), axis=-1)
    rhs = fv * K * np.sum(Wv * n, axis=-1) - fv * tangential_divergence(jac_W(x), n)
    return quad.integrate(lhs - rhs)


def _normal_velocity(quad: EdgeQuadrature, mesh, V):
    """V . n at quadrature points; V is a PerturbationField or a callable of (x, n)."""
    if hasattr(V, "edge_velocity"):
        return np.stack([np.sum(V.edge_velocity(mesh, int(k), quad.s) * quad.normal[i], axis=-1)
                         for i, k in enumerate(quad.edges)])
    return np.asarray(V(quad.x, quad.normal), float)


def volume_integral(mesh: CurvilinearMesh, func, n_quad: int = 8) -> float:
    pts, w = tensor_gauss(n_quad)
    x, jac, _ = mesh.map_points(pts)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    return float(np.sum(det * w * func(x)))


def shape_derivative_volume(mesh: CurvilinearMesh, f_local, f, V, n_quad: int = 8,
                            quad: EdgeQuadrature | None = None) -> float:
    r"""d/dt \int_{Omega_t} f_t dx = \int_Omega f' dx + \int_Gamma (V . n) f ds.

    ``f_local`` is the local shape derivative f' as a function of x (or None if
    f does not depend on the shape); the boundary term runs over the wall edges.
    """
    quad = quad or edge_quadrature(mesh, n_quad)
    vol = 0.0 if f_local is None else volume_integral(mesh, f_local, n_quad)
    return vol + quad.integrate(_normal_velocity(quad, mesh, V) * f(quad.x))


def shape_derivative_boundary(mesh: CurvilinearMesh, f_local, f, grad_f, V, n_quad: int = 8,
                              quad: EdgeQuadrature | None = None) -> float:
    r"""d/dt \int_{Gamma_t} f_t ds = \int_Gamma f' + (V . n)(df/dn + K f) ds."""
    quad = quad or edge_quadrature(mesh, n_quad)
    x, n = quad.x, quad.normal
    loc = 0.0 if f_local is None else f_local(x)
    dfdn = np.sum(grad_f(x) * n, axis=-1)
    vn = _normal_velocity(quad, mesh, V)
    return quad.integrate(loc + vn * (dfdn + quad.curvature * f(x)))


def normal_material_derivative(grad_vn, n, V=None, tol: float = 1e-10):
    """dn/dt = -grad_Gamma(V . n).

    The identity assumes V = (V . n) n; if V is given and has a tangential part
    larger than ``tol`` a warning is issued.
    """
    if V is not None:
        V = np.asarray(V, float)
        tang = V - np.sum(V * n, axis=-1, keepdims=True) * n
        if np.max(np.abs(tang), initial=0.0) > tol:
            warnings.warn("perturbation field has a tangential component; "
                          "dn/dt = -grad_Gamma(V.n) only holds for normal fields", stacklevel=2)
    return -tangential_gradient(grad_vn, n)


def dirichlet_local_derivative(dwD_dn, dw_dn, vn):
    """w' = d(w_D - w)/dn (V . n) for w = w_D on Gamma with w_D independent of the shape."""
    return (np.asarray(dwD_dn) - np.asarray(dw_dn)) * np.asarray(vn)


def neumann_local_derivative(vn, dwN_dn, d2w_dn2, grad_gamma_w, grad_gamma_vn):
    """dw'/dn = (V . n)(dw_N/dn - d2w/dn2) + grad_Gamma w . grad_Gamma (V . n)."""
    return (np.asarray(vn) * (np.asarray(dwN_dn) - np.asarray(d2w_dn2))
            + np.sum(np.asarray(grad_gamma_w) * np.asarray(grad_gamma_vn), axis=-1))
