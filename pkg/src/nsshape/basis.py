"""Reference-element polynomials and quadrature on the square [-1, 1]^2.

Solution spaces use an orthonormal tensor Legendre basis, so the basis of
degree p is a prefix-compatible subset of the basis of degree p + 1 (see
:func:`embed_coefficients`).  Geometry uses tensor Lagrange polynomials on
equispaced nodes.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

# Local faces, counter-clockwise: 0: eta=-1, 1: xi=+1, 2: eta=+1, 3: xi=-1.
# A face parameter s in [-1, 1] runs counter-clockwise around the element.
FACE_COUNT = 4


def face_points(face: int, s: np.ndarray) -> np.ndarray:
    """Reference coordinates (len(s), 2) of face parameter values s."""
    s = np.asarray(s, dtype=float)
    one = np.ones_like(s)
    if face == 0:
        return np.stack([s, -one], axis=-1)
    if face == 1:
        return np.stack([one, s], axis=-1)
    if face == 2:
        return np.stack([-s, one], axis=-1)
    if face == 3:
        return np.stack([-one, -s], axis=-1)
    raise ValueError(f"face index must be 0..3, got {face}")


FACE_TANGENTS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def legendre_1d(p: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal Legendre values and first two derivatives.

    Returns an array (3, len(x), p + 1) with value, d/dx, d2/dx2.
    """
    x = np.asarray(x, dtype=float)
    P = np.zeros((3, x.size, p + 1))
    P[0, :, 0] = 1.0
    if p >= 1:
        P[0, :, 1] = x
        P[1, :, 1] = 1.0
    for n in range(1, p):
        # (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}, differentiated twice
        a, b = (2 * n + 1) / (n + 1), n / (n + 1)
        P[0, :, n + 1] = a * x * P[0, :, n] - b * P[0, :, n - 1]
        P[1, :, n + 1] = a * (P[0, :, n] + x * P[1, :, n]) - b * P[1, :, n - 1]
        P[2, :, n + 1] = a * (2 * P[1, :, n] + x * P[2, :, n]) - b * P[2, :, n - 1]
    scale = np.sqrt((2 * np.arange(p + 1) + 1) / 2.0)
    return P * scale


def lagrange_1d(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Lagrange basis on ``nodes``: array (3, len(x), len(nodes))."""
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    V = np.vander(nodes, n, increasing=True)
    C = np.linalg.inv(V)  # column m holds monomial coefficients of l_m
    x = np.asarray(x, dtype=float)
    mono = np.zeros((3, x.size, n))
    k = np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        mono[0] = x[:, None] ** k
        mono[1, :, 1:] = k[1:] * x[:, None] ** (k[1:] - 1)
        mono[2, :, 2:] = k[2:] * (k[2:] - 1) * x[:, None] ** (k[2:] - 2)
    return mono @ C


def equispaced(q: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, q + 1)


def tensor_eval(table_xi: np.ndarray, table_eta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor-product basis from 1D tables evaluated at paired points.

    ``table_*`` are (3, npts, n) for the same npts points.  Basis index is
    ``j * n + i`` with i the xi index and j the eta index.  Returns values
    (npts, nb), gradients (npts, 2, nb) and Hessians (npts, 3, nb) ordered
    (xixi, xieta, etaeta).
    """
    a, b = table_xi, table_eta
    npts, n = a.shape[1], a.shape[2]

    def outer(u, v):
        return (v[:, :, None] * u[:, None, :]).reshape(npts, n * n)

    val = outer(a[0], b[0])
    grad = np.stack([outer(a[1], b[0]), outer(a[0], b[1])], axis=1)
    hess = np.stack([outer(a[2], b[0]), outer(a[1], b[1]), outer(a[0], b[2])], axis=1)
    return val, grad, hess


def modal_basis(p: int, pts: np.ndarray):
    """Orthonormal tensor Legendre basis of degree p at reference points (npts, 2)."""
    pts = np.atleast_2d(pts)
    return tensor_eval(legendre_1d(p, pts[:, 0]), legendre_1d(p, pts[:, 1]))


def geometry_basis(q: int, pts: np.ndarray):
    """Tensor Lagrange basis of degree q on equispaced nodes at points (npts, 2)."""
    pts = np.atleast_2d(pts)
    nodes = equispaced(q)
    return tensor_eval(lagrange_1d(nodes, pts[:, 0]), lagrange_1d(nodes, pts[:, 1]))


def tensor_gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss points (n*n, 2) ordered like the basis (xi fastest) and weights."""
    x, w = gauss_legendre(n)
    X, Y = np.meshgrid(x, x)
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    return pts, np.outer(w, w).ravel()


def embed_coefficients(U: np.ndarray, p_from: int, p_to: int) -> np.ndarray:
    """Map modal coefficients (..., (p_from+1)^2, m) to degree p_to.

    Raising the degree pads with zeros (exact embedding); lowering it truncates,
    which is the L2 projection because the basis is orthonormal on the
    reference element.
    """
    n0, n1 = p_from + 1, p_to + 1
    shape = U.shape
    V = U.reshape(shape[:-2] + (n0, n0, shape[-1]))
    out = np.zeros(shape[:-2] + (n1, n1, shape[-1]), dtype=U.dtype)
    k = min(n0, n1)
    out[..., :k, :k, :] = V[..., :k, :k, :]
    return out.reshape(shape[:-2] + (n1 * n1, shape[-1]))
