"""Curvilinear quadrilateral meshes with tagged boundary edges."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property

import numpy as np

from ..basis import FACE_TANGENTS, equispaced, face_points, gauss_legendre, geometry_basis


class BoundaryTag(IntEnum):
    WALL_ADIA = 1
    WALL_ISO = 2
    FARFIELD = 3
    DIRICHLET = 4  # prescribed state, used for manufactured-solution studies

    @property
    def is_wall(self) -> bool:
        return self in (BoundaryTag.WALL_ADIA, BoundaryTag.WALL_ISO)


class InvalidMeshError(ValueError):
    pass


def face_node_indices(q: int, face: int) -> np.ndarray:
    """Local geometry node indices on a face, ordered along the face parameter."""
    n = q + 1
    r = np.arange(n)
    if face == 0:
        return r
    if face == 1:
        return r * n + q
    if face == 2:
        return q * n + r[::-1]
    if face == 3:
        return r[::-1] * n
    raise ValueError(face)


@dataclass(frozen=True, eq=False)
class CurvilinearMesh:
    """Immutable mesh of degree-q Lagrange quadrilaterals.

    ``elements[e]`` lists the (q+1)^2 node ids in tensor order (xi fastest).
    ``boundary[b] = (element, local_face, tag)``; the row index b is the edge id.
    Wall edges come first and are ordered along the wall loop.
    """

    nodes: np.ndarray
    elements: np.ndarray
    degree: int
    boundary: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        elements = np.array(self.elements, dtype=np.int64)
        boundary = np.array(self.boundary, dtype=np.int64).reshape(-1, 3)
        for a in (nodes, elements, boundary):
            a.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "boundary", boundary)
        if not 1 <= self.degree <= 4:
            raise ValueError(f"geometric degree must be in [1, 4], got {self.degree}")
        if elements.shape[1] != (self.degree + 1) ** 2:
            raise ValueError("element connectivity does not match the geometric degree")
        if self.check:
            self.validate()

    # -- topology -----------------------------------------------------------
    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @cached_property
    def face_corners(self) -> np.ndarray:
        """Corner node ids of each element face, shape (E, 4, 2)."""
        q = self.degree
        out = np.empty((self.n_elements, 4, 2), dtype=np.int64)
        for f in range(4):
            idx = face_node_indices(q, f)
            out[:, f, 0] = self.elements[:, idx[0]]
            out[:, f, 1] = self.elements[:, idx[-1]]
        return out

    @cached_property
    def interior_faces(self) -> np.ndarray:
        """Rows (eL, fL, eR, fR) of faces shared by two elements."""
        seen: dict = {}
        pairs = []
        fc = self.face_corners
        for e in range(self.n_elements):
            for f in range(4):
                key = tuple(sorted(fc[e, f]))
                if key in seen:
                    e0, f0 = seen.pop(key)
                    pairs.append((e0, f0, e, f))
                else:
                    seen[key] = (e, f)
        object.__setattr__(self, "_unmatched", seen)
        return np.array(pairs, dtype=np.int64).reshape(-1, 4)

    @property
    def tags(self) -> np.ndarray:
        return self.boundary[:, 2]

    @cached_property
    def wall_edges(self) -> np.ndarray:
        return np.flatnonzero(np.isin(self.tags, [BoundaryTag.WALL_ADIA, BoundaryTag.WALL_ISO]))

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        for a in (self.nodes, self.elements, self.boundary):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(str(self.degree).encode())
        return h.hexdigest()[:16]

    def with_nodes(self, nodes: np.ndarray, check: bool = True) -> "CurvilinearMesh":
        return CurvilinearMesh(nodes, self.elements, self.degree, self.boundary, check=check)

    # -- geometry -----------------------------------------------------------
    def element_nodes(self) -> np.ndarray:
        return self.nodes[self.elements]

    def map_points(self, ref_pts: np.ndarray, elements=None):
        """Physical points, Jacobians and second derivatives of the element maps.

        Returns x (E, P, 2), jac (E, P, 2, 2) with jac[..., d, r] = dx_d/dxi_r,
        hess (E, P, 2, 3) with (xixi, xieta, etaeta) second derivatives.
        """
        val, grad, hess = geometry_basis(self.degree, ref_pts)
        X = self.element_nodes() if elements is None else self.nodes[self.elements[elements]]
        x = np.einsum("pn,end->epd", val, X)
        jac = np.einsum("prn,end->epdr", grad, X)
        h = np.einsum("prn,end->epdr", hess, X)
        return x, jac, h

    def validate(self) -> None:
        fc = self.face_corners
        self.interior_faces
        unmatched = set(self._unmatched.values())
        listed = {(int(e), int(f)) for e, f, _ in self.boundary}
        if listed != unmatched:
            raise InvalidMeshError(
                f"boundary edges do not match unmatched element faces "
                f"({len(listed)} listed, {len(unmatched)} open faces)")
        bad_tags = set(int(t) for t in self.tags) - {int(t) for t in BoundaryTag}
        if bad_tags:
            raise InvalidMeshError(f"unknown boundary tags {sorted(bad_tags)}")
        n = max(self.degree + 2, 4)
        x, w = gauss_legendre(n)
        X, Y = np.meshgrid(np.concatenate([x, equispaced(self.degree)]), np.concatenate([x, equispaced(self.degree)]))
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        _, jac, _ = self.map_points(pts)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        dmin = det.min(axis=1)
        if np.any(dmin <= 0):
            e = int(np.argmin(dmin))
            raise InvalidMeshError(f"element {e} has non-positive Jacobian (min det {dmin[e]:.3e})")
        self._check_wall_loop(fc)

    def _check_wall_loop(self, fc) -> None:
        walls = self.wall_edges
        if walls.size == 0:
            return
        if not np.array_equal(walls, np.arange(walls.size)):
            raise InvalidMeshError("wall edges must come first in the boundary list")
        ends = fc[self.boundary[walls, 0], self.boundary[walls, 1]]
        # consecutive wall edges share a corner and the last closes onto the first
        if not (np.array_equal(ends[:-1, 1], ends[1:, 0]) and ends[-1, 1] == ends[0, 0]):
            raise InvalidMeshError("wall edges do not form one ordered closed loop")
        if len(set(ends[:, 0].tolist())) != walls.size:
            raise InvalidMeshError("wall edges do not form one closed loop")

    def face_geometry(self, elements: np.ndarray, faces: np.ndarray, s: np.ndarray):
        """Points, derivatives in s, and second derivatives along faces.

        Returns x, dx/ds, d2x/ds2 each of shape (len(elements), len(s), 2).
        """
        elements = np.asarray(elements)
        faces = np.asarray(faces)
        out = [np.empty((elements.size, len(s), 2)) for _ in range(3)]
        for f in range(4):
            sel = np.flatnonzero(faces == f)
            if sel.size == 0:
                continue
            pts = face_points(f, s)
            x, jac, hess = self.map_points(pts, elements[sel])
            t = FACE_TANGENTS[f]
            out[0][sel] = x
            out[1][sel] = jac @ t
            # second derivative along a straight reference line
            out[2][sel] = hess[..., 0] * t[0] ** 2 + 2 * hess[..., 1] * t[0] * t[1] + hess[..., 2] * t[1] ** 2
        return tuple(out)


@dataclass(frozen=True)
class SurfaceFrame:
    """Points on a boundary edge with unit normal (out of the domain), tangent,
    curvature K = div_Gamma n and arc-length weight ds = |dx/ds_ref| ds_ref."""

    point: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    curvature: np.ndarray
    ds: np.ndarray


def frame_from_derivatives(x, dx, ddx) -> SurfaceFrame:
    speed = np.linalg.norm(dx, axis=-1)
    t = dx / speed[..., None]
    n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
    cross = dx[..., 0] * ddx[..., 1] - dx[..., 1] * ddx[..., 0]
    K = cross / speed**3
    return SurfaceFrame(x, n, t, K, speed)


def straight_edges(mesh: CurvilinearMesh, elements: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """True for faces whose geometry nodes are collinear to round-off."""
    out = np.empty(len(elements), dtype=bool)
    for i, (e, f) in enumerate(zip(elements, faces)):
        x = mesh.nodes[mesh.elements[e, face_node_indices(mesh.degree, f)]]
        d = x[-1] - x[0]
        r = x - x[0]
        dev = np.abs(r[:, 0] * d[1] - r[:, 1] * d[0])
        out[i] = dev.max() <= 1e-14 * (d @ d)
    return out


def surface_frame(mesh: CurvilinearMesh, edge_id: int, s: np.ndarray) -> SurfaceFrame:
    """Frame at reference face parameters s in [-1, 1] of boundary edge ``edge_id``.

    The tangent follows the counter-clockwise orientation of the element, so the
    normal (t_y, -t_x) points out of the mesh domain, i.e. into the body on walls.
    """
    e, f, _ = mesh.boundary[edge_id]
    x, dx, ddx = mesh.face_geometry(np.array([e]), np.array([f]), np.atleast_1d(np.asarray(s, float)))
    fr = frame_from_derivatives(x[0], dx[0], ddx[0])
    if straight_edges(mesh, [e], [f])[0]:
        fr.curvature[:] = 0.0
    return fr


def edge_integral(mesh: CurvilinearMesh, func, edges=None, n_quad: int = 12) -> float:
    """Integrate func(frame) over the given boundary edges (default: wall edges)."""
    edges = mesh.wall_edges if edges is None else np.atleast_1d(edges)
    s, w = gauss_legendre(n_quad)
    total = 0.0
    for k in edges:
        fr = surface_frame(mesh, int(k), s)
        total += float(np.sum(w * fr.ds * func(fr)))
    return total


def mesh_area(mesh: CurvilinearMesh, n_quad: int = 8) -> float:
    from ..basis import tensor_gauss

    pts, w = tensor_gauss(n_quad)
    _, jac, _ = mesh.map_points(pts)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    return float(np.sum(det * w))


@dataclass
class EdgeQuadrature:
    """Gauss points on a list of boundary edges with their frames; arrays are (edges, points, ...)."""

    edges: np.ndarray
    s: np.ndarray
    weights: np.ndarray
    x: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    curvature: np.ndarray
    ds: np.ndarray
    tags: np.ndarray
    arclength: np.ndarray | None = None

    @property
    def wds(self) -> np.ndarray:
        return self.ds * self.weights

    def integrate(self, values) -> float:
        return float(np.sum(self.wds * values))


def edge_quadrature(mesh: CurvilinearMesh, n_points: int = 8, edges=None) -> EdgeQuadrature:
    """Quadrature on boundary edges (default: the wall loop, in loop order)."""
    s, w = gauss_legendre(n_points)
    edges = mesh.wall_edges if edges is None else np.atleast_1d(np.asarray(edges))
    e, f = mesh.boundary[edges, 0], mesh.boundary[edges, 1]
    x, dx, ddx = mesh.face_geometry(e, f, s)
    fr = frame_from_derivatives(x, dx, ddx)
    fr.curvature[straight_edges(mesh, e, f)] = 0.0
    # arc length from the start of the first edge, accumulated in list order
    g, gw = gauss_legendre(12)
    partial = np.empty((edges.size, n_points))
    for j, sj in enumerate(s):
        sig = -1 + (sj + 1) * (g + 1) / 2
        partial[:, j] = np.linalg.norm(mesh.face_geometry(e, f, sig)[1], axis=-1) @ gw * (sj + 1) / 2
    lengths = np.linalg.norm(mesh.face_geometry(e, f, g)[1], axis=-1) @ gw
    start = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    return EdgeQuadrature(edges, s, w, fr.point, fr.normal, fr.tangent, fr.curvature, fr.ds,
                          mesh.boundary[edges, 2], start[:, None] + partial)
