"""Boundary perturbation fields and perturbation-of-identity mesh deformation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..basis import equispaced, geometry_basis, lagrange_1d
from .generate import smoothstep
from .mesh import CurvilinearMesh, InvalidMeshError, face_node_indices, surface_frame


class DeformationError(InvalidMeshError):
    def __init__(self, message, max_admissible_t=None):
        super().__init__(message)
        self.max_admissible_t = max_admissible_t


def quartic_bump_profile(xi):
    """B(xi) = 16 xi^2 (1 - xi)^2 on [0, 1], zero outside."""
    xi = np.asarray(xi, dtype=float)
    return np.where((xi >= 0) & (xi <= 1), 16 * xi**2 * (1 - xi) ** 2, 0.0)


@dataclass(frozen=True, eq=False)
class PerturbationField:
    """Velocity field V sampled at the geometry nodes of a reference mesh.

    Deformation moves every node by t V(node); fields inside elements and on
    edges are the degree-q interpolants of the nodal values, so the deformed
    geometry is exactly the mapped reference geometry.
    """

    node_values: np.ndarray
    support_radius: float
    label: str = ""

    def edge_velocity(self, mesh: CurvilinearMesh, edge_id: int, s: np.ndarray) -> np.ndarray:
        """Interpolated V at face parameters s of a boundary edge, shape (len(s), 2)."""
        e, f, _ = mesh.boundary[edge_id]
        idx = mesh.elements[e, face_node_indices(mesh.degree, f)]
        ell = lagrange_1d(equispaced(mesh.degree), np.asarray(s, float))[0]
        return ell @ self.node_values[idx]

    def normal_velocity(self, mesh: CurvilinearMesh, edge_id: int, s: np.ndarray) -> np.ndarray:
        fr = surface_frame(mesh, edge_id, s)
        return np.sum(self.edge_velocity(mesh, edge_id, s) * fr.normal, axis=-1)

    def element_velocity(self, mesh: CurvilinearMesh, ref_pts: np.ndarray) -> np.ndarray:
        """Interpolated V at reference points of every element, (E, P, 2)."""
        val = geometry_basis(mesh.degree, ref_pts)[0]
        return np.einsum("pn,end->epd", val, self.node_values[mesh.elements])


def _wall_sampler(mesh: CurvilinearMesh, n_per_edge: int = 48):
    s = np.linspace(-1, 1, n_per_edge)
    walls = mesh.wall_edges
    e, f = mesh.boundary[walls, 0], mesh.boundary[walls, 1]
    x, _, _ = mesh.face_geometry(e, f, s)
    edge = np.repeat(walls, n_per_edge)
    par = np.tile(s, walls.size)
    return x.reshape(-1, 2), edge, par


def closest_wall_points(mesh: CurvilinearMesh, pts: np.ndarray, n_newton: int = 8):
    """Nearest wall point of each query point: (distance, edge id, face parameter, foot point)."""
    xs, edge, par = _wall_sampler(mesh)
    tree = cKDTree(xs)
    _, j = tree.query(pts)
    eid, s = edge[j].copy(), par[j].copy()
    bnd = mesh.boundary
    for k in np.unique(eid):
        sel = np.flatnonzero(eid == k)
        e, f = np.array([bnd[k, 0]]), np.array([bnd[k, 1]])
        sk = s[sel]
        for _ in range(n_newton):
            x, dx, ddx = (a[0] for a in mesh.face_geometry(e, f, sk))
            # per-point evaluation: face_geometry evaluates all s for one element
            r = x - pts[sel]
            g = np.sum(r * dx, axis=-1)
            h = np.sum(dx * dx, axis=-1) + np.sum(r * ddx, axis=-1)
            step = np.where(h > 0, g / np.where(h > 0, h, 1.0), 0.0)
            sk = np.clip(sk - step, -1.0, 1.0)
        s[sel] = sk
    foot = np.empty_like(pts)
    for k in np.unique(eid):
        sel = np.flatnonzero(eid == k)
        x, _, _ = mesh.face_geometry(np.array([bnd[k, 0]]), np.array([bnd[k, 1]]), s[sel])
        foot[sel] = x[0]
    dist = np.linalg.norm(pts - foot, axis=-1)
    return dist, eid, s, foot


def _wall_node_mask(mesh):
    mask = np.zeros(mesh.nodes.shape[0], dtype=bool)
    for k in mesh.wall_edges:
        e, f, _ = mesh.boundary[k]
        mask[mesh.elements[e, face_node_indices(mesh.degree, f)]] = True
    return mask


def _check_support(mesh, support_radius):
    walls = set(mesh.wall_edges.tolist())
    far = [k for k in range(mesh.boundary.shape[0]) if k not in walls]
    if not far:
        return
    idx = np.unique(np.concatenate([mesh.elements[mesh.boundary[k, 0], face_node_indices(mesh.degree, mesh.boundary[k, 1])]
                                    for k in far]))
    dist = closest_wall_points(mesh, mesh.nodes[idx])[0]
    if support_radius >= dist.min():
        raise ValueError(f"support radius {support_radius} reaches the outer boundary "
                         f"(distance {dist.min():.3g})")


def extend_normal_velocity(mesh: CurvilinearMesh, vn, support_radius: float = 0.5,
                           label: str = "") -> PerturbationField:
    """Extend a wall normal velocity vn(edge_id, s) into the domain.

    V(x) = (1 - smoothstep(d / R)) vn(foot) n(foot) with foot the nearest wall
    point and d the distance to it; V vanishes for d >= R.
    """
    _check_support(mesh, support_radius)
    nodes = mesh.nodes
    dist, eid, s, _ = closest_wall_points(mesh, nodes)
    w = 1.0 - smoothstep(dist / support_radius)
    on_wall = _wall_node_mask(mesh)
    w[on_wall] = 1.0
    V = np.zeros_like(nodes)
    active = np.flatnonzero(w > 0)
    for k in np.unique(eid[active]):
        sel = active[eid[active] == k]
        fr = surface_frame(mesh, int(k), s[sel])
        V[sel] = (w[sel] * vn(int(k), s[sel]))[:, None] * fr.normal
    # wall nodes get the edge value at their own node parameter
    q = mesh.degree
    for k in mesh.wall_edges:
        e, f, _ = mesh.boundary[k]
        idx = mesh.elements[e, face_node_indices(q, f)]
        sn = equispaced(q)
        inner = slice(1, q)  # shared end nodes keep the nearest-point value
        fr = surface_frame(mesh, int(k), sn)
        V[idx[inner]] = vn(int(k), sn)[inner, None] * fr.normal[inner]
        for end, sv in ((0, -1.0), (q, 1.0)):
            val = vn(int(k), np.array([sv]))[0]
            if val != 0.0:
                V[idx[end]] = val * fr.normal[end]
    return PerturbationField(V, support_radius, label)


def quartic_bump(mesh: CurvilinearMesh, edge_id: int, amplitude: float = 1.0,
                 support_radius: float = 0.5) -> PerturbationField:
    """Normal velocity amplitude * B(xi) on one wall edge (xi in [0, 1] along it), 0 elsewhere."""
    edge_id = int(edge_id)
    if edge_id not in set(mesh.wall_edges.tolist()):
        raise ValueError(f"edge {edge_id} is not a wall edge")

    def vn(k, s):
        if k != edge_id:
            return np.zeros_like(s)
        return amplitude * quartic_bump_profile((np.asarray(s) + 1) / 2)

    return extend_normal_velocity(mesh, vn, support_radius, label=f"bump:{edge_id}")


def boundary_vector_field(mesh: CurvilinearMesh, func, support_radius: float = 0.5) -> PerturbationField:
    """Extend an ambient vector function given on the wall: V(x) = w(d) func(foot(x))."""
    nodes = mesh.nodes
    dist, _, _, foot = closest_wall_points(mesh, nodes)
    on_wall = _wall_node_mask(mesh)
    foot[on_wall] = nodes[on_wall]
    w = 1.0 - smoothstep(dist / support_radius)
    w[on_wall] = 1.0
    V = w[:, None] * np.asarray(func(foot), float)
    V[w == 0] = 0.0
    return PerturbationField(V, support_radius, "vector")


def deform_mesh(mesh: CurvilinearMesh, V: PerturbationField, t: float) -> CurvilinearMesh:
    """Perturbation of identity x -> x + t V(x) applied to all geometry nodes."""
    if V.node_values.shape != mesh.nodes.shape:
        raise ValueError("perturbation field was built for a different mesh")
    if t == 0:
        return mesh.with_nodes(mesh.nodes.copy(), check=False)
    try:
        return mesh.with_nodes(mesh.nodes + t * V.node_values)
    except InvalidMeshError as err:
        lo, hi = 0.0, abs(t)
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            try:
                mesh.with_nodes(mesh.nodes + np.sign(t) * mid * V.node_values)
                lo = mid
            except InvalidMeshError:
                hi = mid
        raise DeformationError(f"deformation with t={t} inverts the mesh ({err}); "
                               f"largest admissible |t| is about {lo:.4g}", lo) from err
