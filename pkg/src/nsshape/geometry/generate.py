"""Structured curvilinear meshes: NACA0012 O-mesh, disks and mapped rectangles."""
from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares

from ..basis import equispaced, lagrange_1d
from .airfoil import AirfoilGeometry
from .mesh import BoundaryTag, CurvilinearMesh, InvalidMeshError


def smoothstep(x):
    """C^2 quintic ramp from 0 (x<=0) to 1 (x>=1)."""
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x**2)


def arclength_params(curve, ta: float, tb: float, q: int, n_sample: int = 401) -> np.ndarray:
    """Curve parameters splitting [ta, tb] into q pieces of equal arc length."""
    th = np.linspace(ta, tb, n_sample)
    seg = np.linalg.norm(np.diff(curve(th), axis=0), axis=-1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    out = np.interp(s[-1] * np.arange(q + 1) / q, s, th)
    out[0], out[-1] = ta, tb
    return out


def tangent_fit_params(curve, tangent, ta: float, tb: float, q: int) -> np.ndarray:
    """Curve parameters of the q+1 interpolation nodes of one boundary edge.

    End nodes sit at ta and tb.  Interior nodes are slid along the curve so that
    the degree-q interpolant leaves each end along the curve tangent there, which
    makes a chain of edges tangent-continuous.  On a circle an exact solution
    exists near uniform spacing; on other curves the least-squares optimum is
    used, and uniform spacing is kept if the fit misbehaves.
    """
    uniform = arclength_params(curve, ta, tb, q)
    if q < 2:
        return uniform
    d = lagrange_1d(equispaced(q), np.array([-1.0, 1.0]))[1]  # d/dxi at the two ends
    Ta, Tb = tangent(np.array([ta]))[0], tangent(np.array([tb]))[0]
    h = tb - ta

    def residual(z):
        th = uniform.copy()
        th[1:-1] = uniform[1:-1] + z * h
        P = curve(th)
        out = []
        for row, T in ((d[0], Ta), (d[1], Tb)):
            v = row @ P
            out.append((v[0] * T[1] - v[1] * T[0]) / np.linalg.norm(v))
        return np.array(out)

    z0 = np.zeros(q - 1)
    r0 = np.linalg.norm(residual(z0))
    sol = least_squares(residual, z0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    th = uniform.copy()
    th[1:-1] += sol.x * h
    ok = np.all(np.diff(th) > 0) and np.max(np.abs(sol.x)) < 0.05 and np.linalg.norm(sol.fun) <= r0
    return th if ok else uniform


def _elements_from_grid(ids: np.ndarray, q: int) -> np.ndarray:
    """Element connectivity from a node-id grid ids[I, J] (I along xi, J along eta)."""
    ni, nj = (ids.shape[0] - 1) // q, (ids.shape[1] - 1) // q
    els = []
    for b in range(nj):
        for a in range(ni):
            blk = ids[a * q:(a + 1) * q + 1, b * q:(b + 1) * q + 1]
            els.append(blk.T.ravel())  # xi fastest
    return np.array(els, dtype=np.int64)


def _boundary_from_tagger(nodes, elements, q, tagger, wall_order=None):
    """Find unmatched faces, tag them by midpoint, and order wall edges along the loop."""
    from .mesh import face_node_indices

    count: dict = {}
    for e, el in enumerate(elements):
        for f in range(4):
            idx = face_node_indices(q, f)
            key = tuple(sorted((el[idx[0]], el[idx[-1]])))
            count.setdefault(key, []).append((e, f))
    open_faces = [v[0] for v in count.values() if len(v) == 1]
    rows = []
    for e, f in open_faces:
        idx = face_node_indices(q, f)
        mid = nodes[elements[e, idx[len(idx) // 2]]] if q % 2 == 0 else 0.5 * (
            nodes[elements[e, idx[0]]] + nodes[elements[e, idx[-1]]])
        rows.append((e, f, int(tagger(mid))))
    rows = np.array(rows, dtype=np.int64)
    is_wall = np.isin(rows[:, 2], [BoundaryTag.WALL_ADIA, BoundaryTag.WALL_ISO])
    walls, others = rows[is_wall], rows[~is_wall]
    if len(walls):
        start = {}
        for r in walls:
            idx = face_node_indices(q, r[1])
            start[elements[r[0], idx[0]]] = (r, elements[r[0], idx[-1]])
        first = walls[0] if wall_order is None else wall_order(walls)
        idx = face_node_indices(q, first[1])
        node = elements[first[0], idx[0]]
        ordered = []
        for _ in range(len(walls)):
            if node not in start:
                raise InvalidMeshError("wall edges do not form a closed loop")
            r, node = start[node]
            ordered.append(r)
        walls = np.array(ordered)
    return np.concatenate([walls.reshape(-1, 3), others.reshape(-1, 3)])


def generate_naca0012(n_wall_edges: int = 32, farfield_radius: float = 20.0, degree: int = 4,
                      n_radial: int = 14, first_layer: float = 0.012,
                      wall_tag: BoundaryTag = BoundaryTag.WALL_ADIA,
                      airfoil: AirfoilGeometry | None = None, tangent_fit: bool = True,
                      farfield_only: bool = False) -> CurvilinearMesh:
    """Structured O-mesh around a NACA0012 section.

    The xi direction runs along the wall (trailing edge, lower surface, leading
    edge, upper surface) and eta runs outward, so face 0 of the first element layer
    lies on the wall and face 2 of the last layer on the circular far field
    centred at mid-chord.  ``farfield_only`` tags the wall as far field (for
    free-stream preservation checks).
    """
    if n_wall_edges < 8:
        raise ValueError(f"n_wall_edges must be >= 8, got {n_wall_edges}")
    if farfield_radius < 10:
        raise ValueError(f"farfield_radius must be >= 10 chords, got {farfield_radius}")
    if not 1 <= degree <= 4:
        raise ValueError(f"geometric degree must be in [1, 4], got {degree}")
    if n_radial < 2:
        raise ValueError("n_radial must be >= 2")
    foil = airfoil or AirfoilGeometry()
    q, N, M = degree, n_wall_edges, n_radial
    ni = N * q
    theta = 2 * np.pi * np.arange(ni + 1) / ni
    # element ends are cosine-clustered; nodes inside an element follow arc length
    place = tangent_fit_params if tangent_fit else (lambda c, t, a, b, q: arclength_params(c, a, b, q))
    for k in range(N):
        theta[k * q:(k + 1) * q + 1] = place(foil.wall_point, foil.wall_tangent,
                                             theta[k * q], theta[(k + 1) * q], q)

    # radial coordinate: geometric layers, smooth in the continuous layer index
    centre = np.array([0.5 * foil.chord, 0.0])
    L_typ = farfield_radius

    def layer_s(g):
        return (g - 1) / (g**M - 1)

    lo, hi = 1.0 + 1e-9, 10.0
    target = first_layer / L_typ
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if layer_s(mid) > target else (lo, mid)
    g = 0.5 * (lo + hi)
    rho = np.arange(M * q + 1) / q
    s_rad = (g**rho - 1) / (g**M - 1)

    nodes = np.empty((ni, M * q + 1, 2))
    for J in range(M * q + 1):
        th = theta[:ni]
        xw = foil.wall_point(th)
        t = foil.wall_tangent(th)
        normal = np.stack([-t[:, 1], t[:, 0]], axis=-1)  # into the fluid
        # near the trailing edge, fan the lines out like the far-field rays
        te_w = np.exp(-(((foil.chord - xw[:, 0]) / (0.05 * foil.chord)) ** 2))
        fan = np.stack([np.cos(th), -np.sin(th)], axis=-1)
        normal = normal + te_w[:, None] * (fan - normal)
        normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
        xf = centre + farfield_radius * np.stack([np.cos(th), -np.sin(th)], axis=-1)
        span = xf - xw
        L = np.linalg.norm(span, axis=-1)
        u = span / L[:, None]
        d = s_rad[J] * L
        beta = smoothstep(d / (2.0 * foil.chord))[:, None]
        direction = (1 - beta) * normal + beta * u
        nodes[:, J] = xw + d[:, None] * direction
        if J == M * q:
            nodes[:, J] = xf
    ids = np.arange(ni * (M * q + 1)).reshape(ni, M * q + 1)
    ids = np.concatenate([ids, ids[:1]], axis=0)  # periodic in xi
    flat = nodes.reshape(-1, 2)
    elements = _elements_from_grid(ids, q)
    wall = BoundaryTag.FARFIELD if farfield_only else wall_tag
    r_split = 0.5 * (farfield_radius + foil.chord)

    def tagger(x):
        return BoundaryTag.FARFIELD if np.linalg.norm(x - centre) > r_split else wall

    def first_wall(walls):
        return walls[np.argmin(walls[:, 0])]

    boundary = _boundary_from_tagger(flat, elements, q, tagger, wall_order=first_wall)
    return CurvilinearMesh(flat, elements, q, boundary)


def generate_disk(n_boundary_edges: int = 32, degree: int = 4, radius: float = 1.0,
                  centre=(0.0, 0.0), tag: BoundaryTag = BoundaryTag.WALL_ADIA,
                  tangent_fit: bool = True, n_radial: int | None = None) -> CurvilinearMesh:
    """Five-block disk mesh: a square core and four curved blocks to the circle.

    The circle is the (only) boundary, traversed counter-clockwise, so the normal
    points radially outward and the curvature is +1/radius.
    """
    if n_boundary_edges % 4 or n_boundary_edges < 4:
        raise ValueError("n_boundary_edges must be a positive multiple of 4")
    q, m = degree, n_boundary_edges // 4
    nr = n_radial or max(1, m // 2)
    a = 0.5 * radius / np.sqrt(2) * 1.2
    u = -1 + 2 * np.arange(m * q + 1) / (m * q)

    def circle(phi):
        return radius * np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    def circle_t(phi):
        return np.stack([-np.sin(phi), np.cos(phi)], axis=-1)

    phi = u * np.pi / 4
    offset = np.zeros_like(phi)
    if tangent_fit:
        for k in range(m):
            th = tangent_fit_params(circle, circle_t, phi[k * q], phi[(k + 1) * q], q)
            offset[k * q:(k + 1) * q + 1] = th - phi[k * q:(k + 1) * q + 1]
    blocks = []
    core = np.stack(np.meshgrid(a * u, a * u, indexing="ij"), axis=-1)  # I along x, J along y
    blocks.append(core)
    sr = np.arange(nr * q + 1) / (nr * q)
    east = np.empty((nr * q + 1, m * q + 1, 2))  # I radial (xi), J along (eta): CCW
    for I, s in enumerate(sr):
        w = max(0.0, 1 - (nr * q - I) / q)
        inner = np.stack([np.full_like(u, a), a * u], axis=-1)
        outer = circle(phi + w * offset)
        east[I] = (1 - s) * inner + s * outer
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    blk = east
    for _ in range(4):
        blocks.append(blk)
        blk = blk @ rot.T
    all_nodes, all_ids = [], []
    base = 0
    for b in blocks:
        all_nodes.append(b.reshape(-1, 2))
        all_ids.append(base + np.arange(b.shape[0] * b.shape[1]).reshape(b.shape[:2]))
        base += b.shape[0] * b.shape[1]
    X = np.concatenate(all_nodes)
    key = np.round(X / radius, 10)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    nodes = X[first] + np.asarray(centre)
    elements = np.concatenate([_elements_from_grid(inverse[ids], q) for ids in all_ids])
    boundary = _boundary_from_tagger(nodes, elements, q, lambda x: tag)
    return CurvilinearMesh(nodes, elements, q, boundary)


def generate_rectangle(n: int, degree: int = 4, lower=(0.0, 0.0), upper=(1.0, 1.0),
                       warp: float = 0.0, tags=None) -> CurvilinearMesh:
    """n x n mapped rectangle; ``warp`` bends interior lines with a sine bubble.

    ``tags`` maps side names ('bottom', 'right', 'top', 'left') to boundary tags;
    unspecified sides get DIRICHLET.  Meshes with n, 2n, 4n are nested in the
    reference coordinates of the (shared) map.
    """
    q = degree
    lo, hi = np.asarray(lower, float), np.asarray(upper, float)
    r = np.arange(n * q + 1) / (n * q)
    R, S = np.meshgrid(r, r, indexing="ij")
    bub = warp * np.sin(np.pi * R) * np.sin(np.pi * S)
    X = lo[0] + (hi[0] - lo[0]) * (R + bub)
    Y = lo[1] + (hi[1] - lo[1]) * (S + 0.5 * bub)
    nodes = np.stack([X, Y], axis=-1).reshape(-1, 2)
    ids = np.arange(nodes.shape[0]).reshape(n * q + 1, n * q + 1)
    elements = _elements_from_grid(ids, q)
    tags = dict(tags or {})
    eps = 1e-9 * np.max(hi - lo)

    def tagger(x):
        if abs(x[1] - lo[1]) < eps:
            return tags.get("bottom", BoundaryTag.DIRICHLET)
        if abs(x[0] - hi[0]) < eps:
            return tags.get("right", BoundaryTag.DIRICHLET)
        if abs(x[1] - hi[1]) < eps:
            return tags.get("top", BoundaryTag.DIRICHLET)
        return tags.get("left", BoundaryTag.DIRICHLET)

    boundary = _boundary_from_tagger(nodes, elements, q, tagger)
    return CurvilinearMesh(nodes, elements, q, boundary)
