"""Plain-text mesh format.

::

    # nsshape mesh
    dimension 2
    degree <q>
    nodes <N>
    <id> <x> <y>
    elements <M>
    <id> <node ids, xi fastest>
    boundary <B>
    <edge id> <element id> <local face> <tag>

Floats are written with 17 significant digits, so a save/load round trip is
lossless.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import BoundaryTag, CurvilinearMesh


def save_mesh(mesh: CurvilinearMesh, path, config_hash: str | None = None) -> None:
    head = "# nsshape mesh" + (f" config_hash {config_hash}" if config_hash else "")
    lines = [head, "dimension 2", f"degree {mesh.degree}", f"nodes {mesh.nodes.shape[0]}"]
    lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.nodes)]
    lines.append(f"elements {mesh.n_elements}")
    lines += [f"{i} " + " ".join(map(str, row)) for i, row in enumerate(mesh.elements)]
    lines.append(f"boundary {mesh.boundary.shape[0]}")
    lines += [f"{i} {e} {f} {BoundaryTag(t).name}" for i, (e, f, t) in enumerate(mesh.boundary)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> CurvilinearMesh:
    it = iter(Path(path).read_text().splitlines())
    header = next(it)
    if not header.startswith("# nsshape mesh"):
        raise ValueError(f"{path}: not a mesh file")

    def keyword(name):
        key, val = next(it).split()
        if key != name:
            raise ValueError(f"{path}: expected '{name}', found '{key}'")
        return int(val)

    if keyword("dimension") != 2:
        raise ValueError("only two-dimensional meshes are supported")
    q = keyword("degree")
    nodes = np.array([[float(v) for v in next(it).split()[1:]] for _ in range(keyword("nodes"))])
    elements = np.array([[int(v) for v in next(it).split()[1:]] for _ in range(keyword("elements"))],
                        dtype=np.int64)
    rows = []
    for _ in range(keyword("boundary")):
        _, e, f, tag = next(it).split()
        rows.append((int(e), int(f), int(BoundaryTag[tag])))
    return CurvilinearMesh(nodes, elements, q, np.array(rows, dtype=np.int64).reshape(-1, 3))
