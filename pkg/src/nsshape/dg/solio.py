"""Plain-text solution files and convergence-history CSVs.

Layout::

    # nsshape solution
    role flow|adjoint
    mesh_hash <16 hex chars>
    config_hash <hex or ->
    p <int>
    gas gamma prandtl mu R
    objective <tag or ->
    shape E nb 4
    <E*nb lines of 4 coefficients, element-major, basis index fastest>

Floats are written with 17 significant digits, which round-trips exactly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..gas import GasModel

ROLES = ("flow", "adjoint")


class SolutionFileError(ValueError):
    pass


@dataclass
class SolutionFile:
    U: np.ndarray
    p: int
    mesh_hash: str
    gas: GasModel
    role: str = "flow"
    config_hash: str = "-"
    objective: str = "-"


def save_solution(path, sol: SolutionFile) -> None:
    if sol.role not in ROLES:
        raise SolutionFileError(f"unknown role {sol.role!r}")
    U = np.asarray(sol.U, float)
    E, nb, m = U.shape
    if nb != (sol.p + 1) ** 2 or m != 4:
        raise SolutionFileError(f"coefficient shape {U.shape} does not match p={sol.p}")
    g = sol.gas
    with open(path, "w") as f:
        f.write("# nsshape solution\n")
        f.write(f"role {sol.role}\nmesh_hash {sol.mesh_hash}\nconfig_hash {sol.config_hash}\n")
        f.write(f"p {sol.p}\n")
        f.write("gas " + " ".join(repr(float(v)) for v in (g.gamma, g.prandtl, g.mu, g.R)) + "\n")
        f.write(f"objective {sol.objective}\n")
        f.write(f"shape {E} {nb} 4\n")
        np.savetxt(f, U.reshape(-1, 4), fmt="%.17g")


def load_solution(path, expect_role: str | None = None, mesh_hash: str | None = None) -> SolutionFile:
    with open(path) as f:
        head = f.readline().strip()
        if head != "# nsshape solution":
            raise SolutionFileError(f"{path}: not a solution file")
        meta = {}
        for _ in range(7):
            key, _, val = f.readline().strip().partition(" ")
            meta[key] = val
        data = np.loadtxt(f, ndmin=2)
    try:
        E, nb, m = (int(v) for v in meta["shape"].split())
        gamma, pr, mu, R = (float(v) for v in meta["gas"].split())
        p = int(meta["p"])
    except (KeyError, ValueError) as exc:
        raise SolutionFileError(f"{path}: malformed header ({exc})") from exc
    if data.shape != (E * nb, m):
        raise SolutionFileError(f"{path}: expected {E * nb} rows, found {data.shape[0]}")
    sol = SolutionFile(data.reshape(E, nb, m), p, meta["mesh_hash"], GasModel(gamma, pr, mu, R),
                       meta["role"], meta["config_hash"], meta["objective"])
    if expect_role is not None and sol.role != expect_role:
        raise SolutionFileError(f"{path}: role is {sol.role!r}, expected {expect_role!r}")
    if mesh_hash is not None and sol.mesh_hash != mesh_hash:
        raise SolutionFileError(f"{path}: solution belongs to mesh {sol.mesh_hash}, not {mesh_hash}")
    return sol


def write_history(path, rows, config_hash: str = "-") -> None:
    """rows: iterables (iteration, residual, cfl, J_drag, J_lift)."""
    with open(path, "w", newline="") as f:
        f.write(f"# config_hash {config_hash}\n")
        w = csv.writer(f)
        w.writerow(["iteration", "residual_l2", "cfl", "J_drag", "J_lift"])
        for r in rows:
            w.writerow([int(r[0])] + [repr(float(v)) for v in r[1:]])
