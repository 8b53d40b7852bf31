"""Finite-difference shape gradients with one quartic bump per wall edge, and their
comparison against Hadamard pairings."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import multiprocessing as mp
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry.perturb import quartic_bump

log = logging.getLogger(__name__)

SCHEMES = ("central", "forward")


class PreconditionError(ValueError):
    pass


class BasisMismatchError(ValueError):
    pass


def _check_step(h: float, scheme: str) -> None:
    if scheme not in SCHEMES:
        raise PreconditionError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if not (np.isfinite(h) and h > 0):
        raise PreconditionError(f"FD amplitude must be positive, got {h!r}")


def fd_gradient(J, h: float = 1e-4, scheme: str = "central") -> float:
    """dJ/de at e = 0 for a scalar function J(e) (central or forward differences)."""
    _check_step(h, scheme)
    if scheme == "central":
        return (J(h) - J(-h)) / (2 * h)
    return (J(h) - J(0.0)) / h


def richardson_ratio(J, h: float = 1e-4) -> float:
    """|fd(h) - fd(h/2)| / |fd(h/2) - fd(h/4)|, about 4 for a smooth J and central differences."""
    f = [fd_gradient(J, h / 2**k) for k in range(3)]
    den = abs(f[1] - f[2])
    return abs(f[0] - f[1]) / den if den > 0 else np.inf


def noise_floor(adjoint_norms, tol: float, h: float, scheme: str = "central") -> float:
    """FD noise from incomplete convergence: |dJ| <= ||z|| ||R|| per solve, divided by the step."""
    z = max(float(n) for n in np.atleast_1d(adjoint_norms))
    return z * tol / h if scheme == "central" else 2 * z * tol / h


@dataclass
class FDEntry:
    edge_id: int
    h: float
    scheme: str
    J_plus: dict
    J_minus: dict
    converged: bool

    def derivative(self, kind: str) -> float:
        d = 2 * self.h if self.scheme == "central" else self.h
        return (self.J_plus[kind] - self.J_minus[kind]) / d

    def to_json(self) -> dict:
        return {"edge_id": self.edge_id, "h": self.h, "scheme": self.scheme,
                "J_plus": self.J_plus, "J_minus": self.J_minus, "converged": self.converged}

    @classmethod
    def from_json(cls, d) -> "FDEntry":
        return cls(int(d["edge_id"]), float(d["h"]), d["scheme"], dict(d["J_plus"]),
                   dict(d["J_minus"]), bool(d["converged"]))


@dataclass
class FDCampaign:
    entries: list
    objectives: tuple
    h: float
    scheme: str
    tol: float
    mesh_hash: str
    noise_floor: dict = field(default_factory=dict)
    richardson: dict = field(default_factory=dict)
    config_hash: str = "-"

    @property
    def edges(self) -> np.ndarray:
        return np.array([e.edge_id for e in self.entries])

    def values(self, kind: str) -> np.ndarray:
        return np.array([e.derivative(kind) for e in self.entries])

    @property
    def failed(self) -> list:
        return [e.edge_id for e in self.entries if not e.converged]

    def failure_report(self) -> str:
        bad = self.failed
        if not bad:
            return "all perturbed solves converged"
        return f"{len(bad)} of {len(self.entries)} perturbed solves failed: edges {bad}"

    def to_csv(self, path, kind: str) -> None:
        with open(path, "w", newline="") as f:
            f.write(f"# config_hash {self.config_hash}\n# mesh_hash {self.mesh_hash}\n")
            f.write(f"# objective {kind}\n# noise_floor {self.noise_floor.get(kind, float('nan'))!r}\n")
            for k, v in self.richardson.items():
                f.write(f"# richardson edge {k} {v!r}\n")
            w = csv.writer(f)
            w.writerow(["edge_id", "h", "scheme", "J_plus", "J_minus", "dJde", "converged"])
            for e in self.entries:
                w.writerow([e.edge_id, repr(e.h), e.scheme, repr(e.J_plus[kind]), repr(e.J_minus[kind]),
                            repr(e.derivative(kind)), int(e.converged)])


# -- campaign over the wall edges of a converged flow case ----------------------

def _cache_key(case_id: str, edge: int, h: float, scheme: str) -> str:
    return hashlib.sha256(f"{case_id}|{edge}|{h!r}|{scheme}".encode()).hexdigest()[:20]


def _atomic_write_json(path, data) -> None:
    tmp = f"{path}.{os.getpid()}.tmp"
    with open(tmp, "w") as f:
        json.dump(data, f)
    os.replace(tmp, path)


def bump_entry(case, objectives, edge: int, h: float, scheme: str, support_radius: float = 0.5) -> FDEntry:
    """Objective values on the meshes deformed by +-h (or +h and 0) times the bump on ``edge``."""
    from .dg.objective import compute_objective

    V = quartic_bump(case.mesh, edge, support_radius=support_radius)
    ts = (h, -h) if scheme == "central" else (h,)
    Js, ok = [], True
    for t in ts:
        sol = case.perturbed(V, t)
        ok &= sol.converged
        Js.append({o.kind: compute_objective(sol.disc, sol.U, o) for o in objectives})
    if scheme == "forward":
        Js.append({o.kind: compute_objective(case.disc, case.U, o) for o in objectives})
    return FDEntry(int(edge), float(h), scheme, Js[0], Js[1], bool(ok))


_WORKER = {}


def _worker_init(case, objectives, support_radius):
    _WORKER.update(case=case, objectives=objectives, support_radius=support_radius)


def _worker_run(args):
    edge, h, scheme = args
    w = _WORKER
    return bump_entry(w["case"], w["objectives"], edge, h, scheme, w["support_radius"]).to_json()


def run_campaign(case, objectives, edges=None, h: float = 1e-4, scheme: str = "central",
                 cache_dir=None, workers: int = 1, support_radius: float = 0.5,
                 adjoint_norms=None, config_hash: str = "-") -> FDCampaign:
    """One FD value per wall edge for each objective.

    Entries already present in ``cache_dir`` are reused, new ones are written
    atomically as they finish, so an interrupted campaign resumes where it stopped.
    """
    _check_step(h, scheme)
    mesh_hash = case.mesh.content_hash
    edges = list(case.mesh.wall_edges if edges is None else edges)
    kinds = tuple(o.kind for o in objectives)
    case_id = f"{mesh_hash}|p{case.p}|{config_hash}|{kinds}|{support_radius!r}"
    results, todo = {}, []
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
    for e in edges:
        path = None if cache_dir is None else os.path.join(cache_dir, _cache_key(case_id, e, h, scheme) + ".json")
        if path is not None and os.path.exists(path):
            with open(path) as f:
                results[e] = FDEntry.from_json(json.load(f))
        else:
            todo.append((e, path))
    if todo:
        log.info("FD campaign: %d cached, %d to run", len(results), len(todo))
        case.lu  # factorize once before any fork
        jobs = [(e, h, scheme) for e, _ in todo]
        paths = dict(todo)
        if workers > 1 and len(todo) > 1:
            ctx = mp.get_context("fork")
            with ctx.Pool(workers, _worker_init, (case, objectives, support_radius)) as pool:
                for d in pool.imap_unordered(_worker_run, jobs):
                    entry = FDEntry.from_json(d)
                    results[entry.edge_id] = entry
                    if paths[entry.edge_id]:
                        _atomic_write_json(paths[entry.edge_id], d)
        else:
            for e, hh, sc in jobs:
                entry = bump_entry(case, objectives, e, hh, sc, support_radius)
                results[e] = entry
                if paths[e]:
                    _atomic_write_json(paths[e], entry.to_json())
                log.debug("edge %d: %s", e, {k: entry.derivative(k) for k in kinds})
    camp = FDCampaign([results[e] for e in edges], kinds, h, scheme, case.settings.tol, mesh_hash,
                      config_hash=config_hash)
    if adjoint_norms is not None:
        camp.noise_floor = {k: noise_floor(adjoint_norms[k], case.settings.tol, h, scheme) for k in kinds}
    if camp.failed:
        log.warning(camp.failure_report())
    return camp


def campaign_richardson(case, objective, edges, h: float = 1e-4, support_radius: float = 0.5) -> dict:
    """Richardson ratios on sentinel edges (see ``richardson_ratio``)."""
    from .dg.objective import compute_objective

    out = {}
    for e in edges:
        V = quartic_bump(case.mesh, e, support_radius=support_radius)

        def J(t):
            sol = case.perturbed(V, t)
            return compute_objective(sol.disc, sol.U, objective)

        out[int(e)] = richardson_ratio(J, h)
    return out


# -- comparison ---------------------------------------------------------------------

@dataclass
class ComparisonReport:
    edges: np.ndarray
    fd: np.ndarray
    hadamard: dict                  # mode -> per-edge pairings
    objective: str
    noise_floor: float = 0.0
    config_hash: str = "-"

    def rel_errors(self, mode: str) -> np.ndarray:
        scale = np.maximum(np.abs(self.fd), self.noise_floor)
        scale = np.where(scale > 0, scale, 1.0)
        return (self.hadamard[mode] - self.fd) / scale

    def metrics(self, mode: str) -> dict:
        h, fd = self.hadamard[mode], self.fd
        nfd = np.linalg.norm(fd)
        big = np.abs(fd) > self.noise_floor
        return {
            "rel_l2": float(np.linalg.norm(h - fd) / nfd) if nfd > 0 else float(np.linalg.norm(h)),
            "max_rel": float(np.max(np.abs(h - fd)) / np.max(np.abs(fd))) if nfd > 0 else np.inf,
            "sign_agreement": float(np.mean(np.sign(h[big]) == np.sign(fd[big]))) if big.any() else np.nan,
            "below_noise": int(np.sum(~big)),
        }

    def summary(self) -> str:
        lines = [f"{self.objective}: FD noise floor {self.noise_floor:.2e}"]
        for mode in self.hadamard:
            m = self.metrics(mode)
            lines.append(f"  {mode:12s} rel L2 {m['rel_l2']:.4f}  max rel {m['max_rel']:.4f}  "
                         f"sign agreement {m['sign_agreement']:.3f}")
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            f.write(f"# config_hash {self.config_hash}\n# objective {self.objective}\n")
            f.write(f"# noise_floor {self.noise_floor!r}\n")
            for mode in self.hadamard:
                f.write(f"# {mode} " + " ".join(f"{k}={v!r}" for k, v in self.metrics(mode).items()) + "\n")
            w = csv.writer(f)
            w.writerow(["edge_id", "fd", "hadamard_pointwise", "hadamard_variational", "rel_err_pw", "rel_err_var"])
            for i, e in enumerate(self.edges):
                w.writerow([int(e), repr(float(self.fd[i])), repr(float(self.hadamard["pointwise"][i])),
                            repr(float(self.hadamard["variational"][i])),
                            repr(float(self.rel_errors("pointwise")[i])),
                            repr(float(self.rel_errors("variational")[i]))])


def compare(campaign: FDCampaign, pairings: dict, kind: str, edges=None, mesh_hash: str | None = None) -> ComparisonReport:
    """Per-edge FD values against Hadamard pairings ``{mode: array over edges}``.

    ``edges`` and ``mesh_hash`` describe the bump basis the pairings were computed
    with; they must match the campaign's.
    """
    if mesh_hash is not None and mesh_hash != campaign.mesh_hash:
        raise BasisMismatchError(f"campaign mesh {campaign.mesh_hash} differs from gradient mesh {mesh_hash}")
    cedges = campaign.edges
    if edges is not None and not np.array_equal(np.asarray(edges), cedges):
        raise BasisMismatchError("campaign and gradient use different bump edges")
    for mode, v in pairings.items():
        if np.shape(v) != cedges.shape:
            raise BasisMismatchError(f"{mode}: {np.shape(v)} pairings for {cedges.size} FD values")
    return ComparisonReport(cedges, campaign.values(kind), {m: np.asarray(v, float) for m, v in pairings.items()},
                            kind, campaign.noise_floor.get(kind, 0.0), campaign.config_hash)


def read_header(path) -> dict:
    """'# key value' comment lines at the top of an artifact."""
    meta = {}
    with open(path) as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, val = line[1:].strip().partition(" ")
            meta.setdefault(key, val)
    return meta


def load_campaign_csv(path) -> FDCampaign:
    meta = read_header(path)
    kind = meta.get("objective", "J")
    rows = []
    with open(path) as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    for r in csv.DictReader(lines):
        rows.append(FDEntry(int(r["edge_id"]), float(r["h"]), r["scheme"], {kind: float(r["J_plus"])},
                            {kind: float(r["J_minus"])}, bool(int(r["converged"]))))
    if not rows:
        raise ValueError(f"{path}: empty campaign")
    camp = FDCampaign(rows, (kind,), rows[0].h, rows[0].scheme, float("nan"), meta.get("mesh_hash", "-"),
                      config_hash=meta.get("config_hash", "-"))
    if "noise_floor" in meta:
        camp.noise_floor = {kind: float(meta["noise_floor"])}
    return camp


def read_table(path) -> dict:
    """Columns of a CSV artifact (comment lines skipped); numeric columns become float arrays."""
    with open(path) as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    cols = rows[0]
    out = {}
    for i, c in enumerate(cols):
        vals = [r[i] for r in rows[1:]]
        try:
            out[c] = np.array([float(v) for v in vals], dtype=float)
        except ValueError:
            out[c] = np.array(vals)
    return out
