"""Stages of the gradient-verification pipeline, each reading and writing plain files in one directory."""
from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .adjoint import adjoint, adjoint_bc_report, solve_adjoint
from .basis import embed_coefficients
from .case import FlowCase
from .config import RunConfig
from .dg.newton import ConvergenceError, SolverSettings
from .dg.objective import ForceObjective, compute_objective
from .dg.residual import BoundaryData
from .dg.solio import SolutionFile, SolutionFileError, load_solution, save_solution, write_history
from .dg.space import DGSpace
from .fdcheck import campaign_richardson, compare, load_campaign_csv, read_header, read_table, run_campaign
from .gas import GasModel, freestream_state
from .geometry.generate import generate_naca0012
from .geometry.mesh import BoundaryTag, InvalidMeshError
from .geometry.meshio import load_mesh, save_mesh
from .geometry.perturb import quartic_bump
from .hadamard import MODES, gradient_density, pair_with_field, wall_points, write_gradient_csv, write_plot_data

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A stage could not run or one of its contracts failed."""


class Pipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.hash = cfg.hash()
        self.out = Path(cfg.output.directory)
        self.out.mkdir(parents=True, exist_ok=True)
        cfg.dump(self.out / "config.resolved.yaml")
        g = cfg.gas
        self.gas = GasModel.for_flow(g.mach, g.reynolds, g.gamma, g.prandtl)
        self.u_inf = freestream_state(g.mach, g.alpha_deg, self.gas)
        iso = cfg.geometry.wall == "isothermal"
        self.bc = BoundaryData(self.u_inf, cfg.geometry.wall_temperature if iso else None)
        self.objectives = [ForceObjective.for_freestream(k, self.u_inf, self.gas, g.alpha_deg,
                                                         trace=cfg.objective.trace)
                           for k in cfg.objective.kinds]
        s = cfg.solver
        self.settings = SolverSettings(tol=s.tol, max_iter=s.max_iter, cfl0=s.cfl0, cfl_max=s.cfl_max,
                                       cfl_growth=s.cfl_growth)
        self._mesh = None

    # -- paths and consistency ------------------------------------------------
    def path(self, name: str) -> Path:
        return self.out / name

    def _require(self, name: str, stage: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise StageError(f"missing {p}; run the '{stage}' stage first")
        return p

    def _check_hash(self, path: Path, found: str | None) -> None:
        if found != self.hash:
            raise StageError(f"{path} was produced with config hash {found}, current config is {self.hash}; "
                             "re-run the earlier stages or use the matching config")

    @property
    def mesh(self):
        if self._mesh is None:
            p = self._require("mesh.txt", "mesh")
            head = p.open().readline().split()
            self._check_hash(p, head[-1] if "config_hash" in head else None)
            self._mesh = load_mesh(p)
        return self._mesh

    # -- stages -----------------------------------------------------------------
    def stage_mesh(self):
        geo = self.cfg.geometry
        tag = BoundaryTag.WALL_ISO if geo.wall == "isothermal" else BoundaryTag.WALL_ADIA
        try:
            mesh = generate_naca0012(geo.n_wall_edges, geo.farfield_radius, geo.degree, geo.n_radial,
                                     geo.first_layer, wall_tag=tag)
        except InvalidMeshError as exc:
            raise StageError(f"mesh generation failed: {exc}; adjust the geometry grading") from exc
        save_mesh(mesh, self.path("mesh.txt"), self.hash)
        self._mesh = mesh
        log.info("mesh: %d elements, %d wall edges, hash %s", mesh.n_elements, mesh.wall_edges.size,
                 mesh.content_hash)
        return mesh

    def stage_solve(self):
        mesh, U, cases = self.mesh, None, {}
        for p in self.cfg.discretization.orders:
            p = int(p)
            U0 = None
            if U is not None and p == prev + 1:
                U0 = embed_coefficients(U, prev, p)
            try:
                case = FlowCase.converge(mesh, p, self.gas, self.bc, self.settings, U0=U0,
                                         monitor_objectives=self._monitor_objectives())
            except ConvergenceError as exc:
                raise StageError(f"flow solve at p={p} failed: {exc}") from exc
            save_solution(self.path(f"solution_p{p}.txt"),
                          SolutionFile(case.U, p, mesh.content_hash, self.gas, "flow", self.hash))
            write_history(self.path(f"history_p{p}.csv"), case.history, self.hash)
            vals = {o.kind: case.objective(o) for o in self.objectives}
            log.info("p=%d converged, |R| = %.2e, %s", p, case.residual_norm(), vals)
            cases[p], U, prev = case, case.U, p
        return cases

    def _monitor_objectives(self):
        g = self.cfg.gas
        return tuple(ForceObjective.for_freestream(k, self.u_inf, self.gas, g.alpha_deg,
                                                   trace=self.cfg.objective.trace) for k in ("drag", "lift"))

    def load_case(self, p: int) -> FlowCase:
        path = self._require(f"solution_p{p}.txt", "solve")
        try:
            sol = load_solution(path, expect_role="flow", mesh_hash=self.mesh.content_hash)
        except SolutionFileError as exc:
            raise StageError(str(exc)) from exc
        self._check_hash(path, sol.config_hash)
        return FlowCase(self.mesh, p, self.gas, self.bc, sol.U, self.settings)

    def stage_adjoint(self):
        mode = self.cfg.discretization.adjoint_mode
        for p in self.cfg.discretization.orders:
            case = self.load_case(int(p))
            for obj in self.objectives:
                lu = case.lu if mode == "same-p" else None
                res = adjoint(case.disc, case.U, obj, mode, lu=lu)
                save_solution(self.path(f"adjoint_{obj.kind}_p{p}.txt"),
                              SolutionFile(res.z, res.p, self.mesh.content_hash, self.gas, "adjoint",
                                           self.hash, obj.kind))
                rep = adjoint_bc_report(res.disc, res.z, obj)
                rep.to_csv(self.path(f"adjoint_bc_{obj.kind}_p{p}.csv"), self.hash)
                log.info("adjoint %s p=%d (%s): %s", obj.kind, p, mode, rep.summary())

    def load_adjoint(self, p: int, kind: str):
        path = self._require(f"adjoint_{kind}_p{p}.txt", "adjoint")
        try:
            sol = load_solution(path, expect_role="adjoint", mesh_hash=self.mesh.content_hash)
        except SolutionFileError as exc:
            raise StageError(str(exc)) from exc
        self._check_hash(path, sol.config_hash)
        return sol

    def stage_gradient(self):
        n_pts = self.cfg.gradient.n_points
        wp = wall_points(self.mesh, n_pts)
        bumps = [quartic_bump(self.mesh, int(e), support_radius=self.cfg.fd.support_radius)
                 for e in self.mesh.wall_edges]
        out = {}
        for p in self.cfg.discretization.orders:
            case = self.load_case(int(p))
            for obj in self.objectives:
                adj = self.load_adjoint(p, obj.kind)
                dens = gradient_density(case.space, case.U, DGSpace(self.mesh, adj.p), adj.U, self.gas, wp=wp)
                write_gradient_csv(self.path(f"gradient_{obj.kind}_p{p}.csv"), dens, self.hash, obj.kind)
                pairs = {m: np.array([pair_with_field(dens.density(m), wp, self.mesh, V) for V in bumps])
                         for m in MODES}
                with open(self.path(f"pairings_{obj.kind}_p{p}.csv"), "w", newline="") as f:
                    f.write(f"# config_hash {self.hash}\n# mesh_hash {self.mesh.content_hash}\n")
                    w = csv.writer(f)
                    w.writerow(["edge_id", "arclength", "pointwise", "variational"])
                    centres = wp.arclength.mean(axis=1)
                    for i, e in enumerate(self.mesh.wall_edges):
                        w.writerow([int(e), repr(float(centres[i])), repr(float(pairs["pointwise"][i])),
                                    repr(float(pairs["variational"][i]))])
                out[(obj.kind, p)] = pairs
        return out

    def stage_fd(self):
        fd = self.cfg.fd
        failed = []
        for p in self.cfg.discretization.orders:
            case = self.load_case(int(p))
            norms = {o.kind: float(np.linalg.norm(solve_adjoint(case.disc, case.U, o, case.lu)))
                     for o in self.objectives}
            camp = run_campaign(case, self.objectives, h=fd.h, scheme=fd.scheme,
                                cache_dir=self.path("fd_cache"), workers=fd.workers,
                                support_radius=fd.support_radius, adjoint_norms=norms, config_hash=self.hash)
            if fd.richardson_edges:
                edges = [e for e in fd.richardson_edges if e in set(self.mesh.wall_edges.tolist())]
                camp.richardson = campaign_richardson(case, self.objectives[0], edges, fd.h, fd.support_radius)
            for obj in self.objectives:
                camp.to_csv(self.path(f"campaign_{obj.kind}_p{p}.csv"), obj.kind)
            log.info("FD p=%d: %s; noise floor %s; Richardson %s", p, camp.failure_report(),
                     camp.noise_floor, camp.richardson)
            failed += [(p, e) for e in camp.failed]
        if failed:
            raise StageError(f"perturbed solves failed for (p, edge) = {failed}")

    def stage_compare(self):
        reports = {}
        lines = []
        for p in self.cfg.discretization.orders:
            for obj in self.objectives:
                cpath = self._require(f"campaign_{obj.kind}_p{p}.csv", "fd")
                gpath = self._require(f"pairings_{obj.kind}_p{p}.csv", "gradient")
                camp = load_campaign_csv(cpath)
                gmeta = read_header(gpath)
                if camp.config_hash != gmeta.get("config_hash"):
                    raise StageError(f"refusing to compare {cpath} (config {camp.config_hash}) with "
                                     f"{gpath} (config {gmeta.get('config_hash')})")
                self._check_hash(cpath, camp.config_hash)
                data = read_table(gpath)
                rep = compare(camp, {"pointwise": data["pointwise"], "variational": data["variational"]},
                              obj.kind, edges=data["edge_id"].astype(int), mesh_hash=gmeta.get("mesh_hash"))
                rep.to_csv(self.path(f"comparison_{obj.kind}_p{p}.csv"))
                write_plot_data(self.path(f"plot_{obj.kind}_p{p}.dat"), data["arclength"],
                                {"fd": rep.fd, "pointwise": rep.hadamard["pointwise"],
                                 "variational": rep.hadamard["variational"]},
                                f"{obj.kind} gradient per wall bump vs arc length, p={p}, config {self.hash}")
                reports[(obj.kind, p)] = rep
                lines.append(f"p={p} " + rep.summary())
        self.path("comparison_summary.txt").write_text(f"# config_hash {self.hash}\n" + "\n".join(lines) + "\n")
        for line in lines:
            log.info(line)
        return reports

    def stage_mms(self):
        from .mms import convergence_study, smooth_solution

        m = self.cfg.mms
        study = convergence_study(m.orders, m.meshes, m.warp, smooth_solution(GasModel(mu=m.mu)))
        study.to_csv(self.path("mms.csv"), self.hash)
        bad = []
        for p in m.orders:
            orders = study.orders(p)
            log.info("MMS p=%d observed orders %s", p, np.round(orders, 2))
            if orders.size and orders[-1] < p + 0.5:
                bad.append((p, float(orders[-1])))
        if bad:
            raise StageError(f"MMS orders below p + 1/2: {bad}")
        return study

    def run_all(self):
        self.stage_mesh()
        self.stage_solve()
        self.stage_adjoint()
        self.stage_gradient()
        self.stage_fd()
        reports = self.stage_compare()
        self.stage_mms()
        return reports
