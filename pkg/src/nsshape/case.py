"""A converged flow problem together with everything needed to re-solve it on perturbed meshes."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .basis import embed_coefficients
from .dg.newton import ConvergenceError, SolverSettings, factorize, solve_steady, solve_warm
from .dg.objective import ForceObjective, compute_objective
from .dg.residual import BoundaryData, NavierStokesDG
from .dg.space import DGSpace
from .gas import GasModel
from .geometry.mesh import CurvilinearMesh
from .geometry.perturb import PerturbationField, deform_mesh

log = logging.getLogger(__name__)


@dataclass
class PerturbedSolve:
    t: float
    mesh: CurvilinearMesh
    disc: NavierStokesDG
    U: np.ndarray
    converged: bool
    residual: float


@dataclass
class FlowCase:
    mesh: CurvilinearMesh
    p: int
    gas: GasModel
    bc: BoundaryData
    U: np.ndarray
    settings: SolverSettings = field(default_factory=SolverSettings)
    history: list = field(default_factory=list)
    _lu: object = field(default=None, repr=False)
    _disc: NavierStokesDG | None = field(default=None, repr=False)

    @classmethod
    def converge(cls, mesh, p, gas, bc, settings=None, U0=None, p_start=1, monitor_objectives=()):
        """Solve on ``mesh`` at order p, sequencing up from ``p_start`` when no U0 is given."""
        settings = settings or SolverSettings()
        U, hist = None, []
        orders = [p] if U0 is not None else list(range(min(p_start, p), p + 1))
        for q in orders:
            disc = NavierStokesDG(DGSpace(mesh, q), gas, bc)
            if U is None:
                start = U0 if U0 is not None else disc.space.constant(bc.u_inf)
            else:
                start = embed_coefficients(U, q - 1, q)
            st = settings if q == p else SolverSettings(**{**settings.__dict__, "tol": max(settings.tol, 1e-8)})
            if U is not None:
                st = SolverSettings(**{**st.__dict__, "cfl0": max(st.cfl0, 50.0)})
            monitor = None
            if monitor_objectives:
                monitor = lambda V, d=disc: tuple(compute_objective(d, V, o) for o in monitor_objectives)
            t0 = time.perf_counter()
            res = solve_steady(disc, start, st, monitor=monitor)
            log.info("p=%d: %d iterations, |R| = %.2e, %.1f s", q, res.iterations,
                     res.history[-1][1], time.perf_counter() - t0)
            hist.extend([(len(hist) + h[0],) + tuple(h[1:]) for h in res.history])
            U = res.U
        case = cls(mesh, p, gas, bc, U, settings, hist)
        case._disc = disc
        return case

    @property
    def disc(self) -> NavierStokesDG:
        if self._disc is None:
            self._disc = NavierStokesDG(DGSpace(self.mesh, self.p), self.gas, self.bc)
        return self._disc

    @property
    def space(self) -> DGSpace:
        return self.disc.space

    @property
    def lu(self):
        if self._lu is None:
            self._lu = factorize(self.disc.jacobian(self.U))
        return self._lu

    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.disc.residual(self.U)))

    def objective(self, obj: ForceObjective) -> float:
        return compute_objective(self.disc, self.U, obj)

    def perturbed(self, V: PerturbationField, t: float) -> PerturbedSolve:
        """Re-solve on the mesh deformed by t V, warm-started from the base state."""
        mesh = deform_mesh(self.mesh, V, t)
        disc = NavierStokesDG(DGSpace(mesh, self.p), self.gas, self.bc)
        try:
            res = solve_warm(disc, self.U, self.lu, tol=self.settings.tol,
                             max_iter=self.settings.chord_max_iter, fallback=self.settings)
            return PerturbedSolve(t, mesh, disc, res.U, True, res.history[-1][1])
        except ConvergenceError as exc:
            log.warning("perturbed solve at t=%g did not converge: %s", t, exc)
            U = exc.state if exc.state is not None else self.U
            return PerturbedSolve(t, mesh, disc, U, False, float("nan"))
