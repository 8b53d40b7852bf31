"""Steady solver: pseudo-transient continuation with Newton steps and direct sparse solves."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .. import gas as G
from .residual import NavierStokesDG

log = logging.getLogger(__name__)


@dataclass
class SolverSettings:
    tol: float = 1e-10          # on ||R||_2
    max_iter: int = 300
    cfl0: float = 5.0
    cfl_max: float = 1e12
    cfl_growth: float = 4.0     # cap on the per-step CFL increase
    max_fail: int = 30
    chord_max_iter: int = 30    # warm-started solves using a frozen factorization


class ConvergenceError(RuntimeError):
    def __init__(self, message, history=None, state=None):
        super().__init__(message)
        self.history = history or []
        self.state = state


class SparseLU:
    """Sparse LU with a cheap diagonal-pivoting attempt checked against a random solve.

    DG Jacobians have well-conditioned diagonal blocks, so pivoting on the
    diagonal with a minimum-degree ordering of A + A^T keeps fill low; if the
    check fails the factorization is redone with threshold partial pivoting.
    """

    def __init__(self, A: sp.spmatrix, check_tol: float = 1e-8):
        A = A.tocsc()
        self.shape = A.shape
        b = np.random.default_rng(0).standard_normal(A.shape[0])
        self.lu = None
        try:
            lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", options=dict(DiagPivotThresh=0.0))
            for trans, M in (("N", A), ("T", A.T)):
                x = lu.solve(b, trans=trans)
                if not np.all(np.isfinite(x)) or np.linalg.norm(M @ x - b) > check_tol * np.linalg.norm(b):
                    raise RuntimeError("inaccurate diagonal-pivot factorization")
            self.lu = lu
        except RuntimeError:
            log.info("diagonal pivoting failed; using partial pivoting")
            self.lu = spla.splu(A, permc_spec="COLAMD")

    def solve(self, b, trans: str = "N"):
        return self.lu.solve(np.asarray(b, float), trans=trans)


def factorize(A: sp.spmatrix) -> SparseLU:
    return SparseLU(A)


@dataclass
class SolveResult:
    U: np.ndarray
    history: list = field(default_factory=list)
    iterations: int = 0
    lu: object = None           # factorization of the exact Jacobian at U (if computed)

    @property
    def residual_norm(self) -> float:
        return self.history[-1][1] if self.history else float("nan")


def _local_mass_over_dt(disc: NavierStokesDG, U, cfl):
    s, gas = disc.space, disc.gas
    uv = s.eval_volume(U)
    rho = uv[..., 0]
    speed = np.linalg.norm(uv[..., 1:3], axis=-1) / rho + np.sqrt(gas.gamma * np.maximum(G.pressure(uv, gas), 1e-12) / rho)
    area = s.wJ.sum(axis=1)
    h = np.sqrt(area) / (s.p + 1)
    nu = gas.mu * max(gas.gamma / gas.prandtl, 4.0 / 3.0) / rho.min(axis=1)
    lam = speed.max(axis=1) + nu / h
    dt = cfl * h / lam
    blocks = s.mass / dt[:, None, None]
    E, nb = s.n_elements, s.nb
    data = np.einsum("eab,cd->eacbd", blocks, np.eye(4)).reshape(E, nb * 4, nb * 4)
    return sp.block_diag(list(data), format="csr") if E < 2 else sp.bsr_matrix(
        (data, np.arange(E), np.arange(E + 1)), shape=(E * nb * 4,) * 2).tocsr()


def solve_steady(disc: NavierStokesDG, U0: np.ndarray, settings: SolverSettings | None = None,
                 monitor=None, keep_factorization: bool = False) -> SolveResult:
    """Drive R(U) = 0 from U0.  ``monitor(U)`` may return (J_drag, J_lift) for the history."""
    st = settings or SolverSettings()
    U = np.array(U0, dtype=float)
    if not disc.admissible(U):
        raise ConvergenceError("initial state is not admissible")
    R = disc.residual(U)
    rn = float(np.linalg.norm(R))
    hist = []

    def record(it, cfl):
        obj = monitor(U) if monitor is not None else (np.nan, np.nan)
        hist.append((it, rn, cfl, float(obj[0]), float(obj[1])))
        log.debug("iter %d |R| %.3e CFL %.3e", it, rn, cfl)

    cfl = st.cfl0
    record(0, cfl)
    fails = 0
    it = 0
    while rn > st.tol:
        it += 1
        if it > st.max_iter or fails > st.max_fail:
            raise ConvergenceError(f"no convergence after {it - 1} iterations (|R| = {rn:.3e})", hist, U)
        J = disc.jacobian(U)
        A = J + _local_mass_over_dt(disc, U, cfl) if cfl < st.cfl_max else J
        try:
            lu = factorize(A)
            dU = -lu.solve(R.ravel()).reshape(U.shape)
        except RuntimeError:
            cfl *= 0.1
            fails += 1
            continue
        if not np.all(np.isfinite(dU)):
            cfl *= 0.1
            fails += 1
            continue
        Un = U + dU
        Rn = disc.residual(Un) if disc.admissible(Un) else None
        rn_new = float(np.linalg.norm(Rn)) if Rn is not None else np.inf
        if not np.isfinite(rn_new) or rn_new > 10 * rn:
            cfl = max(cfl * 0.1, 1e-3)
            fails += 1
            continue
        ratio = rn / max(rn_new, 1e-300)
        cfl = min(cfl * min(max(ratio, 0.1), st.cfl_growth), st.cfl_max)
        U, R, rn = Un, Rn, rn_new
        record(it, cfl)
    lu = factorize(disc.jacobian(U)) if keep_factorization else None
    return SolveResult(U, hist, it, lu)


def solve_warm(disc: NavierStokesDG, U0: np.ndarray, lu, tol: float = 1e-10, max_iter: int = 30,
               fallback: SolverSettings | None = None) -> SolveResult:
    """Chord iterations U <- U - A^{-1} R(U) with a frozen factorization ``lu``.

    Meant for small perturbations of a converged problem, where the frozen
    Jacobian contracts the error by a large factor per step.  Switches to Newton
    steps with fresh Jacobians if the contraction is poor, and to the full
    continuation solver if those fail as well.
    """
    U = np.array(U0, dtype=float)
    R = disc.residual(U)
    rn = float(np.linalg.norm(R))
    hist = [(0, rn, np.inf, np.nan, np.nan)]
    solver = lu
    for it in range(1, max_iter + 1):
        if rn <= tol:
            break
        Un = U - solver.solve(R.ravel()).reshape(U.shape)
        ok = np.all(np.isfinite(Un)) and disc.admissible(Un)
        Rn = disc.residual(Un) if ok else None
        rn_new = float(np.linalg.norm(Rn)) if ok else np.inf
        if rn_new > 0.5 * rn:
            if solver is lu:
                solver = factorize(disc.jacobian(U))  # fresh Newton steps from here on
                continue
            break
        U, R, rn = Un, Rn, rn_new
        hist.append((it, rn, np.inf, np.nan, np.nan))
    if rn <= tol:
        return SolveResult(U, hist, len(hist) - 1)
    log.info("warm solve stalled at |R| = %.3e, falling back to continuation", rn)
    res = solve_steady(disc, U, fallback or SolverSettings(tol=tol, cfl0=1e3))
    res.history = hist + res.history
    return res
