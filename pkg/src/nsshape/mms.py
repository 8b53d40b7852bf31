"""Manufactured solutions: symbolic source terms, convergence studies and injected wall fields."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .dg.newton import SolverSettings, solve_steady
from .dg.residual import BoundaryData, NavierStokesDG
from .dg.space import DGSpace
from .gas import GasModel
from .geometry.generate import generate_rectangle

log = logging.getLogger(__name__)

X, Y = sp.symbols("x y", real=True)


def _lambdify(exprs):
    f = sp.lambdify((X, Y), exprs, "numpy")

    def call(x):
        x = np.asarray(x, float)
        vals = f(x[..., 0], x[..., 1])
        return np.stack([np.broadcast_to(np.asarray(v, float), x.shape[:-1]) for v in vals], axis=-1)

    return call


@dataclass
class ManufacturedSolution:
    """Primitive fields (rho, v1, v2, p) as sympy expressions in x, y."""

    rho: sp.Expr
    v1: sp.Expr
    v2: sp.Expr
    p: sp.Expr
    gas: GasModel = field(default_factory=lambda: GasModel(mu=0.01))

    def __post_init__(self):
        g = self.gas
        rho, v1, v2, p = self.rho, self.v1, self.v2, self.p
        E = p / (g.gamma - 1) + rho * (v1**2 + v2**2) / 2
        T = p / (rho * g.R)
        self.T = T
        cons = [rho, rho * v1, rho * v2, E]
        vel = [v1, v2]
        xs = [X, Y]
        div = sp.diff(v1, X) + sp.diff(v2, Y)
        tau = [[g.mu * (sp.diff(vel[i], xs[j]) + sp.diff(vel[j], xs[i]))
                - (sp.Rational(2, 3) * g.mu * div if i == j else 0) for j in range(2)] for i in range(2)]
        kappa = g.kappa
        src = []
        for k in range(4):
            s = 0
            for j in range(2):
                if k == 0:
                    F = rho * vel[j]
                elif k in (1, 2):
                    i = k - 1
                    F = rho * vel[i] * vel[j] + (p if i == j else 0) - tau[i][j]
                else:
                    F = (E + p) * vel[j] - sum(tau[j][i] * vel[i] for i in range(2)) - kappa * sp.diff(T, xs[j])
                s += sp.diff(F, xs[j])
            src.append(s)
        self._state = _lambdify(cons)
        self._source = _lambdify(src)
        self._temperature = _lambdify([T])

    def state(self, x):
        return self._state(x)

    def source(self, x):
        return self._source(x)

    def temperature(self, x):
        return self._temperature(x)[..., 0]


def smooth_solution(gas: GasModel | None = None) -> ManufacturedSolution:
    """A smooth subsonic field used for order-of-accuracy studies."""
    pi = sp.pi
    return ManufacturedSolution(
        rho=1 + sp.Rational(1, 10) * sp.sin(pi * X) * sp.cos(pi * Y),
        v1=sp.Rational(1, 2) + sp.Rational(1, 10) * sp.sin(pi * X) * sp.sin(pi * Y),
        v2=sp.Rational(1, 5) + sp.Rational(1, 10) * sp.cos(2 * pi * X) * sp.sin(pi * Y),
        p=sp.Rational(5, 7) + sp.Rational(1, 20) * sp.cos(pi * X) * sp.cos(pi * Y / 2),
        gas=gas or GasModel(mu=0.01),
    )


def no_slip_wall_solution(a: float = 0.5, b: float = 0.3, gas: GasModel | None = None) -> ManufacturedSolution:
    """v = y^2 (a, b) and harmonic T = 1 + 0.1 (x^2 - y^2) at constant pressure.

    On y = 0 this field has v = 0, grad v = 0 and Lap T = 0 while dT/dn = 0, so it
    satisfies the adiabatic no-slip conditions and the continuity and energy
    equations hold there without source.
    """
    gas = gas or GasModel(mu=0.01)
    T = 1 + sp.Rational(1, 10) * (X**2 - Y**2)
    p = sp.Rational(5, 7)
    return ManufacturedSolution(rho=p / (gas.R * T), v1=sp.nsimplify(a) * Y**2, v2=sp.nsimplify(b) * Y**2,
                                p=p, gas=gas)


@dataclass
class MMSRow:
    p: int
    n: int
    h: float
    errors: np.ndarray   # L2 error per conserved component
    iterations: int

    @property
    def error(self) -> float:
        return float(np.linalg.norm(self.errors))


@dataclass
class MMSStudy:
    rows: list

    def orders(self, p: int) -> np.ndarray:
        r = [row for row in self.rows if row.p == p]
        e = np.array([row.error for row in r])
        h = np.array([row.h for row in r])
        return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])

    def to_csv(self, path, config_hash: str = "-") -> None:
        with open(path, "w", newline="") as f:
            f.write(f"# config_hash {config_hash}\n")
            w = csv.writer(f)
            w.writerow(["p", "n", "h", "l2_error", "observed_order", "iterations"])
            for p in sorted({r.p for r in self.rows}):
                rows = [r for r in self.rows if r.p == p]
                orders = [float("nan")] + list(self.orders(p))
                for r, o in zip(rows, orders):
                    w.writerow([r.p, r.n, repr(r.h), repr(r.error), repr(float(o)), r.iterations])


def mms_problem(sol: ManufacturedSolution, n: int, p: int, warp: float = 0.05, degree: int = 4):
    mesh = generate_rectangle(n, degree=degree, warp=warp)
    u_ref = sol.state(np.array([0.5, 0.5]))
    bc = BoundaryData(u_inf=u_ref, dirichlet=sol.state)
    return NavierStokesDG(DGSpace(mesh, p), sol.gas, bc, source=sol.source)


def solve_mms(sol: ManufacturedSolution, n: int, p: int, warp: float = 0.05,
              settings: SolverSettings | None = None) -> MMSRow:
    disc = mms_problem(sol, n, p, warp)
    U0 = disc.space.project(sol.state)
    res = solve_steady(disc, U0, settings or SolverSettings(tol=1e-11, cfl0=1e4))
    err = disc.space.l2_error(res.U, sol.state)
    return MMSRow(p, n, 1.0 / n, np.asarray(err), res.iterations)


def convergence_study(orders=(1, 2, 3), meshes=(2, 4, 8), warp: float = 0.05,
                      sol: ManufacturedSolution | None = None) -> MMSStudy:
    sol = sol or smooth_solution()
    rows = []
    for p in orders:
        for n in meshes:
            row = solve_mms(sol, n, p, warp)
            log.info("MMS p=%d n=%d error %.3e", p, n, row.error)
            rows.append(row)
    return MMSStudy(rows)


def _smooth_adjoint(x):
    x = np.asarray(x, float)
    X_, Y_ = x[..., 0], x[..., 1]
    return np.stack([1 + 0.2 * np.sin(X_), 0.5 + 0.1 * Y_, -0.3 + 0.1 * X_ * Y_, 0.2 + 0.1 * np.cos(Y_)], axis=-1)


def injected_wall_density(sol: ManufacturedSolution, p: int, n: int = 2, z=None, n_points: int = 8):
    """Gradient densities for the projection of an exact field onto degree p.

    The bottom side y = 0 of the unit square is treated as an adiabatic wall
    (``sol`` should satisfy the wall conditions there, see
    :func:`no_slip_wall_solution`); ``z`` is a smooth adjoint field.  Returns the
    :class:`~nsshape.hadamard.GradientDensity`.
    """
    from dataclasses import replace

    from .geometry.mesh import BoundaryTag, edge_quadrature
    from .hadamard import gradient_density

    mesh = generate_rectangle(n, degree=4)
    corners = mesh.nodes[mesh.face_corners[mesh.boundary[:, 0], mesh.boundary[:, 1]]]
    bottom = np.flatnonzero(np.all(corners[..., 1] == 0.0, axis=1))
    wp = edge_quadrature(mesh, n_points, edges=bottom)
    wp = replace(wp, tags=np.full(bottom.size, int(BoundaryTag.WALL_ADIA)))
    space = DGSpace(mesh, p)
    zspace = DGSpace(mesh, p + 1)
    U = space.project(sol.state)
    zc = zspace.project(z or _smooth_adjoint)
    return gradient_density(space, U, zspace, zc, sol.gas, wp=wp)
