import numpy as np
import pytest

from nsshape.case import FlowCase
from nsshape.dg.newton import SolverSettings
from nsshape.dg.objective import ForceObjective
from nsshape.dg.residual import BoundaryData
from nsshape.gas import GasModel, freestream_state
from nsshape.geometry import generate_naca0012


@pytest.fixture(scope="session")
def small_flow():
    """Coarse low-Reynolds airfoil flow at p = 2; converges in a few seconds."""
    gas = GasModel.for_flow(0.5, 500.0)
    u_inf = freestream_state(0.5, 2.0, gas)
    mesh = generate_naca0012(16, n_radial=6, first_layer=0.05)
    case = FlowCase.converge(mesh, 2, gas, BoundaryData(u_inf), SolverSettings(tol=1e-11))
    objs = {k: ForceObjective.for_freestream(k, u_inf, gas, 2.0) for k in ("drag", "lift")}
    return case, objs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_states(rng, n, gas):
    """Admissible conserved states with moderate Mach numbers."""
    rho = rng.uniform(0.5, 2.0, n)
    v = rng.uniform(-1.0, 1.0, (n, 2))
    p = rng.uniform(0.5, 2.0, n)
    from nsshape.gas import conserved_from_primitive

    return conserved_from_primitive(rho, v, p, gas)
