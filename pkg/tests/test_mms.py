import numpy as np
import pytest
from numpy.testing import assert_allclose

from nsshape.fdcheck import read_table
from nsshape.mms import MMSRow, MMSStudy, convergence_study, mms_problem, no_slip_wall_solution, smooth_solution


@pytest.fixture(scope="module")
def sol():
    return smooth_solution()


def test_source_vanishes_for_uniform_flow():
    from nsshape.mms import ManufacturedSolution
    import sympy as sp

    u = ManufacturedSolution(sp.Integer(1), sp.Rational(1, 2), sp.Integer(0), sp.Rational(5, 7))
    x = np.random.default_rng(0).uniform(size=(10, 2))
    assert np.all(u.source(x) == 0.0)


def test_wall_solution_satisfies_wall_conditions():
    s = no_slip_wall_solution()
    x = np.stack([np.linspace(0, 1, 7), np.zeros(7)], -1)
    u = s.state(x)
    assert np.all(u[:, 1:3] == 0.0)
    # continuity and energy hold on y = 0 without source
    src = s.source(x)
    assert_allclose(src[:, 0], 0.0, atol=1e-14)
    assert_allclose(src[:, 3], 0.0, atol=1e-14)


def test_exact_interpolant_residual_decreases(sol):
    res = []
    for n in (2, 4):
        disc = mms_problem(sol, n, 2)
        U = disc.space.project(sol.state)
        # residual per unit area of the projected exact solution
        res.append(np.abs(disc.residual(U)).max() * n**2)
    assert res[1] < res[0]


def test_orders_of_synthetic_study(tmp_path):
    rows = [MMSRow(1, n, 1 / n, np.array([(1 / n) ** 2, 0, 0, 0]), 1) for n in (2, 4, 8)]
    study = MMSStudy(rows)
    assert_allclose(study.orders(1), [2.0, 2.0])
    study.to_csv(tmp_path / "m.csv", config_hash="h")
    t = read_table(tmp_path / "m.csv")
    assert_allclose(t["observed_order"][1:], 2.0)
    assert np.isnan(t["observed_order"][0])


def test_p1_study_converges(sol):
    study = convergence_study(orders=(1,), meshes=(2, 4, 8), sol=sol)
    assert study.orders(1)[-1] >= 1.5
