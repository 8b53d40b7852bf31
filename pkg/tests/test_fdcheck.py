import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nsshape.fdcheck import (BasisMismatchError, FDCampaign, FDEntry, PreconditionError, bump_entry,
                             compare, fd_gradient, load_campaign_csv, noise_floor, read_table,
                             richardson_ratio, run_campaign)


def test_linear_objective():
    assert abs(fd_gradient(lambda e: 3 * e, 1e-4) - 3.0) <= 1e-10
    assert abs(fd_gradient(lambda e: 3 * e, 1e-4, "forward") - 3.0) <= 1e-10


def test_quadratic_objective_central_is_exact():
    assert fd_gradient(lambda e: e**2, 1e-3) == 0.0


@pytest.mark.parametrize("h", [0.0, -1e-4, np.nan])
def test_bad_step_rejected(h):
    with pytest.raises(PreconditionError):
        fd_gradient(lambda e: e, h)


def test_unknown_scheme_rejected():
    with pytest.raises(PreconditionError):
        fd_gradient(lambda e: e, 1e-4, "backward")


def test_richardson_ratio_of_smooth_function():
    assert_allclose(richardson_ratio(np.sin, 0.1), 4.0, rtol=1e-2)


def test_noise_floor_formula():
    assert noise_floor([2.0, 5.0], 1e-11, 1e-4) == pytest.approx(5e-7)
    assert noise_floor(5.0, 1e-11, 1e-4, "forward") == pytest.approx(1e-6)


@settings(max_examples=30)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(1e-4, 1e-2))
def test_affine_functions_recovered(a, b, h):
    assert fd_gradient(lambda e: a * e + b, h) == pytest.approx(a, abs=1e-9 * (1 + abs(b) / h))


@pytest.fixture(scope="module")
def campaign(small_flow, tmp_path_factory):
    case, objs = small_flow
    cache = tmp_path_factory.mktemp("fdcache")
    camp = run_campaign(case, list(objs.values()), edges=[3, 11], h=1e-4, cache_dir=cache)
    return camp, cache


def test_campaign_matches_independent_solves(small_flow, campaign):
    case, objs = small_flow
    camp, _ = campaign
    assert not camp.failed
    for entry in camp.entries:
        ref = bump_entry(case, list(objs.values()), entry.edge_id, 1e-4, "central")
        for k in objs:
            assert_allclose(entry.derivative(k), ref.derivative(k), rtol=1e-9, atol=1e-12)


def test_cached_campaign_is_identical(small_flow, campaign):
    case, objs = small_flow
    camp, cache = campaign
    again = run_campaign(case, list(objs.values()), edges=[3, 11], h=1e-4, cache_dir=cache)
    for k in objs:
        assert np.array_equal(again.values(k), camp.values(k))


def test_parallel_campaign_matches_serial(small_flow, campaign):
    case, objs = small_flow
    camp, _ = campaign
    par = run_campaign(case, list(objs.values()), edges=[3, 11], h=1e-4, workers=2)
    for k in objs:
        assert_allclose(par.values(k), camp.values(k), rtol=1e-9, atol=1e-12)


def test_campaign_csv_round_trip(tmp_path, campaign):
    camp, _ = campaign
    path = tmp_path / "c.csv"
    camp.to_csv(path, "lift")
    back = load_campaign_csv(path)
    assert_allclose(back.values("lift"), camp.values("lift"), rtol=1e-15)
    cols = read_table(path)
    assert_allclose(cols["edge_id"], [3, 11])


def _synthetic(values):
    entries = [FDEntry(i, 1.0, "central", {"drag": v}, {"drag": -v}, True) for i, v in enumerate(values)]
    return FDCampaign(entries, ("drag",), 1.0, "central", 1e-12, "mesh")


def test_self_comparison_is_exact():
    camp = _synthetic([0.1, -0.2, 0.3])
    rep = compare(camp, {"pointwise": camp.values("drag"), "variational": camp.values("drag")}, "drag")
    for mode in ("pointwise", "variational"):
        assert rep.metrics(mode)["rel_l2"] == 0.0
        assert rep.metrics(mode)["sign_agreement"] == 1.0


def test_swapping_modes_swaps_metrics():
    camp = _synthetic([0.1, -0.2, 0.3])
    a, b = np.array([0.1, -0.1, 0.2]), np.array([0.12, -0.19, 0.31])
    r1 = compare(camp, {"pointwise": a, "variational": b}, "drag")
    r2 = compare(camp, {"pointwise": b, "variational": a}, "drag")
    assert r1.metrics("pointwise") == r2.metrics("variational")
    assert r1.metrics("variational") == r2.metrics("pointwise")


def test_basis_mismatch_detected():
    camp = _synthetic([0.1, -0.2, 0.3])
    with pytest.raises(BasisMismatchError):
        compare(camp, {"pointwise": np.zeros(4)}, "drag")
    with pytest.raises(BasisMismatchError):
        compare(camp, {"pointwise": np.zeros(3)}, "drag", edges=[0, 1, 5])
    with pytest.raises(BasisMismatchError):
        compare(camp, {"pointwise": np.zeros(3)}, "drag", mesh_hash="other")


def test_report_csv(tmp_path):
    camp = _synthetic([0.1, -0.2, 0.3])
    rep = compare(camp, {"pointwise": np.array([0.1, -0.1, 0.2]), "variational": np.array([0.1, -0.2, 0.29])}, "drag")
    path = tmp_path / "r.csv"
    rep.to_csv(path)
    cols = read_table(path)
    assert list(cols) == ["edge_id", "fd", "hadamard_pointwise", "hadamard_variational", "rel_err_pw", "rel_err_var"]
    assert_allclose(cols["rel_err_var"], [0.0, 0.0, -0.01 / 0.3], atol=1e-14)
