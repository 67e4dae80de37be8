import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frictional_risk.acceptance import (
    Dominance,
    ExpectedShortfall,
    Expectile,
    ValueAtRisk,
    WorstCase,
)
from frictional_risk.dual import (
    DualElement,
    _sigma_A_numeric,
    classify,
    dual_bound,
    dual_value,
    quasiconvex_dual_value,
    rho_given_psi,
    sigma_A,
    sigma_market,
    simplex_lattice,
)
from frictional_risk.errors import InstanceError
from frictional_risk.io import load_fixture
from frictional_risk.risk import rho
from frictional_risk.scenario import ScenarioSpace

import oracles

HALF = ScenarioSpace([0.5, 0.5])
F1, F7, FRIC = load_fixture("f1"), load_fixture("f7"), load_fixture("frictionless")
BATTERY = ["frictionless", "conic_es", "f8", "cvx_separable", "cvx_expectile", "cvx_utility",
           "cvx_kabanov3"]


def kinked(y):
    return y + 0.5 if y < -1 else (y / 2 if y < 0 else y)


# -- support function of A ------------------------------------------------------------------------

def test_sigma_worst_case():
    A = WorstCase(HALF)
    assert sigma_A(A, [0.5, 0.5]) == 0.0
    assert sigma_A(A, [0.5, -0.1]) == -np.inf


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=2, max_size=2))
def test_sigma_orthant_of_kinked_fixture(w):
    assert sigma_A(F7.instance.acceptance, w) == 0.0


def test_sigma_dominance_closed_form():
    A = Dominance(HALF, [-1.0, -2.0])
    assert sigma_A(A, [1.0, 0.5]) == pytest.approx(-2.0)
    assert sigma_A(A, [1.0, -0.5]) == -np.inf


@pytest.mark.parametrize("w", [[0.3, 0.3, 0.4], [0.1, 0.1, 0.8], [0.5, 0.5, 0.0], [0.9, 0.05, 0.05]])
def test_es_dual_cone_against_cells(w):
    space = ScenarioSpace([0.2, 0.3, 0.5])
    A = ExpectedShortfall(space, 0.4)
    w = np.array(w)
    by_cells = min(oracles_cell_sigma(A, w))
    assert sigma_A(A, w) == by_cells


def oracles_cell_sigma(A, w):
    from frictional_risk.dual import _cell_sigma
    return [_cell_sigma(c, w)[0] for c in A.cells()]


def test_es_numeric_path_agrees_with_closed_form():
    space = ScenarioSpace([0.2, 0.3, 0.5])
    A = ExpectedShortfall(space, 0.4)
    inside = np.array([0.3, 0.3, 0.4])
    assert _sigma_A_numeric(A, inside)[0] == pytest.approx(0.0, abs=1e-6)
    assert _sigma_A_numeric(A, np.array([0.9, 0.05, 0.05]))[0] == -np.inf


def test_sigma_expectile_cone():
    space = ScenarioSpace([0.25, 0.75])
    A = Expectile(space, 0.2)
    assert sigma_A(A, [0.25, 0.75]) == pytest.approx(0.0, abs=1e-12)
    assert sigma_A(A, [1.0, 0.0]) == -np.inf


def test_sigma_value_at_risk_cells():
    space = ScenarioSpace([0.3, 0.7])
    A = ValueAtRisk(space, 0.5)
    assert sigma_A(A, [0.0, 1.0]) == pytest.approx(0.0, abs=1e-12)
    assert sigma_A(A, [1.0, 0.0]) == -np.inf


# -- support function of the market ------------------------------------------------------------

@pytest.mark.parametrize("a", [0.0, 0.3, 0.5, 1.0])
def test_sigma_market_kinked_on_price_line(a):
    assert sigma_market(F7.instance, [a, 1 - a]) > -np.inf


@pytest.mark.parametrize("w", [[0.0, 0.0], [0.2, 0.2], [1.0, 0.5]])
def test_sigma_market_kinked_off_price_line(w):
    assert sigma_market(F7.instance, w) == -np.inf


def test_sigma_market_deflator():
    assert sigma_market(FRIC.instance, [0.5, 0.5]) == pytest.approx(0.0, abs=1e-12)
    assert sigma_market(FRIC.instance, [0.6, 0.4]) == -np.inf


# -- domains ------------------------------------------------------------------------------------

def test_classify_kinked_fixture():
    inst = F7.instance
    assert classify(inst, [0.5, 0.5]) == {"in_B": True, "in_D": True, "in_B_str": True, "in_D_str": True}
    f = classify(inst, [1.0, 0.0])
    assert f["in_D"] and not f["in_D_str"] and not f["in_B_str"]
    f = classify(inst, [0.0, 0.0])
    assert f["in_B"] and not f["in_D"]


def test_negative_weights_outside_barrier_cone():
    for loaded in (F1, F7, FRIC):
        assert not classify(loaded.instance, [1.0, -0.2])["in_B"]


def test_dual_element_flags_and_density():
    psi = DualElement([0.5, 0.5])
    assert psi([1.0, 3.0]) == pytest.approx(2.0)
    assert np.allclose(psi.density(HALF), [1.0, 1.0])
    assert psi.flags(F7.instance)["in_D_str"]
    assert psi.flags(F7.instance) is psi.flags(F7.instance)


# -- bounds and dual values --------------------------------------------------------------------

def test_dual_bound_kinked_fixture():
    assert dual_bound(F7.instance, [1, 2], [0.0, 1.0]) == pytest.approx(-2.0)
    assert dual_bound(F7.instance, [1, 2], [0.0, 1.0]) <= rho(F7.instance, [1, 2]).value


def test_dual_bound_at_deflator_is_exact():
    for X in FRIC.positions.values():
        assert dual_bound(FRIC.instance, X, [0.5, 0.5]) == pytest.approx(rho(FRIC.instance, X).value,
                                                                          abs=1e-12)


def test_dual_value_union_fixture():
    rep = dual_value(F1.instance, [0, 0])
    assert rep.value == pytest.approx(-1.0, abs=1e-4)
    assert np.allclose(rep.psi, [1.0, 0.0], atol=1e-6)


def test_dual_value_kinked_fixture_has_gap():
    rep = dual_value(F7.instance, [1, 2])
    assert rep.value < -0.5 - 1e-3


def test_dual_value_frictionless_deflator():
    rep = dual_value(FRIC.instance, [1.0, -1.0])
    assert rep.value == pytest.approx(0.0, abs=1e-6)
    assert rep.psi.sum() == pytest.approx(1.0, abs=1e-9)
    assert rep.flags["in_D_str"]


@pytest.mark.parametrize("name", BATTERY)
def test_strong_duality_battery(name):
    loaded = load_fixture(name)
    for X in loaded.positions.values():
        want = rho(loaded.instance, X).value
        assert abs(dual_value(loaded.instance, X).value - want) <= 1e-4


def test_cutting_plane_route_on_family_fixture():
    loaded = load_fixture("f2")
    rep = dual_value(loaded.instance, [0, 0])
    assert rep.route == "cutting-plane"
    assert rep.value <= rho(loaded.instance, [0, 0]).value + 1e-6


@pytest.mark.parametrize("name", ["frictionless", "conic_es", "f8", "cvx_expectile", "cvx_kabanov3"])
def test_strict_restriction_conic_fixtures(name):
    loaded = load_fixture(name)
    X = loaded.positions["a"]
    rep = dual_value(loaded.instance, X)
    assert rep.psi_strict is not None
    assert classify(loaded.instance, rep.psi_strict)["in_D_str"]
    assert abs(rep.value_strict - rep.value) <= 1e-4


# -- the quasiconvex dual ------------------------------------------------------------------------

def test_rho_given_psi_kinked_closed_form():
    inst = F7.instance
    for w in ([0.5, 0.5], [1.0, 0.0], [0.2, 0.7]):
        w = np.array(w)
        for X in ([1.0, 2.0], [-1.5, 0.5]):
            want = kinked(-np.dot(w, X) / w.sum())
            assert rho_given_psi(inst, X, w) == pytest.approx(want, abs=1e-9)


def test_rho_given_zero_psi_is_inf_of_price():
    assert rho_given_psi(F7.instance, [1, 2], [0, 0]) == -np.inf


def test_rho_given_psi_half_space_grid_oracle():
    inst = F7.instance
    w = np.array([0.3, 0.7])
    h = 2.0**-5
    for X in ([0.5, -1.0], [-2.0, 1.0]):
        X = np.array(X)
        want = oracles.rho_grid(lambda x: kinked(x[0]), lambda x: np.array([x[0], x[0]]),
                                lambda Y: w @ Y >= -1e-12, lambda x: True, X, inst.box, h)
        got = rho_given_psi(inst, X, w)
        assert got <= want + 1e-12
        assert want - got <= 2 * h


def test_rho_given_psi_linear_market_off_deflator_unbounded():
    assert rho_given_psi(FRIC.instance, [0.5, -1.0], [0.3, 0.7]) == -np.inf


def test_rho_given_psi_rejects_negative_weights():
    with pytest.raises(InstanceError):
        rho_given_psi(F7.instance, [1, 2], [1.0, -1.0])


def test_simplex_lattice():
    pts = list(simplex_lattice(3, 4))
    assert len(pts) == 15
    assert all(np.isclose(p.sum(), 1.0) for p in pts)


def test_quasiconvex_dual_kinked_fixture():
    rep = quasiconvex_dual_value(F7.instance, [1, 2])
    assert rep.value == pytest.approx(-0.5, abs=1e-6)
    assert rep.domains["B"]["value"] == pytest.approx(-0.5, abs=1e-6)


def test_quasiconvex_dual_frictionless_equality():
    for X in FRIC.positions.values():
        rep = quasiconvex_dual_value(FRIC.instance, X)
        assert rep.value == pytest.approx(rho(FRIC.instance, X).value, abs=1e-4)


def test_quasiconvex_dual_dominates_convex_dual():
    loaded = load_fixture("f8")
    X = loaded.positions["a"]
    assert quasiconvex_dual_value(loaded.instance, X).value >= dual_value(loaded.instance, X).value - 1e-6


# -- invariants -------------------------------------------------------------------------------------

@settings(max_examples=80, deadline=None)
@given(st.sampled_from(["f1", "f7", "frictionless", "f8", "f4"]),
       st.lists(st.floats(-3, 3), min_size=2, max_size=2),
       st.lists(st.floats(0, 2), min_size=2, max_size=2))
def test_weak_duality(name, X, w):
    inst = load_fixture(name).instance
    r = rho(inst, X).value
    assert dual_bound(inst, X, w) <= r + 1e-6
    if sigma_A(inst.acceptance, w) <= 0:
        assert rho_given_psi(inst, X, w) <= r + 1e-6


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 2), min_size=2, max_size=2))
def test_conic_sets_vanish_on_market_domain(w):
    for loaded in (F7, FRIC, load_fixture("f8")):
        f = classify(loaded.instance, w)
        if f["in_D"]:
            assert sigma_A(loaded.instance.acceptance, w) == 0.0


def test_conic_markets_price_consistency():
    rng = np.random.default_rng(3)
    inst = load_fixture("f8").instance
    for w in rng.dirichlet([1, 1], size=40):
        if classify(inst, w)["in_D"]:
            x = rng.normal(scale=3, size=(100, 2))
            assert np.all(inst.v1(x) @ w <= inst.v0(x) + 1e-9)


def test_linear_market_deflator_prices_exactly():
    inst = FRIC.instance
    x = np.random.default_rng(4).normal(size=(50, 2))
    assert np.allclose(inst.v1(x) @ np.array([0.5, 0.5]), inst.v0(x))


def test_cash_normalisation():
    rng = np.random.default_rng(5)
    for loaded in (FRIC, load_fixture("conic_es")):
        d = loaded.instance.n_outcomes
        for w in rng.dirichlet(np.ones(d), size=60) * rng.uniform(0.5, 2.0, size=(60, 1)):
            if classify(loaded.instance, w)["in_D"]:
                assert w.sum() == pytest.approx(1.0, abs=1e-9)
