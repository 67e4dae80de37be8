import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frictional_risk.acceptance import WorstCase
from frictional_risk.errors import InstanceError
from frictional_risk.kabanov import bid_ask_bound
from frictional_risk.market import (
    AcquisitionRule,
    BoxSet,
    CollateralSet,
    FullSet,
    LiquidationRule,
    MarginSet,
    MarketInstance,
    NonNegSet,
    PolyhedralSet,
    check_standing_assumptions,
    portfolio_from_dict,
)
from frictional_risk.piecewise import PiecewiseLinear
from frictional_risk.scenario import ScenarioSpace

HALF = ScenarioSpace([0.5, 0.5])
PI0 = [[1, 2], [0.6, 1]]
PI3 = np.array([[1, 2, 0.5], [0.5, 1, 0.25], [2, 4, 1]]) * (1 + np.array(
    [[0, .05, .08], [.06, 0, .1], [.07, .09, 0]]))


def kinked_v0():
    # x + 1/2 below -1, x/2 on [-1, 0), x above 0
    curve = PiecewiseLinear([-1.0, 0.0], [-0.5, 0.0], 1.0, 1.0)
    return AcquisitionRule.expression({"op": "curve", "coef": [1.0], "curve": curve.to_dict()}, 1)


def test_kinked_acquisition_values():
    v0 = kinked_v0()
    assert v0(-0.5) == pytest.approx(-0.25)
    assert v0([-0.5]) == pytest.approx(-0.25)
    assert v0([0.0]) == 0.0
    assert v0([-3.0]) == pytest.approx(-2.5)
    assert v0.asymptotic([-1.0]) == -1.0 and v0.asymptotic([1.0]) == 1.0
    assert v0.asymptotic_by_doubling([-1.0]) == pytest.approx(-1.0, abs=1e-9)
    assert not v0.convex and not v0.star and v0.monotone_1d


def test_kabanov_acquisition():
    v0 = AcquisitionRule.kabanov(PI0)
    assert v0([1.0, -1.0]) == pytest.approx(-2 / 3)
    assert v0([0.0, 0.0]) == 0.0
    assert v0.convex and v0.pos_hom
    same = AcquisitionRule.from_dict({"form": "Kabanov", "params": {"vertices": [[1, 5 / 3], [1, 2]]}})
    assert same([1.0, -1.0]) == pytest.approx(-2 / 3)


def test_min_max_payoff():
    expr = [
        {"op": "min", "args": [{"op": "linear", "coef": [1, 2]}, {"op": "linear", "coef": [2, 1]}]},
        {"op": "linear", "coef": [1, 2]},
    ]
    v1 = LiquidationRule.expression(expr, 2)
    assert np.array_equal(v1([2.0, -1.0]), [0.0, 0.0])
    assert v1.concave and v1.pos_hom


def test_linear_payoff():
    v1 = LiquidationRule.linear_payoff([[1, 1], [1, 0]])
    assert np.array_equal(v1([1.0, 1.0]), [2.0, 1.0])
    assert np.array_equal(v1(np.zeros(2)), [0.0, 0.0])
    assert v1.linear


def test_linear_acquisition_asymptotic_is_itself():
    v0 = AcquisitionRule.linear([1.0, 1.0])
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 2))
    assert np.allclose(v0.asymptotic(x), v0(x))


def test_portfolio_sets():
    box = BoxSet([-1, -1], [1, 1])
    assert box.contains([1.0, 0.0]) and not box.asymptotic_contains([1.0, 0.0])
    assert box.is_bounded
    half = BoxSet([-1, None], [None, 2])
    assert half.asymptotic_contains([1.0, -1.0]) and not half.asymptotic_contains([-1.0, 0.0])
    assert FullSet(3).contains([1e9, -1e9, 3.0]) and FullSet(3).asymptotic_contains([1, 2, 3])
    assert NonNegSet(2).asymptotic_contains([1, 0]) and not NonNegSet(2).contains([-1, 0])
    poly = PolyhedralSet([[1, 1]], [-1])
    assert poly.asymptotic_contains([1.0, -1.0])
    assert poly.contains([-0.5, -0.5]) and not poly.asymptotic_contains([-0.5, -0.5])
    assert not poly.is_bounded


def test_priced_portfolio_sets():
    v0 = AcquisitionRule.kabanov(PI0)
    margin = MarginSet([0.5, 0.5], v0)
    collateral = CollateralSet(2.0, v0)
    assert margin.is_cone and collateral.is_cone
    assert margin.contains([0.0, 0.0]) and collateral.contains([0.0, 0.0])
    # long 1 unit of cash funded by a short position worth more is fine
    assert collateral.contains([1.0, -0.5])
    assert not collateral.contains([0.1, -1.0])
    assert np.array_equal(margin.asymptotic_contains([[1, 1], [-1, -1]]), margin.contains([[1, 1], [-1, -1]]))


def test_loader_rejects_bad_inputs():
    with pytest.raises(InstanceError):
        portfolio_from_dict({"family": "Polyhedral", "params": {"A": [[1, 0]], "b": [1]}}, 2, None)
    with pytest.raises(InstanceError):
        portfolio_from_dict({"family": "Sphere"}, 2, None)
    with pytest.raises(InstanceError):
        AcquisitionRule.kabanov([[1, 2], [0.4, 1]])  # 2 * 0.4 < 1 breaks the triangle rule
    ask = PiecewiseLinear.linear(1.0)
    with pytest.raises(InstanceError):
        AcquisitionRule.separable([ask], [PiecewiseLinear.linear(2.0)])


def test_separable_rules():
    ask = PiecewiseLinear([0.0, 1.0], [0.0, 1.0], 1.0, 1.5)
    bid = PiecewiseLinear([0.0, 1.0], [0.0, 0.9], 0.9, 0.6)
    v0 = AcquisitionRule.separable([ask], [bid])
    assert v0([2.0]) == pytest.approx(2.5)
    assert v0([-2.0]) == pytest.approx(-1.5)
    assert v0.convex
    assert v0.asymptotic([1.0]) == 1.5 and v0.asymptotic([-1.0]) == -0.6
    v1 = LiquidationRule.separable([ask], [bid], [[2.0, 1.0]], [[1.5, 0.5]])
    assert np.allclose(v1([2.0]), [1.5 * 1.5, 0.5 * 1.5])
    assert np.allclose(v1([-2.0]), [-2.0 * 2.5, -1.0 * 2.5])
    assert v1.concave


@given(st.floats(0.1, 10.0), st.lists(st.floats(-5, 5), min_size=2, max_size=2))
@settings(max_examples=50, deadline=None)
def test_homogeneous_separable_scales(lam, x):
    v0 = AcquisitionRule.separable([PiecewiseLinear.linear(1.2)] * 2, [PiecewiseLinear.linear(0.8)] * 2)
    x = np.array(x)
    assert v0(lam * x) == pytest.approx(lam * v0(x), abs=1e-9)


@pytest.mark.parametrize("pi", [np.array(PI0, float), PI3])
def test_kabanov_invariants(pi):
    v0 = AcquisitionRule.kabanov(pi)
    v1 = LiquidationRule.kabanov([pi, pi])
    rng = np.random.default_rng(3)
    x = rng.normal(scale=3.0, size=(500, pi.shape[0]))
    y = rng.normal(scale=3.0, size=(500, pi.shape[0]))
    bound = bid_ask_bound(pi, x)
    assert np.all(np.abs(v0(x)) <= bound + 1e-9)
    assert np.all(np.abs(v1(x)) <= bound[:, None] + 1e-9)
    assert np.all(v0(x + y) <= v0(x) + v0(y) + 1e-9)
    assert np.all(v1(x + y) >= v1(x) + v1(y) - 1e-9)
    assert np.allclose(v0(2.5 * x), 2.5 * v0(x))
    assert np.all(v0(x) + v0(-x) >= -1e-9)


def test_large_kabanov_uses_lp_and_agrees():
    m = np.array([1.0, 2.0, 0.5, 1.5, 3.0])
    pi = (m[None, :] / m[:, None]) * 1.05
    np.fill_diagonal(pi, 1.0)
    v0 = AcquisitionRule.kabanov(pi)
    assert v0.has_opaque_terms
    x = np.array([1.0, -1.0, 2.0, 0.0, -0.5])
    # long legs pay the ask, short legs receive the bid, all through cash
    naive = x[0] + sum(xi * pi[0, i] if xi > 0 else xi * m[i] / 1.05 for i, xi in enumerate(x) if i)
    assert v0(x) <= naive + 1e-9
    assert v0(x) >= x @ m - 1e-9


def test_instance_checks():
    space = HALF
    v0 = kinked_v0()
    v1 = LiquidationRule.linear_payoff([[1, 1]])
    inst = MarketInstance(space, WorstCase(space), FullSet(1), v0, v1)
    check_standing_assumptions(inst)
    assert inst.convex is False and inst.conic is False
    with pytest.raises(InstanceError):
        MarketInstance(space, WorstCase(space), FullSet(2), v0, v1)
    bad = AcquisitionRule.expression({"op": "linear", "coef": [1.0], "const": 1.0}, 1)
    with pytest.raises(InstanceError):
        check_standing_assumptions(MarketInstance(space, WorstCase(space), FullSet(1), bad, v1))
    neg_spread = AcquisitionRule.expression({"op": "min", "args": [
        {"op": "linear", "coef": [1.0]}, {"op": "linear", "coef": [2.0]}]}, 1)
    with pytest.raises(InstanceError):
        check_standing_assumptions(MarketInstance(space, WorstCase(space), FullSet(1), neg_spread, v1))


def test_round_trip():
    ask = PiecewiseLinear([0.0, 1.0], [0.0, 1.0], 1.0, 1.5)
    for rule in (kinked_v0(), AcquisitionRule.kabanov(PI0), AcquisitionRule.separable([ask], [ask]),
                 AcquisitionRule.linear([1, 2])):
        again = AcquisitionRule.from_dict(rule.to_dict(), rule.n)
        x = np.random.default_rng(1).normal(size=(20, rule.n))
        assert np.allclose(again(x), rule(x))
