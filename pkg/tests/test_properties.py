import numpy as np
import pytest

from frictional_risk.io import load_fixture
from frictional_risk.properties import (
    PROPERTIES,
    assess,
    check_lsc_sequence,
    check_property,
    premises,
)
from frictional_risk.risk import SearchConfig

F1, F5, F7 = (load_fixture(n) for n in ("f1", "f5", "f7"))
BATTERY = ["f1", "f4", "f7", "frictionless", "conic_es", "f8", "cvx_separable", "cvx_utility"]


def test_unknown_property():
    with pytest.raises(ValueError):
        check_property(F7.instance, "concave")


def test_nonconvex_union_still_convex():
    v = check_property(F1.instance, "convex", trials=200)
    assert v.result == "pass"
    assert not v.premise and "A convex" in v.premise_notes


def test_kinked_price_quasiconvex_not_convex():
    assert check_property(F7.instance, "quasiconvex", trials=300).passed
    v = check_property(F7.instance, "convex", trials=300)
    assert v.result == "counterexample"
    assert v.counterexample["violation"] > 3 * SearchConfig().tol


def test_kinked_price_documented_pair():
    inputs = {"X": [0.5, 0.5], "Y": [1.5, 1.5], "lambda": 0.5}
    gap, values = assess(F7.instance, "convex", inputs)
    assert values["rho_mix"] == pytest.approx(-0.5)
    assert values["rho_X"] == pytest.approx(-0.25) and values["rho_Y"] == pytest.approx(-1.0)
    assert gap == pytest.approx(0.125)


def test_kinked_price_equal_pair_is_not_a_violation():
    gap, _ = assess(F7.instance, "convex", {"X": [1, 1], "Y": [3, 3], "lambda": 0.5})
    assert gap <= 1e-9


def test_conic_es_homogeneous_and_subadditive():
    inst = load_fixture("conic_es").instance
    for prop in ("pos_homogeneous", "subadditive"):
        assert premises(inst, prop) == []
        assert check_property(inst, prop, trials=150).passed


def test_counterexample_reverifies():
    v = check_property(F7.instance, "convex", trials=300, seed=1)
    again, _ = assess(F7.instance, "convex", v.counterexample["inputs"])
    assert again == pytest.approx(v.counterexample["violation"])
    assert again > 3 * SearchConfig().tol


@pytest.mark.parametrize("prop", ["monotone", "convex", "lsc_spotcheck"])
def test_determinism(prop):
    a = check_property(F7.instance, prop, trials=80, seed=7).to_dict()
    b = check_property(F7.instance, prop, trials=80, seed=7).to_dict()
    assert a == b


def test_seed_changes_the_sample():
    a = check_property(F7.instance, "convex", trials=300, seed=0)
    b = check_property(F7.instance, "convex", trials=300, seed=5)
    assert a.counterexample["inputs"] != b.counterexample["inputs"]


def test_lsc_open_fixture():
    assert premises(F5.instance, "lsc_spotcheck") == ["A closed"]
    U, S = np.array([1.0, 1.0]), np.array([1.0, 0.0])
    gap, values = check_lsc_sequence(F5.instance, [U / n - S for n in range(1, 30)], -S)
    assert values["rho_limit"] == np.inf
    assert gap == np.inf


def test_lsc_closed_fixture_sequence():
    X = np.array([1.0, 2.0])
    seq = [X + np.array([1, -1]) / n for n in range(1, 60)]
    gap, _ = check_lsc_sequence(F7.instance, seq, X)
    # the tail still sits a Lipschitz step below the limit
    assert gap <= F7.instance.lipschitz() * np.abs(seq[-20] - X).sum()


def test_undefined_comparisons_are_not_counted():
    # +inf - +inf sums on the open fixture carry no information and are dropped
    v = check_property(F5.instance, "subadditive", trials=40, seed=0)
    assert v.compared <= v.trials
    assert v.result != "counterexample" or v.counterexample["violation"] > 0


@pytest.mark.parametrize("name", BATTERY)
def test_premises_imply_properties(name):
    inst = load_fixture(name).instance
    for prop in PROPERTIES:
        if premises(inst, prop):
            continue
        v = check_property(inst, prop, trials=60)
        assert v.result != "counterexample", (prop, v.counterexample)


def test_verdict_serialises():
    d = check_property(F7.instance, "monotone", trials=20).to_dict()
    assert d["property"] == "monotone" and d["trials"] == 20 and d["result"] == "pass"
