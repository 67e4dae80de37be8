"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import time

import numpy as np
import pytest

from frictional_risk.cli import integral_selftest
from frictional_risk.deals import (
    deal_report,
    is_acceptable_deal,
    is_scalable_deal,
    l_membership,
    l_structure,
)
from frictional_risk.dual import (
    classify,
    dual_bound,
    dual_value,
    quasiconvex_dual_value,
    rho_given_psi,
)
from frictional_risk.io import fixture_names, load_fixture
from frictional_risk.kabanov import bid_ask_bound, validate_bid_ask
from frictional_risk.market import AcquisitionRule, LiquidationRule
from frictional_risk.properties import assess, check_lsc_sequence, check_property, premises
from frictional_risk.risk import c_membership, rho, rho_bruteforce

CLAUSES = ("star_shaped", "pos_homogeneous", "quasiconvex", "convex", "subadditive")
CONVEX_BATTERY = ["frictionless", "conic_es", "f8", "cvx_separable", "cvx_expectile", "cvx_utility",
                  "cvx_kabanov3"]
CONIC_POINTED = ["frictionless", "conic_es", "f8", "cvx_expectile", "cvx_kabanov3"]
DUALITY_BATTERY = ["f1", "f3", "f4", "f6", "f7", "f8", "frictionless", "conic_es", "cvx_separable",
                   "cvx_expectile", "cvx_utility", "cvx_kabanov3", "box"]
KABANOV2 = [[1.0, 2.0], [0.6, 1.0]]
H = 2.0**-6


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def grid25():
    return [np.array([a, b]) for a in (-2.0, -1.0, 0.0, 1.0, 2.0) for b in (-2.0, -1.0, 0.0, 1.0, 2.0)]


def kinked(y):
    return y + 0.5 if y < -1 else (y / 2 if y < 0 else y)


def test_criterion_1_union_fixture(verdict):
    inst = load_fixture("f1").instance
    rho(inst, np.zeros(2))
    start = time.perf_counter()
    reps = [(X, rho(inst, X)) for X in grid25()]
    elapsed = time.perf_counter() - start
    worst = max(abs(r.value - (-X[0] - 1.0)) for X, r in reps)
    paths = {r.path for _, r in reps}
    ok = worst <= 1e-6 and paths == {"polyhedral"} and elapsed < 1.0
    verdict(1, ok, f"max |delta| {worst:.2e} on 25 positions, paths {sorted(paths)}, {elapsed:.3f} s")


def test_criterion_2_kinked_price(verdict):
    inst = load_fixture("f7").instance
    worst = max(abs(rho(inst, X).value - kinked(max(-X[0], -X[1]))) for X in grid25())
    conv = check_property(inst, "convex", trials=500, seed=0)
    again = None
    if conv.counterexample is not None:
        again, _ = assess(inst, "convex", conv.counterexample["inputs"])
    quasi = check_property(inst, "quasiconvex", trials=500, seed=0)
    ok = (worst <= 1e-6 and conv.result == "counterexample" and again is not None
          and again > 3e-9 and quasi.passed and quasi.trials == 500)
    verdict(2, ok, f"max |delta| {worst:.2e}; convex {conv.result} (re-verified violation {again}); "
                   f"quasiconvex {quasi.result} over {quasi.trials} trials")


def test_criterion_3_deal_corpus(verdict):
    tol = 1e-8
    f2, f3, f4, f6 = (load_fixture(n).instance for n in ("f2", "f3", "f4", "f6"))
    checks = {}
    r2 = deal_report(f2)
    checks["f2 scalable, not acceptable"] = (
        r2.kind == "scalable" and np.allclose(r2.witness, [-0.5, 0.5])
        and is_scalable_deal(f2, r2.witness, tol) and not is_acceptable_deal(f2, r2.witness, tol))
    r3 = deal_report(f3)
    checks["f3 L linear with scalable witness"] = (
        r3.l_status == "linear" and r3.kind == "scalable" and is_scalable_deal(f3, r3.witness, tol)
        and all(l_membership(f3, w, tol) and l_membership(f3, -w, tol) for w in r3.l_witnesses))
    r4 = deal_report(f4)
    pair = [np.asarray(w) for w in r4.l_witnesses]
    checks["f4 no scalable deal, L nonlinear"] = (
        r4.scalable_witness is None and r4.l_status == "nonlinear" and len(pair) == 2
        and np.allclose(pair[0], [2, -1]) and np.allclose(pair[1], [-2, 1])
        and l_membership(f4, pair[0], tol) and not l_membership(f4, pair[1], tol))
    checks["f6 L trivial"] = l_structure(f6)[0] == "trivial"
    checks["f6 C membership"] = all(c_membership(f6, [lam, -lam], 0.0) for lam in (1.0, 2.0, 5.0))
    failed = [k for k, v in checks.items() if not v]
    verdict(3, not failed, f"{len(checks) - len(failed)}/{len(checks)} deal checks" +
            (f", failing: {failed}" if failed else ""))


def test_criterion_4_weak_duality(verdict):
    rng = np.random.default_rng(20240)
    triples = bound_bad = given_bad = 0
    worst = -np.inf
    for name in DUALITY_BATTERY:
        loaded = load_fixture(name)
        inst = loaded.instance
        d = inst.n_outcomes
        box = np.asarray(inst.box, float)
        scale = max(float(np.mean(box[:, 1] - box[:, 0])) / 4, 0.5)
        for k in range(40):
            X = rng.normal(scale=scale, size=d)
            r = rho(inst, X).value
            # weights on the simplex, scaled, and some with zero coordinates
            W = rng.dirichlet(np.ones(d), size=20) * rng.uniform(0.2, 3.0, size=(20, 1))
            W[::5, rng.integers(d)] = 0.0
            for w in W:
                triples += 1
                b, g = dual_bound(inst, X, w), rho_given_psi(inst, X, w)
                if np.isfinite(r):
                    worst = max(worst, b - r, g - r)
                bound_bad += b > r + 1e-6
                given_bad += g > r + 1e-6
    ok = triples >= 10**4 and bound_bad == 0 and given_bad == 0
    verdict(4, ok, f"{triples} triples, {bound_bad} bound and {given_bad} rho(X|psi) violations, "
                   f"largest excess {worst:.2e}")


def test_criterion_5_strong_duality(verdict):
    start = time.perf_counter()
    worst, count = 0.0, 0
    for name in CONVEX_BATTERY:
        loaded = load_fixture(name)
        inst = loaded.instance
        assert inst.n_assets <= 3 and inst.n_outcomes <= 4 and inst.convex
        for X in loaded.positions.values():
            gap = abs(rho(inst, X).value - dual_value(inst, X).value)
            worst = max(worst, gap)
            count += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 30.0 and len(CONVEX_BATTERY) >= 6
    verdict(5, ok, f"{len(CONVEX_BATTERY)} instances, {count} positions, max gap {worst:.2e}, "
                   f"{elapsed:.1f} s")


def test_criterion_6_strict_domain(verdict):
    # the sup over D_str need not be attained, so the best psi is the one the restricted search finds
    worst, bad, boundary = 0.0, [], 0
    for name in CONIC_POINTED:
        loaded = load_fixture(name)
        inst = loaded.instance
        assert inst.conic and l_structure(inst)[0] == "trivial"
        for key, X in loaded.positions.items():
            rep = dual_value(inst, X)
            in_strict = rep.psi_strict is not None and classify(inst, rep.psi_strict)["in_D_str"]
            boundary += not classify(inst, rep.psi)["in_D_str"]
            diff = abs(rep.value_strict - rep.value) if rep.value_strict is not None else np.inf
            worst = max(worst, diff)
            if not (in_strict and diff <= 1e-4):
                bad.append(f"{name}/{key}")
    verdict(6, not bad, f"{len(CONIC_POINTED)} instances, max restriction change {worst:.2e}, "
                        f"{boundary} unrestricted optima on the boundary of D_str" +
            (f", failing {bad}" if bad else ""))


def test_criterion_7_quasiconvex_dual(verdict):
    inst = load_fixture("f7").instance
    X = np.array([1.0, 2.0])
    target = rho(inst, X).value
    rep = quasiconvex_dual_value(inst, X)
    dom = rep.domains
    others = {k: dom[k]["value"] for k in ("B_str", "D", "D_str")}
    at_zero = rho_given_psi(inst, X, [0.0, 0.0])
    ok = (all(v == -np.inf for v in others.values())
          and abs(dom["B"]["value"] - target) <= 1e-6 and abs(at_zero - target) <= 1e-6)
    verdict(7, ok, f"rho {target}; sup over B {dom['B']['value']} at psi {dom['B'].get('psi')}; "
                   f"B_str/D/D_str {others}; rho(X|0) {at_zero}")


def test_criterion_8_oracle(verdict):
    checked, bad = 0, []
    for name in fixture_names():
        loaded = load_fixture(name)
        inst = loaded.instance
        lip = inst.lipschitz()
        for key, X in loaded.positions.items():
            v = rho(inst, X).value
            if not np.isfinite(v):
                continue
            checked += 1
            o = rho_bruteforce(inst, X, h=H)
            if abs(v - o) > (1 + lip) * H:
                bad.append(f"{name}/{key}: {v} vs {o}")
    verdict(8, not bad, f"{checked} finite positions against the grid at h=2^-6" +
            (f", failing {bad[:5]}" if bad else ""))


def test_criterion_9_property_table(verdict):
    ran, failed = 0, []
    for name in fixture_names():
        inst = load_fixture(name).instance
        for prop in CLAUSES:
            if premises(inst, prop):
                continue
            ran += 1
            v = check_property(inst, prop, trials=500, seed=0)
            if v.result == "counterexample" or v.trials != 500:
                failed.append(f"{name}/{prop}")
    f7, f5 = load_fixture("f7").instance, load_fixture("f5").instance
    pair, _ = assess(f7, "convex", {"X": [0.5, 0.5], "Y": [1.5, 1.5], "lambda": 0.5})
    found = check_property(f7, "convex", trials=500, seed=0).result == "counterexample"
    U, S = np.array([1.0, 1.0]), np.array([1.0, 0.0])
    jump, _ = check_lsc_sequence(f5, [U / n - S for n in range(1, 40)], -S)
    lsc = check_property(f5, "lsc_spotcheck", trials=500, seed=0)
    documented = {"kinked convexity pair": pair > 0.1, "kinked convexity search": found,
                  "open set lsc sequence": jump == np.inf,
                  "open set lsc search": lsc.result == "counterexample"}
    missing = [k for k, v in documented.items() if not v]
    verdict(9, not failed and not missing,
            f"{ran} premise-satisfying checks at 500 trials, {len(failed)} failing {failed}; "
            f"documented counterexamples found {len(documented) - len(missing)}/{len(documented)}")


def kabanov_matrices():
    pi3 = np.asarray(load_fixture("cvx_kabanov3").instance.v0.params["bid_ask"])
    pi1 = [np.asarray(m) for m in load_fixture("cvx_kabanov3").instance.v1.params["bid_ask"]]
    return [(np.asarray(KABANOV2), [np.asarray(KABANOV2), np.asarray(KABANOV2) * [[1, 1.1], [0.95, 1]]]),
            (pi3, pi1)]


def test_criterion_10_kabanov(verdict):
    rng = np.random.default_rng(10)
    problems = []
    for pi0, pi1 in kabanov_matrices():
        pi1 = [validate_bid_ask(m) for m in pi1]
        n = pi0.shape[0]
        v0, v1 = AcquisitionRule.kabanov(pi0), LiquidationRule.kabanov(pi1)
        x = rng.normal(scale=3.0, size=(1000, n))
        y = rng.normal(scale=3.0, size=(1000, n))
        lam = rng.uniform(0.0, 5.0, size=(1000, 1))
        if np.any(np.abs(v0(x)) > bid_ask_bound(pi0, x) + 1e-9):
            problems.append(f"N={n} date-0 bound")
        out = v1(x)
        for j, m in enumerate(pi1):
            if np.any(np.abs(out[:, j]) > bid_ask_bound(m, x) + 1e-9):
                problems.append(f"N={n} date-1 bound, outcome {j}")
        if np.any(v0(x + y) > v0(x) + v0(y) + 1e-9) or not np.allclose(v0(lam * x), lam[:, 0] * v0(x)):
            problems.append(f"N={n} sublinearity")
        if np.any(v1(x + y) < v1(x) + v1(y) - 1e-9) or not np.allclose(v1(lam * x), lam * v1(x)):
            problems.append(f"N={n} superlinearity")
    err = integral_selftest()
    if err > 1e-10:
        problems.append(f"integral self-test error {err}")
    verdict(10, not problems, f"N=2 and N=3 on 1000 portfolios each, integral error {err:.1e}" +
            (f", failing {problems}" if problems else ""))
