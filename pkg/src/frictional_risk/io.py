"""Instance documents: schema validation, construction, flag checks, serialisation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .acceptance import acceptance_from_dict
from .errors import InstanceError
from .market import (
    AcquisitionRule,
    LiquidationRule,
    MarketInstance,
    check_standing_assumptions,
    portfolio_from_dict,
)
from .scenario import ScenarioSpace

SCHEMA_VERSION = 1

ACCEPTANCE_PARAMS = {
    "WorstCase": set(), "Dominance": {"floor"}, "ES": {"alpha"}, "Expectile": {"alpha"},
    "Utility": {"utility"}, "AdjustedES": {"levels", "bounds"}, "VaR": {"alpha"},
    "RVaR": {"alpha", "beta"},
    "FixtureUnion": {"cells", "asymptotic", "is_cone", "is_convex", "zero_exempt"},
}
PORTFOLIO_PARAMS = {
    "Full": set(), "NonNeg": set(), "Box": {"lower", "upper"}, "Polyhedral": {"A", "b"},
    "Margin": {"gammas"}, "Collateral": {"gamma"},
}
V0_PARAMS = {"Linear": {"prices"}, "SeparableBidAsk": {"ask", "bid"},
             "Kabanov": {"bid_ask", "vertices"}, "Expr": {"expr"}}
V1_PARAMS = {"LinearPayoff": {"matrix"}, "SeparablePayoff": {"ask", "bid", "ask_payoff", "bid_payoff"},
             "Kabanov": {"bid_ask", "vertices"}, "Expr": {"exprs"}}


def _schema():
    text = resources.files("frictional_risk").joinpath("schema/instance.schema.json").read_text()
    return json.loads(text)


@dataclass
class LoadedInstance:
    instance: MarketInstance
    positions: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    source: str = ""


def _check_keys(section, kind, table):
    params = section.get("params", {})
    allowed = table[section[kind]]
    extra = sorted(set(params) - allowed)
    if extra:
        raise InstanceError(f"unknown parameter {extra[0]!r} for {section[kind]}", (extra[0],))


def _section(doc, key, build):
    try:
        return build()
    except InstanceError as err:
        path = tuple(err.path) if err.path else ()
        if not path or path[0] != key:
            path = (key,) + path
        raise InstanceError(err.message, path) from None
    except KeyError as err:
        raise InstanceError(f"missing parameter {err.args[0]!r}", (key, "params")) from None
    except (TypeError, ValueError) as err:
        raise InstanceError(str(err), (key,)) from None


def read_document(source):
    """Parse a path, JSON text or dict into a validated document."""
    if isinstance(source, dict):
        doc, name = source, source.get("name", "")
    else:
        path = Path(source)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise InstanceError(f"not valid JSON: {err.msg} at line {err.lineno}", ()) from None
        except OSError as err:
            raise InstanceError(f"cannot read {path}: {err.strerror}", ()) from None
        name = path.stem
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as err:
        raise InstanceError(err.message, tuple(err.absolute_path)) from None
    return doc, doc.get("name", name)


def load_instance(source, check_flags=True) -> LoadedInstance:
    doc, name = read_document(source)
    n = doc["n_assets"]
    sp = doc["space"]
    space = _section(doc, "space", lambda: ScenarioSpace(sp["probs"], sp.get("labels")))
    _section(doc, "acceptance", lambda: _check_keys(doc["acceptance"], "family", ACCEPTANCE_PARAMS))
    _section(doc, "portfolio_set", lambda: _check_keys(doc["portfolio_set"], "family", PORTFOLIO_PARAMS))
    _section(doc, "v0", lambda: _check_keys(doc["v0"], "form", V0_PARAMS))
    _section(doc, "v1", lambda: _check_keys(doc["v1"], "form", V1_PARAMS))
    A = _section(doc, "acceptance", lambda: acceptance_from_dict(space, doc["acceptance"]))
    v0 = _section(doc, "v0", lambda: AcquisitionRule.from_dict(doc["v0"], n))
    v1 = _section(doc, "v1", lambda: LiquidationRule.from_dict(doc["v1"], n))
    if v0.n != n:
        raise InstanceError(f"v0 acts on {v0.n} assets, n_assets is {n}", ("v0",))
    if v1.n != n or v1.d != space.size:
        raise InstanceError(f"v1 must map {n} assets to {space.size} outcomes", ("v1",))
    P = _section(doc, "portfolio_set", lambda: portfolio_from_dict(doc["portfolio_set"], n, v0))
    box = doc.get("box")
    if box is not None and np.shape(box) != (n, 2):
        raise InstanceError(f"box needs {n} [low, high] pairs", ("box",))
    inst = MarketInstance(space, A, P, v0, v1, name=name, box=box)
    check_standing_assumptions(inst)
    positions = {}
    for key, vec in doc.get("positions", {}).items():
        if len(vec) != space.size:
            raise InstanceError(f"position has {len(vec)} entries, the space has {space.size}",
                                ("positions", key))
        positions[key] = np.asarray(vec, float)
    flags = dict(doc.get("flags", {}))
    if check_flags:
        cross_check_flags(inst, flags)
    return LoadedInstance(inst, positions, flags, dict(doc.get("expected", {})), name)


def _sampled_convexity_violation(inst, samples=400, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    N = inst.n_assets
    box = inst.box
    x = rng.uniform(box[:, 0], box[:, 1], size=(samples, N))
    y = rng.uniform(box[:, 0], box[:, 1], size=(samples, N))
    lam = rng.uniform(size=(samples, 1))
    m = lam * x + (1 - lam) * y
    lam = lam[:, 0]
    f = lambda z: np.asarray(inst.v0(z), float)
    if np.any(f(m) > lam * f(x) + (1 - lam) * f(y) + tol * (1 + np.abs(f(x)) + np.abs(f(y)))):
        return True
    g = lambda z: np.asarray(inst.v1(z), float)
    rhs = lam[:, None] * g(x) + (1 - lam[:, None]) * g(y)
    return bool(np.any(g(m) < rhs - tol * (1 + np.abs(rhs))))


def _sampled_homogeneity_violation(inst, samples=200, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(samples, inst.n_assets)) * 3
    lam = rng.uniform(0.1, 5.0, size=(samples, 1))
    a, b = np.asarray(inst.v0(lam * x)), lam[:, 0] * np.asarray(inst.v0(x))
    if np.any(np.abs(a - b) > tol * (1 + np.abs(b))):
        return True
    a, b = np.asarray(inst.v1(lam * x)), lam * np.asarray(inst.v1(x))
    return bool(np.any(np.abs(a - b) > tol * (1 + np.abs(b))))


def cross_check_flags(inst, flags):
    """Declared structural flags must agree with the primitives and with sampling."""
    computed = {"convex": inst.convex, "conic": inst.conic, "closed": inst.acceptance.is_closed}
    if computed["convex"] and _sampled_convexity_violation(inst):
        raise InstanceError("instance claims convex primitives but sampling finds a violation", ("v0",))
    if computed["conic"] and _sampled_homogeneity_violation(inst):
        raise InstanceError("instance claims homogeneous rules but sampling finds a violation", ("v0",))
    for key, declared in flags.items():
        if bool(declared) != bool(computed[key]):
            raise InstanceError(f"declared flag {key}={declared} disagrees with the instance "
                                f"({computed[key]})", ("flags", key))


def instance_to_dict(inst: MarketInstance, positions=None, flags=None, expected=None):
    doc = {
        "version": SCHEMA_VERSION,
        "name": inst.name,
        "n_assets": inst.n_assets,
        "space": {"probs": inst.space.probs.tolist(), "labels": list(inst.space.labels)},
        "acceptance": inst.acceptance.to_dict(),
        "portfolio_set": inst.portfolio.to_dict(),
        "v0": inst.v0.to_dict(),
        "v1": inst.v1.to_dict(),
        "box": np.asarray(inst.box, float).tolist(),
    }
    if positions:
        doc["positions"] = {k: np.asarray(v, float).tolist() for k, v in positions.items()}
    if flags:
        doc["flags"] = dict(flags)
    if expected:
        doc["expected"] = expected
    return json.loads(json.dumps(doc))


def fixture_path(name):
    return Path(str(resources.files("frictional_risk").joinpath(f"fixtures/{name}.json")))


def fixture_names():
    root = Path(str(resources.files("frictional_risk").joinpath("fixtures")))
    return sorted(p.stem for p in root.glob("*.json"))


def load_fixture(name) -> LoadedInstance:
    return load_instance(fixture_path(name))
