"""Randomised, seeded checks of the structural properties of rho."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .market import MarketInstance
from .risk import SearchConfig, extended, rho

PROPERTIES = ("monotone", "star_shaped", "pos_homogeneous", "convex", "quasiconvex", "subadditive",
              "lsc_spotcheck")
LIP_CAP = 1e3
LSC_STEPS = (2.0**-10, 2.0**-14, 2.0**-18)


@dataclass
class PropertyVerdict:
    property: str
    result: str
    trials: int
    seed: int
    premise: bool = True
    premise_notes: list = field(default_factory=list)
    counterexample: dict | None = None
    epsilon: float = 0.0
    compared: int = 0

    @property
    def passed(self):
        return self.result == "pass"

    def to_dict(self):
        return {
            "property": self.property, "result": self.result, "trials": self.trials,
            "seed": self.seed, "premise": self.premise, "premise_notes": list(self.premise_notes),
            "counterexample": self.counterexample, "epsilon": self.epsilon, "compared": self.compared,
        }


def premises(inst: MarketInstance, prop):
    """Names of the structural hypotheses that fail for this property (empty: all hold)."""
    A, P, v0, v1 = inst.acceptance, inst.portfolio, inst.v0, inst.v1
    if prop == "monotone":
        return []
    if prop == "lsc_spotcheck":
        return [] if A.is_closed else ["A closed"]
    checks = {
        "star_shaped": [("A star shaped", A.is_star), ("P star shaped", P.is_star),
                        ("V0 star shaped", v0.star), ("V1 anti-star shaped", v1.antistar)],
        "pos_homogeneous": [("A cone", A.is_cone), ("P cone", P.is_cone),
                            ("V0 homogeneous", v0.pos_hom), ("V1 homogeneous", v1.pos_hom)],
        "quasiconvex": [("A convex", A.is_convex), ("P convex", P.is_convex),
                        ("V0 quasiconvex", v0.convex or v0.monotone_1d), ("V1 concave", v1.concave)],
        "convex": [("A convex", A.is_convex), ("P convex", P.is_convex),
                   ("V0 convex", v0.convex), ("V1 concave", v1.concave)],
        "subadditive": [("A closed under addition", A.closed_under_addition),
                        ("P closed under addition", P.closed_under_addition),
                        ("V0 subadditive", v0.convex and v0.pos_hom),
                        ("V1 superadditive", v1.concave and v1.pos_hom)],
    }[prop]
    return [name for name, ok in checks if not ok]


def _gap(a, b):
    """a - b in the extended reals, with inf - inf read as no violation."""
    if np.isinf(a) and np.isinf(b):
        return 0.0 if a == b else (np.inf if a > b else -np.inf)
    return a - b


class _Evaluator:
    def __init__(self, inst, cfg):
        self.inst, self.cfg = inst, cfg
        self.memo = {}
        self.global_used = False

    def __call__(self, X):
        key = tuple(np.round(np.asarray(X, float), 15))
        if key not in self.memo:
            rep = rho(self.inst, np.asarray(X, float), self.cfg)
            self.global_used |= rep.path == "global"
            self.memo[key] = float(rep.value)
        return self.memo[key]


def _sampler(inst, rng):
    box = np.asarray(inst.box, float)
    scale = max(0.5 * float(np.mean(box[:, 1] - box[:, 0])) / 2, 0.25)
    q = scale / 8
    d = inst.n_outcomes

    def draw():
        return np.round(rng.normal(scale=scale, size=d) / q) * q
    return draw


def _sample(prop, draw, rng):
    """Inputs of one trial: positions plus the scalars the property needs."""
    X = draw()
    if prop == "monotone":
        return {"X": X, "Y": X - np.abs(draw())}
    if prop == "star_shaped":
        return {"X": X, "lambda": float(rng.uniform(1.0, 3.0))}
    if prop == "pos_homogeneous":
        return {"X": X, "lambda": float(rng.uniform(0.1, 3.0))}
    if prop in ("convex", "quasiconvex"):
        return {"X": X, "Y": draw(), "lambda": float(rng.uniform(0.05, 0.95))}
    if prop == "subadditive":
        return {"X": X, "Y": draw()}
    U = rng.normal(size=X.size)
    return {"X": X, "direction": U / np.linalg.norm(U), "steps": list(LSC_STEPS)}


def _scaled(lam, a):
    return lam * a if np.isfinite(a) else a


def _assess(prop, f, inp):
    """(violation, values) for one trial; violation None when the comparison is undefined."""
    X = inp["X"]
    if prop == "monotone":
        a, b = f(X), f(inp["Y"])
        return _gap(a, b), {"rho_X": a, "rho_Y": b}
    if prop == "star_shaped":
        lam = inp["lambda"]
        a, b = f(X), f(lam * X)
        return _gap(_scaled(lam, a), b), {"rho_X": a, "rho_lambda_X": b}
    if prop == "pos_homogeneous":
        lam = inp["lambda"]
        a, b = f(X), f(lam * X)
        return abs(_gap(b, _scaled(lam, a))), {"rho_X": a, "rho_lambda_X": b}
    if prop in ("convex", "quasiconvex"):
        Y, lam = inp["Y"], inp["lambda"]
        a, b, m = f(X), f(Y), f(lam * X + (1 - lam) * Y)
        values = {"rho_X": a, "rho_Y": b, "rho_mix": m}
        if prop == "quasiconvex":
            return _gap(m, max(a, b)), values
        with np.errstate(invalid="ignore"):
            bound = _scaled(lam, a) + _scaled(1 - lam, b)
        return (None if np.isnan(bound) else _gap(m, bound)), values
    if prop == "subadditive":
        Y = inp["Y"]
        a, b, s = f(X), f(Y), f(X + Y)
        with np.errstate(invalid="ignore"):
            bound = a + b
        return (None if np.isnan(bound) else _gap(s, bound)), {"rho_X": a, "rho_Y": b, "rho_sum": s}
    a = f(X)
    steps = inp["steps"]
    near = [f(X + t * inp["direction"]) for t in steps]
    fine, mid = _gap(a, near[-1]), _gap(a, near[-2])
    if not np.isfinite(fine):
        return fine, {"rho_X": a, "rho_near": near}
    # a jump keeps its size as the step shrinks; anything that moves with the step is discounted
    change = abs(mid - fine) if np.isfinite(mid) else 0.0
    return fine - change, {"rho_X": a, "rho_near": near}


def _jsonable(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif isinstance(v, list):
            out[k] = [extended(t) if isinstance(t, float) else t for t in v]
        elif isinstance(v, float):
            out[k] = extended(v)
        else:
            out[k] = v
    return out


def check_property(inst: MarketInstance, prop, trials=500, seed=0, cfg: SearchConfig | None = None):
    """Sample `trials` inputs and look for a violation of `prop` beyond the solver slack.

    The check runs whether or not the structural premises hold; failing premises are
    recorded on the verdict. A counterexample is reported only after re-evaluating rho
    at the stored inputs with fresh solver state and confirming the violation exceeds
    three times the solver tolerance.
    """
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}; expected one of {', '.join(PROPERTIES)}")
    cfg = cfg or SearchConfig(seed=seed)
    failing = premises(inst, prop)
    rng = np.random.default_rng(seed)
    draw = _sampler(inst, rng)
    f = _Evaluator(inst, cfg)
    verdict = PropertyVerdict(prop, "pass", 0, seed, not failing, failing)
    compared = 0
    for t in range(trials):
        inputs = _sample(prop, draw, rng)
        gap, _ = _assess(prop, f, inputs)
        verdict.trials = t + 1
        if gap is None:
            continue
        compared += 1
        eps = epsilon(inst, cfg, f.global_used)
        if gap > eps:
            again, values = _assess(prop, _Evaluator(inst, cfg), inputs)
            if again is not None and again > max(eps, 3 * cfg.tol):
                verdict.result = "counterexample"
                verdict.counterexample = {"inputs": _jsonable(inputs), "values": _jsonable(values),
                                          "violation": extended(float(again))}
                break
    verdict.compared = compared
    verdict.epsilon = epsilon(inst, cfg, f.global_used)
    if compared == 0:
        verdict.result = "skipped"
        verdict.premise_notes = failing + ["no comparable trial (all values undefined)"]
    return verdict


def epsilon(inst, cfg, global_used):
    """Slack: ten solver tolerances, plus the grid error when the global path ran."""
    eps = 10 * cfg.tol
    if global_used:
        eps += (1 + min(inst.lipschitz(), LIP_CAP)) * cfg.h
    return eps


def assess(inst: MarketInstance, prop, inputs, cfg: SearchConfig | None = None):
    """Re-evaluate one stored trial: (violation, values), violation None if undefined."""
    inputs = {k: (np.asarray(v, float) if k in ("X", "Y", "direction") else v) for k, v in inputs.items()}
    if prop == "lsc_spotcheck":
        inputs.setdefault("steps", list(LSC_STEPS))
    return _assess(prop, _Evaluator(inst, cfg or SearchConfig()), inputs)


def check_lsc_sequence(inst: MarketInstance, sequence, limit, cfg: SearchConfig | None = None):
    """Compare rho at `limit` with the smallest value on the last third of a convergent sequence.

    The tail minimum stands in for the liminf. Returns (violation, values); a positive
    violation means rho jumps up at the limit, beyond what the tail still moves.
    """
    f = _Evaluator(inst, cfg or SearchConfig())
    along = [f(X) for X in sequence]
    at = f(limit)
    tail = along[-max(1, len(along) // 3):]
    return _gap(at, min(tail)), {"rho_limit": at, "rho_sequence": along}
