"""Searches for acceptable deals, scalable acceptable deals and the cone L.

All finders are semidecisions. When the instance compiles to linear
programs the search also runs exactly over every program, so deals hiding
on lower-dimensional sets are not missed; otherwise only the deterministic
grid and sphere samples are consulted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .acceptance import AcceptanceSet, WorstCase, sphere_directions
from .errors import UnsupportedError
from .lp import OPTIMAL, solve_lp
from .market import (
    AcquisitionRule,
    AffineTerm,
    CurveTerm,
    MarketInstance,
    MaxTerm,
    MinTerm,
    PolyhedralSet,
)
from .piecewise import PiecewiseLinear
from .program import compile_programs
from .risk import SearchConfig, _axes

PAYOFF_TOL = 1e-7
SPHERE_MAX_DIM = 6


@dataclass
class DealReport:
    kind: str
    witness: np.ndarray | None = None
    l_status: str = "unknown"
    l_witnesses: list = field(default_factory=list)
    sufficient_conditions: dict = field(default_factory=dict)
    acceptable_witness: np.ndarray | None = None
    scalable_witness: np.ndarray | None = None
    scalable_is_acceptable_deal: bool | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        arr = lambda v: None if v is None else np.asarray(v, float).tolist()
        return {
            "kind": self.kind,
            "witness": arr(self.witness),
            "l_status": self.l_status,
            "l_witnesses": [arr(w) for w in self.l_witnesses],
            "sufficient_conditions": dict(self.sufficient_conditions),
            "acceptable_witness": arr(self.acceptable_witness),
            "scalable_witness": arr(self.scalable_witness),
            "scalable_is_acceptable_deal": self.scalable_is_acceptable_deal,
            "notes": list(self.notes),
        }


# -- predicates -------------------------------------------------------------------

def l_membership(inst: MarketInstance, x, tol=1e-9):
    x = np.asarray(x, float)
    return (bool(inst.portfolio.asymptotic_contains(x, tol))
            and float(inst.v0.asymptotic(x)) <= tol
            and bool(inst.acceptance.asymptotic_contains(inst.v1(x), tol)))


def is_acceptable_deal(inst, x, tol=1e-9):
    x = np.asarray(x, float)
    pay = inst.v1(x)
    return (bool(inst.portfolio.contains(x, tol)) and float(inst.v0(x)) <= tol
            and bool(inst.acceptance.contains(pay, tol)) and float(np.max(np.abs(pay))) > PAYOFF_TOL)


def is_scalable_deal(inst, x, tol=1e-9):
    x = np.asarray(x, float)
    return l_membership(inst, x, tol) and float(np.max(np.abs(inst.v1(x)))) > PAYOFF_TOL


# -- asymptotic instance ------------------------------------------------------------

class _AsymptoticAcceptance(AcceptanceSet):
    family = "Asymptotic"
    is_cone = True
    has_statistic = False

    def __init__(self, A):
        super().__init__(A.space)
        self.base = A
        self.is_convex = A.is_convex

    def contains(self, Y, tol=1e-9):
        return self.base.asymptotic_contains(Y, tol)

    def cells(self):
        return self.base.asymptotic_cells()


def _asymptotic_terms(rule):
    out = []
    for t in rule.terms:
        if t.kind == "affine":
            out.append(AffineTerm(t.coef))
        elif t.kind == "max":
            out.append(MaxTerm(t.C))
        elif t.kind == "min":
            out.append(MinTerm(t.C))
        elif t.kind == "curve":
            c = t.curve
            out.append(CurveTerm(t.coef, PiecewiseLinear([0.0], [0.0], c.left_slope, c.right_slope)))
        else:
            raise UnsupportedError("opaque terms have no asymptotic lift")
    return out


def asymptotic_instance(inst: MarketInstance):
    """(P^inf, V0^inf, V1, A^inf): its acceptable deals are the scalable deals of inst."""
    def make():
        if not inst.v1.pos_hom:
            raise UnsupportedError("V1 is not positively homogeneous")
        rows = inst.portfolio.asymptotic_rows()
        if rows is None:
            raise UnsupportedError("asymptotic cone of P has no rows")
        G, _ = rows
        P = PolyhedralSet(G.reshape(-1, inst.n_assets), np.zeros(G.shape[0]))
        v0 = AcquisitionRule("Asymptotic", {}, _asymptotic_terms(inst.v0), inst.n_assets)
        A = _AsymptoticAcceptance(inst.acceptance)
        A.cells()
        return MarketInstance(inst.space, A, P, v0, inst.v1, inst.name + "^inf", inst.box)
    return inst.cache("asymptotic", make)


# -- exact search over compiled programs ------------------------------------------------

def _program_candidates(inst, scale, objective):
    """Optimal portfolios of every program at zero budget inside [-scale, scale]^N."""
    progs = compile_programs(inst)
    X = np.zeros(inst.n_outcomes)
    out = []
    for p in progs:
        if p.step is not None:
            continue
        c, G, h, strict, _, _ = p.system(X, budget=1e-12)
        lo = np.full(c.size, -np.inf)
        hi = np.full(c.size, np.inf)
        lo[:p.n], hi[:p.n] = -scale, scale
        for obj in objective(p, c.size):
            res = solve_lp(obj, G, h, lower=lo, upper=hi)
            if res.status == OPTIMAL:
                out.append(res.z[:p.n])
    return out


def _payoff_objectives(inst):
    """Maximise +-x_i (a proxy for a nonzero payoff) on every program."""
    def gen(p, nv):
        for i in range(p.n):
            for s in (1.0, -1.0):
                e = np.zeros(nv)
                e[i] = -s
                yield e
    return gen


def _family_candidates(inst, scale):
    """Candidates from parametric cells: integer-indexed cells solved at n = n_min..n_min+3."""
    progs = compile_programs(inst)
    X = np.zeros(inst.n_outcomes)
    out = []
    for p in progs:
        if p.step is None:
            continue
        for n in p.n_min + np.arange(4):
            if n > p.n_max:
                break
            c, G, h, _, _, _ = p.system(X, n=n, budget=1e-12)
            lo = np.full(c.size, -np.inf)
            hi = np.full(c.size, np.inf)
            lo[:p.n], hi[:p.n] = -scale, scale
            for i in range(p.n):
                for s in (1.0, -1.0):
                    e = np.zeros(c.size)
                    e[i] = -s
                    res = solve_lp(e, G, h, lower=lo, upper=hi)
                    if res.status == OPTIMAL:
                        out.append(res.z[:p.n])
    return out


def _exact_candidates(inst, scale):
    try:
        return _program_candidates(inst, scale, _payoff_objectives(inst)) + _family_candidates(inst, scale)
    except UnsupportedError:
        return []


def _grid_candidates(inst, box, h):
    axes = _axes(box, h)
    while np.prod([len(a) for a in axes], dtype=float) > 2e6:
        h *= 2
        axes = _axes(box, h)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    pay = inst.v1(pts)
    ok = (np.asarray(inst.portfolio.contains(pts), bool)
          & (np.atleast_1d(inst.v0(pts)) <= 1e-9)
          & np.asarray(inst.acceptance.contains(pay), bool)
          & (np.max(np.abs(pay), axis=-1) > PAYOFF_TOL))
    pts = pts[ok]
    order = np.argsort(np.abs(pts).sum(axis=1), kind="stable")
    return pts[order]


def _clean(x):
    x = np.asarray(x, float)
    r = np.round(x, 9)
    return np.where(np.abs(r) < 1e-12, 0.0, r)


def find_acceptable_deal(inst: MarketInstance, cfg: SearchConfig | None = None):
    """First verified acceptable deal: exact programs at growing scale, then a grid."""
    cfg = cfg or SearchConfig()
    box = cfg.box_for(inst)
    for scale in (1.0, float(np.max(np.abs(box)))):
        for x in _exact_candidates(inst, scale):
            x = _clean(x)
            if is_acceptable_deal(inst, x):
                return x
    h = max(cfg.h, 2.0**-3)
    for x in _grid_candidates(inst, box, h):
        if is_acceptable_deal(inst, x):
            return _clean(x)
    return None


def _directions(n, seed):
    if n > SPHERE_MAX_DIM:
        return np.zeros((0, n))
    if n == 1:
        return np.array([[1.0], [-1.0]])
    return sphere_directions(n, seed=seed)


def _l1(x):
    return x / np.abs(x).sum()


def find_scalable_acceptable_deal(inst: MarketInstance, cfg: SearchConfig | None = None):
    """Sphere directions, then exact programs on the asymptotic instance.

    Returns None when nothing was found, including when the asymptotic cone of A
    is unavailable (see `scalable_search_supported`).
    """
    try:
        return _find_scalable(inst, cfg or SearchConfig())
    except UnsupportedError:
        return None


def scalable_search_supported(inst: MarketInstance):
    try:
        inst.acceptance.asymptotic_contains(np.zeros(inst.n_outcomes))
    except UnsupportedError:
        return False
    return True


def _find_scalable(inst, cfg):
    dirs = _directions(inst.n_assets, 0x5EED)
    if inst.v1.pos_hom:
        for x in dirs:
            if is_scalable_deal(inst, x):
                return _clean(x)
        try:
            ainst = asymptotic_instance(inst)
        except UnsupportedError:
            return None
        for x in _exact_candidates(ainst, 1.0):
            if np.abs(x).sum() > 1e-9:
                x = _clean(_l1(x))
                if is_scalable_deal(inst, x):
                    return x
        return None
    # the definition applies V1 itself to x in P^inf: search several scales
    for scale in (1.0, 10.0, 100.0, 1000.0):
        for x in dirs:
            if is_scalable_deal(inst, scale * x):
                return _clean(scale * x)
    return None


def _primitive(x):
    """Rescale a cone direction so its smallest nonzero entry has modulus 1."""
    nz = np.abs(x[np.abs(x) > 1e-9])
    return _clean(x / nz.min()) if nz.size else x


def l_structure(inst: MarketInstance, cfg: SearchConfig | None = None):
    """('trivial' | 'linear' | 'nonlinear' | 'unknown', witnesses)."""
    cfg = cfg or SearchConfig()
    if not scalable_search_supported(inst):
        return "unknown", []
    members = [x for x in _directions(inst.n_assets, 0x5EED) if l_membership(inst, x)]
    try:
        ainst = asymptotic_instance(inst)
        progs = compile_programs(ainst)
    except UnsupportedError:
        progs = None
    if progs is not None:
        for p in progs:
            c, G, h, _, _, _ = p.system(np.zeros(inst.n_outcomes), budget=1e-12)
            lo = np.full(c.size, -np.inf)
            hi = np.full(c.size, np.inf)
            lo[:p.n], hi[:p.n] = -1.0, 1.0
            for i in range(p.n):
                for s in (1.0, -1.0):
                    e = np.zeros(c.size)
                    e[i] = -s
                    res = solve_lp(e, G, h, lower=lo, upper=hi)
                    if res.status == OPTIMAL and np.abs(res.z[:p.n]).sum() > 1e-7:
                        x = _l1(res.z[:p.n])
                        if l_membership(inst, x, 1e-8):
                            members.append(x)
    elif not members and inst.n_assets > SPHERE_MAX_DIM:
        return "unknown", []
    if not members:
        return "trivial", []
    for x in members:
        if not l_membership(inst, -x):
            w = _primitive(x)
            return "nonlinear", [w, -w]
    return "linear", [_primitive(members[0])]


def _scalable_arbitrage(inst, cfg):
    arb = MarketInstance(inst.space, WorstCase(inst.space), inst.portfolio, inst.v0, inst.v1,
                         inst.name, inst.box)
    return find_scalable_acceptable_deal(arb, cfg)


def _asymptotic_in_orthant(A: AcceptanceSet):
    try:
        cells = A.asymptotic_cells()
    except UnsupportedError:
        cells = None
    d = A.space.size
    if cells is not None:
        for cell in cells:
            home = cell.homogenized()
            for j in range(d):
                # min Y_j over the cone cell within the unit box
                nv = d + home.n_aux
                c = np.zeros(nv)
                c[j] = 1.0
                G = np.hstack([home.E, home.F])
                lo = np.concatenate([-np.ones(d), np.full(home.n_aux, -np.inf)])
                hi = np.concatenate([np.ones(d), np.full(home.n_aux, np.inf)])
                res = solve_lp(c, G, np.zeros(len(home.f)), lower=lo, upper=hi)
                if res.status == OPTIMAL and res.value < -1e-9:
                    return False
        return True
    dirs = sphere_directions(d)
    try:
        inside = np.asarray(A.asymptotic_contains(dirs), bool)
    except UnsupportedError:
        # unknown cone: the clause cannot be confirmed
        return False
    return not bool(np.any(inside & np.any(dirs < -1e-12, axis=1)))


def _payoff_nonneg_on_orthant(inst, samples=1000, seed=0):
    rng = np.random.default_rng(seed)
    x = np.vstack([np.eye(inst.n_assets), rng.exponential(size=(samples, inst.n_assets))])
    return bool(np.all(inst.v1(x) >= -1e-12))


def sufficient_conditions_report(inst: MarketInstance, cfg: SearchConfig | None = None):
    cfg = cfg or SearchConfig()
    bounded = bool(inst.portfolio.is_bounded)
    a_orthant = _asymptotic_in_orthant(inst.acceptance)
    p_orthant = bool(inst.portfolio.asymptotic_in_nonneg())
    pay_ok = _payoff_nonneg_on_orthant(inst)
    no_arb = None
    if a_orthant or (p_orthant and pay_ok):
        no_arb = _scalable_arbitrage(inst, cfg) is None
    return {
        "asymptotic_acceptance_in_orthant": a_orthant,
        "asymptotic_portfolios_in_orthant": p_orthant,
        "payoffs_nonnegative_on_orthant": pay_ok,
        "no_scalable_arbitrage": no_arb,
        "i": bool(a_orthant and no_arb),
        "ii": bool(p_orthant and pay_ok and no_arb),
        "iii": bounded,
    }


def deal_report(inst: MarketInstance, cfg: SearchConfig | None = None) -> DealReport:
    cfg = cfg or SearchConfig()
    scalable = find_scalable_acceptable_deal(inst, cfg)
    acceptable = find_acceptable_deal(inst, cfg)
    status, wits = l_structure(inst, cfg)
    flags = sufficient_conditions_report(inst, cfg)
    rep = DealReport("none-found", l_status=status, l_witnesses=wits, sufficient_conditions=flags,
                     acceptable_witness=acceptable, scalable_witness=scalable)
    if scalable is not None:
        rep.kind, rep.witness = "scalable", scalable
        rep.scalable_is_acceptable_deal = is_acceptable_deal(inst, scalable)
    elif acceptable is not None:
        rep.kind, rep.witness = "acceptable", acceptable
    if not scalable_search_supported(inst):
        rep.notes.append("asymptotic cone of A unavailable: scalable search and L skipped")
    if rep.kind != "acceptable":
        rep.notes.append("searches are semidecisions at the configured resolution")
    if any(flags[k] for k in ("i", "ii", "iii")) and scalable is not None:
        rep.notes.append("inconsistency: a sufficient condition holds yet a scalable deal was found")
    return rep
