"""Evaluation of the risk measure and the checks built on top of it.

Three solvers share one report type. The polyhedral path is exact: it
minimises over every compiled (alternative, cell) program. The convex path
runs Kelley cutting planes inside the search box, so every iteration yields
a valid lower bound. The global path samples a grid and polishes the best
points; it only ever claims an upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .acceptance import AcceptanceSet, Dominance, ExpectedShortfall, RangeVaR, ValueAtRisk, WorstCase
from .errors import InstanceError, UnsupportedError
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from .market import MarketInstance
from .program import (
    STRICT_MARGIN,
    compile_programs,
    lexicographic_minimizer,
    max_slack,
    solve_program,
)
from .scenario import as_position

OPTIMAL_STATUS = "optimal"
FEASIBLE_BOUND = "feasible-bound"
INFEASIBLE_STATUS = "infeasible"
UNBOUNDED_STATUS = "unbounded"
RESOLUTION_LIMIT = "resolution-limit"

GRID_CAP = 10**8
GLOBAL_GRID_CAP = 4 * 10**6
CHUNK = 1 << 18


@dataclass
class SearchConfig:
    box: np.ndarray | None = None
    h: float = 2.0**-6
    multistart: int = 8
    seed: int = 0
    tol: float = 1e-9
    path: str | None = None
    tie_break: bool = True
    max_cuts: int = 400

    def __post_init__(self):
        if self.h <= 0 or self.multistart < 1 or self.tol <= 0:
            raise InstanceError("search config needs h > 0, multistart >= 1 and tol > 0")
        if self.path not in (None, "polyhedral", "convex", "global"):
            raise InstanceError(f"unknown solver path {self.path!r}")

    def box_for(self, inst):
        box = inst.box if self.box is None else self.box
        return np.asarray(box, float).reshape(inst.n_assets, 2)

    def to_dict(self):
        return {"h": self.h, "multistart": self.multistart, "seed": self.seed, "tol": self.tol,
                "path": self.path, "tie_break": self.tie_break,
                "box": None if self.box is None else np.asarray(self.box, float).tolist()}


@dataclass
class SolveReport:
    value: float
    status: str
    path: str
    minimizer: np.ndarray | None = None
    attained: bool = False
    ray: np.ndarray | None = None
    lower_bound: float | None = None
    oracle_gap: float | None = None
    feasible_point: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def finite(self):
        return bool(np.isfinite(self.value))

    def certificates(self):
        return {"feasible_point": self.feasible_point, "dual_lower_bound": self.lower_bound,
                "oracle_gap": self.oracle_gap}

    def to_dict(self):
        return {
            "value": extended(self.value),
            "status": self.status,
            "path": self.path,
            "attained": self.attained,
            "minimizer": None if self.minimizer is None else np.asarray(self.minimizer).tolist(),
            "ray": None if self.ray is None else np.asarray(self.ray).tolist(),
            "certificates": {k: extended(v) if isinstance(v, float) else v
                             for k, v in self.certificates().items()},
            "notes": list(self.notes),
        }


def extended(v):
    """Extended reals as JSON-safe values: infinities become strings."""
    if v is None:
        return None
    v = float(v)
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return v


def choose_path(inst: MarketInstance):
    try:
        compile_programs(inst)
        return "polyhedral"
    except UnsupportedError:
        pass
    if inst.convex and inst.portfolio.polyhedral:
        return "convex"
    return "global"


def rho(inst: MarketInstance, X, cfg: SearchConfig | None = None) -> SolveReport:
    cfg = cfg or SearchConfig()
    X = as_position(inst.space, X)
    if X.ndim != 1:
        raise InstanceError("rho evaluates one position at a time")
    path = cfg.path or choose_path(inst)
    if path == "polyhedral":
        rep = _rho_polyhedral(inst, X, cfg)
    elif path == "convex":
        rep = _rho_convex(inst, X, cfg)
    else:
        rep = _rho_global(inst, X, cfg)
    _certify(inst, X, rep, cfg)
    return rep


def _certify(inst, X, rep, cfg):
    if rep.minimizer is None:
        return
    x = rep.minimizer
    ok = bool(inst.portfolio.contains(x, 1e-7)) and bool(inst.acceptance.contains(X + inst.v1(x), 1e-7))
    cost = float(inst.v0(x))
    ok &= abs(cost - rep.value) <= 1e-6 * (1 + abs(rep.value)) or rep.status == RESOLUTION_LIMIT
    rep.feasible_point = ok
    box = cfg.box_for(inst)
    if rep.path != "polyhedral" and np.any(np.isclose(x, box[:, 0]) | np.isclose(x, box[:, 1])):
        rep.notes.append("minimizer on the search box boundary; the box may be too small")


# -- polyhedral path -----------------------------------------------------------

def _rho_polyhedral(inst, X, cfg):
    progs = compile_programs(inst)
    results = [solve_program(p, X, tol=cfg.tol) for p in progs]
    values = np.array([r.value for r in results])
    best = float(values.min()) if values.size else np.inf
    if best == np.inf:
        return SolveReport(np.inf, INFEASIBLE_STATUS, "polyhedral", notes=["every program infeasible"])
    if best == -np.inf:
        k = int(np.argmin(values))
        r = results[k]
        ray = None if r.ray is None else r.ray[:inst.n_assets]
        return SolveReport(-np.inf, UNBOUNDED_STATUS, "polyhedral", ray=ray,
                           notes=[f"unbounded program {progs[k].label}"])
    near = [k for k in np.argsort(values, kind="stable")
            if values[k] <= best + cfg.tol * (1 + abs(best))]
    chosen = None
    box = cfg.box_for(inst)
    for k in near:
        r = results[k]
        if not r.attained:
            continue
        x = r.z[:inst.n_assets]
        if cfg.tie_break:
            z = lexicographic_minimizer(progs[k], X, r.n, r.value, box, cfg.tol)
            if z is not None:
                x = z[:inst.n_assets]
        x = np.where(np.abs(x) < 1e-12, 0.0, x)
        if chosen is None or tuple(x) < tuple(chosen):
            chosen = x
            if not cfg.tie_break:
                break
    rep = SolveReport(best, OPTIMAL_STATUS, "polyhedral", minimizer=chosen,
                      attained=chosen is not None, lower_bound=best)
    if chosen is None:
        rep.notes.append("infimum not attained (open acceptance cell)")
    return rep


# -- convex path ---------------------------------------------------------------

def _piece_gradient(f, y, scale, rng, step=1e-7):
    """Gradient of the affine piece active just beside y (perturbed forward differences)."""
    y = y + rng.uniform(-1, 1, y.size) * 1e-6 * scale
    fy = float(f(y))
    g = np.empty(y.size)
    for i in range(y.size):
        e = np.zeros(y.size)
        e[i] = step * scale
        g[i] = (float(f(y + e)) - fy) / (step * scale)
    return y, fy, g


def _kelley_max(phi, N, PG, Ph, box, scale, rng, iters, tol):
    """Maximise a concave function over P and the box by cutting planes.

    Returns (best point, best value, certified upper bound).
    """
    G = [np.hstack([PG, np.zeros((PG.shape[0], 1))])]
    h = [Ph]
    lo = np.append(box[:, 0], -np.inf)
    hi = np.append(box[:, 1], np.inf)
    c = np.zeros(N + 1)
    c[-1] = -1.0
    x = np.clip(np.zeros(N), box[:, 0], box[:, 1])
    best_x, best_v, ub = x, -np.inf, np.inf
    for _ in range(iters):
        v = float(phi(x))
        if v > best_v:
            best_x, best_v = x.copy(), v
        y, fy, g = _piece_gradient(phi, x, scale, rng)
        # s <= phi(y) + g.(x - y)
        G.append(np.append(g, -1.0)[None, :])
        h.append(np.array([g @ y - fy]))
        res = solve_lp(c, np.vstack(G), np.concatenate(h), lower=lo, upper=hi)
        if res.status != OPTIMAL:
            return best_x, best_v, -np.inf if res.status == INFEASIBLE else np.inf
        ub = min(ub, -res.value)
        x = res.z[:N]
        if ub - best_v <= tol * (1 + abs(best_v)) or best_v > 1e-3 * scale:
            break
    return best_x, best_v, ub


def _pull_back(phi, x, anchor, iters=60):
    """Point where the segment from x to a strictly feasible anchor enters {phi >= 0}."""
    lo, hi = 0.0, 1.0  # weight on the anchor
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if phi((1 - mid) * x + mid * anchor) >= 0:
            hi = mid
        else:
            lo = mid
    return (1 - hi) * x + hi * anchor


def _rho_convex(inst, X, cfg):
    if not inst.acceptance.is_convex:
        raise UnsupportedError("the convex path needs a convex acceptance set")
    N = inst.n_assets
    box = cfg.box_for(inst)
    scale = 1.0 + float(np.max(np.abs(box)))
    rows = inst.portfolio.rows()
    if rows is None:
        raise UnsupportedError("the convex path needs a polyhedral portfolio set")
    PG, Ph = rows
    rng = np.random.default_rng(cfg.seed)
    f = inst.v0
    phi = lambda x: float(inst.acceptance.slack(X + inst.v1(x)))
    anchor, margin, ub = _kelley_max(phi, N, PG, Ph, box, scale, rng, cfg.max_cuts, 1e-9)
    if ub < -1e-9:
        return SolveReport(np.inf, INFEASIBLE_STATUS, "convex",
                           notes=["acceptance unreachable inside the box (cutting-plane bound)"])
    if margin < 0:
        return SolveReport(np.inf, INFEASIBLE_STATUS, "convex",
                           notes=["no feasible point found inside the box (semidecision)"])
    slater = margin > 0
    # variables [x | t]; minimize t
    cut_G = [np.hstack([PG, np.zeros((PG.shape[0], 1))])]
    cut_h = [Ph]
    lo = np.append(box[:, 0], -np.inf)
    hi = np.append(box[:, 1], np.inf)
    c = np.zeros(N + 1)
    c[-1] = 1.0
    best_x, best_v = anchor.copy(), float(f(anchor))
    lb = -np.inf
    x = anchor.copy()
    for _ in range(cfg.max_cuts):
        y, fy, g = _piece_gradient(f, x, scale, rng)
        cut_G.append(np.append(-g, 1.0)[None, :])
        cut_h.append(np.array([fy - g @ y]))
        py, phy, gp = _piece_gradient(phi, x, scale, rng)
        cut_G.append(np.append(gp, 0.0)[None, :])
        cut_h.append(np.array([gp @ py - phy]))
        res = solve_lp(c, np.vstack(cut_G), np.concatenate(cut_h), lower=lo, upper=hi)
        if res.status != OPTIMAL:
            break
        lb = max(lb, res.value)
        x = res.z[:N]
        cand = x if phi(x) >= 0 else (_pull_back(phi, x, anchor) if slater else None)
        if cand is not None:
            v = float(f(cand))
            if v < best_v:
                best_x, best_v = cand, v
        if best_v - lb <= 1e-9 * (1 + abs(best_v)):
            break
    status = OPTIMAL_STATUS if best_v - lb <= 1e-6 * (1 + abs(best_v)) else FEASIBLE_BOUND
    return SolveReport(best_v, status, "convex", minimizer=best_x, attained=True, lower_bound=lb)


# -- grid machinery shared by the global path and the oracle -----------------------

def _axes(box, h):
    return [lo + h * np.arange(int(np.floor((hi - lo) / h + 1e-9)) + 1) for lo, hi in box]


def _grid_scan(inst, X, axes, budget=None, keep=1, tol=1e-9):
    """Best `keep` feasible grid points (sorted by cost), streaming over chunks."""
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape, dtype=float))
    best_v = np.full(0, np.inf)
    best_x = np.zeros((0, len(axes)))
    for start in range(0, total, CHUNK):
        idx = np.unravel_index(np.arange(start, min(start + CHUNK, total)), shape)
        x = np.stack([a[i] for a, i in zip(axes, idx)], axis=-1)
        ok = np.asarray(inst.portfolio.contains(x, tol), bool)
        if not ok.any():
            continue
        x = x[ok]
        ok = np.asarray(inst.acceptance.contains(X + inst.v1(x), tol), bool)
        if not ok.any():
            continue
        x = x[ok]
        v = np.atleast_1d(inst.v0(x))
        if budget is not None:
            keep_mask = v <= budget + tol
            x, v = x[keep_mask], v[keep_mask]
        vv = np.concatenate([best_v, v])
        xx = np.vstack([best_x, x])
        order = np.lexsort(tuple(xx.T[::-1]) + (vv,))[:keep]
        best_v, best_x = vv[order], xx[order]
    return best_v, best_x


def rho_bruteforce(inst: MarketInstance, X, box=None, h=2.0**-6):
    """Exhaustive grid minimum of V0 over feasible grid points (+inf if none)."""
    if h <= 0:
        raise InstanceError("grid step must be positive")
    X = as_position(inst.space, X)
    box = inst.box if box is None else np.asarray(box, float).reshape(inst.n_assets, 2)
    axes = _axes(box, h)
    if np.prod([len(a) for a in axes], dtype=float) > GRID_CAP:
        raise InstanceError(f"grid exceeds {GRID_CAP} points")
    v, _ = _grid_scan(inst, X, axes)
    return float(v[0]) if v.size else np.inf


def _feasible(inst, X, x, tol=1e-9):
    return bool(inst.portfolio.contains(x, tol)) and bool(inst.acceptance.contains(X + inst.v1(x), tol))


def _polish(inst, X, x, v, h, box, budget=None):
    """Pattern search that keeps feasibility and lowers the cost."""
    N = x.size
    dirs = [s * np.eye(N)[i] for i in range(N) for s in (1, -1)]
    dirs += [s * np.eye(N)[i] + t * np.eye(N)[j] for i in range(N) for j in range(i + 1, N)
             for s in (1, -1) for t in (1, -1)]
    step = h / 2
    while step > h * 2.0**-20:
        moved = False
        for d in dirs:
            y = np.clip(x + step * d, box[:, 0], box[:, 1])
            if not _feasible(inst, X, y):
                continue
            w = float(inst.v0(y))
            if w < v - 1e-15:
                x, v, moved = y, w, True
                break
        if not moved:
            step /= 2
    return x, v


def _rho_global(inst, X, cfg):
    box = cfg.box_for(inst)
    h = cfg.h
    while np.prod([len(a) for a in _axes(box, h)], dtype=float) > GLOBAL_GRID_CAP:
        h *= 2
    vals, pts = _grid_scan(inst, X, _axes(box, h), keep=cfg.multistart)
    notes = [f"grid step {h:g}"]
    if not vals.size:
        return SolveReport(np.inf, INFEASIBLE_STATUS, "global",
                           notes=notes + ["no feasible grid point (semidecision)"])
    best_x, best_v = pts[0], float(vals[0])
    for x, v in zip(pts, vals):
        y, w = _polish(inst, X, x.copy(), float(v), h, box)
        if w < best_v - 1e-12 or (abs(w - best_v) <= 1e-12 and tuple(y) < tuple(best_x)):
            best_x, best_v = y, w
    return SolveReport(best_v, RESOLUTION_LIMIT, "global", minimizer=best_x, attained=True,
                       notes=notes)


# -- the set C ------------------------------------------------------------------------

def c_membership(inst: MarketInstance, X, m, cfg: SearchConfig | None = None):
    """Is there an admissible x with V0(x) <= m and X + V1(x) acceptable?"""
    cfg = cfg or SearchConfig()
    X = as_position(inst.space, X)
    path = cfg.path or choose_path(inst)
    if path == "polyhedral":
        budget = m + cfg.tol * (1 + abs(m))
        return any(solve_program(p, X, budget=budget, tol=cfg.tol).status in (OPTIMAL, UNBOUNDED)
                   for p in compile_programs(inst))
    rep = rho(inst, X, cfg)
    return rep.attained and rep.value <= m + cfg.tol * (1 + abs(m))


# -- cash-additive reference --------------------------------------------------------

def rho_cash_additive(A: AcceptanceSet, X, tol=1e-9):
    """inf{m : X + m 1 in A}."""
    X = as_position(A.space, X)
    # worst case and VaR statistics are levels of X itself, ES and RVaR are already losses
    if isinstance(A, (WorstCase, ValueAtRisk)):
        return -float(A.statistic(X))
    if isinstance(A, (ExpectedShortfall, RangeVaR)):
        return float(A.statistic(X))
    if isinstance(A, Dominance):
        return float(np.max(A.floor - X))
    try:
        cells = A.cells()
    except UnsupportedError:
        cells = None
    if cells is not None and not any(c.is_family for c in cells):
        return _cash_by_cells(cells, X)
    return _cash_by_bisection(A, X, tol)


def _cash_by_cells(cells, X):
    best = np.inf
    for cell in cells:
        # variables [m | aux]: E (X + m 1) + F aux >= f
        G = np.hstack([cell.E.sum(axis=1, keepdims=True), cell.F])
        h = cell.f - cell.E @ X
        c = np.zeros(G.shape[1])
        c[0] = 1.0
        res = solve_lp(c, G, h)
        if res.status == UNBOUNDED:
            return -np.inf
        if res.status == OPTIMAL:
            if cell.has_strict:
                s, _ = max_slack(c, G, h, cell.strict)
                if s <= STRICT_MARGIN:
                    continue
            best = min(best, res.value)
    return float(best)


def _cash_by_bisection(A, X, tol):
    ones = np.ones(A.space.size)
    inside = lambda m: bool(A.contains(X + m * ones, 0.0))
    hi = 1.0
    while not inside(hi):
        hi *= 2
        if hi > 1e12:
            return np.inf
    lo = -1.0
    while inside(lo):
        lo *= 2
        if lo < -1e12:
            return -np.inf
    while hi - lo > tol * (1 + abs(hi)):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if inside(mid) else (mid, hi)
    return hi


# -- structural cross-checks ------------------------------------------------------------

@dataclass
class CheckResult:
    passed: bool | None
    detail: dict = field(default_factory=dict)
    note: str = ""

    @property
    def label(self):
        return {True: "pass", False: "fail", None: "skipped"}[self.passed]


def _with_acceptance(inst, A):
    return MarketInstance(inst.space, A, inst.portfolio, inst.v0, inst.v1, inst.name, inst.box)


def convex_min_decomposition_check(inst, X, cfg=None, samples=100, seed=0):
    """rho equals the minimum over the dominance sets Y + X_+ with Y acceptable."""
    cfg = cfg or SearchConfig()
    if not inst.convex_market:
        return CheckResult(None, note="needs convex P and V0 and concave V1")
    X = as_position(inst.space, X)
    base = rho(inst, X, cfg)
    if base.minimizer is None:
        return CheckResult(None, note="minimizer missing; inconclusive")
    Ystar = X + inst.v1(base.minimizer)
    at_star = rho(_with_acceptance(inst, Dominance(inst.space, Ystar)), X, cfg).value
    rng = np.random.default_rng(seed)
    worst = np.inf
    tried = 0
    while tried < samples:
        Y = rng.normal(scale=2.0, size=inst.n_outcomes)
        if not inst.acceptance.contains(Y):
            Y = Y + rng.exponential(2.0, size=Y.size)
            if not inst.acceptance.contains(Y):
                continue
        tried += 1
        worst = min(worst, rho(_with_acceptance(inst, Dominance(inst.space, Y)), X,
                               SearchConfig(cfg.box, cfg.h, tol=cfg.tol, tie_break=False)).value
                    - base.value)
    ok = abs(at_star - base.value) <= 1e-6 * (1 + abs(base.value)) and worst >= -1e-6
    return CheckResult(ok, {"rho": base.value, "rho_at_minimizer_set": at_star,
                            "min_gap_over_samples": worst})


def _additivity_premises(inst, z, trials=200, seed=0, tol=1e-9):
    rng = np.random.default_rng(seed)
    z = np.asarray(z, float)
    x = rng.normal(scale=3.0, size=(trials, inst.n_assets))
    lam = rng.normal(scale=3.0, size=(trials, 1))
    v0z, v1z = float(inst.v0(z)), inst.v1(z)
    if np.any(np.abs(inst.v0(x + lam * z) - inst.v0(x) - lam[:, 0] * v0z) > tol * (1 + np.abs(x).sum(1))):
        return "V0 is not additive along z"
    if np.any(np.abs(inst.v1(x + lam * z) - inst.v1(x) - lam * v1z) > tol * (1 + np.abs(x).sum(1))[:, None]):
        return "V1 is not additive along z"
    rows = inst.portfolio.rows()
    if rows is not None:
        if np.any(np.abs(rows[0] @ z) > tol):
            return "P is not invariant along z"
    else:
        inside = x[np.asarray(inst.portfolio.contains(x), bool)]
        if not np.all(inst.portfolio.contains(inside + lam[:len(inside)] * z)):
            return "P is not invariant along z"
    return None


def price_additivity_check(inst, z, X, lambdas=(-1.0, 0.0, 2.0), cfg=None):
    """rho(X + lam V1(z)) = rho(X) - lam V0(z) when z is a frictionless direction."""
    cfg = cfg or SearchConfig()
    why = _additivity_premises(inst, z)
    if why:
        return CheckResult(None, note=f"premise violation: {why}")
    X = as_position(inst.space, X)
    z = np.asarray(z, float)
    base = rho(inst, X, cfg).value
    rows = []
    for lam in lambdas:
        got = rho(inst, X + lam * inst.v1(z), cfg).value
        want = base - lam * float(inst.v0(z))
        rows.append({"lambda": lam, "rho": got, "expected": want})
    ok = all((np.isinf(r["rho"]) and r["rho"] == r["expected"]) or
             abs(r["rho"] - r["expected"]) <= 1e-6 * (1 + abs(r["expected"])) for r in rows)
    return CheckResult(ok, {"rows": rows})


def reduction_check(inst, z, X, cfg=None, densities=(16, 64, 256), radius=None, seed=0):
    """rho(X) = V0(z) inf over zero-cost payoffs Y of rho_A(X + Y), sampled from above."""
    cfg = cfg or SearchConfig()
    if not (len(inst.v0.terms) == 1 and inst.v0.terms[0].kind == "affine"
            and inst.v0.terms[0].const == 0):
        return CheckResult(None, note="reduction restricted to linear V0")
    why = _additivity_premises(inst, z)
    if why:
        return CheckResult(None, note=f"premise violation: {why}")
    z = np.asarray(z, float)
    v0z = float(inst.v0(z))
    if v0z <= 0 or not np.allclose(inst.v1(z), 1.0):
        return CheckResult(None, note="needs V0(z) > 0 and V1(z) = 1")
    X = as_position(inst.space, X)
    prices = inst.v0.terms[0].coef
    # orthonormal basis of the zero-cost hyperplane
    _, _, vt = np.linalg.svd(prices[None, :])
    basis = vt[1:]
    box = cfg.box_for(inst)
    radius = radius or float(np.max(np.abs(box)))
    rng = np.random.default_rng(seed)
    A = inst.acceptance

    def value(coords):
        y = np.atleast_2d(coords) @ basis
        out = np.full(len(y), np.inf)
        ok = np.asarray(inst.portfolio.contains(y), bool)
        for k in np.flatnonzero(ok):
            out[k] = rho_cash_additive(A, X + inst.v1(y[k]))
        return out

    target = rho(inst, X, cfg).value
    seq = []
    best_c = None
    if basis.shape[0] == 0:
        seq = [v0z * rho_cash_additive(A, X)] * len(densities)
    else:
        for dens in densities:
            if basis.shape[0] == 1:
                coords = np.linspace(-radius, radius, dens)[:, None]
            else:
                coords = rng.uniform(-radius, radius, size=(dens, basis.shape[0]))
            vals = value(coords)
            k = int(np.argmin(vals))
            if best_c is None or vals[k] < value(best_c)[0]:
                best_c = coords[k]
            seq.append(v0z * float(min(vals[k], value(best_c)[0])))
        if basis.shape[0] == 1:
            step = 2 * radius / (densities[-1] - 1)
            c0 = float(best_c[0])
            res = minimize_scalar(lambda s: value(np.array([s]))[0], bounds=(c0 - step, c0 + step),
                                  method="bounded", options={"xatol": 1e-10})
            seq.append(v0z * float(min(res.fun, value(best_c)[0])))
    monotone = all(b <= a + 1e-12 for a, b in zip(seq, seq[1:]))
    from_above = all(s >= target - 1e-6 for s in seq)
    ok = monotone and from_above and abs(seq[-1] - target) <= 1e-6 * (1 + abs(target))
    return CheckResult(ok, {"rho": target, "sampled_infima": seq})
