"""Support functions, dual domains and the dual representations of the risk measure.

A dual element is a weight vector w over outcomes, acting as psi(X) = w.X.
Both support functions are computed by linear programming when the
primitives are polyhedral and by capped numeric minimisation otherwise.

Two independent routes meet here. `dual_bound` evaluates the primal support
functions at a given w. `dual_value` maximises over w, exactly through one
master LP assembled from the LP duals of every cell and market program when
that is possible, by cutting planes otherwise; its optimum is re-evaluated
through `dual_bound` before being reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .acceptance import Dominance, ExpectedShortfall, WorstCase, sphere_directions
from .errors import InstanceError, UnsupportedError
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, Cell, solve_lp
from .market import MarketInstance
from .program import MAX_ALTERNATIVES, STRICT_MARGIN, _assemble, _split, market_pieces, max_slack, solve_program
from .risk import SearchConfig, extended, rho, rho_cash_additive
from .scenario import as_position

WEIGHT_TOL = 1e-12
STRICT_TOL = 1e-9
CAP_DOUBLINGS = 40
WEIGHT_CAP = 1e3
SCALE_CAP = 1e6
STRICT_SHIFT = 1e-6


def _weights(space, w):
    w = np.asarray(w, float).reshape(-1)
    if w.size != space.size:
        raise InstanceError(f"dual element needs {space.size} weights, got {w.size}")
    return w


class DualElement:
    """psi(X) = sum_j w_j X_j, with domain flags cached per instance."""

    def __init__(self, weights):
        self.weights = np.asarray(weights, float).reshape(-1)
        self._flags = {}

    def __call__(self, X):
        return np.asarray(X, float) @ self.weights

    def density(self, space):
        return self.weights / space.probs

    def flags(self, inst):
        key = id(inst)
        if key not in self._flags:
            self._flags[key] = classify(inst, self.weights)
        return self._flags[key]

    def __repr__(self):
        return f"DualElement({self.weights.tolist()})"


# -- support function of the acceptance set -------------------------------------------

def _fixed_cell_sigma(cell, c, G, f):
    d = cell.dim
    if cell.has_strict:
        s, _ = max_slack(c, G, f, cell.strict)
        if s <= STRICT_MARGIN:
            return np.inf, None, None
    res = solve_lp(c, G, f, want_ray=True)
    if res.status == INFEASIBLE:
        return np.inf, None, None
    if res.status == UNBOUNDED:
        return -np.inf, None, None if res.ray is None else res.ray[:d]
    return res.value, res.z[:d], None


def _cell_sigma(cell: Cell, w):
    """inf w.Y over one cell: (value, minimiser, descent ray)."""
    d = cell.dim
    c = np.concatenate([w, np.zeros(cell.n_aux)])
    G = np.hstack([cell.E, cell.F])
    if not cell.is_family:
        return _fixed_cell_sigma(cell, c, G, cell.f)
    # the value is convex in the family index, so floor/ceil of the relaxed optimum suffice
    Gn = np.hstack([G, -cell.step[:, None]])
    lo = np.full(c.size + 1, -np.inf)
    hi = np.full(c.size + 1, np.inf)
    lo[-1], hi[-1] = cell.n_min, cell.n_max
    res = solve_lp(np.append(c, 0.0), Gn, cell.f, lower=lo, upper=hi, want_ray=True)
    if res.status == INFEASIBLE:
        return np.inf, None, None
    if res.status == UNBOUNDED:
        return -np.inf, None, None if res.ray is None else res.ray[:d]
    n_star = res.z[-1]
    best = (np.inf, None, None)
    for n in {np.floor(n_star + 1e-9), np.ceil(n_star - 1e-9)}:
        if cell.n_min <= n <= cell.n_max:
            out = _fixed_cell_sigma(cell, c, G, cell.f + n * cell.step)
            if out[0] < best[0]:
                best = out
    return best


def _closed_form_sigma(A, w):
    if isinstance(A, WorstCase):
        return 0.0 if np.all(w >= -WEIGHT_TOL) else -np.inf
    if isinstance(A, Dominance):
        return float(w @ A.floor) if np.all(w >= -WEIGHT_TOL) else -np.inf
    if isinstance(A, ExpectedShortfall):
        return 0.0 if A.dual_cone_contains(w, WEIGHT_TOL) else -np.inf
    return None


def _sigma_A_detail(A, w):
    """(value, minimiser, descent ray); the minimiser is None when not attained."""
    try:
        cells = A.cells()
    except UnsupportedError:
        return _sigma_A_numeric(A, w)
    best = (np.inf, None, None)
    for cell in cells:
        out = _cell_sigma(cell, w)
        if out[0] < best[0]:
            best = out
        if best[0] == -np.inf:
            break
    return best


def _sigma_A_numeric(A, w):
    # monotone families: Y in A iff Z + rho_A(Z) 1 lies on the boundary for Z = Y
    if np.any(w < -WEIGHT_TOL):
        return -np.inf, None, None
    total = float(w.sum())

    def g(Z):
        return float(w @ Z + total * rho_cash_additive(A, Z))

    d = A.space.size
    prev, drops = None, 0
    for k in range(CAP_DOUBLINGS + 1):
        cap = 2.0**k
        starts = [np.zeros(d)] + [cap * e for e in np.vstack([np.eye(d), -np.eye(d)])]
        best_v, best_Z = np.inf, None
        for z0 in starts:
            res = minimize(g, z0, method="Powell", bounds=[(-cap, cap)] * d)
            if res.fun < best_v:
                best_v, best_Z = float(res.fun), res.x
        if prev is not None:
            if best_v >= prev - 1e-9 * (1 + abs(prev)):
                Y = best_Z + rho_cash_additive(A, best_Z)
                return best_v, Y, None
            drops += 1
            if drops >= 3:
                return -np.inf, None, None
        prev = best_v
    return -np.inf, None, None


def sigma_A(A, w):
    """inf over the acceptance set of w.Y."""
    w = _weights(A.space, w)
    closed = _closed_form_sigma(A, w)
    if closed is not None:
        return closed
    return float(_sigma_A_detail(A, w)[0])


# -- support function of the market ---------------------------------------------------

@dataclass
class ObjectiveProgram:
    """min (cb + Cw w).z + kb + kw.w over G z >= h, z = [x | t]."""

    G: np.ndarray
    h: np.ndarray
    cb: np.ndarray
    Cw: np.ndarray
    kb: float
    kw: np.ndarray
    label: str

    def objective(self, w):
        return self.cb + self.Cw @ w, self.kb + float(self.kw @ w)


def objective_programs(inst: MarketInstance, nonneg):
    """Programs for V0(x) - w.V1(x) valid for every w with the given sign pattern."""
    nonneg = tuple(bool(s) for s in nonneg)

    def make():
        rows = inst.portfolio.rows()
        if rows is None:
            raise UnsupportedError("portfolio set is not polyhedral")
        PG, Ph = rows
        N, d = inst.n_assets, inst.n_outcomes
        cb, Cw, kb, kw = np.zeros(N), np.zeros((N, d)), 0.0, np.zeros(d)
        zero = np.zeros(d)
        c0, e0, vex, cave = _split(inst.v0.terms, N)
        cb += c0
        kb += e0
        epi = [(C, e, 1.0, zero) for C, e in vex]
        choice = [(C, e, 1.0, zero) for C, e in cave]
        for j, rule in enumerate(inst.v1.outcomes):
            c, e, vex, cave = _split(rule.terms, N)
            unit = np.eye(d)[j]
            Cw[:, j] -= c
            kw[j] -= e
            if nonneg[j]:
                choice += [(C, ee, 0.0, -unit) for C, ee in vex]
                epi += [(-C, -ee, 0.0, unit) for C, ee in cave]
            else:
                epi += [(C, ee, 0.0, -unit) for C, ee in vex]
                choice += [(C, ee, 0.0, -unit) for C, ee in cave]
        sizes = [len(g[1]) for g in choice]
        if np.prod(sizes, dtype=float) > MAX_ALTERNATIVES:
            raise UnsupportedError("too many piece combinations for the exact path")
        K = len(epi)
        G = [np.hstack([PG, np.zeros((PG.shape[0], K))])]
        h = [Ph]
        cb_t, Cw_t = np.zeros(K), np.zeros((K, d))
        for k, (C, e, wb, ww) in enumerate(epi):
            t = np.zeros((len(e), K))
            t[:, k] = 1.0
            G.append(np.hstack([-C, t]))
            h.append(e)
            cb_t[k], Cw_t[k] = wb, ww
        G, h = np.vstack(G), np.concatenate(h)
        out = []
        for pick in itertools.product(*[range(s) for s in sizes]):
            cbx, Cwx, kb_p, kw_p = cb.copy(), Cw.copy(), kb, kw.copy()
            for (C, e, wb, ww), r in zip(choice, pick):
                cbx += wb * C[r]
                Cwx += np.outer(C[r], ww)
                kb_p += wb * e[r]
                kw_p += ww * e[r]
            out.append(ObjectiveProgram(G, h, np.concatenate([cbx, cb_t]),
                                        np.vstack([Cwx, Cw_t]), kb_p, kw_p,
                                        "/".join(map(str, pick))))
        return out

    return inst.cache(("objective", nonneg), make)


def _sigma_market_detail(inst, w):
    """(value, minimiser x, descent ray (program index, direction))."""
    try:
        progs = objective_programs(inst, w >= 0)
    except UnsupportedError:
        return _sigma_market_numeric(inst, w)
    N = inst.n_assets
    best = (np.inf, None, None)
    for k, p in enumerate(progs):
        c, const = p.objective(w)
        res = solve_lp(c, p.G, p.h, want_ray=True)
        if res.status == INFEASIBLE:
            continue
        if res.status == UNBOUNDED:
            return -np.inf, None, (k, res.ray)
        v = res.value + const
        if v < best[0]:
            best = (v, res.z[:N], None)
    return best


def _sigma_market_numeric(inst, w):
    N = inst.n_assets
    f0 = lambda x: float(inst.v0(x) - w @ inst.v1(x))

    def f(x):
        return f0(x) if inst.portfolio.contains(x) else np.inf

    base = max(1.0, float(np.max(np.abs(inst.box))))
    prev, drops = None, 0
    for k in range(CAP_DOUBLINGS + 1):
        cap = base * 2.0**k
        starts = [np.zeros(N)] + [cap * 0.5 * e for e in np.vstack([np.eye(N), -np.eye(N)])]
        best_v, best_x = np.inf, None
        for x0 in starts:
            if not inst.portfolio.contains(x0):
                continue
            res = minimize(f, x0, method="Powell", bounds=[(-cap, cap)] * N)
            if res.fun < best_v:
                best_v, best_x = float(res.fun), res.x
        if np.max(np.abs(best_x)) < 0.99 * cap:
            return best_v, best_x, None
        if prev is not None:
            if best_v >= prev - 1e-9 * (1 + abs(prev)):
                return best_v, best_x, None
            drops += 1
            if drops >= 3:
                return -np.inf, None, None
        prev = best_v
    return -np.inf, None, None


def sigma_market(inst: MarketInstance, w):
    """inf over admissible x of V0(x) - w.V1(x)."""
    w = _weights(inst.space, w)
    return float(_sigma_market_detail(inst, w)[0])


# -- domains ------------------------------------------------------------------------------

def _strictly_positive_on(A, w):
    """Is w.Y > 0 for every nonzero acceptable Y? (LP per cell and coordinate)."""
    try:
        cells = A.cells()
    except UnsupportedError:
        return _strict_by_sampling(A, w)
    d = A.space.size
    for cell in cells:
        m = cell.n_aux
        G = np.hstack([cell.E, cell.F])
        f = cell.f
        lo = hi = None
        if cell.is_family:
            G = np.hstack([G, -cell.step[:, None]])
            lo = np.full(d + m + 1, -np.inf)
            hi = np.full(d + m + 1, np.inf)
            lo[-1], hi[-1] = cell.n_min, cell.n_max
        nv = G.shape[1]
        wrow = np.zeros(nv)
        wrow[:d] = -w
        Gw = np.vstack([G, wrow])
        hw = np.append(f, 0.0)
        for j in range(d):
            for sgn in (1.0, -1.0):
                c = np.zeros(nv)
                c[j] = -sgn
                res = solve_lp(c, Gw, hw, lower=lo, upper=hi)
                if res.status == UNBOUNDED or (res.status == OPTIMAL and -res.value > STRICT_TOL):
                    return False
    return True


def _strict_by_sampling(A, w):
    dirs = sphere_directions(A.space.size)
    for r in (0.25, 1.0, 4.0):
        Y = r * dirs
        ok = np.asarray(A.contains(Y), bool)
        Y = Y[ok]
        if Y.size and np.any(Y @ w <= STRICT_TOL * np.abs(Y).sum(axis=1)):
            return False
    return True


def classify(inst: MarketInstance, w):
    """Membership of w in B, D, D_str and B_str."""
    w = _weights(inst.space, w)
    in_B = sigma_A(inst.acceptance, w) > -np.inf
    in_D = bool(in_B and sigma_market(inst, w) > -np.inf)
    strict = bool(in_B and _strictly_positive_on(inst.acceptance, w))
    return {"in_B": bool(in_B), "in_D": in_D, "in_B_str": strict, "in_D_str": bool(strict and in_D)}


def dual_bound(inst: MarketInstance, X, w):
    """sigma_A(w) + sigma_market(w) - w.X, -inf as soon as either term is."""
    X = as_position(inst.space, X)
    w = _weights(inst.space, w)
    sa = sigma_A(inst.acceptance, w)
    if sa == -np.inf:
        return -np.inf
    sm = sigma_market(inst, w)
    if sm == -np.inf:
        return -np.inf
    return float(sa + sm - w @ X)


# -- dual optimisation -------------------------------------------------------------------------

@dataclass
class DualReport:
    value: float
    status: str
    route: str
    psi: np.ndarray | None = None
    upper_bound: float | None = None
    flags: dict = field(default_factory=dict)
    psi_strict: np.ndarray | None = None
    value_strict: float | None = None
    domains: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        arr = lambda a: None if a is None else np.asarray(a, float).tolist()
        return {
            "value": extended(self.value),
            "status": self.status,
            "route": self.route,
            "psi": arr(self.psi),
            "upper_bound": extended(self.upper_bound),
            "flags": dict(self.flags),
            "psi_strict": arr(self.psi_strict),
            "value_strict": extended(self.value_strict),
            "domains": {k: {"value": extended(v["value"]), "psi": arr(v["psi"])}
                        for k, v in self.domains.items()},
            "notes": list(self.notes),
        }


def _acceptance_cells(A):
    """Cells usable in the master LP, or None when a family or missing description blocks it."""
    try:
        cells = A.cells()
    except UnsupportedError:
        return None
    if any(c.is_family for c in cells):
        return None
    keep = []
    for c in cells:
        G = np.hstack([c.E, c.F])
        zero = np.zeros(G.shape[1])
        if c.has_strict:
            s, _ = max_slack(zero, G, c.f, c.strict)
            if s <= STRICT_MARGIN:
                continue
        elif solve_lp(zero, G, c.f).status != OPTIMAL:
            continue
        keep.append(c)
    return keep


def _master_lp(inst, X, cells, progs, strict_shift=0.0, cap=WEIGHT_CAP):
    """max theta_A + theta_m - w.X over the stacked LP duals; returns (value, w)."""
    d = inst.n_outcomes
    sizes = [c.E.shape[0] for c in cells] + [p.G.shape[0] for p in progs]
    nv = d + 2 + sum(sizes)
    obj = np.zeros(nv)
    obj[:d] = X
    obj[d] = obj[d + 1] = -1.0
    lo = np.zeros(nv)
    hi = np.full(nv, np.inf)
    hi[:d] = cap
    lo[d] = lo[d + 1] = -np.inf
    Aeq, beq, G, h = [], [], [], []
    off = d + 2
    for c in cells:
        r = c.E.shape[0]
        sl = slice(off, off + r)
        block = np.zeros((d + c.n_aux, nv))
        block[:d, sl] = c.E.T
        block[:d, :d] = -np.eye(d)
        block[d:, sl] = c.F.T
        Aeq.append(block)
        beq.append(np.zeros(d + c.n_aux))
        row = np.zeros(nv)
        row[sl] = c.f
        row[d] = -1.0
        G.append(row)
        h.append(0.0)
        lo[sl] = strict_shift
        off += r
    for p in progs:
        r = p.G.shape[0]
        sl = slice(off, off + r)
        block = np.zeros((p.G.shape[1], nv))
        block[:, sl] = p.G.T
        block[:, :d] = -p.Cw
        Aeq.append(block)
        beq.append(p.cb)
        row = np.zeros(nv)
        row[sl] = p.h
        row[:d] = p.kw
        row[d + 1] = -1.0
        G.append(row)
        h.append(-p.kb)
        off += r
    res = solve_lp(obj, np.array(G), np.array(h), np.vstack(Aeq), np.concatenate(beq), lo, hi)
    if res.status == INFEASIBLE:
        return -np.inf, None
    if res.status == UNBOUNDED:
        return np.inf, None
    return -res.value, res.z[:d]


def _evaluate(inst, X, w):
    """Dual bound with the ingredients of a cut: (value, supergradient, ray rows)."""
    sa, Y, rayA = _sigma_A_detail(inst.acceptance, w)
    sm, x, rayM = _sigma_market_detail(inst, w)
    cuts = []
    if rayA is not None:
        cuts.append((rayA, 0.0))  # w.R >= 0
    if rayM is not None:
        k, ray = rayM
        p = objective_programs(inst, np.ones(inst.n_outcomes, bool))[k]
        cuts.append((p.Cw.T @ ray, -float(p.cb @ ray)))
    if sa == -np.inf or sm == -np.inf or Y is None or x is None:
        value = -np.inf if (sa == -np.inf or sm == -np.inf) else float(sa + sm - w @ X)
        return value, None, cuts
    grad = Y - inst.v1(x) - X
    return float(sa + sm - w @ X), (grad, float(inst.v0(x))), cuts


def _kelley_dual(inst, X, starts, iters=300, tol=1e-10, lower=None):
    """Cutting-plane maximisation of the concave dual bound over 0 <= w <= cap."""
    d = inst.n_outcomes
    lo = np.zeros(d + 1) if lower is None else np.append(lower, 0.0)
    lo[-1] = -np.inf
    hi = np.append(np.full(d, WEIGHT_CAP), np.inf)
    obj = np.zeros(d + 1)
    obj[-1] = -1.0
    G, h = [], []
    best_w, best_v, ub = None, -np.inf, np.inf
    queue = [np.asarray(s, float) for s in starts]
    w_next = None
    for _ in range(iters):
        w = queue.pop(0) if queue else w_next
        v, sup, cuts = _evaluate(inst, X, w)
        if v > best_v:
            best_w, best_v = w.copy(), v
        if sup is not None:
            grad, cost = sup
            # any feasible pair (Y, x) gives theta <= w'.(Y - V1(x) - X) + V0(x)
            G.append(np.append(grad, -1.0))
            h.append(-cost)
        for a, b in cuts:
            G.append(np.append(a, 0.0))
            h.append(b)
        if queue:
            continue
        Gm = np.vstack(G + [np.append(np.zeros(d), -1.0)])
        hm = np.append(h, -1e15)
        res = solve_lp(obj, Gm, hm, lower=lo, upper=hi)
        if res.status != OPTIMAL:
            break
        ub = min(ub, -res.value)
        w_next = res.z[:d]
        if ub - best_v <= tol * (1 + abs(best_v)):
            break
    return best_v, best_w, ub


def _start_weights(inst):
    d = inst.n_outcomes
    return [inst.space.probs.copy(), np.ones(d)] + list(np.eye(d))


def dual_value(inst: MarketInstance, X, cfg: SearchConfig | None = None, strict_domain=True):
    """Largest dual bound over nonnegative weights, with the best element of D_str."""
    cfg = cfg or SearchConfig()
    X = as_position(inst.space, X)
    cells = _acceptance_cells(inst.acceptance)
    progs = None
    if cells is not None:
        try:
            progs = objective_programs(inst, np.ones(inst.n_outcomes, bool))
        except UnsupportedError:
            progs = None
    if cells is not None and progs is not None:
        ub, w = _master_lp(inst, X, cells, progs)
        route = "master-lp"
        if w is None:
            return DualReport(ub, "unbounded" if ub == np.inf else "infeasible", route, upper_bound=ub,
                              notes=["master program has no optimal solution"])
    else:
        route = "cutting-plane"
        _, w, ub = _kelley_dual(inst, X, _start_weights(inst), tol=cfg.tol)
        if w is None:
            return DualReport(-np.inf, "infeasible", route, upper_bound=ub)
    w = np.where(np.abs(w) < 1e-13, 0.0, w)
    value = dual_bound(inst, X, w)
    gap = ub - value
    status = "optimal" if gap <= 1e-7 * (1 + abs(value)) else "feasible-bound"
    rep = DualReport(value, status, route, psi=w, upper_bound=ub, flags=classify(inst, w))
    if np.any(np.isclose(w, WEIGHT_CAP)):
        rep.notes.append("weights reached the search cap")
    if strict_domain:
        _strict_restriction(inst, X, rep, cells, progs)
    return rep


def _strict_restriction(inst, X, rep, cells, progs):
    """Best dual bound over weights strictly inside the dual cone of a conic set."""
    if rep.flags.get("in_D_str"):
        rep.psi_strict, rep.value_strict = rep.psi, rep.value
        return
    if cells is None or progs is None or not inst.acceptance.is_cone:
        rep.notes.append("strict restriction needs a conic polyhedral instance")
        return
    _, w = _master_lp(inst, X, cells, progs, strict_shift=STRICT_SHIFT)
    if w is None:
        rep.notes.append("no weight strictly inside the dual cone is admissible")
        return
    flags = classify(inst, w)
    if flags["in_D_str"]:
        rep.psi_strict, rep.value_strict = w, dual_bound(inst, X, w)
    else:
        rep.notes.append("shifted optimum failed the strict-domain check")


# -- the quasiconvex dual -------------------------------------------------------------------------

def _halfspace_instance(inst, w, level):
    from dataclasses import replace

    from .acceptance import FixtureUnion

    cell = Cell(w[None, :], None, [level], label="halfspace")
    A = FixtureUnion(inst.space, [cell], is_convex=True, zero_exempt=True, name="halfspace")
    out = replace(inst, acceptance=A, name=f"{inst.name}|psi")
    return out


def _market_pieces_cached(inst):
    return inst.cache("pieces", lambda: market_pieces(inst))


def _inf_v0(inst):
    def make():
        v, _, _ = _sigma_market_detail(inst, np.zeros(inst.n_outcomes))
        return v
    return inst.cache("inf_v0", make)


def rho_given_psi(inst: MarketInstance, X, w, cfg: SearchConfig | None = None):
    """inf V0(x) over admissible x with w.(X + V1(x)) >= sigma_A(w)."""
    cfg = cfg or SearchConfig()
    X = as_position(inst.space, X)
    w = _weights(inst.space, w)
    if np.any(w < -WEIGHT_TOL):
        raise InstanceError("the quasiconvex dual uses nonnegative weights")
    level = sigma_A(inst.acceptance, w)
    if level == -np.inf or not np.any(w):
        return _inf_v0(inst) if level == -np.inf or level <= 0 else np.inf
    cell = Cell(w[None, :], None, [level])
    rows = inst.portfolio.rows()
    if rows is not None:
        try:
            pieces = _market_pieces_cached(inst)
        except UnsupportedError:
            pieces = None
        if pieces is not None:
            PG, Ph = rows
            best = np.inf
            for piece in pieces:
                r = solve_program(_assemble(inst.n_assets, PG, Ph, piece, cell), X, tol=cfg.tol)
                best = min(best, r.value)
            return float(best)
    return float(rho(_halfspace_instance(inst, w, level), X, cfg).value)


def _domain_scale(inst, q):
    """A positive s with s*q in the market domain, or None."""
    try:
        progs = objective_programs(inst, np.ones(inst.n_outcomes, bool))
    except UnsupportedError:
        for s in 2.0 ** np.arange(-10, 11):
            if sigma_market(inst, s * q) > -np.inf:
                return float(s)
        return None
    sizes = [p.G.shape[0] for p in progs]
    nv = 1 + sum(sizes)
    Aeq, beq = [], []
    off = 1
    for p, r in zip(progs, sizes):
        block = np.zeros((p.G.shape[1], nv))
        block[:, off:off + r] = p.G.T
        block[:, 0] = -p.Cw @ q
        Aeq.append(block)
        beq.append(p.cb)
        off += r
    lo = np.zeros(nv)
    hi = np.full(nv, np.inf)
    hi[0] = SCALE_CAP
    Aeq, beq = np.vstack(Aeq), np.concatenate(beq)
    c = np.zeros(nv)
    c[0] = -1.0
    top = solve_lp(c, A_eq=Aeq, b_eq=beq, lower=lo, upper=hi)
    if top.status != OPTIMAL or top.z[0] <= 1e-12:
        return None
    c[0] = 1.0
    low = solve_lp(c, A_eq=Aeq, b_eq=beq, lower=lo, upper=hi)
    s_lo, s_hi = low.z[0], top.z[0]
    if s_lo <= 1.0 <= s_hi:
        return 1.0
    return float(s_hi if s_lo <= 0 else 0.5 * (s_lo + s_hi))


def simplex_lattice(d, m):
    out = []
    for cut in itertools.combinations(range(m + d - 1), d - 1):
        parts = np.diff((-1,) + cut + (m + d - 1,)) - 1
        out.append(parts / m)
    return np.array(out, float)


LATTICE = {1: 1, 2: 64, 3: 24, 4: 12}


def _domain_flags(inst, q):
    s = _domain_scale(inst, q)
    in_B = sigma_A(inst.acceptance, q) > -np.inf
    strict = bool(in_B and _strictly_positive_on(inst.acceptance, q))
    in_D = bool(in_B and s is not None)
    return {"B": bool(in_B), "B_str": strict, "D": in_D, "D_str": strict and in_D}, s


def quasiconvex_dual_value(inst: MarketInstance, X, cfg: SearchConfig | None = None, polish=40):
    """Supremum of rho(X|psi) over psi in B, with the restricted suprema per domain."""
    cfg = cfg or SearchConfig()
    X = as_position(inst.space, X)
    d = inst.n_outcomes
    m = LATTICE.get(d, 6)
    cands = [np.zeros(d)] + list(simplex_lattice(d, m))
    domains = {k: {"value": -np.inf, "psi": None, "flags": None} for k in ("B", "B_str", "D", "D_str")}
    seen = {}

    def visit(q):
        key = tuple(np.round(q, 15))
        if key in seen:
            return seen[key]
        if not np.any(q):
            flags, s = {"B": True, "B_str": False, "D": _inf_v0(inst) > -np.inf, "D_str": False}, 1.0
        else:
            flags, s = _domain_flags(inst, q)
        v = rho_given_psi(inst, X, q, cfg) if flags["B"] else -np.inf
        w = q if s is None else s * q
        for k, ok in flags.items():
            # ties go to the element seen first
            if ok and v > domains[k]["value"]:
                domains[k] = {"value": v, "psi": w, "flags": flags}
        seen[key] = (v, flags)
        return seen[key]

    for q in cands:
        visit(q)
    # coordinate polish: move mass between pairs of outcomes, per domain
    for k in ("B", "B_str", "D", "D_str"):
        if domains[k]["psi"] is None or not np.any(domains[k]["psi"]):
            continue
        q = domains[k]["psi"] / domains[k]["psi"].sum()
        v = domains[k]["value"]
        step = 1.0 / m
        for _ in range(polish):
            moved = False
            for i, j in itertools.permutations(range(d), 2):
                t = min(step, q[j])
                if t <= 0:
                    continue
                r = q.copy()
                r[i] += t
                r[j] -= t
                rv, flags = visit(r)
                if flags[k] and rv > v + 1e-14:
                    q, v, moved = r, rv, True
            if not moved:
                step /= 2
                if step < 1e-12:
                    break
    best = domains["B"]
    flags = {f"in_{k}": bool(ok) for k, ok in (best["flags"] or {}).items()}
    return DualReport(best["value"], "search", "simplex-search", psi=best["psi"], flags=flags,
                      domains={k: {"value": v["value"], "psi": v["psi"]} for k, v in domains.items()},
                      notes=[f"lattice resolution 1/{m}", f"{len(seen)} elements evaluated"])
