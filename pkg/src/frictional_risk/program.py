"""Compilation of a market instance into families of linear programs.

A market alternative fixes one affine piece for every term that the LP
cannot absorb directly (concave parts of V0, convex parts of V1). Convex
parts of V0 become epigraph variables and concave parts of V1 become
hypograph variables. Crossing every alternative with every acceptance cell
gives programs whose minima, taken together, equal the risk measure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedError
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, Cell, solve_lp

MAX_ALTERNATIVES = 4096
STRICT_MARGIN = 1e-7


def _curve_parts(term):
    """Split curve(a.x) into an affine base, convex lines and concave lines."""
    a, curve = term.coef, term.curve
    k = curve.knots
    jumps = np.diff(curve.slopes)
    base_c = curve.left_slope * a
    base_e = float(curve(k[0])) - curve.left_slope * k[0]

    def lines(mask):
        C, e = [np.zeros_like(a)], [0.0]
        cum_s, cum_b = 0.0, 0.0
        for t, dj in zip(k[mask], jumps[mask]):
            cum_s += dj
            cum_b -= dj * t
            C.append(cum_s * a)
            e.append(cum_b)
        return np.array(C), np.array(e)

    convex = lines(jumps > 0)
    concave = lines(jumps < 0)
    return (base_c, base_e), convex, concave


def _split(terms, n):
    """Affine part plus lists of convex and concave line groups."""
    c, e = np.zeros(n), 0.0
    convex, concave = [], []
    for t in terms:
        if t.kind == "affine":
            c = c + t.coef
            e += t.const
        elif t.kind == "max":
            convex.append((t.C, t.e))
        elif t.kind == "min":
            concave.append((t.C, t.e))
        elif t.kind == "curve":
            (bc, be), vex, cave = _curve_parts(t)
            c = c + bc
            e += be
            if len(vex[1]) > 1:
                convex.append(vex)
            if len(cave[1]) > 1:
                concave.append(cave)
        else:
            raise UnsupportedError("opaque pricing terms have no LP lift")
    return c, e, convex, concave


@dataclass
class MarketPiece:
    """One alternative: V0 <= c0.x + const0 + sum(t), V1_j >= A1_j.x + b1_j + sum(v in j)."""

    c0: np.ndarray
    const0: float
    epi: list
    A1: np.ndarray
    b1: np.ndarray
    hyp: list  # (outcome, C, e)
    label: str


def market_pieces(inst):
    n, d = inst.n_assets, inst.n_outcomes
    c0, e0, epi, choose0 = _split(inst.v0.terms, n)
    A1, b1 = np.zeros((d, n)), np.zeros(d)
    hyp, choose1 = [], []
    for j, rule in enumerate(inst.v1.outcomes):
        c, e, vex, cave = _split(rule.terms, n)
        A1[j], b1[j] = c, e
        hyp.extend((j, C, ee) for C, ee in cave)
        choose1.extend((j, C, ee) for C, ee in vex)
    sizes = [len(g[1]) for g in choose0] + [len(g[2]) for g in choose1]
    if int(np.prod(sizes, dtype=float)) > MAX_ALTERNATIVES:
        raise UnsupportedError("too many piece combinations for the exact path")
    out = []
    for pick in itertools.product(*[range(s) for s in sizes]):
        c, e = c0.copy(), e0
        A, b = A1.copy(), b1.copy()
        for (C, ee), r in zip(choose0, pick[:len(choose0)]):
            c += C[r]
            e += ee[r]
        for (j, C, ee), r in zip(choose1, pick[len(choose0):]):
            A[j] += C[r]
            b[j] += ee[r]
        out.append(MarketPiece(c, e, epi, A, b, hyp, "/".join(map(str, pick))))
    return out


@dataclass
class CellProgram:
    """min c.z + const over G z >= h_base + HX @ X (+ step * n), z = [x | t | v | aux]."""

    n: int
    c: np.ndarray
    const: float
    G: np.ndarray
    h_base: np.ndarray
    HX: np.ndarray
    strict: np.ndarray
    step: np.ndarray | None
    n_min: float
    n_max: float
    label: str

    @property
    def nvar(self):
        return self.c.size

    def system(self, X, n=None, budget=None, continuous_n=False):
        G, h = self.G, self.h_base + self.HX @ X
        c, strict = self.c, self.strict
        lower = upper = None
        if self.step is not None:
            if continuous_n:
                G = np.hstack([G, -self.step[:, None]])
                c = np.append(c, 0.0)
                lower = np.full(c.size, -np.inf)
                upper = np.full(c.size, np.inf)
                lower[-1], upper[-1] = self.n_min, self.n_max
            else:
                h = h + n * self.step
        if budget is not None:
            G = np.vstack([G, -c[None, :]])
            h = np.append(h, self.const - budget)
            strict = np.append(strict, False)
        return c, G, h, strict, lower, upper


def compile_programs(inst):
    """All (alternative, cell) programs; cached on the instance."""
    def make():
        rows = inst.portfolio.rows()
        if rows is None:
            raise UnsupportedError("portfolio set is not polyhedral")
        PG, Ph = rows
        cells = inst.acceptance.cells()
        return [_assemble(inst.n_assets, PG, Ph, p, cell) for p in market_pieces(inst) for cell in cells]
    return inst.cache("programs", make)


def _assemble(N, PG, Ph, piece: MarketPiece, cell: Cell):
    d = piece.A1.shape[0]
    K0 = len(piece.epi)
    K1 = len(piece.hyp)
    m = cell.n_aux
    nv = N + K0 + K1 + m
    blocks, rhs = [], []

    def row(x=None, t=None, v=None, aux=None, k=1):
        r = np.zeros((k, nv))
        if x is not None:
            r[:, :N] = x
        if t is not None:
            r[:, N:N + K0] = t
        if v is not None:
            r[:, N + K0:N + K0 + K1] = v
        if aux is not None:
            r[:, N + K0 + K1:] = aux
        return r

    blocks.append(row(x=PG, k=PG.shape[0]))
    rhs.append(Ph)
    for k, (C, e) in enumerate(piece.epi):
        t = np.zeros((len(e), K0))
        t[:, k] = 1.0
        blocks.append(row(x=-C, t=t, k=len(e)))
        rhs.append(e)
    for g, (_, C, e) in enumerate(piece.hyp):
        v = np.zeros((len(e), K1))
        v[:, g] = -1.0
        blocks.append(row(x=C, v=v, k=len(e)))
        rhs.append(-e)
    n_fixed = sum(len(r) for r in rhs)
    S = np.zeros((d, K1))
    for g, (j, _, _) in enumerate(piece.hyp):
        S[j, g] = 1.0
    E = cell.E
    r = E.shape[0]
    blocks.append(row(x=E @ piece.A1, v=E @ S, aux=cell.F, k=r))
    rhs.append(cell.f - E @ piece.b1)
    G = np.vstack(blocks)
    h_base = np.concatenate(rhs)
    HX = np.vstack([np.zeros((n_fixed, d)), -E])
    strict = np.concatenate([np.zeros(n_fixed, bool), cell.strict])
    step = None
    if cell.step is not None:
        step = np.concatenate([np.zeros(n_fixed), cell.step])
    c = np.concatenate([piece.c0, np.ones(K0), np.zeros(K1 + m)])
    return CellProgram(N, c, piece.const0, G, h_base, HX, strict, step, float(cell.n_min),
                       float(cell.n_max), f"{piece.label}|{cell.label}")


# -- solving one program --------------------------------------------------------

@dataclass
class CellResult:
    status: str
    value: float
    z: np.ndarray | None = None
    attained: bool = False
    ray: np.ndarray | None = None
    n: float | None = None


def max_slack(c, G, h, strict, lower=None, upper=None):
    """Largest common slack s <= 1 on the strict rows; -inf if infeasible."""
    nv = c.size
    Gs = np.hstack([G, -strict[:, None].astype(float)])
    lo = np.full(nv + 1, -np.inf) if lower is None else np.append(lower, -np.inf)
    hi = np.full(nv + 1, np.inf) if upper is None else np.append(upper, 1.0)
    hi[-1] = 1.0
    obj = np.zeros(nv + 1)
    obj[-1] = -1.0
    res = solve_lp(obj, Gs, h, lower=lo, upper=hi)
    if res.status != OPTIMAL:
        return -np.inf, None
    return -res.value, res.z[:nv]


def _solve_fixed(prog, X, n, budget, tol):
    c, G, h, strict, lo, hi = prog.system(X, n, budget)
    if budget is not None or strict.any():
        if strict.any():
            s, _ = max_slack(c, G, h, strict)
            if s <= STRICT_MARGIN:
                return CellResult(INFEASIBLE, np.inf, n=n)
    res = solve_lp(c, G, h, want_ray=True)
    if res.status == INFEASIBLE:
        return CellResult(INFEASIBLE, np.inf, n=n)
    if res.status == UNBOUNDED:
        return CellResult(UNBOUNDED, -np.inf, res.z, False, res.ray, n)
    value = res.value + prog.const
    if not strict.any():
        return CellResult(OPTIMAL, value, res.z, True, n=n)
    G2 = np.vstack([G, -c[None, :]])
    h2 = np.append(h, -(res.value + tol * (1 + abs(res.value))))
    s, z = max_slack(c, G2, h2, np.append(strict, False))
    if s > STRICT_MARGIN:
        return CellResult(OPTIMAL, value, z, True, n=n)
    return CellResult(OPTIMAL, value, None, False, n=n)


def solve_program(prog: CellProgram, X, budget=None, tol=1e-9) -> CellResult:
    """Minimum over one program, integer family index included."""
    X = np.asarray(X, float)
    if prog.step is None:
        return _solve_fixed(prog, X, None, budget, tol)
    c, G, h, _, lo, hi = prog.system(X, budget=budget, continuous_n=True)
    res = solve_lp(c, G, h, lower=lo, upper=hi)
    if res.status == INFEASIBLE:
        return CellResult(INFEASIBLE, np.inf)
    if res.status == OPTIMAL:
        n_star = res.z[-1]
        cands = sorted({float(np.floor(n_star + 1e-9)), float(np.ceil(n_star - 1e-9))})
    else:
        cands = _integer_in_range(c, G, h, lo, hi)
    best = CellResult(INFEASIBLE, np.inf)
    for n in cands:
        if n < prog.n_min or n > prog.n_max:
            continue
        r = _solve_fixed(prog, X, n, budget, tol)
        if r.value < best.value or (r.value == best.value and best.status == INFEASIBLE):
            best = r
    return best


def _integer_in_range(c, G, h, lo, hi):
    """Integer candidates for the family index when the relaxation is unbounded."""
    e = np.zeros(c.size)
    e[-1] = 1.0
    out = []
    low = solve_lp(e, G, h, lower=lo, upper=hi)
    if low.status == OPTIMAL:
        out.append(float(np.ceil(low.value - 1e-9)))
    high = solve_lp(-e, G, h, lower=lo, upper=hi)
    if high.status == OPTIMAL:
        out.append(float(np.floor(-high.value + 1e-9)))
    elif low.status == OPTIMAL:
        # unbounded above: probe by doubling past the lower end
        base = out[0]
        out.extend(base + 2.0 ** k for k in range(0, 12))
    return out


def lexicographic_minimizer(prog, X, n, value, box, tol=1e-9):
    """Smallest portfolio (lexicographically) on the optimal face, clamped to the box."""
    c, G, h, strict, _, _ = prog.system(X, n)
    if strict.any():
        return None
    slack = tol * (1 + abs(value))
    G = np.vstack([G, -c[None, :]])
    h = np.append(h, -(value - prog.const + slack))
    lo = np.full(c.size, -np.inf)
    hi = np.full(c.size, np.inf)
    lo[:prog.n], hi[:prog.n] = box[:, 0], box[:, 1]
    z = None
    for i in range(prog.n):
        e = np.zeros(c.size)
        e[i] = 1.0
        res = solve_lp(e, G, h, lower=lo, upper=hi)
        if res.status != OPTIMAL:
            return z
        z = res.z
        G = np.vstack([G, -e[None, :]])
        h = np.append(h, -(res.value + slack))
    return z
