"""Thin linear-programming layer on top of scipy's HiGHS interface.

Constraints are always written as G z >= h (plus optional equalities);
variables are free unless bounds are given.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    value: float
    z: np.ndarray | None = None
    ray: np.ndarray | None = None


def _bounds(n, lower, upper):
    lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, float)
    hi = np.full(n, np.inf) if upper is None else np.asarray(upper, float)
    return lo, hi


def _call(c, G, h, A_eq, b_eq, lo, hi):
    bounds = [
        (None if np.isinf(a) else a, None if np.isinf(b) else b) for a, b in zip(lo, hi)
    ]
    kw = {}
    if G is not None and len(G):
        kw["A_ub"] = -G
        kw["b_ub"] = -h
    if A_eq is not None and len(A_eq):
        kw["A_eq"] = A_eq
        kw["b_eq"] = b_eq
    return linprog(c, bounds=bounds, method="highs", **kw)


def solve_lp(c, G=None, h=None, A_eq=None, b_eq=None, lower=None, upper=None,
             want_ray=False) -> LPResult:
    """min c.z subject to G z >= h, A_eq z = b_eq, lower <= z <= upper."""
    c = np.asarray(c, float)
    n = c.size
    lo, hi = _bounds(n, lower, upper)
    if G is not None:
        G = np.asarray(G, float).reshape(-1, n)
        h = np.asarray(h, float).reshape(-1)
    if A_eq is not None:
        A_eq = np.asarray(A_eq, float).reshape(-1, n)
        b_eq = np.asarray(b_eq, float).reshape(-1)
    res = _call(c, G, h, A_eq, b_eq, lo, hi)
    if res.status == 0:
        return LPResult(OPTIMAL, float(res.fun), np.asarray(res.x))
    if res.status == 4:
        # numerical trouble: retry on the interior-point backend
        bounds = [(None if np.isinf(a) else a, None if np.isinf(b) else b)
                  for a, b in zip(lo, hi)]
        kw = {}
        if G is not None and len(G):
            kw.update(A_ub=-G, b_ub=-h)
        if A_eq is not None and len(A_eq):
            kw.update(A_eq=A_eq, b_eq=b_eq)
        res = linprog(c, bounds=bounds, method="highs-ipm", **kw)
        if res.status == 0:
            return LPResult(OPTIMAL, float(res.fun), np.asarray(res.x))
    # HiGHS may not separate infeasible from unbounded; a zero objective does
    feas = _call(np.zeros(n), G, h, A_eq, b_eq, lo, hi)
    if feas.status != 0:
        return LPResult(INFEASIBLE, np.inf)
    out = LPResult(UNBOUNDED, -np.inf, np.asarray(feas.x))
    if want_ray:
        out.ray = recession_ray(c, G, A_eq, lo, hi)
    return out


def recession_ray(c, G=None, A_eq=None, lower=None, upper=None):
    """A direction d of the recession cone with c.d < 0, scaled into [-1, 1]."""
    c = np.asarray(c, float)
    n = c.size
    lo, hi = _bounds(n, lower, upper)
    rlo = np.where(np.isfinite(lo), 0.0, -1.0)
    rhi = np.where(np.isfinite(hi), 0.0, 1.0)
    Gh = None if G is None else np.asarray(G, float).reshape(-1, n)
    res = _call(
        c,
        Gh,
        None if Gh is None else np.zeros(len(Gh)),
        A_eq,
        None if A_eq is None else np.zeros(len(A_eq)),
        rlo,
        rhi,
    )
    if res.status != 0 or res.fun >= -1e-12:
        return None
    return np.asarray(res.x)


@dataclass(frozen=True)
class Cell:
    """Lifted polyhedron {Y : exists aux, E Y + F aux >= rhs}.

    Rows flagged strict hold with '>' instead of '>='. A parametric cell
    has rhs = f + n * step and ranges over integers n_min <= n <= n_max.
    """

    E: np.ndarray
    F: np.ndarray
    f: np.ndarray
    strict: np.ndarray = None
    step: np.ndarray = None
    n_min: int = 0
    n_max: float = np.inf
    label: str = field(default="", compare=False)

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E, float))
        r = E.shape[0]
        F = np.asarray(self.F, float).reshape(r, -1) if self.F is not None else np.zeros((r, 0))
        f = np.asarray(self.f, float).reshape(r)
        strict = (np.zeros(r, bool) if self.strict is None
                  else np.asarray(self.strict, bool).reshape(r))
        step = None if self.step is None else np.asarray(self.step, float).reshape(r)
        if step is not None and not np.any(step):
            step = None
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "strict", strict)
        object.__setattr__(self, "step", step)

    @property
    def dim(self):
        return self.E.shape[1]

    @property
    def n_aux(self):
        return self.F.shape[1]

    @property
    def is_family(self):
        return self.step is not None

    @property
    def has_strict(self):
        return bool(self.strict.any())

    def rhs(self, n=None):
        if self.step is None:
            return self.f
        return self.f + n * self.step

    def closure(self):
        return Cell(self.E, self.F, self.f, None, self.step, self.n_min, self.n_max, self.label)

    def homogenized(self):
        return Cell(self.E, self.F, np.zeros_like(self.f), None, None, 0, np.inf, self.label)

    def contains(self, Y, tol=0.0):
        """Direct membership for cells without auxiliary variables."""
        if self.n_aux:
            raise ValueError("cells with auxiliary variables need an LP")
        Y = np.asarray(Y, float)
        lhs = Y @ self.E.T
        tol = np.asarray(tol, float)[..., None] if np.ndim(tol) else tol
        if self.step is None:
            ok_closed = np.all((lhs >= self.f - tol) | self.strict, axis=-1)
            ok_strict = np.all((lhs > self.f) | ~self.strict, axis=-1)
            return ok_closed & ok_strict
        return self._family_contains(lhs, tol)

    def _family_contains(self, lhs, tol):
        # each row bounds the integer n from one side
        lo = np.full(lhs.shape[:-1], float(self.n_min))
        hi = np.full(lhs.shape[:-1], float(self.n_max))
        ok = np.ones(lhs.shape[:-1], bool)
        slack = lhs - self.f
        for r in range(self.f.size):
            s, b = self.step[r], slack[..., r]
            t = np.broadcast_to(tol, lhs.shape)[..., r] if np.ndim(tol) else tol
            if self.strict[r]:
                if s > 0:
                    hi = np.minimum(hi, np.ceil(b / s) - 1)
                elif s < 0:
                    lo = np.maximum(lo, np.floor(b / s) + 1)
                else:
                    ok &= b > 0
            else:
                if s > 0:
                    hi = np.minimum(hi, np.floor((b + t) / s))
                elif s < 0:
                    lo = np.maximum(lo, np.ceil((b + t) / s))
                else:
                    ok &= b >= -t
        return ok & (np.ceil(lo) <= hi)
