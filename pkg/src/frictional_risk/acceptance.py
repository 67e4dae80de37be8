"""Acceptance sets on a finite scenario space.

Each family knows its defining statistic, a direct membership test, and a
description as a finite union of lifted polyhedral cells (see lp.Cell) that
the optimisation layer consumes. Asymptotic cones come either from the
family's conic structure, a scaling test, or a stored closed form.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import InstanceError, UnsupportedError
from .lp import OPTIMAL, Cell, solve_lp
from .piecewise import PiecewiseLinear
from .scenario import PROB_EPS, ScenarioSpace, as_position, quantile_integral, upper_quantile

SCALING_DOUBLINGS = 40
SCALING_TOL = 1e-9
MAX_CELLS = 5000


class Verdict:
    """Three-valued answer of a semidecision, with an optional witness."""

    def __init__(self, value, witness=None, note=""):
        self.value = value
        self.witness = None if witness is None else np.asarray(witness, float)
        self.note = note

    @property
    def label(self):
        return {True: "true", False: "false", None: "unknown"}[self.value]

    def __repr__(self):
        return f"Verdict({self.label}, witness={self.witness}, note={self.note!r})"


def _scalar(out):
    return np.asarray(out).item() if np.ndim(out) == 0 else out


def _orthant_cell(d, floor=None):
    f = np.zeros(d) if floor is None else np.asarray(floor, float)
    return Cell(np.eye(d), None, f)


def _es_block(probs, alpha, bound):
    """Rows (on Y and aux=(c, s)) for ES_alpha(Y) <= bound."""
    d = probs.size
    E = np.zeros((2 * d + 1, d))
    F = np.zeros((2 * d + 1, d + 1))
    f = np.zeros(2 * d + 1)
    # Y_j + s_j - c >= 0
    E[:d] = np.eye(d)
    F[:d, 0] = -1.0
    F[:d, 1:] = np.eye(d)
    # s_j >= 0
    F[d:2 * d, 1:] = np.eye(d)
    # c - E[s]/alpha >= -bound
    F[2 * d, 0] = 1.0
    F[2 * d, 1:] = -probs / alpha
    f[2 * d] = -bound
    return E, F, f


def _stack_blocks(blocks, d):
    """Combine row blocks that each carry their own auxiliary variables."""
    k_total = sum(F.shape[1] for _, F, _ in blocks)
    Es, Fs, fs = [], [], []
    offset = 0
    for E, F, f in blocks:
        Fb = np.zeros((E.shape[0], k_total))
        Fb[:, offset:offset + F.shape[1]] = F
        offset += F.shape[1]
        Es.append(E)
        Fs.append(Fb)
        fs.append(f)
    return Cell(np.vstack(Es).reshape(-1, d), np.vstack(Fs), np.concatenate(fs))


class AcceptanceSet:
    """Common interface; subclasses fill in the family-specific parts."""

    family = "abstract"
    is_cone = False
    is_convex = False
    is_closed = True
    has_statistic = True

    def __init__(self, space: ScenarioSpace):
        self.space = space

    # -- membership -------------------------------------------------------
    def slack(self, Y):
        """Signed margin of the defining inequality; member iff slack >= 0."""
        raise UnsupportedError(f"{self.family} has no scalar margin")

    def statistic(self, Y):
        raise UnsupportedError(f"{self.family} has no defining statistic")

    def contains(self, Y, tol=1e-9):
        Y = as_position(self.space, Y)
        return _scalar(self.slack(Y) >= -np.asarray(tol))

    def _check_zero(self):
        if not self.contains(np.zeros(self.space.size)):
            raise InstanceError(f"{self.family}: the zero position must be acceptable")

    # -- structure ----------------------------------------------------------
    @property
    def is_star(self):
        return self.is_cone or self.is_convex

    @property
    def closed_under_addition(self):
        return self.is_cone and self.is_convex

    def cells(self):
        raise UnsupportedError(f"{self.family} has no polyhedral description")

    def asymptotic_cells(self):
        if self.is_cone and self.is_closed:
            return self.cells()
        raise UnsupportedError(f"{self.family} has no closed-form asymptotic cone")

    # -- asymptotic cone ----------------------------------------------------
    def asymptotic_contains(self, Y, tol=SCALING_TOL, doublings=SCALING_DOUBLINGS):
        Y = as_position(self.space, Y)
        if self.is_cone and self.is_closed:
            return self.contains(Y, tol)
        if self.is_convex and self.is_closed:
            return self._scaling_test(Y, tol, doublings)
        raise UnsupportedError(
            f"asymptotic cone of a non-convex non-conic {self.family} set is not available"
        )

    def _scaling_test(self, Y, tol, doublings):
        # Z + lam*Y in A for the anchor Z = 0 and lam = 1, 2, ..., 2^K;
        # the margin is compared relative to the size of lam*Y
        lams = 2.0 ** np.arange(doublings + 1)
        stacked = lams.reshape((-1,) + (1,) * Y.ndim) * Y
        scale = 1.0 + np.max(np.abs(stacked), axis=-1)
        ok = self.slack(stacked) >= -tol * scale
        return _scalar(np.all(ok, axis=0))

    def pointed(self):
        """Is the asymptotic cone free of lines?"""
        try:
            cells = self.asymptotic_cells()
        except UnsupportedError:
            return _pointed_by_sampling(self)
        return _pointed_by_lp(cells, self.space.size)

    def to_dict(self):
        return {"family": self.family, "params": self._params()}

    def _params(self):
        return {}

    def __eq__(self, other):
        return type(self) is type(other) and self.space == other.space and \
            self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.family, repr(self.to_dict())))

    def __repr__(self):
        return f"{type(self).__name__}({self._params()})"


class WorstCase(AcceptanceSet):
    family = "WorstCase"
    is_cone = True
    is_convex = True

    def __init__(self, space):
        super().__init__(space)

    def statistic(self, Y):
        return _scalar(np.min(as_position(self.space, Y), axis=-1))

    def slack(self, Y):
        return np.min(Y, axis=-1)

    def cells(self):
        return [_orthant_cell(self.space.size)]

    def pointed(self):
        return Verdict(True, note="closed form")


class Dominance(AcceptanceSet):
    """Positions dominating a fixed floor position."""

    family = "Dominance"
    is_convex = True

    def __init__(self, space, floor):
        super().__init__(space)
        # a positive floor excludes 0; loaders reject that, internal checks need it
        self.floor = as_position(space, np.array(floor, float))
        self.is_cone = bool(np.all(self.floor == 0))

    def _params(self):
        return {"floor": [float(v) for v in self.floor]}

    def statistic(self, Y):
        return _scalar(np.min(as_position(self.space, Y) - self.floor, axis=-1))

    def slack(self, Y):
        return np.min(Y - self.floor, axis=-1)

    def cells(self):
        return [_orthant_cell(self.space.size, self.floor)]

    def asymptotic_cells(self):
        return [_orthant_cell(self.space.size)]


class ExpectedShortfall(AcceptanceSet):
    family = "ES"
    is_cone = True
    is_convex = True

    def __init__(self, space, alpha):
        super().__init__(space)
        if not 0 < alpha < 1:
            raise InstanceError("ES level must lie in (0, 1)")
        self.alpha = float(alpha)

    def _params(self):
        return {"alpha": self.alpha}

    def statistic(self, Y):
        Y = as_position(self.space, Y)
        return _scalar(-quantile_integral(self.space, Y, 0.0, self.alpha) / self.alpha)

    def slack(self, Y):
        return quantile_integral(self.space, Y, 0.0, self.alpha) / self.alpha

    def cells(self):
        return [_stack_blocks([_es_block(self.space.probs, self.alpha, 0.0)], self.space.size)]

    def pointed(self):
        # ES(X) <= 0 and ES(-X) <= 0 force E[X] = 0 = -ES(X), hence X constant = 0
        return Verdict(True, note="closed form")

    def dual_cone_contains(self, w, tol=1e-12):
        w = np.asarray(w, float)
        total = w.sum()
        return bool(np.all(w >= -tol) and np.all(w / self.space.probs <= total / self.alpha + tol))


class Expectile(AcceptanceSet):
    family = "Expectile"
    is_cone = True
    is_convex = True

    def __init__(self, space, alpha):
        super().__init__(space)
        if not 0 < alpha < 0.5:
            raise InstanceError("expectile level must lie in (0, 1/2)")
        self.alpha = float(alpha)

    def _params(self):
        return {"alpha": self.alpha}

    def statistic(self, Y):
        Y = as_position(self.space, Y)
        gain = np.maximum(Y, 0.0) @ self.space.probs
        loss = np.maximum(-Y, 0.0) @ self.space.probs
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(loss > 0, gain / np.where(loss > 0, loss, 1.0), np.inf)
        return _scalar(ratio)

    def slack(self, Y):
        gain = np.maximum(Y, 0.0) @ self.space.probs
        loss = np.maximum(-Y, 0.0) @ self.space.probs
        return self.alpha * gain - (1 - self.alpha) * loss

    def cells(self):
        # (1-a) E[Y] - (1-2a) E[s] >= 0 with s >= Y, s >= 0
        d, p, a = self.space.size, self.space.probs, self.alpha
        E = np.vstack([-np.eye(d), np.zeros((d, d)), (1 - a) * p[None, :]])
        F = np.vstack([np.eye(d), np.eye(d), -(1 - 2 * a) * p[None, :]])
        return [Cell(E, F, np.zeros(2 * d + 1))]

    def pointed(self):
        return Verdict(True, note="closed form")


class ExpectedUtility(AcceptanceSet):
    family = "Utility"

    def __init__(self, space, utility: PiecewiseLinear):
        super().__init__(space)
        if not utility.is_nondecreasing:
            raise InstanceError("utility must be nondecreasing")
        if abs(utility(0.0)) > 1e-12:
            raise InstanceError("utility must vanish at 0")
        self.utility = utility
        self.is_convex = utility.is_concave
        self.is_cone = utility.is_positively_homogeneous()

    def _params(self):
        return {"utility": self.utility.to_dict()}

    def statistic(self, Y):
        return _scalar(self.utility(as_position(self.space, Y)) @ self.space.probs)

    def slack(self, Y):
        return self.utility(Y) @ self.space.probs

    def _concave_cell(self, slopes, intercepts):
        d, p = self.space.size, self.space.probs
        K = slopes.size
        rows = d * K + 1
        E = np.zeros((rows, d))
        F = np.zeros((rows, d))
        f = np.zeros(rows)
        # a_k Y_j + b_k - v_j >= 0
        for j in range(d):
            for k in range(K):
                r = j * K + k
                E[r, j] = slopes[k]
                F[r, j] = -1.0
                f[r] = -intercepts[k]
        F[-1] = p
        return Cell(E, F, f)

    def cells(self):
        if self.utility.is_concave:
            return [self._concave_cell(*self.utility.lines())]
        d, p = self.space.size, self.space.probs
        pieces = self.utility.pieces()
        if len(pieces) ** d > MAX_CELLS:
            raise UnsupportedError("too many utility cells")
        cells = []
        for choice in itertools.product(range(len(pieces)), repeat=d):
            E, f = [], []
            stat = np.zeros(d)
            const = 0.0
            for j, k in enumerate(choice):
                a, b, lo, hi = pieces[k]
                if np.isfinite(lo):
                    E.append(np.eye(d)[j])
                    f.append(lo)
                if np.isfinite(hi):
                    E.append(-np.eye(d)[j])
                    f.append(-hi)
                stat[j] = p[j] * a
                const += p[j] * b
            E.append(stat)
            f.append(-const)
            cells.append(Cell(np.array(E), None, np.array(f), label=str(choice)))
        return cells

    def asymptotic_cells(self):
        if not self.utility.is_concave:
            raise UnsupportedError("asymptotic cone of a non-concave utility set")
        s = np.array([self.utility.left_slope, self.utility.right_slope])
        return [self._concave_cell(s, np.zeros(2))]

    def asymptotic_contains(self, Y, tol=SCALING_TOL, doublings=SCALING_DOUBLINGS):
        if not self.utility.is_concave:
            raise UnsupportedError("asymptotic cone of a non-concave utility set")
        return super().asymptotic_contains(Y, tol, doublings)


class AdjustedES(AcceptanceSet):
    """ES_a(Y) <= g(a) for every level a, with g nonincreasing."""

    family = "AdjustedES"
    is_convex = True

    def __init__(self, space, levels, bounds):
        super().__init__(space)
        a = np.array(levels, float)
        g = np.array([np.inf if b is None else b for b in bounds], float)
        if a.size == 0 or a.size != g.size:
            raise InstanceError("AdjustedES needs matching level and bound lists")
        if np.any((a <= 0) | (a >= 1)) or np.any(np.diff(a) <= 0):
            raise InstanceError("AdjustedES levels must be increasing inside (0, 1)")
        if np.any(np.diff(g) > 0):
            raise InstanceError("AdjustedES bound must be nonincreasing")
        if np.any(g < 0):
            raise InstanceError("AdjustedES bound must be >= 0 so that 0 is acceptable")
        self.levels = a
        self.bounds = g
        finite = g[np.isfinite(g)]
        self.is_cone = bool(np.all(finite == 0))

    def _params(self):
        return {
            "levels": [float(v) for v in self.levels],
            "bounds": [None if np.isinf(v) else float(v) for v in self.bounds],
        }

    def g(self, alpha):
        """Linear interpolation with flat extrapolation; +inf spreads leftwards."""
        alpha = np.asarray(alpha, float)
        a, g = self.levels, self.bounds
        fin = np.where(np.isfinite(g), g, 0.0)
        out = np.interp(alpha, a, fin)
        k = np.searchsorted(a, alpha, side="left")
        exact = (k < a.size) & (a[np.minimum(k, a.size - 1)] == alpha)
        left_inf = np.isinf(g[np.clip(k - 1, 0, a.size - 1)])
        right_inf = np.isinf(g[np.minimum(k, a.size - 1)])
        out = np.where(exact, np.where(right_inf, np.inf, out),
                       np.where(left_inf | right_inf, np.inf, out))
        return _scalar(out)

    @property
    def g_left(self):
        return float(self.bounds[0])

    @property
    def g_right(self):
        return float(self.bounds[-1])

    def _candidates(self):
        p = self.space.probs
        sums = set()
        if p.size <= 16:
            for mask in range(1, 2 ** p.size - 1):
                sums.add(round(float(p[[j for j in range(p.size) if mask >> j & 1]].sum()), 15))
        else:
            raise UnsupportedError("AdjustedES cells need at most 16 outcomes")
        sums.update(float(a) for a in self.levels)
        return sorted(s for s in sums if 0 < s < 1)

    def statistic(self, Y):
        Y = as_position(self.space, Y)
        order = np.argsort(Y, axis=-1, kind="stable")
        vals = np.take_along_axis(Y, order, axis=-1)
        probs = np.take_along_axis(np.broadcast_to(self.space.probs, Y.shape), order, axis=-1)
        cum = np.cumsum(probs, axis=-1)
        partial = np.cumsum(probs * vals, axis=-1)
        terms = []
        # breakpoints of this position's quantile function
        brk = cum[..., :-1]
        es = -partial[..., :-1] / brk
        terms.append(es - self.g(brk))
        for a in self.levels:
            es_a = -quantile_integral(self.space, Y, 0.0, a) / a
            terms.append((es_a - self.g(a))[..., None])
        terms.append((-vals[..., :1]) - self.g_left)
        terms.append((-partial[..., -1:]) - self.g_right)
        allv = np.concatenate(terms, axis=-1)
        return _scalar(np.max(allv, axis=-1))

    def slack(self, Y):
        return -np.asarray(self.statistic(Y))

    def cells(self):
        d, p = self.space.size, self.space.probs
        blocks = []
        for a in self._candidates():
            ga = float(self.g(a))
            if np.isfinite(ga):
                blocks.append(_es_block(p, a, ga))
        if np.isfinite(self.g_left):
            blocks.append((np.eye(d), np.zeros((d, 0)), np.full(d, -self.g_left)))
        if np.isfinite(self.g_right):
            blocks.append((p[None, :], np.zeros((1, 0)), np.array([-self.g_right])))
        if not blocks:
            blocks.append((np.zeros((1, d)), np.zeros((1, 0)), np.zeros(1)))
        return [_stack_blocks(blocks, d)]

    def asymptotic_cells(self):
        d = self.space.size
        if np.isfinite(self.g_left):
            return [_orthant_cell(d)]
        finite = np.flatnonzero(np.isfinite(self.bounds))
        if finite.size == 0:
            return [Cell(np.zeros((1, d)), None, np.zeros(1))]
        # g is +inf left of the first finite knot; ES_a is nonincreasing in a,
        # so only the constraint at that knot survives the scaling limit
        a_star = float(self.levels[finite[0]])
        return [_stack_blocks([_es_block(self.space.probs, a_star, 0.0)], d)]


class ValueAtRisk(AcceptanceSet):
    family = "VaR"
    is_cone = True

    def __init__(self, space, alpha):
        super().__init__(space)
        if not 0 < alpha < 1:
            raise InstanceError("VaR level must lie in (0, 1)")
        self.alpha = float(alpha)
        self.is_convex = bool(np.min(space.probs) > alpha + PROB_EPS)

    def _params(self):
        return {"alpha": self.alpha}

    def statistic(self, Y):
        return upper_quantile(self.space, Y, self.alpha)

    def slack(self, Y):
        return np.asarray(upper_quantile(self.space, Y, self.alpha))

    def _loss_sets(self):
        p = self.space.probs
        d = p.size
        allowed = [m for m in range(2 ** d)
                   if p[[j for j in range(d) if m >> j & 1]].sum() <= self.alpha + PROB_EPS]
        return [m for m in allowed if not any(o != m and (o & m) == m for o in allowed)]

    def cells(self):
        d = self.space.size
        if d > 14:
            raise UnsupportedError("VaR cells need at most 14 outcomes")
        out = []
        for mask in self._loss_sets():
            keep = [j for j in range(d) if not mask >> j & 1]
            E = np.eye(d)[keep] if keep else np.zeros((1, d))
            out.append(Cell(E, None, np.zeros(E.shape[0]), label=f"loss={mask:b}"))
        return out

    def pointed(self):
        p = self.space.probs
        j = int(np.argmin(p))
        if p[j] <= self.alpha + PROB_EPS:
            return Verdict(False, np.eye(p.size)[j], note="closed form")
        return Verdict(True, note="closed form")


class RangeVaR(AcceptanceSet):
    family = "RVaR"
    is_cone = True

    def __init__(self, space, alpha, beta):
        super().__init__(space)
        if not 0 < alpha < beta < 1:
            raise InstanceError("RVaR levels must satisfy 0 < alpha < beta < 1")
        self.alpha = float(alpha)
        self.beta = float(beta)

    def _params(self):
        return {"alpha": self.alpha, "beta": self.beta}

    def statistic(self, Y):
        Y = as_position(self.space, Y)
        return _scalar(-quantile_integral(self.space, Y, self.alpha, self.beta)
                       / (self.beta - self.alpha))

    def slack(self, Y):
        return quantile_integral(self.space, Y, self.alpha, self.beta) / (self.beta - self.alpha)

    def cells(self):
        d, p = self.space.size, self.space.probs
        if math.factorial(d) > MAX_CELLS:
            raise UnsupportedError("RVaR cells need at most 7 outcomes")
        out = []
        for perm in itertools.permutations(range(d)):
            perm = list(perm)
            upper = np.cumsum(p[perm])
            lower = upper - p[perm]
            w = np.clip(np.minimum(upper, self.beta) - np.maximum(lower, self.alpha), 0, None)
            rows, rhs = [], []
            for k in range(d - 1):
                r = np.zeros(d)
                r[perm[k + 1]], r[perm[k]] = 1.0, -1.0
                rows.append(r)
                rhs.append(0.0)
            stat = np.zeros(d)
            stat[perm] = w
            rows.append(stat)
            rhs.append(0.0)
            out.append(Cell(np.array(rows), None, np.array(rhs), label=str(perm)))
        return out


class FixtureUnion(AcceptanceSet):
    """Finite union of polyhedral cells, possibly with integer-indexed families."""

    family = "FixtureUnion"
    has_statistic = False

    def __init__(self, space, cells, asymptotic=None, is_cone=False, is_convex=False,
                 zero_exempt=False, name=""):
        super().__init__(space)
        self._cells = list(cells)
        if not self._cells:
            raise InstanceError("FixtureUnion needs at least one cell")
        for c in self._cells:
            if c.dim != space.size:
                raise InstanceError("FixtureUnion cell dimension mismatch")
            if c.n_aux:
                raise InstanceError("FixtureUnion cells may not carry auxiliary variables")
        self._asymptotic = None if asymptotic is None else list(asymptotic)
        self.is_cone = bool(is_cone)
        self.is_convex = bool(is_convex)
        self.is_closed = not any(c.has_strict for c in self._cells)
        self.zero_exempt = bool(zero_exempt)
        self.name = name

    def _params(self):
        return {
            "cells": [cell_to_dict(c) for c in self._cells],
            "asymptotic": None if self._asymptotic is None
            else [cell_to_dict(c) for c in self._asymptotic],
            "is_cone": self.is_cone,
            "is_convex": self.is_convex,
            "zero_exempt": self.zero_exempt,
        }

    def contains(self, Y, tol=1e-9):
        Y = as_position(self.space, Y)
        out = np.zeros(Y.shape[:-1], bool)
        for c in self._cells:
            out |= c.contains(Y, tol)
        return _scalar(out)

    def slack(self, Y):
        # only the sign is meaningful for unions
        return np.where(self.contains(Y, 0.0), 0.0, -np.inf)

    def cells(self):
        return list(self._cells)

    def asymptotic_cells(self):
        if self._asymptotic is None:
            raise UnsupportedError("fixture has no stored asymptotic cone")
        return list(self._asymptotic)

    def asymptotic_contains(self, Y, tol=SCALING_TOL, doublings=SCALING_DOUBLINGS):
        Y = as_position(self.space, Y)
        out = np.zeros(Y.shape[:-1], bool)
        for c in self.asymptotic_cells():
            out |= c.contains(Y, tol)
        return _scalar(out)


# -- helpers shared with the optimisation layer ------------------------------

def cell_contains(cell: Cell, Y, tol=1e-9, margin=1e-9):
    """Membership of a single position in a lifted cell via an LP."""
    Y = np.asarray(Y, float)
    if not cell.n_aux:
        return bool(cell.contains(Y, tol))
    if cell.is_family:
        raise UnsupportedError("parametric cells with auxiliaries")
    base = cell.f - cell.E @ Y
    res = solve_lp(np.zeros(cell.n_aux), cell.F, base - tol * ~cell.strict
                   - margin * cell.strict)
    return res.status == OPTIMAL


def cells_contain(A: AcceptanceSet, Y, tol=1e-9):
    return any(cell_contains(c, Y, tol) for c in A.cells())


def _pointed_by_lp(cells, d):
    """Search a nonzero Y with Y in one closed cone cell and -Y in another."""
    homog = [c.homogenized() for c in cells]
    for a, b in itertools.product(range(len(homog)), repeat=2):
        ca, cb = homog[a], homog[b]
        ka, kb = ca.n_aux, cb.n_aux
        n = d + ka + kb
        G = np.zeros((ca.E.shape[0] + cb.E.shape[0], n))
        G[:ca.E.shape[0], :d] = ca.E
        G[:ca.E.shape[0], d:d + ka] = ca.F
        G[ca.E.shape[0]:, :d] = -cb.E
        G[ca.E.shape[0]:, d + ka:] = cb.F
        h = np.zeros(G.shape[0])
        lower = np.concatenate([-np.ones(d), np.full(ka + kb, -np.inf)])
        upper = np.concatenate([np.ones(d), np.full(ka + kb, np.inf)])
        for j in range(d):
            for sign in (1.0, -1.0):
                c = np.zeros(n)
                c[j] = -sign
                res = solve_lp(c, G, h, lower=lower, upper=upper)
                if res.status == OPTIMAL and -res.value > 1e-9:
                    Y = res.z[:d]
                    Y = Y / np.max(np.abs(Y))
                    first = Y[np.flatnonzero(np.abs(Y) > 1e-12)[0]]
                    Y = np.where(np.abs(Y) < 1e-12, 0.0, Y * np.sign(first))
                    return Verdict(False, Y, note="cell LP")
    return Verdict(True, note="cell LP")


def sphere_directions(d, count=10_000, seed=0x5EED, per_segment=180):
    """Deterministic unit-l1 directions: a diamond grid in 2-d, random otherwise."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        s = np.arange(per_segment) / per_segment
        segs = [
            np.stack([1 - s, -s], 1),
            np.stack([-s, -(1 - s)], 1),
            np.stack([-(1 - s), s], 1),
            np.stack([s, 1 - s], 1),
        ]
        return np.vstack(segs)
    rng = np.random.default_rng(seed)
    dirs = [np.eye(d), -np.eye(d)]
    for i, j in itertools.combinations(range(d), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            v = np.zeros(d)
            v[i], v[j] = si, sj
            dirs.append(v[None, :])
    dirs.append(rng.standard_normal((count, d)))
    out = np.vstack(dirs)
    return out / np.sum(np.abs(out), axis=1, keepdims=True)


def _pointed_by_sampling(A):
    dirs = sphere_directions(A.space.size)
    try:
        both = np.asarray(A.asymptotic_contains(dirs)) & np.asarray(A.asymptotic_contains(-dirs))
    except UnsupportedError:
        return Verdict(None, note="asymptotic cone unavailable")
    if np.any(both):
        return Verdict(False, dirs[np.argmax(both)], note="sphere grid")
    return Verdict(None, note="no line found on sphere grid")


# -- serialisation -------------------------------------------------------------

def cell_to_dict(c: Cell):
    rows = []
    for r in range(c.f.size):
        row = {"coef": [float(v) for v in c.E[r]], "rhs": float(c.f[r])}
        if c.strict[r]:
            row["strict"] = True
        if c.step is not None and c.step[r] != 0:
            row["step"] = float(c.step[r])
        rows.append(row)
    out = {"rows": rows}
    if c.step is not None:
        out["n_min"] = int(c.n_min)
        out["n_max"] = None if np.isinf(c.n_max) else int(c.n_max)
    return out


def cell_from_dict(d, dim):
    rows = d["rows"]
    E = np.array([r["coef"] for r in rows], float).reshape(len(rows), dim)
    f = np.array([r["rhs"] for r in rows], float)
    strict = np.array([r.get("strict", False) for r in rows], bool)
    step = np.array([r.get("step", 0.0) for r in rows], float)
    n_max = d.get("n_max")
    return Cell(E, None, f, strict, step if np.any(step) else None,
                int(d.get("n_min", 0)), np.inf if n_max is None else float(n_max))


def acceptance_from_dict(space, d):
    fam = d["family"]
    p = d.get("params", {})
    if fam == "WorstCase":
        A = WorstCase(space)
    elif fam == "Dominance":
        A = Dominance(space, p["floor"])
    elif fam == "ES":
        A = ExpectedShortfall(space, p["alpha"])
    elif fam == "Expectile":
        A = Expectile(space, p["alpha"])
    elif fam == "Utility":
        A = ExpectedUtility(space, PiecewiseLinear.from_dict(p["utility"]))
    elif fam == "AdjustedES":
        A = AdjustedES(space, p["levels"], p["bounds"])
    elif fam == "VaR":
        A = ValueAtRisk(space, p["alpha"])
    elif fam == "RVaR":
        A = RangeVaR(space, p["alpha"], p["beta"])
    elif fam == "FixtureUnion":
        d_ = space.size
        cells = [cell_from_dict(c, d_) for c in p["cells"]]
        asym = p.get("asymptotic")
        asym = None if asym is None else [cell_from_dict(c, d_) for c in asym]
        A = FixtureUnion(space, cells, asym, p.get("is_cone", False),
                         p.get("is_convex", False), p.get("zero_exempt", False))
    else:
        raise InstanceError(f"unknown acceptance family {fam!r}", ("acceptance", "family"))
    if not getattr(A, "zero_exempt", False):
        A._check_zero()
    return A
