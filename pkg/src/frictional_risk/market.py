"""Portfolio constraints, pricing rules and the market instance bundle.

Every pricing rule is a sum of terms over the portfolio vector x:
affine forms, maxima or minima of affine forms, and one-dimensional
piecewise-linear curves applied to a linear form. That keeps evaluation
exact and lets the optimisation layer lift each rule into linear programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .acceptance import AcceptanceSet
from .errors import InstanceError
from .kabanov import MAX_ENUM_ASSETS, dual_inequalities, kabanov_vertices, validate_bid_ask
from .lp import OPTIMAL, solve_lp
from .piecewise import PiecewiseLinear
from .scenario import ScenarioSpace

MEMBERSHIP_TOL = 1e-9


def _out(v):
    return v.item() if np.ndim(v) == 0 else v


def _vec(x, n):
    x = np.asarray(x, float)
    if x.ndim == 0 and n == 1:
        x = x[None]
    if x.shape[-1:] != (n,):
        raise InstanceError(f"portfolio must have {n} entries, got shape {x.shape}")
    return x


# -- terms -------------------------------------------------------------------

class AffineTerm:
    kind = "affine"

    def __init__(self, coef, const=0.0):
        self.coef = np.asarray(coef, float)
        self.const = float(const)

    def __call__(self, x):
        return x @ self.coef + self.const

    def asymptotic(self, x):
        return x @ self.coef

    convex = concave = True

    @property
    def pos_hom(self):
        return self.const == 0.0

    @property
    def star(self):
        return self.const <= 0.0

    @property
    def antistar(self):
        return self.const >= 0.0

    @property
    def lipschitz(self):
        return float(np.abs(self.coef).sum())

    def to_dict(self):
        return {"op": "linear", "coef": self.coef.tolist(), "const": self.const}


class _EnvelopeTerm:
    """max (or min) over rows of C x + e."""

    def __init__(self, C, e=None):
        self.C = np.atleast_2d(np.asarray(C, float))
        self.e = np.zeros(self.C.shape[0]) if e is None else np.asarray(e, float)

    @property
    def pos_hom(self):
        return bool(np.all(self.e == 0))

    @property
    def lipschitz(self):
        return float(np.max(np.abs(self.C).sum(axis=1)))

    def _pieces(self, x):
        return x @ self.C.T + self.e


class MaxTerm(_EnvelopeTerm):
    kind = "max"
    convex, concave = True, False

    def __call__(self, x):
        return np.max(self._pieces(x), axis=-1)

    def asymptotic(self, x):
        return np.max(x @ self.C.T, axis=-1)

    @property
    def star(self):
        return float(np.max(self.e)) <= 0.0

    antistar = False

    def to_dict(self):
        return {"op": "max", "args": [AffineTerm(c, e).to_dict() for c, e in zip(self.C, self.e)]}


class MinTerm(_EnvelopeTerm):
    kind = "min"
    convex, concave = False, True

    def __call__(self, x):
        return np.min(self._pieces(x), axis=-1)

    def asymptotic(self, x):
        return np.min(x @ self.C.T, axis=-1)

    star = False

    @property
    def antistar(self):
        return float(np.min(self.e)) >= 0.0

    def to_dict(self):
        return {"op": "min", "args": [AffineTerm(c, e).to_dict() for c, e in zip(self.C, self.e)]}


def _curve_star(curve, sign):
    """sign=+1: curve(l t) <= l curve(t) for l in [0, 1]; sign=-1: the reverse.

    Equivalent to |t| -> curve(t)/|t| being monotone on each half line; the
    ratio is monotone on every affine piece, so knots and tails suffice.
    """
    if abs(curve(0.0)) > 1e-12:
        return False
    k = curve.knots
    right0 = curve.slopes[np.searchsorted(k, 0.0, side="right")]
    left0 = curve.slopes[np.searchsorted(k, 0.0, side="left")]
    pos = k[k > 0]
    neg = k[k < 0][::-1]
    sides = (
        np.concatenate([[right0], curve(pos) / pos, [curve.right_slope]]),
        np.concatenate([[-left0], curve(neg) / -neg, [-curve.left_slope]]),
    )
    return all(bool(np.all(sign * np.diff(r) >= -1e-12)) for r in sides)


class CurveTerm:
    """curve(a . x) for a one-dimensional piecewise-linear curve."""

    kind = "curve"

    def __init__(self, coef, curve: PiecewiseLinear):
        self.coef = np.asarray(coef, float)
        self.curve = curve

    def __call__(self, x):
        return self.curve(x @ self.coef)

    def asymptotic(self, x):
        return self.curve.asymptotic(x @ self.coef)

    @property
    def convex(self):
        return self.curve.is_convex

    @property
    def concave(self):
        return self.curve.is_concave

    @property
    def pos_hom(self):
        return self.curve.is_positively_homogeneous()

    @property
    def star(self):
        return _curve_star(self.curve, +1)

    @property
    def antistar(self):
        return _curve_star(self.curve, -1)

    @property
    def lipschitz(self):
        return self.curve.lipschitz * float(np.abs(self.coef).sum())

    def to_dict(self):
        return {"op": "curve", "coef": self.coef.tolist(), "curve": self.curve.to_dict()}


class PolytopeTerm:
    """max (or min) of x . z over a polytope {H z >= g}, evaluated by LP."""

    kind = "polytope"

    def __init__(self, H, g, sense):
        self.H = np.asarray(H, float)
        self.g = np.asarray(g, float)
        self.sense = sense
        self.convex = sense == "max"
        self.concave = sense == "min"
        self.star = self.convex
        self.antistar = self.concave

    pos_hom = True

    def _one(self, x):
        # z = (1, z') with z' in {H z' >= g}
        sgn = -1.0 if self.sense == "max" else 1.0
        res = solve_lp(sgn * x[1:], self.H, self.g)
        if res.status != OPTIMAL:
            raise InstanceError("empty or unbounded price polytope")
        return x[0] + sgn * res.value

    def __call__(self, x):
        x = np.asarray(x, float)
        flat = x.reshape(-1, x.shape[-1])
        return np.array([self._one(r) for r in flat]).reshape(x.shape[:-1])

    asymptotic = __call__

    @property
    def lipschitz(self):
        return float("inf")

    def to_dict(self):
        raise InstanceError("polytope terms are serialised through their bid-ask matrix")


def term_from_dict(d, n, path=()):
    op = d.get("op")
    if op == "linear":
        coef = np.asarray(d["coef"], float)
        if coef.size != n:
            raise InstanceError(f"linear form needs {n} coefficients", path)
        return [AffineTerm(coef, d.get("const", 0.0))]
    if op in ("max", "min"):
        args = d["args"]
        for k, a in enumerate(args):
            if a.get("op") != "linear":
                raise InstanceError("max/min arguments must be linear forms", path + ("args", k))
        C = np.array([a["coef"] for a in args], float)
        if C.shape[1] != n:
            raise InstanceError(f"linear form needs {n} coefficients", path)
        e = np.array([a.get("const", 0.0) for a in args], float)
        return [MaxTerm(C, e) if op == "max" else MinTerm(C, e)]
    if op == "curve":
        coef = np.asarray(d["coef"], float)
        if coef.size != n:
            raise InstanceError(f"curve argument needs {n} coefficients", path)
        return [CurveTerm(coef, PiecewiseLinear.from_dict(d["curve"]))]
    if op == "sum":
        out = []
        for k, a in enumerate(d["args"]):
            out.extend(term_from_dict(a, n, path + ("args", k)))
        return out
    raise InstanceError(f"unknown expression operator {op!r}", path)


def _terms_to_expr(terms):
    if len(terms) == 1:
        return terms[0].to_dict()
    return {"op": "sum", "args": [t.to_dict() for t in terms]}


class ScalarRule:
    """Sum of terms; exact evaluation, asymptotic function and shape flags."""

    def __init__(self, terms, n):
        self.terms = list(terms)
        self.n = n

    def __call__(self, x):
        x = _vec(x, self.n)
        out = np.zeros(x.shape[:-1])
        for t in self.terms:
            out = out + t(x)
        return _out(out)

    def asymptotic(self, x):
        x = _vec(x, self.n)
        out = np.zeros(x.shape[:-1])
        for t in self.terms:
            out = out + t.asymptotic(x)
        return _out(out)

    def asymptotic_by_doubling(self, x, doublings=40):
        """Numeric estimate f(2^k x) / 2^k used to cross-check the closed form."""
        lam = 2.0 ** doublings
        return _out(np.asarray(self(lam * _vec(x, self.n))) / lam)

    def _all(self, attr):
        return all(getattr(t, attr) for t in self.terms)

    @property
    def convex(self):
        return self._all("convex")

    @property
    def concave(self):
        return self._all("concave")

    @property
    def linear(self):
        return all(t.kind == "affine" and t.const == 0 for t in self.terms)

    @property
    def pos_hom(self):
        return self._all("pos_hom")

    @property
    def star(self):
        return self._all("star")

    @property
    def antistar(self):
        return self._all("antistar")

    @property
    def monotone_1d(self):
        if self.n != 1:
            return False
        slopes = []
        for t in self.terms:
            if t.kind == "curve":
                slopes.extend(t.curve.slopes * t.coef[0])
            elif t.kind == "affine":
                slopes.append(t.coef[0])
            else:
                slopes.extend(np.asarray(t.C)[:, 0])
        slopes = np.asarray(slopes)
        return bool(np.all(slopes >= 0) or np.all(slopes <= 0))

    @property
    def lipschitz(self):
        return float(sum(t.lipschitz for t in self.terms))

    @property
    def has_opaque_terms(self):
        return any(t.kind == "polytope" for t in self.terms)


def two_sided_curve(pos, neg, pos_scale=1.0, neg_scale=1.0):
    """t -> pos_scale*pos(t) for t >= 0 and -neg_scale*neg(-t) for t < 0."""
    pk = np.concatenate([[0.0], pos.knots[pos.knots > 0]])
    nk = np.concatenate([[0.0], neg.knots[neg.knots > 0]])
    knots = np.concatenate([-nk[:0:-1], pk])
    values = np.concatenate([-neg_scale * neg(nk[:0:-1]), pos_scale * pos(pk)])
    return PiecewiseLinear(knots, values, neg_scale * neg.right_slope, pos_scale * pos.right_slope)


def _check_half_line_curve(curve, name, path):
    if abs(curve(0.0)) > 1e-12:
        raise InstanceError(f"{name} must vanish at 0", path)
    probe = np.concatenate([curve.knots[curve.knots >= 0], [0.0]])
    slopes_right = [curve.slopes[np.searchsorted(curve.knots, t, side="right")] for t in probe]
    if min(slopes_right) < -1e-12:
        raise InstanceError(f"{name} must be nondecreasing on the half line", path)


def _dominates(upper, lower):
    pts = np.unique(np.concatenate([[0.0], upper.knots, lower.knots]))
    pts = pts[pts >= 0]
    return bool(np.all(upper(pts) >= lower(pts) - 1e-12) and upper.right_slope >= lower.right_slope - 1e-12)


def _check_vertices(vertices):
    Z = np.atleast_2d(np.asarray(vertices, float))
    if np.any(Z < 0) or np.any(np.abs(Z[:, 0] - 1.0) > 1e-12):
        raise InstanceError("price vertices must be nonnegative with leading coordinate 1")
    return Z


# -- pricing rules -------------------------------------------------------------

class AcquisitionRule(ScalarRule):
    def __init__(self, form, params, terms, n):
        super().__init__(terms, n)
        self.form = form
        self.params = params

    def to_dict(self):
        return {"form": self.form, "params": self.params}

    @classmethod
    def linear(cls, prices):
        prices = [float(p) for p in prices]
        return cls("Linear", {"prices": prices}, [AffineTerm(prices)], len(prices))

    @classmethod
    def separable(cls, ask, bid, path=("v0",)):
        if len(ask) != len(bid):
            raise InstanceError("ask and bid curve lists differ in length", path)
        n = len(ask)
        terms = []
        for i, (pa, pb) in enumerate(zip(ask, bid)):
            _check_half_line_curve(pa, f"ask curve {i}", path)
            _check_half_line_curve(pb, f"bid curve {i}", path)
            if not _dominates(pa, pb):
                raise InstanceError(f"asset {i}: ask curve must dominate bid curve", path)
            terms.append(CurveTerm(np.eye(n)[i], two_sided_curve(pa, pb)))
        params = {"ask": [c.to_dict() for c in ask], "bid": [c.to_dict() for c in bid]}
        return cls("SeparableBidAsk", params, terms, n)

    @classmethod
    def kabanov(cls, bid_ask):
        pi = validate_bid_ask(bid_ask)
        n = pi.shape[0]
        params = {"bid_ask": pi.tolist()}
        if n <= MAX_ENUM_ASSETS:
            return cls("Kabanov", params, [MaxTerm(kabanov_vertices(pi))], n)
        H, g = dual_inequalities(pi)
        return cls("Kabanov", params, [PolytopeTerm(H, g, "max")], n)

    @classmethod
    def from_vertices(cls, vertices):
        Z = _check_vertices(vertices)
        return cls("Kabanov", {"vertices": Z.tolist()}, [MaxTerm(Z)], Z.shape[1])

    @classmethod
    def expression(cls, expr, n, path=("v0",)):
        return cls("Expr", {"expr": expr}, term_from_dict(expr, n, path + ("params", "expr")), n)

    @classmethod
    def from_dict(cls, d, n=None, path=("v0",)):
        form, p = d["form"], d.get("params", {})
        if form == "Linear":
            return cls.linear(p["prices"])
        if form == "SeparableBidAsk":
            return cls.separable([PiecewiseLinear.from_dict(c) for c in p["ask"]],
                                 [PiecewiseLinear.from_dict(c) for c in p["bid"]], path)
        if form == "Kabanov":
            if "vertices" in p:
                return cls.from_vertices(p["vertices"])
            return cls.kabanov(p["bid_ask"])
        if form == "Expr":
            if n is None:
                raise InstanceError("expression rules need the asset count", path)
            return cls.expression(p["expr"], n, path)
        raise InstanceError(f"unknown acquisition form {form!r}", path + ("form",))


class LiquidationRule:
    """Scenario-wise liquidation values: one scalar rule per outcome."""

    def __init__(self, form, params, outcomes, n):
        self.form = form
        self.params = params
        self.outcomes = list(outcomes)
        self.n = n

    @property
    def d(self):
        return len(self.outcomes)

    def __call__(self, x):
        x = _vec(x, self.n)
        return np.stack([np.asarray(r(x)) for r in self.outcomes], axis=-1)

    def _all(self, attr):
        return all(getattr(r, attr) for r in self.outcomes)

    concave = property(lambda self: self._all("concave"))
    convex = property(lambda self: self._all("convex"))
    pos_hom = property(lambda self: self._all("pos_hom"))
    linear = property(lambda self: self._all("linear"))
    antistar = property(lambda self: self._all("antistar"))
    has_opaque_terms = property(lambda self: any(r.has_opaque_terms for r in self.outcomes))

    def to_dict(self):
        return {"form": self.form, "params": self.params}

    @classmethod
    def linear_payoff(cls, matrix):
        M = np.atleast_2d(np.asarray(matrix, float))
        n, d = M.shape
        outs = [ScalarRule([AffineTerm(M[:, j])], n) for j in range(d)]
        return cls("LinearPayoff", {"matrix": M.tolist()}, outs, n)

    @classmethod
    def separable(cls, ask, bid, ask_payoff, bid_payoff, path=("v1",)):
        Sa = np.atleast_2d(np.asarray(ask_payoff, float))
        Sb = np.atleast_2d(np.asarray(bid_payoff, float))
        n = len(ask)
        if len(bid) != n or Sa.shape != Sb.shape or Sa.shape[0] != n:
            raise InstanceError("separable payoff dimensions disagree", path)
        if np.any(Sa < 0) or np.any(Sb < 0):
            raise InstanceError("payoff positions must be nonnegative", path)
        for i in range(n):
            _check_half_line_curve(ask[i], f"ask curve {i}", path)
            _check_half_line_curve(bid[i], f"bid curve {i}", path)
            if not _dominates(ask[i], bid[i]):
                raise InstanceError(f"asset {i}: ask curve must dominate bid curve", path)
        d = Sa.shape[1]
        outs = []
        for j in range(d):
            terms = []
            for i in range(n):
                if Sa[i, j] == 0 and Sb[i, j] == 0:
                    continue
                terms.append(CurveTerm(np.eye(n)[i], two_sided_curve(bid[i], ask[i], Sb[i, j], Sa[i, j])))
            outs.append(ScalarRule(terms or [AffineTerm(np.zeros(n))], n))
        params = {
            "ask": [c.to_dict() for c in ask],
            "bid": [c.to_dict() for c in bid],
            "ask_payoff": Sa.tolist(),
            "bid_payoff": Sb.tolist(),
        }
        return cls("SeparablePayoff", params, outs, n)

    @classmethod
    def kabanov(cls, bid_asks):
        outs = []
        mats = []
        for pi in bid_asks:
            pi = validate_bid_ask(pi)
            mats.append(pi.tolist())
            n = pi.shape[0]
            if n <= MAX_ENUM_ASSETS:
                outs.append(ScalarRule([MinTerm(kabanov_vertices(pi))], n))
            else:
                H, g = dual_inequalities(pi)
                outs.append(ScalarRule([PolytopeTerm(H, g, "min")], n))
        return cls("Kabanov", {"bid_ask": mats}, outs, outs[0].n)

    @classmethod
    def from_vertices(cls, per_outcome):
        outs = [ScalarRule([MinTerm(_check_vertices(Z))], np.shape(Z)[1]) for Z in per_outcome]
        return cls("Kabanov", {"vertices": [np.asarray(Z, float).tolist() for Z in per_outcome]},
                   outs, outs[0].n)

    @classmethod
    def expression(cls, exprs, n, path=("v1",)):
        outs = [ScalarRule(term_from_dict(e, n, path + ("params", "exprs", j)), n)
                for j, e in enumerate(exprs)]
        return cls("Expr", {"exprs": list(exprs)}, outs, n)

    @classmethod
    def from_dict(cls, d, n=None, path=("v1",)):
        form, p = d["form"], d.get("params", {})
        if form == "LinearPayoff":
            return cls.linear_payoff(p["matrix"])
        if form == "SeparablePayoff":
            return cls.separable([PiecewiseLinear.from_dict(c) for c in p["ask"]],
                                 [PiecewiseLinear.from_dict(c) for c in p["bid"]],
                                 p["ask_payoff"], p["bid_payoff"], path)
        if form == "Kabanov":
            if "vertices" in p:
                return cls.from_vertices(p["vertices"])
            return cls.kabanov(p["bid_ask"])
        if form == "Expr":
            if n is None:
                raise InstanceError("expression rules need the asset count", path)
            return cls.expression(p["exprs"], n, path)
        raise InstanceError(f"unknown liquidation form {form!r}", path + ("form",))


# -- portfolio sets ----------------------------------------------------------------

class PortfolioSet:
    family = "abstract"
    is_convex = True
    is_cone = False
    polyhedral = True

    def __init__(self, n):
        self.n = n

    def rows(self):
        """(G, h) with P = {G x >= h}, or None for non-polyhedral sets."""
        return np.zeros((0, self.n)), np.zeros(0)

    def asymptotic_rows(self):
        G, _ = self.rows()
        return G, np.zeros(G.shape[0])

    def contains(self, x, tol=MEMBERSHIP_TOL):
        G, h = self.rows()
        x = np.asarray(x, float)
        return _out(np.all(x @ G.T >= h - tol, axis=-1))

    def asymptotic_contains(self, x, tol=MEMBERSHIP_TOL):
        G, h = self.asymptotic_rows()
        x = np.asarray(x, float)
        return _out(np.all(x @ G.T >= h - tol, axis=-1))

    @property
    def is_bounded(self):
        G, _ = self.asymptotic_rows()
        # recession cone {G d >= 0} is trivial iff max/min of each d_i vanish
        for i in range(self.n):
            for s in (1.0, -1.0):
                c = np.zeros(self.n)
                c[i] = -s
                res = solve_lp(c, G, np.zeros(G.shape[0]), lower=-np.ones(self.n),
                               upper=np.ones(self.n))
                if res.status == OPTIMAL and -res.value > 1e-9:
                    return False
        return True

    @property
    def is_star(self):
        return self.is_convex or self.is_cone

    @property
    def closed_under_addition(self):
        return self.is_cone and self.is_convex

    def asymptotic_in_nonneg(self):
        G, _ = self.asymptotic_rows()
        for i in range(self.n):
            c = np.zeros(self.n)
            c[i] = 1.0
            res = solve_lp(c, G, np.zeros(G.shape[0]), lower=-np.ones(self.n), upper=np.ones(self.n))
            if res.status == OPTIMAL and res.value < -1e-9:
                return False
        return True

    def to_dict(self):
        return {"family": self.family, "params": self._params()}

    def _params(self):
        return {}


class FullSet(PortfolioSet):
    family = "Full"
    is_cone = True


class NonNegSet(PortfolioSet):
    family = "NonNeg"
    is_cone = True

    def rows(self):
        return np.eye(self.n), np.zeros(self.n)


class BoxSet(PortfolioSet):
    family = "Box"

    def __init__(self, lower, upper):
        lo = np.array([-np.inf if v is None else v for v in lower], float)
        hi = np.array([np.inf if v is None else v for v in upper], float)
        super().__init__(lo.size)
        if hi.size != lo.size or np.any(lo >= hi):
            raise InstanceError("box needs lower < upper per asset")
        if np.any(lo > 0) or np.any(hi < 0):
            raise InstanceError("box must contain the zero portfolio")
        self.lower, self.upper = lo, hi
        self.is_cone = bool(np.all((lo == 0) | np.isinf(lo)) and np.all((hi == 0) | np.isinf(hi)))

    def rows(self):
        fl, fu = np.isfinite(self.lower), np.isfinite(self.upper)
        G = np.vstack([np.eye(self.n)[fl], -np.eye(self.n)[fu]])
        h = np.concatenate([self.lower[fl], -self.upper[fu]])
        return G.reshape(-1, self.n), h

    def _params(self):
        enc = lambda a: [None if np.isinf(v) else float(v) for v in a]
        return {"lower": enc(self.lower), "upper": enc(self.upper)}


class PolyhedralSet(PortfolioSet):
    family = "Polyhedral"

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, float))
        super().__init__(A.shape[1])
        self.A, self.b = A, np.asarray(b, float).reshape(-1)
        if np.any(self.b > 0):
            raise InstanceError("polyhedral set must contain the zero portfolio (b <= 0)")
        self.is_cone = bool(np.all(self.b == 0))

    def rows(self):
        return self.A, self.b

    def _params(self):
        return {"A": self.A.tolist(), "b": self.b.tolist()}


class _PricedSet(PortfolioSet):
    """Constraints phrased through the acquisition rule; not polyhedral in general."""

    polyhedral = False

    def __init__(self, n, v0):
        super().__init__(n)
        self.v0 = v0
        self.is_cone = bool(v0.pos_hom)
        self.is_convex = False

    def rows(self):
        return None

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return _out(np.all(self._margins(np.asarray(x, float)) >= -tol, axis=-1))

    def asymptotic_rows(self):
        return None

    def asymptotic_contains(self, x, tol=MEMBERSHIP_TOL, doublings=40):
        x = np.asarray(x, float)
        if self.is_cone:
            return self.contains(x, tol)
        lams = 2.0 ** np.arange(doublings + 1)
        stacked = lams.reshape((-1,) + (1,) * x.ndim) * x
        scale = 1.0 + np.max(np.abs(stacked), axis=-1)
        ok = np.all(self._margins(stacked) >= -tol * scale[..., None], axis=-1)
        return _out(np.all(ok, axis=0))

    @property
    def is_bounded(self):
        from .acceptance import sphere_directions
        dirs = sphere_directions(self.n)
        return not bool(np.any(self.asymptotic_contains(dirs)))

    def asymptotic_in_nonneg(self):
        from .acceptance import sphere_directions
        dirs = sphere_directions(self.n)
        inside = np.asarray(self.asymptotic_contains(dirs))
        return not bool(np.any(inside & np.any(dirs < -1e-12, axis=-1)))


class MarginSet(_PricedSet):
    family = "Margin"

    def __init__(self, gammas, v0):
        super().__init__(v0.n, v0)
        self.gammas = np.asarray(gammas, float)
        if self.gammas.size != self.n or np.any(self.gammas <= 0):
            raise InstanceError("margin coefficients must be positive, one per asset")

    def _margins(self, x):
        total = np.asarray(self.v0(x))
        single = np.stack([np.asarray(self.v0(x * np.eye(self.n)[i])) for i in range(self.n)], -1)
        return single + self.gammas * total[..., None]

    def _params(self):
        return {"gammas": self.gammas.tolist()}


class CollateralSet(_PricedSet):
    family = "Collateral"

    def __init__(self, gamma, v0):
        super().__init__(v0.n, v0)
        if gamma <= 0:
            raise InstanceError("collateral coefficient must be positive")
        self.gamma = float(gamma)

    def _margins(self, x):
        long = np.asarray(self.v0(np.maximum(x, 0.0)))
        short = np.asarray(self.v0(np.minimum(x, 0.0)))
        return (self.gamma * long + short)[..., None]

    def _params(self):
        return {"gamma": self.gamma}


def portfolio_from_dict(d, n, v0, path=("portfolio_set",)):
    fam, p = d["family"], d.get("params", {})
    if fam == "Full":
        P = FullSet(n)
    elif fam == "NonNeg":
        P = NonNegSet(n)
    elif fam == "Box":
        P = BoxSet(p["lower"], p["upper"])
    elif fam == "Polyhedral":
        P = PolyhedralSet(p["A"], p["b"])
    elif fam == "Margin":
        P = MarginSet(p["gammas"], v0)
    elif fam == "Collateral":
        P = CollateralSet(p["gamma"], v0)
    else:
        raise InstanceError(f"unknown portfolio family {fam!r}", path + ("family",))
    if P.n != n:
        raise InstanceError(f"portfolio set has {P.n} assets, rules have {n}", path)
    if not P.contains(np.zeros(n)):
        raise InstanceError("the zero portfolio must be admissible", path)
    return P


# -- the bundle ---------------------------------------------------------------------

@dataclass
class MarketInstance:
    space: ScenarioSpace
    acceptance: AcceptanceSet
    portfolio: PortfolioSet
    v0: AcquisitionRule
    v1: LiquidationRule
    name: str = ""
    box: np.ndarray | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.v0.n
        if self.v1.n != n or self.portfolio.n != n:
            raise InstanceError("asset counts of P, V0 and V1 disagree")
        if self.v1.d != self.space.size or self.acceptance.space != self.space:
            raise InstanceError("outcome counts of V1, A and the space disagree")
        if self.box is None:
            self.box = np.tile([-10.0, 10.0], (n, 1))
        self.box = np.asarray(self.box, float).reshape(n, 2)
        self._cache = {}

    @property
    def n_assets(self):
        return self.v0.n

    @property
    def n_outcomes(self):
        return self.space.size

    # structural premises used by the property and duality layers
    @property
    def convex_market(self):
        return self.portfolio.is_convex and self.v0.convex and self.v1.concave

    @property
    def convex(self):
        return self.acceptance.is_convex and self.convex_market

    @property
    def conic(self):
        return (self.acceptance.is_cone and self.portfolio.is_cone
                and self.v0.pos_hom and self.v1.pos_hom)

    @property
    def polyhedral(self):
        return self.portfolio.polyhedral and not (self.v0.has_opaque_terms or self.v1.has_opaque_terms)

    def lipschitz(self):
        return self.v0.lipschitz

    def cache(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]


def check_standing_assumptions(inst: MarketInstance, samples=1000, seed=0, tol=1e-9):
    """Re-run the sampled standing-assumption checks; raise InstanceError on failure."""
    n = inst.n_assets
    zero = np.zeros(n)
    if abs(inst.v0(zero)) > tol:
        raise InstanceError("V0(0) must vanish", ("v0",))
    if np.any(np.abs(inst.v1(zero)) > tol):
        raise InstanceError("V1(0) must vanish", ("v1",))
    if not inst.portfolio.contains(zero):
        raise InstanceError("0 must be admissible", ("portfolio_set",))
    if not getattr(inst.acceptance, "zero_exempt", False) and not inst.acceptance.contains(
            np.zeros(inst.n_outcomes)):
        raise InstanceError("0 must be acceptable", ("acceptance",))
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=5.0, size=(samples, n))
    if inst.v0.has_opaque_terms:
        x = x[:50]
    spread0 = np.asarray(inst.v0(x)) + np.asarray(inst.v0(-x))
    scale = 1.0 + np.abs(x).sum(axis=1)
    if np.any(spread0 < -tol * scale):
        raise InstanceError("V0(x) >= -V0(-x) fails (negative bid-ask spread)", ("v0",))
    spread1 = inst.v1(x) + inst.v1(-x)
    if np.any(spread1 > tol * scale[:, None]):
        raise InstanceError("V1(x) <= -V1(-x) fails (negative bid-ask spread)", ("v1",))
