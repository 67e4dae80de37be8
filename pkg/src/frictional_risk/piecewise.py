"""Continuous piecewise-linear functions of one real variable."""

from __future__ import annotations

import numpy as np

SLOPE_EPS = 1e-12


class PiecewiseLinear:
    """Continuous curve through (knots, values) with linear tails.

    The tails default to the slopes of the outermost segments. A single knot
    needs both tail slopes.
    """

    def __init__(self, knots, values, left_slope=None, right_slope=None):
        t = np.array(knots, dtype=float).reshape(-1)
        v = np.array(values, dtype=float).reshape(-1)
        if t.size == 0 or t.size != v.size:
            raise ValueError("knots and values must be non-empty and of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("knots and values must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knots must be strictly increasing")
        inner = np.diff(v) / np.diff(t)
        if left_slope is None:
            if inner.size == 0:
                raise ValueError("a single-knot curve needs explicit tail slopes")
            left_slope = inner[0]
        if right_slope is None:
            if inner.size == 0:
                raise ValueError("a single-knot curve needs explicit tail slopes")
            right_slope = inner[-1]
        self.knots = t
        self.values = v
        self.left_slope = float(left_slope)
        self.right_slope = float(right_slope)
        self.slopes = np.concatenate([[self.left_slope], inner, [self.right_slope]])
        for arr in (self.knots, self.values, self.slopes):
            arr.setflags(write=False)

    @classmethod
    def linear(cls, slope):
        return cls([0.0], [0.0], slope, slope)

    @classmethod
    def from_dict(cls, d):
        return cls(d["knots"], d["values"], d.get("left_slope"), d.get("right_slope"))

    def to_dict(self):
        return {
            "knots": [float(t) for t in self.knots],
            "values": [float(v) for v in self.values],
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
        }

    def __eq__(self, other):
        return (
            isinstance(other, PiecewiseLinear)
            and np.array_equal(self.knots, other.knots)
            and np.array_equal(self.values, other.values)
            and self.left_slope == other.left_slope
            and self.right_slope == other.right_slope
        )

    def __hash__(self):
        return hash((self.knots.tobytes(), self.values.tobytes(), self.left_slope, self.right_slope))

    def __repr__(self):
        return (f"PiecewiseLinear(knots={self.knots.tolist()}, values={self.values.tolist()}, "
                f"left_slope={self.left_slope}, right_slope={self.right_slope})")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.knots, self.values)
        lo, hi = self.knots[0], self.knots[-1]
        out = np.where(t < lo, self.values[0] + self.left_slope * (t - lo), out)
        out = np.where(t > hi, self.values[-1] + self.right_slope * (t - hi), out)
        return float(out) if out.ndim == 0 else out

    def asymptotic(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 0, self.right_slope * t, self.left_slope * t)
        return float(out) if out.ndim == 0 else out

    @property
    def is_convex(self):
        return bool(np.all(np.diff(self.slopes) >= -SLOPE_EPS))

    @property
    def is_concave(self):
        return bool(np.all(np.diff(self.slopes) <= SLOPE_EPS))

    @property
    def is_affine(self):
        return self.is_convex and self.is_concave

    @property
    def is_nondecreasing(self):
        return bool(np.all(self.slopes >= -SLOPE_EPS))

    @property
    def lipschitz(self):
        return float(np.max(np.abs(self.slopes)))

    def pieces(self):
        """Affine pieces as (slope, intercept, lo, hi) covering the real line."""
        edges = np.concatenate([[-np.inf], self.knots, [np.inf]])
        out = []
        for k, s in enumerate(self.slopes):
            anchor = self.knots[max(k - 1, 0)]
            b = float(self(anchor)) - s * anchor
            out.append((float(s), b, float(edges[k]), float(edges[k + 1])))
        return out

    def lines(self):
        """Slopes and intercepts of every piece (max/min form for convex/concave curves)."""
        p = self.pieces()
        return np.array([q[0] for q in p]), np.array([q[1] for q in p])

    def is_positively_homogeneous(self):
        return bool(np.all(np.abs(self(self.knots) - self.asymptotic(self.knots)) <= 1e-12))
