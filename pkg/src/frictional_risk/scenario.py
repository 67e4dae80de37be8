"""Finite probability spaces and the position-level statistics built on them.

Positions are plain float arrays whose last axis runs over outcomes, so
every function here also accepts a stack of positions of shape (..., d).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# slack used when comparing accumulated probabilities with a level
PROB_EPS = 1e-12


@dataclass(frozen=True)
class ScenarioSpace:
    probs: np.ndarray
    labels: tuple = field(default=None)

    def __init__(self, probs, labels=None):
        p = np.array(probs, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValueError("a scenario space needs at least one outcome")
        if np.any(~np.isfinite(p)) or np.any(p <= 0):
            raise ValueError("outcome probabilities must be strictly positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, expected 1")
        if labels is None:
            labels = tuple(f"w{j + 1}" for j in range(p.size))
        labels = tuple(str(s) for s in labels)
        if len(labels) != p.size:
            raise ValueError("one label per outcome is required")
        if len(set(labels)) != len(labels):
            raise ValueError("outcome labels must be distinct")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        return (
            isinstance(other, ScenarioSpace)
            and self.labels == other.labels
            and np.array_equal(self.probs, other.probs)
        )

    def __hash__(self):
        return hash((self.labels, self.probs.tobytes()))

    def to_dict(self):
        return {"probs": [float(p) for p in self.probs], "labels": list(self.labels)}


def as_position(space: ScenarioSpace, X) -> np.ndarray:
    """Float view of X with its outcome axis checked against the space."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0 or X.shape[-1] != space.size:
        raise ValueError(
            f"position has {X.shape[-1] if X.ndim else 0} entries, space has {space.size}"
        )
    return X


def order_geq(X, Y) -> bool:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError("positions live on different spaces")
    return bool(np.all(X >= Y))


def expectation(space: ScenarioSpace, X):
    X = as_position(space, X)
    out = X @ space.probs
    return float(out) if np.ndim(out) == 0 else out


def _sorted_atoms(space, X):
    # stable sort by value; ties keep outcome order
    order = np.argsort(X, axis=-1, kind="stable")
    values = np.take_along_axis(X, order, axis=-1)
    probs = np.broadcast_to(space.probs, X.shape)
    probs = np.take_along_axis(probs, order, axis=-1)
    upper = np.cumsum(probs, axis=-1)
    return values, upper - probs, upper


def upper_quantile(space: ScenarioSpace, X, alpha: float):
    """inf{m : P(X <= m) > alpha}."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    X = as_position(space, X)
    values, _, upper = _sorted_atoms(space, X)
    k = np.argmax(upper > alpha + PROB_EPS, axis=-1)
    out = np.take_along_axis(values, k[..., None], axis=-1)[..., 0]
    return float(out) if out.ndim == 0 else out


def quantile_integral(space: ScenarioSpace, X, a: float, b: float):
    """Exact integral of the upper quantile function over [a, b]."""
    if not 0.0 <= a <= b <= 1.0:
        raise ValueError("need 0 <= a <= b <= 1")
    X = as_position(space, X)
    values, lower, upper = _sorted_atoms(space, X)
    width = np.clip(np.minimum(upper, b) - np.maximum(lower, a), 0.0, None)
    out = np.sum(width * values, axis=-1)
    return float(out) if out.ndim == 0 else out
