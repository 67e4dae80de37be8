"""Currency markets described by bid-ask matrices.

The dual polytope Z = {z >= 0 : z_1 = 1, z_j <= pi^{ij} z_i} is enumerated by
intersecting facets, which is cheap for the small N handled here.
"""

import itertools

import numpy as np

from .errors import InstanceError

MAX_ENUM_ASSETS = 4


def validate_bid_ask(pi, tol=1e-12):
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 2 or pi.shape[0] != pi.shape[1]:
        raise InstanceError("bid-ask matrix must be square")
    n = pi.shape[0]
    if np.any(pi <= 0):
        raise InstanceError("bid-ask entries must be strictly positive")
    if np.any(np.abs(np.diag(pi) - 1.0) > tol):
        raise InstanceError("bid-ask matrix must have unit diagonal")
    for i, j, k in itertools.product(range(n), repeat=3):
        if pi[i, j] > pi[i, k] * pi[k, j] * (1 + tol):
            raise InstanceError(
                f"bid-ask matrix violates pi[{i},{j}] <= pi[{i},{k}] * pi[{k},{j}]"
            )
    return pi


def dual_inequalities(pi):
    """Rows H z' >= g on z' = (z_2, ..., z_N) with z_1 fixed to 1."""
    n = pi.shape[0]
    rows, rhs = [], []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            # pi^{ij} z_i - z_j >= 0
            full = np.zeros(n)
            full[i] += pi[i, j]
            full[j] -= 1.0
            rows.append(full[1:])
            rhs.append(-full[0])
    for j in range(1, n):
        r = np.zeros(n - 1)
        r[j - 1] = 1.0
        rows.append(r)
        rhs.append(0.0)
    return np.array(rows).reshape(-1, n - 1), np.array(rhs)


def kabanov_vertices(pi, tol=1e-10):
    """Vertices of Z, each with leading coordinate 1, sorted lexicographically."""
    pi = validate_bid_ask(pi)
    n = pi.shape[0]
    if n == 1:
        return np.ones((1, 1))
    if n > MAX_ENUM_ASSETS:
        raise InstanceError(f"vertex enumeration is limited to N <= {MAX_ENUM_ASSETS}")
    H, g = dual_inequalities(pi)
    found = []
    for idx in itertools.combinations(range(len(g)), n - 1):
        M = H[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        z = np.linalg.solve(M, g[list(idx)])
        if np.all(H @ z >= g - tol * (1 + np.abs(g))):
            if not any(np.allclose(z, v, atol=1e-9) for v in found):
                found.append(z)
    if not found:
        raise InstanceError("bid-ask matrix yields an empty dual polytope")
    verts = np.array([np.concatenate([[1.0], z]) for z in found])
    order = np.lexsort(verts.T[::-1])
    return verts[order]


def bid_ask_bound(pi, x):
    """|x_1| + sum_{i>=2} |x_i| pi^{1i}, valid for both pricing dates."""
    pi = np.asarray(pi, float)
    x = np.asarray(x, float)
    return np.abs(x[..., 0]) + np.abs(x[..., 1:]) @ pi[0, 1:]
