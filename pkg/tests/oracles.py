"""Independent reference computations used to freeze expected values.

Nothing here imports from frictional_risk. Every routine takes the slow,
obvious route so that disagreement with the library points at a real bug.
"""

import itertools

import numpy as np
from scipy.integrate import quad
from scipy.optimize import linprog


def quantile_bruteforce(probs, values, alpha):
    # inf{m : P(X <= m) > alpha} is attained at one of the atoms
    best = np.inf
    for m in values:
        mass = sum(p for p, v in zip(probs, values) if v <= m)
        if mass > alpha and m < best:
            best = m
    return float(best)


def es_by_lp(probs, values, alpha):
    """ES as max over densities bounded by 1/alpha of -E_Q[X]."""
    probs = np.asarray(probs, float)
    values = np.asarray(values, float)
    n = len(probs)
    res = linprog(
        values,
        A_eq=np.ones((1, n)),
        b_eq=[1.0],
        bounds=[(0.0, p / alpha) for p in probs],
        method="highs",
    )
    return float(-res.fun)


def rvar_by_quadrature(probs, values, alpha, beta):
    breaks = np.cumsum(np.asarray(probs)[np.argsort(values, kind="stable")])
    pts = [b for b in breaks if alpha < b < beta]
    val, _ = quad(
        lambda g: quantile_bruteforce(probs, values, g),
        alpha,
        beta,
        points=pts or None,
        limit=200,
        epsabs=1e-13,
    )
    return -val / (beta - alpha)


def grid_points(box, h):
    axes = [np.arange(lo, hi + 0.5 * h, h) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def rho_grid(v0, v1, accept, in_p, X, box, h):
    """Plain grid minimum of v0 over x in P with X + v1(x) accepted.

    v0, v1, accept, in_p act on single points (slow on purpose).
    """
    best = np.inf
    for x in grid_points(box, h):
        if not in_p(x):
            continue
        if accept(np.asarray(X, float) + v1(x)):
            best = min(best, v0(x))
    return best


def simplex_grid(d, steps):
    for combo in itertools.product(range(steps + 1), repeat=d - 1):
        if sum(combo) <= steps:
            yield np.array(list(combo) + [steps - sum(combo)], float) / steps


# -- lifted descriptions of acceptance sets, written from their definitions -----------

def lift_orthant(d, floor=None):
    f = np.zeros(d) if floor is None else np.asarray(floor, float)
    return np.eye(d), np.zeros((d, 0)), f


def lift_es(probs, alpha):
    """ES(Y) <= 0 iff some m, s >= 0 have s >= m - Y and m >= E[s]/alpha."""
    p = np.asarray(probs, float)
    d = p.size
    E = np.vstack([np.eye(d), np.zeros((d, d)), np.zeros((1, d))])
    F = np.zeros((2 * d + 1, d + 1))
    F[:d, 0] = -1.0
    F[:d, 1:] = np.eye(d)
    F[d:2 * d, 1:] = np.eye(d)
    F[-1, 0] = 1.0
    F[-1, 1:] = -p / alpha
    return E, F, np.zeros(2 * d + 1)


def lift_expectile(probs, alpha):
    """Y = g - l with g, l >= 0 and alpha E[g] >= (1 - alpha) E[l]."""
    p = np.asarray(probs, float)
    d = p.size
    I, Z = np.eye(d), np.zeros((d, d))
    E = np.vstack([I, -I, Z, Z, np.zeros((1, d))])
    F = np.vstack([np.hstack([-I, I]), np.hstack([I, -I]), np.hstack([I, Z]), np.hstack([Z, I]),
                   np.concatenate([alpha * p, -(1 - alpha) * p])[None, :]])
    return E, F, np.zeros(4 * d + 1)


def lift_utility(probs, slopes, intercepts):
    """E[u(Y)] >= 0 for u = min_k (a_k y + b_k)."""
    p = np.asarray(probs, float)
    d, K = p.size, len(slopes)
    E = np.zeros((d * K + 1, d))
    F = np.zeros((d * K + 1, d))
    f = np.zeros(d * K + 1)
    for j in range(d):
        for k in range(K):
            E[j * K + k, j] = slopes[k]
            F[j * K + k, j] = -1.0
            f[j * K + k] = -intercepts[k]
    F[-1] = p
    return E, F, f


def rho_lp(X, v0_lines, v1_lines, lift, P=None):
    """inf V0(x) for V0 = max of lines, V1_j = min of lines, A a lifted polyhedron.

    v0_lines: list of (c, e); v1_lines[j]: list of (c, e); P: (A, b) for A x >= b.
    Returns (value, x) with value +inf / -inf for infeasible / unbounded programs.
    """
    X = np.asarray(X, float)
    E, F, f = lift
    d, m = E.shape[1], F.shape[1]
    N = len(v0_lines[0][0])
    nv = N + 1 + d + m
    rows, rhs = [], []
    for c, e in v0_lines:
        r = np.zeros(nv)
        r[:N] = -np.asarray(c, float)
        r[N] = 1.0
        rows.append(r)
        rhs.append(e)
    for j, lines in enumerate(v1_lines):
        for c, e in lines:
            r = np.zeros(nv)
            r[:N] = c
            r[N + 1 + j] = -1.0
            rows.append(r)
            rhs.append(-e)
    for k in range(E.shape[0]):
        r = np.zeros(nv)
        r[N + 1:N + 1 + d] = E[k]
        r[N + 1 + d:] = F[k]
        rows.append(r)
        rhs.append(f[k] - E[k] @ X)
    if P is not None:
        for a, b in zip(*P):
            r = np.zeros(nv)
            r[:N] = a
            rows.append(r)
            rhs.append(b)
    cost = np.zeros(nv)
    cost[N] = 1.0
    res = linprog(cost, A_ub=-np.array(rows), b_ub=-np.array(rhs, float),
                  bounds=[(None, None)] * nv, method="highs")
    if res.status == 2:
        return np.inf, None
    if res.status == 3:
        return -np.inf, None
    return float(res.fun), res.x[:N]


def kabanov_vertices_bruteforce(pi):
    """Vertices of {z : z_1 = 1, z_j <= pi_ij z_i} by intersecting every subset of facets."""
    pi = np.asarray(pi, float)
    n = pi.shape[0]
    rows = []
    for i in range(n):
        for j in range(n):
            if i != j:
                r = np.zeros(n)
                r[i], r[j] = pi[i, j], -1.0
                rows.append(r)
    rows = np.array(rows)
    out = []
    for sub in itertools.combinations(range(len(rows)), n - 1):
        M = np.vstack([np.eye(n)[0], rows[list(sub)]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        z = np.linalg.solve(M, np.eye(n)[0])
        if np.all(rows @ z >= -1e-10) and not any(np.allclose(z, w) for w in out):
            out.append(z)
    return out
