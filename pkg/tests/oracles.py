"""Brute-force reference solvers used by the tests.

Nothing here imports the package: these are slow, exhaustive, and small-scale
on purpose.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np


# ------------------------------------------------------------ transport


def sqdist(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return ((X[:, None, :] - Y[None, :, :]) ** 2).sum(-1)


@lru_cache(maxsize=None)
def _spanning_trees(n: int, m: int):
    """Cell sets of every spanning tree of K_{n,m} and the integer map from margins to flows.

    A tree's flow is the unique solution of its (n + m - 1) independent margin
    equations; dropping the last column-margin equation leaves a unimodular
    system, so its inverse is integral.
    """
    cells = [(i, j) for i in range(n) for j in range(m)]
    trees, maps = [], []
    for T in combinations(range(n * m), n + m - 1):
        parent = list(range(n + m))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        ok = True
        for c in T:
            i, j = cells[c]
            ri, rj = find(i), find(n + j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if not ok:
            continue
        A = np.zeros((n + m, len(T)))
        for col, c in enumerate(T):
            i, j = cells[c]
            A[i, col] = 1.0
            A[n + j, col] = 1.0
        Minv = np.rint(np.linalg.inv(A[:-1]))
        trees.append(T)
        maps.append(Minv)
    return np.array(trees, dtype=np.int64), np.array(maps)


def transport_vertices(a, b) -> np.ndarray:
    """All vertices of the transport polytope U(a, b) as (count, n, m) plans."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = a.size, b.size
    trees, maps = _spanning_trees(n, m)
    r = np.concatenate([a, b])[:-1]
    flows = maps @ r
    keep = np.all(flows >= -1e-12, axis=1)
    plans = np.zeros((int(keep.sum()), n * m))
    rows = np.arange(plans.shape[0])[:, None]
    plans[rows, trees[keep]] = np.maximum(flows[keep], 0.0)
    return plans.reshape(-1, n, m)


def ot_cost(a, b, C, maximize: bool = False) -> float:
    """Exact min (or max) of <P, C> over couplings, by vertex enumeration."""
    V = transport_vertices(a, b)
    costs = np.einsum("kij,ij->k", V, np.asarray(C, dtype=np.float64))
    return float(costs.max() if maximize else costs.min())


def w2(X, a, Y, b) -> float:
    return float(np.sqrt(max(ot_cost(a, b, sqdist(X, Y)), 0.0)))


def batched_ot_cost(A, b, C) -> np.ndarray:
    """Min transport cost from each row of ``A`` (many sources) to one target ``b``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    n, m = A.shape[1], len(b)
    trees, maps = _spanning_trees(n, m)
    R = np.concatenate([A, np.broadcast_to(b, (A.shape[0], m))], axis=1)[:, :-1]
    flows = np.einsum("tij,pj->pti", maps, R)
    c_tree = np.asarray(C, dtype=np.float64).ravel()[trees]
    cost = np.einsum("pti,ti->pt", flows, c_tree)
    cost[np.any(flows < -1e-12, axis=2)] = np.inf
    return cost.min(axis=1)


# ------------------------------------------------------------- LP basis


def lp_vertex_min(c, A_eq, b_eq):
    """min c@x s.t. A_eq x = b_eq, x >= 0 by enumerating bases.

    Returns (value, x) or (None, None) when infeasible. Assumes the feasible
    region is bounded and A_eq has full row rank.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A_eq, dtype=np.float64)
    b = np.asarray(b_eq, dtype=np.float64)
    m, n = A.shape
    best, best_x = None, None
    for cols in combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.any(xb < -1e-9):
            continue
        x = np.zeros(n)
        x[list(cols)] = np.maximum(xb, 0.0)
        val = float(c @ x)
        if best is None or val < best:
            best, best_x = val, x
    return best, best_x


def to_standard_form(c, A_le, b_le):
    """min c@x, A_le x <= b_le, x >= 0  ->  equality form with slacks."""
    A_le = np.asarray(A_le, dtype=np.float64)
    m, n = A_le.shape
    A = np.hstack([A_le, np.eye(m)])
    return np.concatenate([np.asarray(c, dtype=np.float64), np.zeros(m)]), A, np.asarray(b_le, dtype=np.float64)


# ----------------------------------------------------------------- DRO


def simplex_grid(n: int, h: float) -> np.ndarray:
    """All points of the (n-1)-simplex whose coordinates are multiples of ``h``."""
    N = int(round(1.0 / h))
    out = []

    def rec(prefix, left, slots):
        if slots == 1:
            out.append(prefix + [left])
            return
        for v in range(left + 1):
            rec(prefix + [v], left - v, slots - 1)

    rec([], N, n)
    return np.array(out, dtype=np.float64) / N


def dro_grid_value(points, centers, radii, priors, delta, h):
    """Grid search of the K=2 robust program on the pooled support.

    ``centers`` are index arrays into ``points`` (uniform barycenter atoms).
    Minimizes ``sum_i max_k priors[k] P_k(i)`` over grid LFDs that lie within
    W2 ``radii[k]`` of their center and admit a coupling with cost >= delta^2.
    Returns the minimum (np.inf if no grid pair qualifies).
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    C = sqdist(points, points)
    G = simplex_grid(n, h)
    feas = []
    for idx, r in zip(centers, radii):
        idx = np.asarray(idx)
        bk = np.full(idx.size, 1.0 / idx.size)
        cost = batched_ot_cost(G, bk, C[:, idx])
        feas.append(G[cost <= r * r + 1e-12])
    F1, F2 = feas
    if len(F1) == 0 or len(F2) == 0:
        return np.inf
    p1, p2 = priors
    A1, A2 = p1 * F1, p2 * F2
    step = max(1, 2_000_000 // max(1, len(F2) * n))

    def chunks():
        for s in range(0, len(F1), step):
            yield s, np.maximum(A1[s : s + step, None, :], A2[None, :, :]).sum(-1)

    lowest = min(float(v.min()) for _, v in chunks())
    if delta <= 0:
        return lowest
    # widen a threshold until some pair below it passes the delta check; all
    # pairs under the threshold are examined in increasing order, so the first
    # pass is the constrained minimum
    need = delta * delta - 1e-12
    checked = set()
    margin = 1e-3
    while True:
        limit = lowest + margin
        cand = []
        for s, v in chunks():
            i, j = np.nonzero(v <= limit)
            cand.extend(zip(v[i, j].tolist(), (i + s).tolist(), j.tolist()))
        cand.sort()
        for val, i, j in cand:
            if (i, j) in checked:
                continue
            checked.add((i, j))
            if ot_cost(F1[i], F2[j], C, maximize=True) >= need:
                return float(val)
        if limit >= 1.0 + 1e-9:
            return np.inf
        margin *= 4
