"""Exact optimal transport between discrete measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NonUniformSourceWeights, NumericalFailure
from .lp import LinearProgram, solve_lp
from .measures import CostMatrix, DiscreteMeasure, euclidean_cost, squared_cost

MARGINAL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class Coupling:
    """Transport plan with row marginal ``a`` and column marginal ``b``."""

    plan: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        plan = np.asarray(self.plan, dtype=np.float64)
        if plan.shape != (len(self.a), len(self.b)):
            raise DimensionMismatch(f"plan {plan.shape} vs marginals {len(self.a)}x{len(self.b)}")
        if np.any(plan < 0):
            raise ValueError("coupling has negative entries")
        if np.max(np.abs(plan.sum(1) - self.a)) > MARGINAL_TOL or np.max(np.abs(plan.sum(0) - self.b)) > MARGINAL_TOL:
            raise ValueError("coupling marginals do not match")
        plan.setflags(write=False)
        object.__setattr__(self, "plan", plan)

    def cost(self, C) -> float:
        C = C.entries if isinstance(C, CostMatrix) else np.asarray(C)
        return float(np.sum(self.plan * C))


def transport_program(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> LinearProgram:
    """LP over row-major flattened plans with marginals ``a`` (rows) and ``b`` (cols).

    The last column-marginal equation is implied by the others and is dropped,
    which keeps the system consistent when ``sum(a)`` and ``sum(b)`` differ by
    floating-point noise.
    """
    n, m = C.shape
    rows = sp.kron(sp.identity(n, format="csr"), np.ones((1, m)), format="csr")
    cols = sp.kron(np.ones((1, n)), sp.identity(m, format="csr"), format="csr")[: m - 1]
    A_eq = sp.vstack([rows, cols], format="csr")
    b_eq = np.concatenate([a, b[: m - 1]])
    return LinearProgram(C.ravel(), A_eq, b_eq)


def _solve_plan(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> np.ndarray:
    n, m = C.shape
    if n == 1:
        return b[None, :].copy()
    if m == 1:
        return a[:, None].copy()
    sol = solve_lp(transport_program(a, b, C))
    if not sol.optimal:
        raise NumericalFailure(f"transport LP reported {sol.status.value}")
    return sol.x.reshape(n, m)


def optimal_coupling(A: DiscreteMeasure, B: DiscreteMeasure, C: Optional[CostMatrix] = None):
    """Exact optimal coupling between ``A`` and ``B``.

    Parameters
    ----------
    A, B : DiscreteMeasure
    C : CostMatrix, optional
        Ground cost between the supports; squared Euclidean if omitted.

    Returns
    -------
    coupling : Coupling
    cost : float
        ``<plan, C>``.
    """
    if A.dim != B.dim:
        raise DimensionMismatch(f"dimension {A.dim} vs {B.dim}")
    if C is None:
        C = squared_cost(A, B)
    if C.shape != (A.size, B.size):
        raise DimensionMismatch(f"cost shape {C.shape} vs supports {A.size}x{B.size}")
    plan = _solve_plan(A.weights, B.weights, C.entries)
    coupling = Coupling(plan, A.weights, B.weights)
    return coupling, max(coupling.cost(C), 0.0)


def wasserstein2(A: DiscreteMeasure, B: DiscreteMeasure) -> float:
    _, cost = optimal_coupling(A, B, squared_cost(A, B))
    return float(np.sqrt(cost))


def wasserstein1(A: DiscreteMeasure, B: DiscreteMeasure) -> float:
    _, cost = optimal_coupling(A, B, euclidean_cost(A, B))
    return cost


def barycentric_map(coupling: Coupling, n_t: int, points) -> np.ndarray:
    """Map each source atom to ``sum_i n_t * plan[j, i] * points[i]``.

    Rows of the plan must carry mass ``1/n_t`` each (uniform source).
    """
    plan = coupling.plan
    pts = np.asarray(points, dtype=np.float64)
    if plan.shape[0] != n_t or plan.shape[1] != pts.shape[0]:
        raise DimensionMismatch(f"plan {plan.shape} vs n_t={n_t} and {pts.shape[0]} points")
    if np.max(np.abs(plan.sum(1) - 1.0 / n_t)) > MARGINAL_TOL:
        raise NonUniformSourceWeights("coupling rows do not carry uniform mass 1/n_t")
    w = n_t * plan
    mapped = w @ pts
    # rows concentrated on one atom return that atom exactly
    single = np.count_nonzero(plan, axis=1) == 1
    if np.any(single):
        mapped[single] = pts[np.argmax(plan[single], axis=1)]
    return mapped
