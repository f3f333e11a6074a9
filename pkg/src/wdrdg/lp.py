"""Linear programs in the form used throughout the package.

Problems are stated as::

    minimize / maximize   c @ x
    subject to            A_eq @ x == b_eq
                          A_le @ x <= b_le
                          lower <= x <= upper

Two deterministic backends sit behind :func:`solve_lp`:

``"simplex"``
    HiGHS dual simplex through ``scipy.optimize.linprog``; returns a basic
    (vertex) optimum.
``"interior"``
    Clarabel's primal-dual interior-point method; when the optimum is not
    unique it returns a point in the relative interior of the optimal face.

Constraint matrices may be dense arrays or ``scipy.sparse`` matrices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import clarabel
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import DimensionMismatch, NumericalFailure

FEAS_TOL = 1e-7

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
    "presolve": True,
}


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A_eq: Optional[object] = None
    b_eq: Optional[np.ndarray] = None
    A_le: Optional[object] = None
    b_le: Optional[np.ndarray] = None
    lower: object = 0.0
    upper: object = None
    maximize: bool = False

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64).ravel()
        n = c.size
        object.__setattr__(self, "c", c)
        for A, b, name in ((self.A_eq, self.b_eq, "eq"), (self.A_le, self.b_le, "le")):
            if (A is None) != (b is None):
                raise DimensionMismatch(f"A_{name} and b_{name} must be given together")
            if A is None:
                continue
            if A.shape[1] != n:
                raise DimensionMismatch(f"A_{name} has {A.shape[1]} columns for {n} variables")
            b = np.asarray(b, dtype=np.float64).ravel()
            if b.size != A.shape[0] or not np.all(np.isfinite(b)):
                raise DimensionMismatch(f"b_{name} must be finite with {A.shape[0]} entries")
            object.__setattr__(self, f"b_{name}", b)
        lo = np.broadcast_to(np.asarray(self.lower, dtype=np.float64), (n,)).copy()
        if not np.all(np.isfinite(lo)):
            raise DimensionMismatch("lower bounds must be finite")
        object.__setattr__(self, "lower", lo)
        if self.upper is not None:
            up = np.broadcast_to(np.asarray(self.upper, dtype=np.float64), (n,)).copy()
            object.__setattr__(self, "upper", up)

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Result of :func:`solve_lp`.

    Dual values are sensitivities of the reported objective with respect to
    the right-hand sides and bounds, so that at an optimum
    ``dual_objective == objective`` (strong duality).
    """

    status: Status
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals_eq: Optional[np.ndarray] = None
    duals_le: Optional[np.ndarray] = None
    duals_lower: Optional[np.ndarray] = None
    duals_upper: Optional[np.ndarray] = None
    dual_objective: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _matvec(A, x):
    return np.asarray(A @ x).ravel()


def residuals(program: LinearProgram, x: np.ndarray) -> float:
    """Largest violation of any constraint or bound at ``x``."""
    worst = float(np.max(program.lower - x, initial=0.0))
    if program.upper is not None:
        finite = np.isfinite(program.upper)
        worst = max(worst, float(np.max(x[finite] - program.upper[finite], initial=0.0)))
    if program.A_eq is not None:
        worst = max(worst, float(np.max(np.abs(_matvec(program.A_eq, x) - program.b_eq), initial=0.0)))
    if program.A_le is not None:
        worst = max(worst, float(np.max(_matvec(program.A_le, x) - program.b_le, initial=0.0)))
    return worst


def solve_lp(program: LinearProgram, method: str = "simplex") -> LpSolution:
    """Solve ``program`` to optimality or report infeasibility/unboundedness.

    Raises
    ------
    NumericalFailure
        If the solver stalls, hits its iteration limit, or returns a point
        violating the constraints by more than ``FEAS_TOL``.
    """
    if method == "simplex":
        return _solve_simplex(program)
    if method == "interior":
        return _solve_interior(program)
    raise ValueError(f"unknown LP method {method!r}")


def _checked(program: LinearProgram, x: np.ndarray, upper: np.ndarray) -> np.ndarray:
    # clip bound-level roundoff so downstream nonnegativity holds exactly
    x = np.maximum(x, program.lower)
    x = np.minimum(x, upper)
    viol = residuals(program, x)
    scale = 1.0 + max(
        float(np.max(np.abs(program.b_eq), initial=0.0)) if program.b_eq is not None else 0.0,
        float(np.max(np.abs(program.b_le), initial=0.0)) if program.b_le is not None else 0.0,
    )
    if viol > FEAS_TOL * scale:
        raise NumericalFailure(f"LP solution violates constraints by {viol:.3g}")
    return x


def _solve_simplex(program: LinearProgram) -> LpSolution:
    sign = -1.0 if program.maximize else 1.0
    upper = program.upper if program.upper is not None else np.full(program.n_vars, np.inf)
    bounds = np.column_stack([program.lower, upper])
    res = linprog(
        sign * program.c,
        A_ub=program.A_le,
        b_ub=program.b_le,
        A_eq=program.A_eq,
        b_eq=program.b_eq,
        bounds=bounds,
        method="highs-ds",
        options=_HIGHS_OPTIONS,
    )
    if res.status == 2:
        return LpSolution(Status.INFEASIBLE)
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED)
    if res.status != 0:
        raise NumericalFailure(f"LP solver failed: {res.message}")

    x = _checked(program, np.asarray(res.x, dtype=np.float64), upper)
    objective = float(program.c @ x)
    y_eq = sign * np.asarray(res.eqlin.marginals) if program.A_eq is not None else None
    y_le = sign * np.asarray(res.ineqlin.marginals) if program.A_le is not None else None
    z_lo = sign * np.asarray(res.lower.marginals)
    z_up = sign * np.asarray(res.upper.marginals)
    dual = float(program.lower @ z_lo)
    if y_eq is not None:
        dual += float(program.b_eq @ y_eq)
    if y_le is not None:
        dual += float(program.b_le @ y_le)
    fin = np.isfinite(upper)
    dual += float(upper[fin] @ z_up[fin])
    return LpSolution(Status.OPTIMAL, x, objective, y_eq, y_le, z_lo, z_up, dual)


def _clarabel_settings():
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = 1e-10
    settings.tol_gap_abs = 1e-10
    settings.tol_gap_rel = 1e-10
    settings.max_threads = 1
    return settings


def _solve_interior(program: LinearProgram) -> LpSolution:
    n = program.n_vars
    sign = -1.0 if program.maximize else 1.0
    upper = program.upper if program.upper is not None else np.full(n, np.inf)
    fin = np.flatnonzero(np.isfinite(upper))
    eye = sp.identity(n, format="csr")
    # conic form: A x + s = b with s in {0}^m_eq x R_+^m_le
    blocks, rhs, cones = [], [], []
    m_eq = 0 if program.A_eq is None else program.A_eq.shape[0]
    m_le = 0 if program.A_le is None else program.A_le.shape[0]
    if m_eq:
        blocks.append(sp.csr_matrix(program.A_eq))
        rhs.append(program.b_eq)
        cones.append(clarabel.ZeroConeT(m_eq))
    if m_le:
        blocks.append(sp.csr_matrix(program.A_le))
        rhs.append(program.b_le)
    blocks.append(-eye)
    rhs.append(-program.lower)
    if fin.size:
        blocks.append(eye[fin])
        rhs.append(upper[fin])
    cones.append(clarabel.NonnegativeConeT(m_le + n + fin.size))
    A = sp.vstack(blocks, format="csc")
    b = np.concatenate(rhs)
    P = sp.csc_matrix((n, n))
    sol = clarabel.DefaultSolver(P, sign * program.c, A, b, cones, _clarabel_settings()).solve()

    status = str(sol.status)
    if "PrimalInfeasible" in status:
        return LpSolution(Status.INFEASIBLE)
    if "DualInfeasible" in status:
        return LpSolution(Status.UNBOUNDED)
    if status not in ("Solved", "AlmostSolved"):
        raise NumericalFailure(f"interior-point solver stopped with status {status}")

    x = _checked(program, np.asarray(sol.x, dtype=np.float64), upper)
    z = -sign * np.asarray(sol.z, dtype=np.float64)
    y_eq = z[:m_eq] if m_eq else None
    y_le = z[m_eq : m_eq + m_le] if m_le else None
    z_lo = -z[m_eq + m_le : m_eq + m_le + n]
    z_up = np.zeros(n)
    z_up[fin] = z[m_eq + m_le + n :]
    dual = float(z @ b)
    return LpSolution(Status.OPTIMAL, x, float(program.c @ x), y_eq, y_le, z_lo, z_up, dual)
