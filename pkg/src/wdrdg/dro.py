"""Least favorable distributions over the pooled barycenter support.

The robust program is a linear program in the LFD mass vectors ``P_k``, the
couplings ``gamma_k`` (barycenter ``B_k`` to ``P_k``) and ``beta_uv``
(``P_u`` to ``P_v``). The ``sum_i max_k prior_k P_k(i)`` term is linearized with
one epigraph variable ``t_i`` per support atom::

    maximize    1 - sum_i t_i
    subject to  t_i >= prior_k * P_k(i)                 for all i, k
                <gamma_k, C> <= theta_k^2,   gamma_k 1 = B_k,   gamma_k^T 1 = P_k
                <beta_uv, C> >= delta^2,     beta_uv 1 = P_u,   beta_uv^T 1 = P_v
                all variables >= 0
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, EmptyInput, InfeasibleDelta, NumericalFailure
from .lp import LinearProgram, Status, solve_lp
from .measures import ClassPriors, CostMatrix, DiscreteMeasure
from .ot import wasserstein2

ZERO_MASS = 1e-12
# scores within this relative gap of the maximum count as tied; absorbs LP
# solver noise and ties created by rounding during normalization
TIE_RTOL = 1e-9


def tied_argmax(scores) -> tuple:
    """Smallest index (1-based) within ``TIE_RTOL`` of the maximum, and whether it is shared."""
    scores = np.asarray(scores)
    top = scores.max()
    near = np.flatnonzero(scores >= top - TIE_RTOL * abs(top))
    return int(near[0]) + 1, bool(near.size > 1)


@dataclass(frozen=True, eq=False)
class PooledSupport:
    """Union of the class barycenter supports, in class-blocked order."""

    points: np.ndarray
    origin: np.ndarray
    cost: CostMatrix

    @classmethod
    def from_sets(cls, sets) -> "PooledSupport":
        points = np.concatenate([s.center.points for s in sets])
        origin = np.concatenate([np.full(s.center.size, s.k, dtype=np.int64) for s in sets])
        return cls(points, origin, CostMatrix(cdist(points, points, metric="sqeuclidean")))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class _Layout:
    K: int
    n: int

    @property
    def pairs(self) -> list:
        return list(combinations(range(self.K), 2))

    @property
    def off_gamma(self) -> int:
        return self.K * self.n

    @property
    def off_beta(self) -> int:
        return self.off_gamma + self.K * self.n * self.n

    @property
    def off_t(self) -> int:
        return self.off_beta + len(self.pairs) * self.n * self.n

    @property
    def n_vars(self) -> int:
        return self.off_t + self.n

    def P(self, k):
        return self.n * k + np.arange(self.n)

    def gamma(self, k):
        return self.off_gamma + k * self.n * self.n

    def beta(self, q):
        return self.off_beta + q * self.n * self.n


def _embedded_centers(sets, n: int) -> np.ndarray:
    B = np.zeros((len(sets), n))
    start = 0
    for k, s in enumerate(sets):
        B[k, start : start + s.center.size] = s.center.weights
        start += s.center.size
    return B


def _coupling_blocks(n: int):
    """Row-sum and column-sum operators on a row-major flattened n x n matrix."""
    rows = sp.kron(sp.identity(n), np.ones((1, n)), format="csr")
    cols = sp.kron(np.ones((1, n)), sp.identity(n), format="csr")
    return rows, cols


def _validate(sets, priors: ClassPriors, delta: float):
    if len(sets) == 0:
        raise EmptyInput("need at least one uncertainty set")
    if priors.K != len(sets):
        raise DimensionMismatch(f"{priors.K} priors for {len(sets)} classes")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if len({s.center.dim for s in sets}) != 1:
        raise DimensionMismatch("uncertainty set centers differ in dimension")


def assemble_program(sets: Sequence, priors: ClassPriors, delta: float, support: Optional[PooledSupport] = None) -> LinearProgram:
    """Build the robust linear program for the given uncertainty sets.

    The returned program maximizes ``-sum_i t_i``; the robust objective is one
    plus its optimal value.
    """
    _validate(sets, priors, delta)
    support = support or PooledSupport.from_sets(sets)
    K, n = len(sets), support.n
    L = _Layout(K, n)
    C = support.cost.entries.ravel()
    Bemb = _embedded_centers(sets, n)
    rows, cols = _coupling_blocks(n)
    nn = n * n

    def block(col_start, width, mat):
        """Place ``mat`` into a matrix spanning all variables."""
        mat = sp.csr_matrix(mat)
        left = sp.csr_matrix((mat.shape[0], col_start))
        right = sp.csr_matrix((mat.shape[0], L.n_vars - col_start - width))
        return sp.hstack([left, mat, right], format="csr")

    eye = sp.identity(n, format="csr")
    eq_rows, eq_rhs = [], []
    le_rows, le_rhs = [], []

    for k, s in enumerate(sets):
        g = L.gamma(k)
        le_rows.append(block(g, nn, C[None, :]))
        le_rhs.append([s.radius**2])
        eq_rows.append(block(g, nn, rows))
        eq_rhs.append(Bemb[k])
        eq_rows.append(block(g, nn, cols) - block(L.P(k)[0], n, eye))
        eq_rhs.append(np.zeros(n))
        # epigraph: prior_k * P_k(i) - t_i <= 0
        le_rows.append(block(L.P(k)[0], n, priors.prior[k] * eye) - block(L.off_t, n, eye))
        le_rhs.append(np.zeros(n))

    for q, (u, v) in enumerate(L.pairs):
        bq = L.beta(q)
        le_rows.append(block(bq, nn, -C[None, :]))
        le_rhs.append([-(delta**2)])
        eq_rows.append(block(bq, nn, rows) - block(L.P(u)[0], n, eye))
        eq_rhs.append(np.zeros(n))
        eq_rows.append(block(bq, nn, cols) - block(L.P(v)[0], n, eye))
        eq_rhs.append(np.zeros(n))

    c = np.zeros(L.n_vars)
    c[L.off_t :] = -1.0
    return LinearProgram(
        c,
        A_eq=sp.vstack(eq_rows, format="csr"),
        b_eq=np.concatenate(eq_rhs),
        A_le=sp.vstack(le_rows, format="csr"),
        b_le=np.concatenate([np.asarray(r, dtype=float) for r in le_rhs]),
        maximize=True,
    )


def prediction_table(lfds: np.ndarray):
    """Per-atom class likelihoods ``P_k(i) / sum_k P_k(i)``.

    Atoms carrying no LFD mass get the uniform row and are flagged.
    """
    K = lfds.shape[0]
    totals = lfds.sum(axis=0)
    degenerate = totals <= ZERO_MASS
    phi = np.full((lfds.shape[1], K), 1.0 / K)
    ok = ~degenerate
    phi[ok] = (lfds[:, ok] / totals[ok]).T
    return phi, degenerate


def robust_objective(lfds: np.ndarray, prior: np.ndarray) -> float:
    return float(1.0 - np.sum(np.max(prior[:, None] * lfds, axis=0)))


@dataclass(frozen=True, eq=False)
class DroSolution:
    """Solved robust program; also the trained model used for inference.

    ``gammas`` and ``betas`` are absent on models read back from JSON.
    """

    support: PooledSupport
    lfds: np.ndarray
    phi: np.ndarray
    degenerate: np.ndarray
    objective: float
    priors: np.ndarray
    delta: float
    radii: np.ndarray
    gammas: Optional[np.ndarray] = None
    betas: Optional[dict] = None

    @property
    def K(self) -> int:
        return self.lfds.shape[0]

    def lfd_measure(self, k: int) -> DiscreteMeasure:
        """LFD of class ``k`` (1-based) as a measure on its nonzero atoms."""
        w = self.lfds[k - 1]
        keep = w > 0
        return DiscreteMeasure(self.support.points[keep], w[keep])

    def atom_labels(self) -> np.ndarray:
        """Hard label per support atom; ties go to the smallest class index."""
        return np.array([tied_argmax(col)[0] for col in self.lfds.T])

    def to_dict(self) -> dict:
        return {
            "format": "wdrdg-model/1",
            "K": self.K,
            "support_points": self.support.points.tolist(),
            "support_class": self.support.origin.tolist(),
            "lfds": self.lfds.tolist(),
            "phi": self.phi.tolist(),
            "degenerate_rows": np.flatnonzero(self.degenerate).tolist(),
            "objective": self.objective,
            "delta": self.delta,
            "radii": self.radii.tolist(),
            "priors": self.priors.tolist(),
        }

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_dict(cls, data: dict) -> "DroSolution":
        points = np.asarray(data["support_points"], dtype=np.float64)
        support = PooledSupport(
            points,
            np.asarray(data["support_class"], dtype=np.int64),
            CostMatrix(cdist(points, points, metric="sqeuclidean")),
        )
        lfds = np.asarray(data["lfds"], dtype=np.float64)
        degenerate = np.zeros(points.shape[0], dtype=bool)
        degenerate[np.asarray(data.get("degenerate_rows", []), dtype=np.int64)] = True
        if lfds.shape != (int(data["K"]), points.shape[0]):
            raise DimensionMismatch("lfds do not match the support")
        return cls(
            support,
            lfds,
            np.asarray(data["phi"], dtype=np.float64),
            degenerate,
            float(data["objective"]),
            np.asarray(data["priors"], dtype=np.float64),
            float(data["delta"]),
            np.asarray(data["radii"], dtype=np.float64),
        )

    @classmethod
    def from_json(cls, path) -> "DroSolution":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def solve_dro(sets: Sequence, priors: ClassPriors, delta: float, method: str = "interior") -> DroSolution:
    """Solve the robust program for the least favorable distributions.

    The optimum is rarely unique. ``method="interior"`` (default) returns LFDs
    from the relative interior of the optimal face, spreading mass over every
    atom that can carry it; ``method="simplex"`` returns a sparse vertex.

    Raises
    ------
    InfeasibleDelta
        No LFDs satisfy the pairwise coupling-cost constraints at this ``delta``.
    NumericalFailure
        The LP solver failed, or the returned point violates a constraint by
        more than 1e-6 (see :func:`certify`).
    """
    support = PooledSupport.from_sets(sets)
    program = assemble_program(sets, priors, delta, support)
    sol = solve_lp(program, method)
    if sol.status is Status.INFEASIBLE:
        raise InfeasibleDelta(delta)
    if sol.status is not Status.OPTIMAL:
        raise NumericalFailure(f"robust program reported {sol.status.value}")

    K, n = len(sets), support.n
    L = _Layout(K, n)
    x = sol.x
    lfds = x[: K * n].reshape(K, n)
    gammas = x[L.off_gamma : L.off_beta].reshape(K, n, n)
    betas = {
        (u + 1, v + 1): x[L.beta(q) : L.beta(q) + n * n].reshape(n, n)
        for q, (u, v) in enumerate(L.pairs)
    }
    objective = robust_objective(lfds, priors.prior)
    if abs(objective - (1.0 + sol.objective)) > 1e-6:
        raise NumericalFailure("epigraph variables disagree with the LFD objective")
    phi, degenerate = prediction_table(lfds)
    solution = DroSolution(
        support,
        lfds,
        phi,
        degenerate,
        objective,
        priors.prior.copy(),
        float(delta),
        np.array([s.radius for s in sets]),
        gammas,
        betas,
    )
    report = certify(solution)
    if not report["ok"]:
        raise NumericalFailure(f"solution fails certification: {report}")
    return solution


@dataclass(frozen=True)
class DiscriminabilityRecord:
    u: int
    v: int
    w2: float
    delta: float
    satisfied: bool


def lfd_discriminability_check(solution: DroSolution) -> list:
    """Exact W2 between every LFD pair against the threshold ``delta``.

    The program only asks for *some* coupling with cost at least delta^2, so the
    optimal-transport distance can fall below delta; this reports where it does.
    """
    out = []
    for u, v in combinations(range(1, solution.K + 1), 2):
        w2 = wasserstein2(solution.lfd_measure(u), solution.lfd_measure(v))
        out.append(DiscriminabilityRecord(u, v, w2, solution.delta, bool(w2 >= solution.delta)))
    return out


def certify(solution: DroSolution, tol: float = 1e-6) -> dict:
    """Largest violation of each constraint family of a solved program."""
    if solution.gammas is None:
        raise ValueError("solution carries no couplings")
    C = solution.support.cost.entries
    n = solution.support.n
    Bemb = np.zeros((solution.K, n))
    for k in range(solution.K):
        mask = solution.support.origin == k + 1
        Bemb[k, mask] = 1.0 / mask.sum()
    P = solution.lfds
    report = {
        "lfd_simplex": float(max(np.max(np.abs(P.sum(1) - 1.0)), -P.min())),
        "gamma_cost": max(float(np.sum(g * C)) - r**2 for g, r in zip(solution.gammas, solution.radii)),
        "gamma_marginals": max(
            max(np.max(np.abs(g.sum(1) - Bemb[k])), np.max(np.abs(g.sum(0) - P[k])))
            for k, g in enumerate(solution.gammas)
        ),
        "beta_cost": max((solution.delta**2 - float(np.sum(b * C)) for b in solution.betas.values()), default=0.0),
        "beta_marginals": max(
            (
                max(np.max(np.abs(b.sum(1) - P[u - 1])), np.max(np.abs(b.sum(0) - P[v - 1])))
                for (u, v), b in solution.betas.items()
            ),
            default=0.0,
        ),
        "nonnegative": float(-min(solution.gammas.min(), min((b.min() for b in solution.betas.values()), default=0.0))),
    }
    report["ok"] = all(val <= tol for val in report.values())
    return report
