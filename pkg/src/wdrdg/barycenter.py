"""Free-support Wasserstein-2 barycenters with uniform atom weights."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.cluster.vq import kmeans2

from .errors import DimensionMismatch, EmptyInput
from .measures import DiscreteMeasure, squared_cost
from .ot import optimal_coupling

log = logging.getLogger(__name__)

POOLED_SUBSAMPLE = "pooled_subsample"
KMEANS_LIKE = "kmeans"
PROVIDED_POINTS = "provided"
INIT_STRATEGIES = (POOLED_SUBSAMPLE, KMEANS_LIKE, PROVIDED_POINTS)


@dataclass(frozen=True)
class BarycenterConfig:
    """Settings for :func:`free_support_barycenter`.

    ``b=None`` defers the support size to the caller (see :func:`default_support_size`).
    ``init_points`` is used with ``init="provided"``; either one (b, d) array or a
    mapping from class label to such arrays when building per-class sets.
    """

    b: Optional[int] = None
    max_iters: int = 100
    tol: float = 1e-7
    init: str = POOLED_SUBSAMPLE
    seed: int = 0
    init_points: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.b is not None and self.b < 1:
            raise ValueError("b must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init not in INIT_STRATEGIES:
            raise ValueError(f"unknown init {self.init!r}; expected one of {INIT_STRATEGIES}")


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    measure: DiscreteMeasure
    objective: float
    iterations: int
    converged: bool
    history: tuple = ()


def default_support_size(counts) -> int:
    """Median per-domain class sample count, clamped to [2, 50]."""
    return int(np.clip(int(np.median(np.asarray(counts))), 2, 50))


def _canonical_order(measures: Sequence[DiscreteMeasure]) -> list:
    def key(m):
        c = m.canonical()
        return (c.size, c.points.tobytes(), c.weights.tobytes())

    return sorted(measures, key=key)


def _initial_points(measures, b: int, config: BarycenterConfig) -> np.ndarray:
    if config.init == PROVIDED_POINTS:
        if config.init_points is None:
            raise ValueError("init='provided' requires init_points")
        pts = np.array(config.init_points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape != (b, measures[0].dim):
            raise DimensionMismatch(f"init_points shape {pts.shape}, expected {(b, measures[0].dim)}")
        return pts
    pooled = np.concatenate([m.points for m in measures])
    # sort the pool so the draw does not depend on the order of the inputs
    pooled = pooled[np.lexsort(pooled.T[::-1])]
    rng = np.random.default_rng(config.seed)
    if config.init == POOLED_SUBSAMPLE:
        idx = rng.choice(pooled.shape[0], size=b, replace=b > pooled.shape[0])
        return pooled[np.sort(idx)].copy()
    distinct = np.unique(pooled, axis=0)
    if distinct.shape[0] <= b:
        # k-means++ is undefined with fewer distinct points than centers
        return distinct[np.arange(b) % distinct.shape[0]].copy()
    centroids, _ = kmeans2(pooled, b, minit="++", seed=rng, iter=20)
    return centroids


def _objective(points: np.ndarray, measures) -> tuple:
    B = DiscreteMeasure.uniform(points)
    plans, dists = [], []
    for Q in measures:
        coupling, cost = optimal_coupling(B, Q, squared_cost(B, Q))
        plans.append(coupling.plan)
        dists.append(np.sqrt(cost))
    return float(np.mean(dists)), plans


def free_support_barycenter(
    measures: Sequence[DiscreteMeasure], config: BarycenterConfig = BarycenterConfig()
) -> BarycenterResult:
    """Equal-weight W2 barycenter of ``measures`` supported on ``b`` uniform atoms.

    Alternates exact couplings from the current barycenter to every input with
    the location update ``x_i <- mean_r  b * plan_r[i] @ support_r``. The
    reported objective is the mean (unsquared) W2 distance to the inputs. A step
    that would increase it is rejected and the iteration stops, so the recorded
    objective sequence is non-increasing.
    """
    if len(measures) == 0:
        raise EmptyInput("need at least one measure")
    d = measures[0].dim
    if any(m.dim != d for m in measures):
        raise DimensionMismatch("input measures differ in dimension")
    measures = _canonical_order(measures)
    b = config.b if config.b is not None else default_support_size([m.size for m in measures])

    x = _initial_points(measures, b, config)
    obj, plans = _objective(x, measures)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        x_new = np.mean([b * (plan @ Q.points) for plan, Q in zip(plans, measures)], axis=0)
        obj_new, plans_new = _objective(x_new, measures)
        if obj_new > obj:
            log.debug("barycenter step %d rejected: %.3g -> %.3g", it, obj, obj_new)
            converged = True
            break
        decrease = obj - obj_new
        x, obj, plans = x_new, obj_new, plans_new
        history.append(obj)
        if obj == 0.0 or decrease <= config.tol * (obj + decrease):
            converged = True
            break
    return BarycenterResult(DiscreteMeasure.uniform(x), obj, it, converged, tuple(history))
