"""Discrete measures, labeled multi-domain data, and ground-cost matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, EmptyClassCell, InvalidMeasure, LabelOutOfRange

SIMPLEX_TOL = 1e-9


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure on R^d.

    Duplicate atoms are allowed and never merged.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise InvalidMeasure("points must be a nonempty (n, d) array")
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.shape[0] != pts.shape[0]:
            raise InvalidMeasure(f"{w.shape[0]} weights for {pts.shape[0]} points")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise InvalidMeasure("non-finite points or weights")
        if np.any(w < 0):
            raise InvalidMeasure("negative weight")
        if abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise InvalidMeasure(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        n = pts.shape[0]
        if n == 0:
            raise InvalidMeasure("points must be nonempty")
        return cls(pts, np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, point) -> "DiscreteMeasure":
        return cls(np.atleast_2d(np.asarray(point, dtype=np.float64)), np.ones(1))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def translate(self, v) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points + np.asarray(v, dtype=np.float64), self.weights)

    def scale(self, s: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points * s, self.weights)

    def canonical(self) -> "DiscreteMeasure":
        """Same measure with atoms sorted lexicographically (points, then weight)."""
        keys = [self.weights] + [self.points[:, j] for j in range(self.dim - 1, -1, -1)]
        order = np.lexsort(keys)
        return DiscreteMeasure(self.points[order], self.weights[order])

    def allclose(self, other: "DiscreteMeasure", atol: float = 1e-12) -> bool:
        """Equality up to atom reordering."""
        if self.size != other.size or self.dim != other.dim:
            return False
        a, b = self.canonical(), other.canonical()
        return bool(
            np.allclose(a.points, b.points, atol=atol, rtol=0)
            and np.allclose(a.weights, b.weights, atol=atol, rtol=0)
        )


@dataclass(frozen=True, eq=False)
class CostMatrix:
    entries: np.ndarray
    p: int = 2

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=np.float64)
        if c.ndim != 2:
            raise DimensionMismatch("cost matrix must be 2-D")
        if np.any(c < 0):
            raise ValueError("cost entries must be nonnegative")
        object.__setattr__(self, "entries", _frozen(c))

    @property
    def shape(self):
        return self.entries.shape


def _check_dims(A: DiscreteMeasure, B: DiscreteMeasure):
    if A.dim != B.dim:
        raise DimensionMismatch(f"dimension {A.dim} vs {B.dim}")


def squared_cost(A: DiscreteMeasure, B: DiscreteMeasure) -> CostMatrix:
    """Pairwise squared Euclidean distances between the supports of A and B."""
    _check_dims(A, B)
    return CostMatrix(cdist(A.points, B.points, metric="sqeuclidean"), p=2)


def euclidean_cost(A: DiscreteMeasure, B: DiscreteMeasure) -> CostMatrix:
    _check_dims(A, B)
    return CostMatrix(cdist(A.points, B.points, metric="euclidean"), p=1)


@dataclass(frozen=True, eq=False)
class ClassPriors:
    prior: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prior, dtype=np.float64).ravel()
        if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > SIMPLEX_TOL:
            raise InvalidMeasure(f"priors {p!r} are not on the simplex")
        object.__setattr__(self, "prior", _frozen(p))

    @classmethod
    def uniform(cls, K: int) -> "ClassPriors":
        return cls(np.full(K, 1.0 / K))

    @classmethod
    def from_counts(cls, counts) -> "ClassPriors":
        c = np.asarray(counts, dtype=np.float64)
        return cls(c / c.sum())

    @property
    def K(self) -> int:
        return self.prior.size


@dataclass(frozen=True, eq=False)
class MultiDomainDataset:
    """Labeled feature vectors grouped by domain.

    ``domains`` maps a domain id to ``(X, y)`` with ``X`` of shape (n, d) and
    integer labels ``y`` in ``1..K``. Domain order is preserved.
    """

    domains: Mapping[Hashable, tuple]
    K: int
    d: int = field(default=-1)

    def __post_init__(self):
        doms = {}
        d = self.d
        for dom, (X, y) in self.domains.items():
            X = np.asarray(X, dtype=np.float64)
            y = np.asarray(y, dtype=np.int64).ravel()
            if X.ndim != 2 or X.shape[0] != y.shape[0]:
                raise DimensionMismatch(f"domain {dom!r}: X shape {X.shape} vs {y.shape[0]} labels")
            if d < 0:
                d = X.shape[1]
            if X.shape[1] != d:
                raise DimensionMismatch(f"domain {dom!r} has dimension {X.shape[1]}, expected {d}")
            if y.size and (y.min() < 1 or y.max() > self.K):
                raise LabelOutOfRange(f"domain {dom!r}: labels must lie in 1..{self.K}")
            doms[dom] = (_frozen(X), y)
            y.setflags(write=False)
        object.__setattr__(self, "domains", doms)
        object.__setattr__(self, "d", d)

    @property
    def domain_ids(self) -> list:
        return list(self.domains)

    def cell(self, domain, k: int) -> np.ndarray:
        X, y = self.domains[domain]
        return X[y == k]

    def counts(self, domain) -> np.ndarray:
        _, y = self.domains[domain]
        return np.bincount(y, minlength=self.K + 1)[1:]

    def subset(self, domain_ids: Iterable) -> "MultiDomainDataset":
        return MultiDomainDataset({dom: self.domains[dom] for dom in domain_ids}, self.K, self.d)

    def pooled(self, domain_ids: Iterable | None = None):
        ids = self.domain_ids if domain_ids is None else list(domain_ids)
        X = np.concatenate([self.domains[dom][0] for dom in ids])
        y = np.concatenate([self.domains[dom][1] for dom in ids])
        return X, y


def empirical_class_conditional(dataset: MultiDomainDataset, domain, k: int) -> DiscreteMeasure:
    """Uniform measure over the class-``k`` samples of ``domain``."""
    if domain not in dataset.domains:
        raise KeyError(domain)
    X = dataset.cell(domain, k)
    if X.shape[0] == 0:
        raise EmptyClassCell(domain, k)
    return DiscreteMeasure.uniform(X)
