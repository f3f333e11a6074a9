"""Class-specific Wasserstein uncertainty sets and their overlap diagnostic."""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .barycenter import BarycenterConfig, BarycenterResult, default_support_size, free_support_barycenter
from .errors import DimensionMismatch, EmptyClassCell, EmptyInput
from .measures import DiscreteMeasure, MultiDomainDataset, empirical_class_conditional
from .ot import wasserstein2


@dataclass(frozen=True, eq=False)
class UncertaintySet:
    """Wasserstein ball of ``radius`` around the barycenter ``center`` for class ``k``."""

    k: int
    center: DiscreteMeasure
    radius: float
    barycenter: BarycenterResult | None = None

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if not np.allclose(self.center.weights, 1.0 / self.center.size, rtol=0, atol=1e-12):
            raise ValueError("center must have uniform weights")


@dataclass(frozen=True)
class OverlapRecord:
    class_i: int
    class_j: int
    radius_sum: float
    barycenter_w2: float
    overlapping: bool


def radius(center: DiscreteMeasure, sources: Sequence[DiscreteMeasure]) -> float:
    """Largest W2 distance from ``center`` to any of ``sources``."""
    if len(sources) == 0:
        raise EmptyInput("need at least one source measure")
    if any(s.dim != center.dim for s in sources):
        raise DimensionMismatch("source and center dimensions differ")
    return max(wasserstein2(center, s) for s in sources)


def class_sources(dataset: MultiDomainDataset, k: int) -> list:
    return [empirical_class_conditional(dataset, dom, k) for dom in dataset.domain_ids]


def build_sets(dataset: MultiDomainDataset, config: BarycenterConfig = BarycenterConfig()) -> list:
    """One uncertainty set per class from all domains of ``dataset`` (the sources).

    When ``config.b`` is None the support size is the median per-domain class
    count over the whole dataset, clamped to [2, 50], shared by all classes.
    """
    for dom in dataset.domain_ids:
        counts = dataset.counts(dom)
        for k in range(1, dataset.K + 1):
            if counts[k - 1] == 0:
                raise EmptyClassCell(dom, k)
    if config.b is None:
        counts = [c for dom in dataset.domain_ids for c in dataset.counts(dom)]
        config = dataclasses.replace(config, b=default_support_size(counts))

    sets = []
    for k in range(1, dataset.K + 1):
        cfg = config
        if isinstance(config.init_points, dict):
            cfg = dataclasses.replace(config, init_points=config.init_points[k])
        sources = class_sources(dataset, k)
        result = free_support_barycenter(sources, cfg)
        sets.append(UncertaintySet(k, result.measure, radius(result.measure, sources), result))
    return sets


def overlap_report(sets: Sequence[UncertaintySet]) -> list:
    """Compare radius sums against barycenter distances for every unordered class pair."""
    if len(sets) < 2:
        raise EmptyInput("need at least two uncertainty sets")
    records = []
    for si, sj in combinations(sets, 2):
        rsum = si.radius + sj.radius
        dist = wasserstein2(si.center, sj.center)
        records.append(OverlapRecord(si.k, sj.k, rsum, dist, bool(rsum > dist)))
    return records


OVERLAP_HEADER = ["class_i", "class_j", "radius_sum", "barycenter_w2", "overlapping"]


def write_overlap_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(OVERLAP_HEADER)
        for r in records:
            w.writerow([r.class_i, r.class_j, repr(r.radius_sum), repr(r.barycenter_w2), str(r.overlapping).lower()])
