"""Leave-one-domain-out experiments, the 1-NN baseline, and result tables."""

from __future__ import annotations

import csv
import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .barycenter import BarycenterConfig
from .data import (
    BARYCENTER_INIT,
    IMBALANCE,
    GeneratorSpec,
    Split,
    load_features,
    split_pool,
    subseed,
    substream,
    synthetic_split,
)
from .dro import solve_dro
from .errors import AllDeltasInfeasible, ConfigError, InfeasibleDelta
from .inference import predict_adaptive, predict_nonadaptive
from .measures import ClassPriors, MultiDomainDataset
from .ot import wasserstein2
from .uncertainty import build_sets, overlap_report

log = logging.getLogger(__name__)

WDRDG = "WDRDG"
WDRDG_NO_TTA = "WDRDG-noTTA"
KNN = "KNN"
METHODS = (WDRDG, WDRDG_NO_TTA, KNN)
DELTA_FRACTIONS = (0.25, 0.5, 0.75, 1.0)
IMBALANCED = "imbalanced"


@dataclass(frozen=True)
class ImbalanceSpec:
    """Per-(domain, class) training sizes: a fixed table, or drawn from ``[low, high)`` per trial."""

    low: int = 5
    high: int = 25
    table: Optional[tuple] = None

    def sizes(self, seed: int, trial: int, M: int, K: int) -> np.ndarray:
        if self.table is not None:
            t = np.asarray(self.table, dtype=np.int64)
            if t.shape != (M, K):
                raise ConfigError(f"imbalance.table must be {M}x{K}")
            return t
        return substream(seed, IMBALANCE, trial).integers(self.low, self.high, size=(M, K))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run the protocol; see ``configs/`` for the YAML form."""

    synthetic: Optional[GeneratorSpec] = None
    feature_files: Optional[tuple] = None
    K_files: Optional[int] = None
    train_sizes: tuple = (2, 3, 5, 7, 10, 15, 20, 25)
    val_per_class: int = 10
    test_per_class: int = 20
    trials: int = 5
    delta_grid: Optional[tuple] = None
    barycenter: BarycenterConfig = BarycenterConfig()
    priors: str = "uniform"
    methods: tuple = (WDRDG,)
    imbalance: Optional[ImbalanceSpec] = None
    targets: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        if (self.synthetic is None) == (self.feature_files is None):
            raise ConfigError("data: give exactly one of synthetic or files")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if min(self.train_sizes, default=0) < 1 or self.val_per_class < 1 or self.test_per_class < 1:
            raise ConfigError("train_sizes, val_per_class and test_per_class must be >= 1")
        if self.delta_grid is not None and (len(self.delta_grid) == 0 or min(self.delta_grid) < 0):
            raise ConfigError("delta_grid values must be >= 0")
        if self.priors not in ("uniform", "empirical"):
            raise ConfigError("priors must be 'uniform' or 'empirical'")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ConfigError(f"methods must be drawn from {METHODS}, got {sorted(unknown)}")


# -------------------------------------------------------------------- data


class _Source:
    """Resolves per-trial splits for synthetic or file-backed configs."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        if config.synthetic is not None:
            self.pool = None
            self.ids = config.synthetic.ids
            self.K = config.synthetic.K
        else:
            self.pool = load_features(list(config.feature_files), K=config.K_files)
            self.ids = self.pool.domain_ids
            self.K = self.pool.K
        if len(self.ids) < 2:
            raise ConfigError("leave-one-domain-out needs at least two domains")

    def split(self, trial: int, train_sizes) -> Split:
        c = self.config
        if self.pool is None:
            return synthetic_split(c.synthetic, train_sizes, c.val_per_class, c.test_per_class, c.seed, trial)
        return split_pool(self.pool, train_sizes, c.val_per_class, c.test_per_class, c.seed, trial)


# ---------------------------------------------------------------- protocol


def default_delta_grid(sets) -> list:
    """``{0}`` plus fractions of the smallest W2 distance between class barycenters."""
    sep = min(wasserstein2(a.center, b.center) for a, b in combinations(sets, 2)) if len(sets) > 1 else 0.0
    return sorted({0.0, *(q * sep for q in DELTA_FRACTIONS)})


def resolve_priors(mode: str, train: MultiDomainDataset) -> ClassPriors:
    if mode == "uniform":
        return ClassPriors.uniform(train.K)
    _, y = train.pooled()
    return ClassPriors.from_counts(np.bincount(y, minlength=train.K + 1)[1:])


def accuracy(labels, truth) -> float:
    return float(np.mean(np.asarray(labels) == np.asarray(truth)))


def nearest_neighbor_labels(X_train, y_train, X) -> np.ndarray:
    """1-NN under Euclidean distance; ties go to the earliest training sample."""
    return np.asarray(y_train)[np.argmin(cdist(X, X_train, metric="sqeuclidean"), axis=1)]


@dataclass(frozen=True)
class FitResult:
    model: object
    sets: list
    delta: float
    validation: tuple  # (delta, accuracy or None if infeasible) per grid point


def fit_wdrdg(train: MultiDomainDataset, val: MultiDomainDataset, config: ExperimentConfig, bary: BarycenterConfig) -> FitResult:
    """Build uncertainty sets on ``train`` and select delta by accuracy on ``val``."""
    sets = build_sets(train, bary)
    priors = resolve_priors(config.priors, train)
    grid = sorted(config.delta_grid) if config.delta_grid is not None else default_delta_grid(sets)
    X_val, y_val = val.pooled()
    best = None
    table = []
    for delta in grid:
        try:
            model = solve_dro(sets, priors, delta)
        except InfeasibleDelta:
            log.info("delta=%.6g infeasible, skipped", delta)
            table.append((delta, None))
            continue
        acc = accuracy([p.label for p in predict_adaptive(model, X_val)], y_val)
        table.append((delta, acc))
        if best is None or acc > best[0]:
            best = (acc, delta, model)
    if best is None:
        raise AllDeltasInfeasible(f"every delta in {grid} is infeasible")
    return FitResult(best[2], sets, best[1], tuple(table))


@dataclass(frozen=True)
class UnitResult:
    target: str
    size: object
    trial: int
    accuracies: dict
    delta: Optional[float]
    validation: tuple = ()


def _run_unit(args) -> UnitResult:
    config, target_idx, size, trial = args
    source = _Source(config)
    target = source.ids[target_idx]
    sources = [dom for dom in source.ids if dom != target]
    M, K = len(source.ids), source.K
    if size == IMBALANCED:
        train_sizes = config.imbalance.sizes(config.seed, trial, M, K)
    else:
        train_sizes = size
    split = source.split(trial, train_sizes)
    train = split.train.subset(sources)
    X_test, y_test = split.test.pooled([target])
    accs = {}
    delta = None
    validation = ()
    if WDRDG in config.methods or WDRDG_NO_TTA in config.methods:
        bary = dataclasses.replace(config.barycenter, seed=subseed(config.seed, BARYCENTER_INIT, trial, target_idx))
        fit = fit_wdrdg(train, split.val.subset(sources), config, bary)
        delta, validation = fit.delta, fit.validation
        log.info("target=%s size=%s trial=%d: delta=%.6g objective=%.6f", target, size, trial, delta, fit.model.objective)
        if WDRDG in config.methods:
            accs[WDRDG] = accuracy([p.label for p in predict_adaptive(fit.model, X_test)], y_test)
        if WDRDG_NO_TTA in config.methods:
            accs[WDRDG_NO_TTA] = accuracy([p.label for p in predict_nonadaptive(fit.model, X_test)], y_test)
    if KNN in config.methods:
        X_tr, y_tr = train.pooled()
        accs[KNN] = accuracy(nearest_neighbor_labels(X_tr, y_tr, X_test), y_test)
    return UnitResult(target, size, trial, accs, delta, validation)


@dataclass(frozen=True)
class ResultRow:
    target_domain: str
    method: str
    train_size_per_class: object
    trial: int
    accuracy: float


@dataclass
class ExperimentResult:
    rows: list
    units: list = field(default_factory=list)

    def mean(self, method: str, target=None, size=None) -> float:
        vals = [
            r.accuracy
            for r in self.rows
            if r.method == method
            and (target is None or r.target_domain == target)
            and (size is None or r.train_size_per_class == size)
        ]
        return float(np.mean(vals))


def run_protocol(config: ExperimentConfig, methods: Optional[Sequence[str]] = None, jobs: int = 1) -> ExperimentResult:
    """Run every (held-out target, training size, trial) unit and collect accuracy rows."""
    if methods is not None:
        config = dataclasses.replace(config, methods=tuple(methods))
    source = _Source(config)
    targets = list(source.ids) if config.targets is None else list(config.targets)
    missing = set(targets) - set(source.ids)
    if missing:
        raise ConfigError(f"unknown target domains {sorted(missing)}")
    sizes = [IMBALANCED] if config.imbalance is not None else list(config.train_sizes)
    units = [
        (config, source.ids.index(t), size, trial)
        for t in targets
        for size in sizes
        for trial in range(config.trials)
    ]
    log.info("running %d units (%d targets x %d sizes x %d trials), jobs=%d", len(units), len(targets), len(sizes), config.trials, jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_unit, units))
    else:
        results = [_run_unit(u) for u in units]
    rows = [
        ResultRow(u.target, m, u.size, u.trial, u.accuracies[m])
        for u in results
        for m in METHODS
        if m in u.accuracies
    ]
    return ExperimentResult(rows, results)


def leave_one_domain_out(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    return run_protocol(config, (WDRDG,), jobs)


def knn_baseline(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    return run_protocol(config, (KNN,), jobs)


def ablation_tta(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Same trained models scored with and without test-time adaptation."""
    return run_protocol(config, (WDRDG_NO_TTA, WDRDG), jobs)


def paired_ablation(result: ExperimentResult) -> list:
    """(target, size, mean without TTA, mean with TTA, difference) per target and size."""
    out = []
    keys = sorted({(r.target_domain, r.train_size_per_class) for r in result.rows}, key=lambda k: (str(k[0]), str(k[1])))
    for target, size in keys:
        no = result.mean(WDRDG_NO_TTA, target, size)
        yes = result.mean(WDRDG, target, size)
        out.append((target, size, no, yes, yes - no))
    return out


def imbalance_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    if config.imbalance is None:
        raise ConfigError("imbalance experiment needs an imbalance section")
    return run_protocol(config, None, jobs)


def training_data_for_config(config: ExperimentConfig, trial: int = 0) -> MultiDomainDataset:
    """Training split of one trial over all domains, at the largest configured size."""
    source = _Source(config)
    M, K = len(source.ids), source.K
    if config.imbalance is not None:
        sizes = config.imbalance.sizes(config.seed, trial, M, K)
    else:
        sizes = max(config.train_sizes)
    return source.split(trial, sizes).train


def sets_for_config(config: ExperimentConfig, trial: int = 0) -> list:
    """Uncertainty sets built on :func:`training_data_for_config`."""
    train = training_data_for_config(config, trial)
    M = len(train.domain_ids)
    bary = dataclasses.replace(config.barycenter, seed=subseed(config.seed, BARYCENTER_INIT, trial, M))
    return build_sets(train, bary)


def overlap_for_config(config: ExperimentConfig, trial: int = 0):
    return overlap_report(sets_for_config(config, trial))


# ------------------------------------------------------------------ output

RESULT_HEADER = ["target_domain", "method", "train_size_per_class", "trial", "accuracy"]
AGGREGATE_HEADER = ["target_domain", "method", "train_size_per_class", "n_trials", "mean", "std"]
AVERAGE = "Average"


def aggregate(rows: Sequence[ResultRow]) -> list:
    """Mean and (population) std over trials per (target, method, size).

    ``Average`` rows average over targets within each trial first, then over trials.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.target_domain, r.method, r.train_size_per_class), {})[r.trial] = r.accuracy
    out = []
    for (t, m, s), accs in groups.items():
        v = np.array([accs[k] for k in sorted(accs)])
        out.append((t, m, s, v.size, float(v.mean()), float(v.std())))
    cross: dict = {}
    for (t, m, s), accs in groups.items():
        for trial, a in accs.items():
            cross.setdefault((m, s), {}).setdefault(trial, []).append(a)
    for (m, s), per_trial in cross.items():
        v = np.array([np.mean(per_trial[k]) for k in sorted(per_trial)])
        out.append((AVERAGE, m, s, v.size, float(v.mean()), float(v.std())))
    return out


def write_results_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow([r.target_domain, r.method, r.train_size_per_class, r.trial, repr(r.accuracy)])


def write_aggregate_csv(agg, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AGGREGATE_HEADER)
        for t, m, s, n, mean, std in agg:
            w.writerow([t, m, s, n, repr(mean), repr(std)])
