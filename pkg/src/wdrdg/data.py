"""Synthetic multi-domain Gaussian data and feature-file ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, LabelOutOfRange, ParseError
from .measures import MultiDomainDataset

# named random sub-streams
DATAGEN, SPLIT, BARYCENTER_INIT, IMBALANCE = 1, 2, 3, 4


def substream(seed: int, stream: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), *map(int, keys)))
    return np.random.default_rng(ss)


def subseed(seed: int, stream: int, *keys: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), *map(int, keys)))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def rotation(angle_deg: float, d: int, plane=(0, 1)) -> np.ndarray:
    R = np.eye(d)
    a = math.radians(angle_deg)
    i, j = plane
    R[i, i] = R[j, j] = math.cos(a)
    R[i, j], R[j, i] = -math.sin(a), math.sin(a)
    return R


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """Isotropic Gaussian class-conditionals per domain with a domain-shift operator.

    ``class_means`` is (K, d) shared by every domain, or (M, K, d) per domain.
    ``scale`` is the per-coordinate standard deviation: a scalar or an (M, K) table.
    Domain ``m`` has its means translated by ``m * translation`` or rotated by
    ``m * angle_deg`` in the plane of the first two coordinates.
    """

    class_means: np.ndarray
    n_domains: int
    scale: object = 1.0
    shift: str = "none"
    translation: Optional[np.ndarray] = None
    angle_deg: float = 0.0
    domain_ids: Optional[Sequence[str]] = None
    seed: int = 0

    def __post_init__(self):
        means = np.asarray(self.class_means, dtype=np.float64)
        if means.ndim == 2:
            means = np.broadcast_to(means, (self.n_domains,) + means.shape)
        if means.ndim != 3 or means.shape[0] != self.n_domains:
            raise ConfigError("class_means must be (K, d) or (n_domains, K, d)")
        object.__setattr__(self, "class_means", np.array(means))
        scale = np.broadcast_to(np.asarray(self.scale, dtype=np.float64), means.shape[:2]).copy()
        if np.any(scale <= 0):
            raise ConfigError("scale must be positive")
        object.__setattr__(self, "scale", scale)
        if self.shift not in ("none", "translation", "rotation"):
            raise ConfigError(f"unknown shift {self.shift!r}")
        if self.shift == "translation":
            if self.translation is None or np.asarray(self.translation).shape != (means.shape[2],):
                raise ConfigError("translation shift needs a length-d translation vector")
        if self.shift == "rotation" and means.shape[2] < 2:
            raise ConfigError("rotation shift needs d >= 2")
        if self.domain_ids is not None and len(self.domain_ids) != self.n_domains:
            raise ConfigError("domain_ids length must equal n_domains")

    @property
    def K(self) -> int:
        return self.class_means.shape[1]

    @property
    def d(self) -> int:
        return self.class_means.shape[2]

    @property
    def ids(self) -> list:
        if self.domain_ids is not None:
            return [str(x) for x in self.domain_ids]
        if self.shift == "rotation":
            return [f"r{m * self.angle_deg:g}" for m in range(self.n_domains)]
        return [f"D{m}" for m in range(self.n_domains)]

    def domain_means(self, m: int) -> np.ndarray:
        mu = self.class_means[m]
        if self.shift == "translation":
            return mu + m * np.asarray(self.translation, dtype=np.float64)
        if self.shift == "rotation":
            return mu @ rotation(m * self.angle_deg, self.d).T
        return mu.copy()


def _size_table(sizes, M: int, K: int) -> np.ndarray:
    table = np.broadcast_to(np.asarray(sizes, dtype=np.int64), (M, K))
    if np.any(table < 0):
        raise ConfigError("sample sizes must be nonnegative")
    return table


def sample_cell(spec: GeneratorSpec, m: int, k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    mean = spec.domain_means(m)[k - 1]
    return mean + spec.scale[m, k - 1] * rng.standard_normal((n, spec.d))


def generate_synthetic(spec: GeneratorSpec, sizes, seed: Optional[int] = None, stream: int = 0) -> MultiDomainDataset:
    """Draw ``sizes[m][k]`` samples for every (domain, class) cell.

    Each cell uses its own random stream, so the first ``n`` samples of a cell do
    not depend on the sizes of other cells or on how many samples follow.
    """
    seed = spec.seed if seed is None else seed
    table = _size_table(sizes, spec.n_domains, spec.K)
    domains = {}
    for m, dom in enumerate(spec.ids):
        Xs, ys = [], []
        for k in range(1, spec.K + 1):
            rng = substream(seed, DATAGEN, stream, m, k)
            Xs.append(sample_cell(spec, m, k, int(table[m, k - 1]), rng))
            ys.append(np.full(int(table[m, k - 1]), k))
        domains[dom] = (np.concatenate(Xs), np.concatenate(ys))
    return MultiDomainDataset(domains, spec.K, spec.d)


# ---------------------------------------------------------------- CSV files


def _read_rows(path: Path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header[:2] != ["domain", "label"] or len(header) < 3:
            raise ParseError(f"{path}: header must start with domain,label,f0,...")
        expected = [f"f{j}" for j in range(len(header) - 2)]
        if header[2:] != expected:
            raise ParseError(f"{path}: feature columns must be named f0..f{len(header) - 3}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            yield lineno, row, len(header) - 2


def load_features(paths, K: Optional[int] = None, require_labels: bool = True) -> MultiDomainDataset:
    """Read feature CSVs (``domain,label,f0,...``) into a dataset.

    Rows are grouped by their ``domain`` column in first-seen order. When ``K``
    is omitted it is the largest label present. With ``require_labels=False``
    an empty label cell is read as 0 (used for unlabeled target batches).
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    rows: dict = {}
    d = None
    for path in map(Path, paths):
        for lineno, row, width in _read_rows(path):
            if d is None:
                d = width
            elif width != d:
                raise ParseError(f"{path}: {width} features, earlier files have {d}")
            dom = row[0].strip()
            raw_label = row[1].strip()
            try:
                label = int(raw_label) if raw_label or require_labels else 0
            except ValueError:
                raise ParseError(f"{path}:{lineno}: label {raw_label!r} is not an integer") from None
            try:
                feats = [float(v) for v in row[2:]]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric feature value") from None
            if not all(math.isfinite(v) for v in feats):
                raise ParseError(f"{path}:{lineno}: non-finite feature value")
            if require_labels and label < 1:
                raise LabelOutOfRange(f"{path}:{lineno}: label {label} (labels are 1-based)")
            if K is not None and label > K:
                raise LabelOutOfRange(f"{path}:{lineno}: label {label} exceeds K={K}")
            rows.setdefault(dom, ([], []))
            rows[dom][0].append(feats)
            rows[dom][1].append(label)
    if d is None:
        raise ParseError("no samples in input files")
    if K is None:
        K = max(max(ls) for _, ls in rows.values())
    domains = {dom: (np.asarray(X, dtype=np.float64).reshape(-1, d), np.asarray(y)) for dom, (X, y) in rows.items()}
    if not require_labels:
        return _Unlabeled(domains, K, d)
    return MultiDomainDataset(domains, K, d)


@dataclass(frozen=True, eq=False)
class _Unlabeled:
    domains: dict
    K: int
    d: int

    def features(self) -> np.ndarray:
        return np.concatenate([X for X, _ in self.domains.values()])

    def labels(self) -> np.ndarray:
        return np.concatenate([y for _, y in self.domains.values()])


def write_features_csv(dataset: MultiDomainDataset, path, domain_ids=None) -> None:
    ids = dataset.domain_ids if domain_ids is None else domain_ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["domain", "label"] + [f"f{j}" for j in range(dataset.d)])
        for dom in ids:
            X, y = dataset.domains[dom]
            for x, lab in zip(X, y):
                w.writerow([dom, int(lab)] + [repr(float(v)) for v in x])


@dataclass(frozen=True)
class Split:
    train: MultiDomainDataset
    val: MultiDomainDataset
    test: MultiDomainDataset


def _take(dataset: MultiDomainDataset, picks: dict) -> MultiDomainDataset:
    doms = {}
    for dom, idx in picks.items():
        X, y = dataset.domains[dom]
        doms[dom] = (X[idx], y[idx])
    return MultiDomainDataset(doms, dataset.K, dataset.d)


def split_pool(pool: MultiDomainDataset, train_sizes, val: int, test: int, seed: int, trial: int) -> Split:
    """Shuffle every (domain, class) cell; take ``val``, then ``test``, then ``train`` samples.

    ``train_sizes`` is an int or an (M, K) table. Training sets for smaller sizes
    are prefixes of those for larger sizes within a trial.
    """
    M, K = len(pool.domain_ids), pool.K
    table = _size_table(train_sizes, M, K)
    parts = {"train": {}, "val": {}, "test": {}}
    for m, dom in enumerate(pool.domain_ids):
        _, y = pool.domains[dom]
        tr, va, te = [], [], []
        for k in range(1, K + 1):
            idx = np.flatnonzero(y == k)
            need = val + test + int(table[m, k - 1])
            if idx.size < need:
                raise ConfigError(f"domain {dom!r} class {k}: {idx.size} samples, split needs {need}")
            idx = substream(seed, SPLIT, trial, m, k).permutation(idx)
            va.append(idx[:val])
            te.append(idx[val : val + test])
            tr.append(idx[val + test : need])
        parts["train"][dom] = np.concatenate(tr)
        parts["val"][dom] = np.concatenate(va)
        parts["test"][dom] = np.concatenate(te)
    return Split(_take(pool, parts["train"]), _take(pool, parts["val"]), _take(pool, parts["test"]))


def synthetic_split(spec: GeneratorSpec, train_sizes, val: int, test: int, seed: int, trial: int) -> Split:
    """Fresh synthetic train/validation/test sets for one trial (independent streams)."""
    train = generate_synthetic(spec, train_sizes, seed=seed, stream=3 * trial + 1)
    valid = generate_synthetic(spec, val, seed=seed, stream=3 * trial + 2)
    testd = generate_synthetic(spec, test, seed=seed, stream=3 * trial + 3)
    return Split(train, valid, testd)
