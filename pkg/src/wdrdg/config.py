"""YAML experiment configs.

Example::

    seed: 0
    methods: [WDRDG, WDRDG-noTTA, KNN]
    trials: 5
    train_sizes: [5, 10, 15]
    val_per_class: 10
    test_per_class: 20
    priors: uniform            # or: empirical
    delta_grid: auto           # or a list of nonnegative numbers
    barycenter: {b: auto, max_iters: 100, tol: 1.0e-7, init: pooled_subsample}
    imbalance: {low: 5, high: 25}          # optional
    data:
      synthetic:
        n_domains: 4
        class_means: [[10, -8], [10, 0], [10, 8]]
        scale: 0.5
        shift: rotation
        angle_deg: 15
      # files: {paths: [a.csv, b.csv], K: 3}

Relative file paths are resolved against the config file's directory.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .barycenter import INIT_STRATEGIES, BarycenterConfig
from .data import GeneratorSpec
from .errors import ConfigError
from .harness import METHODS, ExperimentConfig, ImbalanceSpec

_TOP_KEYS = {
    "seed", "methods", "trials", "train_sizes", "val_per_class", "test_per_class",
    "priors", "delta_grid", "barycenter", "imbalance", "data", "targets", "name",
}
_SYNTH_KEYS = {"n_domains", "class_means", "scale", "shift", "translation", "angle_deg", "domain_ids"}


def _unknown(section: str, given: dict, allowed: set):
    extra = set(given) - allowed
    if extra:
        raise ConfigError(f"{section}: unknown field(s) {sorted(extra)}")


def _get(d: dict, key: str, kind, default: Any = ..., section: str = "config"):
    if key not in d or d[key] is None:
        if default is ...:
            raise ConfigError(f"{section}.{key}: required")
        return default
    val = d[key]
    try:
        if kind is int and (isinstance(val, bool) or float(val) != int(val)):
            raise ValueError
        return kind(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: expected {kind.__name__}, got {val!r}") from None


def _barycenter(raw: dict) -> BarycenterConfig:
    _unknown("barycenter", raw, {"b", "max_iters", "tol", "init"})
    b = raw.get("b", "auto")
    if b in (None, "auto"):
        b = None
    else:
        b = _get(raw, "b", int, section="barycenter")
    init = raw.get("init", "pooled_subsample")
    if init not in INIT_STRATEGIES or init == "provided":
        raise ConfigError(f"barycenter.init: expected pooled_subsample or kmeans, got {init!r}")
    try:
        return BarycenterConfig(
            b=b,
            max_iters=_get(raw, "max_iters", int, 100, "barycenter"),
            tol=_get(raw, "tol", float, 1e-7, "barycenter"),
            init=init,
        )
    except ValueError as exc:
        raise ConfigError(f"barycenter: {exc}") from None


def generator_from_dict(raw: dict, seed: int = 0) -> GeneratorSpec:
    _unknown("data.synthetic", raw, _SYNTH_KEYS)
    try:
        return GeneratorSpec(
            class_means=np.asarray(raw["class_means"], dtype=np.float64),
            n_domains=_get(raw, "n_domains", int, section="data.synthetic"),
            scale=raw.get("scale", 1.0),
            shift=raw.get("shift", "none"),
            translation=None if raw.get("translation") is None else np.asarray(raw["translation"], dtype=np.float64),
            angle_deg=_get(raw, "angle_deg", float, 0.0, "data.synthetic"),
            domain_ids=raw.get("domain_ids"),
            seed=seed,
        )
    except KeyError as exc:
        raise ConfigError(f"data.synthetic.{exc.args[0]}: required") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"data.synthetic: {exc}") from None


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    _unknown("config", raw, _TOP_KEYS)
    seed = _get(raw, "seed", int, 0)
    data = raw.get("data")
    if not isinstance(data, dict) or len(data) != 1 or next(iter(data)) not in ("synthetic", "files"):
        raise ConfigError("data: expected exactly one of 'synthetic' or 'files'")
    synthetic = files = K_files = None
    if "synthetic" in data:
        synthetic = generator_from_dict(data["synthetic"] or {}, seed)
    else:
        f = data["files"] or {}
        _unknown("data.files", f, {"paths", "K"})
        paths = f.get("paths")
        if not paths:
            raise ConfigError("data.files.paths: required")
        files = tuple(str((base_dir / p).resolve()) if not Path(p).is_absolute() else str(p) for p in paths)
        K_files = _get(f, "K", int, None, "data.files")

    methods = raw.get("methods", list(METHODS))
    if isinstance(methods, str):
        methods = [methods]
    grid = raw.get("delta_grid", "auto")
    if grid in (None, "auto"):
        grid = None
    else:
        try:
            grid = tuple(float(v) for v in grid)
        except (TypeError, ValueError):
            raise ConfigError(f"delta_grid: expected 'auto' or a list of numbers, got {grid!r}") from None
    sizes = raw.get("train_sizes", [2, 3, 5, 7, 10, 15, 20, 25])
    if isinstance(sizes, int):
        sizes = [sizes]
    try:
        sizes = tuple(int(s) for s in sizes)
    except (TypeError, ValueError):
        raise ConfigError(f"train_sizes: expected integers, got {sizes!r}") from None

    imbalance = None
    if raw.get("imbalance"):
        im = raw["imbalance"]
        _unknown("imbalance", im, {"low", "high", "table"})
        table = im.get("table")
        imbalance = ImbalanceSpec(
            low=_get(im, "low", int, 5, "imbalance"),
            high=_get(im, "high", int, 25, "imbalance"),
            table=None if table is None else tuple(tuple(int(v) for v in row) for row in table),
        )
        if imbalance.table is None and not 1 <= imbalance.low < imbalance.high:
            raise ConfigError("imbalance: need 1 <= low < high")

    targets = raw.get("targets")
    return ExperimentConfig(
        synthetic=synthetic,
        feature_files=files,
        K_files=K_files,
        train_sizes=sizes,
        val_per_class=_get(raw, "val_per_class", int, 10),
        test_per_class=_get(raw, "test_per_class", int, 20),
        trials=_get(raw, "trials", int, 5),
        delta_grid=grid,
        barycenter=_barycenter(raw.get("barycenter") or {}),
        priors=raw.get("priors", "uniform"),
        methods=tuple(methods),
        imbalance=imbalance,
        targets=None if targets in (None, "all") else tuple(str(t) for t in targets),
        seed=seed,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot open ({exc.strerror})") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    return config_from_dict(raw, path.parent)
