"""Command-line interface: ``python -m wdrdg <subcommand> ...``.

Exit codes: 0 success, 2 input or validation error, 3 infeasible delta,
4 numerical failure. Logs go to stderr; artifacts are written only to files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import harness
from .barycenter import INIT_STRATEGIES, PROVIDED_POINTS, BarycenterConfig
from .config import generator_from_dict, load_config
from .data import BARYCENTER_INIT, generate_synthetic, load_features, subseed, write_features_csv
from .dro import DroSolution, PooledSupport, lfd_discriminability_check, solve_dro
from .errors import AllDeltasInfeasible, ConfigError, InfeasibleDelta, NumericalFailure, WdrdgError
from .inference import predict_adaptive, predict_nonadaptive, write_predictions_csv
from .measures import DiscreteMeasure
from .ot import wasserstein1
from .uncertainty import build_sets, overlap_report, write_overlap_csv

log = logging.getLogger("wdrdg")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4
JOBS_ENV = "WDRDG_JOBS"


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{JOBS_ENV}={raw!r} is not an integer") from None


# ------------------------------------------------------------------ helpers


def _bary_config(args, K: int) -> BarycenterConfig:
    """Barycenter settings from flags; the init seed comes from the --seed stream."""
    init_points = None
    if args.init == PROVIDED_POINTS:
        if args.init_points is None:
            raise ConfigError("--init provided requires --init-points")
        pts = load_features([args.init_points], K=K)
        init_points = {}
        for k in range(1, K + 1):
            P = np.concatenate([X[y == k] for X, y in pts.domains.values()])
            if P.shape[0] == 0:
                raise ConfigError(f"--init-points: no points for class {k}")
            init_points[k] = P
        sizes = {v.shape[0] for v in init_points.values()}
        if len(sizes) != 1:
            raise ConfigError("--init-points must give the same number of points for every class")
        b = sizes.pop()
        if args.b is not None and args.b != b:
            raise ConfigError(f"--b {args.b} disagrees with {b} provided points per class")
        args.b = b
    elif args.init_points is not None:
        raise ConfigError("--init-points is only used with --init provided")
    try:
        return BarycenterConfig(
            b=args.b,
            max_iters=args.max_iters,
            tol=args.tol,
            init=args.init,
            seed=subseed(args.seed, BARYCENTER_INIT, 0, 0),
            init_points=init_points,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _barycenters_doc(sets, seed: int) -> dict:
    return {
        "format": "wdrdg-barycenters/1",
        "seed": seed,
        "classes": [
            {
                "class": s.k,
                "points": s.center.points.tolist(),
                "objective": s.barycenter.objective if s.barycenter is not None else None,
                "iterations": s.barycenter.iterations if s.barycenter is not None else None,
                "converged": s.barycenter.converged if s.barycenter is not None else None,
                "radius": s.radius,
            }
            for s in sets
        ],
    }


def _write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _log_overlap(records) -> None:
    n_over = sum(r.overlapping for r in records)
    log.info("overlap: %d of %d class pairs have radius sum above barycenter distance", n_over, len(records))
    for r in records:
        log.info(
            "  classes %d,%d: radius sum %.4f, barycenter W2 %.4f%s",
            r.class_i, r.class_j, r.radius_sum, r.barycenter_w2, " (overlap)" if r.overlapping else "",
        )


def _one_line(obj) -> str:
    return " ".join(str(obj).split())


def _log_args(name: str, args) -> None:
    shown = {k: v for k, v in vars(args).items() if k not in ("func",)}
    log.info("%s: %s", name, json.dumps(shown, default=str, sort_keys=True))


# --------------------------------------------------------------- commands


def cmd_barycenter(args) -> int:
    data = load_features(args.inputs, K=args.K)
    cfg = _bary_config(args, data.K)
    _log_args("barycenter", args)
    sets = build_sets(data, cfg)
    log.info("barycenter support size b=%d", sets[0].center.size)
    for s in sets:
        log.info("class %d: objective %.6g after %d iterations, radius %.6g", s.k, s.barycenter.objective, s.barycenter.iterations, s.radius)
    _write_json(_barycenters_doc(sets, args.seed), args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    data = load_features(args.inputs, K=args.K)
    cfg = _bary_config(args, data.K)
    _log_args("train", args)
    if args.delta < 0:
        raise ConfigError("--delta must be nonnegative")
    sets = build_sets(data, cfg)
    log.info("barycenter support size b=%d", sets[0].center.size)
    priors = harness.resolve_priors(args.priors, data)
    log.info("priors: %s", np.array2string(priors.prior, precision=4))
    if len(sets) > 1:
        _log_overlap(overlap_report(sets))
    model = solve_dro(sets, priors, args.delta, method=args.solver)
    log.info("objective %.6f at delta %.6g", model.objective, args.delta)
    log.info("radii: %s", np.array2string(model.radii, precision=4))
    for rec in lfd_discriminability_check(model):
        if not rec.satisfied:
            log.info("LFD pair %d,%d: exact W2 %.4g below delta", rec.u, rec.v, rec.w2)
    model.to_json(args.out)
    return EXIT_OK


def cmd_predict(args) -> int:
    _log_args("predict", args)
    try:
        model = DroSolution.from_json(args.model)
    except OSError as exc:
        raise ConfigError(f"{args.model}: cannot open ({exc.strerror})") from None
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{args.model}: not a model file ({exc})") from None
    targets = load_features([args.targets], require_labels=False)
    X = targets.features()
    preds = predict_nonadaptive(model, X) if args.nonadaptive else predict_adaptive(model, X)
    write_predictions_csv(preds, args.out, model.K)
    y = targets.labels()
    if np.all(y >= 1):
        log.info("accuracy against file labels: %.4f", harness.accuracy([p.label for p in preds], y))
    n_deg = sum(p.degenerate for p in preds)
    if n_deg:
        log.warning("%d predictions fell on zero-mass atoms and are uniform", n_deg)
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    log.info("experiment config: %s", _one_line(config))
    log.info("seed: %d", config.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if config.imbalance is not None:
        result = harness.imbalance_experiment(config, jobs=args.jobs)
    else:
        result = harness.run_protocol(config, jobs=args.jobs)
    harness.write_results_csv(result.rows, out / "results.csv")
    agg = harness.aggregate(result.rows)
    harness.write_aggregate_csv(agg, out / "aggregate.csv")
    write_overlap_csv(harness.overlap_for_config(config), out / "overlap.csv")
    for t, m, s, n, mean, std in agg:
        if t == harness.AVERAGE:
            log.info("average %s size %s: %.4f +- %.4f over %d trials", m, s, mean, std, n)
    return EXIT_OK


def cmd_datagen(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"{args.config}: cannot open ({exc.strerror})") from None
    synth = (raw.get("data") or {}).get("synthetic")
    if synth is None:
        raise ConfigError("data.synthetic: required for datagen")
    seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    spec = generator_from_dict(synth, seed)
    log.info("datagen: %s", _one_line(spec))
    log.info("seed: %d", seed)
    data = generate_synthetic(spec, args.per_class, seed=seed, stream=0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for dom in data.domain_ids:
        write_features_csv(data, out / f"{dom}.csv", [dom])
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if (args.config is None) == (not args.inputs):
        raise ConfigError("diagnose needs exactly one of --config or --inputs")
    if args.config is not None:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        log.info("diagnose config: %s", _one_line(config))
        log.info("seed: %d", config.seed)
        sets = harness.sets_for_config(config, trial=0)
        seed = config.seed
    else:
        data = load_features(args.inputs, K=args.K)
        cfg = _bary_config(args, data.K)
        _log_args("diagnose", args)
        sets = build_sets(data, cfg)
        seed = args.seed
    records = overlap_report(sets)
    _log_overlap(records)
    write_overlap_csv(records, args.out)
    if args.barycenters is not None:
        _write_json(_barycenters_doc(sets, seed), args.barycenters)
    if args.targets is not None:
        X = load_features([args.targets], require_labels=False).features()
        support = PooledSupport.from_sets(sets)
        gap = wasserstein1(DiscreteMeasure.uniform(support.points), DiscreteMeasure.uniform(X))
        log.info("domain gap (W1, pooled barycenter support to targets): %.6g", gap)
        if args.report is not None:
            _write_json({"format": "wdrdg-diagnose/1", "domain_gap_w1": gap, "n_targets": int(X.shape[0])}, args.report)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _add_barycenter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, default=None, help="number of classes (default: largest label)")
    p.add_argument("--b", type=int, default=None, help="barycenter support size (default: median class count, clamped to [2, 50])")
    p.add_argument("--init", choices=INIT_STRATEGIES, default="pooled_subsample")
    p.add_argument("--init-points", default=None, help="feature CSV of initial atoms, grouped by label (with --init provided)")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-7)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    common.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(prog="wdrdg", description="Wasserstein robust domain generalization tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("barycenter", parents=[common], help="per-class barycenters of source feature CSVs")
    p.add_argument("inputs", nargs="+")
    _add_barycenter_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON")
    p.set_defaults(func=cmd_barycenter)

    p = sub.add_parser("train", parents=[common], help="fit the robust model on source feature CSVs")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--priors", choices=("uniform", "empirical"), default="uniform")
    p.add_argument("--solver", choices=("interior", "simplex"), default="interior")
    _add_barycenter_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="label target samples with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--targets", required=True, help="feature CSV; labels may be left empty")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--adaptive", action="store_true", default=True, help="transport-based prediction (default)")
    mode.add_argument("--nonadaptive", action="store_true", help="nearest-atom prediction")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; prediction is deterministic")
    p.add_argument("--out", required=True, help="output predictions CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", parents=[common], help="leave-one-domain-out experiment from a YAML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--jobs", type=int, default=None, help=f"worker processes (default: ${JOBS_ENV} or 1)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("datagen", parents=[common], help="write synthetic domains as feature CSVs")
    p.add_argument("--config", required=True, help="YAML with a data.synthetic section")
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("diagnose", parents=[common], help="uncertainty-set overlap report and domain gap")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--config", default=None, help="YAML config (uses trial 0 training data of all domains)")
    _add_barycenter_flags(p)
    p.add_argument("--targets", default=None, help="target feature CSV for the domain gap")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="overlap CSV")
    p.add_argument("--barycenters", default=None, help="also write barycenters JSON here")
    p.add_argument("--report", default=None, help="domain-gap JSON (needs --targets)")
    p.set_defaults(func=cmd_diagnose)
    return parser


def _setup_logging(args) -> None:
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose else logging.INFO)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)
    try:
        if getattr(args, "jobs", 0) is None:
            args.jobs = _default_jobs()
        if args.command == "diagnose" and args.seed is None and args.config is None:
            args.seed = 0
        return args.func(args)
    except (InfeasibleDelta, AllDeltasInfeasible) as exc:
        log.error("%s", exc)
        return EXIT_INFEASIBLE
    except NumericalFailure as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except WdrdgError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("%s: %s", exc.filename or "", exc.strerror or exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
