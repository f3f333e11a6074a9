"""Wasserstein distributionally robust domain generalization on discrete measures."""

from .barycenter import BarycenterConfig, BarycenterResult, free_support_barycenter
from .data import GeneratorSpec, generate_synthetic, load_features
from .dro import DroSolution, PooledSupport, assemble_program, certify, lfd_discriminability_check, solve_dro
from .errors import (
    AllDeltasInfeasible,
    ConfigError,
    DimensionMismatch,
    EmptyClassCell,
    EmptyInput,
    InfeasibleDelta,
    InvalidMeasure,
    LabelOutOfRange,
    NonUniformSourceWeights,
    NumericalFailure,
    ParseError,
    WdrdgError,
)
from .harness import (
    ExperimentConfig,
    ablation_tta,
    imbalance_experiment,
    knn_baseline,
    leave_one_domain_out,
)
from .inference import domain_gap, predict_adaptive, predict_nonadaptive, proposition1_check
from .lp import LinearProgram, LpSolution, Status, solve_lp
from .measures import ClassPriors, CostMatrix, DiscreteMeasure, MultiDomainDataset
from .ot import Coupling, barycentric_map, optimal_coupling, wasserstein1, wasserstein2
from .uncertainty import UncertaintySet, build_sets, overlap_report

__version__ = "0.1.0"
