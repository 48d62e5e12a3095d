"""Distributed recovery of jointly sparse signals over sensor networks.

DJ-IST and DJ-ADMM exchange only support indices between neighbors; the
DC-OMP baselines and the bit ledger make the communication cost comparable.
"""
from .accounting import MessageLedger, analytic_range, index_bits
from .dcomp import run_dcomp1, run_dcomp2
from .djadmm import run_djadmm
from .djist import NonConvergenceWarning, RunResult, StepSizeError, run_djist
from .graph import Topology, complete, random_regular, ring
from .harness import ExperimentConfig, load_config, run_sweep
from .metrics import MetricReport, ase, evaluate, pesr, rse
from .model import AlgoParams, ProblemInstance, generate_instance

__version__ = "0.1.0"

__all__ = [
    "AlgoParams",
    "ExperimentConfig",
    "MessageLedger",
    "MetricReport",
    "NonConvergenceWarning",
    "ProblemInstance",
    "RunResult",
    "StepSizeError",
    "Topology",
    "analytic_range",
    "ase",
    "complete",
    "evaluate",
    "generate_instance",
    "index_bits",
    "load_config",
    "pesr",
    "random_regular",
    "ring",
    "rse",
    "run_dcomp1",
    "run_dcomp2",
    "run_djadmm",
    "run_djist",
    "run_sweep",
]
