"""Discrete-query simulation of continuous-time quantum query algorithms.

The pipeline: a continuous-time algorithm (drive schedule, initial state) is
Trotterized into a fractional-query program, each fractional query is run as
a single-full-query probabilistic gadget, gadgets are grouped into segments
whose control registers are truncated to low Hamming weight, failed segments
are undone and redone, and the final state is scored against the exact
reference evolution while full queries are counted.
"""
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .continuous import (
    ContinuousAlgorithm,
    DrivingSchedule,
    average_norm,
    drive_evolve,
    evolve_interval,
    reference_evolve,
)
from .discretize import FractionalProgram, build_program, choose_p, run_ideal, trotter_defect
from .experiment import DerivedParams, RunReport, TrialRow, build_problem, scan, simulate
from .gadget import (
    FORWARD,
    REVERSE,
    GadgetOutcome,
    apply_gadget,
    exact_fractional_circuit,
    gadget_joint_state,
    gadget_success_probability,
    r1_conjugate_matrix,
    r1_matrix,
    r2_matrix,
)
from .numerics import (
    apply_to_targets,
    expm_neg_i_hermitian,
    fidelity,
    is_hermitian,
    is_unitary,
    normalize,
    operator_norm,
)
from .oracle import (
    OracleInstance,
    QueryCounter,
    controlled_full_query,
    fractional_query,
    full_query,
    query_hamiltonian,
    random_instance,
)
from .recovery import (
    ErrorRecord,
    TrajectoryStats,
    WalkSummary,
    amplify,
    error_record,
    estimate_walk_stats,
    run_with_recovery,
    undo_plan,
)
from .segment import (
    EXACT_SEQUENTIAL,
    TRUNCATED,
    ControlState,
    SegmentPlan,
    build_rearranged,
    build_truncated,
    chi_state,
    choose_k,
    choose_m,
    hamming_ball,
    overlap_bound,
    run_segment,
    segment_plans,
    truncate_chi,
    vbar_targets,
)
from .verification import CheckResult, run_checks

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "ConfigError",
    "ContinuousAlgorithm",
    "ControlState",
    "DerivedParams",
    "DrivingSchedule",
    "EXACT_SEQUENTIAL",
    "ErrorRecord",
    "ExperimentConfig",
    "FORWARD",
    "FractionalProgram",
    "GadgetOutcome",
    "OracleInstance",
    "QueryCounter",
    "REVERSE",
    "RunReport",
    "SegmentPlan",
    "TRUNCATED",
    "TrajectoryStats",
    "TrialRow",
    "WalkSummary",
    "amplify",
    "apply_gadget",
    "apply_to_targets",
    "average_norm",
    "build_problem",
    "build_program",
    "build_rearranged",
    "build_truncated",
    "chi_state",
    "choose_k",
    "choose_m",
    "choose_p",
    "controlled_full_query",
    "drive_evolve",
    "error_record",
    "estimate_walk_stats",
    "evolve_interval",
    "exact_fractional_circuit",
    "expm_neg_i_hermitian",
    "fidelity",
    "fractional_query",
    "full_query",
    "gadget_joint_state",
    "gadget_success_probability",
    "hamming_ball",
    "is_hermitian",
    "is_unitary",
    "load_config",
    "normalize",
    "operator_norm",
    "overlap_bound",
    "parse_config",
    "query_hamiltonian",
    "r1_conjugate_matrix",
    "r1_matrix",
    "r2_matrix",
    "random_instance",
    "reference_evolve",
    "run_checks",
    "run_ideal",
    "run_segment",
    "run_with_recovery",
    "scan",
    "segment_plans",
    "simulate",
    "truncate_chi",
    "trotter_defect",
    "undo_plan",
    "vbar_targets",
]
