"""Worst-case frequency nadir of a linearized power network.

Given a network of first-order generation units coupled through a graph
Laplacian, this package computes the largest frequency deviation any
norm-bounded step disturbance can cause at any bus and any time, recovers
the disturbance achieving it, and cross-checks the analytic answer
against an independent fixed-step time-domain integration.
"""

__version__ = "0.1.0"

from .kernels import backend
from .modal import (
    ModalBasis,
    ModeKinetics,
    Trajectory,
    coi_frequency,
    decompose_disturbance,
    eigendecompose,
    frequency_response,
    modal_basis,
    mode_kinetics,
    mode_response,
    scaled_laplacian,
)
from .nadir import (
    AsymptoteSweep,
    DisturbanceSpec,
    NadirResult,
    NadirTable,
    dual_norm,
    heterogeneous_asymptote_check,
    objective_column,
    recover_worst_disturbance,
    strong_connectivity_check,
    worst_case_search,
)
from .network import (
    BusParams,
    LineData,
    NetworkFormatError,
    NetworkModel,
    NonProportionalError,
    ValidationReport,
    build_laplacian_from_lines,
    generate_random_network,
    load_network,
    save_network,
    validate_network,
)
from .simulate import (
    DominanceReport,
    SampleSet,
    SimConfig,
    dominance_report,
    per_bus_nadir,
    sample_norm_ball,
    simulate_step_response,
    stability_limit,
)

__all__ = [
    "__version__",
    "backend",
    # network
    "BusParams",
    "LineData",
    "NetworkFormatError",
    "NetworkModel",
    "NonProportionalError",
    "ValidationReport",
    "build_laplacian_from_lines",
    "generate_random_network",
    "load_network",
    "save_network",
    "validate_network",
    # modal
    "ModalBasis",
    "ModeKinetics",
    "Trajectory",
    "coi_frequency",
    "decompose_disturbance",
    "eigendecompose",
    "frequency_response",
    "modal_basis",
    "mode_kinetics",
    "mode_response",
    "scaled_laplacian",
    # nadir
    "AsymptoteSweep",
    "DisturbanceSpec",
    "NadirResult",
    "NadirTable",
    "dual_norm",
    "heterogeneous_asymptote_check",
    "objective_column",
    "recover_worst_disturbance",
    "strong_connectivity_check",
    "worst_case_search",
    # simulate
    "DominanceReport",
    "SampleSet",
    "SimConfig",
    "dominance_report",
    "per_bus_nadir",
    "sample_norm_ball",
    "simulate_step_response",
    "stability_limit",
]
