"""Experiment harness: JSON configuration, study drivers, CSV and plot-script
emission, and the command-line entry point."""

from .config import (
    BeaSection,
    ExperimentConfig,
    InitialConditionSpec,
    MethodSection,
    ModelSection,
    OutputSection,
    RunSection,
    build_initial_state,
    load_config,
)
from .plots import emit_plots
from .studies import (
    run_bea_verify,
    run_convergence_study,
    run_drift_study,
    run_integrate,
    run_projection_scan,
)

__all__ = [
    "BeaSection",
    "ExperimentConfig",
    "InitialConditionSpec",
    "MethodSection",
    "ModelSection",
    "OutputSection",
    "RunSection",
    "build_initial_state",
    "emit_plots",
    "load_config",
    "run_bea_verify",
    "run_convergence_study",
    "run_drift_study",
    "run_integrate",
    "run_projection_scan",
]
