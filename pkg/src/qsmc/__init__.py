"""Quasi-sliding-mode control of unknown strict-feedback systems."""
from .controllers import BaselineSmcLaw, QsmcLaw, baseline_control, qsmc_control
from .envelope import (
    DesignConditionError, Envelope, reaching_time_bound, rho, rho_dot, suggest_rho0, validate_c1, validate_c2,
)
from .plants import (
    InitialCondition, PlantModel, ReferenceSignal, builtin, dynamics, error_state, validate_assumptions,
)
from .sim import (
    Metrics, SimConfig, SimulationAbort, Trajectory, chattering_index, compute_metrics, measure_reaching_time,
    simulate, verify_guarantees,
)
from .surface import SurfaceSpec, binomial_surface, evaluate_sigma, is_hurwitz, sign, tracking_bound

__version__ = "0.1.0"

__all__ = [
    "BaselineSmcLaw", "QsmcLaw", "baseline_control", "qsmc_control",
    "DesignConditionError", "Envelope", "reaching_time_bound", "rho", "rho_dot", "suggest_rho0", "validate_c1",
    "validate_c2",
    "InitialCondition", "PlantModel", "ReferenceSignal", "builtin", "dynamics", "error_state", "validate_assumptions",
    "Metrics", "SimConfig", "SimulationAbort", "Trajectory", "chattering_index", "compute_metrics",
    "measure_reaching_time", "simulate", "verify_guarantees",
    "SurfaceSpec", "binomial_surface", "evaluate_sigma", "is_hurwitz", "sign", "tracking_bound",
]
