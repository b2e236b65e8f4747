"""Trajectory-level simulator of an autonomous quantum work meter.

A two-level system coupled to a mechanical oscillator and a thermal bath is
evolved by quantum-jump Monte Carlo over coherent mechanical states.  The
package computes per-trajectory work, heat and entropy production, ensemble
fluctuation-theorem estimators (reduced Jarzynski equality, generalized IFT
with absolute irreversibility), and the finite-precision measurement
analysis, with deterministic parallel execution.
"""

__version__ = "0.1.0"

from .engine import TrajectoryRecord, run_ensemble, run_trajectory
from .errors import (ConfigError, EmptyAggregateError, FrequencyDomainError,
                     QworkmeterError, StepSizeError)
from .params import (MachineState, PhysicalParams, ProtocolParams, QubitLevel,
                     default_t_final)
from .thermo import ThermoLedger

__all__ = [
    "__version__",
    "ConfigError", "EmptyAggregateError", "FrequencyDomainError",
    "QworkmeterError", "StepSizeError",
    "MachineState", "PhysicalParams", "ProtocolParams", "QubitLevel",
    "ThermoLedger", "TrajectoryRecord",
    "default_t_final", "run_ensemble", "run_trajectory",
]
