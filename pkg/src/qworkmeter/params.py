"""Machine, bath and protocol parameters.

Internal unit convention: hbar = 1, so every energy is an angular frequency
(rad/s) and the bath temperature enters as theta = k_B T / hbar.  The config
layer (:mod:`qworkmeter.config`) converts laboratory units (Hz, kelvin) once,
at the boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import StepSizeError

# Breakdown threshold for the semiclassical (Markovian) ratio (g_m/Omega)/|beta0|.
SEMICLASSICAL_BREAKDOWN = 1e-2

# Hard cap on the per-step jump probability of the first-order unraveling.
MAX_STEP_JUMP_PROBABILITY = 0.05

# Default design target, well inside the hard cap.
DEFAULT_STEP_JUMP_TARGET = 5e-3

MARKOVIAN = "markovian"
TRAJECTORY_FREQUENCY = "trajectory_frequency"
MODES = (MARKOVIAN, TRAJECTORY_FREQUENCY)


class QubitLevel(enum.IntEnum):
    """Bare qubit energy level.  The excited level carries Kronecker weight 1."""

    g = 0
    e = 1


@dataclass(frozen=True)
class PhysicalParams:
    """Machine and bath constants (hbar = 1 units, angular frequencies).

    gamma and g_m may be zero: the closed-system and decoupled limits are
    legitimate test configurations.
    """

    omega0: float   # bare qubit transition frequency
    Omega: float    # mechanical frequency
    gamma: float    # bare spontaneous emission rate
    g_m: float      # qubit-mechanical coupling
    theta: float    # k_B T / hbar
    beta0: complex  # nominal initial mechanical amplitude

    def __post_init__(self):
        errors = []
        if not self.omega0 > 0:
            errors.append(f"omega0 must be > 0, got {self.omega0}")
        if not self.Omega > 0:
            errors.append(f"Omega must be > 0, got {self.Omega}")
        if self.gamma < 0:
            errors.append(f"gamma must be >= 0, got {self.gamma}")
        if self.g_m < 0:
            errors.append(f"g_m must be >= 0, got {self.g_m}")
        if not self.theta > 0:
            errors.append(f"theta must be > 0, got {self.theta}")
        if not abs(self.beta0) > 0:
            errors.append(f"|beta0| must be > 0, got {self.beta0}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def displacement(self) -> float:
        """Qubit-conditioned phase-space displacement g_m/Omega."""
        return self.g_m / self.Omega

    @property
    def ultra_strong(self) -> bool:
        """True when the coupling resolves the two mechanical evolutions."""
        return self.g_m >= self.Omega

    @property
    def semiclassical_ratio(self) -> float:
        """(g_m/Omega)/|beta0|: the Markovian-validity indicator."""
        return self.displacement / abs(self.beta0)


@dataclass(frozen=True)
class MachineState:
    """Pure product state |epsilon, beta> of qubit level and coherent amplitude."""

    epsilon: QubitLevel
    beta: complex


@dataclass(frozen=True)
class ProtocolParams:
    """Time grid, mode and ensemble configuration for one run."""

    t_final: float
    n_steps: int
    n_traj: int
    master_seed: int
    mode: str = MARKOVIAN
    jitter_halfwidth: float = 0.0   # 0 disables initial-state jitter
    grid_cell_halfwidth: float = 2.0

    def __post_init__(self):
        errors = []
        if not self.t_final > 0:
            errors.append(f"t_final must be > 0, got {self.t_final}")
        if self.n_steps < 1:
            errors.append(f"n_steps must be >= 1, got {self.n_steps}")
        if self.n_traj < 0:
            errors.append(f"n_traj must be >= 0, got {self.n_traj}")
        if self.mode not in MODES:
            errors.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.jitter_halfwidth < 0:
            errors.append("jitter_halfwidth must be >= 0")
        if not self.grid_cell_halfwidth > 0:
            errors.append("grid_cell_halfwidth must be > 0")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps


def default_t_final(p: PhysicalParams) -> float:
    """Quarter mechanical period, the protocol window used throughout."""
    return math.pi / (2.0 * p.Omega)


def nominal_orbit(p: PhysicalParams, times) -> np.ndarray:
    """Free mechanical orbit beta0 * exp(-i Omega t)."""
    return p.beta0 * np.exp(-1j * p.Omega * np.asarray(times))


def max_step_jump_probability(p: PhysicalParams, t_final: float, n_steps: int) -> float:
    """Largest one-step jump probability encountered on the nominal orbit.

    The dominant branch is emission, gamma*dt*(nbar+1), maximised where the
    effective frequency is smallest along the orbit.
    """
    from .physics import effective_frequency, mean_occupation

    dt = t_final / n_steps
    times = np.arange(n_steps) * dt
    omegas = p.omega0 + 2.0 * p.g_m * np.real(nominal_orbit(p, times))
    w_min = float(np.min(omegas))
    # Propagates the domain error if the orbit leaves the validity region.
    effective_frequency(p.beta0, p)
    nbar_max = mean_occupation(w_min, p.theta)
    return p.gamma * dt * (nbar_max + 1.0)


def suggest_n_steps(p: PhysicalParams, t_final: float,
                    target: float = DEFAULT_STEP_JUMP_TARGET) -> int:
    """Smallest step count keeping the per-step jump probability <= target."""
    from .physics import mean_occupation

    if p.gamma == 0.0:
        return 1
    # The minimum of omega over the orbit does not depend on the grid.
    times = np.linspace(0.0, t_final, 4097)
    w_min = float(np.min(p.omega0 + 2.0 * p.g_m * np.real(nominal_orbit(p, times))))
    nbar_max = mean_occupation(w_min, p.theta)
    return max(1, math.ceil(p.gamma * t_final * (nbar_max + 1.0) / target))


def check_step_bound(p: PhysicalParams, proto: ProtocolParams) -> None:
    """Raise StepSizeError when the grid is too coarse for the unraveling."""
    pmax = max_step_jump_probability(p, proto.t_final, proto.n_steps)
    if pmax > MAX_STEP_JUMP_PROBABILITY:
        need = suggest_n_steps(p, proto.t_final, MAX_STEP_JUMP_PROBABILITY)
        raise StepSizeError(
            f"per-step jump probability {pmax:.3g} exceeds "
            f"{MAX_STEP_JUMP_PROBABILITY}; need n_steps >= {need} "
            f"(got {proto.n_steps})"
        )
