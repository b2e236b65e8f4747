"""Stateless closed-form physics kernels.

All functions are pure and accept scalars; the hot-loop code in
:mod:`qworkmeter.engine` applies the same formulas to numpy arrays.  The
phase-space convention is beta = (<x> + i<p>)/2, so the free evolution is a
clockwise rotation beta -> beta exp(-i Omega t) and the excited-state
evolution is the same rotation about the displaced center -g_m/Omega.
"""

from __future__ import annotations

import numpy as np

from .errors import FrequencyDomainError, StepSizeError
from .params import MAX_STEP_JUMP_PROBABILITY, MachineState, PhysicalParams, QubitLevel


def effective_frequency(beta: complex, p: PhysicalParams) -> float:
    """Qubit transition frequency modulated by the mechanical amplitude."""
    w = p.omega0 + 2.0 * p.g_m * float(np.real(beta))
    if w <= 0.0:
        raise FrequencyDomainError(
            f"effective frequency {w:.6g} <= 0 at beta={beta}; "
            "parameters are outside the model's validity range"
        )
    return w


def mean_occupation(omega: float, theta: float) -> float:
    """Bose-Einstein mean photon number of the bath mode at omega."""
    if omega <= 0.0:
        raise FrequencyDomainError(f"mean occupation undefined for omega={omega:.6g} <= 0")
    if theta == 0.0:
        return 0.0
    x = omega / theta
    if x > 700.0:  # exp would overflow; occupation is numerically zero
        return 0.0
    return 1.0 / np.expm1(x)


def log_partition(beta: complex, p: PhysicalParams) -> float:
    """ln Z(beta) for the two-level thermal distribution at omega(beta)."""
    w = effective_frequency(beta, p)
    return float(np.log1p(np.exp(-w / p.theta)))


def thermal_distribution(beta: complex, p: PhysicalParams):
    """Thermal occupation (p_g, p_e, Z) of the qubit at omega(beta).

    Normalization p_g + p_e = 1 holds exactly by construction.
    """
    w = effective_frequency(beta, p)
    b = np.exp(-w / p.theta)
    z = 1.0 + b
    p_g = 1.0 / z
    p_e = 1.0 - p_g
    return float(p_g), float(p_e), float(z)


def propagate_coherent(beta: complex, epsilon: QubitLevel, dt: float,
                       p: PhysicalParams) -> complex:
    """Coherent-state amplitude after a no-jump interval of length dt.

    Ground state: rotation about the origin.  Excited state: the same
    rotation about the displaced center -g_m/Omega.  Both are exactly
    norm-preserving about their respective centers.
    """
    rot = np.exp(-1j * p.Omega * dt)
    if epsilon == QubitLevel.e:
        d = p.g_m / p.Omega
        return complex((beta + d) * rot - d)
    return complex(beta * rot)


def jump_probabilities(state: MachineState, rate_freq: float, dt: float,
                       p: PhysicalParams):
    """One-step (emission, absorption, no-jump) probabilities.

    First order in dt, with the rates evaluated at the caller-supplied
    frequency (nominal-orbit or trajectory frequency depending on mode).
    """
    nbar = mean_occupation(rate_freq, p.theta)
    if p.gamma * dt * (nbar + 1.0) > MAX_STEP_JUMP_PROBABILITY:
        raise StepSizeError(
            f"gamma*dt*(nbar+1) = {p.gamma * dt * (nbar + 1.0):.3g} exceeds "
            f"{MAX_STEP_JUMP_PROBABILITY}; refine the time grid"
        )
    if state.epsilon == QubitLevel.e:
        p_minus = p.gamma * dt * (nbar + 1.0)
        p_plus = 0.0
    else:
        p_minus = 0.0
        p_plus = p.gamma * dt * nbar
    return p_minus, p_plus, 1.0 - p_minus - p_plus


def mechanical_energy(beta: complex, p: PhysicalParams) -> float:
    """Oscillator energy Omega |beta|^2 (hbar = 1)."""
    return p.Omega * float(np.real(beta * np.conj(beta)))


def qubit_energy(state: MachineState, p: PhysicalParams) -> float:
    """Qubit energy omega(beta) for the excited level, 0 for the ground level."""
    if state.epsilon != QubitLevel.e:
        return 0.0
    return effective_frequency(state.beta, p)
