"""Configuration parsing and laboratory-unit conversion.

Config files are flat ``key = value`` text; blank lines and ``#`` comments
are ignored.  All frequencies are given as ordinary (not angular) frequencies
in Hz and the temperature in kelvin; this layer converts to internal hbar = 1
angular-frequency units exactly once.  Validation collects every violation
before failing, so a bad file reports all its problems in one pass.

Recognized keys::

    Omega_over_2pi        mechanical frequency, Hz           (required)
    gamma_over_Omega      bare emission rate / Omega         (one of these two)
    gamma_over_2pi        bare emission rate / 2pi, Hz
    g_m_over_2pi          coupling / 2pi, Hz                 (one of these two)
    g_m_over_Omega        coupling / Omega
    omega0_over_2pi       qubit frequency / 2pi, Hz          (one of these two)
    omega0_over_theta     hbar*omega0 / k_B T
    temperature_K         bath temperature, kelvin           (required)
    beta0_modulus         |beta0|                            (required)
    beta0_phase_deg       arg(beta0), degrees                (default 90)
    t_final               protocol duration, s               (default pi/(2 Omega))
    n_steps               time-grid points                   (default: auto)
    n_traj                ensemble size                      (default 100000)
    master_seed           64-bit RNG seed                    (default 0)
    mode                  markovian | trajectory_frequency   (default markovian)
    jitter_halfwidth      preparation jitter delta-beta      (default 0)
    grid_cell_halfwidth   measurement cell halfwidth         (default 2)
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.constants import hbar, k as k_B

from .errors import ConfigError
from .params import (MODES, SEMICLASSICAL_BREAKDOWN, PhysicalParams,
                     ProtocolParams, check_step_bound, default_t_final,
                     suggest_n_steps)

_FLOAT_KEYS = {
    "Omega_over_2pi", "gamma_over_Omega", "gamma_over_2pi", "g_m_over_2pi",
    "g_m_over_Omega", "omega0_over_2pi", "omega0_over_theta", "temperature_K",
    "beta0_modulus", "beta0_phase_deg", "t_final", "jitter_halfwidth",
    "grid_cell_halfwidth",
}
_INT_KEYS = {"n_steps", "n_traj", "master_seed"}
_STR_KEYS = {"mode"}
KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS


def theta_from_kelvin(temperature_K: float) -> float:
    """k_B T / hbar in rad/s."""
    return k_B * temperature_K / hbar


@dataclass(frozen=True)
class ValidatedConfig:
    physical: PhysicalParams
    protocol: ProtocolParams
    warnings: tuple


def parse_config_text(text: str) -> dict:
    """Parse flat key = value lines into a raw string dict; collects syntax errors."""
    raw = {}
    errors = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errors.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key in raw:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        raw[key] = value
    if errors:
        raise ConfigError(errors)
    return raw


def validate_config(raw: dict) -> ValidatedConfig:
    """Typed validation of a raw key-value dict; reports every violation."""
    errors = []
    warnings = []
    vals = {}

    for key, sval in raw.items():
        if key not in KNOWN_KEYS:
            errors.append(f"{key}: unknown key")
            continue
        try:
            if key in _FLOAT_KEYS:
                vals[key] = float(sval)
            elif key in _INT_KEYS:
                vals[key] = int(sval)
            else:
                vals[key] = str(sval)
        except ValueError:
            kind = "float" if key in _FLOAT_KEYS else "int"
            errors.append(f"{key}: cannot parse {sval!r} as {kind}")

    def need(key):
        if key not in vals:
            errors.append(f"{key}: required key missing")
            return None
        return vals[key]

    def exactly_one(*keys):
        present = [k for k in keys if k in vals]
        if len(present) != 1:
            errors.append(f"exactly one of {keys} must be given, found {present or 'none'}")
            return None
        return present[0]

    Omega_hz = need("Omega_over_2pi")
    temp = need("temperature_K")
    b0_mod = need("beta0_modulus")
    g_key = exactly_one("gamma_over_Omega", "gamma_over_2pi")
    gm_key = exactly_one("g_m_over_2pi", "g_m_over_Omega")
    w0_key = exactly_one("omega0_over_2pi", "omega0_over_theta")
    mode = vals.get("mode", "markovian")
    if mode not in MODES:
        errors.append(f"mode: must be one of {MODES}, got {mode!r}")
    if errors:
        raise ConfigError(errors)

    Omega = 2.0 * math.pi * Omega_hz
    theta = theta_from_kelvin(temp)
    gamma = (vals[g_key] * Omega if g_key == "gamma_over_Omega"
             else 2.0 * math.pi * vals[g_key])
    g_m = (2.0 * math.pi * vals[gm_key] if gm_key == "g_m_over_2pi"
           else vals[gm_key] * Omega)
    omega0 = (2.0 * math.pi * vals[w0_key] if w0_key == "omega0_over_2pi"
              else vals[w0_key] * theta)
    phase = math.radians(vals.get("beta0_phase_deg", 90.0))
    beta0 = b0_mod * cmath.exp(1j * phase)

    try:
        p = PhysicalParams(omega0=omega0, Omega=Omega, gamma=gamma, g_m=g_m,
                           theta=theta, beta0=beta0)
    except ValueError as e:
        raise ConfigError(str(e).split("; ")) from None

    t_final = vals.get("t_final", default_t_final(p))
    n_steps = vals.get("n_steps", suggest_n_steps(p, t_final))
    try:
        proto = ProtocolParams(
            t_final=t_final, n_steps=n_steps,
            n_traj=vals.get("n_traj", 100_000),
            master_seed=vals.get("master_seed", 0), mode=mode,
            jitter_halfwidth=vals.get("jitter_halfwidth", 0.0),
            grid_cell_halfwidth=vals.get("grid_cell_halfwidth", 2.0))
    except ValueError as e:
        raise ConfigError(str(e).split("; ")) from None

    try:
        check_step_bound(p, proto)
    except Exception as e:
        raise ConfigError([str(e)]) from None

    if p.semiclassical_ratio >= SEMICLASSICAL_BREAKDOWN:
        warnings.append(
            f"semiclassical ratio r = {p.semiclassical_ratio:.3g} >= "
            f"{SEMICLASSICAL_BREAKDOWN}: the Markovian rate approximation "
            "is unreliable here")
    return ValidatedConfig(p, proto, tuple(warnings))


def load_config(path) -> ValidatedConfig:
    with open(path, encoding="utf-8") as f:
        return validate_config(parse_config_text(f.read()))
