"""Independent references for the trajectory ensemble averages.

Two oracles, deliberately built on different numerics than the engine:

* :func:`integrate_master_equation` - classic RK4 integration of the
  two-level rate equation along the nominal mechanical orbit, with the mean
  work and heat accumulated as quadratures.  Continuous-time limit; agrees
  with the ensemble up to O(dt) discretization and Monte Carlo error.
* :func:`exact_discrete_means` - closed recursion for the exact first and
  second conditional moments of the discrete Markovian process itself (the
  jump decisions are independent of the amplitude in that mode, so the
  moments close).  Matches the engine's ensemble means to statistical error
  at any step size, which pins discretization and sampling errors apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import MARKOVIAN, PhysicalParams, ProtocolParams
from .physics import effective_frequency, mean_occupation, thermal_distribution


@dataclass(frozen=True)
class OracleResult:
    """Ensemble means from the master-equation or moment-chain route."""

    pop_e: float
    W: float
    Q: float
    dE_q: float
    dE_m: float


def _rates(p: PhysicalParams, t: float):
    w = effective_frequency(complex(p.beta0 * np.exp(-1j * p.Omega * t)), p)
    nbar = mean_occupation(w, p.theta)
    return w, p.gamma * nbar, p.gamma * (nbar + 1.0)


def integrate_master_equation(p: PhysicalParams, t_final: float,
                              n_substeps: int = 20_000) -> OracleResult:
    """RK4 integration of the rate equation on the nominal orbit.

    State vector (p_e, W, Q):
        dp_e/dt = r_up (1 - p_e) - r_down p_e
        dW/dt   = p_e * domega/dt
        dQ/dt   = omega * dp_e/dt
    """
    _, p_e0, _ = thermal_distribution(p.beta0, p)

    def deriv(t, y):
        pe = y[0]
        w, r_up, r_down = _rates(p, t)
        dpe = r_up * (1.0 - pe) - r_down * pe
        dw_dt = 2.0 * p.g_m * p.Omega * float(np.imag(p.beta0 * np.exp(-1j * p.Omega * t)))
        return np.array([dpe, pe * dw_dt, w * dpe])

    y = np.array([p_e0, 0.0, 0.0])
    h = t_final / n_substeps
    t = 0.0
    for _ in range(n_substeps):
        k1 = deriv(t, y)
        k2 = deriv(t + h / 2.0, y + h / 2.0 * k1)
        k3 = deriv(t + h / 2.0, y + h / 2.0 * k2)
        k4 = deriv(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h

    pe, W, Q = float(y[0]), float(y[1]), float(y[2])
    w0 = effective_frequency(p.beta0, p)
    wN = effective_frequency(complex(p.beta0 * np.exp(-1j * p.Omega * t_final)), p)
    dE_q = pe * wN - p_e0 * w0
    # First law at the ensemble level; the mechanical energy absorbs -W.
    return OracleResult(pop_e=pe, W=W, Q=Q, dE_q=dE_q, dE_m=-W)


def exact_discrete_means(p: PhysicalParams, proto: ProtocolParams) -> OracleResult:
    """Exact ensemble means of the discrete Markovian unraveling, no sampling.

    Tracks, per qubit level, the population P, the conditional amplitude
    moment M = E[beta 1_level] and S = E[|beta|^2 1_level].  The no-jump
    maps are affine in beta and the jump probabilities are amplitude
    independent in Markovian mode, so the recursion is closed and exact.
    Requires jitter to be disabled (the jitter average would only shift S
    by a constant, but the engine's per-trajectory W depends on it).
    """
    from .engine import _StepTables

    if proto.mode != MARKOVIAN:
        raise ValueError("the moment-chain oracle applies to markovian mode only")
    tables = _StepTables(p, proto)
    rot = complex(np.exp(-1j * p.Omega * proto.dt))
    d = p.g_m / p.Omega

    p_g, p_e, _ = thermal_distribution(p.beta0, p)
    b0 = complex(p.beta0)
    P = {"g": p_g, "e": p_e}
    M = {"g": p_g * b0, "e": p_e * b0}
    S = {"g": p_g * abs(b0) ** 2, "e": p_e * abs(b0) ** 2}
    W = 0.0
    Q = 0.0

    c = rot - 1.0
    for j in range(proto.n_steps):
        a_em = float(tables.a_em[j])
        a_ab = float(tables.a_ab[j])

        Q += a_ab * (p.omega0 * P["g"] + 2.0 * p.g_m * M["g"].real)
        Q -= a_em * (p.omega0 * P["e"] + 2.0 * p.g_m * M["e"].real)

        # Excited stayers: beta -> rot*beta + d*(rot-1).
        stay_e = 1.0 - a_em
        Me_new = rot * M["e"] + d * c * P["e"]
        W += stay_e * 2.0 * p.g_m * (Me_new.real - M["e"].real)
        Se_new = (S["e"] + 2.0 * d * (np.conj(c) * rot * M["e"]).real
                  + d * d * abs(c) ** 2 * P["e"])

        P_e = stay_e * P["e"] + a_ab * P["g"]
        P_g = (1.0 - a_ab) * P["g"] + a_em * P["e"]
        M_e = stay_e * Me_new + a_ab * M["g"]
        M_g = (1.0 - a_ab) * rot * M["g"] + a_em * M["e"]
        S_e = stay_e * Se_new + a_ab * S["g"]
        S_g = (1.0 - a_ab) * S["g"] + a_em * S["e"]
        P = {"g": P_g, "e": P_e}
        M = {"g": M_g, "e": M_e}
        S = {"g": S_g, "e": S_e}

    dE_m = p.Omega * ((S["g"] + S["e"]) - abs(b0) ** 2)
    w0 = effective_frequency(p.beta0, p)
    # E[omega(beta_N) 1_e] = omega0 P_e + 2 g_m Re M_e.
    dE_q = (p.omega0 * P["e"] + 2.0 * p.g_m * M["e"].real) - p_e * w0
    return OracleResult(pop_e=P["e"], W=W, Q=Q, dE_q=dE_q, dE_m=dE_m)


@dataclass(frozen=True)
class OracleComparison:
    name: str
    ensemble_mean: float
    ensemble_stderr: float
    oracle_value: float
    z_score: float
    within: bool


def compare(agg, oracle: OracleResult, z_max: float = 4.0):
    """Z-score the ensemble means against an oracle result.

    Returns a list of per-quantity comparisons; a quantity is `within` when
    |mean - oracle| <= z_max standard errors (plus a tiny absolute floor for
    the deterministic gamma = 0 case).
    """
    out = []
    for name in ("pop_e", "W", "Q", "dE_m"):
        mean = agg.mean(name)
        se = agg.std_error(name)
        ref = getattr(oracle, name)
        scale = se + 1e-12 * (1.0 + abs(ref))
        z = abs(mean - ref) / scale
        out.append(OracleComparison(name, mean, se, ref, z, z <= z_max))
    return out


def report_lines(comparisons) -> list:
    lines = []
    for c in comparisons:
        status = "ok" if c.within else "FAIL"
        lines.append(f"{c.name:>6s}: ensemble {c.ensemble_mean: .9e} +- {c.ensemble_stderr:.2e}"
                     f"  oracle {c.oracle_value: .9e}  z={c.z_score:7.2f}  [{status}]")
    return lines
