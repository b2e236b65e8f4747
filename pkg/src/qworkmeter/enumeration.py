"""Brute-force enumeration of every trajectory of a small instance.

With the initial jitter disabled, a trajectory is fully determined by the
initial qubit level and the set of steps at which a jump fires (the jump kind
is forced: emission from the excited level, absorption from the ground
level).  That gives 2 * 2**n_steps paths, each walked through the exact same
:func:`qworkmeter.engine.walk_trajectory` code as the sampler, so the
enumerated probabilities are the sampler's true path measure.  Usable up to
roughly n_steps = 16.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .engine import TrajectoryRecord, _StepTables, walk_trajectory
from .params import PhysicalParams, ProtocolParams, QubitLevel
from .thermo import ABSORPTION, EMISSION

MAX_ENUM_STEPS = 20


@dataclass(frozen=True)
class EnumeratedPath:
    record: TrajectoryRecord
    probability: float          # exp(log_p_forward), includes the thermal prior


def enumerate_paths(p: PhysicalParams, proto: ProtocolParams):
    """Yield every path of the instance with its exact probability."""
    if proto.jitter_halfwidth != 0.0:
        raise ValueError("enumeration requires jitter_halfwidth = 0")
    if proto.n_steps > MAX_ENUM_STEPS:
        raise ValueError(
            f"enumeration over 2*2^{proto.n_steps} paths is impractical; "
            f"limit is n_steps <= {MAX_ENUM_STEPS}"
        )
    tables = _StepTables(p, proto)
    from .physics import thermal_distribution

    p_g, p_e, _ = thermal_distribution(p.beta0, p)
    for eps0, log_p0 in ((QubitLevel.g, math.log(p_g)), (QubitLevel.e, math.log(p_e))):
        for pattern in itertools.product((False, True), repeat=proto.n_steps):

            def decide(n, excited, p_emit, p_absorb):
                if not pattern[n - 1]:
                    return 0
                return EMISSION if excited else ABSORPTION

            rec = walk_trajectory(p, proto, eps0, 0.0 + 0.0j, log_p0, decide, tables)
            prob = math.exp(rec.log_p_forward)
            yield EnumeratedPath(rec, prob)


@dataclass(frozen=True)
class EnumerationSummary:
    n_paths: int
    total_probability: float
    mean_W: float
    mean_Q: float
    mean_dE_m: float
    pop_e: float
    je_mean: float          # <exp((dE_m + dF_ref)/theta)>, should be near 1
    drive_je_mean: float    # <exp(-(W_drive - dF_ref)/theta)>, exactly 1
    ift_mean: float         # <exp(-dis)>
    lambda_value: float     # 1 - <exp(-dis_logratio)>


def summarize(p: PhysicalParams, proto: ProtocolParams, dF_ref: float) -> EnumerationSummary:
    """Exact expectation values over the full path ensemble."""
    n = 0
    tot = w = q = dem = pope = je = dje = ift = lam = 0.0
    for path in enumerate_paths(p, proto):
        led = path.record.ledger
        pr = path.probability
        n += 1
        tot += pr
        w += pr * led.W
        q += pr * led.Q
        dem += pr * led.dE_m
        pope += pr * (1.0 if path.record.epsilon_final == QubitLevel.e else 0.0)
        je += pr * math.exp((led.dE_m + dF_ref) / p.theta)
        dje += pr * math.exp(-(led.W_drive - dF_ref) / p.theta)
        ift += pr * math.exp(-led.dis)
        lam += pr * math.exp(-led.dis_logratio)
    return EnumerationSummary(n_paths=n, total_probability=tot, mean_W=w, mean_Q=q,
                              mean_dE_m=dem, pop_e=pope, je_mean=je,
                              drive_je_mean=dje, ift_mean=ift,
                              lambda_value=1.0 - lam)
