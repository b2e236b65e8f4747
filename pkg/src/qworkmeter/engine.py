"""Stochastic quantum-jump trajectory engine.

Two implementations of the same process share one per-trajectory random
stream (counter-based Philox keyed by (master_seed, traj_index), so results
are independent of scheduling and worker count):

* :func:`run_trajectory` - scalar reference path producing a full
  :class:`TrajectoryRecord` with the jump list; used by tests, replay checks
  and the brute-force enumerator.
* :func:`run_shard` - vectorized path advancing a block of trajectories in
  lock-step; used for ensembles.

Both consume the uniforms in the order (initial thermal draw, jitter x,
jitter y, one uniform per step) and apply identical arithmetic, so they
produce matching trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FrequencyDomainError, StepSizeError
from .params import (MARKOVIAN, MAX_STEP_JUMP_PROBABILITY, MachineState,
                     PhysicalParams, ProtocolParams, QubitLevel, check_step_bound)
from .physics import effective_frequency, thermal_distribution
from .thermo import (ABSORPTION, EMISSION, ThermoLedger, finalize,
                     free_energy_change)

_EXP_ARG_MAX = 700.0
_STEP_BLOCK = 1024


@dataclass(frozen=True)
class JumpEvent:
    step_index: int  # in [1, n_steps]
    kind: int        # EMISSION (-1) or ABSORPTION (+1)


@dataclass(frozen=True)
class TrajectoryRecord:
    epsilon0: QubitLevel
    jitter_offset: complex
    beta_initial_actual: complex
    jumps: tuple
    epsilon_final: QubitLevel
    beta_final_actual: complex
    beta_final_ideal: complex
    log_p_forward: float
    log_p_backward_conditional: float
    ledger: ThermoLedger


@dataclass
class TrajectoryArrays:
    """Column-oriented per-trajectory results of an ensemble shard."""

    traj_index: np.ndarray
    eps0: np.ndarray
    eps_final: np.ndarray
    n_jumps: np.ndarray
    jitter_offset: np.ndarray
    beta_final_actual: np.ndarray
    beta_final_ideal: np.ndarray
    W: np.ndarray
    Q: np.ndarray
    W_drive: np.ndarray
    dE_q: np.ndarray
    dE_m: np.ndarray
    dF: np.ndarray
    sigma: np.ndarray
    I_Sh: np.ndarray
    dis: np.ndarray
    dis_logratio: np.ndarray
    log_p_forward: np.ndarray
    log_p_backward_conditional: np.ndarray
    log_pinf_final: np.ndarray

    def __len__(self):
        return len(self.traj_index)


def concat_arrays(parts) -> TrajectoryArrays:
    parts = list(parts)
    kwargs = {name: np.concatenate([getattr(a, name) for a in parts])
              for name in TrajectoryArrays.__dataclass_fields__}
    return TrajectoryArrays(**kwargs)


def trajectory_rng(master_seed: int, traj_index: int) -> np.random.Generator:
    """Counter-based per-trajectory generator; independent of scheduling."""
    key = (int(master_seed) & 0xFFFFFFFFFFFFFFFF) | (int(traj_index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _n_draws(proto: ProtocolParams) -> int:
    return 1 + (2 if proto.jitter_halfwidth > 0 else 0) + proto.n_steps


def rate_frequency(p: PhysicalParams, mode: str, t: float,
                   beta_actual: complex | None = None) -> float:
    """Frequency at which the bath rates are evaluated for a step starting at t."""
    if mode == MARKOVIAN:
        beta = p.beta0 * np.exp(-1j * p.Omega * t)
        return effective_frequency(complex(beta), p)
    if beta_actual is None:
        raise ValueError("trajectory_frequency mode requires the actual amplitude")
    return effective_frequency(beta_actual, p)


class _StepTables:
    """Per-step scalars on the nominal orbit (rates, their logs, drive heat)."""

    def __init__(self, p: PhysicalParams, proto: ProtocolParams):
        dt = proto.dt
        times = np.arange(proto.n_steps) * dt  # start time of each step
        self.w_nom = p.omega0 + 2.0 * p.g_m * np.real(p.beta0 * np.exp(-1j * p.Omega * times))
        if np.any(self.w_nom <= 0.0):
            raise FrequencyDomainError("nominal-orbit frequency <= 0 on the time grid")
        x = self.w_nom / p.theta
        nbar = np.where(x > _EXP_ARG_MAX, 0.0, 1.0 / np.expm1(np.minimum(x, _EXP_ARG_MAX)))
        self.a_em = p.gamma * dt * (nbar + 1.0)   # emission probability from |e>
        self.a_ab = p.gamma * dt * nbar           # absorption probability from |g>
        if np.any(self.a_em > MAX_STEP_JUMP_PROBABILITY):
            raise StepSizeError("per-step jump probability exceeds the unraveling bound")
        with np.errstate(divide="ignore"):
            self.log_a_em = np.log(self.a_em)
            self.log_a_ab = np.log(self.a_ab)
        self.log_stay_e = np.log1p(-self.a_em)
        self.log_stay_g = np.log1p(-self.a_ab)


def _traj_rates(p: PhysicalParams, dt: float, beta_real):
    """Vectorized rates at the trajectory frequency. beta_real may be scalar or array."""
    w = p.omega0 + 2.0 * p.g_m * beta_real
    if np.any(w <= 0.0):
        raise FrequencyDomainError("trajectory frequency <= 0 during propagation")
    x = w / p.theta
    nbar = np.where(x > _EXP_ARG_MAX, 0.0, 1.0 / np.expm1(np.minimum(x, _EXP_ARG_MAX)))
    a_em = p.gamma * dt * (nbar + 1.0)
    if np.any(a_em > MAX_STEP_JUMP_PROBABILITY):
        raise StepSizeError("per-step jump probability exceeds the unraveling bound")
    return a_em, p.gamma * dt * nbar


def sample_initial(p: PhysicalParams, proto: ProtocolParams, rng: np.random.Generator):
    """Draw the initial machine state: thermal qubit at the nominal beta0, jittered amplitude.

    Returns (state, jitter_offset, log p_infinity[epsilon0]).  The thermal
    draw never sees the jitter; only the propagated amplitude does.
    """
    draws = rng.random(1 + (2 if proto.jitter_halfwidth > 0 else 0))
    return _initial_from_draws(p, proto, draws)


def _initial_from_draws(p: PhysicalParams, proto: ProtocolParams, draws):
    p_g, p_e, _ = thermal_distribution(p.beta0, p)
    excited = draws[0] < p_e
    log_p0 = float(np.log(p_e)) if excited else float(np.log(p_g))
    if proto.jitter_halfwidth > 0:
        h = proto.jitter_halfwidth
        offset = complex(h * (2.0 * draws[1] - 1.0), h * (2.0 * draws[2] - 1.0))
    else:
        offset = 0.0 + 0.0j
    eps = QubitLevel.e if excited else QubitLevel.g
    return MachineState(eps, p.beta0 + offset), offset, log_p0


def walk_trajectory(p: PhysicalParams, proto: ProtocolParams, epsilon0: QubitLevel,
                    jitter_offset: complex, log_p0: float, decide,
                    tables: _StepTables | None = None) -> TrajectoryRecord:
    """Advance one trajectory with outcomes chosen by ``decide``.

    ``decide(n, excited, p_emit, p_absorb)`` returns EMISSION, ABSORPTION or 0
    for step n in [1, n_steps]; emission is only offered from |e>, absorption
    only from |g>.  Used both for sampling (threshold on a uniform) and for
    exhaustive enumeration (forced outcomes).
    """
    if tables is None:
        tables = _StepTables(p, proto)
    dt = proto.dt
    rot = np.exp(-1j * p.Omega * dt)
    d = p.g_m / p.Omega
    markov = proto.mode == MARKOVIAN

    beta = complex(p.beta0 + jitter_offset)
    beta_init = beta
    beta_ideal = complex(p.beta0)
    excited = epsilon0 == QubitLevel.e
    excited0 = excited
    logf = log_p0
    logb = 0.0
    W = Q = Q_drive = 0.0
    jumps = []

    for n in range(1, proto.n_steps + 1):
        j = n - 1
        if markov:
            a_em, a_ab = tables.a_em[j], tables.a_ab[j]
        else:
            a_em, a_ab = _traj_rates(p, dt, beta.real)
            a_em, a_ab = float(a_em), float(a_ab)
        outcome = decide(n, excited, a_em if excited else 0.0, 0.0 if excited else a_ab)
        if outcome == 0:
            stay = np.log1p(-(a_em if excited else a_ab))
            logf += stay
            logb += stay
            if excited:
                bnew = (beta + d) * rot - d
                W += 2.0 * p.g_m * (bnew.real - beta.real)
                beta_ideal = (beta_ideal + d) * rot - d
            else:
                bnew = beta * rot
                beta_ideal = beta_ideal * rot
            beta = bnew
        else:
            w_actual = effective_frequency(beta, p)
            w_nom = tables.w_nom[j]
            with np.errstate(divide="ignore"):
                if outcome == EMISSION:
                    if not excited:
                        raise ValueError("emission offered from the ground state")
                    Q -= w_actual
                    Q_drive -= w_nom
                    logf += np.log(a_em)
                    logb += np.log(a_ab)  # reversed jump is an absorption
                    excited = False
                else:
                    if excited:
                        raise ValueError("absorption offered from the excited state")
                    Q += w_actual
                    Q_drive += w_nom
                    logf += np.log(a_ab)
                    logb += np.log(a_em)
                    excited = True
            jumps.append(JumpEvent(n, outcome))

    w_final = effective_frequency(beta, p)
    w_init = effective_frequency(beta_init, p)
    dE_m = p.Omega * (abs(beta) ** 2 - abs(beta_init) ** 2)
    dE_q = (w_final if excited else 0.0) - (w_init if excited0 else 0.0)
    dF = free_energy_change(p.beta0, beta, p)
    lnZf = float(np.log1p(np.exp(-w_final / p.theta)))
    log_pinf_final = (-w_final / p.theta if excited else 0.0) - lnZf

    beta_nom_final = complex(p.beta0 * np.exp(-1j * p.Omega * proto.t_final))
    w_nom_final = effective_frequency(beta_nom_final, p)
    w_nom_init = effective_frequency(p.beta0, p)
    dE_q_drive = (w_nom_final if excited else 0.0) - (w_nom_init if excited0 else 0.0)

    ledger = finalize(p, W=W, Q=Q, W_drive=dE_q_drive - Q_drive,
                      dE_q=dE_q, dE_m=dE_m, dF=dF,
                      log_p_forward=float(logf), log_pinf_final=float(log_pinf_final),
                      log_p_backward_conditional=float(logb))
    return TrajectoryRecord(
        epsilon0=epsilon0, jitter_offset=jitter_offset, beta_initial_actual=beta_init,
        jumps=tuple(jumps), epsilon_final=QubitLevel.e if excited else QubitLevel.g,
        beta_final_actual=beta, beta_final_ideal=beta_ideal,
        log_p_forward=float(logf), log_p_backward_conditional=float(logb),
        ledger=ledger)


def run_trajectory(p: PhysicalParams, proto: ProtocolParams, traj_index: int,
                   tables: _StepTables | None = None) -> TrajectoryRecord:
    """Sample one trajectory.  Bit-reproducible for identical inputs."""
    if tables is None:
        tables = _StepTables(p, proto)
    rng = trajectory_rng(proto.master_seed, traj_index)
    draws = rng.random(_n_draws(proto))
    n_init = 1 + (2 if proto.jitter_halfwidth > 0 else 0)
    state, offset, log_p0 = _initial_from_draws(p, proto, draws[:n_init])
    step_draws = draws[n_init:]

    def decide(n, excited, p_emit, p_absorb):
        u = step_draws[n - 1]
        if excited and u < p_emit:
            return EMISSION
        if (not excited) and u < p_absorb:
            return ABSORPTION
        return 0

    return walk_trajectory(p, proto, state.epsilon, offset, log_p0, decide, tables)


def replay_ideal(p: PhysicalParams, proto: ProtocolParams, epsilon0: QubitLevel,
                 jumps) -> complex:
    """Replay the jump record from the nominal beta0 (no jitter).

    Must reproduce ``beta_final_ideal`` bit-exactly: same per-step arithmetic
    as the engine.
    """
    rot = np.exp(-1j * p.Omega * proto.dt)
    d = p.g_m / p.Omega
    beta = complex(p.beta0)
    excited = epsilon0 == QubitLevel.e
    jump_at = {ev.step_index: ev.kind for ev in jumps}
    for n in range(1, proto.n_steps + 1):
        kind = jump_at.get(n)
        if kind is None:
            beta = (beta + d) * rot - d if excited else beta * rot
        else:
            excited = kind == ABSORPTION
    return beta


def run_shard(p: PhysicalParams, proto: ProtocolParams, start: int, count: int,
              tables: _StepTables | None = None) -> TrajectoryArrays:
    """Vectorized lock-step advance of trajectories [start, start+count)."""
    if tables is None:
        tables = _StepTables(p, proto)
    dt = proto.dt
    rot = np.exp(-1j * p.Omega * dt)
    d = p.g_m / p.Omega
    markov = proto.mode == MARKOVIAN
    jitter = proto.jitter_halfwidth > 0
    n_init = 1 + (2 if jitter else 0)
    n_steps = proto.n_steps

    gens = [trajectory_rng(proto.master_seed, i) for i in range(start, start + count)]
    init_draws = np.empty((count, n_init))
    for i, g in enumerate(gens):
        init_draws[i] = g.random(n_init)

    p_g0, p_e0, _ = thermal_distribution(p.beta0, p)
    exc = init_draws[:, 0] < p_e0
    exc0 = exc.copy()
    with np.errstate(divide="ignore"):  # log(0) picked only on the other branch
        logf = np.where(exc, np.log(p_e0), np.log(p_g0))
    logb = np.zeros(count)
    if jitter:
        h = proto.jitter_halfwidth
        offset = (h * (2.0 * init_draws[:, 1] - 1.0)
                  + 1j * h * (2.0 * init_draws[:, 2] - 1.0))
    else:
        offset = np.zeros(count, dtype=complex)
    beta = p.beta0 + offset
    beta_init = beta.copy()
    bideal = np.full(count, complex(p.beta0))
    W = np.zeros(count)
    Q = np.zeros(count)
    Qd = np.zeros(count)
    njump = np.zeros(count, dtype=np.int32)

    u_block = np.empty((count, _STEP_BLOCK))
    done = 0
    while done < n_steps:
        bs = min(_STEP_BLOCK, n_steps - done)
        for i, g in enumerate(gens):
            u_block[i, :bs] = g.random(bs)
        for k in range(bs):
            j = done + k
            u = u_block[:, k]
            if markov:
                em = exc & (u < tables.a_em[j])
                ab = (~exc) & (u < tables.a_ab[j])
            else:
                a_em, a_ab = _traj_rates(p, dt, beta.real)
                em = exc & (u < a_em)
                ab = (~exc) & (u < a_ab)
            jump = em | ab
            if markov:
                stay = np.where(exc, tables.log_stay_e[j], tables.log_stay_g[j])
            else:
                stay = np.log1p(-np.where(exc, a_em, a_ab))
            inc = np.where(jump, 0.0, stay)
            logf += inc
            logb += inc

            if jump.any():
                iem = np.nonzero(em)[0]
                iab = np.nonzero(ab)[0]
                if iem.size:
                    wa = p.omega0 + 2.0 * p.g_m * beta.real[iem]
                    Q[iem] -= wa
                    Qd[iem] -= tables.w_nom[j]
                    if markov:
                        logf[iem] += tables.log_a_em[j]
                        logb[iem] += tables.log_a_ab[j]
                    else:
                        with np.errstate(divide="ignore"):
                            logf[iem] += np.log(a_em[iem])
                            logb[iem] += np.log(a_ab[iem])
                if iab.size:
                    wa = p.omega0 + 2.0 * p.g_m * beta.real[iab]
                    Q[iab] += wa
                    Qd[iab] += tables.w_nom[j]
                    if markov:
                        logf[iab] += tables.log_a_ab[j]
                        logb[iab] += tables.log_a_em[j]
                    else:
                        with np.errstate(divide="ignore"):
                            logf[iab] += np.log(a_ab[iab])
                            logb[iab] += np.log(a_em[iab])
                exc = exc ^ jump
                njump += jump

            nj = ~jump
            e_nj = exc & nj
            bnew = np.where(e_nj, (beta + d) * rot - d, beta * rot)
            inew = np.where(e_nj, (bideal + d) * rot - d, bideal * rot)
            W += np.where(e_nj, 2.0 * p.g_m * (bnew.real - beta.real), 0.0)
            beta = np.where(nj, bnew, beta)
            bideal = np.where(nj, inew, bideal)
        done += bs

    w_final = p.omega0 + 2.0 * p.g_m * beta.real
    w_init = p.omega0 + 2.0 * p.g_m * beta_init.real
    if np.any(w_final <= 0.0) or np.any(w_init <= 0.0):
        raise FrequencyDomainError("effective frequency <= 0 at a trajectory endpoint")
    dE_m = p.Omega * (np.abs(beta) ** 2 - np.abs(beta_init) ** 2)
    dE_q = np.where(exc, w_final, 0.0) - np.where(exc0, w_init, 0.0)
    lnZ0 = float(np.log1p(np.exp(-effective_frequency(p.beta0, p) / p.theta)))
    lnZf = np.log1p(np.exp(-w_final / p.theta))
    dF = p.theta * (lnZ0 - lnZf)
    log_pinf_final = np.where(exc, -w_final / p.theta, 0.0) - lnZf

    beta_nom_final = complex(p.beta0 * np.exp(-1j * p.Omega * proto.t_final))
    w_nom_final = effective_frequency(beta_nom_final, p)
    w_nom_init = effective_frequency(p.beta0, p)
    dE_q_drive = np.where(exc, w_nom_final, 0.0) - np.where(exc0, w_nom_init, 0.0)
    W_drive = dE_q_drive - Qd

    sigma = -(dE_m + dF) / p.theta
    I_Sh = -logf
    dis = sigma + I_Sh
    dis_logratio = -(log_pinf_final + logb)

    return TrajectoryArrays(
        traj_index=np.arange(start, start + count, dtype=np.int64),
        eps0=exc0, eps_final=exc, n_jumps=njump, jitter_offset=offset,
        beta_final_actual=beta, beta_final_ideal=bideal,
        W=W, Q=Q, W_drive=W_drive, dE_q=dE_q, dE_m=dE_m, dF=dF,
        sigma=sigma, I_Sh=I_Sh, dis=dis, dis_logratio=dis_logratio,
        log_p_forward=logf, log_p_backward_conditional=logb,
        log_pinf_final=log_pinf_final)


def run_ensemble(p: PhysicalParams, proto: ProtocolParams, shard_size: int = 10_000,
                 keep_arrays: bool = False):
    """Run n_traj trajectories; returns (EnsembleAggregate, TrajectoryArrays or None).

    Shards are merged in index order, so the result does not depend on how
    the work is scheduled.  Fails fast on the first shard error.
    """
    from .estimators import EnsembleAggregate, accumulate

    check_step_bound(p, proto)
    tables = _StepTables(p, proto)
    agg = EnsembleAggregate.empty()
    parts = []
    start = 0
    while start < proto.n_traj:
        count = min(shard_size, proto.n_traj - start)
        arrays = run_shard(p, proto, start, count, tables)
        agg = agg.merge(accumulate(arrays, p))
        if keep_arrays:
            parts.append(arrays)
        start += count
    return agg, (concat_arrays(parts) if keep_arrays and parts else None)
