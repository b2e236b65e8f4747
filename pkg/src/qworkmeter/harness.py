"""Sweep orchestration, parallel execution and persistence.

A sweep varies one axis over a base parameter set, runs the trajectory
ensemble at every point and writes one summary row per point.  Trajectory
shards are distributed over a process pool; because every trajectory owns a
counter-based random stream and shards are merged in index order, the summary
CSV is byte-identical for any worker count.

Outputs per sweep: ``summary.csv`` (fixed column order, 17-significant-digit
floats), ``manifest.json`` (everything needed to re-run bit-exactly, plus
wall times) and optionally ``raw/point_NN.csv`` with per-trajectory rows.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import theta_from_kelvin, validate_config
from .engine import TrajectoryArrays, concat_arrays, run_shard
from .errors import ConfigError
from .estimators import (EnsembleAggregate, accumulate, drive_je_deviation,
                         ift_lhs, je_deviation, lambda_estimate,
                         mean_entropy_production,
                         mean_entropy_production_direct)
from .measurement import (MeasurementAggregate, accumulate_measurement,
                          measured_je_deviation, mutual_information)
from .params import (MARKOVIAN, TRAJECTORY_FREQUENCY, PhysicalParams,
                     ProtocolParams, check_step_bound, default_t_final,
                     suggest_n_steps)
from .thermo import markovian_reference_dF

AXIS_GM_RATIO = "gm_over_Omega_ratio"
AXIS_BETA0 = "beta0_modulus"
AXIS_TEMPERATURE = "temperature"          # values are k_B T / (hbar omega0)
AXIS_GM_FIXED_PRODUCT = "gm_over_Omega_fixed_gmbeta0"
AXES = (AXIS_GM_RATIO, AXIS_BETA0, AXIS_TEMPERATURE, AXIS_GM_FIXED_PRODUCT)

DEFAULT_SHARD_SIZE = 10_000
PAPER_SCALE_N_TRAJ = 5_000_000
DESK_SCALE_N_TRAJ = 100_000

# Fixed, documented column order of summary.csv.  Measurement columns are
# NaN when the sweep runs without preparation jitter.
SUMMARY_COLUMNS = (
    "axis", "axis_value", "g_m_over_Omega", "beta0_modulus",
    "kT_over_hbar_omega0", "semiclassical_ratio",
    "omega0", "Omega", "gamma", "g_m", "theta", "beta0_re", "beta0_im",
    "t_final", "n_steps", "n_traj", "master_seed", "mode",
    "jitter_halfwidth", "grid_cell_halfwidth", "dF_ref",
    "je_deviation", "je_stderr",
    "drive_je_deviation", "drive_je_stderr",
    "ift_lhs", "ift_stderr",
    "lambda", "lambda_stderr",
    "mean_dis", "mean_dis_stderr",
    "mean_dis_logratio", "mean_dis_logratio_stderr",
    "mean_W", "mean_W_stderr", "mean_Q", "mean_Q_stderr",
    "mean_dE_m", "mean_dE_m_stderr", "pop_e_final",
    "je_kernel_max_share", "heavy_tail_flag",
    "je_meas_deviation", "je_meas_stderr",
    "mutual_information", "shannon_entropy", "shannon_entropy_stderr",
    "H_meas", "H_cond", "clamp_amount",
)

RAW_COLUMNS = (
    "traj_index", "epsilon0", "n_jumps",
    "re_beta_final_actual", "im_beta_final_actual",
    "re_beta_final_ideal", "im_beta_final_ideal",
    "W", "Q", "dF", "sigma", "I_Sh", "dis",
    "log_p_forward", "log_p_backward_conditional",
)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    physical: PhysicalParams     # base point; the axis overrides one knob
    protocol: ProtocolParams
    out_dir: str
    emit_raw: bool = False
    auto_steps: bool = True      # recompute n_steps per point from the rate bound
    label: str = "custom"

    def __post_init__(self):
        errors = []
        if self.axis not in AXES:
            errors.append(f"axis must be one of {AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            errors.append("values list is empty")
        elif not all(math.isfinite(v) and v > 0 for v in self.values):
            errors.append("axis values must be finite and positive")
        if errors:
            raise ConfigError(errors)


def point_params(spec: SweepSpec, value: float):
    """Physical and protocol parameters at one axis value."""
    p = spec.physical
    phase_unit = p.beta0 / abs(p.beta0)
    if spec.axis == AXIS_GM_RATIO:
        p = dataclasses.replace(p, g_m=value * p.Omega)
    elif spec.axis == AXIS_BETA0:
        p = dataclasses.replace(p, beta0=value * phase_unit)
    elif spec.axis == AXIS_TEMPERATURE:
        p = dataclasses.replace(p, theta=value * p.omega0)
    elif spec.axis == AXIS_GM_FIXED_PRODUCT:
        product = p.g_m * abs(p.beta0)
        g_m = value * p.Omega
        p = dataclasses.replace(p, g_m=g_m, beta0=(product / g_m) * phase_unit)
    proto = spec.protocol
    if spec.auto_steps:
        proto = dataclasses.replace(proto, n_steps=suggest_n_steps(p, proto.t_final))
    check_step_bound(p, proto)
    return p, proto


def _shard_task(args):
    p, proto, start, count, with_meas, keep_raw = args
    arrays = run_shard(p, proto, start, count)
    agg = accumulate(arrays, p)
    meas = accumulate_measurement(arrays, p, proto) if with_meas else None
    return start, agg, meas, (arrays if keep_raw else None)


@dataclass
class PointResult:
    physical: PhysicalParams
    protocol: ProtocolParams
    aggregate: EnsembleAggregate
    measurement: MeasurementAggregate | None
    arrays: TrajectoryArrays | None
    wall_time_s: float


def run_point(p: PhysicalParams, proto: ProtocolParams, n_workers: int = 1,
              shard_size: int = DEFAULT_SHARD_SIZE, keep_raw: bool = False,
              with_measurement: bool | None = None) -> PointResult:
    """Run one ensemble, sharded over a process pool when n_workers > 1."""
    t0 = time.monotonic()
    check_step_bound(p, proto)
    if with_measurement is None:
        with_measurement = proto.jitter_halfwidth > 0
    starts = list(range(0, proto.n_traj, shard_size))
    tasks = [(p, proto, s, min(shard_size, proto.n_traj - s), with_measurement, keep_raw)
             for s in starts]
    if n_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = {r[0]: r for r in pool.map(_shard_task, tasks)}
    else:
        results = {t[2]: _shard_task(t) for t in tasks}

    agg = EnsembleAggregate.empty()
    meas = MeasurementAggregate() if with_measurement else None
    parts = []
    for s in starts:  # index order: worker-count independent merge
        _, a, m, arr = results[s]
        agg = agg.merge(a)
        if with_measurement:
            meas = meas.merge(m)
        if keep_raw:
            parts.append(arr)
    arrays = concat_arrays(parts) if parts else None
    return PointResult(p, proto, agg, meas, arrays, time.monotonic() - t0)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def summary_row(axis: str, value: float, res: PointResult) -> dict:
    p, proto, agg = res.physical, res.protocol, res.aggregate
    dF_ref = markovian_reference_dF(p, proto.t_final)
    je, je_se = je_deviation(agg, dF_ref, p.theta)
    dje, dje_se = drive_je_deviation(agg, dF_ref, p.theta)
    ift, ift_se = ift_lhs(agg)
    lam, lam_se = lambda_estimate(agg)
    dis_lr, dis_lr_se = mean_entropy_production(agg)
    dis_d, dis_d_se = mean_entropy_production_direct(agg)
    row = {
        "axis": axis, "axis_value": float(value),
        "g_m_over_Omega": p.g_m / p.Omega, "beta0_modulus": abs(p.beta0),
        "kT_over_hbar_omega0": p.theta / p.omega0,
        "semiclassical_ratio": p.semiclassical_ratio,
        "omega0": p.omega0, "Omega": p.Omega, "gamma": p.gamma, "g_m": p.g_m,
        "theta": p.theta, "beta0_re": p.beta0.real, "beta0_im": p.beta0.imag,
        "t_final": proto.t_final, "n_steps": proto.n_steps,
        "n_traj": proto.n_traj, "master_seed": proto.master_seed,
        "mode": proto.mode, "jitter_halfwidth": proto.jitter_halfwidth,
        "grid_cell_halfwidth": proto.grid_cell_halfwidth, "dF_ref": dF_ref,
        "je_deviation": je, "je_stderr": je_se,
        "drive_je_deviation": dje, "drive_je_stderr": dje_se,
        "ift_lhs": ift, "ift_stderr": ift_se,
        "lambda": lam, "lambda_stderr": lam_se,
        "mean_dis": dis_d, "mean_dis_stderr": dis_d_se,
        "mean_dis_logratio": dis_lr, "mean_dis_logratio_stderr": dis_lr_se,
        "mean_W": agg.mean("W"), "mean_W_stderr": agg.std_error("W"),
        "mean_Q": agg.mean("Q"), "mean_Q_stderr": agg.std_error("Q"),
        "mean_dE_m": agg.mean("dE_m"), "mean_dE_m_stderr": agg.std_error("dE_m"),
        "pop_e_final": agg.mean("pop_e"),
        "je_kernel_max_share": agg.je_kernel_max_share,
        "heavy_tail_flag": agg.heavy_tail_flag,
    }
    nan = float("nan")
    if res.measurement is not None:
        mje, mje_se = measured_je_deviation(res.measurement, dF_ref, p.theta)
        mi = mutual_information(res.measurement)
        row.update({
            "je_meas_deviation": mje, "je_meas_stderr": mje_se,
            "mutual_information": mi.mutual_information,
            "shannon_entropy": mi.shannon_entropy,
            "shannon_entropy_stderr": mi.shannon_entropy_stderr,
            "H_meas": mi.measured_entropy, "H_cond": mi.conditional_entropy,
            "clamp_amount": mi.clamp_amount,
        })
    else:
        row.update({k: nan for k in (
            "je_meas_deviation", "je_meas_stderr", "mutual_information",
            "shannon_entropy", "shannon_entropy_stderr", "H_meas", "H_cond",
            "clamp_amount")})
    return row


def _write_raw_csv(path: str, arrays: TrajectoryArrays) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(RAW_COLUMNS) + "\n")
        for i in range(len(arrays)):
            vals = (
                int(arrays.traj_index[i]), int(arrays.eps0[i]), int(arrays.n_jumps[i]),
                float(arrays.beta_final_actual[i].real),
                float(arrays.beta_final_actual[i].imag),
                float(arrays.beta_final_ideal[i].real),
                float(arrays.beta_final_ideal[i].imag),
                float(arrays.W[i]), float(arrays.Q[i]), float(arrays.dF[i]),
                float(arrays.sigma[i]), float(arrays.I_Sh[i]), float(arrays.dis[i]),
                float(arrays.log_p_forward[i]),
                float(arrays.log_p_backward_conditional[i]),
            )
            f.write(",".join(_fmt(v) for v in vals) + "\n")


def _physical_to_dict(p: PhysicalParams) -> dict:
    return {"omega0": p.omega0, "Omega": p.Omega, "gamma": p.gamma,
            "g_m": p.g_m, "theta": p.theta,
            "beta0_re": p.beta0.real, "beta0_im": p.beta0.imag}


def _protocol_to_dict(proto: ProtocolParams) -> dict:
    return {"t_final": proto.t_final, "n_steps": proto.n_steps,
            "n_traj": proto.n_traj, "master_seed": proto.master_seed,
            "mode": proto.mode, "jitter_halfwidth": proto.jitter_halfwidth,
            "grid_cell_halfwidth": proto.grid_cell_halfwidth}


def run_sweep(spec: SweepSpec, n_workers: int = 1,
              shard_size: int = DEFAULT_SHARD_SIZE) -> str:
    """Run every sweep point; returns the summary CSV path.

    On a point failure the sweep aborts: rows finished so far stay in the
    CSV and the manifest is written with status "incomplete" before the
    error propagates.
    """
    os.makedirs(spec.out_dir, exist_ok=True)
    if spec.emit_raw:
        os.makedirs(os.path.join(spec.out_dir, "raw"), exist_ok=True)
    summary_path = os.path.join(spec.out_dir, "summary.csv")
    manifest = {
        "format": "qworkmeter-manifest-1",
        "code_version": __version__,
        "label": spec.label,
        "axis": spec.axis,
        "values": list(spec.values),
        "base_physical": _physical_to_dict(spec.physical),
        "base_protocol": _protocol_to_dict(spec.protocol),
        "emit_raw": spec.emit_raw,
        "auto_steps": spec.auto_steps,
        "shard_size": shard_size,
        "status": "incomplete",
        "points": [],
    }
    t0 = time.monotonic()
    try:
        with open(summary_path, "w", encoding="utf-8", newline="") as f:
            f.write(",".join(SUMMARY_COLUMNS) + "\n")
            f.flush()
            for idx, value in enumerate(spec.values):
                p, proto = point_params(spec, value)
                res = run_point(p, proto, n_workers=n_workers,
                                shard_size=shard_size, keep_raw=spec.emit_raw)
                row = summary_row(spec.axis, value, res)
                f.write(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS) + "\n")
                f.flush()
                if spec.emit_raw and res.arrays is not None:
                    _write_raw_csv(os.path.join(spec.out_dir, "raw",
                                                f"point_{idx:02d}.csv"), res.arrays)
                manifest["points"].append({
                    "axis_value": value, "n_steps": proto.n_steps,
                    "wall_time_s": res.wall_time_s})
        manifest["status"] = "complete"
    except Exception as e:
        manifest["error"] = f"{type(e).__name__}: {e}"
        raise
    finally:
        manifest["wall_time_s"] = time.monotonic() - t0
        with open(os.path.join(spec.out_dir, "manifest.json"), "w",
                  encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)
    return summary_path


def spec_from_manifest(path: str, out_dir: str | None = None) -> SweepSpec:
    """Rebuild the exact SweepSpec recorded in a manifest."""
    with open(path, encoding="utf-8") as f:
        m = json.load(f)
    bp = m["base_physical"]
    p = PhysicalParams(omega0=bp["omega0"], Omega=bp["Omega"], gamma=bp["gamma"],
                       g_m=bp["g_m"], theta=bp["theta"],
                       beta0=complex(bp["beta0_re"], bp["beta0_im"]))
    proto = ProtocolParams(**m["base_protocol"])
    return SweepSpec(axis=m["axis"], values=tuple(m["values"]), physical=p,
                     protocol=proto,
                     out_dir=out_dir or os.path.dirname(os.path.abspath(path)),
                     emit_raw=m["emit_raw"], auto_steps=m["auto_steps"],
                     label=m["label"])


# ---------------------------------------------------------------------------
# Presets.  Desk scale by default; --paper-scale switches n_traj to 5e6.

_T_BATH_K = 80.0


def _preset_base(Omega_over_2pi: float, gamma_over_Omega: float, omega0: float,
                 g_m_over_Omega: float, beta0_modulus: float, theta: float,
                 mode: str, n_traj: int, seed: int,
                 jitter: float = 0.0, cell: float = 2.0):
    Omega = 2.0 * math.pi * Omega_over_2pi
    p = PhysicalParams(omega0=omega0, Omega=Omega, gamma=gamma_over_Omega * Omega,
                       g_m=g_m_over_Omega * Omega, theta=theta,
                       beta0=beta0_modulus * 1j)
    t_final = default_t_final(p)
    proto = ProtocolParams(t_final=t_final, n_steps=suggest_n_steps(p, t_final),
                           n_traj=n_traj, master_seed=seed, mode=mode,
                           jitter_halfwidth=jitter, grid_cell_halfwidth=cell)
    return p, proto


def preset_spec(name: str, out_dir: str, n_traj: int | None = None,
                master_seed: int = 0, emit_raw: bool = False) -> SweepSpec:
    """Shipped sweep recipes behind ``sweep --preset``.

    fig2   coupling sweep at fixed |beta0|: reduced-JE validity and breakdown.
    fig2b  |beta0| sweep with the classical-drive control estimator.
    fig3   fixed 2 g_m |beta0| sweep with jitter and grid measurement.
    fig4   temperature sweep for the generalized IFT and entropy production.
    """
    n = DESK_SCALE_N_TRAJ if n_traj is None else n_traj
    theta80 = theta_from_kelvin(_T_BATH_K)
    if name == "fig2":
        p, proto = _preset_base(1e5, 5.0, 1.2 * theta80, 10.0, 5000.0, theta80,
                                TRAJECTORY_FREQUENCY, n, master_seed)
        values = (10.0, 20.0, 50.0, 100.0, 200.0)  # g_m/2pi = 1..20 MHz
        return SweepSpec(AXIS_GM_RATIO, values, p, proto, out_dir,
                         emit_raw=emit_raw, label="fig2")
    if name == "fig2b":
        p, proto = _preset_base(1e5, 5.0, 1.2 * theta80, 10.0, 5000.0, theta80,
                                MARKOVIAN, n, master_seed)
        values = (500.0, 1000.0, 2000.0, 5000.0, 10000.0)
        return SweepSpec(AXIS_BETA0, values, p, proto, out_dir,
                         emit_raw=emit_raw, label="fig2b")
    if name == "fig3":
        omega0 = 2.0 * math.pi * 2e12
        # Base point sets the conserved product 2 g_m |beta0| = 2pi * 600 GHz.
        Omega = 2.0 * math.pi * 1e3
        g_m_over_Omega = 10.0
        beta0 = math.pi * 600e9 / (g_m_over_Omega * Omega)
        p, proto = _preset_base(1e3, 5.0, omega0, g_m_over_Omega, beta0, theta80,
                                MARKOVIAN, n, master_seed, jitter=2.0, cell=2.0)
        values = (2.0, 5.0, 10.0, 20.0, 50.0)
        return SweepSpec(AXIS_GM_FIXED_PRODUCT, values, p, proto, out_dir,
                         emit_raw=emit_raw, label="fig3")
    if name == "fig4":
        omega0 = 2.0 * math.pi * 2e12
        p, proto = _preset_base(1e5, 0.5, omega0, 10.0, 5000.0, 1.0 * omega0,
                                MARKOVIAN, n, master_seed)
        values = (0.1, 0.5, 1.0, 2.0, 5.0)  # k_B T / (hbar omega0)
        return SweepSpec(AXIS_TEMPERATURE, values, p, proto, out_dir,
                         emit_raw=emit_raw, label="fig4")
    raise ConfigError([f"unknown preset {name!r}; choose fig2, fig2b, fig3 or fig4"])


def spec_from_config(raw: dict, out_dir: str, emit_raw: bool = False) -> SweepSpec:
    """Build a SweepSpec from a flat config dict with axis/values keys added."""
    raw = dict(raw)
    errors = []
    axis = raw.pop("axis", None)
    values_s = raw.pop("values", None)
    label = raw.pop("label", "custom")
    if axis is None:
        errors.append("axis: required key missing")
    values = ()
    if values_s is None:
        errors.append("values: required key missing")
    else:
        try:
            values = tuple(float(v) for v in str(values_s).split(","))
        except ValueError:
            errors.append(f"values: cannot parse {values_s!r} as comma-separated floats")
    if errors:
        raise ConfigError(errors)
    cfg = validate_config(raw)
    return SweepSpec(axis=axis, values=values, physical=cfg.physical,
                     protocol=cfg.protocol, out_dir=out_dir, emit_raw=emit_raw,
                     label=label)
