"""Command-line entry point.

Subcommands::

    qworkmeter run      --config FILE [overrides]      single ensemble point
    qworkmeter sweep    --preset NAME | --spec FILE    figure-style sweep
    qworkmeter oracle   --config FILE                  master-equation trace
    qworkmeter enumerate --config FILE                 brute-force small check
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import load_config, parse_config_text
from .enumeration import summarize
from .errors import QworkmeterError
from .harness import (DEFAULT_SHARD_SIZE, PAPER_SCALE_N_TRAJ, SUMMARY_COLUMNS,
                      _fmt, _write_raw_csv, preset_spec, run_point, run_sweep,
                      spec_from_config, spec_from_manifest, summary_row)
from .oracle import integrate_master_equation
from .thermo import markovian_reference_dF


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=None, help="master RNG seed")
    sub.add_argument("--n-traj", type=int, default=None, help="ensemble size")
    sub.add_argument("--n-steps", type=int, default=None, help="time-grid points")
    sub.add_argument("--mode", choices=["markovian", "trajectory_frequency"],
                     default=None, help="rate-frequency mode")
    sub.add_argument("--out", default="out", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qworkmeter",
                                 description="Quantum work-meter trajectory simulator")
    sp = ap.add_subparsers(dest="command", required=True)

    run = sp.add_parser("run", help="run a single ensemble point")
    run.add_argument("--config", required=True, help="flat key = value config file")
    run.add_argument("--emit-raw", action="store_true",
                     help="write per-trajectory raw.csv")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--shard-size", type=int, default=DEFAULT_SHARD_SIZE)
    _add_common(run)

    sweep = sp.add_parser("sweep", help="run a figure-style parameter sweep")
    src = sweep.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=["fig2", "fig2b", "fig3", "fig4"])
    src.add_argument("--spec", metavar="FILE",
                     help="sweep config file (flat keys + axis/values)")
    src.add_argument("--manifest", metavar="FILE",
                     help="re-run a sweep exactly from its manifest")
    sweep.add_argument("--emit-raw", action="store_true")
    sweep.add_argument("--paper-scale", action="store_true",
                       help=f"n_traj = {PAPER_SCALE_N_TRAJ} instead of the desk default")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--shard-size", type=int, default=DEFAULT_SHARD_SIZE)
    _add_common(sweep)

    orc = sp.add_parser("oracle", help="integrate the reduced master equation")
    orc.add_argument("--config", required=True)
    orc.add_argument("--substeps", type=int, default=20_000)
    _add_common(orc)

    enum = sp.add_parser("enumerate", help="exhaustive small-instance check")
    enum.add_argument("--config", required=True)
    _add_common(enum)
    return ap


def _apply_overrides(proto, args):
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.n_traj is not None:
        changes["n_traj"] = args.n_traj
    if args.n_steps is not None:
        changes["n_steps"] = args.n_steps
    if getattr(args, "mode", None) is not None:
        changes["mode"] = args.mode
    return dataclasses.replace(proto, **changes) if changes else proto


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    proto = _apply_overrides(cfg.protocol, args)
    res = run_point(cfg.physical, proto, n_workers=args.workers,
                    shard_size=args.shard_size, keep_raw=args.emit_raw)
    row = summary_row("single", 0.0, res)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "summary.csv")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(SUMMARY_COLUMNS) + "\n")
        f.write(",".join(_fmt(row[c]) for c in SUMMARY_COLUMNS) + "\n")
    if args.emit_raw and res.arrays is not None:
        _write_raw_csv(os.path.join(args.out, "raw.csv"), res.arrays)
    for name in ("je_deviation", "je_stderr", "ift_lhs", "lambda", "mean_dis",
                 "mean_W", "pop_e_final"):
        print(f"{name} = {row[name]:.6g}")
    print(f"wrote {path} ({res.wall_time_s:.1f} s)")
    return 0


def _cmd_sweep(args) -> int:
    if args.manifest:
        spec = spec_from_manifest(args.manifest, out_dir=args.out)
    elif args.preset:
        n_traj = args.n_traj or (PAPER_SCALE_N_TRAJ if args.paper_scale else None)
        spec = preset_spec(args.preset, args.out, n_traj=n_traj,
                           master_seed=args.seed or 0, emit_raw=args.emit_raw)
    else:
        with open(args.spec, encoding="utf-8") as f:
            raw = parse_config_text(f.read())
        spec = spec_from_config(raw, args.out, emit_raw=args.emit_raw)
        proto = _apply_overrides(spec.protocol, args)
        if args.paper_scale:
            proto = dataclasses.replace(proto, n_traj=PAPER_SCALE_N_TRAJ)
        spec = dataclasses.replace(spec, protocol=proto)
    path = run_sweep(spec, n_workers=args.workers, shard_size=args.shard_size)
    print(f"wrote {path}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    p = cfg.physical
    proto = _apply_overrides(cfg.protocol, args)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "oracle_trace.csv")
    n_trace = 200
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("t,p_e,mean_work_cumulative\n")
        for i in range(1, n_trace + 1):
            t = proto.t_final * i / n_trace
            sub = max(1, args.substeps * i // n_trace)
            r = integrate_master_equation(p, t, sub)
            f.write(f"{_fmt(t)},{_fmt(r.pop_e)},{_fmt(r.W)}\n")
    final = integrate_master_equation(p, proto.t_final, args.substeps)
    print(f"p_e(t_N) = {final.pop_e:.9g}")
    print(f"<W>      = {final.W:.9g}")
    print(f"<Q>      = {final.Q:.9g}")
    print(f"wrote {path}")
    return 0


def _cmd_enumerate(args) -> int:
    cfg = load_config(args.config)
    p = cfg.physical
    proto = _apply_overrides(cfg.protocol, args)
    dF_ref = markovian_reference_dF(p, proto.t_final)
    s = summarize(p, proto, dF_ref)
    print(f"paths enumerated   = {s.n_paths}")
    print(f"total probability  = {s.total_probability:.15g}")
    print(f"<W>                = {s.mean_W:.9g}")
    print(f"<Q>                = {s.mean_Q:.9g}")
    print(f"pop_e(t_N)         = {s.pop_e:.9g}")
    print(f"JE mean            = {s.je_mean:.9g}")
    print(f"drive JE mean      = {s.drive_je_mean:.9g}")
    print(f"IFT mean           = {s.ift_mean:.9g}")
    print(f"lambda             = {s.lambda_value:.9g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_enumerate(args)
    except QworkmeterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
