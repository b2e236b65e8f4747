"""Render sweep summary CSVs into publication-style figures.

The plotting layer is read-only: it consumes the published CSV schema and
never recomputes physics. Every series carries error bars taken from the
matching ``*_stderr`` column.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd


class SchemaError(ValueError):
    """Input CSV lacks columns required by the chosen figure kind."""

    def __init__(self, kind: str, missing: list):
        self.kind = kind
        self.missing = list(missing)
        super().__init__(
            f"CSV is missing columns required for {kind}: {', '.join(self.missing)}")


class EmptyInputError(ValueError):
    """Input CSV has a header but no data rows."""


REQUIRED = {
    "fig2a": ("semiclassical_ratio", "je_deviation", "je_stderr"),
    "fig2b": ("beta0_modulus", "je_deviation", "je_stderr",
              "drive_je_deviation", "drive_je_stderr"),
    "fig3": ("g_m_over_Omega", "je_meas_deviation", "je_meas_stderr",
             "mutual_information", "shannon_entropy"),
    "fig4a": ("kT_over_hbar_omega0", "ift_lhs", "ift_stderr",
              "lambda", "lambda_stderr"),
    "fig4b": ("kT_over_hbar_omega0", "mean_dis", "mean_dis_stderr",
              "mean_dis_logratio", "mean_dis_logratio_stderr"),
}
KINDS = tuple(REQUIRED)


@dataclass(frozen=True)
class PlotSpec:
    csv_path: str
    kind: str
    out_path: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _load(spec: PlotSpec) -> pd.DataFrame:
    df = pd.read_csv(spec.csv_path)
    missing = [c for c in REQUIRED[spec.kind] if c not in df.columns]
    if missing:
        raise SchemaError(spec.kind, missing)
    if df.empty:
        raise EmptyInputError(f"{spec.csv_path} contains no data rows")
    return df


def _fig2a(df, ax):
    ax.errorbar(df["semiclassical_ratio"], df["je_deviation"],
                yerr=3 * df["je_stderr"], fmt="o", color="tab:blue",
                capsize=3, label="reduced JE")
    ax.set_xscale("log")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel(r"$(g_m/\Omega)/|\beta_0|$")
    ax.set_ylabel(r"$\langle e^{-(W-\Delta F)/\theta}\rangle - 1$")


def _fig2b(df, ax):
    ax.errorbar(df["beta0_modulus"], df["je_deviation"],
                yerr=3 * df["je_stderr"], fmt="o", color="tab:blue",
                capsize=3, label="work meter")
    ax.errorbar(df["beta0_modulus"], df["drive_je_deviation"],
                yerr=3 * df["drive_je_stderr"], fmt="s", color="tab:red",
                capsize=3, label="classical drive")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel(r"$|\beta_0|$")
    ax.set_ylabel("JE deviation")
    ax.legend()


def _fig3(df, ax):
    ax.errorbar(df["g_m_over_Omega"], df["je_meas_deviation"],
                yerr=3 * df["je_meas_stderr"], fmt="o", color="tab:blue",
                capsize=3, label="measured JE")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel(r"$g_m/\Omega$")
    ax.set_ylabel("measured-JE deviation", color="tab:blue")
    right = ax.twinx()
    right.plot(df["g_m_over_Omega"], df["mutual_information"], "^-",
               color="tab:green", label="I")
    right.plot(df["g_m_over_Omega"], df["shannon_entropy"], "--",
               color="tab:orange", label=r"$S_{Sh}$")
    right.set_ylabel("information (nats)")
    right.legend(loc="center right")


def _fig4a(df, ax):
    total_err = (df["ift_stderr"] ** 2 + df["lambda_stderr"] ** 2) ** 0.5
    ax.errorbar(df["kT_over_hbar_omega0"], df["ift_lhs"] + df["lambda"],
                yerr=3 * total_err, fmt="o", color="tab:blue",
                capsize=3, label=r"$\langle e^{-\Delta i s}\rangle+\lambda$")
    ax.errorbar(df["kT_over_hbar_omega0"], df["lambda"],
                yerr=3 * df["lambda_stderr"], fmt="s", color="tab:red",
                capsize=3, label=r"$\lambda$")
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.set_xscale("log")
    ax.set_xlabel(r"$k_B T/\hbar\omega_0$")
    ax.set_ylabel("generalized IFT")
    ax.legend()


def _fig4b(df, ax):
    ax.errorbar(df["kT_over_hbar_omega0"], df["mean_dis"],
                yerr=3 * df["mean_dis_stderr"], fmt="o", color="tab:blue",
                capsize=3, label="direct estimator")
    ax.errorbar(df["kT_over_hbar_omega0"], df["mean_dis_logratio"],
                yerr=3 * df["mean_dis_logratio_stderr"], fmt="s",
                color="tab:red", capsize=3, label="log-ratio estimator")
    ax.axhline(0.0, color="gray", lw=0.8, ls="--")
    ax.set_xscale("log")
    ax.set_xlabel(r"$k_B T/\hbar\omega_0$")
    ax.set_ylabel(r"$\langle\Delta i s\rangle$")
    ax.legend()


_DRAWERS = {"fig2a": _fig2a, "fig2b": _fig2b, "fig3": _fig3,
            "fig4a": _fig4a, "fig4b": _fig4b}


def render(spec: PlotSpec) -> str:
    """Draw one figure and write it to spec.out_path; returns the path."""
    df = _load(spec)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    try:
        _DRAWERS[spec.kind](df, ax)
        ax.set_title(spec.kind)
        fig.tight_layout()
        fig.savefig(spec.out_path, dpi=150)
    finally:
        plt.close(fig)
    return spec.out_path
