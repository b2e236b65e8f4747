"""Ensemble estimators for the fluctuation theorems and their standard errors.

Aggregates are value objects holding running sums and sums of squares of the
estimator kernels; merging is associative and commutative, so shards can be
combined in any tree order.  Within a shard the sums use numpy's pairwise
summation over the trajectory arrays, which is deterministic for a fixed
shard layout.  Exponentials are computed from log-domain ledger values with
overflow guards: exp(-dis) spans many decades at high temperature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyAggregateError
from .params import PhysicalParams

# Kernel/moment columns tracked by the aggregate, in fixed order.
FIELDS = (
    "je_kernel",      # exp(dE_m/theta); multiply by exp(dF_ref/theta) on read
    "drive_kernel",   # exp(-W_drive/theta); classical-drive control
    "ift_kernel",     # exp(-dis)
    "lambda_kernel",  # exp(-dis_logratio) = p_inf[eps_N] * prod(backward probs)
    "dis",
    "dis_logratio",
    "W",
    "Q",
    "dE_m",
    "W_drive",
    "pop_e",          # indicator of the excited final level
)
_IDX = {name: i for i, name in enumerate(FIELDS)}

_EXP_ARG_MAX = 700.0

# One trajectory contributing more than this share of the JE kernel sum is
# flagged as a rare-event (heavy tail) diagnostic.
HEAVY_TAIL_SHARE = 0.10


def _safe_exp(x):
    return np.exp(np.clip(x, -_EXP_ARG_MAX, _EXP_ARG_MAX))


@dataclass(frozen=True)
class EnsembleAggregate:
    n: int
    sums: np.ndarray     # shape (len(FIELDS),)
    sumsq: np.ndarray
    max_je_kernel: float

    @staticmethod
    def empty() -> "EnsembleAggregate":
        k = len(FIELDS)
        return EnsembleAggregate(0, np.zeros(k), np.zeros(k), 0.0)

    def merge(self, other: "EnsembleAggregate") -> "EnsembleAggregate":
        return EnsembleAggregate(
            self.n + other.n,
            self.sums + other.sums,
            self.sumsq + other.sumsq,
            max(self.max_je_kernel, other.max_je_kernel),
        )

    def mean(self, name: str) -> float:
        if self.n == 0:
            raise EmptyAggregateError(f"mean({name}) on an empty aggregate")
        return float(self.sums[_IDX[name]] / self.n)

    def std_error(self, name: str) -> float:
        if self.n < 2:
            raise EmptyAggregateError(f"std_error({name}) needs n >= 2, have {self.n}")
        i = _IDX[name]
        var = (self.sumsq[i] - self.sums[i] ** 2 / self.n) / (self.n - 1)
        return float(np.sqrt(max(var, 0.0) / self.n))

    @property
    def je_kernel_max_share(self) -> float:
        """Share of the JE kernel sum carried by its largest single term."""
        s = self.sums[_IDX["je_kernel"]]
        return float(self.max_je_kernel / s) if s > 0 else 0.0

    @property
    def heavy_tail_flag(self) -> bool:
        return self.je_kernel_max_share > HEAVY_TAIL_SHARE


def accumulate(arrays, p: PhysicalParams) -> EnsembleAggregate:
    """Build an aggregate from the per-trajectory arrays of one shard."""
    cols = np.empty((len(FIELDS), len(arrays)))
    cols[_IDX["je_kernel"]] = _safe_exp(arrays.dE_m / p.theta)
    cols[_IDX["drive_kernel"]] = _safe_exp(-arrays.W_drive / p.theta)
    cols[_IDX["ift_kernel"]] = _safe_exp(-arrays.dis)
    cols[_IDX["lambda_kernel"]] = _safe_exp(-arrays.dis_logratio)
    cols[_IDX["dis"]] = arrays.dis
    cols[_IDX["dis_logratio"]] = arrays.dis_logratio
    cols[_IDX["W"]] = arrays.W
    cols[_IDX["Q"]] = arrays.Q
    cols[_IDX["dE_m"]] = arrays.dE_m
    cols[_IDX["W_drive"]] = arrays.W_drive
    cols[_IDX["pop_e"]] = arrays.eps_final
    max_je = float(cols[_IDX["je_kernel"]].max()) if len(arrays) else 0.0
    return EnsembleAggregate(len(arrays), cols.sum(axis=1), (cols * cols).sum(axis=1),
                             max_je)


def je_deviation(agg: EnsembleAggregate, dF_ref: float, theta: float):
    """Deviation of the mechanical-energy Jarzynski estimator from zero.

    <exp(dE_m/theta)> * exp(dF_ref/theta) - 1, with the statistical error of
    the kernel mean propagated through the constant factor.
    """
    f = float(np.exp(dF_ref / theta))
    return f * agg.mean("je_kernel") - 1.0, f * agg.std_error("je_kernel")


def drive_je_deviation(agg: EnsembleAggregate, dF_ref: float, theta: float):
    """Same deviation for the classical-external-drive work accounting."""
    f = float(np.exp(dF_ref / theta))
    return f * agg.mean("drive_kernel") - 1.0, f * agg.std_error("drive_kernel")


def ift_lhs(agg: EnsembleAggregate):
    """<exp(-dis)>: the left-hand side of the generalized fluctuation theorem."""
    return agg.mean("ift_kernel"), agg.std_error("ift_kernel")


def lambda_estimate(agg: EnsembleAggregate):
    """Absolute-irreversibility weight: total backward probability never
    reached by a forward trajectory, 1 - <p_inf[eps_N] prod(backward probs)>."""
    return 1.0 - agg.mean("lambda_kernel"), agg.std_error("lambda_kernel")


def mean_entropy_production(agg: EnsembleAggregate):
    """<dis_logratio>: mean entropy production via the backward-probability route."""
    return agg.mean("dis_logratio"), agg.std_error("dis_logratio")


def mean_entropy_production_direct(agg: EnsembleAggregate):
    """<dis> via the energetic decomposition, for cross-checking."""
    return agg.mean("dis"), agg.std_error("dis")
