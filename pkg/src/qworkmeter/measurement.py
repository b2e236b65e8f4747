"""Finite-precision readout of the mechanical amplitude.

The grid has cells of width 2*delta (delta = grid_cell_halfwidth), anchored so
the origin is a cell center; an amplitude on a cell boundary belongs to the
upper cell (half-open convention).  The initial preparation jitter, uniform on
a square of halfwidth jitter_halfwidth, maps through the dynamics to a square
of the same side length rotated by -Omega*t_final and centered on the ideal
final amplitude of the trajectory class, so the conditional distribution of
the measured cell is computed analytically as overlap areas of that square
with the grid (1-D interval overlaps when the rotation is a multiple of 90
degrees, convex polygon clipping otherwise).

Logarithms are natural throughout; entropies and mutual information are in
nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyAggregateError
from .params import PhysicalParams, ProtocolParams

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class GridCell:
    kx: int
    ky: int

    def center(self, delta: float) -> complex:
        return complex(2.0 * delta * self.kx, 2.0 * delta * self.ky)


def measure(beta_final_actual: complex, delta: float) -> GridCell:
    """Deterministic binning of an amplitude onto the measurement grid."""
    if not delta > 0:
        raise ValueError("grid cell halfwidth must be > 0")
    kx = math.floor((beta_final_actual.real + delta) / (2.0 * delta))
    ky = math.floor((beta_final_actual.imag + delta) / (2.0 * delta))
    return GridCell(kx, ky)


def measured_work(beta0_nominal: complex, cell_center: complex, p: PhysicalParams) -> float:
    """Work inferred from the finite-precision readout, Omega(|b0|^2 - |center|^2).

    The initial amplitude is taken as known exactly (the preparation target).
    """
    return p.Omega * (abs(beta0_nominal) ** 2 - abs(cell_center) ** 2)


def _clip_polygon(poly, axis, bound, keep_below):
    """Sutherland-Hodgman clip of a convex polygon against one axis-aligned line."""
    out = []
    m = len(poly)
    for i in range(m):
        a = poly[i]
        b = poly[(i + 1) % m]
        ia = (a[axis] <= bound) if keep_below else (a[axis] >= bound)
        ib = (b[axis] <= bound) if keep_below else (b[axis] >= bound)
        if ia:
            out.append(a)
        if ia != ib:
            t = (bound - a[axis]) / (b[axis] - a[axis])
            out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


def _polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    area = 0.0
    m = len(poly)
    for i in range(m):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % m]
        area += x0 * y1 - x1 * y0
    return abs(area) / 2.0


def _interval_cell_fractions(center: float, half: float, delta: float):
    """Overlap fractions of the interval [center-half, center+half] with grid cells."""
    lo = center - half
    hi = center + half
    k_lo = math.floor((lo + delta) / (2.0 * delta))
    k_hi = math.floor((hi + delta) / (2.0 * delta))
    # Upper endpoint exactly on a boundary: no mass in the upper cell.
    if hi == (2.0 * k_hi - 1.0) * delta:
        k_hi -= 1
    out = []
    width = 2.0 * half
    for k in range(k_lo, k_hi + 1):
        a = max(lo, (2.0 * k - 1.0) * delta)
        b = min(hi, (2.0 * k + 1.0) * delta)
        if b > a:
            out.append((k, (b - a) / width))
    return out


def conditional_cell_distribution(beta_final_ideal: complex, p: PhysicalParams,
                                  proto: ProtocolParams):
    """Exact cell distribution of the measured amplitude given a trajectory class.

    Returns a list of (GridCell, probability) summing to 1.  With jitter
    disabled the distribution is a point mass on the cell of the class label.
    """
    delta = proto.grid_cell_halfwidth
    h = proto.jitter_halfwidth
    if h == 0.0:
        return [(measure(beta_final_ideal, delta), 1.0)]

    phi = -p.Omega * proto.t_final
    quarter_turns = phi / (math.pi / 2.0)
    if abs(quarter_turns - round(quarter_turns)) < _ALIGN_TOL:
        fx = _interval_cell_fractions(beta_final_ideal.real, h, delta)
        fy = _interval_cell_fractions(beta_final_ideal.imag, h, delta)
        return [(GridCell(kx, ky), px * py) for kx, px in fx for ky, py in fy]

    # General rotation: clip the rotated square against each candidate cell.
    w = complex(math.cos(phi), math.sin(phi))
    corners = [beta_final_ideal + w * complex(sx * h, sy * h)
               for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1))]
    poly = [(c.real, c.imag) for c in corners]
    xs = [v[0] for v in poly]
    ys = [v[1] for v in poly]
    area_total = (2.0 * h) ** 2
    out = []
    kx_lo = math.floor((min(xs) + delta) / (2.0 * delta))
    kx_hi = math.floor((max(xs) + delta) / (2.0 * delta))
    ky_lo = math.floor((min(ys) + delta) / (2.0 * delta))
    ky_hi = math.floor((max(ys) + delta) / (2.0 * delta))
    for kx in range(kx_lo, kx_hi + 1):
        clipped_x = _clip_polygon(poly, 0, (2.0 * kx - 1.0) * delta, False)
        clipped_x = _clip_polygon(clipped_x, 0, (2.0 * kx + 1.0) * delta, True)
        if not clipped_x:
            continue
        for ky in range(ky_lo, ky_hi + 1):
            cell = _clip_polygon(clipped_x, 1, (2.0 * ky - 1.0) * delta, False)
            cell = _clip_polygon(cell, 1, (2.0 * ky + 1.0) * delta, True)
            a = _polygon_area(cell)
            if a > 0.0:
                out.append((GridCell(kx, ky), a / area_total))
    return out


def _entropy_terms(fracs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(fracs > 0.0, -fracs * np.log(np.where(fracs > 0.0, fracs, 1.0)), 0.0)
    return t


@dataclass
class MeasurementAggregate:
    """Mergeable accumulator for the measured-JE and mutual-information sweep."""

    n: int = 0
    meas_kernel_sum: float = 0.0    # exp(-W_measured/theta)
    meas_kernel_sumsq: float = 0.0
    class_neglogp_sum: float = 0.0  # -ln P[Sigma], the class self-information
    class_neglogp_sumsq: float = 0.0
    cond_entropy_sum: float = 0.0   # per-class entropy of the measured cell
    cond_entropy_sumsq: float = 0.0
    cell_prob_sums: dict = field(default_factory=dict)  # (kx, ky) -> summed probability

    def merge(self, other: "MeasurementAggregate") -> "MeasurementAggregate":
        cells = dict(self.cell_prob_sums)
        for k, v in other.cell_prob_sums.items():
            cells[k] = cells.get(k, 0.0) + v
        return MeasurementAggregate(
            self.n + other.n,
            self.meas_kernel_sum + other.meas_kernel_sum,
            self.meas_kernel_sumsq + other.meas_kernel_sumsq,
            self.class_neglogp_sum + other.class_neglogp_sum,
            self.class_neglogp_sumsq + other.class_neglogp_sumsq,
            self.cond_entropy_sum + other.cond_entropy_sum,
            self.cond_entropy_sumsq + other.cond_entropy_sumsq,
            cells,
        )


def accumulate_measurement(arrays, p: PhysicalParams, proto: ProtocolParams) -> MeasurementAggregate:
    """Measurement-layer accumulation over one shard of trajectories.

    The fast path assumes the common case of a quarter-turn-aligned protocol
    window, where the conditional distribution factorizes per axis with at
    most two cells each; anything else goes through the polygon route.
    """
    delta = proto.grid_cell_halfwidth
    h = proto.jitter_halfwidth
    n = len(arrays)
    agg = MeasurementAggregate()
    agg.n = n

    # Measured work from the binned actual final amplitude.
    bf = arrays.beta_final_actual
    kx = np.floor((bf.real + delta) / (2.0 * delta))
    ky = np.floor((bf.imag + delta) / (2.0 * delta))
    cx = 2.0 * delta * kx
    cy = 2.0 * delta * ky
    w_meas = p.Omega * (abs(p.beta0) ** 2 - (cx * cx + cy * cy))
    kern = np.exp(np.clip(-w_meas / p.theta, -700.0, 700.0))
    agg.meas_kernel_sum = float(kern.sum())
    agg.meas_kernel_sumsq = float((kern * kern).sum())

    neglogp = -arrays.log_p_forward
    agg.class_neglogp_sum = float(neglogp.sum())
    agg.class_neglogp_sumsq = float((neglogp * neglogp).sum())

    phi = -p.Omega * proto.t_final
    quarter_turns = phi / (math.pi / 2.0)
    aligned = abs(quarter_turns - round(quarter_turns)) < _ALIGN_TOL
    bi = arrays.beta_final_ideal
    if h == 0.0:
        # Point-mass conditionals: zero conditional entropy.
        ikx = np.floor((bi.real + delta) / (2.0 * delta)).astype(np.int64)
        iky = np.floor((bi.imag + delta) / (2.0 * delta)).astype(np.int64)
        _scatter_cells(agg.cell_prob_sums, ikx, iky, np.ones(n))
        return agg
    if aligned and h <= delta:
        # Each axis marginal spans at most two cells.
        hx = np.zeros(n)
        fracs = []
        for vals in (bi.real, bi.imag):
            lo = vals - h
            k0 = np.floor((lo + delta) / (2.0 * delta)).astype(np.int64)
            upper = (vals + h) - (2.0 * k0 + 1.0) * delta
            f1 = np.clip(upper / (2.0 * h), 0.0, 1.0)
            f0 = 1.0 - f1
            fracs.append((k0, f0, f1))
            hx += _entropy_terms(f0) + _entropy_terms(f1)
        agg.cond_entropy_sum = float(hx.sum())
        agg.cond_entropy_sumsq = float((hx * hx).sum())
        (kx0, fx0, fx1), (ky0, fy0, fy1) = fracs
        for dx, fx in ((0, fx0), (1, fx1)):
            for dy, fy in ((0, fy0), (1, fy1)):
                wgt = fx * fy
                mask = wgt > 0.0
                if mask.any():
                    _scatter_cells(agg.cell_prob_sums, kx0[mask] + dx, ky0[mask] + dy,
                                   wgt[mask])
        return agg

    h_terms = np.zeros(n)
    for i in range(n):
        dist = conditional_cell_distribution(complex(bi[i]), p, proto)
        for cell, prob in dist:
            key = (cell.kx, cell.ky)
            agg.cell_prob_sums[key] = agg.cell_prob_sums.get(key, 0.0) + prob
            if prob > 0.0:
                h_terms[i] -= prob * math.log(prob)
    agg.cond_entropy_sum = float(h_terms.sum())
    agg.cond_entropy_sumsq = float((h_terms * h_terms).sum())
    return agg


def _scatter_cells(store: dict, kx: np.ndarray, ky: np.ndarray, weights: np.ndarray):
    keys = np.stack([kx, ky], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    sums = np.bincount(inv, weights=weights, minlength=len(uniq))
    for (a, b), s in zip(uniq, sums):
        key = (int(a), int(b))
        store[key] = store.get(key, 0.0) + float(s)


@dataclass(frozen=True)
class MutualInformationResult:
    mutual_information: float
    shannon_entropy: float       # of the final-state classes, <-ln P[Sigma]>
    shannon_entropy_stderr: float
    measured_entropy: float      # H of the measured-cell mixture
    conditional_entropy: float   # mean per-class entropy of the measured cell
    clamp_amount: float          # how much the raw I was clipped into [0, S_Sh]


def mutual_information(agg: MeasurementAggregate) -> MutualInformationResult:
    if agg.n == 0:
        raise EmptyAggregateError("mutual information of an empty measurement aggregate")
    n = agg.n
    probs = np.array(list(agg.cell_prob_sums.values())) / n
    h_meas = float(_entropy_terms(probs).sum())
    h_cond = agg.cond_entropy_sum / n
    s_sh = agg.class_neglogp_sum / n
    var = (agg.class_neglogp_sumsq - agg.class_neglogp_sum ** 2 / n) / max(n - 1, 1)
    s_sh_se = math.sqrt(max(var, 0.0) / n)
    raw = h_meas - h_cond
    info = min(max(raw, 0.0), s_sh)
    return MutualInformationResult(info, s_sh, s_sh_se, h_meas, h_cond, raw - info)


def measured_je_deviation(agg: MeasurementAggregate, dF_ref: float, theta: float):
    """Deviation of the finite-precision Jarzynski estimator from zero."""
    if agg.n < 2:
        raise EmptyAggregateError("measured JE needs at least two trajectories")
    f = math.exp(dF_ref / theta)
    mean = agg.meas_kernel_sum / agg.n
    var = (agg.meas_kernel_sumsq - agg.meas_kernel_sum ** 2 / agg.n) / (agg.n - 1)
    return f * mean - 1.0, f * math.sqrt(max(var, 0.0) / agg.n)
