import math

import numpy as np
import pytest

from conftest import make_physical, make_protocol
from qworkmeter.engine import run_shard
from qworkmeter.errors import EmptyAggregateError
from qworkmeter.measurement import (GridCell, MeasurementAggregate,
                                    accumulate_measurement,
                                    conditional_cell_distribution, measure,
                                    measured_work, mutual_information)


def fig3_like(v=10.0, jitter=2.0):
    Om = 2.0 * math.pi * 1e3
    g_m = v * Om
    beta0 = math.pi * 600e9 / g_m
    p = make_physical(omega0=2.0 * math.pi * 2e12, Omega=Om, gamma=5.0 * Om,
                      g_m=g_m, beta0=beta0 * 1j)
    proto = make_protocol(p, jitter_halfwidth=jitter, grid_cell_halfwidth=2.0)
    return p, proto


def test_measure_anchor_and_floor_rule():
    assert measure(0j, 2.0) == GridCell(0, 0)
    assert measure(3.1 + 0.2j, 2.0) == GridCell(1, 0)
    assert GridCell(1, 0).center(2.0) == 4 + 0j


def test_measure_boundary_goes_to_upper_cell():
    assert measure(2.0 + 0j, 2.0) == GridCell(1, 0)
    assert measure(-2.0 + 0j, 2.0) == GridCell(0, 0)


def test_measured_work_same_modulus_is_zero():
    p, _ = fig3_like()
    rotated = abs(p.beta0) + 0j
    assert measured_work(p.beta0, rotated, p) == 0.0


def test_measured_work_sign():
    p, _ = fig3_like()
    smaller = (abs(p.beta0) - 10.0) + 0j
    assert measured_work(p.beta0, smaller, p) > 0.0


def test_conditional_distribution_degenerate_jitter():
    p, proto = fig3_like(jitter=0.0)
    dist = conditional_cell_distribution(5.0 + 1.0j, p, proto)
    assert dist == [(GridCell(1, 0), 1.0)]


def test_conditional_distribution_perfect_alignment():
    # t_final = pi/(2 Omega): quarter-turn aligned; square side = cell width,
    # centered on a cell center -> all mass on that one cell.
    p, proto = fig3_like(jitter=2.0)
    dist = conditional_cell_distribution(4.0 + 8.0j, p, proto)
    assert len(dist) == 1
    cell, prob = dist[0]
    assert cell == GridCell(1, 2)
    assert prob == pytest.approx(1.0, abs=1e-12)


def test_conditional_distribution_corner_quarters():
    p, proto = fig3_like(jitter=2.0)
    dist = dict(conditional_cell_distribution(2.0 + 2.0j, p, proto))
    assert len(dist) == 4
    for cell in (GridCell(0, 0), GridCell(0, 1), GridCell(1, 0), GridCell(1, 1)):
        assert dist[cell] == pytest.approx(0.25, abs=1e-12)


def test_conditional_distribution_normalization_general_angle():
    p, proto = fig3_like(jitter=1.7)
    import dataclasses
    proto = dataclasses.replace(proto, t_final=proto.t_final * 0.77,
                                n_steps=proto.n_steps)
    for center in (0.3 + 0.1j, 5.2 - 3.9j, -11.0 + 0.05j):
        dist = conditional_cell_distribution(center, p, proto)
        total = sum(prob for _, prob in dist)
        assert total == pytest.approx(1.0, abs=1e-9)
        assert all(prob > 0.0 for _, prob in dist)


def test_conditional_distribution_translation_invariance():
    p, proto = fig3_like(jitter=1.3)
    width = 2.0 * proto.grid_cell_halfwidth
    base = conditional_cell_distribution(1.1 + 0.4j, p, proto)
    shifted = conditional_cell_distribution(complex(1.1, 0.4 + width), p, proto)
    moved = sorted(((c.kx, c.ky + 1), pr) for c, pr in base)
    got = sorted(((c.kx, c.ky), pr) for c, pr in shifted)
    assert len(moved) == len(got)
    for (k_a, pr_a), (k_b, pr_b) in zip(moved, got):
        assert k_a == k_b
        assert pr_a == pytest.approx(pr_b, abs=1e-9)


def test_polygon_path_agrees_with_axis_aligned_fast_path():
    import dataclasses

    from qworkmeter import measurement as mm

    p, proto = fig3_like(jitter=1.5)
    # Full period instead of a quarter turn: still axis aligned.
    proto = dataclasses.replace(proto, t_final=2 * math.pi / p.Omega)
    center = 2.7 - 0.9j
    fast = dict(conditional_cell_distribution(center, p, proto))
    old = mm._ALIGN_TOL
    try:
        mm._ALIGN_TOL = 0.0  # force the general polygon route
        slow = dict(conditional_cell_distribution(center, p, proto))
    finally:
        mm._ALIGN_TOL = old
    assert set(fast) == set(slow)
    for cell in fast:
        assert fast[cell] == pytest.approx(slow[cell], abs=1e-9)


def test_mutual_information_bounds_and_single_class():
    p, proto = fig3_like(jitter=2.0)
    arrays = run_shard(p, proto, 0, 3000)
    agg = accumulate_measurement(arrays, p, proto)
    mi = mutual_information(agg)
    assert 0.0 <= mi.mutual_information <= mi.shannon_entropy + 1e-12
    assert mi.mutual_information <= mi.measured_entropy + 1e-12

    # gamma = 0 with a deterministic (cold) initial draw: a single class,
    # P[Sigma] = 1 for every trajectory, nothing to learn.
    p0 = make_physical(gamma=0.0, g_m=0.0,
                       theta=make_physical().omega0 * 1e-4)
    proto0 = make_protocol(p0, jitter_halfwidth=2.0)
    arrays0 = run_shard(p0, proto0, 0, 500)
    mi0 = mutual_information(accumulate_measurement(arrays0, p0, proto0))
    assert mi0.shannon_entropy == pytest.approx(0.0, abs=1e-12)
    assert mi0.mutual_information == pytest.approx(0.0, abs=1e-12)


def test_resolution_trend_in_coupling():
    infos = []
    for v in (2.0, 50.0):
        p, proto = fig3_like(v)
        arrays = run_shard(p, proto, 0, 4000)
        mi = mutual_information(accumulate_measurement(arrays, p, proto))
        infos.append(mi.mutual_information)
    assert infos[1] > infos[0]


def test_measurement_aggregate_merge():
    p, proto = fig3_like()
    whole = accumulate_measurement(run_shard(p, proto, 0, 400), p, proto)
    a = accumulate_measurement(run_shard(p, proto, 0, 250), p, proto)
    b = accumulate_measurement(run_shard(p, proto, 250, 150), p, proto)
    merged = a.merge(b)
    assert merged.n == whole.n
    assert merged.meas_kernel_sum == pytest.approx(whole.meas_kernel_sum, rel=1e-12)
    assert merged.cond_entropy_sum == pytest.approx(whole.cond_entropy_sum, rel=1e-12)
    assert set(merged.cell_prob_sums) == set(whole.cell_prob_sums)
    for k, v in whole.cell_prob_sums.items():
        assert merged.cell_prob_sums[k] == pytest.approx(v, rel=1e-12)


def test_empty_measurement_errors():
    with pytest.raises(EmptyAggregateError):
        mutual_information(MeasurementAggregate())
