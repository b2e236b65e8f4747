import math

import pytest

from conftest import make_physical
from qworkmeter.params import QubitLevel
from qworkmeter.physics import effective_frequency, propagate_coherent
from qworkmeter.thermo import (ABSORPTION, EMISSION, finalize,
                               free_energy_change, heat_increment,
                               markovian_reference_dF, work_increment)

# ln(Z(x=1.2)/Z(x=1.56)) recomputed independently.
DF_REF_OVER_THETA = 0.0725496585142094


def test_work_increment_ground_is_zero():
    p = make_physical()
    assert work_increment(QubitLevel.g, 1j, 55.0 + 2j, p) == 0.0


def test_work_increment_matches_minus_mechanical_change():
    p = make_physical()
    beta = 1234.5j
    dt = 1e-3 / p.Omega
    beta2 = propagate_coherent(beta, QubitLevel.e, dt, p)
    w = work_increment(QubitLevel.e, beta, beta2, p)
    dE_m = p.Omega * (abs(beta2) ** 2 - abs(beta) ** 2)
    assert w > 0.0  # frequency rises along this piece of the orbit
    assert w == pytest.approx(-dE_m, rel=1e-10)


def test_work_full_quarter_period_closed_form():
    p = make_physical()
    beta = complex(p.beta0)
    n = 4000
    dt = math.pi / (2 * p.Omega) / n
    total = 0.0
    for _ in range(n):
        nxt = propagate_coherent(beta, QubitLevel.e, dt, p)
        total += work_increment(QubitLevel.e, beta, nxt, p)
        beta = nxt
    # 2 g_m |beta0| plus the O(g_m^2/Omega) displacement correction
    assert total == pytest.approx(2 * p.g_m * abs(p.beta0), rel=5e-3)
    assert total == pytest.approx(
        effective_frequency(beta, p) - effective_frequency(p.beta0, p), rel=1e-9)


def test_heat_increment_signs():
    p = make_physical()
    w = effective_frequency(300.0 + 1j, p)
    assert heat_increment(QubitLevel.e, 300.0 + 1j, EMISSION, p) == -w
    assert heat_increment(QubitLevel.g, 300.0 + 1j, ABSORPTION, p) == w


def test_heat_absorption_emission_cancel_at_same_amplitude():
    p = make_physical()
    b = 42.0 - 7j
    total = (heat_increment(QubitLevel.g, b, ABSORPTION, p)
             + heat_increment(QubitLevel.e, b, EMISSION, p))
    assert total == 0.0


def test_free_energy_change_null_for_same_amplitude():
    p = make_physical()
    assert free_energy_change(p.beta0, p.beta0, p) == 0.0


def test_free_energy_change_reference_value():
    p = make_physical(omega0=1.2, g_m=0.15, Omega=1.0, gamma=0.0, theta=1.0,
                      beta0=1j)
    # omega goes from 1.2 (Re beta = 0) to 1.56 (Re beta = 1.2)
    dF = free_energy_change(1j, 1.2 + 0j, p)
    assert dF == pytest.approx(DF_REF_OVER_THETA, rel=1e-12)


def test_markovian_reference_matches_nominal_endpoint():
    p = make_physical()
    t_final = math.pi / (2 * p.Omega)
    ref = markovian_reference_dF(p, t_final)
    end = p.beta0 * complex(math.cos(-p.Omega * t_final),
                            math.sin(-p.Omega * t_final))
    assert ref == pytest.approx(free_energy_change(p.beta0, end, p), rel=1e-12)


def test_finalize_assembles_identities():
    p = make_physical()
    led = finalize(p, W=3.0, Q=-1.0, W_drive=2.5, dE_q=2.0, dE_m=-3.0,
                   dF=0.5 * p.theta, log_p_forward=-4.0,
                   log_pinf_final=-0.25, log_p_backward_conditional=-3.5)
    assert led.sigma == pytest.approx(-(-3.0 + 0.5 * p.theta) / p.theta)
    assert led.I_Sh == 4.0
    assert led.dis == pytest.approx(led.sigma + led.I_Sh)
    assert led.dis_logratio == pytest.approx(0.25 + 3.5)
