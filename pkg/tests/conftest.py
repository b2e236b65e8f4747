import math

import pytest

from qworkmeter.config import theta_from_kelvin
from qworkmeter.params import PhysicalParams, ProtocolParams

THETA_80K = theta_from_kelvin(80.0)
OMEGA = 2.0 * math.pi * 1e5


def make_physical(**kw) -> PhysicalParams:
    base = dict(omega0=1.2 * THETA_80K, Omega=OMEGA, gamma=5.0 * OMEGA,
                g_m=10.0 * OMEGA, theta=THETA_80K, beta0=5000j)
    base.update(kw)
    return PhysicalParams(**base)


def make_protocol(p: PhysicalParams, **kw) -> ProtocolParams:
    from qworkmeter.params import default_t_final, suggest_n_steps

    t_final = kw.pop("t_final", default_t_final(p))
    n_steps = kw.pop("n_steps", suggest_n_steps(p, t_final))
    base = dict(t_final=t_final, n_steps=n_steps, n_traj=1000, master_seed=0)
    base.update(kw)
    return ProtocolParams(**base)


@pytest.fixture
def p_fig2() -> PhysicalParams:
    return make_physical()
