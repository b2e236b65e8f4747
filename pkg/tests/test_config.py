import math

import pytest

from qworkmeter.config import (load_config, parse_config_text,
                               theta_from_kelvin, validate_config)
from qworkmeter.errors import ConfigError

GOOD = """
# a desk-scale point
Omega_over_2pi = 1e5
gamma_over_Omega = 5
omega0_over_theta = 1.2
temperature_K = 80
g_m_over_Omega = 10
beta0_modulus = 5000
n_traj = 1000
master_seed = 42
"""


def test_theta_conversion():
    # k_B * 80 K / hbar, frozen from the CODATA constants
    assert theta_from_kelvin(80.0) == pytest.approx(1.047362713016e13, rel=1e-9)


def test_good_config_round_trip():
    cfg = validate_config(parse_config_text(GOOD))
    p, proto = cfg.physical, cfg.protocol
    assert p.Omega == pytest.approx(2 * math.pi * 1e5)
    assert p.gamma == pytest.approx(5 * p.Omega)
    assert p.theta == pytest.approx(theta_from_kelvin(80.0))
    assert p.omega0 == pytest.approx(1.2 * p.theta)
    assert p.beta0 == pytest.approx(5000j, abs=1e-9)
    assert proto.n_traj == 1000 and proto.master_seed == 42
    assert proto.t_final == pytest.approx(math.pi / (2 * p.Omega))
    assert not cfg.warnings


def test_comments_blank_lines_and_duplicates():
    parsed = parse_config_text("a = 1\n\n# note\nb = 2  # inline\n")
    assert parsed == {"a": "1", "b": "2"}
    with pytest.raises(ConfigError) as exc:
        parse_config_text("a = 1\na = 2\nbroken line\n")
    assert any("duplicate" in e for e in exc.value.errors)
    assert any("key = value" in e for e in exc.value.errors)


def test_all_violations_reported_at_once():
    bad = {
        "Omega_over_2pi": "not-a-number",
        "temperature_K": "80",
        "beta0_modulus": "5000",
        "gamma_over_Omega": "5",
        "mystery_knob": "3",
        "mode": "quantum",
    }
    with pytest.raises(ConfigError) as exc:
        validate_config(bad)
    joined = "\n".join(exc.value.errors)
    assert "Omega_over_2pi" in joined and "not-a-number" in joined
    assert "mystery_knob" in joined
    assert "mode" in joined
    assert "g_m_over_2pi" in joined  # missing coupling choice
    assert "omega0_over_2pi" in joined  # missing frequency choice
    assert len(exc.value.errors) >= 5


def test_negative_gamma_positivity_error():
    raw = parse_config_text(GOOD.replace("gamma_over_Omega = 5",
                                         "gamma_over_Omega = -5"))
    with pytest.raises(ConfigError) as exc:
        validate_config(raw)
    assert any("gamma" in e for e in exc.value.errors)


def test_step_bound_error_cites_required_count():
    raw = parse_config_text(GOOD + "n_steps = 10\n")
    with pytest.raises(ConfigError) as exc:
        validate_config(raw)
    assert any("n_steps >=" in e for e in exc.value.errors)


def test_semiclassical_warning_fig1_regime():
    # g_m/Omega = 100, |beta0| = 1000 -> r = 0.1
    text = GOOD.replace("g_m_over_Omega = 10", "g_m_over_Omega = 100")
    text = text.replace("beta0_modulus = 5000", "beta0_modulus = 1000")
    cfg = validate_config(parse_config_text(text))
    assert cfg.physical.ultra_strong
    assert cfg.physical.semiclassical_ratio == pytest.approx(0.1)
    assert any("0.1" in w for w in cfg.warnings)


def test_exactly_one_of_each_unit_pair():
    text = GOOD + "gamma_over_2pi = 1e5\n"
    with pytest.raises(ConfigError) as exc:
        validate_config(parse_config_text(text))
    assert any("exactly one" in e for e in exc.value.errors)


def test_load_config_from_file(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text(GOOD)
    cfg = load_config(path)
    assert cfg.protocol.n_traj == 1000
