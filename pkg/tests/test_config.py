"""Configuration parsing and validation."""

import os

import pytest

from exodisk.config import SolverConfig, load_config, thread_count


def test_defaults_validate():
    cfg = SolverConfig()
    assert cfg.nu == pytest.approx(1e-3)
    assert cfg.N_theta % 2 == 0
    assert cfg.R_max > 1.0


def test_frozen():
    cfg = SolverConfig()
    with pytest.raises(Exception):
        cfg.nu = 0.5


@pytest.mark.parametrize(
    "field,bad",
    [
        ("nu", -1.0),
        ("T", 0.0),
        ("R_max", 1.0),
        ("N_theta", 5),
        ("N_r", 8),
        ("eps0", 0.7),
        ("lam", 0.0),
        ("k_norm", 5),
    ],
)
def test_rejects_bad_values(field, bad):
    with pytest.raises(ValueError):
        SolverConfig(**{field: bad})


def test_delta0_must_not_exceed_rho0():
    with pytest.raises(ValueError):
        SolverConfig(delta0=0.6, rho0=0.5)


def test_nu_floor_prefers_explicit_minimum():
    assert SolverConfig(nu=0.0, nu_min=1e-4).nu_floor == pytest.approx(1e-4)
    assert SolverConfig(nu=1e-2).nu_floor == pytest.approx(1e-2)
    # Euler run with no explicit floor still needs a finite grid scale.
    assert SolverConfig(nu=0.0).nu_floor > 0


def test_resolved_beta_default_expires_at_half_horizon():
    cfg = SolverConfig(T=0.5, rho0=0.5)
    # beta*T/2 = rho0 so the budget survives exactly half the horizon.
    assert cfg.resolved_beta() == pytest.approx(2 * cfg.rho0 / cfg.T)
    assert SolverConfig(beta=3.0).resolved_beta() == pytest.approx(3.0)


def test_smoke_shrinks_resolution():
    cfg = SolverConfig().smoke()
    assert cfg.N_r == 128
    assert cfg.N_theta == 32


def test_load_config_roundtrip(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        "# comment line\n"
        "nu = 5e-3\n"
        "N_theta=32\n"
        "experiment = E2\n"
        "dealias = false\n"
        "\n"
    )
    cfg = load_config(str(p))
    assert cfg.nu == pytest.approx(5e-3)
    assert cfg.N_theta == 32
    assert cfg.experiment == "E2"
    assert cfg.dealias is False


def test_load_config_override_wins(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("nu = 5e-3\n")
    cfg = load_config(str(p), nu=1e-2)
    assert cfg.nu == pytest.approx(1e-2)


def test_load_config_unknown_key(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("viscosity = 1e-3\n")
    with pytest.raises(ValueError, match="viscosity"):
        load_config(str(p))


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("EXODISK_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.delenv("EXODISK_THREADS")
    assert thread_count() >= 1


def test_thread_count_rejects_garbage(monkeypatch):
    monkeypatch.setenv("EXODISK_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_count()
