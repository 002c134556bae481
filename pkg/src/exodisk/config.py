"""Run configuration for the exterior-disk solver and its diagnostics.

A :class:`SolverConfig` is a frozen value object; every experiment, grid
and norm evaluation is derived from one.  Configs can be loaded from a
flat ``key = value`` text file whose keys match the dataclass fields.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

__all__ = ["SolverConfig", "load_config", "thread_count"]


@dataclass(frozen=True)
class SolverConfig:
    """Parameters controlling a single run.

    Attributes
    ----------
    nu : float
        Viscosity; 0 selects the Euler transport solver.
    T : float
        Final time.
    N_theta, N_r : int
        Angular sample count and number of radial nodes.
    R_max : float
        Outer truncation radius of the exterior domain.
    nu_min : float
        Smallest viscosity the radial grid must resolve.  Defaults to
        ``nu`` (or 1e-3 for an Euler run) so a sweep can share one grid.
    delta0, rho0, eps0 : float
        Analyticity parameters of the near-boundary norms.
    lam : float
        Rescaling parameter of the boundary-layer variables.
    dt_max, cfl : float
        Time-step ceiling and advective CFL number.
    kato_c : float
        Strip-width constant in the Kato integral (strip r <= 1 + c*nu).
    beta, gamma : float
        Radius-decay rate and exponent of the composite norm A(beta).
        ``beta`` <= 0 means "choose 2*rho0/T at evaluation time".
    k_norm : int
        Derivative index k of the composite norm (1..3).
    n_checkpoints : int
        Snapshots written per run (equispaced in t, t=0 included).  An
        even count keeps T/2 on the checkpoint lattice, where the
        boundary-scaling experiment samples.
    seed : int
        RNG seed for the default initial-data family.
    amplitude, kappa, n0_modes : float, float, int
        Initial data: overall scale, radial decay rate, highest mode.
    """

    nu: float = 1e-3
    T: float = 0.5
    N_theta: int = 64
    N_r: int = 2048
    R_max: float = 20.0
    nu_min: float = 0.0
    delta0: float = 0.5
    rho0: float = 0.5
    eps0: float = 0.25
    lam: float = 1.0
    dt_max: float = 2e-3
    cfl: float = 0.25
    kato_c: float = 1.0
    beta: float = 0.0
    gamma: float = 0.5
    k_norm: int = 1
    dealias: bool = True
    n_checkpoints: int = 20
    seed: int = 7
    amplitude: float = 6.0
    kappa: float = 4.0
    n0_modes: int = 8
    experiment: str = ""
    out_dir: str = "out"

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if not 0 < self.delta0 <= self.rho0:
            raise ValueError("need 0 < delta0 <= rho0")
        if not 0 < self.eps0 < 0.5:
            raise ValueError("eps0 must lie in (0, 1/2)")
        if not 0 < self.lam <= 1:
            raise ValueError("lam must lie in (0, 1]")
        if self.R_max <= 1:
            raise ValueError("R_max must exceed 1")
        if self.N_r < 16:
            raise ValueError("N_r must be at least 16")
        if self.N_theta < 4 or self.N_theta % 2:
            raise ValueError("N_theta must be even and >= 4")
        if self.k_norm not in (1, 2, 3):
            raise ValueError("k_norm must be 1, 2 or 3")

    @property
    def nu_floor(self) -> float:
        """Viscosity used for the boundary-layer grid-spacing rule."""
        if self.nu_min > 0:
            return self.nu_min
        return self.nu if self.nu > 0 else 1e-3

    def resolved_beta(self) -> float:
        """A(beta) decay rate: configured value, or 2*rho0/T."""
        return self.beta if self.beta > 0 else 2.0 * self.rho0 / self.T

    def smoke(self) -> "SolverConfig":
        """Shrunk copy for fast pipeline checks."""
        return dataclasses.replace(self, N_theta=32, N_r=128, n_checkpoints=10)


def _coerce(field: dataclasses.Field, raw: str):
    if field.type in ("bool", bool):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"cannot parse boolean {raw!r} for {field.name}")
    if field.type in ("int", int):
        return int(raw)
    if field.type in ("float", float):
        return float(raw)
    return raw.strip()


def load_config(path: str | os.PathLike, **overrides) -> SolverConfig:
    """Read a flat ``key = value`` config file.

    Blank lines and ``#`` comments are ignored.  Keys must match
    :class:`SolverConfig` field names exactly; unknown keys are an error
    (they are usually typos and silently dropping them hides bugs).
    """
    fields = {f.name: f for f in dataclasses.fields(SolverConfig)}
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in fields:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(fields[key], raw)
    values.update(overrides)
    return SolverConfig(**values)


def thread_count() -> int:
    """Parallelism cap: EXODISK_THREADS if set, else the CPU count."""
    raw = os.environ.get("EXODISK_THREADS", "")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"EXODISK_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError("EXODISK_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1
