"""Time integration of the vorticity equation outside the disk.

Viscous runs use Crank-Nicolson diffusion per mode with Adams-Bashforth
extrapolated advection.  The wall row of each implicit solve is the
flux boundary condition

    nu * (d/dr + |n|) omega_n(1) = g_n,

with g_n the boundary flux of the advection term, linearly extrapolated
to the new time level.  Because the solve is affine in g_n, a response
vector per mode turns the no-slip constraint into an exact projection:
after the base solve the wall target is nudged so the discrete slip
functional

    Q_n(omega) = sum_j w_j r_j^{1-|n|} omega_n(r_j)

keeps its initial value to machine precision.  The nudge size is a
consistency diagnostic and is reported per checkpoint; it shrinks with
both dt and the grid.

Inviscid runs instead use three-stage strong-stability-preserving
Runge-Kutta with the advection term in skew-symmetric form, which
conserves enstrophy up to radial quadrature error.

Fields are evolved in the half-spectrum representation (rows n >= 0;
negative modes are conjugates), so real-valuedness is structural.
"""

from __future__ import annotations

import math
import os
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .backend import solve_tridiagonal
from .biot_savart import StreamOperator, mode_laplacian_bands
from .config import SolverConfig
from .grid_spectral import RadialGrid, SpectralField, build_grid, fornberg_weights, write_snapshot

__all__ = [
    "DiagnosticsRecord",
    "RunResult",
    "FlowSolver",
    "run_simulation",
    "half_to_field",
    "field_to_half",
]


@dataclass
class DiagnosticsRecord:
    """One checkpoint of scalar diagnostics."""

    t: float
    boundary_sup: float
    energy: float
    enstrophy: float
    kato_integrand: float
    slip_max: float
    slip_correction: float
    max_speed: float
    far_flux: float = 0.0
    extra: dict = field(default_factory=dict)


@dataclass
class RunResult:
    config: SolverConfig
    records: list
    snapshot_paths: list
    dt: float
    n_steps: int
    wall_seconds: float


def half_to_field(grid: RadialGrid, N_theta: int, rows: np.ndarray) -> SpectralField:
    """Expand half-spectrum rows (n = 0..N/2) to a full SpectralField."""
    half = N_theta // 2
    modes = np.zeros((N_theta + 1, grid.N_r), dtype=complex)
    modes[half] = rows[0].real
    for n in range(1, half + 1):
        modes[half + n] = rows[n]
        modes[half - n] = np.conj(rows[n])
    return SpectralField(grid, N_theta, modes)


def field_to_half(f: SpectralField) -> np.ndarray:
    """Collapse a Hermitian SpectralField to half-spectrum rows."""
    if f.hermitian_defect() > 1e-8:
        raise ValueError("field is not Hermitian; cannot evolve it as a real flow")
    half = f.N_theta // 2
    return f.modes[half:].copy()


class _WallRobinDiffusion:
    """Implicit mode diffusion solve with the flux row at the wall.

    theta = 0.5 is the Crank-Nicolson half, theta = 1.0 backward Euler
    (used once, for the starting step).  The wall row couples three
    nodes and is folded against implicit row 1 to stay tridiagonal.
    """

    def __init__(self, grid: RadialGrid, n_pos: np.ndarray, nu: float, dt: float, theta: float):
        self.grid = grid
        self.nu = nu
        self.dt = dt
        self.theta = theta
        n_abs = np.asarray(n_pos, dtype=float)
        M = len(n_abs)
        N = grid.N_r

        Llo, Ldi, Lup = mode_laplacian_bands(grid, n_pos)
        self._Llo, self._Ldi, self._Lup = Llo, Ldi, Lup

        c = nu * dt * theta
        lo = -c * Llo
        di = 1.0 - c * Ldi
        up = -c * Lup

        # Wall row: nu * (w3 . omega + |n| omega_0) = g, one-sided 3-point.
        w3 = fornberg_weights(grid.r_nodes[0], grid.r_nodes[:3], 1)[1]
        A00 = nu * (w3[0] + n_abs)
        A01 = nu * w3[1]
        A02 = np.full(M, nu * w3[2])
        fac = A02 / up[:, 1]
        di[:, 0] = A00 - fac * lo[:, 1]
        up[:, 0] = A01 - fac * di[:, 1]
        lo[:, 0] = 0.0
        self._fold = fac

        # Far row: omega(R_max) = 0.
        di[:, -1] = 1.0
        lo[:, -1] = 0.0
        up[:, -1] = 0.0

        self._lo, self._di, self._up = lo, di, up

        # Slip functional weights and the wall-row response vector.
        self.Qw = grid.quad_weights * grid.r_nodes ** (1.0 - n_abs[:, None])
        e0 = np.zeros((M, N), dtype=complex)
        e0[:, 0] = 1.0
        self.v = solve_tridiagonal(lo, di, up, e0)
        self.Qv = np.sum(self.Qw * self.v, axis=1)
        if np.any(np.abs(self.Qv) < 1e-300):
            raise RuntimeError("wall response vector has zero slip weight; cannot project")

    def explicit_half(self, W: np.ndarray) -> np.ndarray:
        """(I + nu dt (1-theta) L) W on interior nodes."""
        c = self.nu * self.dt * (1.0 - self.theta)
        out = W.copy()
        if c != 0.0:
            out[:, 1:-1] += c * (
                self._Llo[:, 1:-1] * W[:, :-2]
                + self._Ldi[:, 1:-1] * W[:, 1:-1]
                + self._Lup[:, 1:-1] * W[:, 2:]
            )
        return out

    def step(self, W: np.ndarray, adv: np.ndarray, g_wall: np.ndarray, Q_target: np.ndarray):
        """Advance one step.  ``adv`` is the assembled advection right side
        (already the d omega/dt contribution at the chosen quadrature of
        the scheme); ``g_wall`` the extrapolated wall flux target.

        Returns (W_new, correction) where correction[m] is the wall-flux
        nudge that restored Q_n exactly.
        """
        b = self.explicit_half(W)
        b[:, 1:-1] += self.dt * adv[:, 1:-1]
        b[:, -1] = 0.0
        b[:, 0] = g_wall - self._fold * b[:, 1]
        base = solve_tridiagonal(self._lo, self._di, self._up, b)
        Q_base = np.sum(self.Qw * base, axis=1)
        corr = (Q_target - Q_base) / self.Qv
        return base + corr[:, None] * self.v, corr


class FlowSolver:
    """Spatial machinery shared by the viscous and inviscid steppers."""

    def __init__(self, config: SolverConfig, grid: RadialGrid | None = None):
        self.config = config
        self.grid = grid if grid is not None else build_grid(config)
        self.N_theta = config.N_theta
        self.half = config.N_theta // 2
        self.n_pos = np.arange(self.half + 1)
        self.stream_op = StreamOperator(self.grid, self.n_pos)
        self.Qw = self.grid.quad_weights * self.grid.r_nodes ** (
            1.0 - self.n_pos.astype(float)[:, None]
        )
        if config.dealias:
            self._keep = self.n_pos <= config.N_theta // 3
        else:
            self._keep = np.ones(self.half + 1, dtype=bool)
        self._wall_w3 = fornberg_weights(self.grid.r_nodes[0], self.grid.r_nodes[:3], 1)[1]
        self._far_w4 = fornberg_weights(self.grid.r_nodes[-1], self.grid.r_nodes[-4:], 1)[1]

    # -- representation helpers -------------------------------------------

    def to_physical(self, rows: np.ndarray) -> np.ndarray:
        """Half-spectrum rows -> real samples on the theta grid."""
        N = self.N_theta
        half = self.half
        cols = rows.shape[1]
        c = np.zeros((N, cols), dtype=complex)
        c[0] = rows[0].real
        c[1:half] = rows[1:half]
        c[half] = 2.0 * rows[half].real
        c[half + 1 :] = np.conj(rows[half - 1 : 0 : -1])
        return np.fft.ifft(c * N, axis=0).real

    def to_rows(self, samples: np.ndarray) -> np.ndarray:
        """Real samples -> half-spectrum rows."""
        c = np.fft.fft(samples, axis=0) / self.N_theta
        rows = np.empty((self.half + 1, samples.shape[1]), dtype=complex)
        rows[0] = c[0]
        rows[1 : self.half] = c[1 : self.half]
        rows[self.half] = 0.5 * c[self.half]
        return rows

    def dealias_rows(self, rows: np.ndarray) -> np.ndarray:
        rows[~self._keep] = 0.0
        return rows

    # -- physics ------------------------------------------------------------

    def velocities(self, W: np.ndarray):
        """Stream solve for all evolved modes; returns (psi, u_r, u_theta, slip)."""
        psi, slip = self.stream_op.solve(W)
        r = self.grid.r_nodes
        u_r = (1j * self.n_pos[:, None] / r) * psi
        u_theta = -self.grid.d1(psi)
        return psi, u_r, u_theta, slip

    def advection_plain(self, W, u_r_rows, u_t_rows):
        """u . grad(omega) in physical space, back to dealiased rows."""
        r = self.grid.r_nodes
        dW = self.grid.d1(W)
        dtheta_W = (1j * self.n_pos[:, None] / r) * W
        ur = self.to_physical(u_r_rows)
        ut = self.to_physical(u_t_rows)
        om_r = self.to_physical(dW)
        om_t = self.to_physical(dtheta_W)
        F = ur * om_r + ut * om_t
        return self.dealias_rows(self.to_rows(F))

    def advection_skew(self, W, u_r_rows, u_t_rows):
        """Average of advective and divergence forms (enstrophy friendly)."""
        r = self.grid.r_nodes
        plain = self.advection_plain(W, u_r_rows, u_t_rows)
        om = self.to_physical(W)
        ur = self.to_physical(u_r_rows)
        ut = self.to_physical(u_t_rows)
        a_rows = self.to_rows(r * ur * om)
        b_rows = self.to_rows(ut * om)
        div = self.grid.d1(a_rows) / r + (1j * self.n_pos[:, None] / r) * b_rows
        self.dealias_rows(div)
        return 0.5 * (plain + div)

    def boundary_flux_rows(self, F_rows: np.ndarray) -> np.ndarray:
        """g_n = -int r^{1-n} F_n dr for the evolved modes; g_0 = 0."""
        g = -np.sum(self.Qw * F_rows, axis=1)
        g[0] = 0.0
        return g

    def slip_values(self, W: np.ndarray) -> np.ndarray:
        """Discrete slip functional Q_n per evolved mode (n=0: circulation)."""
        return np.sum(self.Qw * W, axis=1)

    # -- scalar diagnostics --------------------------------------------------

    def wall_trace(self, W: np.ndarray) -> np.ndarray:
        return self.to_physical(W[:, :1])[:, 0]

    def energy(self, u_r_rows, u_t_rows) -> float:
        dens = np.abs(u_r_rows) ** 2 + np.abs(u_t_rows) ** 2
        dens[1:] *= 2.0  # conjugate partners
        radial = np.sum(dens * (self.grid.quad_weights * self.grid.r_nodes), axis=1)
        return float(0.5 * 2.0 * np.pi * np.sum(radial.real))

    def enstrophy(self, W) -> float:
        dens = np.abs(W) ** 2
        dens[1:] *= 2.0
        radial = np.sum(dens * (self.grid.quad_weights * self.grid.r_nodes), axis=1)
        return float(2.0 * np.pi * np.sum(radial.real))

    def grad_u_squared_profile(self, psi, u_r_rows, u_t_rows, j_max: int) -> np.ndarray:
        """Angle-integrated |grad u|^2 r on radial nodes 0..j_max-1."""
        r = self.grid.r_nodes[:j_max]
        dur = self.grid.d1(u_r_rows)[:, :j_max]
        dut = self.grid.d1(u_t_rows)[:, :j_max]
        inr = 1j * self.n_pos[:, None]
        tur = (inr * u_r_rows)[:, :j_max]
        tut = (inr * u_t_rows)[:, :j_max]
        terms = (
            np.abs(dur) ** 2
            + np.abs(dut) ** 2
            + (np.abs(tur - u_t_rows[:, :j_max]) ** 2 + np.abs(tut + u_r_rows[:, :j_max]) ** 2)
            / r**2
        )
        terms[1:] *= 2.0
        return 2.0 * np.pi * np.sum(terms, axis=0).real * r

    def kato_integrand(self, psi, u_r_rows, u_t_rows) -> tuple[float, bool]:
        """nu * integral of |grad u|^2 over the wall strip r <= 1 + c*nu.

        Returns (value, sub_cell) where sub_cell flags a strip thinner
        than the first grid cell (the profile is then linearly
        interpolated inside the cell).
        """
        nu = self.config.nu
        if nu <= 0.0:
            return 0.0, False
        width = self.config.kato_c * nu
        r = self.grid.r_nodes
        edge = 1.0 + width
        j_max = int(np.searchsorted(r, edge)) + 2
        j_max = min(max(j_max, 3), self.grid.N_r)
        G = self.grad_u_squared_profile(psi, u_r_rows, u_t_rows, j_max)
        sub_cell = edge < r[1]
        total = 0.0
        for j in range(j_max - 1):
            if r[j + 1] <= edge:
                total += 0.5 * (G[j] + G[j + 1]) * (r[j + 1] - r[j])
            else:
                frac = (edge - r[j]) / (r[j + 1] - r[j])
                if frac > 0:
                    G_edge = G[j] + frac * (G[j + 1] - G[j])
                    total += 0.5 * (G[j] + G_edge) * (edge - r[j])
                break
        return nu * total, sub_cell

    def far_energy_flux(self, W, psi, u_r_rows, u_t_rows) -> float:
        """Truncation term in the energy budget: R * oint psi d_r(psi_dot) dtheta.

        On the truncated domain dE/dt = -nu*enstrophy + this flux (up to
        wall terms that vanish with the slip).  psi_dot here is the
        stream response to the advective tendency alone.  The viscous
        tendency contributes no far flux: pairing nu*L(omega) against
        the mode harmonics r^{|n|} - r^{-|n|} leaves pure boundary
        terms, killed by the zero slip at the wall and the decay of
        omega at R_max.  (The discrete L does feed a spurious far
        moment if paired naively, which the constrained time step never
        realises, so it must stay out of this estimate.)  The flux
        decays like R_max^{-2} and vanishes in the untruncated limit.
        """
        F = (
            self.advection_plain(W, u_r_rows, u_t_rows)
            if self.config.nu > 0.0
            else self.advection_skew(W, u_r_rows, u_t_rows)
        )
        wdot = -F
        wdot[:, 0] = 0.0
        wdot[:, -1] = 0.0
        psi_dot, _ = self.stream_op.solve(wdot)
        dpsid_R = psi_dot[:, -4:] @ self._far_w4
        pair = np.real(psi[:, -1] * np.conj(dpsid_R))
        pair[1:] *= 2.0
        return float(2.0 * np.pi * self.grid.R_max * np.sum(pair))

    def max_speed(self, u_r_rows, u_t_rows) -> float:
        ur = self.to_physical(u_r_rows)
        ut = self.to_physical(u_t_rows)
        return float(np.sqrt(np.max(ur**2 + ut**2)))

    def cfl_dt(self, u_r_rows, u_t_rows) -> float:
        """Advective time-step bound from the initial velocity field."""
        ur = np.abs(self.to_physical(u_r_rows))
        ut = np.abs(self.to_physical(u_t_rows))
        r = self.grid.r_nodes
        h = np.empty_like(r)
        h[:-1] = np.diff(r)
        h[-1] = h[-2]
        dtheta = 2.0 * np.pi / self.N_theta
        eps = 1e-30
        radial = np.min(h / (ur.max(axis=0) + eps))
        angular = np.min(r * dtheta / (ut.max(axis=0) + eps))
        return self.config.cfl * min(radial, angular)


def _checkpoint_record(solver: FlowSolver, W, psi, u_r, u_t, t, corr_max) -> DiagnosticsRecord:
    kato, _ = solver.kato_integrand(psi, u_r, u_t)
    slips = solver.slip_values(W)
    return DiagnosticsRecord(
        t=t,
        boundary_sup=float(np.max(np.abs(solver.wall_trace(W)))),
        energy=solver.energy(u_r, u_t),
        enstrophy=solver.enstrophy(W),
        kato_integrand=kato,
        slip_max=float(np.max(np.abs(slips))),
        slip_correction=corr_max,
        max_speed=solver.max_speed(u_r, u_t),
        far_flux=solver.far_energy_flux(W, psi, u_r, u_t),
    )


def run_simulation(
    config: SolverConfig,
    omega0: SpectralField,
    out_dir: str | None = None,
    snapshot_prefix: str = "run",
    on_checkpoint=None,
) -> RunResult:
    """Advance omega0 to time T, recording diagnostics at checkpoints.

    Checkpoint times are k*T/n_checkpoints exactly (the step count is
    rounded up to a multiple of n_checkpoints), so runs with different
    viscosities can be compared snapshot by snapshot.  If ``out_dir`` is
    given a binary snapshot is written at every checkpoint including
    t=0.  ``on_checkpoint(t, field, record)`` may add derived columns to
    ``record.extra``.
    """
    t_start = _time.perf_counter()
    solver = FlowSolver(config)
    grid = solver.grid
    if omega0.grid.N_r != grid.N_r or omega0.N_theta != config.N_theta:
        raise ValueError("initial data does not match the configured grid")

    W = field_to_half(omega0)
    solver.dealias_rows(W)
    W[0] = W[0].real

    psi, u_r, u_t, _ = solver.velocities(W)
    dt_adv = solver.cfl_dt(u_r, u_t)
    dt = min(config.dt_max, dt_adv)
    n_check = config.n_checkpoints
    n_steps = max(int(math.ceil(config.T / dt / n_check)) * n_check, n_check)
    dt = config.T / n_steps
    stride = n_steps // n_check

    viscous = config.nu > 0.0
    if viscous:
        cn = _WallRobinDiffusion(grid, solver.n_pos, config.nu, dt, theta=0.5)
        be = _WallRobinDiffusion(grid, solver.n_pos, config.nu, dt, theta=1.0)
        Q_target = solver.slip_values(W)

    speed0 = solver.max_speed(u_r, u_t)
    records: list[DiagnosticsRecord] = []
    snapshot_paths: list[tuple[float, str]] = []

    def checkpoint(k, W, psi, u_r, u_t, corr_max):
        t = k * dt
        rec = _checkpoint_record(solver, W, psi, u_r, u_t, t, corr_max)
        f = half_to_field(grid, config.N_theta, W)
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            path = os.path.join(out_dir, f"{snapshot_prefix}_chk{len(records):03d}.exod")
            write_snapshot(path, f, time=t, nu=config.nu)
            snapshot_paths.append((t, path))
        if on_checkpoint is not None:
            extra = on_checkpoint(t, f, rec)
            if extra:
                rec.extra.update(extra)
        records.append(rec)

    checkpoint(0, W, psi, u_r, u_t, 0.0)

    F_prev = None
    g_prev = None
    corr_max = 0.0

    for k in range(1, n_steps + 1):
        if viscous:
            F = solver.advection_plain(W, u_r, u_t)
            g = solver.boundary_flux_rows(F)
            if F_prev is None:
                # Starting step: backward Euler diffusion, forward advection.
                W, corr = be.step(W, -F, g, Q_target)
            else:
                adv = -(1.5 * F - 0.5 * F_prev)
                g_ext = 2.0 * g - g_prev
                W, corr = cn.step(W, adv, g_ext, Q_target)
            F_prev, g_prev = F, g
            corr_max = float(np.max(np.abs(corr)))
        else:
            # SSP-RK3 transport.
            F1 = solver.advection_skew(W, u_r, u_t)
            W1 = W - dt * F1
            _, ur1, ut1, _ = solver.velocities(W1)
            F2 = solver.advection_skew(W1, ur1, ut1)
            W2 = 0.75 * W + 0.25 * (W1 - dt * F2)
            _, ur2, ut2, _ = solver.velocities(W2)
            F3 = solver.advection_skew(W2, ur2, ut2)
            W = W / 3.0 + 2.0 / 3.0 * (W2 - dt * F3)

        W[0] = W[0].real
        psi, u_r, u_t, _ = solver.velocities(W)

        if k % 20 == 0:
            if not np.all(np.isfinite(W)):
                raise RuntimeError(f"solution lost finiteness at step {k} (t={k*dt:.4g})")
            speed = solver.max_speed(u_r, u_t)
            if speed > 1.5 * max(speed0, 1e-30):
                raise RuntimeError(
                    f"flow speed grew {speed/speed0:.2f}x by t={k*dt:.4g}; "
                    "time step no longer satisfies the advective bound"
                )

        if k % stride == 0:
            checkpoint(k, W, psi, u_r, u_t, corr_max)

    return RunResult(
        config=config,
        records=records,
        snapshot_paths=snapshot_paths,
        dt=dt,
        n_steps=n_steps,
        wall_seconds=_time.perf_counter() - t_start,
    )
