"""Mode-wise elliptic solves, boundary operators, and their closed forms.

The reference values here are exact calculus on decaying powers:

* omega_1 = r^-4          ->  psi_1 = (r^-2 - r^-1)/3,  u_theta(1) = 1/3
* omega_0 = 4 r^-4        ->  u_theta = -2/r + 2/r^3
* omega_1 = r^-4 - (4/3) r^-5  has zero slip integral on [1, inf);
  truncated at R it leaves exactly (R^-4 - R^-3)/3.
"""

import time
import warnings

import numpy as np
import pytest

from exodisk.biot_savart import (
    StreamOperator,
    boundary_flux,
    compatibility_bump,
    compatibility_defect,
    dtn_apply,
    mode_residual,
    project_compatible,
    stream_mode,
    tail_exponent_fit,
    velocity_from_stream,
)
from exodisk.config import SolverConfig
from exodisk.grid_spectral import SpectralField, build_grid, make_radial_grid, theta_transform


@pytest.fixture(scope="module")
def grid():
    return make_radial_grid(20.0, 512, 0.8 / 512)


@pytest.fixture(scope="module")
def fine_grid():
    return build_grid(SolverConfig())


def psi_exact(r):
    return (r**-2.0 - r**-1.0) / 3.0


class TestStreamModeOne:
    """The closed-form n=1 solve is the primary accuracy gate."""

    def test_production_solve(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        t0 = time.perf_counter()
        ms = stream_mode(om, 1, grid, backend="solve")
        elapsed = time.perf_counter() - t0
        err = np.max(np.abs(ms.psi - psi_exact(grid.r_nodes)))
        scale = np.max(np.abs(psi_exact(grid.r_nodes)))
        assert err / scale < 1e-6
        assert elapsed < 1.0

    def test_kernel_oracle(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        ms = stream_mode(om, 1, grid, backend="kernel")
        err = np.max(np.abs(ms.psi - psi_exact(grid.r_nodes)))
        scale = np.max(np.abs(psi_exact(grid.r_nodes)))
        assert err / scale < 1e-7

    def test_backends_agree(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        a = stream_mode(om, 1, grid, backend="solve")
        b = stream_mode(om, 1, grid, backend="kernel")
        scale = np.max(np.abs(a.psi))
        assert np.max(np.abs(a.psi - b.psi)) / scale < 1e-6

    def test_slip_is_third(self, grid, fine_grid):
        om = grid.r_nodes**-4.0 + 0j
        ms = stream_mode(om, 1, grid)
        assert ms.slip.real == pytest.approx(1.0 / 3.0, abs=2e-5)
        # Finer quadrature tightens the slip estimate.
        om_f = fine_grid.r_nodes**-4.0 + 0j
        ms_f = stream_mode(om_f, 1, fine_grid)
        assert ms_f.slip.real == pytest.approx(1.0 / 3.0, abs=2e-6)

    def test_velocity_components(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        ms = stream_mode(om, 1, grid)
        r = grid.r_nodes
        u_r_exact = 1j * (r**-3.0 - r**-2.0) / 3.0
        u_t_exact = (2.0 * r**-3.0 - r**-2.0) / 3.0
        assert np.max(np.abs(ms.u_r - u_r_exact)) < 1e-6
        assert np.max(np.abs(ms.u_theta - u_t_exact)) < 2e-5

    def test_negative_mode_matches_positive(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        assert np.allclose(stream_mode(om, -1, grid).psi, stream_mode(om, 1, grid).psi)

    def test_discrete_residual_production(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        ms = stream_mode(om, 1, grid)
        assert mode_residual(grid, ms.psi, om, 1) < 1e-8

    def test_discrete_residual_kernel(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        ms = stream_mode(om, 1, grid, backend="kernel")
        assert mode_residual(grid, ms.psi, om, 1) < 1e-4


class TestStreamModeZero:
    def test_swirl_from_enclosed_vorticity(self, grid):
        om = 4.0 * grid.r_nodes**-4.0 + 0j
        ms = stream_mode(om, 0, grid)
        exact = -2.0 / grid.r_nodes + 2.0 / grid.r_nodes**3
        assert np.max(np.abs(ms.u_theta - exact)) < 1e-7
        assert np.all(ms.u_r == 0)
        assert ms.slip == 0


class TestHigherModes:
    """Cross-backend agreement where no closed form is frozen."""

    @pytest.mark.parametrize("n", [2, 3, 5, 9])
    def test_backends_agree_random_profile(self, grid, n):
        rng = np.random.default_rng(100 + n)
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        r = grid.r_nodes
        y = r - 1.0
        om = (c[0] + c[1] * y + c[2] * y**2 + c[3] * y**3) * np.exp(-2.0 * y)
        a = stream_mode(om, n, grid, backend="solve")
        b = stream_mode(om, n, grid, backend="kernel")
        scale = max(np.max(np.abs(b.psi)), 1e-300)
        assert np.max(np.abs(a.psi - b.psi)) / scale < 1e-5
        assert abs(a.slip - b.slip) / max(abs(b.slip), 1e-300) < 1e-3

    def test_decay_bound_holds(self, grid):
        """sup_r |n psi_n / r| never exceeds the vorticity mass."""
        rng = np.random.default_rng(42)
        r = grid.r_nodes
        for n in (1, 2, 4, 8):
            c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            om = (c[0] + c[1] * (r - 1) + c[2] * (r - 1) ** 2) * np.exp(-3.0 * (r - 1))
            ms = stream_mode(om, n, grid)
            mass = grid.integrate(np.abs(om))
            assert np.max(np.abs(n * ms.psi / r)) <= mass * (1.0 + 1e-6)

    def test_decay_bound_ratio_for_power_profile(self, grid):
        """omega_1 = r^-4 attains ratio 4/27 at r = 3/2."""
        om = grid.r_nodes**-4.0 + 0j
        ms = stream_mode(om, 1, grid)
        ratio = np.max(np.abs(1 * ms.psi / grid.r_nodes)) / grid.integrate(np.abs(om))
        assert ratio == pytest.approx(4.0 / 27.0, abs=1e-3)


class TestTailFit:
    def test_exact_power_law(self, grid):
        om = grid.r_nodes**-4.0 + 0j
        T = tail_exponent_fit(grid, om, 1)
        assert T.real == pytest.approx(20.0**-3.0 / 3.0, rel=1e-10)

    def test_growing_tail_returns_zero(self, grid):
        om = grid.r_nodes**2.0 + 0j
        assert tail_exponent_fit(grid, om, 1) == 0

    def test_slow_decay_returns_zero(self, grid):
        om = grid.r_nodes**-0.5 + 0j
        assert tail_exponent_fit(grid, om, 1) == 0

    def test_zero_tail_returns_zero(self, grid):
        om = np.zeros(grid.N_r, dtype=complex)
        assert tail_exponent_fit(grid, om, 1) == 0

    def test_compact_support_unaffected_by_tail_flag(self, grid):
        r = grid.r_nodes
        om = np.where(r < 5.0, (r - 1.0) ** 2 * np.exp(-3.0 * (r - 1.0)), 0.0) + 0j
        a = stream_mode(om, 2, grid, tail=True)
        b = stream_mode(om, 2, grid, tail=False)
        assert np.array_equal(a.psi, b.psi)


class TestBatchedOperator:
    def test_matches_single_solves(self, grid):
        r = grid.r_nodes
        rows = np.stack([r**-4.0 + 0j, (r - 1) * np.exp(-2 * (r - 1)) + 0j])
        op = StreamOperator(grid, np.array([1, 3]))
        psi, slip = op.solve(rows)
        a = stream_mode(rows[0], 1, grid)
        b = stream_mode(rows[1], 3, grid)
        assert np.max(np.abs(psi[0] - a.psi)) < 1e-14
        assert np.max(np.abs(psi[1] - b.psi)) < 1e-14
        assert slip[0] == pytest.approx(a.slip)
        assert slip[1] == pytest.approx(b.slip)

    def test_mode_zero_row_uses_cumulative_path(self, grid):
        om = 4.0 * grid.r_nodes**-4.0 + 0j
        op = StreamOperator(grid, np.array([0, 1]))
        psi, slip = op.solve(np.stack([om, om]))
        ref = stream_mode(om, 0, grid)
        assert np.max(np.abs(psi[0] - ref.psi)) < 1e-14
        assert slip[0] == 0


class TestBoundaryOperators:
    def test_dtn_multiplier(self):
        g = np.array([2.0, 5.0, 1.0 + 1j])
        n = np.array([3, 0, -2])
        out = dtn_apply(g, n)
        assert out[0] == pytest.approx(6.0)
        assert out[1] == 0.0
        assert out[2] == pytest.approx(2.0 * (1.0 + 1j))

    def test_boundary_flux_closed_form(self, grid):
        """f_1 = r^-4 gives g_1 = -(1 - R^-3)/3 on the truncated domain."""
        f = SpectralField.zeros(grid, 8)
        modes = f.modes.copy()
        modes[4 + 1] = grid.r_nodes**-4.0
        modes[4 - 1] = grid.r_nodes**-4.0
        f = f.with_modes(modes)
        g = boundary_flux(f)
        expected = -(1.0 - 20.0**-3.0) / 3.0
        assert g[4 + 1].real == pytest.approx(expected, abs=2e-5)
        assert g[4] == 0.0  # mode 0 never carries flux

    def test_boundary_flux_matches_direct_derivative(self, fine_grid):
        """Direct solve + one-sided derivative at the wall, 20 random inputs."""
        rng = np.random.default_rng(77)
        r = fine_grid.r_nodes
        sup = (r > 1.2) & (r < 8.0)
        window = np.zeros(fine_grid.N_r)
        x = (2.0 * r[sup] - 9.2) / 6.8
        window[sup] = np.exp(-1.0 / (1.0 - x**2))
        from exodisk.grid_spectral import fornberg_weights

        w4 = fornberg_weights(r[0], r[:4], 1)[1]
        for k in range(20):
            n = int(rng.integers(1, 6))
            c = rng.standard_normal(3)
            prof = (c[0] + c[1] * r + c[2] * np.sin(r)) * window
            f = SpectralField.zeros(fine_grid, 16)
            modes = f.modes.copy()
            modes[8 + n] = prof
            modes[8 - n] = prof
            f = f.with_modes(modes)
            g = boundary_flux(f)[8 + n]
            ms = stream_mode(prof + 0j, n, fine_grid)
            dpsi_wall = w4 @ ms.psi[:4]
            assert abs(g - dpsi_wall) < 5e-5 * max(np.max(np.abs(prof)), 1e-300)

    def test_flux_warns_on_heavy_tail(self, grid):
        f = SpectralField.zeros(grid, 8)
        modes = f.modes.copy()
        modes[4 + 1] = np.ones(grid.N_r)
        modes[4 - 1] = np.ones(grid.N_r)
        f = f.with_modes(modes)
        with pytest.warns(UserWarning, match="truncation"):
            boundary_flux(f)


class TestCompatibility:
    def test_defect_closed_form(self, fine_grid):
        f = SpectralField.zeros(fine_grid, 8)
        modes = f.modes.copy()
        modes[4 + 1] = fine_grid.r_nodes**-4.0
        modes[4 - 1] = fine_grid.r_nodes**-4.0
        f = f.with_modes(modes)
        d = compatibility_defect(f)
        assert d[4 + 1].real == pytest.approx((1.0 - 20.0**-3.0) / 3.0, abs=2e-6)

    def test_balanced_profile_leaves_truncation_residue(self, fine_grid):
        """r^-4 - (4/3) r^-5 integrates to (R^-4 - R^-3)/3 on [1, R]."""
        r = fine_grid.r_nodes
        f = SpectralField.zeros(fine_grid, 8)
        modes = f.modes.copy()
        modes[4 + 1] = r**-4.0 - (4.0 / 3.0) * r**-5.0
        modes[4 - 1] = modes[4 + 1]
        f = f.with_modes(modes)
        d = compatibility_defect(f)
        expected = (20.0**-4.0 - 20.0**-3.0) / 3.0
        assert d[4 + 1].real == pytest.approx(expected, abs=2e-6)

    def test_mode_zero_defect_is_circulation(self, fine_grid):
        f = SpectralField.zeros(fine_grid, 8)
        modes = f.modes.copy()
        modes[4] = 4.0 * fine_grid.r_nodes**-4.0
        f = f.with_modes(modes)
        d = compatibility_defect(f)
        assert d[4].real == pytest.approx(2.0 * (1.0 - 20.0**-2.0), abs=5e-6)

    def test_projection_zeros_defect_exactly(self, fine_grid):
        rng = np.random.default_rng(21)
        data = rng.standard_normal((16, fine_grid.N_r)) * np.exp(
            -2.0 * (fine_grid.r_nodes - 1.0)
        )
        f = theta_transform(data, fine_grid)
        g = project_compatible(f, delta0=0.5)
        d = compatibility_defect(g)
        assert np.max(np.abs(d)) < 1e-13 * np.max(np.abs(compatibility_defect(f)))

    def test_projection_leaves_wall_profile_untouched(self, fine_grid):
        r = fine_grid.r_nodes
        f = SpectralField.zeros(fine_grid, 8)
        modes = f.modes.copy()
        modes[4 + 1] = r**-4.0
        modes[4 - 1] = r**-4.0
        f = f.with_modes(modes)
        g = project_compatible(f, delta0=0.5)
        near = r < 1.5
        assert np.array_equal(g.modes[4 + 1, near], f.modes[4 + 1, near])
        # and the slip really moved to zero
        assert abs(compatibility_defect(g)[4 + 1]) < 1e-16

    def test_bump_support(self, fine_grid):
        phi = compatibility_bump(fine_grid, 0.5)
        r = fine_grid.r_nodes
        assert np.all(phi[(r <= 1.5) | (r >= 10.0)] == 0)
        assert np.max(phi) > 0


class TestVelocityFromStream:
    def test_spectral_field_velocities(self, grid):
        psi = SpectralField.zeros(grid, 8)
        modes = psi.modes.copy()
        modes[4 + 1] = psi_exact(grid.r_nodes)
        modes[4 - 1] = psi_exact(grid.r_nodes)
        psi = psi.with_modes(modes)
        u_r, u_t = velocity_from_stream(psi)
        r = grid.r_nodes
        assert np.max(np.abs(u_r.modes[4 + 1] - 1j * (r**-3.0 - r**-2.0) / 3.0)) < 1e-12
        assert np.max(np.abs(u_t.modes[4 + 1] - (2.0 * r**-3.0 - r**-2.0) / 3.0)) < 2e-5

    def test_rejects_nonzero_wall_values(self, grid):
        psi = SpectralField.zeros(grid, 8)
        modes = psi.modes.copy()
        modes[4 + 1] = 1.0
        psi = psi.with_modes(modes)
        with pytest.raises(ValueError, match="boundary"):
            velocity_from_stream(psi)
