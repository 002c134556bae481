"""Near-boundary analytic norms, Sobolev tails, and energy functionals.

Two evaluation routes share one set of weights and mode sums:

* closed-form test functions are measured on complex pencil contours
  (:class:`PencilDomain`, :func:`contour_norm`), which is the honest
  reading of the analyticity norms;
* gridded simulation data exists on real y only, so its diagnostics use
  the documented real-trace proxy (:func:`field_norm_suite`): the same
  exponential mode weight integrated over 0 <= y <= delta0 + rho.

On top of the norms sit the weighted energy/dissipation pair (E, D),
the nonlinear composite N_rho, the shrinking-radius norm A_k with decay
rate beta and exponent gamma, and the trajectory supremum A(beta).

Conventions: x-integrals use the plain Parseval mode sum (no 2*pi/lam
factor), D^k means the sum over i+j <= k of mixed derivatives, and all
y-derivatives on gridded data come from the wide fourth-order stencils.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .grid_spectral import SpectralField, theta_transform
from .rescaled_engine import RescaledField, curvature_ops, map_to_rescaled

__all__ = [
    "PencilDomain",
    "NormReport",
    "EnergyReport",
    "ABetaTracker",
    "domain_from_config",
    "contour_norm",
    "cutoff_eta",
    "cutoff_eta_prime",
    "field_norm_suite",
    "hk_norm",
    "sobolev_tail",
    "region_sup",
    "n_rho",
    "a_k_norm",
    "energy_functionals",
    "single_mode_field",
    "algebra_constant_one_audit",
    "write_norm_reports",
]


@dataclass(frozen=True)
class PencilDomain:
    """Pencil-shaped complex neighborhood of the wall segment.

    The eta-contour runs from 0 along the slope-eta pencil edge to
    delta0*(1+i*eta), then down the triangular cap hypotenuse to the
    real point delta0+eta (plus the mirror path in the lower half
    plane).  Norms take a supremum over an eta grid in [0, rho] with
    the closing eta -> rho limit point included.
    """

    delta0: float
    rho0: float
    eps0: float
    n_eta: int = 16

    def __post_init__(self):
        if not 0 < self.delta0 <= self.rho0:
            raise ValueError("need 0 < delta0 <= rho0")
        if not 0 < self.eps0 < 0.5:
            raise ValueError("eps0 must lie in (0, 1/2)")

    def eta_samples(self, rho: float) -> np.ndarray:
        return np.linspace(0.0, rho, self.n_eta + 1)

    def contour(self, eta: float) -> list[tuple[complex, complex]]:
        """Directed segments of the upper and lower eta-paths."""
        d = self.delta0
        upper = [(0.0 + 0.0j, d * (1.0 + 1j * eta)), (d + 1j * eta, d + eta + 0.0j)]
        lower = [(z0.conjugate(), z1.conjugate()) for z0, z1 in upper]
        return upper + lower


def domain_from_config(config: SolverConfig) -> PencilDomain:
    return PencilDomain(config.delta0, config.rho0, config.eps0)


def _weight(domain: PencilDomain, rho: float, n_abs: float, re_y) -> np.ndarray:
    return np.exp(domain.eps0 * (domain.delta0 + rho - np.asarray(re_y)) * n_abs)


def contour_norm(
    f,
    n: int,
    domain: PencilDomain,
    rho: float | None = None,
    which: str = "L1",
    samples: int = 512,
) -> float:
    """Weighted path norm of a mode profile on the pencil contours.

    ``f`` is a callable on complex y.  L1 sums the weighted modulus
    integral over all directed segments (trapezoid rule with ``samples``
    points per segment); Linf takes the weighted supremum.  The result
    is the supremum over the eta grid of ``domain``.
    """
    if which not in ("L1", "Linf"):
        raise ValueError(f"which must be 'L1' or 'Linf', got {which!r}")
    rho = domain.rho0 if rho is None else float(rho)
    if not 0 < rho <= domain.rho0:
        raise ValueError("need 0 < rho <= rho0")
    n_abs = abs(float(n))
    best = 0.0
    t = np.linspace(0.0, 1.0, samples)
    for eta in domain.eta_samples(rho):
        total = 0.0
        peak = 0.0
        for z0, z1 in domain.contour(eta):
            z = z0 + t * (z1 - z0)
            vals = np.abs(np.asarray(f(z), dtype=complex))
            bad = ~np.isfinite(vals)
            if np.any(bad):
                raise ValueError(f"non-finite value on the contour at y = {z[bad][0]:.6g}")
            wvals = vals * _weight(domain, rho, n_abs, z.real)
            if which == "L1":
                total += abs(z1 - z0) * np.trapezoid(wvals, t)
            else:
                peak = max(peak, float(np.max(wvals)))
        best = max(best, total if which == "L1" else peak)
    return best


# -- gridded fields: real-trace proxy ----------------------------------


def _as_rescaled(w) -> RescaledField:
    if isinstance(w, RescaledField):
        return w
    if isinstance(w, SpectralField):
        return map_to_rescaled(w, 1.0)
    raise TypeError(f"expected SpectralField or RescaledField, got {type(w).__name__}")


def single_mode_field(grid, n: int, profile: np.ndarray, lam: float = 1.0) -> RescaledField:
    """Hermitian field carrying one +-n mode pair on the given grid.

    The profile is split evenly between the two rows so the physical
    field is real; for n=0 the profile must be real already.
    """
    n = int(abs(n))
    N_theta = max(2 * n, 4)
    modes = np.zeros((N_theta + 1, grid.N_r), dtype=complex)
    half = N_theta // 2
    if n == 0:
        modes[half] = np.asarray(profile, dtype=complex).real
    else:
        modes[half + n] = 0.5 * np.asarray(profile, dtype=complex)
        modes[half - n] = np.conj(modes[half + n])
    return RescaledField(grid, N_theta, lam, modes)


def _y_and_weights(w: RescaledField) -> tuple[np.ndarray, np.ndarray]:
    """y-nodes and quadrature weights in dy (the grid stores dr)."""
    return w.y, w.grid.quad_weights / w.lam


def _restrict_below(y: np.ndarray, qw: np.ndarray, cut: float) -> np.ndarray:
    """Trapezoid weights for [0, cut], with a fractional last cell."""
    if cut >= y[-1]:
        return qw.copy()
    j = int(np.searchsorted(y, cut))
    out = np.zeros_like(qw)
    if j == 0:
        return out
    h = np.diff(y[:j])
    out[: j - 1] += 0.5 * h
    out[1:j] += 0.5 * h
    d = cut - y[j - 1]
    frac = d / (y[j] - y[j - 1])
    out[j - 1] += d * (1.0 - 0.5 * frac)
    out[j] += 0.5 * d * frac
    return out


def _restrict_above(y: np.ndarray, qw: np.ndarray, cut: float) -> np.ndarray:
    return qw - _restrict_below(y, qw, cut)


def _dy_ladder(w: RescaledField, jmax: int) -> list[np.ndarray]:
    """Rows of d_y^j w for j = 0..jmax (wide stencils, lam-scaled)."""
    out = [w.modes]
    for _ in range(jmax):
        out.append(w.lam * w.grid.d1_wide(out[-1]))
    return out


def _ydy_ladder(w: RescaledField, jmax: int) -> list[np.ndarray]:
    """Rows of (y d_y)^j w for j = 0..jmax."""
    y = w.y
    out = [w.modes]
    for _ in range(jmax):
        out.append(y * (w.lam * w.grid.d1_wide(out[-1])))
    return out


def _l1_rows(w: RescaledField, rows: np.ndarray, domain: PencilDomain, rho: float) -> np.ndarray:
    """Per-mode weighted integral over [0, delta0+rho] (proxy L1)."""
    y, qw = _y_and_weights(w)
    cut = domain.delta0 + rho
    qcut = _restrict_below(y, qw, cut)
    wgt = _weight(domain, rho, np.abs(w.alpha_values)[:, None], y[None, :])
    return (np.abs(rows) * wgt) @ qcut


def _linf_rows(w: RescaledField, rows: np.ndarray, domain: PencilDomain, rho: float) -> np.ndarray:
    """Per-mode weighted sup over 0 <= y <= delta0+rho (proxy Linf)."""
    y, _ = _y_and_weights(w)
    cut = domain.delta0 + rho
    mask = y <= cut
    wgt = _weight(domain, rho, np.abs(w.alpha_values)[:, None], y[None, mask])
    return np.max(np.abs(rows[:, mask]) * wgt, axis=1)


def _wk1(w: RescaledField, domain: PencilDomain, rho: float, k: int) -> float:
    alpha = np.abs(w.alpha_values)
    ladder = _ydy_ladder(w, k)
    total = 0.0
    for j in range(k + 1):
        I = _l1_rows(w, ladder[j], domain, rho)
        xpow = sum(alpha**i for i in range(k - j + 1))
        total += float(np.sum(xpow * I))
    return total


def hk_norm(values: np.ndarray, alphas: np.ndarray, domain: PencilDomain, rho: float, k: int) -> float:
    """Weighted boundary-data norm: sum |alpha|^k e^{eps0(d0+rho)|alpha|} |g_alpha|."""
    a = np.abs(np.asarray(alphas, dtype=float))
    return float(np.sum(a**k * np.exp(domain.eps0 * (domain.delta0 + rho) * a) * np.abs(values)))


def sobolev_tail(w, m: int, k: int, cut: float) -> float:
    """sum_{i+j<=k} ||y^m d_x^i d_y^j w||_{L2(y >= cut)} (Parseval in x)."""
    w = _as_rescaled(w)
    y, qw = _y_and_weights(w)
    qtail = _restrict_above(y, qw, cut)
    alpha = np.abs(w.alpha_values)
    ladder = _dy_ladder(w, k)
    ym = y ** (2 * m) * qtail
    total = 0.0
    for j in range(k + 1):
        row_int = (np.abs(ladder[j]) ** 2) @ ym
        for i in range(k - j + 1):
            total += float(np.sqrt(np.sum(alpha ** (2 * i) * row_int)))
    return total


def region_sup(w, k: int, y_lo: float, y_hi: float) -> float:
    """sum_{i+j<=k} sup over the strip y_lo <= y <= y_hi of |d_x^i d_y^j w|.

    Physical-space suprema over the angular samples; the field must be
    Hermitian (real).
    """
    w = _as_rescaled(w)
    y = w.y
    mask = (y >= y_lo) & (y <= y_hi)
    if not np.any(mask):
        return 0.0
    grid = w.grid
    ia = (1j * w.alpha_values)[:, None]
    ladder = _dy_ladder(w, k)
    total = 0.0
    for j in range(k + 1):
        for i in range(k - j + 1):
            rows = ia**i * ladder[j]
            samp = theta_transform(SpectralField(grid, w.N_theta, rows), grid, "inverse")
            total += float(np.max(np.abs(samp[:, mask])))
    return total


@dataclass(frozen=True)
class NormReport:
    """Proxy norms of one field at one (rho, k)."""

    rho: float
    k: int
    l1: float
    linf: float
    wk1: dict
    hk: dict
    tail_k: float
    tail_kp1: float
    tail_kp2: float
    tail5: float
    proxy: bool = True


def field_norm_suite(w, domain: PencilDomain, rho: float | None = None, k: int = 1) -> NormReport:
    """Real-trace proxy norms of a gridded field.

    ``l1``/``linf`` are the weighted mode sums over [0, delta0+rho];
    ``wk1[j]`` the analytic Sobolev composites for orders 0..k; ``hk[j]``
    the boundary-trace norms; the tails are the weighted L2 pieces that
    accompany them (orders k, k+1, k+2 at the cut delta0+rho, and the
    y^2 D^5 tail at delta0/2).
    """
    w = _as_rescaled(w)
    if k > 3:
        raise ValueError("k > 3 exceeds the stencil accuracy budget")
    if k < 0:
        raise ValueError("k must be nonnegative")
    rho = domain.rho0 if rho is None else float(rho)
    if not 0 < rho <= domain.rho0:
        raise ValueError("need 0 < rho <= rho0")

    l1 = float(np.sum(_l1_rows(w, w.modes, domain, rho)))
    linf = float(np.sum(_linf_rows(w, w.modes, domain, rho)))
    wk1 = {j: _wk1(w, domain, rho, j) for j in range(k + 1)}
    trace = w.modes[:, 0]
    hk = {j: hk_norm(trace, w.alpha_values, domain, rho, j) for j in range(k + 1)}
    cut = domain.delta0 + rho
    return NormReport(
        rho=rho,
        k=k,
        l1=l1,
        linf=linf,
        wk1=wk1,
        hk=hk,
        tail_k=sobolev_tail(w, 1, k, cut),
        tail_kp1=sobolev_tail(w, 1, k + 1, cut),
        tail_kp2=sobolev_tail(w, 1, k + 2, cut),
        tail5=sobolev_tail(w, 2, 5, domain.delta0 / 2.0),
    )


def n_rho(w, domain: PencilDomain, rho: float, k: int) -> float:
    """Nonlinear composite: W^{k+1,1}*(W^{k,1} + yD^k tail) + W^{k,1}*yD^{k+2} tail."""
    w = _as_rescaled(w)
    cut = domain.delta0 + rho
    wk = _wk1(w, domain, rho, k)
    wk1 = _wk1(w, domain, rho, k + 1)
    return wk1 * (wk + sobolev_tail(w, 1, k, cut)) + wk * sobolev_tail(w, 1, k + 2, cut)


# -- energy functionals -------------------------------------------------


def cutoff_eta(y: np.ndarray, delta0: float) -> np.ndarray:
    """Nonnegative cutoff: 0 below delta0/4, y^2 above delta0/2.

    The transition uses the smoothstep s^3(10-15s+6s^2) so the blend is
    monotone and eta' >= 0 everywhere.
    """
    y = np.asarray(y, dtype=float)
    lo, hi = delta0 / 4.0, delta0 / 2.0
    s = np.clip((y - lo) / (hi - lo), 0.0, 1.0)
    blend = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    return blend * y**2


def cutoff_eta_prime(y: np.ndarray, delta0: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    lo, hi = delta0 / 4.0, delta0 / 2.0
    s = np.clip((y - lo) / (hi - lo), 0.0, 1.0)
    blend = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    dblend = 30.0 * s**2 * (1.0 - s) ** 2 / (hi - lo)
    return dblend * y**2 + 2.0 * y * blend


@dataclass(frozen=True)
class EnergyReport:
    """Energy/dissipation functionals of one field at one instant."""

    E: float
    D: float
    N_rho: float
    A_k: float
    tail5: float
    expired: bool


def _a_pow_sum(alpha: np.ndarray, i_max: int) -> np.ndarray:
    return sum(alpha ** (2 * i) for i in range(i_max + 1))


def energy_functionals(w, config: SolverConfig, tau: float = 0.0) -> EnergyReport:
    """Weighted energy E, dissipation D, N_rho, and the A_k norm.

    E and D sum the mixed derivatives up to total order five against
    the cutoff; D carries nu along with the metric weight 1 - lam*b
    (equal to 1/r^2), and the boundary-adjacent eta' piece.  A_k uses
    the shrinking radius rho0 - beta*tau with exponent gamma; once the
    radius is spent the report is flagged expired and A_k is zero.
    """
    w = _as_rescaled(w)
    domain = domain_from_config(config)
    y, qw = _y_and_weights(w)
    eta = cutoff_eta(y, config.delta0)
    eta_p = cutoff_eta_prime(y, config.delta0)
    ops = curvature_ops(y, w.lam)
    alpha = np.abs(w.alpha_values)

    ladder = _dy_ladder(w, 6)
    E = 0.0
    D = 0.0
    for j in range(6):
        sq_j = (np.abs(ladder[j]) ** 2) @ (eta * qw)
        E += 0.5 * float(np.sum(_a_pow_sum(alpha, 5 - j) * sq_j))
        if config.nu > 0.0:
            sq_mj = (np.abs(ladder[j]) ** 2) @ ((1.0 - w.lam * ops.b) * eta * qw)
            sq_pj = (np.abs(ladder[j + 1]) ** 2) @ (eta_p * qw)
            xsum_shift = sum(alpha ** (2 * (i + 1)) for i in range(5 - j + 1))
            D += config.nu * float(
                np.sum(xsum_shift * sq_mj) + 0.5 * np.sum(_a_pow_sum(alpha, 5 - j) * sq_pj)
            )

    nr = n_rho(w, domain, config.rho0 / 2.0, config.k_norm)
    ak, expired = a_k_norm(w, config, tau)
    tail5 = sobolev_tail(w, 2, 5, config.delta0 / 2.0)
    return EnergyReport(E=E, D=D, N_rho=nr, A_k=ak, tail5=tail5, expired=expired)


def a_k_norm(w, config: SolverConfig, tau: float, n_rho_samples: int = 8) -> tuple[float, bool]:
    """sup over 0 < rho < rho0 - beta*tau of the shrinking-radius norm.

    Returns (value, expired); expired means the radius budget
    rho0 - beta*tau is spent and the value is reported as zero.
    """
    w = _as_rescaled(w)
    domain = domain_from_config(config)
    beta = config.resolved_beta()
    rho_max = config.rho0 - beta * tau
    if rho_max <= 0.0:
        return 0.0, True
    k = config.k_norm
    nut = np.sqrt(max(config.nu * tau, 0.0))
    trace = w.modes[:, 0]
    best = 0.0
    for rho in np.linspace(0.0, rho_max, n_rho_samples + 2)[1:-1]:
        lower = _wk1(w, domain, rho, k) + nut * hk_norm(
            trace, w.alpha_values, domain, rho, k - 1
        )
        upper = _wk1(w, domain, rho, k + 1) + nut * hk_norm(
            trace, w.alpha_values, domain, rho, k
        )
        best = max(best, lower + upper * (rho_max - rho) ** config.gamma)
    return best, False


class ABetaTracker:
    """Running supremum of the shrinking-radius norm along a trajectory.

    Feed it (tau, field) checkpoints in order; ``update`` returns the
    current A(beta) value, the sup over time of the radius norm plus
    the sup of the y^2 D^5 far tail.  After the radius budget is spent
    the value freezes and ``expired`` turns on.
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        self.beta = config.resolved_beta()
        self.sup_ak = 0.0
        self.sup_tail = 0.0
        self.expired = False

    def update(self, tau: float, w) -> float:
        ak, expired = a_k_norm(w, self.config, tau)
        if expired:
            self.expired = True
        else:
            self.sup_ak = max(self.sup_ak, ak)
            self.sup_tail = max(
                self.sup_tail, sobolev_tail(w, 2, 5, self.config.delta0 / 2.0)
            )
        return self.value

    @property
    def value(self) -> float:
        return self.sup_ak + self.sup_tail


def algebra_constant_one_audit(
    n_pairs: int = 100,
    seed: int = 3,
    domain: PencilDomain | None = None,
    samples: int = 256,
) -> float:
    """Worst ratio ||fg||_L1 / (||f||_Linf * ||g||_L1) over random pairs.

    The pairs are single-mode exponential-algebraic profiles with random
    complex amplitudes; the product sits at the summed frequency.  The
    algebra inequality holds with constant one, so the returned worst
    ratio must not exceed 1 (up to rounding).
    """
    domain = domain or PencilDomain(0.5, 0.5, 0.25)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        m, n = (int(v) for v in rng.integers(-5, 6, size=2))
        a1, a2 = rng.uniform(0.2, 2.0, size=2)
        k1, k2 = (int(v) for v in rng.integers(0, 4, size=2))
        c1 = complex(rng.normal(), rng.normal())
        c2 = complex(rng.normal(), rng.normal())

        def f(z, c=c1, a=a1, k=k1):
            return c * np.exp(-a * z) * (1.0 + z) ** (-k)

        def g(z, c=c2, a=a2, k=k2):
            return c * np.exp(-a * z) * (1.0 + z) ** (-k)

        lhs = contour_norm(lambda z: f(z) * g(z), m + n, domain, which="L1", samples=samples)
        rhs = contour_norm(f, m, domain, which="Linf", samples=samples) * contour_norm(
            g, n, domain, which="L1", samples=samples
        )
        if rhs > 0.0:
            worst = max(worst, lhs / rhs)
    return worst


def write_norm_reports(path, rows, label: str = "t") -> None:
    """CSV of (key, NormReport) pairs, one row per report.

    The first column is named by ``label``: "t" for time series, but a
    sweep over seeds or parameters can rename it to match its key.
    """
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [label, "rho", "k", "L1", "Linf", "Wk1", "Hk", "tail_k", "tail_kp1", "tail_kp2", "tail5"]
        )
        for t, rep in rows:
            writer.writerow(
                [
                    f"{t:.12g}",
                    f"{rep.rho:.12g}",
                    rep.k,
                    f"{rep.l1:.9e}",
                    f"{rep.linf:.9e}",
                    f"{rep.wk1[rep.k]:.9e}",
                    f"{rep.hk[rep.k]:.9e}",
                    f"{rep.tail_k:.9e}",
                    f"{rep.tail_kp1:.9e}",
                    f"{rep.tail_kp2:.9e}",
                    f"{rep.tail5:.9e}",
                ]
            )
