"""Discrete fields on the exterior of the unit disk.

Scalar fields live on a tensor grid: uniform samples in the angle theta
(handled spectrally, as Fourier modes n) and a stretched node set in the
radius r in [1, R_max].  The radial grid clusters geometrically at r=1 so
a viscous boundary layer of width ~sqrt(nu*T) is resolved for every
viscosity in a sweep, and relaxes toward the far field.

The module owns the radial finite-difference stencils (second order,
with wider fourth-order tables used by the elliptic deferred correction),
the trapezoid quadrature weights, the theta transforms, and the binary
snapshot format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .config import SolverConfig

__all__ = [
    "RadialGrid",
    "SpectralField",
    "build_grid",
    "make_radial_grid",
    "fornberg_weights",
    "theta_transform",
    "radial_derivative",
    "dealias_mask",
    "write_snapshot",
    "read_snapshot",
]

_MAGIC = b"EXOD"
_FORMAT_VERSION = 1
# Spacings may not stretch faster than this; a grid that needs to is too
# coarse to honor the boundary-layer rule and is rejected instead.
_MAX_RATIO = 1.3


def fornberg_weights(x0: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights on arbitrary nodes.

    Returns an array W of shape (m+1, len(x)) such that
    ``f^(k)(x0) ~= W[k] @ f(x)`` for k = 0..m, by the classic recursive
    construction.

    Parameters
    ----------
    x0 : evaluation point.
    x : 1-D node array (distinct values).
    m : highest derivative order.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < m + 1:
        raise ValueError("need at least m+1 nodes")
    W = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - x0
    W[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    W[k, i] = c1 * (k * W[k - 1, i - 1] - c5 * W[k, i - 1]) / c2
                W[0, i] = -c1 * c5 * W[0, i - 1] / c2
            for k in range(mn, 0, -1):
                W[k, j] = ((c4 * W[k, j] - k * W[k - 1, j])) / c3
            W[0, j] = c4 * W[0, j] / c3
        c1 = c2
    return W


def _geometric_ratio(span: float, N: int, h0: float) -> float:
    """Ratio g with h0*(g^N - 1)/(g - 1) = span, by bisection."""

    def total(g: float) -> float:
        if abs(g - 1.0) < 1e-14:
            return h0 * N
        if N * np.log(g) > 600.0:  # g**N would overflow; treat as +inf
            return np.inf
        return h0 * (g**N - 1.0) / (g - 1.0)

    if total(1.0) >= span:
        raise ValueError(
            f"first spacing h0={h0:g} with N_r={N} already covers the span; "
            "grid would have to shrink outward"
        )
    lo, hi = 1.0 + 1e-14, _MAX_RATIO
    if total(hi) < span:
        raise ValueError(
            f"N_r={N} too small: even ratio {_MAX_RATIO} cannot reach R_max "
            f"with first spacing {h0:g} (boundary-layer rule)"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) < span:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _stencil_table(r: np.ndarray, width: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node derivative stencils of the given width.

    Returns (idx, W1, W2): integer columns (N, width) and weight tables
    for the first and second derivative at every node, one-sided at the
    ends.
    """
    N = len(r)
    half = width // 2
    idx = np.empty((N, width), dtype=np.int64)
    W1 = np.empty((N, width))
    W2 = np.empty((N, width))
    for j in range(N):
        lo = min(max(j - half, 0), N - width)
        cols = np.arange(lo, lo + width)
        w = fornberg_weights(r[j], r[cols], 2)
        idx[j] = cols
        W1[j] = w[1]
        W2[j] = w[2]
    return idx, W1, W2


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RadialGrid:
    """Stretched radial nodes with quadrature and derivative tables.

    ``quad_weights`` are trapezoid weights for integrals in dr over
    [1, R_max]; they are exact for functions that are piecewise linear
    on the node set.  The stencil tables are internal helpers shared by
    the elliptic and transport code.
    """

    r_nodes: np.ndarray
    quad_weights: np.ndarray
    R_max: float
    N_r: int
    h0: float
    ratio: float
    _idx3: np.ndarray = field(repr=False, default=None)
    _W1_3: np.ndarray = field(repr=False, default=None)
    _W2_3: np.ndarray = field(repr=False, default=None)
    _idx5: np.ndarray = field(repr=False, default=None)
    _W1_5: np.ndarray = field(repr=False, default=None)
    _W2_5: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        r = self.r_nodes
        if r[0] != 1.0 or r[-1] != self.R_max:
            raise ValueError("grid endpoints must be pinned to 1 and R_max exactly")
        if not np.all(np.diff(r) > 0):
            raise ValueError("r_nodes must be strictly increasing")

    # -- derivative applications (last axis is the radial index) --

    def d1(self, f: np.ndarray) -> np.ndarray:
        """First radial derivative, 3-point stencils, one-sided ends."""
        return np.einsum("jk,...jk->...j", self._W1_3, f[..., self._idx3])

    def d2(self, f: np.ndarray) -> np.ndarray:
        """Second radial derivative, 3-point stencils."""
        return np.einsum("jk,...jk->...j", self._W2_3, f[..., self._idx3])

    def d1_wide(self, f: np.ndarray) -> np.ndarray:
        """First derivative on 5-point stencils (deferred correction)."""
        return np.einsum("jk,...jk->...j", self._W1_5, f[..., self._idx5])

    def d2_wide(self, f: np.ndarray) -> np.ndarray:
        """Second derivative on 5-point stencils (deferred correction)."""
        return np.einsum("jk,...jk->...j", self._W2_5, f[..., self._idx5])

    def integrate(self, f: np.ndarray) -> np.ndarray | complex:
        """Quadrature of f over [1, R_max] in dr along the last axis."""
        return f @ self.quad_weights

    def cumulative(self, f: np.ndarray) -> np.ndarray:
        """Running trapezoid integral from r=1 to each node."""
        f = np.asarray(f)
        h = np.diff(self.r_nodes)
        seg = 0.5 * h * (f[..., 1:] + f[..., :-1])
        out = np.zeros(f.shape, dtype=seg.dtype)
        out[..., 1:] = np.cumsum(seg, axis=-1)
        return out


def make_radial_grid(R_max: float, N_r: int, h0: float) -> RadialGrid:
    """Geometric grid on [1, R_max] with first spacing h0."""
    if R_max <= 1:
        raise ValueError("R_max must exceed 1")
    if N_r < 16:
        raise ValueError("N_r must be at least 16")
    span = R_max - 1.0
    g = _geometric_ratio(span, N_r - 1, h0)
    h = h0 * g ** np.arange(N_r - 1)
    h *= span / h.sum()  # absorb the bisection residual so endpoints pin exactly
    r = np.empty(N_r)
    r[0] = 1.0
    r[1:] = 1.0 + np.cumsum(h)
    r[-1] = R_max

    w = np.zeros(N_r)
    dh = np.diff(r)
    w[:-1] += 0.5 * dh
    w[1:] += 0.5 * dh

    idx3, W1_3, W2_3 = _stencil_table(r, 3)
    idx5, W1_5, W2_5 = _stencil_table(r, 5)
    return RadialGrid(
        r_nodes=_freeze(r),
        quad_weights=_freeze(w),
        R_max=float(R_max),
        N_r=N_r,
        h0=float(h[0]),
        ratio=float(g),
        _idx3=_freeze(idx3),
        _W1_3=_freeze(W1_3),
        _W2_3=_freeze(W2_3),
        _idx5=_freeze(idx5),
        _W1_5=_freeze(W1_5),
        _W2_5=_freeze(W2_5),
    )


def build_grid(config: SolverConfig) -> RadialGrid:
    """Grid satisfying the boundary-layer resolution rule.

    The first spacing is min(sqrt(nu_min*T)/8, 0.8/N_r): the viscous rule
    keeps ~8 nodes per sqrt(nu*T) layer width, and the 0.8/N_r cap keeps
    the far field from starving when nu is large.
    """
    h_layer = np.sqrt(config.nu_floor * config.T) / 8.0
    h0 = min(h_layer, 0.8 / config.N_r)
    return make_radial_grid(config.R_max, config.N_r, h0)


@dataclass(frozen=True)
class SpectralField:
    """Fourier-in-theta representation of a scalar field.

    ``modes[i, j]`` is f_n(r_j) with n = i - N_theta//2, i.e. rows run
    over n = -N_theta/2 .. N_theta/2 inclusive (the Nyquist mode appears
    split over both end rows so a real field keeps exact Hermitian
    symmetry f_{-n} = conj(f_n)).
    """

    grid: RadialGrid
    N_theta: int
    modes: np.ndarray

    def __post_init__(self):
        expect = (self.N_theta + 1, self.grid.N_r)
        if self.modes.shape != expect:
            raise ValueError(f"modes shape {self.modes.shape} != {expect}")
        if not np.all(np.isfinite(self.modes)):
            raise ValueError("SpectralField contains non-finite entries")

    @property
    def n_values(self) -> np.ndarray:
        half = self.N_theta // 2
        return np.arange(-half, half + 1)

    def mode(self, n: int) -> np.ndarray:
        """Radial profile of mode n (read-only view)."""
        half = self.N_theta // 2
        if abs(n) > half:
            raise KeyError(f"mode {n} outside +-{half}")
        return self.modes[n + half]

    def hermitian_defect(self) -> float:
        flipped = np.conj(self.modes[::-1])
        return float(np.max(np.abs(self.modes - flipped)))

    @classmethod
    def zeros(cls, grid: RadialGrid, N_theta: int) -> "SpectralField":
        return cls(grid, N_theta, np.zeros((N_theta + 1, grid.N_r), dtype=complex))

    def with_modes(self, modes: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, self.N_theta, modes)


def theta_transform(data, grid: RadialGrid, direction: str = "forward"):
    """Transform between theta samples and a :class:`SpectralField`.

    Forward: ``data`` is a real array of shape (N_theta, N_r) sampled at
    theta_k = 2*pi*k/N_theta.  Inverse: ``data`` is a SpectralField and
    the real sample array is returned.  The Nyquist coefficient is split
    in half across the n = +-N_theta/2 rows, which keeps the roundtrip
    exact and the mode array Hermitian for real input.
    """
    if direction == "forward":
        samples = np.asarray(data)
        if samples.ndim != 2 or samples.shape[1] != grid.N_r:
            raise ValueError("expected samples of shape (N_theta, N_r)")
        N = samples.shape[0]
        if N < 4 or N % 2:
            raise ValueError("N_theta must be even and >= 4")
        c = np.fft.fft(samples, axis=0) / N
        half = N // 2
        modes = np.empty((N + 1, grid.N_r), dtype=complex)
        for n in range(-half, half + 1):
            if abs(n) == half:
                modes[n + half] = 0.5 * c[half % N]
            else:
                modes[n + half] = c[n % N]
        return SpectralField(grid, N, modes)

    if direction == "inverse":
        fld: SpectralField = data
        N = fld.N_theta
        half = N // 2
        c = np.zeros((N, fld.grid.N_r), dtype=complex)
        for n in range(-half, half):
            c[n % N] = fld.modes[n + half]
        c[half] = fld.modes[0] + fld.modes[N]  # both Nyquist halves
        samples = np.fft.ifft(c * N, axis=0)
        scale = np.max(np.abs(samples)) or 1.0
        if np.max(np.abs(samples.imag)) > 1e-10 * scale:
            raise ValueError("inverse transform of a non-Hermitian field is not real")
        return samples.real

    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def radial_derivative(f: SpectralField, order: int = 1) -> SpectralField:
    """d/dr (order 1) or d2/dr2 (order 2), mode by mode."""
    if order == 1:
        return f.with_modes(f.grid.d1(f.modes))
    if order == 2:
        return f.with_modes(f.grid.d2(f.modes))
    raise ValueError("order must be 1 or 2")


def dealias_mask(N_theta: int) -> np.ndarray:
    """Boolean keep-mask over mode rows implementing the 2/3 rule."""
    half = N_theta // 2
    n = np.arange(-half, half + 1)
    return np.abs(n) <= N_theta // 3


def write_snapshot(path, f: SpectralField, time: float, nu: float) -> None:
    """Write the documented binary snapshot format.

    Header: magic "EXOD", format version u32, N_theta u32, N_r u32,
    time f64, nu f64; then little-endian f64 (re, im) pairs in row-major
    (n ascending, j ascending) order.
    """
    header = struct.pack("<4sIIIdd", _MAGIC, _FORMAT_VERSION, f.N_theta, f.grid.N_r, time, nu)
    flat = np.empty((f.modes.shape[0], f.modes.shape[1], 2))
    flat[:, :, 0] = f.modes.real
    flat[:, :, 1] = f.modes.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(flat.astype("<f8").tobytes())


def read_snapshot(path, grid: RadialGrid) -> tuple[SpectralField, float, float]:
    """Read a snapshot written by :func:`write_snapshot`."""
    head_size = struct.calcsize("<4sIIIdd")
    with open(path, "rb") as fh:
        head = fh.read(head_size)
        magic, version, N_theta, N_r, time, nu = struct.unpack("<4sIIIdd", head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        if N_r != grid.N_r:
            raise ValueError(f"{path}: snapshot has N_r={N_r}, grid has {grid.N_r}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    expect = (N_theta + 1) * N_r * 2
    if raw.size != expect:
        raise ValueError(f"{path}: truncated payload ({raw.size} of {expect} doubles)")
    flat = raw.reshape(N_theta + 1, N_r, 2)
    modes = flat[:, :, 0] + 1j * flat[:, :, 1]
    return SpectralField(grid, N_theta, modes), time, nu
