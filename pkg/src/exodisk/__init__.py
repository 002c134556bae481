"""Exterior-disk vorticity solver and its verification harness.

Submodules, roughly bottom-up:

* ``backend``: tridiagonal solve kernels (compiled extension with a
  NumPy fallback, selected at import).
* ``config``: run configuration and the flat key=value file format.
* ``grid_spectral``: stretched radial grid, Fourier layout, snapshots.
* ``biot_savart``: exterior stream solves and the wall compatibility
  projection.
* ``nse_solver``: viscous (nonlocal Robin) and inviscid time steppers.
* ``rescaled_engine``: boundary-layer variables and the stretched
  operator identities.
* ``stokes_green``: half-line mode propagator, residual kernel fits,
  semigroup/trace audits.
* ``analytic_norms``: pencil-contour analytic norms and the energy
  functionals.
* ``diagnostics_harness``: flow-property checks and the E1-E4 drivers.
* ``cli``: command-line entry point.
"""

__version__ = "0.1.0"

from .backend import backend_name
from .config import SolverConfig, load_config

__all__ = ["SolverConfig", "backend_name", "load_config", "__version__"]
