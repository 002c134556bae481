"""Offline figures from the solver's diagnostics CSV files.

The renderers read only CSV (the diagnostics time series and the
two-column per-viscosity tables the sweep writes); nothing here imports
the solver package.
"""

from .figures import (
    FigureSpec,
    RenderResult,
    render_audit_figure,
    render_convergence_figure,
    render_kato_figure,
    render_scaling_figure,
)

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "RenderResult",
    "render_audit_figure",
    "render_convergence_figure",
    "render_kato_figure",
    "render_scaling_figure",
    "__version__",
]
