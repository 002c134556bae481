"""The four figure kinds and the CSV readers behind them.

Scaling: boundary_sup against nu*t on log-log axes, one curve per
sweep member, with a -1/2 reference slope and the pooled fitted
exponent in the corner.  Convergence and Kato: a per-viscosity scalar
table on log-log axes with its fitted slope.  Audit: the worst ratio
per inequality as a horizontal bar chart against the constant-1 line.

Everything is driven by a :class:`FigureSpec`; renders are
deterministic for identical inputs (fixed style, no timestamps).
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("scaling", "convergence", "kato", "audit")

_STYLE = {
    "figure.figsize": (6.0, 4.2),
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw and where to put it.

    ``inputs`` holds CSV paths; the scaling figure takes (nu, path)
    pairs instead because the diagnostics schema has no viscosity
    column.  ``axis_scales`` applies to both axes of the line figures.
    """

    inputs: list
    kind: str
    output: str
    axis_scales: str = "log"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("FigureSpec.inputs is empty")
        if self.axis_scales not in ("log", "linear"):
            raise ValueError(f"axis_scales must be 'log' or 'linear', got {self.axis_scales!r}")


@dataclass(frozen=True)
class RenderResult:
    """Where the image landed and what the fit said (None for audit)."""

    path: str
    slope: float | None
    n_points: int
    columns: tuple = field(default=())


def _read_table(path, columns) -> dict:
    """Named columns from one CSV; errors name the file and column."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"input CSV does not exist: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return {c: np.array([float(row[c]) for row in rows]) for c in columns}


def _fit_loglog(x: np.ndarray, y: np.ndarray) -> float:
    keep = (x > 0) & (y > 0)
    if int(np.sum(keep)) < 2:
        raise ValueError("log-log fit needs at least two positive points")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(coef[0])


def _save(fig, spec: FigureSpec) -> None:
    # strip the writer's software tag so identical inputs give
    # identical bytes across library patch versions
    fig.savefig(spec.output, metadata={"Software": None})
    plt.close(fig)


def _annotate_slope(ax, slope: float) -> None:
    ax.text(
        0.04,
        0.06,
        f"fitted slope {slope:+.3f}",
        transform=ax.transAxes,
        fontsize=10,
        bbox={"boxstyle": "round", "facecolor": "white", "alpha": 0.8},
    )


def _reference_line(ax, x: np.ndarray, y_anchor: float, power: float, label: str) -> None:
    xs = np.array([np.min(x), np.max(x)])
    ax.plot(xs, y_anchor * (xs / xs[0]) ** power, "k--", linewidth=1, label=label)


def render_scaling_figure(spec: FigureSpec) -> RenderResult:
    """Boundary vorticity sup against nu*t, pooled fit, -1/2 reference.

    ``spec.inputs`` is a list of (nu, diagnostics_csv) pairs; rows with
    t <= 0 are dropped (the initial state carries no wall layer).
    """
    pooled_x, pooled_y = [], []
    curves = []
    for item in spec.inputs:
        try:
            nu, path = item
            nu = float(nu)
        except (TypeError, ValueError):
            raise ValueError(
                "scaling figure inputs must be (nu, csv_path) pairs; "
                f"got {item!r}"
            ) from None
        cols = _read_table(path, ("t", "boundary_sup"))
        keep = (cols["t"] > 0) & (cols["boundary_sup"] > 0)
        if not np.any(keep):
            raise ValueError(f"{path}: no usable rows (t > 0 with positive boundary_sup)")
        x = nu * cols["t"][keep]
        y = cols["boundary_sup"][keep]
        curves.append((nu, x, y))
        pooled_x.append(x)
        pooled_y.append(y)
    x_all = np.concatenate(pooled_x)
    y_all = np.concatenate(pooled_y)
    slope = _fit_loglog(x_all, y_all)

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for nu, x, y in sorted(curves):
            ax.plot(x, y, marker="o", markersize=3, linewidth=1, label=f"nu = {nu:g}")
        anchor = float(np.max(y_all)) * 1.1
        _reference_line(ax, x_all, anchor, -0.5, "slope -1/2")
        ax.set_xscale(spec.axis_scales)
        ax.set_yscale(spec.axis_scales)
        ax.set_xlabel("nu * t")
        ax.set_ylabel("sup |omega| at the wall")
        _annotate_slope(ax, slope)
        ax.legend(fontsize=8)
        _save(fig, spec)
    return RenderResult(spec.output, slope, int(x_all.size), ("t", "boundary_sup"))


def _render_series(spec: FigureSpec, column: str, ylabel: str, ref_power: float) -> RenderResult:
    """Shared body of the convergence and Kato figures."""
    xs, ys = [], []
    for path in spec.inputs:
        cols = _read_table(path, ("nu", column))
        xs.append(cols["nu"])
        ys.append(cols[column])
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    order = np.argsort(x)
    x, y = x[order], y[order]
    slope = _fit_loglog(x, y)

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(x, y, marker="o", linewidth=1)
        _reference_line(ax, x, float(y[0]) * 1.1, ref_power, f"slope {ref_power:+g}")
        ax.set_xscale(spec.axis_scales)
        ax.set_yscale(spec.axis_scales)
        ax.set_xlabel("nu")
        ax.set_ylabel(ylabel)
        _annotate_slope(ax, slope)
        ax.legend(fontsize=8)
        _save(fig, spec)
    return RenderResult(spec.output, slope, int(x.size), ("nu", column))


def render_convergence_figure(spec: FigureSpec) -> RenderResult:
    """Velocity gap to the inviscid baseline against nu, +1/2 reference.

    Reads the (nu, gap) table the sweep writes; a missing table is the
    usual sign that the sweep ran without its inviscid baseline.
    """
    return _render_series(spec, "gap", "sup_t ||u_nu - u_0||_L2", 0.5)


def render_kato_figure(spec: FigureSpec) -> RenderResult:
    """Strip dissipation integral against nu, +1 reference slope."""
    return _render_series(spec, "kato", "kato quantity", 1.0)


def render_audit_figure(spec: FigureSpec) -> RenderResult:
    """Worst ratio per inequality name, bars against the constant-1 line."""
    worst: dict = {}
    hard_names = set()
    n_rows = 0
    for path in spec.inputs:
        if not os.path.exists(path):
            raise FileNotFoundError(f"input CSV does not exist: {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in ("name", "ratio", "hard", "skipped") if c not in header]
            if missing:
                raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
            for row in reader:
                if int(row["skipped"]):
                    continue
                name = row["name"]
                worst[name] = max(worst.get(name, 0.0), float(row["ratio"]))
                if int(row["hard"]):
                    hard_names.add(name)
                n_rows += 1
    if not worst:
        raise ValueError(f"{spec.inputs[0]}: every audit row is skipped")

    names = sorted(worst, key=worst.get)
    values = [worst[n] for n in names]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        colors = ["#c44" if n in hard_names else "#48a" for n in names]
        ax.barh(names, values, color=colors)
        ax.axvline(1.0, color="k", linewidth=1, linestyle="--")
        ax.set_xlabel("worst ratio (hard rows dark red, bound = 1)")
        if max(values) > 0 and spec.axis_scales == "log":
            ax.set_xscale("log")
        fig.tight_layout()
        _save(fig, spec)
    return RenderResult(spec.output, None, n_rows, ("name", "ratio"))
