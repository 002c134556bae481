"""Figure rendering from synthetic CSV inputs.

Exact power laws pin the fitted slopes: boundary_sup = (nu*t)^{-1/2}
fits -0.5 to rounding, gap = c*sqrt(nu) fits +0.5.
"""

import csv

import numpy as np
import pytest

from plots import (
    FigureSpec,
    render_audit_figure,
    render_convergence_figure,
    render_kato_figure,
    render_scaling_figure,
)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def diagnostics_csv(path, nu, power=-0.5, n=12):
    rows = [[t, (nu * t) ** power] for t in np.geomspace(0.01, 0.5, n)]
    return write_csv(path, ["t", "boundary_sup"], rows)


def gap_csv(path, power=0.5, column="gap"):
    rows = [[nu, 2.0 * nu**power] for nu in (1e-3, 3e-3, 1e-2, 3e-2)]
    return write_csv(path, ["nu", column], rows)


class TestScaling:
    def test_exact_power_law_slope(self, tmp_path):
        path = diagnostics_csv(tmp_path / "a.csv", 1e-3)
        out = tmp_path / "fig.png"
        res = render_scaling_figure(
            FigureSpec(inputs=[(1e-3, path)], kind="scaling", output=str(out))
        )
        assert res.slope == pytest.approx(-0.5, abs=1e-12)
        assert out.stat().st_size > 0
        assert res.n_points == 12

    def test_pooled_over_members(self, tmp_path):
        inputs = [
            (nu, diagnostics_csv(tmp_path / f"m{i}.csv", nu))
            for i, nu in enumerate((1e-2, 1e-3))
        ]
        res = render_scaling_figure(
            FigureSpec(inputs=inputs, kind="scaling", output=str(tmp_path / "fig.png"))
        )
        assert res.slope == pytest.approx(-0.5, abs=1e-12)
        assert res.n_points == 24

    def test_rejects_bare_paths(self, tmp_path):
        path = diagnostics_csv(tmp_path / "a.csv", 1e-3)
        with pytest.raises(ValueError, match="pairs"):
            render_scaling_figure(
                FigureSpec(inputs=[path], kind="scaling", output=str(tmp_path / "f.png"))
            )

    def test_missing_file_named(self, tmp_path):
        missing = tmp_path / "nope.csv"
        with pytest.raises(FileNotFoundError, match="nope.csv"):
            render_scaling_figure(
                FigureSpec(inputs=[(1e-3, str(missing))], kind="scaling",
                           output=str(tmp_path / "f.png"))
            )

    def test_missing_column_named(self, tmp_path):
        path = write_csv(tmp_path / "bad.csv", ["t", "energy"], [[0.1, 1.0]])
        with pytest.raises(ValueError, match="boundary_sup"):
            render_scaling_figure(
                FigureSpec(inputs=[(1e-3, path)], kind="scaling",
                           output=str(tmp_path / "f.png"))
            )

    def test_empty_csv_named(self, tmp_path):
        path = write_csv(tmp_path / "empty.csv", ["t", "boundary_sup"], [])
        with pytest.raises(ValueError, match="empty.csv"):
            render_scaling_figure(
                FigureSpec(inputs=[(1e-3, path)], kind="scaling",
                           output=str(tmp_path / "f.png"))
            )

    def test_all_zero_rows_named(self, tmp_path):
        path = write_csv(tmp_path / "z.csv", ["t", "boundary_sup"], [[0.0, 0.0], [0.1, 0.0]])
        with pytest.raises(ValueError, match="z.csv"):
            render_scaling_figure(
                FigureSpec(inputs=[(1e-3, path)], kind="scaling",
                           output=str(tmp_path / "f.png"))
            )


class TestConvergenceAndKato:
    def test_convergence_slope(self, tmp_path):
        path = gap_csv(tmp_path / "gaps.csv")
        res = render_convergence_figure(
            FigureSpec(inputs=[path], kind="convergence", output=str(tmp_path / "c.png"))
        )
        assert res.slope == pytest.approx(0.5, abs=1e-12)

    def test_convergence_missing_table(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="gaps.csv"):
            render_convergence_figure(
                FigureSpec(inputs=[str(tmp_path / "gaps.csv")], kind="convergence",
                           output=str(tmp_path / "c.png"))
            )

    def test_kato_slope(self, tmp_path):
        path = gap_csv(tmp_path / "kato.csv", power=1.2, column="kato")
        res = render_kato_figure(
            FigureSpec(inputs=[path], kind="kato", output=str(tmp_path / "k.png"))
        )
        assert res.slope == pytest.approx(1.2, abs=1e-12)

    def test_kato_wrong_column(self, tmp_path):
        path = gap_csv(tmp_path / "kato.csv", column="gap")
        with pytest.raises(ValueError, match="kato"):
            render_kato_figure(
                FigureSpec(inputs=[path], kind="kato", output=str(tmp_path / "k.png"))
            )


class TestAudit:
    def audit_csv(self, path, rows):
        return write_csv(path, ["seed", "name", "lhs", "rhs", "ratio", "hard", "skipped"], rows)

    def test_bar_chart_renders(self, tmp_path):
        path = self.audit_csv(
            tmp_path / "audit.csv",
            [
                [7, "pointwise-stream", 0.26, 1.0, 0.26, 1, 0],
                [7, "velocity-linf-k0", 0.18, 20.2, 0.009, 0, 0],
                [8, "pointwise-stream", 0.30, 1.0, 0.30, 1, 0],
            ],
        )
        out = tmp_path / "a.png"
        res = render_audit_figure(FigureSpec(inputs=[path], kind="audit", output=str(out)))
        assert res.slope is None
        assert res.n_points == 3
        assert out.stat().st_size > 0

    def test_all_skipped_is_error(self, tmp_path):
        path = self.audit_csv(tmp_path / "audit.csv", [[7, "x", 0, 0, "nan", 1, 1]])
        with pytest.raises(ValueError, match="skipped"):
            render_audit_figure(FigureSpec(inputs=[path], kind="audit", output=str(tmp_path / "a.png")))


class TestSpecAndDeterminism:
    def test_bad_kind(self):
        with pytest.raises(ValueError, match="kind"):
            FigureSpec(inputs=["x.csv"], kind="pie", output="f.png")

    def test_empty_inputs(self):
        with pytest.raises(ValueError, match="empty"):
            FigureSpec(inputs=[], kind="scaling", output="f.png")

    def test_bad_axis_scales(self):
        with pytest.raises(ValueError, match="axis_scales"):
            FigureSpec(inputs=["x.csv"], kind="kato", output="f.png", axis_scales="cubic")

    def test_identical_inputs_identical_bytes(self, tmp_path):
        path = gap_csv(tmp_path / "gaps.csv")
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render_convergence_figure(FigureSpec(inputs=[path], kind="convergence", output=str(a)))
        render_convergence_figure(FigureSpec(inputs=[path], kind="convergence", output=str(b)))
        assert a.read_bytes() == b.read_bytes()
