"""Plot rendering: companion CSV arithmetic, SVG structure, input checks."""

import csv

import pytest

from activemeasure.errors import DataFormatError
from activemeasure.harness import METRICS_COLUMNS
from activemeasure.plots import (
    MEASURED_COLOR,
    SKIPPED_COLOR,
    PlotSpec,
    render_learning_curve,
    render_plot,
    render_trace_grid,
    _ticks,
)


def write_metrics(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_COLUMNS)
        for env_steps, med in rows:
            w.writerow([0, env_steps, 1, med, med, 1.0, 0.05, 0.1])


class TestPlotSpec:
    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(DataFormatError):
            PlotSpec(kind="pie", inputs=(tmp_path / "x",), output=tmp_path / "y")

    def test_empty_inputs_rejected(self, tmp_path):
        with pytest.raises(DataFormatError):
            PlotSpec(kind="trace-grid", inputs=(), output=tmp_path / "y")


class TestTraceGrid:
    def test_cells_match_trace_pattern(self, tmp_path):
        trace = tmp_path / "trace.csv"
        trace.write_text("1,0,1\n0,0,0,1\n")
        out = render_trace_grid(trace, tmp_path / "g.svg")
        svg = out.read_text()
        assert svg.count(f'fill="{MEASURED_COLOR}"') >= 3
        assert svg.count(f'fill="{SKIPPED_COLOR}"') >= 4
        rows = list(csv.reader(out.with_suffix(".csv").open()))
        assert rows[0] == ["episode", "step", "measured"]
        assert rows[1:] == [
            ["0", "0", "1"], ["0", "1", "0"], ["0", "2", "1"],
            ["1", "0", "0"], ["1", "1", "0"], ["1", "2", "0"], ["1", "3", "1"],
        ]

    def test_non_binary_entry_rejected_with_row_number(self, tmp_path):
        trace = tmp_path / "trace.csv"
        trace.write_text("1,0\n0,7\n")
        with pytest.raises(DataFormatError, match="row 2"):
            render_trace_grid(trace, tmp_path / "g.svg")

    def test_empty_trace_rejected(self, tmp_path):
        trace = tmp_path / "trace.csv"
        trace.write_text("\n")
        with pytest.raises(DataFormatError):
            render_trace_grid(trace, tmp_path / "g.svg")


class TestLearningCurve:
    def test_median_and_band_across_trials(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_metrics(a, [(100, 10.0), (200, 30.0)])
        write_metrics(b, [(100, 20.0), (200, 10.0)])
        out = render_learning_curve([a, b], tmp_path / "c.svg")
        rows = list(csv.reader(out.with_suffix(".csv").open()))
        assert rows[0] == ["env_steps", "median", "min", "max"]
        assert rows[1] == ["100", "15.0", "10.0", "20.0"]
        assert rows[2] == ["200", "20.0", "10.0", "30.0"]

    def test_misaligned_steps_are_unioned(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_metrics(a, [(100, 1.0)])
        write_metrics(b, [(200, 2.0)])
        out = render_learning_curve([a, b], tmp_path / "c.svg")
        rows = list(csv.reader(out.with_suffix(".csv").open()))
        assert [r[0] for r in rows[1:]] == ["100", "200"]

    def test_wrong_header_rejected(self, tmp_path):
        bad = tmp_path / "m.csv"
        bad.write_text("steps,value\n1,2\n")
        with pytest.raises(DataFormatError, match="row 1"):
            render_learning_curve([bad], tmp_path / "c.svg")

    def test_non_numeric_cell_rejected_with_row(self, tmp_path):
        bad = tmp_path / "m.csv"
        bad.write_text(",".join(METRICS_COLUMNS) + "\n0,100,1,oops,1,1,1,1\n")
        with pytest.raises(DataFormatError, match="row 2"):
            render_learning_curve([bad], tmp_path / "c.svg")


class TestTicks:
    def test_ladder_values_are_round(self):
        ticks = _ticks(0.0, 200.0)
        assert all(t == round(t, 10) for t in ticks)
        assert ticks[0] <= 0.0 and ticks[-1] >= 200.0

    def test_degenerate_range(self):
        ticks = _ticks(5.0, 5.0)
        assert len(ticks) >= 1


class TestRenderDispatch:
    def test_trace_grid_requires_exactly_one_input(self, tmp_path):
        t1 = tmp_path / "a.csv"
        t2 = tmp_path / "b.csv"
        t1.write_text("1\n")
        t2.write_text("0\n")
        spec = PlotSpec(kind="trace-grid", inputs=(t1, t2),
                        output=tmp_path / "g.svg")
        with pytest.raises(DataFormatError):
            render_plot(spec)

    def test_svg_and_companion_written(self, tmp_path):
        t = tmp_path / "a.csv"
        t.write_text("1,0\n")
        spec = PlotSpec(kind="trace-grid", inputs=(t,), output=tmp_path / "g.svg")
        out = render_plot(spec)
        assert out.exists()
        assert out.with_suffix(".csv").exists()
        assert out.read_text().startswith("<svg")
