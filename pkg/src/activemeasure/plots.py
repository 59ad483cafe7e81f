"""Static SVG figures with companion CSV tables.

Three figure kinds: a trace grid of measurement decisions (episodes down,
time steps across), a learning curve of evaluation medians with a min-max
band across trials, and grouped bars of best costed returns per cost for up
to two agents. Every renderer also writes the plotted numbers as CSV next to
the SVG, so results can be diffed as plain text. Output is deterministic:
same inputs, byte-identical SVG.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .harness import METRICS_COLUMNS, SUMMARY_COLUMNS

PLOT_KINDS = ("trace-grid", "learning-curve", "cost-bars")

MEASURED_COLOR = "#1f4e79"
SKIPPED_COLOR = "#d6e4f0"
AGENT_COLORS = ("#1f4e79", "#c55a11")
BAND_COLOR = "#bcd4e6"
LINE_COLOR = "#1f4e79"
AXIS_COLOR = "#333333"


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[Path, ...]
    output: Path

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise DataFormatError(
                f"unknown plot kind {self.kind!r}; expected one of "
                f"{', '.join(PLOT_KINDS)}"
            )
        if not self.inputs:
            raise DataFormatError("plot needs at least one input file")


class _Svg:
    """Tiny append-only SVG document builder."""

    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
            f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">',
            f'<rect x="0" y="0" width="{width:g}" height="{height:g}" fill="white"/>',
        ]

    def rect(self, x, y, w, h, fill, stroke="none"):
        self.parts.append(
            f'<rect x="{x:g}" y="{y:g}" width="{w:g}" height="{h:g}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke=AXIS_COLOR, width=1.0):
        self.parts.append(
            f'<line x1="{x1:g}" y1="{y1:g}" x2="{x2:g}" y2="{y2:g}" '
            f'stroke="{stroke}" stroke-width="{width:g}"/>'
        )

    def polyline(self, points, stroke=LINE_COLOR, width=1.5):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width:g}"/>'
        )

    def polygon(self, points, fill=BAND_COLOR):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(f'<polygon points="{pts}" fill="{fill}" stroke="none"/>')

    def text(self, x, y, s, size=11, anchor="middle", color=AXIS_COLOR):
        self.parts.append(
            f'<text x="{x:g}" y="{y:g}" font-size="{size:g}" '
            f'font-family="sans-serif" text-anchor="{anchor}" '
            f'fill="{color}">{s}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _read_traces(path: Path) -> list[list[int]]:
    rows = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    for i, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = [int(tok) for tok in line.split(",")]
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {i}: {exc}") from exc
        if any(v not in (0, 1) for v in row):
            raise DataFormatError(f"{path}: row {i}: entries must be 0 or 1")
        rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: row 1: no trace rows found")
    return rows


def render_trace_grid(trace_path: Path, out_svg: Path) -> Path:
    """Episodes (rows) by time steps (columns); dark cells mark measurements."""
    traces = _read_traces(trace_path)
    cell = 12
    left, top, right, bottom = 70, 30, 20, 46
    cols = max(len(t) for t in traces)
    rows = len(traces)
    svg = _Svg(left + cols * cell + right, top + rows * cell + bottom)
    for r, trace in enumerate(traces):
        for c, measured in enumerate(trace):
            svg.rect(
                left + c * cell,
                top + r * cell,
                cell - 1,
                cell - 1,
                MEASURED_COLOR if measured else SKIPPED_COLOR,
            )
        svg.text(left - 8, top + r * cell + cell * 0.75, str(r), anchor="end")
    step_tick = max(1, cols // 10)
    for c in range(0, cols, step_tick):
        svg.text(left + c * cell + cell / 2, top + rows * cell + 14, str(c))
    svg.text(left + cols * cell / 2, top + rows * cell + 32, "time step")
    svg.text(12, top + rows * cell / 2, "episode", anchor="middle")
    svg.text(left + cols * cell / 2, 18,
             "measurement decisions per evaluation episode")
    out_svg = Path(out_svg)
    out_svg.write_text(svg.render())
    with open(out_svg.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "step", "measured"])
        for r, trace in enumerate(traces):
            for c, measured in enumerate(trace):
                writer.writerow([r, c, measured])
    return out_svg


def _read_metrics(path: Path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != list(METRICS_COLUMNS):
        raise DataFormatError(f"{path}: row 1: expected metrics header "
                              f"{','.join(METRICS_COLUMNS)}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(METRICS_COLUMNS):
            raise DataFormatError(f"{path}: row {i}: expected "
                                  f"{len(METRICS_COLUMNS)} columns, got {len(row)}")
        rec = dict(zip(METRICS_COLUMNS, row))
        try:
            rec["env_steps"] = int(rec["env_steps"])
            for key in ("eval_median_costed_return", "eval_median_raw_return",
                        "eval_measure_fraction", "epsilon", "loss"):
                rec[key] = float(rec[key])
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {i}: {exc}") from exc
        out.append(rec)
    return out


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = float(min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw))
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + step * 1e-9, step)]


def render_learning_curve(metrics_paths, out_svg: Path,
                          value_column: str = "eval_median_costed_return") -> Path:
    """Median of ``value_column`` across trials vs env steps, with min-max band."""
    by_step: dict[int, list[float]] = {}
    for path in metrics_paths:
        for rec in _read_metrics(path):
            by_step.setdefault(rec["env_steps"], []).append(rec[value_column])
    steps = sorted(by_step)
    med = [float(np.median(by_step[s])) for s in steps]
    lo = [float(min(by_step[s])) for s in steps]
    hi = [float(max(by_step[s])) for s in steps]

    width, height = 560, 360
    left, top, right, bottom = 70, 30, 20, 50
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = min(steps), max(steps)
    y0, y1 = min(lo), max(hi)
    if y1 <= y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    xr = (x1 - x0) or 1

    def X(v):
        return left + (v - x0) / xr * pw

    def Y(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    svg = _Svg(width, height)
    if len(steps) > 1:
        band = [(X(s), Y(h)) for s, h in zip(steps, hi)]
        band += [(X(s), Y(l)) for s, l in zip(reversed(steps), reversed(lo))]
        svg.polygon(band)
    svg.polyline([(X(s), Y(m)) for s, m in zip(steps, med)])
    svg.line(left, top + ph, left + pw, top + ph)
    svg.line(left, top, left, top + ph)
    for t in _ticks(x0, x1):
        svg.line(X(t), top + ph, X(t), top + ph + 4)
        svg.text(X(t), top + ph + 18, f"{t:g}")
    for t in _ticks(y0, y1):
        svg.line(left - 4, Y(t), left, Y(t))
        svg.text(left - 8, Y(t) + 4, f"{t:g}", anchor="end")
    svg.text(left + pw / 2, height - 12, "environment steps")
    svg.text(left + pw / 2, 18, "evaluation median across trials (band: min to max)")
    out_svg = Path(out_svg)
    out_svg.write_text(svg.render())
    with open(out_svg.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["env_steps", "median", "min", "max"])
        for s, m, l, h in zip(steps, med, lo, hi):
            writer.writerow([s, repr(m), repr(l), repr(h)])
    return out_svg


def _read_summary_rows(paths) -> list[dict]:
    from .harness import read_summary_csv

    rows = []
    for path in paths:
        rows.append(read_summary_csv(Path(path)))
    return rows


def render_cost_bars(summary_paths, out_svg: Path) -> Path:
    """Best median costed return per cost, grouped bars per agent."""
    rows = _read_summary_rows(summary_paths)
    costs = sorted({r["cost"] for r in rows})
    agents = sorted({r["agent"] for r in rows})
    if len(agents) > len(AGENT_COLORS):
        raise DataFormatError(
            f"cost-bars supports up to {len(AGENT_COLORS)} agents, got {len(agents)}"
        )
    value = {(r["agent"], r["cost"]): r["median_best_costed"] for r in rows}

    width, height = 560, 360
    left, top, right, bottom = 70, 46, 20, 50
    pw, ph = width - left - right, height - top - bottom
    vals = [v for v in value.values()]
    y1 = max(max(vals), 0.0)
    y0 = min(min(vals), 0.0)
    if y1 == y0:
        y1 = y0 + 1.0

    def Y(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    group_w = pw / len(costs)
    bar_w = group_w * 0.8 / max(len(agents), 1)
    svg = _Svg(width, height)
    for gi, cost in enumerate(costs):
        gx = left + gi * group_w + group_w * 0.1
        for ai, agent in enumerate(agents):
            v = value.get((agent, cost))
            if v is None:
                continue
            ytop, ybot = min(Y(v), Y(0.0)), max(Y(v), Y(0.0))
            svg.rect(gx + ai * bar_w, ytop, bar_w * 0.9,
                     max(ybot - ytop, 0.5), AGENT_COLORS[ai])
        svg.text(left + gi * group_w + group_w / 2, top + ph + 18, f"{cost:g}")
    svg.line(left, Y(0.0), left + pw, Y(0.0))
    svg.line(left, top, left, top + ph)
    for t in _ticks(y0, y1):
        svg.line(left - 4, Y(t), left, Y(t))
        svg.text(left - 8, Y(t) + 4, f"{t:g}", anchor="end")
    for ai, agent in enumerate(agents):
        lx = left + 10 + ai * 150
        svg.rect(lx, 24, 12, 12, AGENT_COLORS[ai])
        svg.text(lx + 18, 34, agent, anchor="start")
    svg.text(left + pw / 2, height - 12, "measurement cost")
    svg.text(left + pw / 2, 14, "best median costed return per cost")
    out_svg = Path(out_svg)
    out_svg.write_text(svg.render())
    with open(out_svg.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "cost", "median_best_costed"])
        for agent in agents:
            for cost in costs:
                if (agent, cost) in value:
                    writer.writerow([agent, repr(cost), repr(value[(agent, cost)])])
    return out_svg


def render_plot(spec: PlotSpec) -> Path:
    """Dispatch on the plot kind; returns the written SVG path."""
    if spec.kind == "trace-grid":
        if len(spec.inputs) != 1:
            raise DataFormatError("trace-grid takes exactly one trace file")
        return render_trace_grid(spec.inputs[0], spec.output)
    if spec.kind == "learning-curve":
        return render_learning_curve(spec.inputs, spec.output)
    return render_cost_bars(spec.inputs, spec.output)
