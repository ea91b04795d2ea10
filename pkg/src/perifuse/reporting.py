"""Result tables and figure data series.

``build_report`` lays out per-system and fused EERs (in percent) as a grid
of rows (systems first, fusion rows after) by columns (one per metric or
feature source). Fusion cells carry the signed relative change against the
best individual system in the same column, rendered in brackets; the best
cell of each column is flagged. The markdown rendering is for reading, the
CSV rendering is the machine form of the same table.

Figure data is written as plain CSV series (one x column, one column per
series) plus an optional self-contained SVG polyline chart; both renderings
are deterministic functions of their inputs.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ParseError, UsageError
from .evaluation import EvalResult, relative_change

KIND_SYSTEM = "system"
KIND_FUSION = "fusion"


@dataclass(frozen=True, slots=True)
class ReportEntry:
    """One measured EER: a system or fusion row in one column."""

    kind: str
    row: str
    column: str
    eer_percent: float

    def __post_init__(self):
        if self.kind not in (KIND_SYSTEM, KIND_FUSION):
            raise UsageError(
                f"entry kind must be '{KIND_SYSTEM}' or '{KIND_FUSION}', "
                f"got {self.kind!r}")
        if not self.row or not self.column:
            raise UsageError("entry row and column labels must be non-empty")
        if not self.eer_percent >= 0.0:
            raise UsageError(f"EER percent must be >= 0, got {self.eer_percent}")


@dataclass(frozen=True, slots=True)
class ReportCell:
    eer_percent: float
    change_percent: float | None
    best: bool


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[tuple[str, str], ...]       # (kind, row label), systems first
    columns: tuple[str, ...]
    cells: Mapping[tuple[str, str], ReportCell]  # keyed by (row label, column)


def build_report(entries: Sequence[ReportEntry]) -> ReportTable:
    entries = list(entries)
    if not entries:
        raise UsageError("cannot build an empty report")
    columns: list[str] = []
    system_rows: list[str] = []
    fusion_rows: list[str] = []
    by_cell: dict[tuple[str, str], ReportEntry] = {}
    for e in entries:
        if e.column not in columns:
            columns.append(e.column)
        bucket = system_rows if e.kind == KIND_SYSTEM else fusion_rows
        if e.row not in bucket:
            if e.row in system_rows or e.row in fusion_rows:
                raise UsageError(f"row {e.row!r} appears under both kinds")
            bucket.append(e.row)
        if (e.row, e.column) in by_cell:
            raise UsageError(f"duplicate entry for row {e.row!r} column {e.column!r}")
        by_cell[(e.row, e.column)] = e

    cells: dict[tuple[str, str], ReportCell] = {}
    for column in columns:
        in_column = [e for e in by_cell.values() if e.column == column]
        system_eers = [e.eer_percent for e in in_column if e.kind == KIND_SYSTEM]
        has_fusion = any(e.kind == KIND_FUSION for e in in_column)
        if has_fusion and not system_eers:
            raise UsageError(
                f"column {column!r} has fusion rows but no individual system "
                f"to baseline against")
        baseline = min(system_eers) if system_eers else None
        best = min(e.eer_percent for e in in_column)
        for e in in_column:
            change = None
            if e.kind == KIND_FUSION:
                change = relative_change(e.eer_percent, baseline)
            cells[(e.row, e.column)] = ReportCell(
                eer_percent=e.eer_percent,
                change_percent=change,
                best=e.eer_percent == best)
    rows = tuple(
        [(KIND_SYSTEM, r) for r in system_rows]
        + [(KIND_FUSION, r) for r in fusion_rows])
    return ReportTable(rows=rows, columns=tuple(columns), cells=cells)


def render_cell(cell: ReportCell | None) -> str:
    if cell is None:
        return ""
    text = f"{cell.eer_percent:.2f}"
    if cell.change_percent is not None:
        text += f" ({cell.change_percent:+.2f}%)"
    if cell.best:
        text = f"**{text}**"
    return text


def write_report_markdown(table: ReportTable, path) -> None:
    lines = ["| " + " | ".join(["network"] + list(table.columns)) + " |"]
    lines.append("|" + "---|" * (len(table.columns) + 1))
    for _, row in table.rows:
        cells = [render_cell(table.cells.get((row, c))) for c in table.columns]
        lines.append("| " + " | ".join([row] + cells) + " |")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_report_csv(table: ReportTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "row", "column", "eer_percent", "change_percent", "best"])
        for kind, row in table.rows:
            for column in table.columns:
                cell = table.cells.get((row, column))
                if cell is None:
                    continue
                writer.writerow([
                    kind, row, column, repr(cell.eer_percent),
                    "" if cell.change_percent is None else repr(cell.change_percent),
                    "true" if cell.best else "false",
                ])


REPORT_INPUT_HEADER = ["kind", "row", "column", "eer_percent"]


def read_report_entries(path) -> list[ReportEntry]:
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty report input", line=1) from None
        if header != REPORT_INPUT_HEADER:
            raise ParseError(
                f"expected header {','.join(REPORT_INPUT_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(REPORT_INPUT_HEADER):
                raise ParseError(
                    f"expected {len(REPORT_INPUT_HEADER)} columns, got {len(row)}",
                    line=lineno)
            try:
                eer = float(row[3])
            except ValueError:
                raise ParseError("eer_percent must be a decimal number", line=lineno) from None
            try:
                entries.append(ReportEntry(row[0], row[1], row[2], eer))
            except UsageError as exc:
                raise ParseError(str(exc), line=lineno) from None
    if not entries:
        raise ParseError("report input has no rows")
    return entries


# --------------------------------------------------------------------------
# figure data

_INTRA_GROUP = re.compile(r"^intra D(\d+)$")
_GAP_GROUP = re.compile(r"^gap (\d+)$")

PANEL_INTRA = "intra"
PANEL_GAP = "gap"


def panel_points(results: Sequence[EvalResult], panel: str) -> list[tuple[int, float]]:
    """(x, EER percent) points of one evaluation report for one figure panel."""
    if panel == PANEL_INTRA:
        pattern = _INTRA_GROUP
    elif panel == PANEL_GAP:
        pattern = _GAP_GROUP
    else:
        raise UsageError(f"unknown panel {panel!r}")
    points = []
    for r in results:
        match = pattern.match(r.grouping)
        if match:
            points.append((int(match.group(1)), r.eer * 100.0))
    if not points:
        raise UsageError(f"no '{panel}' groups in the evaluation results")
    return sorted(points)


def write_series_csv(
    x_label: str, x_values: Sequence, series: Mapping[str, Sequence[float]], path,
) -> None:
    """One x column plus one column per named series, aligned by position."""
    if not series:
        raise UsageError("no series to write")
    x_values = list(x_values)
    if not x_values:
        raise UsageError("series must contain at least one point")
    for name, values in series.items():
        if len(values) != len(x_values):
            raise UsageError(
                f"series {name!r} has {len(values)} values for "
                f"{len(x_values)} x positions")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([x_label] + list(series))
        for i, x in enumerate(x_values):
            writer.writerow([x] + [repr(float(series[name][i])) for name in series])


_SVG_COLORS = ("#1b6ca8", "#c0392b", "#1e8449", "#7d3c98", "#b7950b", "#2e4053")


def render_polyline_svg(
    x_label: str,
    y_label: str,
    x_values: Sequence,
    series: Mapping[str, Sequence[float]],
    path,
    title: str = "",
) -> None:
    """Self-contained SVG line chart; byte-identical for identical inputs."""
    if not series:
        raise UsageError("no series to render")
    xs = [float(x) for x in x_values]
    if len(xs) < 1:
        raise UsageError("series must contain at least one point")
    for name, values in series.items():
        if len(values) != len(xs):
            raise UsageError(
                f"series {name!r} has {len(values)} values for {len(xs)} x positions")
    width, height = 720, 480
    left, right, top, bottom = 72, 24, 40, 56
    plot_w = width - left - right
    plot_h = height - top - bottom
    all_y = [float(v) for values in series.values() for v in values]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(all_y), max(all_y)
    if x_max == x_min:
        x_min, x_max = x_min - 0.5, x_max + 0.5
    if y_max == y_min:
        y_min, y_max = y_min - 0.5, y_max + 0.5
    pad = 0.05 * (y_max - y_min)
    y_min, y_max = y_min - pad, y_max + pad

    def px(x: float) -> float:
        return left + (x - x_min) / (x_max - x_min) * plot_w

    def py(y: float) -> float:
        return top + (y_max - y) / (y_max - y_min) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.2f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>')
    # axes
    parts.append(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="#333333"/>')
    parts.append(
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
        f'stroke="#333333"/>')
    for i in range(5):
        fx = x_min + (x_max - x_min) * i / 4
        fy = y_min + (y_max - y_min) * i / 4
        parts.append(
            f'<text x="{px(fx):.2f}" y="{top + plot_h + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{fx:.3g}</text>')
        parts.append(
            f'<text x="{left - 8}" y="{py(fy) + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{fy:.3g}</text>')
        parts.append(
            f'<line x1="{left}" y1="{py(fy):.2f}" x2="{left + plot_w}" '
            f'y2="{py(fy):.2f}" stroke="#dddddd"/>')
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{x_label}</text>')
    parts.append(
        f'<text x="18" y="{top + plot_h / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {top + plot_h / 2:.2f})">{y_label}</text>')
    for idx, (name, values) in enumerate(series.items()):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        points = " ".join(
            f"{px(x):.2f},{py(float(y)):.2f}" for x, y in zip(xs, values))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="2"/>')
        for x, y in zip(xs, values):
            parts.append(
                f'<circle cx="{px(x):.2f}" cy="{py(float(y)):.2f}" r="3" '
                f'fill="{color}"/>')
        legend_y = top + 16 + 18 * idx
        parts.append(
            f'<rect x="{left + plot_w - 150}" y="{legend_y - 10}" width="12" '
            f'height="12" fill="{color}"/>')
        parts.append(
            f'<text x="{left + plot_w - 132}" y="{legend_y}" '
            f'font-family="sans-serif" font-size="12">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")
