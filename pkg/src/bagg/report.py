"""Result rendering: CSV, markdown tables and SVG bar charts.

The CSV form is the canonical on-disk schema (one row per grid cell and
mode, plain decimal fractions); the markdown form is the wide
percentage-per-column layout used for reading results.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .bench import BASELINE_METHOD, METHOD_ORDER, MODE_ORDER, ResultRow, ResultTable

CSV_COLUMNS = (
    "sample_size",
    "num_categories",
    "mode",
    "method",
    "mean_accuracy",
    "std_dev",
    "repetitions",
    "seed",
)

_METHOD_LABELS = {
    "eda": "EDA",
    "bt_a": "BT-A",
    "bt_b": "BT-B",
    "combined": "Combined",
}


def method_label(method: str) -> str:
    return _METHOD_LABELS.get(method, method[:1].upper() + method[1:])


def _csv_text(table: ResultTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in table.rows:
        writer.writerow(
            [
                row.sample_size,
                row.num_categories,
                row.mode,
                row.method,
                f"{row.mean_accuracy:.6f}",
                f"{row.std_dev:.6f}",
                row.repetitions,
                row.seed,
            ]
        )
    return out.getvalue()


def write_results_csv(table: ResultTable, path: str | Path) -> None:
    Path(path).write_text(_csv_text(table), encoding="utf-8")


def read_results_csv(path: str | Path) -> ResultTable:
    table = ResultTable()
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        for rec in reader:
            table.rows.append(
                ResultRow(
                    sample_size=int(rec["sample_size"]),
                    num_categories=int(rec["num_categories"]),
                    mode=rec["mode"],
                    method=rec["method"],
                    mean_accuracy=float(rec["mean_accuracy"]),
                    std_dev=float(rec["std_dev"]),
                    repetitions=int(rec["repetitions"]),
                    seed=int(rec["seed"]),
                )
            )
    return table


def _column_order(table: ResultTable) -> list[tuple[str, str]]:
    """Distinct (mode, method) pairs: baseline first, then standard and
    bagg blocks, combined last within each block."""
    pairs = []
    for row in table.rows:
        pair = (row.mode, row.method)
        if pair not in pairs:
            pairs.append(pair)

    def key(pair: tuple[str, str]):
        mode, method = pair
        mode_rank = MODE_ORDER.index(mode) if mode in MODE_ORDER else len(MODE_ORDER)
        method_rank = METHOD_ORDER.index(method) if method in METHOD_ORDER else len(METHOD_ORDER)
        return (mode_rank, method_rank, method)

    return sorted(pairs, key=key)


def _column_heading(mode: str, method: str) -> str:
    if mode == "baseline":
        return "Baseline"
    if method == "combined":
        return "Combined"
    prefix = "Standard" if mode == "standard" else "BAGG"
    return f"{prefix} {method_label(method)}"


def format_table(table: ResultTable, format: str = "md") -> str:
    """Render results: "csv" is the canonical flat schema, "md" the wide
    percentage table with one row per (sample size, category count).

    Cells without a result (skipped grid cells) render as an em dash.
    """
    if not table.rows:
        raise ValueError("cannot format an empty result table")
    if format == "csv":
        return _csv_text(table)
    if format != "md":
        raise ValueError(f"unknown table format {format!r}")

    columns = _column_order(table)
    by_cell: dict[tuple[int, int], dict[tuple[str, str], ResultRow]] = {}
    for row in table.rows:
        by_cell.setdefault((row.sample_size, row.num_categories), {})[(row.mode, row.method)] = row
    lines = []
    header = ["Sample Size", "Categories"] + [_column_heading(m, me) for m, me in columns]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(["---:"] * len(header)) + "|")
    for (n, cats), cells in sorted(by_cell.items()):
        values = [str(n), str(cats)]
        for pair in columns:
            row = cells.get(pair)
            values.append("—" if row is None else f"{row.mean_accuracy * 100:.2f}%")
        lines.append("| " + " | ".join(values) + " |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG bar chart
# ---------------------------------------------------------------------------

_PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)

_PLOT_HEIGHT = 240.0
_BAR_WIDTH = 18.0
_BAR_GAP = 4.0
_GROUP_PAD = 26.0
_MARGIN_LEFT = 56.0
_MARGIN_TOP = 24.0
_MARGIN_BOTTOM = 48.0
_LEGEND_WIDTH = 170.0


def render_chart(table: ResultTable, path: str | Path | None = None) -> str:
    """Grouped accuracy bar chart as a standalone SVG document.

    One group per (sample size, category count), one bar per (mode,
    method), y axis fixed to 0-100%.  Bar heights are linear in accuracy.
    If path is given the document is also written there.
    """
    if not table.rows:
        raise ValueError("cannot chart an empty result table")
    columns = _column_order(table)
    by_cell: dict[tuple[int, int], dict[tuple[str, str], ResultRow]] = {}
    for row in table.rows:
        by_cell.setdefault((row.sample_size, row.num_categories), {})[(row.mode, row.method)] = row
    cells = sorted(by_cell.keys())

    group_width = len(columns) * (_BAR_WIDTH + _BAR_GAP) - _BAR_GAP + _GROUP_PAD
    plot_width = len(cells) * group_width
    width = _MARGIN_LEFT + plot_width + _LEGEND_WIDTH
    height = _MARGIN_TOP + _PLOT_HEIGHT + _MARGIN_BOTTOM
    baseline_y = _MARGIN_TOP + _PLOT_HEIGHT

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
    ]
    # y axis with ticks every 20%
    parts.append(
        f'<line x1="{_MARGIN_LEFT:.1f}" y1="{_MARGIN_TOP:.1f}" x2="{_MARGIN_LEFT:.1f}" '
        f'y2="{baseline_y:.1f}" stroke="black"/>'
    )
    for tick in range(0, 101, 20):
        y = baseline_y - tick / 100.0 * _PLOT_HEIGHT
        parts.append(
            f'<line x1="{_MARGIN_LEFT - 4:.1f}" y1="{y:.1f}" x2="{_MARGIN_LEFT:.1f}" y2="{y:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 8:.1f}" y="{y + 4:.1f}" text-anchor="end">{tick}%</text>'
        )
    parts.append(
        f'<line x1="{_MARGIN_LEFT:.1f}" y1="{baseline_y:.1f}" x2="{_MARGIN_LEFT + plot_width:.1f}" '
        f'y2="{baseline_y:.1f}" stroke="black"/>'
    )
    for g, (n, cats) in enumerate(cells):
        gx = _MARGIN_LEFT + g * group_width + _GROUP_PAD / 2
        for c, pair in enumerate(columns):
            row = by_cell[(n, cats)].get(pair)
            if row is None:
                continue
            x = gx + c * (_BAR_WIDTH + _BAR_GAP)
            bar_h = row.mean_accuracy * _PLOT_HEIGHT
            y = baseline_y - bar_h
            color = _PALETTE[c % len(_PALETTE)]
            label = _column_heading(*pair)
            parts.append(
                f'<rect class="bar" x="{x:.2f}" y="{y:.2f}" width="{_BAR_WIDTH:.2f}" '
                f'height="{bar_h:.2f}" fill="{color}" data-accuracy="{row.mean_accuracy:.6f}">'
                f"<title>{label}, n={n}, C={cats}: {row.mean_accuracy * 100:.2f}%</title></rect>"
            )
        label_x = gx + (len(columns) * (_BAR_WIDTH + _BAR_GAP) - _BAR_GAP) / 2
        parts.append(
            f'<text x="{label_x:.1f}" y="{baseline_y + 16:.1f}" text-anchor="middle">n={n}, C={cats}</text>'
        )
    # legend
    lx = _MARGIN_LEFT + plot_width + 16
    for c, pair in enumerate(columns):
        ly = _MARGIN_TOP + c * 18
        color = _PALETTE[c % len(_PALETTE)]
        parts.append(f'<rect x="{lx:.1f}" y="{ly:.1f}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{lx + 18:.1f}" y="{ly + 10:.1f}">{_column_heading(*pair)}</text>')
    parts.append("</svg>")
    doc = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(doc, encoding="utf-8")
    return doc
