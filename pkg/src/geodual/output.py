"""Deterministic CSV / JSON / SVG writers.

Floats are written with 17 significant digits so files round-trip exactly and
identical inputs give byte-identical files.  Every file carries a metadata
block (tool version, command, fully resolved config, diagnostics).
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

__all__ = ["fmt", "Table", "write_csv", "write_json", "write_svg", "read_two_column_csv"]


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_value(x) -> str:
    if isinstance(x, (bool, int)) or x is None:
        return json.dumps(x)
    if isinstance(x, float):
        return fmt(x) if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in sorted(x.items())) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in x) + "]"
    try:
        return _json_value(float(x))
    except (TypeError, ValueError):
        return json.dumps(str(x))


class Table:
    """Named columns of equal length plus a metadata dict."""

    def __init__(self, columns: Sequence[str], rows: Sequence[Sequence], meta: dict):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = meta
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row length does not match columns")

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def write_csv(path: Path, table: Table) -> Path:
    lines = []
    for key in sorted(table.meta):
        lines.append(f"# {key}: {_json_value(table.meta[key])}")
    lines.append(",".join(table.columns))
    for r in table.rows:
        lines.append(",".join(fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_json(path: Path, table: Table) -> Path:
    body = (
        "{\n"
        f'  "meta": {_json_value(table.meta)},\n'
        f'  "columns": {_json_value(table.columns)},\n'
        '  "rows": [\n'
        + ",\n".join("    " + _json_value([float(v) if not isinstance(v, int) else v for v in r]) for r in table.rows)
        + "\n  ]\n}\n"
    )
    path.write_text(body, encoding="utf-8", newline="\n")
    return path


_W, _H = 800, 600
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 30, 40, 60
_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(
    path: Path,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    equal_aspect: bool = False,
    circle: tuple[float, float, float] | None = None,
) -> Path:
    """One ``<polyline>`` per series on auto-scaled axes (800x600 viewBox).

    ``circle`` = ``(cx, cy, radius)`` in data units is drawn as a dashed
    reference (used for the Argand unitarity circle).
    """
    xs = [float(v) for _, x, _ in series for v in x if math.isfinite(float(v))]
    ys = [float(v) for _, _, y in series for v in y if math.isfinite(float(v))]
    if circle is not None:
        cx, cy, rad = circle
        xs += [cx - rad, cx + rad]
        ys += [cy - rad, cy + rad]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM
    if equal_aspect:
        scale = min(pw / (x1 - x0), ph / (y1 - y0))
        sx = sy = scale
    else:
        sx, sy = pw / (x1 - x0), ph / (y1 - y0)

    def px(x):
        return _LEFT + (x - x0) * sx

    def py(y):
        return _TOP + ph - (y - y0) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" width="{_W}" height="{_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_LEFT}" y1="{_TOP + ph}" x2="{_LEFT + pw}" y2="{_TOP + ph}" stroke="black"/>',
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_TOP + ph}" stroke="black"/>',
        f'<text x="{_LEFT}" y="{_TOP + ph + 20}" font-size="12">{fmt(x0)[:10]}</text>',
        f'<text x="{_LEFT + pw}" y="{_TOP + ph + 20}" font-size="12" text-anchor="end">{fmt(x1)[:10]}</text>',
        f'<text x="{_LEFT - 5}" y="{_TOP + ph}" font-size="12" text-anchor="end">{fmt(y0)[:10]}</text>',
        f'<text x="{_LEFT - 5}" y="{_TOP + 10}" font-size="12" text-anchor="end">{fmt(y1)[:10]}</text>',
        f'<text x="{_W / 2:.1f}" y="{_H - 15}" font-size="14" text-anchor="middle">{_escape(xlabel)}</text>',
        f'<text x="15" y="{_H / 2:.1f}" font-size="14" transform="rotate(-90 15 {_H / 2:.1f})" '
        f'text-anchor="middle">{_escape(ylabel)}</text>',
        f'<text x="{_W / 2:.1f}" y="24" font-size="16" text-anchor="middle">{_escape(title)}</text>',
    ]
    if circle is not None:
        cx, cy, rad = circle
        out.append(
            f'<ellipse cx="{px(cx):.3f}" cy="{py(cy):.3f}" rx="{rad * sx:.3f}" ry="{rad * sy:.3f}" '
            'fill="none" stroke="gray" stroke-dasharray="4 4"/>'
        )
    for i, (label, x, y) in enumerate(series):
        pts = " ".join(
            f"{px(float(a)):.3f},{py(float(b)):.3f}"
            for a, b in zip(x, y)
            if math.isfinite(float(a)) and math.isfinite(float(b))
        )
        colour = _COLOURS[i % len(_COLOURS)]
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"><title>{_escape(label)}</title></polyline>')
        out.append(f'<text x="{_LEFT + pw - 10}" y="{_TOP + 18 * (i + 1)}" font-size="12" fill="{colour}" text-anchor="end">{_escape(label)}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")
    return path


def read_two_column_csv(path) -> tuple[list[float], list[float]]:
    """Read ``x,y`` rows, skipping ``#`` comments and a non-numeric header line."""
    xs, ys = [], []
    seen_header = False
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            a, b = float(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            if xs or seen_header:
                raise ValueError(f"{path}: cannot parse row {line!r}") from None
            seen_header = True
            continue
        xs.append(a)
        ys.append(b)
    return xs, ys
