"""Table files (CSV/JSON with a metadata header) and bare-bones SVG plots."""
from __future__ import annotations

import csv
import enum
import datetime as _dt
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["make_metadata", "write_table", "read_table", "format_table", "svg_plot"]


def make_metadata(command: str, params: dict, deterministic: bool = False) -> dict:
    from . import __version__

    meta = {"tool": "nhlab", "version": __version__, "command": command}
    meta.update({k: _plain(v) for k, v in sorted(params.items())})
    if not deterministic:
        meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


def _plain(v):
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, complex):
        return repr(v)
    if isinstance(v, np.generic):
        return v.item()
    return v


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def format_table(columns, rows, metadata: dict, fmt: str = "csv") -> str:
    rows = [list(r) for r in rows]
    if fmt == "json":
        doc = {"metadata": metadata, "columns": list(columns), "rows": rows}
        return json.dumps(doc, indent=1, allow_nan=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown table format {fmt!r}")
    buf = io.StringIO()
    for key, val in metadata.items():
        buf.write(f"# {key}: {json.dumps(val)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_table(path, columns, rows, metadata: dict, fmt: str | None = None) -> str:
    """Write a table; ``fmt`` defaults to the file suffix (``.json`` or CSV)."""
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    text = format_table(columns, rows, metadata, fmt)
    Path(path).write_text(text, encoding="utf-8")
    return text


def read_table(path_or_text, fmt: str | None = None):
    """Read back ``(metadata, columns, rows)`` from either format."""
    text = str(path_or_text)
    if "\n" not in text:
        p = Path(text)
        if fmt is None:
            fmt = "json" if p.suffix == ".json" else "csv"
        text = p.read_text(encoding="utf-8")
    elif fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    if fmt == "json":
        doc = json.loads(text)
        return doc["metadata"], doc["columns"], [list(r) for r in doc["rows"]]
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = json.loads(val)
        elif line:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[_parse(c) for c in r] for r in reader]
    return meta, columns, rows


def svg_plot(series, title: str = "", xlabel: str = "", ylabel: str = "", size=(480, 420)) -> str:
    """Static scatter/line plot.

    ``series`` is a list of dicts with keys ``x``, ``y``, ``style``
    (``"points"`` or ``"line"``), ``color`` and optionally ``closed`` and
    ``radius``.
    """
    W, H = size
    pad = 50
    title, xlabel, ylabel = escape(title), escape(xlabel), escape(ylabel)
    xs = [float(v) for s in series for v in s["x"] if math.isfinite(v)]
    ys = [float(v) for s in series for v in s["y"] if math.isfinite(v)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (W - 2 * pad)

    def py(y):
        return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" fill="none" stroke="black"/>',
        f'<text x="{W / 2}" y="{pad / 2}" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {H / 2})">{ylabel}</text>',
        f'<text x="{pad}" y="{H - pad + 14}" font-size="10">{x0:.3g}</text>',
        f'<text x="{W - pad}" y="{H - pad + 14}" font-size="10" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{pad - 4}" y="{H - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 8}" font-size="10" text-anchor="end">{y1:.3g}</text>',
    ]
    for s in series:
        color = s.get("color", "black")
        pts = [(px(float(x)), py(float(y))) for x, y in zip(s["x"], s["y"])
               if math.isfinite(x) and math.isfinite(y)]
        if s.get("style", "points") == "line":
            if s.get("closed"):
                pts = pts + pts[:1]
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            r = s.get("radius", 2)
            out.extend(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>' for x, y in pts)
    out.append("</svg>")
    return "\n".join(out) + "\n"
