"""CSV, JSON and SVG output of aggregated Monte-Carlo results."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .experiment import AggregateRecord

__all__ = ["export_results", "load_results_json", "records_to_csv", "render_svg"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_PANELS = (("nmse", "NMSE"), ("extras", "mean extras"), ("misses", "mean misses"))


def records_to_csv(record: AggregateRecord) -> str:
    """One row per (algorithm, t): ``algorithm,t,nmse,misses,extras``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "t", "nmse", "misses", "extras"])
    for a in record.algorithms:
        for t in range(record.horizon):
            w.writerow([a, t, repr(float(record.nmse[a][t])), repr(float(record.misses[a][t])),
                        repr(float(record.extras[a][t]))])
    return buf.getvalue()


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _fmt(v):
    return f"{v:g}"


def _panel(series: dict, title: str, x0: float, width: float, height: float,
           log: bool = False) -> list:
    left, right, top, bottom = 55.0, 10.0, 30.0, 40.0
    pw, ph = width - left - right, height - top - bottom
    out = [f'<g transform="translate({x0:.1f},0)">',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">'
           f'{escape(title)}</text>']
    values = np.concatenate([np.asarray(v, dtype=float) for v in series.values()]) \
        if series else np.zeros(1)
    values = values[np.isfinite(values)]
    horizon = max((len(v) for v in series.values()), default=1)
    if log:
        pos = values[values > 0]
        lo = math.floor(math.log10(pos.min())) if pos.size else -3
        hi = math.ceil(math.log10(pos.max())) if pos.size else 0
        if hi <= lo:
            hi = lo + 1
        yticks = list(range(lo, hi + 1))

        def ymap(v):
            v = math.log10(max(v, 10.0 ** lo))
            return top + ph * (1 - (v - lo) / (hi - lo))
        labels = [f"1e{k}" for k in yticks]
        ypos = [top + ph * (1 - (k - lo) / (hi - lo)) for k in yticks]
    else:
        vmax = float(values.max()) if values.size else 1.0
        yticks = _nice_ticks(0.0, vmax if vmax > 0 else 1.0)
        lo, hi = yticks[0], yticks[-1]

        def ymap(v):
            return top + ph * (1 - (v - lo) / (hi - lo))
        labels = [_fmt(k) for k in yticks]
        ypos = [ymap(k) for k in yticks]

    def xmap(t):
        return left + pw * t / max(horizon - 1, 1)

    out.append(f'<rect x="{left}" y="{top}" width="{pw:.1f}" height="{ph:.1f}" '
               'fill="none" stroke="#444"/>')
    for lab, y in zip(labels, ypos):
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left + pw:.1f}" y2="{y:.1f}" '
                   'stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="10">'
                   f'{lab}</text>')
    for t in _nice_ticks(0, horizon - 1):
        if t > horizon - 1:
            continue
        x = xmap(t)
        out.append(f'<text x="{x:.1f}" y="{top + ph + 14:.1f}" text-anchor="middle" '
                   f'font-size="10">{_fmt(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 6:.1f}" text-anchor="middle" '
               'font-size="11">time t</text>')
    for k, (name, vals) in enumerate(series.items()):
        vals = np.asarray(vals, dtype=float)
        pts = " ".join(f"{xmap(t):.2f},{ymap(v):.2f}" for t, v in enumerate(vals)
                       if np.isfinite(v))
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<polyline class="series" data-name="{escape(name)}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 12 + 14 * k
        out.append(f'<line x1="{left + 8}" y1="{ly - 4}" x2="{left + 24}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 28}" y="{ly}" font-size="10">{escape(name)}</text>')
    out.append("</g>")
    return out


def render_svg(record: AggregateRecord, log_nmse: bool = True, title: str | None = None) -> str:
    """Three side-by-side line charts: NMSE, extras and misses against t."""
    pw, height = 340.0, 300.0
    width = pw * len(_PANELS)
    head = 24.0 if title else 0.0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
           f'height="{height + head:.0f}" font-family="sans-serif">',
           f'<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="15">'
                   f'{escape(title)}</text>')
    out.append(f'<g transform="translate(0,{head:.0f})">')
    for i, (key, label) in enumerate(_PANELS):
        series = {a: getattr(record, key)[a] for a in record.algorithms}
        out.append(f'<g class="panel" data-metric="{key}">')
        out.extend(_panel(series, label, i * pw, pw, height, log=(key == "nmse" and log_nmse)))
        out.append("</g>")
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def export_results(record: AggregateRecord, fmt: str, path, log_nmse: bool = True) -> Path:
    """Write ``record`` as ``csv``, ``json`` or ``svg``.

    Raises
    ------
    OSError
        If the file cannot be written; the message names the path.
    ValueError
        For an unknown format.
    """
    path = Path(path)
    if fmt == "csv":
        text = records_to_csv(record)
    elif fmt == "json":
        text = json.dumps(record.to_dict(), indent=1, sort_keys=True) + "\n"
    elif fmt == "svg":
        text = render_svg(record, log_nmse=log_nmse)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected csv, json or svg")
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def load_results_json(path) -> AggregateRecord:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return AggregateRecord.from_dict(data)
