"""CSV, JSON and SVG emission with run metadata.

Every artifact carries the tool version, the full config, the seed and a
wall-clock stamp.  Set ``SOURCE_DATE_EPOCH`` to pin the stamp so that
repeated runs are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from datetime import datetime, timezone

from . import __version__

SCAN_COLUMNS = ["t", "s", "lambda1", "threshold", "classification", "energy", "estimate", "drop"]
TRACE_COLUMNS = ["restart", "iter", "quotient", "step", "min_u"]


def wall_clock() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def metadata(config: dict) -> dict:
    return {
        "tool": "yamabe-lab",
        "version": __version__,
        "config": config,
        "seed": config.get("seed"),
        "wall_clock": wall_clock(),
    }


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(payload: dict, config: dict) -> str:
    return json.dumps(_clean({"meta": metadata(config), **payload}), indent=2) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: list[dict], columns: list[str], config: dict) -> str:
    meta = metadata(config)
    buf = io.StringIO()
    buf.write(f"# {meta['tool']} {meta['version']}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    buf.write(f"# seed: {meta['seed']}\n")
    buf.write(f"# wall_clock: {meta['wall_clock']}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


# --- SVG ----------------------------------------------------------------------

_COLORS = {"energy": "#1f77b4", "estimate": "#d62728", "lambda1": "#2ca02c", "threshold": "#ff7f0e"}


def _panel(series: dict[str, list], ts: list[float], box, t_crit, title) -> list[str]:
    x0, y0, w, h = box
    vals = [v for ys in series.values() for v in ys if v is not None]
    lo, hi = min(vals), max(vals)
    pad = 0.05 * (hi - lo or 1.0)
    lo, hi = lo - pad, hi + pad
    tlo, thi = ts[0], ts[-1] if ts[-1] > ts[0] else ts[0] + 1.0

    def px(t):
        return x0 + (t - tlo) / (thi - tlo) * w

    def py(v):
        return y0 + h - (v - lo) / (hi - lo) * h

    out = [
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#444"/>',
        f'<text x="{x0 + w / 2}" y="{y0 - 8}" text-anchor="middle" font-size="13">{title}</text>',
    ]
    for i in range(5):
        v = lo + (hi - lo) * i / 4
        out.append(f'<text x="{x0 - 6}" y="{py(v) + 4:.1f}" text-anchor="end" font-size="10">{v:.3g}</text>')
        t = tlo + (thi - tlo) * i / 4
        out.append(f'<text x="{px(t):.1f}" y="{y0 + h + 14}" text-anchor="middle" font-size="10">{t:.3g}</text>')
    if tlo <= t_crit <= thi:
        out.append(
            f'<line x1="{px(t_crit):.1f}" y1="{y0}" x2="{px(t_crit):.1f}" y2="{y0 + h}" '
            'stroke="#888" stroke-dasharray="4 3"/>'
        )
        out.append(f'<text x="{px(t_crit) + 3:.1f}" y="{y0 + 12}" font-size="10">t = k/(k-1)</text>')
    for j, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in zip(ts, ys) if v is not None)
        if pts:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{_COLORS[name]}" stroke-width="1.5"/>')
        out.append(
            f'<text x="{x0 + w - 4}" y="{y0 + 14 + 13 * j}" text-anchor="end" font-size="11" '
            f'fill="{_COLORS[name]}">{name}</text>'
        )
    return out


def scan_svg(rows: list[dict], t_crit: float, config: dict) -> str:
    ts = [r["t"] for r in rows]
    energies = {"energy": [r["energy"] for r in rows]}
    if any(r.get("estimate") is not None for r in rows):
        energies["estimate"] = [r.get("estimate") for r in rows]
    spectra = {"lambda1": [r["lambda1"] for r in rows], "threshold": [r["threshold"] for r in rows]}
    meta = metadata(config)
    body = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="640" height="560" font-family="sans-serif">',
        f"<!-- {meta['tool']} {meta['version']} seed={meta['seed']} wall_clock={meta['wall_clock']} -->",
        f"<!-- config: {json.dumps(config, sort_keys=True)} -->",
        '<rect width="640" height="560" fill="white"/>',
    ]
    body += _panel(energies, ts, (70, 40, 540, 200), t_crit, "normalized energy vs t")
    body += _panel(spectra, ts, (70, 310, 540, 200), t_crit, "lambda1 and s/(n-1) vs t")
    body.append('<text x="340" y="545" text-anchor="middle" font-size="12">t</text>')
    body.append("</svg>")
    return "\n".join(body) + "\n"
