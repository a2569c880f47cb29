"""
Self-contained SVG line charts regenerated from a flight CSV.

Plots depend only on the CSV content, so they can be rebuilt offline with
``write_flight_plots(csv_path, out_dir)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
PANEL_W, PANEL_H = 720, 220
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 20, 30, 40
MAX_POINTS = 2000


@dataclass
class Series:
    label: str
    y: np.ndarray
    dashed: bool = False


@dataclass
class Panel:
    title: str
    ylabel: str
    series: list = field(default_factory=list)


def read_flight_csv(path) -> dict:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def _nice_ticks(lo, hi, n=5):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0]
    if hi <= lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(v)
        v += step
    return ticks


def _decimate(t, y):
    if len(t) <= MAX_POINTS:
        return t, y
    idx = np.linspace(0, len(t) - 1, MAX_POINTS).astype(int)
    return t[idx], y[idx]


def _fmt(v):
    return f"{v:.6g}"


def _panel_svg(panel: Panel, t: np.ndarray, y0: float) -> list:
    out = []
    w = PANEL_W - MARGIN_L - MARGIN_R
    h = PANEL_H - MARGIN_T - MARGIN_B
    finite = [s.y[np.isfinite(s.y)] for s in panel.series]
    vals = np.concatenate(finite) if finite else np.array([0.0])
    lo, hi = (float(vals.min()), float(vals.max())) if vals.size else (0.0, 1.0)
    yt = _nice_ticks(lo, hi)
    lo, hi = min(yt[0], lo), max(yt[-1], hi)
    if hi == lo:
        hi = lo + 1.0
    t0, t1 = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0
    xt = _nice_ticks(t0, t1)

    def px(tv):
        return MARGIN_L + (tv - t0) / (t1 - t0) * w

    def py(v):
        return y0 + MARGIN_T + (hi - v) / (hi - lo) * h

    out.append(f'<text x="{MARGIN_L}" y="{y0 + 18}" font-size="14" font-weight="bold">'
               f'{escape(panel.title)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{y0 + MARGIN_T}" width="{w}" height="{h}" '
               'fill="none" stroke="#444"/>')
    for v in yt:
        if lo <= v <= hi:
            out.append(f'<line x1="{MARGIN_L}" x2="{MARGIN_L + w}" y1="{py(v):.1f}" y2="{py(v):.1f}" '
                       'stroke="#ddd"/>')
            out.append(f'<text x="{MARGIN_L - 6}" y="{py(v) + 4:.1f}" font-size="11" '
                       f'text-anchor="end">{_fmt(v)}</text>')
    for v in xt:
        if t0 <= v <= t1:
            out.append(f'<text x="{px(v):.1f}" y="{y0 + MARGIN_T + h + 15}" font-size="11" '
                       f'text-anchor="middle">{_fmt(v)}</text>')
    out.append(f'<text x="{MARGIN_L + w / 2}" y="{y0 + PANEL_H - 6}" font-size="11" '
               'text-anchor="middle">t [s]</text>')
    out.append(f'<text x="16" y="{y0 + MARGIN_T + h / 2}" font-size="11" text-anchor="middle" '
               f'transform="rotate(-90 16 {y0 + MARGIN_T + h / 2})">{escape(panel.ylabel)}</text>')
    for i, s in enumerate(panel.series):
        color = COLORS[i % len(COLORS)]
        tt, yy = _decimate(t, s.y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tt, yy) if math.isfinite(b))
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        lx = MARGIN_L + w - 150
        ly = y0 + MARGIN_T + 14 + 14 * i
        out.append(f'<line x1="{lx}" x2="{lx + 20}" y1="{ly - 4}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 26}" y="{ly}" font-size="11">{escape(s.label)}</text>')
    return out


def render_svg(panels, t) -> str:
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        raise ValueError("cannot plot an empty series")
    height = PANEL_H * len(panels)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" '
             f'viewBox="0 0 {PANEL_W} {height}" font-family="sans-serif">',
             f'<rect width="{PANEL_W}" height="{height}" fill="white"/>']
    for k, panel in enumerate(panels):
        parts.extend(_panel_svg(panel, t, k * PANEL_H))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def flight_panels(c: dict) -> dict:
    """Panel layout for each of the four standard figures."""
    deg = np.degrees
    return {
        "trajectory": [
            Panel("Altitude", "x [m]", [Series("x", c["x"]), Series("x_d", c["x_d"], True)]),
            Panel("Downrange", "z [m]", [Series("z", c["z"]), Series("z_d", c["z_d"], True)]),
            Panel("Pitch", "theta [deg]", [Series("theta", deg(c["theta"])),
                                           Series("theta_d", deg(c["theta_d"]), True)]),
        ],
        "tracking_errors": [
            Panel("Altitude error", "e_x [m]", [Series("e_x", c["e_x"])]),
            Panel("Downrange error", "e_z [m]", [Series("e_z", c["e_z"])]),
            Panel("Pitch error", "e_theta [deg]", [Series("e_theta", deg(c["e_theta"]))]),
        ],
        "estimates": [
            Panel("Vertical aerodynamic force", "f_ax [N]",
                  [Series("true", c["fax_true"]), Series("estimate", c["fax_hat"], True)]),
            Panel("Aerodynamic moment", "tau_a [N m]",
                  [Series("true", c["tau_true"]), Series("estimate", c["tau_hat"], True)]),
            Panel("Horizontal aerodynamic force", "f_az [N]",
                  [Series("true", c["faz_true"]), Series("estimate", c["faz_hat"], True)]),
        ],
        "actuation": [
            Panel("Thrust", "T [kN]", [Series("T", c["T"] / 1e3)]),
            Panel("Gimbal angle", "mu [deg]", [Series("mu", deg(c["mu"]))]),
        ],
    }


def write_flight_plots(csv_path, out_dir) -> list:
    """Render trajectory, tracking-error, estimate and actuation SVGs from a flight CSV."""
    c = read_flight_csv(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, panels in flight_panels(c).items():
        p = out_dir / f"{name}.svg"
        p.write_text(render_svg(panels, c["t"]))
        paths.append(p)
    return paths
