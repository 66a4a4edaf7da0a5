"""Minimal standalone SVG charts (no plotting dependency)."""
from __future__ import annotations

from html import escape

W, H = 640, 360
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e")


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _frame(title, ylo, yhi, xlabel):
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
             f'<line x1="{PAD_L}" y1="{H - PAD_B}" x2="{W - PAD_R}" y2="{H - PAD_B}" stroke="black"/>',
             f'<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{H - PAD_B}" stroke="black"/>',
             f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle">{escape(xlabel)}</text>']
    ys = _scale(ylo, yhi, H - PAD_B, PAD_T)
    for k in range(5):
        v = ylo + (yhi - ylo) * k / 4
        parts.append(f'<text x="{PAD_L - 4}" y="{ys(v) + 4:.1f}" text-anchor="end">{v:.4g}</text>')
    return parts, ys


def line_chart(series: dict, title: str, xlabel: str = "") -> str:
    """``series`` maps a label to (xs, ys)."""
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys]
    parts, ys_map = _frame(title, min(ys_all), max(ys_all), xlabel)
    xs_map = _scale(min(xs_all), max(xs_all), PAD_L, W - PAD_R)
    for k, (label, (xs, ys)) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{xs_map(x):.2f},{ys_map(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{W - PAD_R - 4}" y="{PAD_T + 14 * (k + 1)}" text-anchor="end" '
                     f'fill="{color}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart(groups: list, labels: tuple, title: str) -> str:
    """Grouped bars; ``groups`` is a list of (name, [value per label])."""
    vals = [v for _, vs in groups for v in vs]
    lo = min(0.0, min(vals))
    parts, ys_map = _frame(title, lo, max(vals) * 1.05, "")
    slot = (W - PAD_L - PAD_R) / max(len(groups), 1)
    bw = slot * 0.8 / len(labels)
    for g, (name, vs) in enumerate(groups):
        x0 = PAD_L + g * slot + slot * 0.1
        for k, v in enumerate(vs):
            y = ys_map(v)
            parts.append(f'<rect x="{x0 + k * bw:.2f}" y="{y:.2f}" width="{bw:.2f}" '
                         f'height="{ys_map(lo) - y:.2f}" fill="{COLORS[k % len(COLORS)]}"/>')
        parts.append(f'<text x="{x0 + slot * 0.4:.2f}" y="{H - PAD_B + 14}" text-anchor="middle" '
                     f'font-size="9">{escape(name)}</text>')
    for k, label in enumerate(labels):
        parts.append(f'<text x="{W - PAD_R - 4}" y="{PAD_T + 14 * (k + 1)}" text-anchor="end" '
                     f'fill="{COLORS[k % len(COLORS)]}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
