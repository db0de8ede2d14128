"""Self-contained static SVG log-log rate plots (no plotting toolchain)."""

from __future__ import annotations

import math

__all__ = ["rate_plot_svg"]

_COLORS = ("#1f6fb2", "#c23b22", "#2e8b57", "#8b5a2b")
_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def rate_plot_svg(title: str, reports: dict) -> str:
    """Scatter of (n, mean excess) per estimator with fitted lines and slopes.

    reports maps estimator name -> RateReport; rows with nonpositive means
    are skipped (they cannot be placed on the log scale).
    """
    pts = {}
    for est, rep in sorted(reports.items()):
        rows = [(r.n, r.mean) for r in rep.rows if r.mean > 0]
        if rows:
            pts[est] = rows
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}"><text x="20" y="40">no positive rows</text></svg>'
    xs = [math.log(n) for rows in pts.values() for n, _ in rows]
    ys = [math.log(m) for rows in pts.values() for _, m in rows]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 - x0 < 1e-9:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0 + 1e-9)
    y0, y1 = y0 - pad, y1 + pad

    def px(x: float) -> float:
        return _ML + (x - x0) / (x1 - x0) * (_W - _ML - _MR)

    def py(y: float) -> float:
        return _H - _MB - (y - y0) / (y1 - y0) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_ML}" y="18">{title}</text>',
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
        f'<text x="{(_W - _MR + _ML) / 2:.0f}" y="{_H - 12}">n (log scale)</text>',
        f'<text x="12" y="{_MT - 8}">mean excess risk (log scale)</text>',
    ]
    seen_n = sorted({n for rows in pts.values() for n, _ in rows})
    for n in seen_n:
        x = px(math.log(n))
        parts.append(f'<line x1="{_fmt(x)}" y1="{_H - _MB}" x2="{_fmt(x)}" y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{_fmt(x - 12)}" y="{_H - _MB + 20}">{n}</text>')
    k_lo = math.ceil(y0 / math.log(10.0))
    k_hi = math.floor(y1 / math.log(10.0))
    for k in range(k_lo, k_hi + 1):
        y = py(k * math.log(10.0))
        parts.append(f'<line x1="{_ML - 5}" y1="{_fmt(y)}" x2="{_ML}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 58}" y="{_fmt(y + 4)}">1e{k:+d}</text>')
    for i, (est, rows) in enumerate(sorted(pts.items())):
        color = _COLORS[i % len(_COLORS)]
        rep = reports[est]
        line = " ".join(
            f"{_fmt(px(math.log(n)))},{_fmt(py(rep.slope * math.log(n) + rep.intercept))}"
            for n, _ in rows
        )
        parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-dasharray="4 3"/>')
        for n, m in rows:
            parts.append(
                f'<circle cx="{_fmt(px(math.log(n)))}" cy="{_fmt(py(math.log(m)))}" r="3.5" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{_W - _MR - 250}" y="{_MT + 18 * (i + 1)}" fill="{color}">'
            f"{est}: slope={rep.slope:.3f} (r2={rep.r_squared:.3f})</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
