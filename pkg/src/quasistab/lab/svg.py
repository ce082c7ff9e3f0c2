"""Minimal SVG line plot (polyline plus axes), enough for decay curves."""

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["decay_svg"]


def _fmt(v):
    return f"{v:.6g}"


def decay_svg(times, values, *, title="", ylabel="norm", log=True, width=480, height=320):
    """Return an SVG document plotting ``values`` against ``times``.

    With ``log`` the vertical axis is ``log10``; non-positive values are
    dropped.
    """
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    keep = np.isfinite(v) & ((v > 0) if log else True)
    t, v = t[keep], v[keep]
    y = np.log10(v) if log else v
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 40
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    x0, y0b = pad_l, pad_t + ph
    lines.append(f'<line x1="{x0}" y1="{pad_t}" x2="{x0}" y2="{y0b}" stroke="black"/>')
    lines.append(f'<line x1="{x0}" y1="{y0b}" x2="{x0 + pw}" y2="{y0b}" stroke="black"/>')
    if t.size >= 2:
        tlo, thi = float(t.min()), float(t.max())
        ylo, yhi = float(y.min()), float(y.max())
        if yhi == ylo:
            ylo, yhi = ylo - 1, yhi + 1
        if thi == tlo:
            thi = tlo + 1
        px = x0 + (t - tlo) / (thi - tlo) * pw
        py = y0b - (y - ylo) / (yhi - ylo) * ph
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
        lines.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>')
        for val, pos in ((ylo, y0b), (yhi, pad_t)):
            lab = f"1e{val:.1f}" if log else _fmt(val)
            lines.append(f'<text x="{x0 - 4}" y="{pos + 4}" text-anchor="end" font-size="10">{lab}</text>')
        for val, pos in ((tlo, x0), (thi, x0 + pw)):
            lines.append(f'<text x="{pos}" y="{y0b + 14}" text-anchor="middle" font-size="10">{_fmt(val)}</text>')
    lines.append(f'<text x="{x0 + pw / 2}" y="{height - 6}" text-anchor="middle" font-size="11">t</text>')
    lines.append(f'<text x="14" y="{pad_t + ph / 2}" font-size="11" '
                 f'transform="rotate(-90 14 {pad_t + ph / 2})" text-anchor="middle">{escape(ylabel)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
