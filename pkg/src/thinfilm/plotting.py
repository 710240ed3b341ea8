"""Minimal self-contained SVG line charts (no plotting dependency)."""
import math

import numpy as np

_W, _H, _PAD = 480, 320, 48
_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def line_chart(series, title="", xlabel="", ylabel="", logy=False):
    """SVG text for one or more (label, x, y) series sharing axes."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    if logy:
        ys = np.log10(ys[ys > 0])
    finite = np.isfinite(ys)
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = (float(np.min(ys[finite])), float(np.max(ys[finite]))) if finite.any() else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad_y = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad_y, y1 + pad_y

    def X(v):
        return _PAD + (v - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def Y(v):
        return _H - _PAD - (v - y0) / (y1 - y0) * (_H - 2 * _PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
           'fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{X(t):.1f}" y="{_H - _PAD + 14}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        label = f"1e{t:.3g}" if logy else f"{t:.3g}"
        out.append(f'<text x="{_PAD - 4}" y="{Y(t) + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{_W / 2}" y="{_PAD - 16}" text-anchor="middle" font-size="13">{title}</text>')
    out.append(f'<text x="{_W / 2}" y="{_H - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="12" y="{_H / 2}" text-anchor="middle" '
               f'transform="rotate(-90 12 {_H / 2})">{ylabel}</text>')
    for i, (label, x, y) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if logy:
            keep = y > 0
            x, y = x[keep], np.log10(y[keep])
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x, y) if np.isfinite(b))
        colour = _COLOURS[i % len(_COLOURS)]
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        if label:
            out.append(f'<text x="{_W - _PAD - 4}" y="{_PAD + 14 * (i + 1)}" text-anchor="end" '
                       f'fill="{colour}">{label}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def write_chart(path, series, **kw):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(line_chart(series, **kw))
