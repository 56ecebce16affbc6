"""Minimal static SVG charts (lines and boxplots) with no plotting
dependency.  Figures are display artifacts only; the CSV reports are the
machine-readable interface."""

import math

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 64, 16, 28, 46


def _ticks(lo: float, hi: float, n: int = 5):
    if not math.isfinite(lo) or not math.isfinite(hi):
        return [0.0]
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * step:
        out.append(round(t, 12))
        t += step
    return out or [lo]


class _Frame:
    def __init__(self, xlo, xhi, ylo, yhi, title, xlabel, ylabel):
        pad = 0.05 * (yhi - ylo or 1.0)
        self.xlo, self.xhi = xlo, xhi if xhi > xlo else xlo + 1.0
        self.ylo, self.yhi = ylo - pad, yhi + pad
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'font-family="sans-serif" font-size="12">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
            f'<text x="{_W / 2:.1f}" y="{_H - 8}" text-anchor="middle">{xlabel}</text>',
            f'<text x="14" y="{_H / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {_H / 2:.1f})">{ylabel}</text>',
            f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
            f'fill="none" stroke="#333"/>',
        ]
        for tx in _ticks(self.xlo, self.xhi):
            px = self.px(tx)
            self.parts.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" '
                              f'y2="{_H - _MB + 4}" stroke="#333"/>')
            self.parts.append(f'<text x="{px:.1f}" y="{_H - _MB + 16}" '
                              f'text-anchor="middle">{tx:g}</text>')
        for ty in _ticks(self.ylo, self.yhi):
            py = self.py(ty)
            self.parts.append(f'<line x1="{_ML - 4}" y1="{py:.1f}" x2="{_ML}" '
                              f'y2="{py:.1f}" stroke="#333"/>')
            self.parts.append(f'<text x="{_ML - 6}" y="{py + 4:.1f}" '
                              f'text-anchor="end">{ty:g}</text>')

    def px(self, x):
        return _ML + (x - self.xlo) / (self.xhi - self.xlo) * (_W - _ML - _MR)

    def py(self, y):
        return _H - _MB - (y - self.ylo) / (self.yhi - self.ylo) * (_H - _MT - _MB)

    def legend(self, names):
        for k, name in enumerate(names):
            y = _MT + 14 + 16 * k
            self.parts.append(f'<line x1="{_W - _MR - 130}" y1="{y - 4}" '
                              f'x2="{_W - _MR - 108}" y2="{y - 4}" '
                              f'stroke="{_COLORS[k % len(_COLORS)]}" stroke-width="2"/>')
            self.parts.append(f'<text x="{_W - _MR - 102}" y="{y}">{name}</text>')

    def render(self):
        return "\n".join(self.parts + ["</svg>"])


def line_chart(path, x, series: dict, title="", xlabel="", ylabel=""):
    """series maps name -> list of y values over the common x grid."""
    ys = [v for vals in series.values() for v in vals if math.isfinite(v)]
    if not ys:
        ys = [0.0]
    frame = _Frame(min(x), max(x), min(ys), max(ys), title, xlabel, ylabel)
    for k, (name, vals) in enumerate(series.items()):
        pts = " ".join(f"{frame.px(xi):.1f},{frame.py(yi):.1f}"
                       for xi, yi in zip(x, vals) if math.isfinite(yi))
        frame.parts.append(f'<polyline points="{pts}" fill="none" '
                           f'stroke="{_COLORS[k % len(_COLORS)]}" stroke-width="1.6"/>')
    frame.legend(series.keys())
    _write(path, frame.render())


def box_chart(path, groups: dict, title="", ylabel=""):
    """groups maps label -> sample list; draws quartile boxes with whiskers
    at the data extremes."""
    samples = {k: sorted(v) for k, v in groups.items() if len(v)}
    ys = [v for vals in samples.values() for v in vals]
    if not ys:
        ys = [0.0]
    frame = _Frame(0.0, float(len(samples)), min(ys), max(ys), title, "", ylabel)
    for k, (label, vals) in enumerate(samples.items()):
        cx = frame.px(k + 0.5)
        q1, q2, q3 = (_quantile(vals, q) for q in (0.25, 0.5, 0.75))
        lo, hi = vals[0], vals[-1]
        color = _COLORS[k % len(_COLORS)]
        half = 18
        frame.parts.append(f'<line x1="{cx:.1f}" y1="{frame.py(lo):.1f}" x2="{cx:.1f}" '
                           f'y2="{frame.py(hi):.1f}" stroke="{color}"/>')
        frame.parts.append(f'<rect x="{cx - half:.1f}" y="{frame.py(q3):.1f}" width="{2 * half}" '
                           f'height="{frame.py(q1) - frame.py(q3):.1f}" fill="white" stroke="{color}"/>')
        frame.parts.append(f'<line x1="{cx - half:.1f}" y1="{frame.py(q2):.1f}" '
                           f'x2="{cx + half:.1f}" y2="{frame.py(q2):.1f}" '
                           f'stroke="{color}" stroke-width="2"/>')
        frame.parts.append(f'<text x="{cx:.1f}" y="{_H - _MB + 16}" '
                           f'text-anchor="middle">{label}</text>')
    _write(path, frame.render())


def _quantile(sorted_vals, q):
    n = len(sorted_vals)
    if n == 1:
        return sorted_vals[0]
    pos = q * (n - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return sorted_vals[lo] * (1 - frac) + sorted_vals[hi] * frac


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
