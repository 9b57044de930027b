"""Deterministic hand-written SVG scatter plots."""

from __future__ import annotations

import math
import os
from xml.sax.saxutils import escape

import numpy as np

from .field import ConditionedSample
from .sphere import Contour

WIDTH = 560
HEIGHT = 560
PAD = 48

STYLE = """
.zero { fill: #1f77b4; }
.pinned { fill: #d62728; stroke: black; stroke-width: 1; }
.crit { fill: #ff7f0e; fill-opacity: 0.9; }
.pred { stroke: #2ca02c; stroke-width: 1.5; }
.gamma { fill: none; stroke: #2ca02c; stroke-dasharray: 3 2; }
.axis { stroke: #999; stroke-width: 0.5; }
.curve { fill: none; stroke: #1f77b4; stroke-width: 1.5; }
.err { stroke: #1f77b4; stroke-width: 1; }
text { font-family: sans-serif; font-size: 11px; }
"""


def _num(x: float) -> str:
    return f"{x:.3f}"


class _Frame:
    """Maps data coordinates onto the square drawing area."""

    def __init__(self, xmin, xmax, ymin, ymax):
        if xmax - xmin <= 0:
            xmin, xmax = xmin - 1, xmax + 1
        if ymax - ymin <= 0:
            ymin, ymax = ymin - 1, ymax + 1
        self.xmin, self.xmax, self.ymin, self.ymax = xmin, xmax, ymin, ymax

    def x(self, v):
        return PAD + (v - self.xmin) / (self.xmax - self.xmin) * (WIDTH - 2 * PAD)

    def y(self, v):
        return HEIGHT - PAD - (v - self.ymin) / (self.ymax - self.ymin) * (HEIGHT - 2 * PAD)

    def scale(self):
        return (WIDTH - 2 * PAD) / (self.xmax - self.xmin)


def _document(body: list, title: str) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{escape(title)}</title>",
        f"<style>{STYLE}</style>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    return "\n".join(head + body + ["</svg>", ""])


def _axes(fr: _Frame, xlabel: str, ylabel: str) -> list:
    out = []
    y0 = fr.y(min(max(0.0, fr.ymin), fr.ymax))
    x0 = fr.x(min(max(0.0, fr.xmin), fr.xmax))
    out.append(f'<line class="axis" x1="{PAD}" y1="{_num(y0)}" x2="{WIDTH - PAD}" y2="{_num(y0)}"/>')
    out.append(f'<line class="axis" x1="{_num(x0)}" y1="{PAD}" x2="{_num(x0)}" y2="{HEIGHT - PAD}"/>')
    for v in np.linspace(fr.xmin, fr.xmax, 5):
        out.append(f'<text x="{_num(fr.x(v))}" y="{HEIGHT - PAD + 16}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(fr.ymin, fr.ymax, 5):
        out.append(f'<text x="{PAD - 6}" y="{_num(fr.y(v) + 4)}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>')
    return out


def sample_svg(sample: ConditionedSample, critical=None, degree_drop: int | None = None,
               predicted=None, contours=(), extent: float | None = None, title: str = "zeros and critical points") -> str:
    """Zeros as squares, critical points as disks, pinned zeros highlighted,
    predicted points as crosses, contours as dashed circles."""
    crit = np.asarray([] if critical is None else critical, dtype=complex)
    pred = np.atleast_1d(np.asarray([] if predicted is None else predicted, dtype=complex))
    pts = np.concatenate([sample.zeros, crit, pred])
    if extent is None:
        extent = 1.1 * float(np.max(np.abs(pts.real).tolist() + np.abs(pts.imag).tolist() + [1.0]))
    fr = _Frame(-extent, extent, -extent, extent)
    body = _axes(fr, "Re w", "Im w")
    pinned = {complex(z) for z in sample.pinned}

    def inside(z):
        return abs(z.real) <= extent and abs(z.imag) <= extent

    for z in sample.zeros:
        if not inside(z):
            continue
        cls = "zero pinned" if complex(z) in pinned else "zero"
        s = 7 if complex(z) in pinned else 5
        body.append(f'<rect class="{cls}" x="{_num(fr.x(z.real) - s / 2)}" y="{_num(fr.y(z.imag) - s / 2)}" '
                    f'width="{s}" height="{s}"/>')
    for z in crit:
        if inside(z):
            body.append(f'<circle class="crit" cx="{_num(fr.x(z.real))}" cy="{_num(fr.y(z.imag))}" r="2.8"/>')
    for z in pred:
        cx, cy = fr.x(z.real), fr.y(z.imag)
        body.append(f'<path class="pred" d="M{_num(cx - 4)},{_num(cy - 4)} L{_num(cx + 4)},{_num(cy + 4)} '
                    f'M{_num(cx - 4)},{_num(cy + 4)} L{_num(cx + 4)},{_num(cy - 4)}"/>')
    for c in contours:
        if isinstance(c, Contour):
            body.append(f'<circle class="gamma" cx="{_num(fr.x(c.center.real))}" cy="{_num(fr.y(c.center.imag))}" '
                        f'r="{_num(max(c.chart_radius * fr.scale(), 0.5))}"/>')
    legend = [
        f"zeros: {sample.N} (pinned {sample.pinned.size})",
        f"finite critical points: {crit.size}",
    ]
    if degree_drop is not None:
        legend.append(f"degree_drop={degree_drop}")
    for i, line in enumerate(legend):
        body.append(f'<text class="legend" x="{WIDTH - PAD}" y="{PAD - 30 + 13 * i}" text-anchor="end">{escape(line)}</text>')
    return _document(body, title)


def summary_svg(summary, title: str = "failure rate against N") -> str:
    """Log-log failure rate with 1 s.e. bars and the fitted line."""
    rows = [r for r in summary.rows if r.determinate]
    fail = [(r.N, 1.0 - r.paired_frac, r.paired_se) for r in rows]
    pos = [(n, f, s) for n, f, s in fail if f > 0]
    xs = [math.log10(n) for n, _, _ in fail]
    ys = [math.log10(f) for _, f, _ in pos] or [0.0]
    lo = min(ys) - 0.5
    hi = max(ys) + 0.5
    fr = _Frame(min(xs) - 0.1, max(xs) + 0.1, lo, hi)
    body = _axes(fr, "log10 N", "log10 failure rate")
    for n, f, s in pos:
        x = fr.x(math.log10(n))
        y = fr.y(math.log10(f))
        if s > 0:
            top = fr.y(min(math.log10(f + s), hi))
            bot = fr.y(max(math.log10(f - s), lo) if f > s else lo)
            body.append(f'<line class="err" x1="{_num(x)}" y1="{_num(top)}" x2="{_num(x)}" y2="{_num(bot)}"/>')
        body.append(f'<circle class="zero" cx="{_num(x)}" cy="{_num(y)}" r="3.5"/>')
    fit = summary.fit
    if fit is not None and not fit.note:
        x1, x2 = min(xs), max(xs)
        y1 = (fit.intercept + fit.slope * x1 * math.log(10)) / math.log(10)
        y2 = (fit.intercept + fit.slope * x2 * math.log(10)) / math.log(10)
        body.append(f'<line class="pred" x1="{_num(fr.x(x1))}" y1="{_num(fr.y(y1))}" '
                    f'x2="{_num(fr.x(x2))}" y2="{_num(fr.y(y2))}"/>')
        body.append(f'<text x="{WIDTH - PAD}" y="{PAD - 18}" text-anchor="end">'
                    f'slope {fit.slope:.3f} [{fit.ci[0]:.3f}, {fit.ci[1]:.3f}]</text>')
    elif fit is not None:
        body.append(f'<text x="{WIDTH - PAD}" y="{PAD - 18}" text-anchor="end">{escape(fit.note)}</text>')
    return _document(body, title)


def emit_plot(obj, path: str | os.PathLike, **kw) -> str:
    """Write an SVG for a :class:`ConditionedSample` or a sweep summary; returns the path."""
    text = sample_svg(obj, **kw) if isinstance(obj, ConditionedSample) else summary_svg(obj, **kw)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return os.fspath(path)
