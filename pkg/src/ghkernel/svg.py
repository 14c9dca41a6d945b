"""Standalone SVG rendering for decision boundaries and score histograms."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["boundary_svg", "histogram_svg", "zero_contour"]

_NORMAL = "#1f77b4"
_ANOMALY = "#d62728"


def _crossing(p, q, vp, vq):
    t = vp / (vp - vq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def zero_contour(xs, ys, values) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Marching squares for the level ``values == 0``.

    ``values[j, i]`` is the value at ``(xs[i], ys[j])``. Returns line
    segments; saddle cells are resolved by the sign of the cell mean.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.shape != (ys.size, xs.size):
        raise ValueError(f"values must have shape {(ys.size, xs.size)}, got {v.shape}")
    inside = v >= 0
    corners = (inside[:-1, :-1], inside[:-1, 1:], inside[1:, 1:], inside[1:, :-1])
    mixed = ~(np.all(corners, axis=0) | ~np.any(corners, axis=0))
    segments = []
    for j, i in zip(*np.nonzero(mixed)):
        pts = [(xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])]
        vals = [v[j, i], v[j, i + 1], v[j + 1, i + 1], v[j + 1, i]]
        signs = [val >= 0 for val in vals]
        # Edge k joins corner k and k + 1 (counterclockwise).
        cuts = [
            _crossing(pts[k], pts[(k + 1) % 4], vals[k], vals[(k + 1) % 4])
            for k in range(4)
            if signs[k] != signs[(k + 1) % 4]
        ]
        if len(cuts) == 2:
            segments.append((cuts[0], cuts[1]))
        elif len(cuts) == 4:
            # Saddle: every edge is cut. If the centre shares corner 0's sign,
            # corners 1 and 3 are cut off; otherwise corners 0 and 2 are.
            if (np.mean(vals) >= 0) == signs[0]:
                segments += [(cuts[0], cuts[1]), (cuts[2], cuts[3])]
            else:
                segments += [(cuts[3], cuts[0]), (cuts[1], cuts[2])]
    return segments


class _Frame:
    def __init__(self, xlim, ylim, width, height, margin=40):
        self.xlim, self.ylim = xlim, ylim
        self.width, self.height, self.margin = width, height, margin

    def x(self, v):
        lo, hi = self.xlim
        return self.margin + (v - lo) / (hi - lo) * (self.width - 2 * self.margin)

    def y(self, v):
        lo, hi = self.ylim
        return self.height - self.margin - (v - lo) / (hi - lo) * (self.height - 2 * self.margin)

    def axes(self, xlabel, ylabel):
        m, w, h = self.margin, self.width, self.height
        return [
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#444"/>',
            f'<text x="{w / 2:.1f}" y="{h - 8}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
            f'<text x="12" y="{h / 2:.1f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 12 {h / 2:.1f})">{escape(ylabel)}</text>',
            f'<text x="{m}" y="{h - m + 14}" font-size="10">{self.xlim[0]:.3g}</text>',
            f'<text x="{w - m}" y="{h - m + 14}" font-size="10" text-anchor="end">{self.xlim[1]:.3g}</text>',
            f'<text x="{m - 4}" y="{h - m}" font-size="10" text-anchor="end">{self.ylim[0]:.3g}</text>',
            f'<text x="{m - 4}" y="{m + 8}" font-size="10" text-anchor="end">{self.ylim[1]:.3g}</text>',
        ]


def _document(width, height, body, title):
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n<title>{escape(title)}</title>\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def boundary_svg(xs, ys, values, points, labels, title="decision boundary", width=600, height=600) -> str:
    """Scatter of ``points`` (normals blue, anomalies red) with the zero contour in black."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    frame = _Frame((float(xs[0]), float(xs[-1])), (float(ys[0]), float(ys[-1])), width, height)
    body = frame.axes("x0", "x1")
    for (x, y), label in zip(points, labels):
        if label == 1:
            cx, cy = frame.x(x), frame.y(y)
            body.append(
                f'<path d="M{cx - 3:.2f},{cy - 3:.2f}L{cx + 3:.2f},{cy + 3:.2f}M{cx - 3:.2f},{cy + 3:.2f}'
                f'L{cx + 3:.2f},{cy - 3:.2f}" stroke="{_ANOMALY}" stroke-width="1.5"/>'
            )
        else:
            body.append(f'<circle cx="{frame.x(x):.2f}" cy="{frame.y(y):.2f}" r="2" fill="{_NORMAL}" fill-opacity="0.6"/>')
    path = "".join(
        f"M{frame.x(a[0]):.2f},{frame.y(a[1]):.2f}L{frame.x(b[0]):.2f},{frame.y(b[1]):.2f}"
        for a, b in zero_contour(xs, ys, values)
    )
    if path:
        body.append(f'<path d="{path}" stroke="black" stroke-width="1.5" fill="none"/>')
    return _document(width, height, body, title)


def histogram_svg(edges, counts_normal, counts_anomaly, title="decision values", width=600, height=400) -> str:
    """Overlaid per-class histograms with a dashed line at zero."""
    edges = np.asarray(edges, dtype=float)
    top = max(int(np.max(counts_normal, initial=0)), int(np.max(counts_anomaly, initial=0)), 1)
    frame = _Frame((float(edges[0]), float(edges[-1])), (0.0, float(top)), width, height)
    body = frame.axes("decision value", "count")
    for counts, colour in ((counts_normal, _NORMAL), (counts_anomaly, _ANOMALY)):
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            if c:
                x0, x1, y = frame.x(lo), frame.x(hi), frame.y(c)
                body.append(
                    f'<rect x="{x0:.2f}" y="{y:.2f}" width="{x1 - x0:.2f}" height="{frame.y(0) - y:.2f}" '
                    f'fill="{colour}" fill-opacity="0.5"/>'
                )
    if edges[0] <= 0 <= edges[-1]:
        x = frame.x(0.0)
        body.append(
            f'<line x1="{x:.2f}" y1="{frame.y(top):.2f}" x2="{x:.2f}" y2="{frame.y(0):.2f}" '
            'stroke="black" stroke-dasharray="4 3"/>'
        )
    return _document(width, height, body, title)
