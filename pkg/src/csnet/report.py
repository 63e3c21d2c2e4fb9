"""Top-k curves as a hand-written SVG plot and a markdown comparison table."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .errors import UsageError
from .evaluation import EvalReport

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=170, top=30, bottom=50)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]


def _y_range(series: dict[str, EvalReport]) -> tuple[float, float]:
    values = [float(v) for rep in series.values() for v in rep.mean_error if math.isfinite(v)]
    if not values:
        return 0.0, 1.0
    lo, hi = min(values), max(values)
    if hi - lo < 1e-12:
        pad = max(abs(hi) * 0.1, 0.5)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def render_svg(series: dict[str, EvalReport], title: str = "top-k error") -> str:
    """One polyline per report, k on the x axis and mean top-k error on the y axis."""
    if not series:
        raise UsageError("nothing to plot")
    k_max = max(len(rep.k) for rep in series.values())
    y0, y1 = _y_range(series)
    x_lo, x_hi = 1.0, float(max(k_max, 2))
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(k: float) -> float:
        return MARGIN["left"] + (k - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>',
        f'<g id="axes" stroke="#000" data-xmin="{x_lo!r}" data-xmax="{x_hi!r}" data-ymin="{y0!r}" data-ymax="{y1!r}">',
        f'<line x1="{px(x_lo):.2f}" y1="{py(y0):.2f}" x2="{px(x_hi):.2f}" y2="{py(y0):.2f}"/>',
        f'<line x1="{px(x_lo):.2f}" y1="{py(y0):.2f}" x2="{px(x_lo):.2f}" y2="{py(y1):.2f}"/>',
        "</g>",
    ]
    for k in range(1, k_max + 1):
        out.append(f'<text x="{px(k):.2f}" y="{py(y0) + 16:.2f}" text-anchor="middle">{k}</text>')
    for i in range(5):
        v = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{py(v) + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">k</text>')
    for i, (label, rep) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(float(k)):.2f},{py(float(v)):.2f}" for k, v in zip(rep.k, rep.mean_error))
        out.append(f'<polyline data-label="{escape(label, {chr(34): "&quot;"})}" fill="none" stroke="{color}" '
                   f'stroke-width="2" points="{pts}"/>')
        ly = MARGIN["top"] + 16 * i + 8
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def markdown_table(series: dict[str, EvalReport]) -> str:
    """Rows per model: top-1, top-4 (when available) and top-k_max, with standard errors."""
    if not series:
        raise UsageError("nothing to tabulate")
    k_max = max(len(rep.k) for rep in series.values())
    ks = sorted({1, min(4, k_max), k_max})
    head = "| model | n | " + " | ".join(f"top-{k}" for k in ks) + " |"
    rule = "|---|---:|" + "---:|" * len(ks)
    rows = [head, rule]
    for label, rep in series.items():
        cells = []
        for k in ks:
            if k <= len(rep.k):
                cells.append(f"{rep.mean_error[k - 1]:.4f} ± {rep.stderr[k - 1]:.4f}")
            else:
                cells.append("n/a")
        rows.append(f"| {label} | {rep.n_examples} | " + " | ".join(cells) + " |")
    return "\n".join(rows) + "\n"
