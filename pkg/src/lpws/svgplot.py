"""Static SVG renderings of the experiment outputs.

Every renderer takes rows as parsed from the experiment CSVs (lists of
string dicts), draws with fixed fonts, palette, and layout, and returns a
self-contained SVG string. No plotting dependency, and byte-identical
output for identical input.
"""

from __future__ import annotations

import math

import numpy as np

# columns each plot kind needs in its input CSV
REQUIRED_COLUMNS = {
    "success_rates": ("method", "scale", "converged"),
    "error_box": ("method", "l1_error", "converged"),
    "solution_scatter": ("coordinate", "beta_star", "beta_lpws", "beta_loglik"),
}

PLOT_KINDS = tuple(REQUIRED_COLUMNS)

_PALETTE = ("#2166ac", "#b2182b", "#1b7837", "#762a83", "#e08214", "#35978f")

_WIDTH = 720
_HEIGHT = 440
_MARGIN = {"left": 70, "right": 30, "top": 40, "bottom": 60}


def render_success_rates(rows):
    """Grouped bars: convergence rate per signal scale per method.

    Parameters
    ----------
    rows : list of dict
        Record rows holding at least method, scale, converged.

    Returns
    -------
    str
        SVG document.
    """
    scales = sorted({float(r["scale"]) for r in rows})
    methods = _method_order(rows)
    rates = {}
    for scale in scales:
        for method in methods:
            hits = [r for r in rows if float(r["scale"]) == scale and r["method"] == method]
            good = sum(r["converged"] == "True" for r in hits)
            rates[(scale, method)] = good / len(hits) if hits else 0.0

    x0, x1, y0, y1 = _frame()
    group_w = (x1 - x0) / len(scales)
    bar_w = 0.8 * group_w / len(methods)
    parts = [_axis_y_percent(x0, x1, y0, y1), _title("Convergence rate by signal scale")]
    for gi, scale in enumerate(scales):
        gx = x0 + gi * group_w
        parts.append(
            f'<text x="{_n(gx + group_w / 2)}" y="{_n(y1 + 24)}" text-anchor="middle" '
            f'class="ticklabel">{_g(scale)}</text>'
        )
        for mi, method in enumerate(methods):
            rate = rates[(scale, method)]
            h = (y1 - y0) * rate
            bx = gx + 0.1 * group_w + mi * bar_w
            parts.append(
                f'<rect class="bar method-{method}" data-method="{method}" '
                f'data-scale="{_g(scale)}" data-rate="{_g(rate)}" '
                f'x="{_n(bx)}" y="{_n(y1 - h)}" width="{_n(bar_w)}" height="{_n(h)}" '
                f'fill="{_color(mi)}"/>'
            )
    parts.append(_legend(methods, x0))
    parts.append(_xlabel("signal scale"))
    return _document(parts)


def render_error_box(rows):
    """Box plot of l1 estimation errors of the converged fits, per method."""
    methods = _method_order(rows)
    data = {}
    for method in methods:
        vals = [
            float(r["l1_error"])
            for r in rows
            if r["method"] == method and r["converged"] == "True" and _finite(r["l1_error"])
        ]
        data[method] = sorted(vals)
    methods = [m for m in methods if data[m]]
    if not methods:
        raise ValueError("no converged rows with finite l1_error to draw")

    hi = max(v[-1] for v in data.values())
    lo = min(v[0] for v in data.values())
    if hi == lo:
        hi = lo + 1.0
    x0, x1, y0, y1 = _frame()

    def ypix(v):
        return y1 - (y1 - y0) * (v - lo) / (hi - lo)

    group_w = (x1 - x0) / len(methods)
    box_w = 0.5 * group_w
    parts = [_axis_y_values(x0, x1, y0, y1, lo, hi), _title("l1 error of converged fits")]
    for mi, method in enumerate(methods):
        vals = np.array(data[method])
        q1, med, q3 = (float(np.quantile(vals, q)) for q in (0.25, 0.5, 0.75))
        lo_w, hi_w = float(vals[0]), float(vals[-1])
        cx = x0 + (mi + 0.5) * group_w
        bx = cx - box_w / 2
        color = _color(mi)
        parts.append(
            f'<g class="box method-{method}" data-method="{method}" data-median="{_g(med)}">'
            f'<line x1="{_n(cx)}" y1="{_n(ypix(lo_w))}" x2="{_n(cx)}" y2="{_n(ypix(hi_w))}" '
            f'stroke="{color}"/>'
            f'<rect x="{_n(bx)}" y="{_n(ypix(q3))}" width="{_n(box_w)}" '
            f'height="{_n(max(ypix(q1) - ypix(q3), 0.5))}" fill="{color}" fill-opacity="0.35" '
            f'stroke="{color}"/>'
            f'<line x1="{_n(bx)}" y1="{_n(ypix(med))}" x2="{_n(bx + box_w)}" y2="{_n(ypix(med))}" '
            f'stroke="{color}" stroke-width="2"/>'
            f"</g>"
        )
        parts.append(
            f'<text x="{_n(cx)}" y="{_n(y1 + 24)}" text-anchor="middle" class="ticklabel">'
            f"{method}</text>"
        )
    return _document(parts)


def render_solution_scatter(rows):
    """True coefficients against both estimates, coordinate by coordinate."""
    truth = [float(r["beta_star"]) for r in rows]
    series = [("lpws", [float(r["beta_lpws"]) for r in rows]),
              ("loglik", [float(r["beta_loglik"]) for r in rows])]
    allv = truth + [v for _, vals in series for v in vals]
    lo, hi = min(allv), max(allv)
    if hi == lo:
        hi, lo = lo + 1.0, lo - 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    x0, x1, y0, y1 = _frame()

    def xpix(v):
        return x0 + (x1 - x0) * (v - lo) / (hi - lo)

    def ypix(v):
        return y1 - (y1 - y0) * (v - lo) / (hi - lo)

    parts = [
        _axis_y_values(x0, x1, y0, y1, lo, hi),
        _title("Estimates against the truth"),
        f'<line x1="{_n(xpix(lo))}" y1="{_n(ypix(lo))}" x2="{_n(xpix(hi))}" y2="{_n(ypix(hi))}" '
        f'stroke="#888888" stroke-dasharray="4 3"/>',
    ]
    for si, (name, vals) in enumerate(series):
        color = _color(si)
        for t, v in zip(truth, vals):
            parts.append(
                f'<circle class="pt method-{name}" data-method="{name}" '
                f'cx="{_n(xpix(t))}" cy="{_n(ypix(v))}" r="4" fill="{color}" '
                f'fill-opacity="0.75"/>'
            )
    parts.append(_legend([name for name, _ in series], x0))
    parts.append(_xlabel("true coefficient"))
    return _document(parts)


def render(kind, rows):
    """Dispatch on plot kind; raises KeyError for unknown kinds."""
    return {
        "success_rates": render_success_rates,
        "error_box": render_error_box,
        "solution_scatter": render_solution_scatter,
    }[kind](rows)


def _method_order(rows):
    seen = []
    for r in rows:
        if r["method"] not in seen:
            seen.append(r["method"])
    return seen


def _finite(text):
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def _frame():
    return (
        _MARGIN["left"],
        _WIDTH - _MARGIN["right"],
        _MARGIN["top"],
        _HEIGHT - _MARGIN["bottom"],
    )


def _color(i):
    return _PALETTE[i % len(_PALETTE)]


def _axis_y_percent(x0, x1, y0, y1):
    parts = [f'<line x1="{_n(x0)}" y1="{_n(y1)}" x2="{_n(x1)}" y2="{_n(y1)}" stroke="#333333"/>']
    for k in range(5):
        frac = k / 4
        y = y1 - (y1 - y0) * frac
        parts.append(
            f'<line x1="{_n(x0 - 4)}" y1="{_n(y)}" x2="{_n(x0)}" y2="{_n(y)}" stroke="#333333"/>'
            f'<text x="{_n(x0 - 8)}" y="{_n(y + 4)}" text-anchor="end" class="ticklabel">'
            f"{int(100 * frac)}%</text>"
        )
    return "".join(parts)


def _axis_y_values(x0, x1, y0, y1, lo, hi):
    parts = [f'<line x1="{_n(x0)}" y1="{_n(y1)}" x2="{_n(x1)}" y2="{_n(y1)}" stroke="#333333"/>']
    for k in range(5):
        frac = k / 4
        y = y1 - (y1 - y0) * frac
        val = lo + (hi - lo) * frac
        parts.append(
            f'<line x1="{_n(x0 - 4)}" y1="{_n(y)}" x2="{_n(x0)}" y2="{_n(y)}" stroke="#333333"/>'
            f'<text x="{_n(x0 - 8)}" y="{_n(y + 4)}" text-anchor="end" class="ticklabel">'
            f"{_g(val)}</text>"
        )
    return "".join(parts)


def _legend(methods, x0):
    parts = []
    for mi, method in enumerate(methods):
        x = x0 + 130 * mi
        parts.append(
            f'<rect x="{_n(x)}" y="8" width="12" height="12" fill="{_color(mi)}"/>'
            f'<text x="{_n(x + 16)}" y="18" class="ticklabel">{method}</text>'
        )
    return "".join(parts)


def _title(text):
    return (
        f'<text x="{_WIDTH // 2}" y="{_MARGIN["top"] - 14}" text-anchor="middle" '
        f'class="title">{text}</text>'
    )


def _xlabel(text):
    return (
        f'<text x="{_WIDTH // 2}" y="{_HEIGHT - 16}" text-anchor="middle" '
        f'class="ticklabel">{text}</text>'
    )


def _document(parts):
    body = "".join(parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">'
        "<style>text{font-family:Helvetica,Arial,sans-serif;font-size:12px;fill:#333333}"
        ".title{font-size:15px}</style>"
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>'
        f"{body}</svg>"
    )


def _n(value):
    return format(float(value), ".2f")


def _g(value):
    return format(float(value), ".6g")
