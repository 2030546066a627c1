import xml.etree.ElementTree as ET

import pytest

from lpws.svgplot import (
    PLOT_KINDS,
    REQUIRED_COLUMNS,
    render,
    render_error_box,
    render_solution_scatter,
    render_success_rates,
)


def _robustness_rows():
    rows = []
    for scale in ("0.5", "1.5"):
        for method in ("lpws_asymptotic", "loglik_cv"):
            for rep, conv in enumerate(("True", "True", "False")):
                rows.append(
                    {
                        "method": method,
                        "scale": scale,
                        "converged": conv if method == "loglik_cv" else "True",
                        "l1_error": str(0.1 * (rep + 1)),
                    }
                )
    return rows


def _parse(svg):
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    return root


def test_kinds_and_required_columns():
    assert PLOT_KINDS == ("success_rates", "error_box", "solution_scatter")
    assert REQUIRED_COLUMNS["success_rates"] == ("method", "scale", "converged")
    assert REQUIRED_COLUMNS["error_box"] == ("method", "l1_error", "converged")
    assert REQUIRED_COLUMNS["solution_scatter"] == (
        "coordinate",
        "beta_star",
        "beta_lpws",
        "beta_loglik",
    )


def test_success_rates_bars():
    svg = render_success_rates(_robustness_rows())
    root = _parse(svg)
    bars = [e for e in root.iter() if e.get("class", "").startswith("bar ")]
    assert len(bars) == 4  # 2 scales x 2 methods
    by_key = {(b.get("data-method"), b.get("data-scale")): float(b.get("data-rate")) for b in bars}
    assert by_key[("lpws_asymptotic", "0.5")] == pytest.approx(1.0)
    assert by_key[("loglik_cv", "0.5")] == pytest.approx(2.0 / 3.0, rel=1e-6)


def test_error_box_quartiles():
    rows = []
    for v in ("0.1", "0.2", "0.3", "0.4", "0.5"):
        rows.append({"method": "m1", "l1_error": v, "converged": "True"})
    rows.append({"method": "m1", "l1_error": "9.9", "converged": "False"})
    rows.append({"method": "m1", "l1_error": "nan", "converged": "True"})
    svg = render_error_box(rows)
    root = _parse(svg)
    boxes = [e for e in root.iter() if e.get("class", "").startswith("box ")]
    assert len(boxes) == 1
    # diverged and non-finite rows are excluded from the median
    assert float(boxes[0].get("data-median")) == pytest.approx(0.3)


def test_error_box_rejects_all_diverged():
    rows = [{"method": "m1", "l1_error": "1.0", "converged": "False"}]
    with pytest.raises(ValueError, match="no converged rows"):
        render_error_box(rows)


def test_solution_scatter_points():
    rows = [
        {"coordinate": str(j), "beta_star": str(0.1 * j), "beta_lpws": str(0.1 * j + 0.01),
         "beta_loglik": str(0.1 * j - 0.02)}
        for j in range(5)
    ]
    svg = render_solution_scatter(rows)
    root = _parse(svg)
    pts = [e for e in root.iter() if e.get("class", "").startswith("pt ")]
    assert len(pts) == 10  # two series x five coordinates
    methods = {e.get("class").split()[-1] for e in pts}
    assert methods == {"method-lpws", "method-loglik"}


def test_render_dispatch_and_determinism():
    rows = _robustness_rows()
    assert render("success_rates", rows) == render_success_rates(rows)
    assert render("success_rates", rows) == render("success_rates", list(rows))
    with pytest.raises(KeyError):
        render("no_such_kind", rows)


def test_svg_is_self_contained():
    svg = render_success_rates(_robustness_rows())
    assert "http://" not in svg.replace("http://www.w3.org", "")
    assert "viewBox" in svg
