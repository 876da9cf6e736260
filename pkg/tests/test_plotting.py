"""SVG rendering of sweep tables."""

import pytest

from gsot.errors import ConfigError
from gsot.experiments import ResultTable, Row
from gsot.plotting import render_loglog_svg


def _table(values_by_sigma):
    rows = []
    for sigma, pairs in values_by_sigma.items():
        for n, v in pairs:
            rows.append(Row(2, sigma, n, n, 0, v, 0.0))
    return ResultTable(rows=rows)


def test_render_contains_data_and_structure():
    table = _table({0.0: [(10, 0.5), (100, 0.2), (1000, 0.08)],
                    1.0: [(10, 0.4), (100, 0.1), (1000, 0.03)]})
    svg = render_loglog_svg(table, title="cube sweep")
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")
    assert "cube sweep" in svg
    assert "<!-- data sigma=0 10:0.5 100:0.2 1000:0.08 -->" in svg
    assert "<!-- data sigma=1 10:0.4 100:0.1 1000:0.03 -->" in svg
    assert svg.count("<polyline") == 2
    assert svg.count("<circle") == 6
    assert "sigma=0" in svg and "sigma=1" in svg


def test_render_is_deterministic():
    table = _table({0.5: [(10, 1.0), (100, 0.5)]})
    assert render_loglog_svg(table) == render_loglog_svg(table)


def test_render_reports_dropped_points():
    table = _table({1.0: [(10, 0.5), (100, 0.0), (1000, 0.1)]})
    svg = render_loglog_svg(table)
    assert "dropped sigma=1" in svg
    assert "n=100" in svg


def test_render_rejects_all_nonpositive():
    table = _table({1.0: [(10, 0.0), (100, -0.5)]})
    with pytest.raises(ConfigError):
        render_loglog_svg(table)


def test_render_single_point_series():
    table = _table({1.0: [(10, 0.5)]})
    svg = render_loglog_svg(table)
    assert svg.count("<polyline") == 0
    assert svg.count("<circle") == 1
