"""Calendar helpers, vintage IO, and panel alignment."""

import io

import numpy as np
import pytest
from numpy.testing import assert_allclose

from skewcast import data
from skewcast.data import (
    ObservationPanel,
    Series,
    Vintage,
    align_panel,
    fetch_vintages,
    growth_correlation,
    load_vintage,
    load_vintages,
    log_diff,
    month_index,
    month_label,
    month_quarter,
    nowcast_schedule,
    quarter_end_month,
    quarter_index,
    quarter_label,
    read_series_csv,
    write_series_csv,
    write_vintage,
)
from skewcast.modelspec import build_spec


def _monthly_series(start="2001-01", n=24, base=100.0, rate=0.002):
    m0 = month_index(start)
    dates = tuple(month_label(m0 + k) for k in range(n))
    values = base * np.exp(rate * np.arange(n))
    return Series(dates, values)


def _quarterly_series(start="2001-Q1", n=8, base=500.0, rate=0.005):
    q0 = quarter_index(start)
    dates = tuple(quarter_label(q0 + k) for k in range(n))
    values = base * np.exp(rate * np.arange(n))
    return Series(dates, values)


def test_month_calendar_round_trip():
    assert month_index("2015-03") == 2015 * 12 + 2
    assert month_label(month_index("1999-12")) == "1999-12"
    assert quarter_index("2015-Q2") == 2015 * 4 + 1
    assert quarter_label(quarter_index("2020-Q4")) == "2020-Q4"
    assert quarter_end_month(quarter_index("2015-Q1")) == month_index("2015-03")
    assert month_quarter(month_index("2015-05")) == quarter_index("2015-Q2")


@pytest.mark.parametrize("bad", ["2015", "15-01", "2015-13", "2015-Q5", "Q1-2015"])
def test_malformed_labels_rejected(bad):
    with pytest.raises(ValueError):
        month_index(bad)
    with pytest.raises(ValueError):
        quarter_index(bad)


def test_log_diff_values():
    out = log_diff(np.array([100.0, 102.0, 102.0]))
    assert np.isnan(out[0])
    assert_allclose(out[1], np.log(1.02), rtol=1e-12)
    assert out[2] == 0.0
    rolled = log_diff(np.array([100.0, 100.0, 100.0, 103.0]), step=3)
    assert np.isnan(rolled[:3]).all()
    assert_allclose(rolled[3], np.log(1.03), rtol=1e-12)


def test_log_diff_rejects_bad_levels():
    with pytest.raises(ValueError):
        log_diff(np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        log_diff(np.array([1.0, 2.0]), step=0)


def test_series_contiguity_enforced():
    with pytest.raises(ValueError):
        Series(("2001-01", "2001-03"), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        Series(("2001-Q1", "2001-Q1"), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        Series(("2001-01",), np.array([0.0]))
    s = _monthly_series()
    assert s.frequency == "monthly"
    assert s.start == month_index("2001-01")
    assert len(s) == 24


def test_vintage_frequency_checks():
    gdp = _quarterly_series()
    rel = _monthly_series()
    v = Vintage("2003-01-25", gdp, rel)
    assert v.as_of == "2003-01-25"
    with pytest.raises(ValueError):
        Vintage("2003-1-25", gdp, rel)
    with pytest.raises(ValueError):
        Vintage("2003-01-25", rel, rel)
    with pytest.raises(ValueError):
        Vintage("2003-01-25", gdp, gdp)


def test_align_panel_monthly_layout():
    v = Vintage("2003-01-25", _quarterly_series(n=8), _monthly_series(n=24))
    panel = align_panel(v, build_spec("DV"))
    # GDP growth appears at quarter ends from the second quarter on
    assert panel.monthly_index[0] == "2001-01"
    assert panel.mask[0, panel.position("2001-03")] == 0  # warm-up NaN
    assert panel.mask[0, panel.position("2001-06")] == 1
    gdp_cols = np.flatnonzero(panel.mask[0])
    assert np.all(panel.months[gdp_cols] % 3 == 2)
    assert panel.mask[1, 0] == 0
    assert panel.mask[1, 1:24].all()
    g = log_diff(v.gdp_levels.values)[1]
    assert_allclose(panel.y[0, panel.position("2001-06")], g, rtol=1e-12)


def test_align_panel_rolling_quarterly_layout():
    v = Vintage("2003-01-25", _quarterly_series(n=8), _monthly_series(n=24))
    panel = align_panel(v, build_spec("DVS"))
    # a 3-month log difference needs three prior months
    assert panel.mask[1, :3].sum() == 0
    assert panel.mask[1, 3:24].all()
    expect = np.log(v.related_levels.values[3] / v.related_levels.values[0])
    assert_allclose(panel.y[1, 3], expect, rtol=1e-12)


def test_panel_restrict_masks_after_cutoffs():
    v = Vintage("2003-01-25", _quarterly_series(n=8), _monthly_series(n=24))
    panel = align_panel(v, build_spec("DV"))
    cut = panel.restrict(gdp_through="2002-Q2", related_through="2002-09")
    assert cut.last_observed_month(0) == "2002-06"
    assert cut.last_observed_month(1) == "2002-09"
    # original untouched
    assert panel.last_observed_month(1) == "2002-12"
    assert cut.n_months == panel.n_months


def test_panel_validation():
    months = ("2001-01", "2001-02")
    y = np.array([[np.nan, 1.0], [0.5, np.nan]])
    mask = np.array([[0, 1], [1, 0]], dtype=np.uint8)
    with pytest.raises(ValueError):
        # GDP observation on a non-quarter-end month
        ObservationPanel(months, y, mask, ("quarterly", "monthly"))
    y2 = np.array([[np.nan, np.nan], [0.5, 0.4]])
    mask2 = np.array([[0, 0], [1, 0]], dtype=np.uint8)
    with pytest.raises(ValueError):
        ObservationPanel(months, y2, mask2, ("quarterly", "monthly"))


def test_nowcast_schedule_window():
    steps = nowcast_schedule("2015-Q1")
    assert [s.step for s in steps] == [4, 3, 2, 1]
    assert all(s.target == "2015-Q1" for s in steps)
    assert all(s.gdp_through == "2014-Q4" for s in steps)
    assert steps[0].timing == "late 2015-01"
    assert steps[0].related_through == "2014-12"
    assert steps[1].timing == "early 2015-02"
    assert steps[1].related_through == "2015-01"
    assert steps[3].timing == "early 2015-04"
    assert steps[3].related_through == "2015-03"


def test_series_csv_round_trip(tmp_path):
    s = _monthly_series(n=10, base=97.3, rate=0.0013)
    path = tmp_path / "series.csv"
    write_series_csv(path, s)
    back = read_series_csv(path)
    assert back.dates == s.dates
    assert_allclose(back.values, s.values, rtol=1e-7)


@pytest.mark.parametrize(
    "text",
    [
        "value,date\n2001-01,1.0\n",
        "date,value\nnot-a-date,1.0\n",
        "date,value\n2001-01,abc\n",
        "date,value\n2001-01,1.0,extra\n",
        "date,value\n",
    ],
)
def test_malformed_csv_rejected(text):
    with pytest.raises(ValueError):
        read_series_csv(io.StringIO(text))


def test_vintage_io_round_trip(tmp_path):
    v = Vintage("2003-04-25", _quarterly_series(), _monthly_series())
    write_vintage(tmp_path, v)
    back = load_vintage(tmp_path / "2003-04-25")
    assert back.as_of == v.as_of
    assert_allclose(back.gdp_levels.values, v.gdp_levels.values, rtol=1e-7)
    assert_allclose(back.related_levels.values, v.related_levels.values, rtol=1e-7)
    many = load_vintages(tmp_path)
    assert len(many) == 1 and many[0].as_of == "2003-04-25"


def test_fetch_vintages_from_file_tree(tmp_path):
    v1 = Vintage("2003-04-25", _quarterly_series(), _monthly_series())
    write_vintage(tmp_path, v1)
    endpoint = f"file://{tmp_path}/{{date}}/{{series}}.csv"
    vintages, errors = fetch_vintages(endpoint, ["2003-04-25", "2003-05-25"])
    assert len(vintages) == 1
    assert vintages[0].as_of == "2003-04-25"
    assert len(errors) == 1 and "2003-05-25" in errors[0]
    with pytest.raises(ValueError):
        fetch_vintages("file:///tmp/no-placeholders.csv", ["2003-04-25"])


def test_growth_correlation_warns_when_low():
    rng = np.random.default_rng(8)
    m0 = month_index("2001-01")
    rel_dates = tuple(month_label(m0 + k) for k in range(36))
    rel = Series(rel_dates, 100.0 * np.exp(np.cumsum(rng.normal(0, 0.01, 36))))
    q0 = quarter_index("2001-Q1")
    gdp_dates = tuple(quarter_label(q0 + k) for k in range(12))
    gdp = Series(gdp_dates, 500.0 * np.exp(np.cumsum(rng.normal(0, 0.01, 12))))
    v = Vintage("2004-01-25", gdp, rel)
    with pytest.warns(UserWarning):
        corr = growth_correlation(v)
    assert -1.0 <= corr <= 1.0


def test_growth_correlation_accepts_tracking_series():
    # a related series built from the GDP path itself correlates strongly
    rng = np.random.default_rng(5)
    g = np.cumsum(rng.normal(0.005, 0.01, 12))
    q0 = quarter_index("2001-Q1")
    gdp = Series(
        tuple(quarter_label(q0 + k) for k in range(12)), 500.0 * np.exp(g)
    )
    m0 = month_index("2001-01")
    monthly = np.repeat(np.exp(g), 3) * 100.0
    rel = Series(tuple(month_label(m0 + k) for k in range(36)), monthly)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        corr = growth_correlation(v=Vintage("2004-01-25", gdp, rel))
    assert corr > 0.6


def test_position_outside_span_rejected():
    v = Vintage("2003-01-25", _quarterly_series(n=8), _monthly_series(n=24))
    panel = align_panel(v, build_spec("DV"))
    with pytest.raises(ValueError):
        panel.position("2010-01")
