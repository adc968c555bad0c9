import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gamelife.errors import ValidationError
from gamelife.timeseries import (
    ParseOptions,
    PopulationSeries,
    compute_stats,
    interpolate,
    load_series,
    parse_series,
    resample,
    serialize_series,
    to_date,
    to_days,
)


def series(points, **kw):
    return PopulationSeries(tuple(t for t, _ in points), tuple(p for _, p in points), **kw)


class TestInvariants:
    def test_non_increasing_times_rejected(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            series([(0, 1), (0, 2)])

    def test_negative_count_rejected(self):
        with pytest.raises(ValidationError):
            series([(0, -1)])

    def test_launch_must_precede_shutdown(self):
        with pytest.raises(ValidationError):
            series([(0, 1)], t_launch=5, t_shutdown=5)

    def test_players_after_shutdown_rejected(self):
        with pytest.raises(ValidationError, match="after shutdown"):
            series([(0, 5), (10, 3)], t_shutdown=5)

    def test_zero_after_shutdown_allowed(self):
        s = series([(0, 5), (10, 0)], t_shutdown=5)
        assert len(s) == 2


class TestParse:
    def test_two_point_series(self):
        s = parse_series("date,players\n2017-06-01,7571\n2017-09-01,600")
        assert len(s) == 2
        assert compute_stats(s).p_peak == 7571

    def test_header_only_is_empty_input(self):
        with pytest.raises(ValidationError, match="empty input"):
            parse_series("date,players\n")

    def test_rows_are_sorted(self):
        s = parse_series("date,players\n2020-01-02,5\n2020-01-01,9")
        assert s.times[0] == to_days("2020-01-01")
        assert s.players[0] == 9

    def test_duplicate_timestamp_names_line(self):
        with pytest.raises(ValidationError, match="line 3"):
            parse_series("date,players\n2020-01-01,5\n2020-01-01,9")

    def test_bad_count_names_line(self):
        with pytest.raises(ValidationError, match="line 2"):
            parse_series("date,players\n2020-01-01,abc")

    def test_negative_count(self):
        with pytest.raises(ValidationError, match="negative"):
            parse_series("date,players\n2020-01-01,-4")

    def test_wrong_header(self):
        with pytest.raises(ValidationError, match="header"):
            parse_series("day,count\n1,2")

    def test_numeric_days_accepted(self):
        s = parse_series("date,players\n0,1\n1.5,2")
        assert s.times == (0.0, 1.5)

    def test_metadata_applied(self):
        s = parse_series(
            "date,players\n2020-01-01,5", ParseOptions(t_launch="2019-12-01", kind="session")
        )
        assert s.t_launch == to_days("2019-12-01")
        assert s.activity_window_delta == 7

    def test_default_activity_window_is_persistent(self):
        assert parse_series("date,players\n0,1").activity_window_delta == 30

    def test_unknown_kind(self):
        with pytest.raises(ValidationError, match="kind"):
            parse_series("date,players\n0,1", ParseOptions(kind="arcade"))


def test_epoch_round_trip():
    assert to_days("1970-01-02") == 1.0
    assert to_date(to_days("2018-09-14")) == "2018-09-14"


def test_load_series_reads_sidecar(fixtures_dir):
    s = load_series(fixtures_dir / "lawbreakers_like.csv")
    assert s.t_launch is not None and s.t_shutdown is not None
    assert s.label == "lawbreakers_like"


def test_load_missing_file_names_path(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(ValidationError, match="nope.csv"):
        load_series(missing)


class TestStats:
    def test_peak_of_three(self):
        st_ = compute_stats(series([(0, 10), (1, 50), (2, 20)]))
        assert (st_.p_peak, st_.t_peak) == (50, 1)

    def test_zero_runs(self):
        assert compute_stats(series([(0, 5), (1, 0), (2, 0), (3, 4)])).zero_runs == ((1.0, 2.0),)

    def test_tie_goes_to_earliest(self):
        assert compute_stats(series([(0, 1), (1, 9), (2, 3), (3, 9)])).t_peak == 1


class TestResample:
    def test_linear_midpoint(self):
        out = resample(series([(0, 0), (2, 100)]), 1)
        assert list(zip(out.times, out.players)) == [(0, 0), (1, 50), (2, 100)]

    def test_constant(self):
        assert set(resample(series([(0, 10), (1, 10)]), 0.5).players) == {10}

    def test_grid_truncation(self):
        out = resample(series([(0, 0), (3, 30)]), 2)
        assert list(zip(out.times, out.players)) == [(0, 0), (2, 20)]

    def test_bad_step(self):
        with pytest.raises(ValidationError):
            resample(series([(0, 0), (3, 30)]), 0)


points_strategy = st.lists(
    st.tuples(
        st.integers(min_value=-10_000, max_value=40_000),
        st.one_of(st.integers(0, 10**7), st.floats(0, 1e7, allow_nan=False)),
    ),
    min_size=1,
    max_size=40,
    unique_by=lambda x: x[0],
).map(lambda pts: sorted((float(t), p) for t, p in pts))


@given(points_strategy)
def test_serialize_parse_round_trip(pts):
    s = series(pts)
    back = parse_series(serialize_series(s))
    assert back.times == s.times
    assert back.players == s.players


@given(points_strategy)
def test_interpolation_at_original_times_is_exact(pts):
    s = series(pts)
    assert np.array_equal(interpolate(s, s.t), s.p)


@given(points_strategy.filter(lambda p: len(p) >= 2), st.sampled_from([1, 2, 4]))
def test_peak_invariant_under_dividing_resample(pts, divisor):
    # integer timestamps with integer counts: a step of 1/divisor lands on every original point
    pts = [(t, float(round(p))) for t, p in pts]
    s = series(pts)
    r = resample(s, 1.0 / divisor)
    assert compute_stats(r).p_peak == compute_stats(s).p_peak


@given(points_strategy)
def test_zero_runs_contain_only_zeros(pts):
    s = series([(t, 0.0 if i % 3 else p) for i, (t, p) in enumerate(pts)])
    for a, b in compute_stats(s).zero_runs:
        inside = [p for t, p in zip(s.times, s.players) if a <= t <= b]
        assert inside and all(p == 0 for p in inside)
