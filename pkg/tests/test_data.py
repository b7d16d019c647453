import datetime as dt
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parkcast.clock import slot_times
from parkcast.data import (
    DayClass,
    OccupancyProfile,
    dump_exclusions,
    format_series_csv,
    ingest,
    load_exclusions,
    normalise,
    read_profiles_csv,
    slice_days,
    split_train_test,
    station_max,
    write_profiles_csv,
)
from parkcast.errors import (
    DegenerateProfile,
    InsufficientData,
    NegativeOccupancy,
    NonMonotonicTimestamps,
    ParseError,
)
from parkcast.models import tn_curve

from conftest import VILANOVA


def day_rows(station, day, values, skip=()):
    midnight = dt.datetime.combine(day, dt.time())
    return [
        (station, midnight + dt.timedelta(minutes=30 * (i + 1)), int(v))
        for i, v in enumerate(values)
        if i + 1 not in skip
    ]


def corpus(stations=("A",), days=3, start=dt.date(2024, 3, 4), skip=None):
    rows = []
    for s in stations:
        for k in range(days):
            d = start + dt.timedelta(days=k)
            values = 10 + np.round(200 * tn_curve(slot_times(), VILANOVA)) + k
            rows.extend(day_rows(s, d, values, (skip or {}).get(d, ())))
    return format_series_csv(rows)


def test_ingest_two_stations():
    series = ingest(io.StringIO(corpus(("A", "B"), days=2)))
    assert sorted(series) == ["A", "B"]
    assert all(len(s) == 96 for s in series.values())
    assert np.all(np.diff(series["A"].timestamps.astype(np.int64)) == 30)


def test_ingest_sorts_rows():
    text = corpus(days=1)
    header, *rows = text.splitlines()
    shuffled = "\n".join([header, *reversed(rows)]) + "\n"
    a, b = ingest(io.StringIO(text))["A"], ingest(io.StringIO(shuffled))["A"]
    np.testing.assert_array_equal(a.occupancy, b.occupancy)


def test_negative_occupancy_reports_line():
    lines = corpus(days=1).splitlines()
    lines[5] = lines[5].rsplit(",", 1)[0] + ",-3"
    with pytest.raises(NegativeOccupancy) as info:
        ingest(io.StringIO("\n".join(lines)))
    assert info.value.line == 6


def test_duplicate_timestamp():
    lines = corpus(days=1).splitlines()
    lines.insert(3, lines[3])
    with pytest.raises(NonMonotonicTimestamps):
        ingest(io.StringIO("\n".join(lines)))


@pytest.mark.parametrize(
    "row",
    ["A,2024-03-04T00:15,3", "A,yesterday,3", "A,2024-03-04T00:30,3.5", "A,2024-03-04T00:30"],
)
def test_parse_errors(row):
    with pytest.raises(ParseError) as info:
        ingest(io.StringIO("station,timestamp,occupancy\n" + row + "\n"))
    assert info.value.line == 2


def test_bad_header():
    with pytest.raises(ParseError):
        ingest(io.StringIO("a,b,c\n"))


def test_ingest_from_path(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text(corpus(days=1))
    assert len(ingest(path)["A"]) == 48


def test_slice_with_exclusion():
    series = ingest(io.StringIO(corpus(days=3)))["A"]
    ex = load_exclusions(io.StringIO(json.dumps({"A": [{"date": "2024-03-05", "reason": "concert"}]})))
    profiles, dropped = slice_days(series, ex)
    assert [p.date for p in profiles] == [dt.date(2024, 3, 4), dt.date(2024, 3, 6)]
    assert dropped[0].reason == "excluded: concert"


def test_short_gap_is_interpolated():
    d = dt.date(2024, 3, 4)
    series = ingest(io.StringIO(corpus(days=1, skip={d: (10, 11)})))["A"]
    (p,), dropped = slice_days(series)
    assert p.interpolated and not dropped
    full = slice_days(ingest(io.StringIO(corpus(days=1)))["A"])[0][0]
    # linear fill between slots 9 and 12
    np.testing.assert_allclose(p.values[9:11], np.interp([10, 11], [9, 12], full.values[[8, 11]]))
    np.testing.assert_array_equal(np.delete(p.values, [9, 10]), np.delete(full.values, [9, 10]))


def test_long_gap_drops_day():
    d = dt.date(2024, 3, 5)
    series = ingest(io.StringIO(corpus(days=2, skip={d: range(10, 15)})))["A"]
    profiles, dropped = slice_days(series)
    assert len(profiles) == 1 and dropped == [(("A", d, "gap>2"))]


def test_slice_is_deterministic():
    text = corpus(("A", "B"), days=4)
    runs = [slice_days(ingest(io.StringIO(text))["B"])[0] for _ in range(2)]
    for a, b in zip(*runs):
        np.testing.assert_array_equal(a.values, b.values)


def test_midnight_reading_closes_previous_day():
    (p,), _ = slice_days(ingest(io.StringIO(corpus(days=1)))["A"])
    assert p.date == dt.date(2024, 3, 4)


def make_profile(values, day=dt.date(2024, 3, 4)):
    return OccupancyProfile("A", day, DayClass.of(day), np.asarray(values, dtype=float))


def test_area_normalisation():
    p = normalise(make_profile(np.arange(1, 49)), "area", "none")
    assert p.values.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(p.denormalise(), np.arange(1, 49), rtol=1e-12)


def test_max_normalisation_of_offset_curve():
    raw = 5 + 100 * tn_curve(slot_times(), VILANOVA)
    p = normalise(make_profile(raw), "max")
    assert p.values.max() == 1.0
    assert p.offset == pytest.approx(raw.min())


@pytest.mark.parametrize("mode", ["area", "max"])
@pytest.mark.parametrize("values", [np.zeros(48), np.full(48, 7.0)])
def test_degenerate(mode, values):
    with pytest.raises(DegenerateProfile):
        normalise(make_profile(values), mode)


@given(st.lists(st.floats(0, 1e4), min_size=48, max_size=48).filter(lambda v: max(v) - min(v) > 1e-3))
def test_area_round_trip(values):
    p = normalise(make_profile(values), "area")
    assert p.values.sum() == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(p.denormalise(), values, rtol=1e-9, atol=1e-9 * max(values))


FRIDAY = dt.date(2000, 1, 7)


@given(st.dates(dt.date(1900, 1, 1), dt.date(2200, 12, 31)))
def test_day_classes(day):
    # independent table: offset in days from a known Friday
    k = (day - FRIDAY).days % 7
    expected = {0: "friday", 1: "weekend", 2: "weekend"}.get(k, "weekday")
    assert DayClass.of(day).value == expected


def days_profiles(n_days, start=dt.date(2024, 1, 1), station="A"):
    out = []
    for k in range(n_days):
        day = start + dt.timedelta(days=k)
        out.append(OccupancyProfile(station, day, DayClass.of(day), np.arange(48.0) + k))
    return out


def test_split_twelve_weeks():
    profiles = days_profiles(84)
    train, test = split_train_test(profiles)
    assert len(test) == 21 and len(train) == 63
    assert min(p.date for p in test) > max(p.date for p in train)
    assert len(test) / len(profiles) == pytest.approx(0.25)


def test_split_is_per_station():
    a = days_profiles(70)
    b = days_profiles(70, start=dt.date(2024, 1, 8), station="B")
    train, test = split_train_test(a + b)
    assert max(p.date for p in test if p.station == "B") == max(p.date for p in b)
    assert sum(p.station == "B" for p in test) == 21


def test_split_insufficient():
    with pytest.raises(InsufficientData):
        split_train_test(days_profiles(28))  # one training week has 4 weekdays
    with pytest.raises(InsufficientData):
        split_train_test([])
    with pytest.raises(ValueError):
        split_train_test(days_profiles(84), test_weeks=0)


def test_exclusions_round_trip():
    ex = {"A": {dt.date(2024, 1, 2): "holiday"}}
    assert load_exclusions(io.StringIO(dump_exclusions(ex))) == ex


def test_profile_csv_round_trip():
    profiles = days_profiles(3)
    buf = io.StringIO()
    write_profiles_csv(profiles, buf)
    assert buf.getvalue().splitlines()[0] == "station,date,day_class,slot,value"
    back = read_profiles_csv(io.StringIO(buf.getvalue()))
    for a, b in zip(profiles, back):
        np.testing.assert_array_equal(a.values, b.values)
    assert station_max(back) == {"A": 49.0}
