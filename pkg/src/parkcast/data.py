"""Ingest raw counter CSVs and turn them into per-day occupancy profiles.

Slot convention: slot ``i`` (1-based) of day ``d`` is the counter reading at
``d 00:00 + i * 30 min``, so slot 48 is the reading at midnight that closes
the day.  This matches the model grid ``t_i = i / 48``.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import json
import os
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple

import numpy as np

from .clock import SLOTS_PER_DAY
from .errors import (
    DegenerateProfile,
    InsufficientData,
    NegativeOccupancy,
    NonMonotonicTimestamps,
    ParseError,
)

SLOT_MINUTES = 24 * 60 // SLOTS_PER_DAY
MAX_INTERPOLATED_GAP = 2
CSV_HEADER = ("station", "timestamp", "occupancy")
PROFILE_HEADER = ("station", "date", "day_class", "slot", "value")


class DayClass(str, enum.Enum):
    WEEKDAY = "weekday"
    FRIDAY = "friday"
    WEEKEND = "weekend"

    @classmethod
    def of(cls, day: dt.date) -> "DayClass":
        wd = day.weekday()
        if wd <= 3:
            return cls.WEEKDAY
        if wd == 4:
            return cls.FRIDAY
        return cls.WEEKEND


@dataclass
class RawSeries:
    station: str
    timestamps: np.ndarray  # datetime64[m], strictly increasing
    occupancy: np.ndarray  # int64, >= 0

    def __len__(self):
        return len(self.timestamps)


@dataclass
class OccupancyProfile:
    """One station-day on the slot grid.

    ``values == (raw - offset) / scale``; ``raw`` keeps the counter readings
    (after gap interpolation) so a profile can always be mapped back to cars.
    """

    station: str
    date: dt.date
    day_class: DayClass
    values: np.ndarray
    normalisation: str = "none"
    raw: np.ndarray | None = None
    offset: float = 0.0
    scale: float = 1.0
    interpolated: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.raw is None:
            self.raw = self.values.copy()
        if self.values.shape != (SLOTS_PER_DAY,):
            raise ValueError(f"profile must have {SLOTS_PER_DAY} slots, got {self.values.shape}")

    def denormalise(self, values=None) -> np.ndarray:
        """Map normalised values (default: this profile's) back to counts."""
        v = self.values if values is None else np.asarray(values, dtype=float)
        return self.offset + self.scale * v


class DroppedDay(NamedTuple):
    station: str
    date: dt.date
    reason: str


ExclusionList = dict  # station -> {date: reason}


def load_exclusions(source) -> ExclusionList:
    """Read the ``{station: [{date, reason}]}`` JSON exclusion config."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        doc = source
    out: ExclusionList = {}
    for station, entries in doc.items():
        days = {}
        for i, entry in enumerate(entries):
            try:
                day = dt.date.fromisoformat(entry["date"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad exclusion entry #{i} for {station!r}: {entry!r}") from exc
            days[day] = str(entry.get("reason", ""))
        out[station] = days
    return out


def dump_exclusions(exclusions: ExclusionList) -> str:
    doc = {
        station: [{"date": d.isoformat(), "reason": r} for d, r in sorted(days.items())]
        for station, days in sorted(exclusions.items())
    }
    return json.dumps(doc, indent=2) + "\n"


def _parse_timestamp(text: str) -> dt.datetime:
    ts = dt.datetime.fromisoformat(text.strip())
    if ts.tzinfo is not None:
        ts = ts.replace(tzinfo=None)
    return ts


def ingest(source) -> dict[str, RawSeries]:
    """Parse a ``station,timestamp,occupancy`` CSV into one series per station.

    ``source`` is a path or an open text file.  Errors carry the 1-based line
    number of the offending row.
    """
    path = None
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        with open(path, encoding="utf-8", newline="") as fh:
            return _ingest_stream(fh, path)
    return _ingest_stream(source, path)


def _ingest_stream(fh, path) -> dict[str, RawSeries]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", line=1, path=path) from None
    header = [h.strip().lstrip("﻿") for h in header]
    try:
        cols = [header.index(c) for c in CSV_HEADER]
    except ValueError:
        raise ParseError(f"header must contain {','.join(CSV_HEADER)}, got {header}", 1, path) from None

    rows = defaultdict(list)
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            station, ts_text, occ_text = (row[c] for c in cols)
        except IndexError:
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno, path) from None
        station = station.strip()
        if not station:
            raise ParseError("empty station", lineno, path)
        try:
            ts = _parse_timestamp(ts_text)
        except ValueError:
            raise ParseError(f"bad timestamp {ts_text!r}", lineno, path) from None
        if ts.second or ts.microsecond or ts.minute % SLOT_MINUTES:
            raise ParseError(f"timestamp {ts_text!r} is not on a {SLOT_MINUTES}-minute boundary", lineno, path)
        try:
            occ_f = float(occ_text)
        except ValueError:
            raise ParseError(f"bad occupancy {occ_text!r}", lineno, path) from None
        if not np.isfinite(occ_f) or occ_f != int(occ_f):
            raise ParseError(f"occupancy must be an integer count, got {occ_text!r}", lineno, path)
        if occ_f < 0:
            raise NegativeOccupancy(f"negative occupancy {occ_text.strip()}", lineno, path)
        rows[station].append((ts, int(occ_f), lineno))

    out = {}
    for station in sorted(rows):
        items = sorted(rows[station], key=lambda r: (r[0], r[2]))
        for prev, cur in zip(items, items[1:]):
            if cur[0] == prev[0]:
                raise NonMonotonicTimestamps(
                    f"duplicate timestamp {cur[0].isoformat()} for {station!r} "
                    f"(also on line {prev[2]})",
                    cur[2],
                    path,
                )
        out[station] = RawSeries(
            station=station,
            timestamps=np.array([r[0] for r in items], dtype="datetime64[m]"),
            occupancy=np.array([r[1] for r in items], dtype=np.int64),
        )
    return out


def _longest_run(mask: np.ndarray) -> int:
    best = run = 0
    for m in mask:
        run = run + 1 if m else 0
        best = max(best, run)
    return best


def slice_days(
    series: RawSeries,
    exclusions: ExclusionList | None = None,
    max_gap: int = MAX_INTERPOLATED_GAP,
) -> tuple[list[OccupancyProfile], list[DroppedDay]]:
    """Cut a series into calendar-day profiles.

    Runs of up to ``max_gap`` missing slots are filled linearly (flat at the
    day edges); longer runs drop the day with reason ``"gap>2"``.
    """
    excluded = (exclusions or {}).get(series.station, {})
    minutes = series.timestamps.astype("datetime64[m]").astype(np.int64) - SLOT_MINUTES
    day_index = minutes // 1440
    slot = (minutes % 1440) // SLOT_MINUTES  # 0-based

    profiles, dropped = [], []
    epoch = dt.date(1970, 1, 1)
    for d in np.unique(day_index):
        day = epoch + dt.timedelta(days=int(d))
        if day in excluded:
            dropped.append(DroppedDay(series.station, day, f"excluded: {excluded[day]}".rstrip(": ")))
            continue
        sel = day_index == d
        values = np.full(SLOTS_PER_DAY, np.nan)
        values[slot[sel]] = series.occupancy[sel]
        missing = np.isnan(values)
        if missing.any():
            if _longest_run(missing) > max_gap:
                dropped.append(DroppedDay(series.station, day, f"gap>{max_gap}"))
                continue
            idx = np.arange(SLOTS_PER_DAY)
            values[missing] = np.interp(idx[missing], idx[~missing], values[~missing])
        profiles.append(
            OccupancyProfile(
                station=series.station,
                date=day,
                day_class=DayClass.of(day),
                values=values,
                interpolated=bool(missing.any()),
            )
        )
    return profiles, dropped


def normalise(p: OccupancyProfile, mode: str, baseline: str = "subtract_day_min") -> OccupancyProfile:
    """Area (sum to one) or max (peak at one) normalisation of the raw counts."""
    if mode not in ("area", "max"):
        raise ValueError(f"mode must be 'area' or 'max', got {mode!r}")
    if baseline not in ("subtract_day_min", "none"):
        raise ValueError(f"unknown baseline {baseline!r}")
    raw = np.asarray(p.raw, dtype=float)
    offset = float(raw.min()) if baseline == "subtract_day_min" else 0.0
    shifted = raw - offset
    scale = float(shifted.sum()) if mode == "area" else float(shifted.max())
    if not np.isfinite(scale) or scale <= 0.0:
        raise DegenerateProfile(f"{p.station} {p.date}: constant or all-zero day cannot be normalised")
    return replace(p, values=shifted / scale, normalisation=mode, offset=offset, scale=scale, raw=raw.copy())


def normalise_all(profiles: Iterable[OccupancyProfile], mode: str, baseline: str = "subtract_day_min"):
    """Normalise every profile, skipping degenerate days (returned separately)."""
    kept, dropped = [], []
    for p in profiles:
        try:
            kept.append(normalise(p, mode, baseline))
        except DegenerateProfile:
            dropped.append(DroppedDay(p.station, p.date, "degenerate"))
    return kept, dropped


def split_train_test(
    profiles: list[OccupancyProfile],
    test_weeks: int = 3,
    day_classes: Iterable[DayClass | str] | None = None,
    min_train: int = 5,
) -> tuple[list[OccupancyProfile], list[OccupancyProfile]]:
    """Hold out the final ``test_weeks`` weeks of every station.

    The test window is the ``7 * test_weeks`` calendar days ending on the
    station's last available date.
    """
    if test_weeks < 1:
        raise ValueError("test_weeks must be >= 1")
    if not profiles:
        raise InsufficientData("no profiles to split")
    classes = [DayClass(c) for c in day_classes] if day_classes is not None else list(DayClass)
    by_station = defaultdict(list)
    for p in profiles:
        by_station[p.station].append(p)
    train, test = [], []
    for station in sorted(by_station):
        items = sorted(by_station[station], key=lambda p: p.date)
        cutoff = items[-1].date - dt.timedelta(days=7 * test_weeks)
        tr = [p for p in items if p.date <= cutoff]
        te = [p for p in items if p.date > cutoff]
        for c in classes:
            n = sum(p.day_class == c for p in tr)
            if n < min_train:
                raise InsufficientData(
                    f"{station}: only {n} {c.value} training profiles (need {min_train})"
                )
        train.extend(tr)
        test.extend(te)
    return train, test


def select(profiles, station=None, day_class=None) -> list[OccupancyProfile]:
    dc = DayClass(day_class) if day_class is not None else None
    return [
        p
        for p in profiles
        if (station is None or p.station == station) and (dc is None or p.day_class == dc)
    ]


def station_max(profiles: Iterable[OccupancyProfile]) -> dict[str, float]:
    """Largest raw count per station, the denominator of the relative errors."""
    out: dict[str, float] = {}
    for p in profiles:
        out[p.station] = max(out.get(p.station, 0.0), float(np.max(p.raw)))
    return out


def write_profiles_csv(profiles: Iterable[OccupancyProfile], fh) -> None:
    """Long-format ``station,date,day_class,slot,value`` dump (slots 1-based)."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for p in sorted(profiles, key=lambda p: (p.station, p.date)):
        for i, v in enumerate(p.values, start=1):
            w.writerow((p.station, p.date.isoformat(), p.day_class.value, i, repr(float(v))))


def read_profiles_csv(fh) -> list[OccupancyProfile]:
    if isinstance(fh, (str, os.PathLike)):
        with open(fh, encoding="utf-8", newline="") as f:
            return read_profiles_csv(f)
    reader = csv.DictReader(fh)
    acc = defaultdict(lambda: np.full(SLOTS_PER_DAY, np.nan))
    for lineno, row in enumerate(reader, start=2):
        try:
            key = (row["station"], dt.date.fromisoformat(row["date"]))
            acc[key][int(row["slot"]) - 1] = float(row["value"])
        except (KeyError, ValueError, IndexError) as exc:
            raise ParseError(f"bad profile row: {exc}", lineno) from None
    out = []
    for (station, day), values in sorted(acc.items()):
        if np.isnan(values).any():
            raise ParseError(f"incomplete profile {station} {day}")
        out.append(OccupancyProfile(station, day, DayClass.of(day), values))
    return out


def format_series_csv(series: Iterable[tuple[str, dt.datetime, int]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for station, ts, occ in series:
        w.writerow((station, ts.isoformat(timespec="minutes"), int(occ)))
    return buf.getvalue()
