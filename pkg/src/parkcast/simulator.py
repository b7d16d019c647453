"""Synthetic station-days from independent arrival and departure processes.

Each day draws ``M`` arrival and ``M`` departure times and counts how many of
each have happened by every slot.  With a finite capacity the events are
replayed in time order: an arrival that finds the car park full is rejected,
and the next departure after it is cancelled (that car never parked).  On
saturated days this removes the earliest departures after the car park
fills, so the admitted cars leave somewhat later than the departure
distribution alone would suggest.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import truncnorm
from .clock import SLOTS_PER_DAY, slot_times
from .data import DayClass, format_series_csv
from .errors import InvalidConfig
from .models import TnParams

ANOMALY_KINDS = ("stuck", "holiday", "gap")


@dataclass(frozen=True)
class SimConfig:
    """One day's generating process.  ``capacity=None`` means unlimited."""

    params: TnParams
    m: int
    capacity: int | None = None
    initial_occupancy: int = 0
    noise: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.m < 0 or int(self.m) != self.m:
            raise InvalidConfig(f"m must be a non-negative integer, got {self.m!r}")
        if self.initial_occupancy < 0:
            raise InvalidConfig("initial_occupancy must be >= 0")
        if self.capacity is not None and (self.capacity <= 0 or self.capacity < self.initial_occupancy):
            raise InvalidConfig(
                f"capacity {self.capacity} must be positive and >= initial occupancy {self.initial_occupancy}"
            )
        if not (self.noise >= 0 and math.isfinite(self.noise)):
            raise InvalidConfig(f"noise must be a finite non-negative std, got {self.noise!r}")


@dataclass
class SimDay:
    occupancy: np.ndarray
    rejected: int
    arrivals: np.ndarray
    departures: np.ndarray
    admitted: np.ndarray = field(repr=False)
    cancelled: np.ndarray = field(repr=False)
    # lowest running total of (arrivals - departures), capped at 0; negative
    # values mean departures ran ahead of arrivals at some point of the day
    lowest_net: int = 0

    @property
    def went_below_initial(self) -> bool:
        return self.lowest_net < 0

    @property
    def max_occupancy(self) -> float:
        return float(np.max(self.occupancy))


def _replay(arrivals, departures, capacity, initial):
    """Event-by-event occupancy under a hard capacity.

    Each rejected arrival cancels the next uncancelled departure after it.

    Returns event times, occupancy after each event, admitted and cancelled masks.
    """
    m = len(arrivals)
    times = np.concatenate([arrivals, departures])
    kinds = np.concatenate([np.ones(m, dtype=np.int8), np.zeros(m, dtype=np.int8)])
    # departures first on exact ties so a leaving car frees its space
    order = np.lexsort((kinds, times))
    admitted = np.ones(m, dtype=bool)
    cancelled = np.zeros(m, dtype=bool)
    occ_after = np.empty(2 * m, dtype=np.int64)
    occ = initial
    pending = 0
    cap = math.inf if capacity is None else capacity
    for pos, idx in enumerate(order):
        if idx < m:
            if occ < cap:
                occ += 1
            else:
                admitted[idx] = False
                pending += 1
        elif pending:
            pending -= 1
            cancelled[idx - m] = True
        else:
            occ -= 1
        occ_after[pos] = occ
    return times[order], occ_after, admitted, cancelled


def simulate_day(c: SimConfig, n_slots: int = SLOTS_PER_DAY, rng=None) -> SimDay:
    """Sample one day on the ``n_slots`` end-of-interval grid."""
    rng = np.random.default_rng(c.seed if rng is None else rng)
    arrivals = np.sort(truncnorm.sample(c.params.arrival, c.m, rng))
    departures = np.sort(truncnorm.sample(c.params.departure, c.m, rng))
    grid = slot_times(n_slots)
    if c.capacity is None:
        occ = (
            c.initial_occupancy
            + np.searchsorted(arrivals, grid, side="right")
            - np.searchsorted(departures, grid, side="right")
        ).astype(float)
        admitted = np.ones(c.m, dtype=bool)
        cancelled = np.zeros(c.m, dtype=bool)
        if c.m:
            steps = np.concatenate([np.ones(c.m), -np.ones(c.m)])
            order = np.lexsort((steps, np.concatenate([arrivals, departures])))
            lowest = int(min(0.0, np.cumsum(steps[order]).min()))
        else:
            lowest = 0
        rejected = 0
    else:
        times, occ_after, admitted, cancelled = _replay(arrivals, departures, c.capacity, c.initial_occupancy)
        idx = np.searchsorted(times, grid, side="right")
        history = np.concatenate([[c.initial_occupancy], occ_after])
        occ = history[idx].astype(float)
        lowest = int(min(0, history.min() - c.initial_occupancy))
        rejected = int((~admitted).sum())
    if c.noise > 0:
        occ = np.maximum(occ + rng.normal(0.0, c.noise, n_slots), 0.0)
    return SimDay(
        occupancy=occ,
        rejected=rejected,
        arrivals=arrivals,
        departures=departures,
        admitted=admitted,
        cancelled=cancelled,
        lowest_net=lowest,
    )


def day_seed(seed: int, station_index: int, day_index: int) -> np.random.SeedSequence:
    """Independent, order-free stream for one station-day."""
    return np.random.SeedSequence(seed, spawn_key=(station_index, day_index))


@dataclass
class Corpus:
    csv_text: str
    truth: dict
    exclusions: dict

    def write(self, path) -> tuple[str, str]:
        """Write the CSV and a ``<stem>.truth.json`` sidecar; returns both paths."""
        path = os.fspath(path)
        stem = path[:-4] if path.endswith(".csv") else path
        truth_path = stem + ".truth.json"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.csv_text)
        with open(truth_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(self.truth, indent=2, sort_keys=True) + "\n")
        return path, truth_path


def _config_dict(c: SimConfig) -> dict:
    p = c.params
    return {
        "mu_a": p.mu_a,
        "sigma_a": p.sigma_a,
        "mu_d": p.mu_d,
        "sigma_d": p.sigma_d,
        "m": c.m,
        "capacity": c.capacity,
        "initial_occupancy": c.initial_occupancy,
        "noise": c.noise,
    }


def simulate_corpus(
    stations: Mapping[str, Mapping[DayClass | str, SimConfig]],
    start: dt.date,
    n_days: int,
    seed: int = 0,
    anomalies: Sequence[tuple[str, dt.date, str]] = (),
    n_slots: int = SLOTS_PER_DAY,
) -> Corpus:
    """Generate a multi-station ingest CSV with ground truth.

    ``stations`` maps a station name to one :class:`SimConfig` per day class
    (the config's own seed is ignored; per-day seeds derive from ``seed``).
    ``anomalies`` injects sensor faults: ``"stuck"`` freezes the counter for the
    whole day, ``"holiday"`` keeps 5% of the demand, ``"gap"`` deletes five
    consecutive readings.  Stuck and holiday days are listed in the returned
    exclusion config; gap days are left for the slicer to drop.
    """
    if n_days < 0:
        raise InvalidConfig("n_days must be >= 0")
    faults = {}
    for station, day, kind in anomalies:
        if kind not in ANOMALY_KINDS:
            raise InvalidConfig(f"unknown anomaly kind {kind!r}")
        faults[(station, day)] = kind
    slot_minutes = 1440 // n_slots
    rows = []
    days_truth = []
    exclusions: dict[str, list] = {}
    names = sorted(stations)
    for si, station in enumerate(names):
        configs = {DayClass(k): v for k, v in stations[station].items()}
        for di in range(n_days):
            day = start + dt.timedelta(days=di)
            dc = DayClass.of(day)
            if dc not in configs:
                raise InvalidConfig(f"{station}: no config for {dc.value}")
            cfg = configs[dc]
            kind = faults.get((station, day))
            if kind == "holiday":
                cfg = replace(cfg, m=int(round(0.05 * cfg.m)))
            rng = np.random.default_rng(day_seed(seed, si, di))
            sim = simulate_day(cfg, n_slots, rng=rng)
            counts = np.rint(sim.occupancy).astype(np.int64)
            keep = np.ones(n_slots, dtype=bool)
            if kind == "stuck":
                counts[:] = counts[int(rng.integers(0, n_slots))]
            elif kind == "gap":
                first = int(rng.integers(0, n_slots - 5))
                keep[first : first + 5] = False
            if kind in ("stuck", "holiday"):
                exclusions.setdefault(station, []).append({"date": day.isoformat(), "reason": kind})
            midnight = dt.datetime.combine(day, dt.time())
            for i in range(n_slots):
                if keep[i]:
                    rows.append((station, midnight + dt.timedelta(minutes=slot_minutes * (i + 1)), counts[i]))
            days_truth.append(
                {
                    "station": station,
                    "date": day.isoformat(),
                    "day_class": dc.value,
                    "m": cfg.m,
                    "rejected": sim.rejected,
                    "lowest_net": sim.lowest_net,
                    "anomaly": kind,
                }
            )
    truth = {
        "seed": seed,
        "start": start.isoformat(),
        "n_days": n_days,
        "stations": {
            s: {DayClass(k).value: _config_dict(v) for k, v in stations[s].items()} for s in names
        },
        "days": days_truth,
        "exclusions": exclusions,
    }
    return Corpus(format_series_csv(rows), truth, exclusions)
