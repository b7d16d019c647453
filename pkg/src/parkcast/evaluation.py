"""Error metrics, nowcast sweeps and table/figure export.

Fit errors are absolute residuals in percent of a station's maximum
occupancy.  By default that maximum is the largest count observed over the
station's cleaned data; callers can pass a rated capacity instead.
"""

from __future__ import annotations

import csv
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .baselines import AverageProfile, LinRegCache, predict_linreg
from .clock import SLOTS_PER_DAY, hhmm_to_slot, slot_to_hhmm
from .data import DayClass, OccupancyProfile, normalise
from .errors import LengthMismatch, SingularFit
from .forecast import (
    PredictionFit,
    condition_curve,
    condition_tn,
    condition_tnl,
    persistence,
    window_error,
)
from .models import ModelRecord, TnParams

TN_SWEEP = ("07:00", "23:00")
TNL_SWEEP = ("07:00", "15:00")
NOWCAST_HEADER = ("station", "date", "day_class", "start", "model", "error_pct")


@dataclass
class ErrorReport:
    station: str
    day_class: str | None
    model: str
    per_slot_mean_err_pct: np.ndarray
    per_slot_std_pct: np.ndarray
    day_mean_err_pct: float
    n_days: int


def fit_error(observed, model_counts, station_max: float, station="", day_class=None, model="") -> ErrorReport:
    """Per-slot mean and std of ``|o - model| / station_max * 100`` over test days.

    ``observed`` is ``(N, T)`` raw counts, ``model_counts`` one shared ``(T,)``
    curve or one curve per day.
    """
    obs = np.atleast_2d(np.asarray(observed, dtype=float))
    mod = np.asarray(model_counts, dtype=float)
    if mod.shape[-1] != obs.shape[1] or (mod.ndim == 2 and mod.shape != obs.shape):
        raise LengthMismatch(f"model shape {mod.shape} does not match observations {obs.shape}")
    if station_max <= 0:
        raise ValueError("station_max must be positive")
    err = np.abs(obs - mod) / station_max * 100.0
    return ErrorReport(
        station=station,
        day_class=None if day_class is None else DayClass(day_class).value,
        model=model,
        per_slot_mean_err_pct=err.mean(axis=0),
        per_slot_std_pct=err.std(axis=0),
        day_mean_err_pct=float(err.mean()),
        n_days=obs.shape[0],
    )


def model_counts_for_day(profile: OccupancyProfile, curve, mode: str, baseline: str = "subtract_day_min"):
    """Map a normalised model curve onto a test day's own count scale."""
    ref = normalise(profile, mode, baseline)
    return ref.denormalise(curve)


def fit_errors_by_class(
    profiles: Sequence[OccupancyProfile],
    curves: Mapping[DayClass | str, np.ndarray],
    station_max: float,
    mode: str,
    baseline: str = "subtract_day_min",
    model: str = "",
) -> dict[DayClass, ErrorReport]:
    """Group test days by class and score each against its class's curve."""
    curves = {DayClass(k): np.asarray(v, dtype=float) for k, v in curves.items()}
    by_class = defaultdict(list)
    for p in profiles:
        if p.day_class in curves:
            by_class[p.day_class].append(p)
    out = {}
    for dc in DayClass:
        days = by_class.get(dc)
        if not days:
            continue
        obs = np.array([p.raw for p in days])
        mod = np.array([model_counts_for_day(p, curves[dc], mode, baseline) for p in days])
        out[dc] = fit_error(obs, mod, station_max, days[0].station, dc, model)
    return out


# -- nowcasting -------------------------------------------------------------


class Nowcaster:
    """Forecasts slots ``h..h+w`` of a day from its first ``h`` observations."""

    name = "?"

    def fit(self, observed, h) -> PredictionFit:
        raise NotImplementedError

    def predict(self, observed, h: int, slots) -> np.ndarray:
        try:
            fit = self.fit(observed, h)
        except SingularFit:
            fit = persistence(observed, h, len(observed))
        return fit.predict(slots)


class TnNowcaster(Nowcaster):
    name = "TN"

    def __init__(self, params: TnParams):
        self.params = params

    def fit(self, observed, h):
        return condition_tn(observed[:h], self.params, h, len(observed))


class TnlNowcaster(Nowcaster):
    name = "TNL"

    def __init__(self, params: TnParams, capacity: float):
        self.params = params
        self.capacity = capacity

    def fit(self, observed, h):
        return condition_tnl(observed[:h], self.params, self.capacity, h, len(observed))


class AverageNowcaster(Nowcaster):
    name = "AVG"

    def __init__(self, avg: AverageProfile):
        self.avg = avg

    def fit(self, observed, h):
        return condition_curve(observed[:h], self.avg.values, h, model="AVG")


class LinRegNowcaster(Nowcaster):
    """Regression on counts divided by a fixed per-station ``scale``."""

    name = "LREG"

    def __init__(self, train_counts, scale: float):
        self.scale = float(scale)
        self.cache = LinRegCache(np.asarray(train_counts, dtype=float) / self.scale)

    def predict(self, observed, h, slots):
        o = np.asarray(observed, dtype=float) / self.scale
        return predict_linreg(o[:h], self.cache, h, slots) * self.scale


@dataclass
class SweepResult:
    records: list[tuple] = field(default_factory=list)  # (station, date, day_class, start_slot, model, err)

    def errors(self, model, station=None, day_class=None) -> np.ndarray:
        dc = None if day_class is None else DayClass(day_class).value
        return np.array(
            [
                r[5]
                for r in self.records
                if r[4] == model and (station is None or r[0] == station) and (dc is None or r[2] == dc)
            ]
        )

    def models(self) -> list[str]:
        return sorted({r[4] for r in self.records})

    def groups(self) -> list[tuple[str, str]]:
        return sorted({(r[0], r[2]) for r in self.records})

    def summary(self) -> list[dict]:
        """Violin statistics per (station, day class, model)."""
        out = []
        for station, dc in self.groups():
            for model in self.models():
                e = self.errors(model, station, dc)
                if e.size == 0:
                    continue
                out.append(
                    dict(
                        station=station,
                        day_class=dc,
                        model=model,
                        n=int(e.size),
                        mean=float(e.mean()),
                        median=float(np.median(e)),
                        q25=float(np.percentile(e, 25)),
                        q75=float(np.percentile(e, 75)),
                    )
                )
        return out

    def win_rate(self, a: str, b: str, station=None, day_class=None) -> float:
        """Share of matched instances where ``a`` has the strictly lower error; ties count half."""
        return _win_rate(self._paired(a, b, station, day_class))

    def _paired(self, a, b, station, day_class):
        dc = None if day_class is None else DayClass(day_class).value
        by_key = defaultdict(dict)
        for s, d, c, h, m, e in self.records:
            if m in (a, b) and (station is None or s == station) and (dc is None or c == dc):
                by_key[(s, d, h)][m] = e
        return [(v[a], v[b]) for _, v in sorted(by_key.items()) if a in v and b in v]

    def win_rates(self) -> list[dict]:
        out = []
        for station, dc in self.groups():
            for a, b in combinations(self.models(), 2):
                pairs = self._paired(a, b, station, dc)
                if not pairs:
                    continue
                for x, y, swap in ((a, b, False), (b, a, True)):
                    pp = [(q, p) for p, q in pairs] if swap else pairs
                    out.append(
                        dict(station=station, day_class=dc, model_a=x, model_b=y, n=len(pp), win_rate=_win_rate(pp))
                    )
        return out

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NOWCAST_HEADER)
        for s, d, c, h, m, e in sorted(self.records, key=lambda r: (r[0], r[1], r[3], r[4])):
            w.writerow((s, d, c, slot_to_hhmm(h), m, repr(float(e))))


def _win_rate(pairs) -> float:
    if not pairs:
        return float("nan")
    ea = np.array([p[0] for p in pairs])
    eb = np.array([p[1] for p in pairs])
    return float(np.mean(np.where(ea < eb, 1.0, np.where(ea == eb, 0.5, 0.0))))


def sweep_slots(start="07:00", end="23:00", n_slots: int = SLOTS_PER_DAY) -> list[int]:
    """Start slots from ``start`` to ``end`` inclusive on the 30-minute grid."""
    return list(range(hhmm_to_slot(start, n_slots), hhmm_to_slot(end, n_slots) + 1))


def nowcast_sweep(
    test: Sequence[OccupancyProfile],
    models: Mapping[str, Nowcaster] | Iterable[Nowcaster],
    starts: Sequence[int],
    w: int = 2,
    jobs: int = 1,
) -> SweepResult:
    """Nowcast error of every model at every start slot of every test day.

    Errors use the day's own maximum as the denominator.  Starts whose window
    would run past the end of the day are skipped.
    """
    if not isinstance(models, Mapping):
        models = {m.name: m for m in models}

    def one_day(p: OccupancyProfile):
        o = np.asarray(p.raw, dtype=float)
        rows = []
        if np.max(o) <= 0:
            return rows
        for h in starts:
            if h + w > len(o):
                continue
            slots = np.arange(h, h + w + 1)
            for name in sorted(models):
                pred = models[name].predict(o, h, slots)
                rows.append((p.station, p.date.isoformat(), p.day_class.value, int(h), name, window_error(o, pred, h, w)))
        return rows

    ordered = sorted(test, key=lambda p: (p.station, p.date))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(one_day, ordered))
    else:
        chunks = [one_day(p) for p in ordered]
    return SweepResult([r for c in chunks for r in c])


# -- export -----------------------------------------------------------------

PARAMS_HEADER = (
    "station", "day_class", "mu_a", "sigma_a", "mu_d", "sigma_d",
    "mu_a_hhmm", "sigma_a_hhmm", "mu_d_hhmm", "sigma_d_hhmm", "beta2", "non_interpretable",
)
LOSS_HEADER = ("station", "day_class", "model", "loss_per_day", "n_days")
MEDIANS_HEADER = ("station", "day_class", "model", "n", "mean", "median", "q25", "q75")
WINRATE_HEADER = ("station", "day_class", "model_a", "model_b", "n", "win_rate")
ERRORS_HEADER = ("station", "day_class", "model", "slot", "mean_err_pct", "std_err_pct")
FIGURE_HEADER = ("series", "slot", "value")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path, header, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _record_key(r: ModelRecord):
    order = {c.value: i for i, c in enumerate(DayClass)}
    return (r.station, order.get(r.day_class, 99), r.model)


def report(
    outdir,
    records: Sequence[ModelRecord] = (),
    sweep: SweepResult | None = None,
    error_reports: Sequence[ErrorReport] = (),
    figures: Mapping[str, Mapping[str, Sequence[float]]] | None = None,
) -> list[str]:
    """Write the tables and figure data under ``outdir``; returns the paths written.

    ``figures`` maps a figure name to named series; each becomes
    ``figures/<name>.csv`` in long ``series,slot,value`` format.
    """
    outdir = os.fspath(outdir)
    written = []
    recs = sorted(records, key=_record_key)

    def params_rows(model):
        for r in recs:
            if r.model != model:
                continue
            d = r.to_dict()
            row = [d[k] for k in PARAMS_HEADER[:-1]] + [int(bool(r.warnings))]
            if model == "TNL":
                row.append(r.mean_tau)
            yield row

    path = os.path.join(outdir, "tables", "params_tn.csv")
    _write(path, PARAMS_HEADER, params_rows("TN"))
    written.append(path)
    path = os.path.join(outdir, "tables", "params_tnl.csv")
    _write(path, PARAMS_HEADER + ("mean_tau",), params_rows("TNL"))
    written.append(path)
    path = os.path.join(outdir, "tables", "loss.csv")
    _write(path, LOSS_HEADER, ((r.station, r.day_class, r.model, r.loss_per_day, r.n_days) for r in recs))
    written.append(path)

    summary = sweep.summary() if sweep is not None else []
    path = os.path.join(outdir, "tables", "nowcast_medians.csv")
    _write(path, MEDIANS_HEADER, ([s[k] for k in MEDIANS_HEADER] for s in summary))
    written.append(path)
    rates = sweep.win_rates() if sweep is not None else []
    path = os.path.join(outdir, "tables", "nowcast_winrates.csv")
    _write(path, WINRATE_HEADER, ([s[k] for k in WINRATE_HEADER] for s in rates))
    written.append(path)

    def error_rows():
        for e in sorted(error_reports, key=lambda e: (e.station, e.day_class or "", e.model)):
            for i, (m, s) in enumerate(zip(e.per_slot_mean_err_pct, e.per_slot_std_pct), start=1):
                yield (e.station, e.day_class, e.model, i, float(m), float(s))

    path = os.path.join(outdir, "tables", "fit_errors.csv")
    _write(path, ERRORS_HEADER, error_rows())
    written.append(path)

    for name, series in sorted((figures or {}).items()):
        rows = [(label, i, float(v)) for label in sorted(series) for i, v in enumerate(series[label], start=1)]
        path = os.path.join(outdir, "figures", f"{name}.csv")
        _write(path, FIGURE_HEADER, rows)
        written.append(path)
    return written
