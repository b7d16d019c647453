"""``parkcast`` command line: ingest, fit, eval, predict, nowcast, simulate, report.

Every command writes its artifacts under ``--out`` together with a
``manifest.<command>.json`` recording input hashes, the resolved
configuration and library versions.  The manifest's ``created`` field is the
only output that changes between identical runs.

Exit status: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import logging
import os
import platform
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .baselines import build_average
from .clock import SLOTS_PER_DAY, hhmm_to_slot, slot_times
from .data import (
    DayClass,
    OccupancyProfile,
    dump_exclusions,
    ingest,
    load_exclusions,
    normalise_all,
    select,
    slice_days,
    split_train_test,
    station_max,
    write_profiles_csv,
)
from .errors import DataError, InsufficientData, InvalidConfig, LengthMismatch, OptimizerDiverged, ParkcastError
from .evaluation import (
    ERRORS_HEADER,
    TN_SWEEP,
    TNL_SWEEP,
    AverageNowcaster,
    LinRegNowcaster,
    SweepResult,
    TnlNowcaster,
    TnNowcaster,
    fit_errors_by_class,
    nowcast_sweep,
    report as write_report,
    sweep_slots,
)
from .fitting import fit_tn, fit_tnl
from .forecast import PredictionFit, prediction_rows, write_prediction_csv
from .models import ModelRecord, TnParams, area_normalised_curve, tnl_curve
from .simulator import SimConfig, simulate_corpus

log = logging.getLogger("parkcast")

MODELS = ("tn", "tnl", "avg", "lreg")
DEFAULTS = {
    "input": None,
    "exclusions": None,
    "out": "parkcast-out",
    "station": None,
    "day_class": None,
    "model": None,
    "test_weeks": 3,
    "start": None,
    "window": 2,
    "seed": 0,
    "jobs": 1,
    "capacity": None,
    "min_days": 5,
    "stations": 4,
    "weeks": 12,
    "saturate": None,
    "anomalies": 0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser, *, data=True):
    # defaults are applied after merging the config file, so flags stay None here
    p.add_argument("--config", help="JSON file with any of these options; flags take precedence")
    p.add_argument("--out", help=f"output directory (default {DEFAULTS['out']})")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--jobs", type=int, help="worker threads across stations and day classes (default 1)")
    if data:
        p.add_argument("--input", help="occupancy CSV with columns station,timestamp,occupancy")
        p.add_argument("--exclusions", help='JSON {station: [{"date": ..., "reason": ...}]} of days to drop')
        p.add_argument("--station", help="restrict to one station")
        p.add_argument(
            "--class", dest="day_class", choices=[c.value for c in DayClass], help="restrict to one day class"
        )
        p.add_argument("--test-weeks", type=int, help="final weeks per station held out for testing (default 3)")
        p.add_argument("--min-days", type=int, help="minimum training days per fit (default 5)")
        p.add_argument(
            "--capacity",
            type=float,
            help="car-park capacity used for TNL conditioning and relative errors (default: observed maximum)",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parkcast", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"parkcast {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("ingest", help="clean a raw CSV into per-day profiles")
    _add_common(p)

    p = sub.add_parser("fit", help="fit TN or TNL parameters on the training weeks")
    _add_common(p)
    p.add_argument("--model", choices=("tn", "tnl"), help="model to fit (default: both)")

    p = sub.add_parser("eval", help="per-slot fit errors on the test weeks and parameter recovery on synthetic data")
    _add_common(p)
    p.add_argument("--model", choices=("tn", "tnl", "avg"), help="model to score (default: all)")

    p = sub.add_parser("predict", help="condition a model on a test day up to --start and predict the rest")
    _add_common(p)
    p.add_argument("--model", choices=MODELS, help="model (default tn)")
    p.add_argument("--start", help="time of the last observation, hh:mm (default 07:00)")

    p = sub.add_parser("nowcast", help="one-hour-ahead errors swept over the day")
    _add_common(p)
    p.add_argument("--model", choices=MODELS, help="model (default: all)")
    p.add_argument("--start", help="single start time hh:mm instead of the default sweep")
    p.add_argument("--window", type=int, help="slots ahead, w (default 2)")

    p = sub.add_parser("simulate", help="write a synthetic corpus with ground truth")
    _add_common(p, data=False)
    p.add_argument("--stations", type=int, help="number of stations (default 4)")
    p.add_argument("--weeks", type=int, help="weeks of data per station (default 12)")
    p.add_argument("--saturate", type=float, help="fraction of weekday demand that fits; omit for unlimited capacity")
    p.add_argument("--anomalies", type=int, help="stuck/holiday/gap days injected per station (default 0)")

    p = sub.add_parser("report", help="fit everything and write the parameter, loss and nowcast tables")
    _add_common(p)
    p.add_argument("--window", type=int, help="slots ahead, w (default 2)")
    return parser


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    config_path: str | None = None

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def sha256(self) -> str:
        return hashlib.sha256(json.dumps(self.values, sort_keys=True).encode()).hexdigest()


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the ``--config`` file and explicit flags, in that order."""
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    merged = {k: DEFAULTS[k] for k in given if k in DEFAULTS}
    if args.config:
        if not os.path.isfile(args.config):
            raise UsageError(f"config file not found: {args.config}")
        with open(args.config, encoding="utf-8") as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"{args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError(f"{args.config}: expected a JSON object")
        for k, v in file_cfg.items():
            key = k.replace("-", "_")
            key = "day_class" if key == "class" else key
            if key not in given:
                raise UsageError(f"{args.config}: unknown option {k!r} for {args.command}")
            merged[key] = v
    merged.update({k: v for k, v in given.items() if v is not None})
    cfg = RunConfig(args.command, merged, args.config)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    v = cfg.values
    if "input" in v:
        if not v["input"]:
            raise UsageError("--input is required")
        if not os.path.isfile(v["input"]):
            raise UsageError(f"input file not found: {v['input']}")
        if v.get("exclusions") and not os.path.isfile(v["exclusions"]):
            raise UsageError(f"exclusion file not found: {v['exclusions']}")
        if v["test_weeks"] < 1:
            raise UsageError("--test-weeks must be >= 1")
        if v["min_days"] < 1:
            raise UsageError("--min-days must be >= 1")
        if v.get("day_class") is not None and v["day_class"] not in [c.value for c in DayClass]:
            raise UsageError(f"unknown day class {v['day_class']!r}")
        if v.get("capacity") is not None and v["capacity"] <= 0:
            raise UsageError("--capacity must be positive")
    if v.get("model") is not None:
        allowed = {"fit": ("tn", "tnl"), "eval": ("tn", "tnl", "avg")}.get(cfg.command, MODELS)
        if v["model"] not in allowed:
            raise UsageError(f"--model must be one of {', '.join(allowed)}")
    if v.get("jobs", 1) < 1:
        raise UsageError("--jobs must be >= 1")
    if v.get("window") is not None and v["window"] < 1:
        raise UsageError("--window must be >= 1")
    if v.get("start") is not None:
        try:
            hhmm_to_slot(v["start"])
        except ValueError as exc:
            raise UsageError(f"--start: {exc}") from None
    if cfg.command == "simulate":
        if v["stations"] < 1 or v["weeks"] < 1:
            raise UsageError("--stations and --weeks must be >= 1")
        if v["saturate"] is not None and not 0 < v["saturate"] <= 1:
            raise UsageError("--saturate must be in (0, 1]")
        if v["anomalies"] < 0:
            raise UsageError("--anomalies must be >= 0")


# -- shared plumbing --------------------------------------------------------


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _slug(*parts) -> str:
    return "_".join(re.sub(r"[^A-Za-z0-9.-]+", "-", str(p)) for p in parts)


def _open_out(cfg: RunConfig, *parts):
    path = os.path.join(cfg.out, *parts)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def write_manifest(cfg: RunConfig, outputs: list[str]) -> str:
    import scipy

    inputs = {}
    for key, path in (("input", cfg.values.get("input")), ("exclusions", cfg.values.get("exclusions")),
                      ("config", cfg.config_path)):
        if path and os.path.isfile(path):
            inputs[key] = {"path": path, "sha256": _sha256(path)}
    manifest = {
        "command": cfg.command,
        "config": cfg.values,
        "config_sha256": cfg.sha256(),
        "inputs": inputs,
        "outputs": sorted(os.path.relpath(p, cfg.out) for p in outputs),
        "versions": {
            "parkcast": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "created": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path = _open_out(cfg, f"manifest.{cfg.command}.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_profiles(cfg: RunConfig):
    exclusions = load_exclusions(cfg.exclusions) if cfg.exclusions else None
    series = ingest(cfg.input)
    if cfg.station is not None and cfg.station not in series:
        raise InsufficientData(f"station {cfg.station!r} not in {cfg.input}")
    profiles, dropped = [], []
    for name in sorted(series):
        if cfg.station is not None and name != cfg.station:
            continue
        kept, lost = slice_days(series[name], exclusions)
        profiles.extend(kept)
        dropped.extend(lost)
    # constant days cannot be normalised either way; drop them once here
    _, degenerate = normalise_all(profiles, "max")
    bad = {(d.station, d.date) for d in degenerate}
    profiles = [p for p in profiles if (p.station, p.date) not in bad]
    dropped.extend(degenerate)
    for d in dropped:
        log.info("dropped %s %s: %s", d.station, d.date, d.reason)
    if not profiles:
        raise InsufficientData(f"no usable days in {cfg.input}")
    return profiles, dropped


def _classes(cfg) -> list[DayClass]:
    return [DayClass(cfg.day_class)] if cfg.day_class else list(DayClass)


@dataclass
class Group:
    """Training and test days of one station and day class, with lazily fitted models."""

    station: str
    day_class: DayClass
    train: list
    test: list
    station_max: float
    capacity: float
    records: dict = field(default_factory=dict)

    def normalised(self, mode):
        return normalise_all(self.train, mode)[0]

    def average(self):
        return build_average(self.normalised("area"))

    def curve(self, model: str) -> tuple[np.ndarray, str]:
        """Normalised model curve and the normalisation it lives in."""
        if model == "tn":
            return area_normalised_curve(self.records["tn"].params), "area"
        if model == "tnl":
            return tnl_curve(slot_times(SLOTS_PER_DAY), self.records["tnl"].display_params()), "max"
        if model == "avg":
            return self.average().values, "area"
        raise ValueError(model)

    def nowcaster(self, model: str):
        if model == "tn":
            return TnNowcaster(self.records["tn"].params)
        if model == "tnl":
            return TnlNowcaster(self.records["tnl"].params, self.capacity)
        if model == "avg":
            return AverageNowcaster(self.average())
        if model == "lreg":
            return LinRegNowcaster([p.raw for p in self.train], self.station_max)
        raise ValueError(model)


def make_groups(cfg: RunConfig, profiles) -> list[Group]:
    maxima = station_max(profiles)
    train, test = split_train_test(profiles, cfg.test_weeks, min_train=0)
    train_max = station_max(train)
    groups = []
    for station in sorted(maxima):
        for dc in _classes(cfg):
            tr = select(train, station, dc)
            if len(tr) < cfg.min_days:
                msg = f"{station} {dc.value}: {len(tr)} training days (need {cfg.min_days})"
                if cfg.day_class:
                    raise InsufficientData(msg)
                log.warning("skipping %s", msg)
                continue
            groups.append(
                Group(
                    station,
                    dc,
                    tr,
                    select(test, station, dc),
                    station_max=cfg.capacity or maxima[station],
                    capacity=cfg.capacity or train_max.get(station, maxima[station]),
                )
            )
    if not groups:
        raise InsufficientData("no station/day-class combination has enough training days")
    return groups


def _fingerprint(cfg: RunConfig, group: Group) -> str:
    key = {
        "input": _sha256(cfg.input),
        "exclusions": _sha256(cfg.exclusions) if cfg.exclusions else None,
        "test_weeks": cfg.test_weeks,
        "min_days": cfg.min_days,
        "dates": [p.date.isoformat() for p in group.train],
    }
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()


def _params_path(cfg, group: Group, model: str) -> str:
    return os.path.join(cfg.out, "params", _slug(group.station, group.day_class.value, model) + ".json")


def fit_group(cfg: RunConfig, group: Group, model: str, reuse=True) -> tuple[ModelRecord, list[str]]:
    """Fit (or reload a matching earlier fit of) one model for one group.

    Returns the record and the files written.
    """
    path = _params_path(cfg, group, model)
    metrics_path = path[:-5] + ".metrics.json"
    fingerprint = _fingerprint(cfg, group)
    if reuse and os.path.isfile(path) and os.path.isfile(metrics_path):
        with open(metrics_path, encoding="utf-8") as fh:
            metrics = json.load(fh)
        if metrics.get("fingerprint") == fingerprint:
            with open(path, encoding="utf-8") as fh:
                rec = ModelRecord.from_dict(json.load(fh))
            group.records[model] = rec
            log.info("reusing %s", path)
            return rec, []
    log.info("fitting %s %s %s on %d days", model.upper(), group.station, group.day_class.value, len(group.train))
    if model == "tn":
        fit = fit_tn(group.normalised("area"), cfg.min_days)
        tau = None
    else:
        fit = fit_tnl(group.normalised("max"), cfg.min_days)
        tau = fit.tau_per_day
    rec = ModelRecord(
        station=group.station,
        day_class=group.day_class.value,
        model=model.upper(),
        params=fit.params,
        beta2=fit.beta2,
        tau_per_day=tau,
        loss_per_day=fit.loss_per_day,
        n_days=fit.n_days,
        warnings=fit.warnings,
    )
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rec.dumps())
    metrics = {
        "fingerprint": fingerprint,
        "loss": fit.loss,
        "loss_per_day": fit.loss_per_day,
        "beta2": fit.beta2,
        "n_days": fit.n_days,
        "iterations": int(len(fit.trace)),
    }
    with open(metrics_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    group.records[model] = rec
    return rec, [path, metrics_path]


def _run_jobs(cfg, fn, items):
    if cfg.jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def fit_all(cfg, groups, models, reuse=True) -> list[str]:
    tasks = [(g, m) for g in groups for m in models]
    written = _run_jobs(cfg, lambda gm: fit_group(cfg, gm[0], gm[1], reuse)[1], tasks)
    return [p for w in written for p in w]


# -- commands ---------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> list[str]:
    profiles, dropped = load_profiles(cfg)
    if cfg.day_class:
        profiles = select(profiles, day_class=cfg.day_class)
    path = _open_out(cfg, "profiles.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_profiles_csv(profiles, fh)
    dpath = _open_out(cfg, "dropped.csv")
    with open(dpath, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("station", "date", "reason"))
        for d in sorted(dropped):
            w.writerow((d.station, d.date.isoformat(), d.reason))
    print(f"{len(profiles)} profiles, {len(dropped)} dropped days -> {path}")
    return [path, dpath]


def cmd_fit(cfg: RunConfig) -> list[str]:
    profiles, _ = load_profiles(cfg)
    groups = make_groups(cfg, profiles)
    models = [cfg.model] if cfg.model else ["tn", "tnl"]
    written = fit_all(cfg, groups, models, reuse=False)
    for g in groups:
        for m in models:
            r = g.records[m].to_dict()
            extra = f" tau={r['mean_tau']:.3f}" if "mean_tau" in r else ""
            print(
                f"{g.station} {g.day_class.value} {m.upper()}: "
                f"mu_a={r['mu_a_hhmm']} sigma_a={r['sigma_a_hhmm']} "
                f"mu_d={r['mu_d_hhmm']} sigma_d={r['sigma_d_hhmm']} loss/day={r['loss_per_day']:.3g}{extra}"
            )
    return written


RECOVERY_HEADER = ("station", "day_class", "model", "param", "true", "fitted", "abs_err", "rel_err")


def _truth_sidecar(cfg) -> dict | None:
    stem = cfg.input[:-4] if cfg.input.endswith(".csv") else cfg.input
    path = stem + ".truth.json"
    if not os.path.isfile(path):
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_eval(cfg: RunConfig) -> list[str]:
    profiles, _ = load_profiles(cfg)
    groups = make_groups(cfg, profiles)
    models = [cfg.model] if cfg.model else ["tn", "tnl", "avg"]
    written = fit_all(cfg, groups, [m for m in models if m != "avg"])
    reports = []
    for g in groups:
        if not g.test:
            log.warning("%s %s: no test days", g.station, g.day_class.value)
            continue
        for m in models:
            curve, mode = g.curve(m)
            reports.extend(fit_errors_by_class(g.test, {g.day_class: curve}, g.station_max, mode, model=m.upper()).values())
    path = _open_out(cfg, "eval", "fit_errors.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ERRORS_HEADER)
        for e in sorted(reports, key=lambda e: (e.station, e.day_class, e.model)):
            for i, (mean, std) in enumerate(zip(e.per_slot_mean_err_pct, e.per_slot_std_pct), start=1):
                w.writerow((e.station, e.day_class, e.model, i, repr(float(mean)), repr(float(std))))
    written.append(path)
    for e in sorted(reports, key=lambda e: (e.station, e.day_class, e.model)):
        print(f"{e.station} {e.day_class} {e.model}: mean error {e.day_mean_err_pct:.2f}% over {e.n_days} test days")

    truth = _truth_sidecar(cfg)
    if truth is not None:
        path = _open_out(cfg, "eval", "recovery.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECOVERY_HEADER)
            for g in groups:
                true = truth["stations"].get(g.station, {}).get(g.day_class.value)
                if true is None:
                    continue
                for m in sorted(g.records):
                    p = g.records[m].params
                    for name in ("mu_a", "sigma_a", "mu_d", "sigma_d"):
                        t, f = true[name], getattr(p, name)
                        w.writerow(
                            (g.station, g.day_class.value, m.upper(), name, repr(t), repr(f), repr(abs(f - t)), repr(abs(f - t) / t))
                        )
                        print(f"recovery {g.station} {g.day_class.value} {m.upper()} {name}: true {t:.4f} fitted {f:.4f}")
        written.append(path)
    return written


def cmd_predict(cfg: RunConfig) -> list[str]:
    profiles, _ = load_profiles(cfg)
    groups = make_groups(cfg, profiles)
    model = cfg.model or "tn"
    h = hhmm_to_slot(cfg.start or "07:00")
    if model in ("tn", "tnl"):
        fit_all(cfg, groups, [model])
    rows = []
    for g in groups:
        caster = g.nowcaster(model)
        for p in sorted(g.test, key=lambda p: p.date):
            o = np.asarray(p.raw, dtype=float)
            if model == "lreg":
                full = np.full(len(o), np.nan)
                full[h:] = caster.predict(o, h, np.arange(h + 1, len(o) + 1))
                fit = PredictionFit(np.nan, np.nan, h, full, model="LREG")
            else:
                try:
                    fit = caster.fit(o, h)
                except ParkcastError as exc:
                    log.warning("%s %s: %s", g.station, p.date, exc)
                    continue
            rows.extend(prediction_rows(g.station, p.date.isoformat(), o, fit, h, g.station_max))
    path = _open_out(cfg, f"predictions_{model}.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_prediction_csv(rows, fh)
    print(f"{len(rows)} predicted slots -> {path}")
    return [path]


def _sweep(cfg, groups, models, w) -> SweepResult:
    if cfg.values.get("start"):
        starts = {m: [hhmm_to_slot(cfg.start)] for m in models}
    else:
        starts = {m: sweep_slots(*(TNL_SWEEP if m == "tnl" else TN_SWEEP)) for m in models}
    result = SweepResult()

    def run(g):
        out = SweepResult()
        for m in models:
            out.records.extend(nowcast_sweep(g.test, {m.upper(): g.nowcaster(m)}, starts[m], w).records)
        return out

    for part in _run_jobs(cfg, run, groups):
        result.records.extend(part.records)
    return result


def cmd_nowcast(cfg: RunConfig) -> list[str]:
    profiles, _ = load_profiles(cfg)
    groups = make_groups(cfg, profiles)
    models = [cfg.model] if cfg.model else list(MODELS)
    written = fit_all(cfg, groups, [m for m in models if m in ("tn", "tnl")])
    result = _sweep(cfg, groups, models, cfg.window)
    path = _open_out(cfg, "nowcast.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        result.write_csv(fh)
    written.append(path)
    for s in result.summary():
        print(f"{s['station']} {s['day_class']} {s['model']}: median {s['median']:.2f}% (n={s['n']})")
    return written


def _station_configs(rng, n: int, saturate):
    out = {}
    for k in range(n):
        mu_a, sigma_a = rng.uniform(0.27, 0.32), rng.uniform(0.04, 0.07)
        mu_d, sigma_d = rng.uniform(0.72, 0.80), rng.uniform(0.10, 0.14)
        m = int(rng.integers(300, 800))
        init = int(rng.integers(5, 30))
        cap = None if saturate is None else init + int(round(saturate * m))
        weekday = TnParams.from_values(mu_a, sigma_a, mu_d, sigma_d)
        friday = TnParams.from_values(mu_a + 0.01, sigma_a, mu_d - 0.04, sigma_d * 1.1)
        weekend = TnParams.from_values(0.42, 0.10, 0.70, 0.15)
        out[f"S{k + 1:02d}"] = {
            DayClass.WEEKDAY: SimConfig(weekday, m, cap, init, noise=2.0),
            DayClass.FRIDAY: SimConfig(friday, int(0.85 * m), cap, init, noise=2.0),
            DayClass.WEEKEND: SimConfig(weekend, int(0.25 * m), cap, init, noise=2.0),
        }
    return out


def cmd_simulate(cfg: RunConfig) -> list[str]:
    rng = np.random.default_rng(cfg.seed)
    stations = _station_configs(rng, cfg.stations, cfg.saturate)
    start = dt.date(2024, 1, 1)  # a Monday
    n_days = 7 * cfg.weeks
    anomalies = []
    kinds = ("stuck", "holiday", "gap")
    for name in sorted(stations):
        # keep faults out of the final three weeks so the test window stays clean
        span = max(n_days - 21, 1)
        days = rng.choice(span, size=min(cfg.anomalies, span), replace=False)
        for j, d in enumerate(sorted(days)):
            anomalies.append((name, start + dt.timedelta(days=int(d)), kinds[j % 3]))
    corpus = simulate_corpus(stations, start, n_days, seed=cfg.seed, anomalies=anomalies)
    os.makedirs(cfg.out, exist_ok=True)
    csv_path, truth_path = corpus.write(os.path.join(cfg.out, "sim.csv"))
    excl_path = os.path.join(cfg.out, "sim.exclusions.json")
    with open(excl_path, "w", encoding="utf-8") as fh:
        fh.write(dump_exclusions({s: {dt.date.fromisoformat(e["date"]): e["reason"] for e in v} for s, v in corpus.exclusions.items()}))
    print(f"{cfg.stations} stations x {n_days} days -> {csv_path}")
    return [csv_path, truth_path, excl_path]


def cmd_report(cfg: RunConfig) -> list[str]:
    profiles, _ = load_profiles(cfg)
    groups = make_groups(cfg, profiles)
    written = fit_all(cfg, groups, ["tn", "tnl"])
    reports, figures = [], {}
    for g in groups:
        curves = {m: g.curve(m) for m in ("tn", "tnl", "avg")}
        if g.test:
            for m, (curve, mode) in curves.items():
                reports.extend(
                    fit_errors_by_class(g.test, {g.day_class: curve}, g.station_max, mode, model=m.upper()).values()
                )
        series = {m.upper(): curves[m][0] for m in curves}
        series["AVG_MAX"] = build_average(g.normalised("max")).values
        figures[_slug("curves", g.station, g.day_class.value)] = series
    sweep = _sweep(cfg, groups, list(MODELS), cfg.window)
    records = [r for g in groups for r in g.records.values()]
    written.extend(write_report(cfg.out, records, sweep, reports, figures))
    print(f"report for {len(groups)} station/day-class groups -> {cfg.out}")
    return written


COMMANDS = {
    "ingest": cmd_ingest,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "nowcast": cmd_nowcast,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def _setup_logging():
    raw = os.environ.get("PARKCAST_LOG", "WARNING").strip().upper()
    level = int(raw) if raw.isdigit() else logging.getLevelName(raw)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(level)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        outputs = COMMANDS[cfg.command](cfg)
        write_manifest(cfg, outputs)
    except (UsageError, InvalidConfig) as exc:
        parser.print_usage(sys.stderr)
        print(f"parkcast: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, LengthMismatch, OptimizerDiverged) as exc:
        print(f"parkcast: data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
