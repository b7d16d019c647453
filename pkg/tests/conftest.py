import datetime as dt

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from parkcast.clock import slot_times
from parkcast.data import DayClass, OccupancyProfile, normalise
from parkcast.models import TnlParams, TnParams, tn_curve, tnl_curve

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Vilanova weekday shape, in unit-day fractions
VILANOVA = TnParams.from_values(0.289, 0.053, 0.778, 0.128)


def weekdays(n, start=dt.date(2024, 1, 1), day_class=DayClass.WEEKDAY):
    out, d = [], start
    while len(out) < n:
        if DayClass.of(d) == day_class:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def profiles_from(rows, station="X", start=dt.date(2024, 1, 1), mode=None, baseline="subtract_day_min"):
    """Wrap ``(N, 48)`` rows as weekday profiles, optionally normalised."""
    out = []
    for d, r in zip(weekdays(len(rows), start), np.asarray(rows, dtype=float)):
        p = OccupancyProfile(station, d, DayClass.WEEKDAY, r)
        out.append(normalise(p, mode, baseline) if mode else p)
    return out


def tn_days(p: TnParams, n, noise, seed):
    """Fraction-of-demand TN days with Gaussian noise, area-normalised."""
    rng = np.random.default_rng(seed)
    f = tn_curve(slot_times(), p)
    return profiles_from(f + rng.normal(0, noise, (n, f.size)), mode="area")


def tnl_days(p: TnParams, taus, noise, seed, baseline="subtract_day_min"):
    """Peak-one TNL days with Gaussian noise, max-normalised."""
    rng = np.random.default_rng(seed)
    t = slot_times()
    rows = [tnl_curve(t, TnlParams(p, tau)) + rng.normal(0, noise, t.size) for tau in taus]
    return profiles_from(rows, mode="max", baseline=baseline)


@pytest.fixture
def vilanova():
    return VILANOVA


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    def record(name, ok, detail=""):
        tag = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        line = f"{tag}  {name}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
