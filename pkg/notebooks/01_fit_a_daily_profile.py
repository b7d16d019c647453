"""
Fitting the arrival/departure model to daily occupancy
======================================================

A car park's occupancy on a commuter day rises in the morning and drains in
the evening.  The TN model describes that as the difference of two CDFs,
one for arrival times and one for departure times.  Here we simulate a few
weeks of a single station, fit the model and read the parameters back as
clock times.
"""

import datetime as dt
import io

import numpy as np

from parkcast import DayClass, TnParams, fit_tn, ingest, normalise, slice_days
from parkcast.clock import format_duration, format_hhmm, slot_times
from parkcast.models import tn_curve
from parkcast.simulator import SimConfig, simulate_corpus

# arrivals around 06:56, departures around 18:40
truth = TnParams.from_values(0.289, 0.053, 0.778, 0.128)
curve = tn_curve(slot_times(), truth)
print("share of the day's cars parked at 08:00, 12:00, 18:00:", np.round(curve[[15, 23, 35]], 3))

#############################################################################
# Simulated raw data
# ------------------
# Each day draws 500 arrival and departure times; the counter reads every
# 30 minutes and carries a little measurement noise.

weekday = SimConfig(truth, 500, initial_occupancy=12, noise=2.0)
quiet = SimConfig(TnParams.from_values(0.42, 0.1, 0.7, 0.15), 120, initial_occupancy=12)
corpus = simulate_corpus(
    {"Demo": {DayClass.WEEKDAY: weekday, DayClass.FRIDAY: weekday, DayClass.WEEKEND: quiet}},
    start=dt.date(2024, 1, 1),
    n_days=42,
    seed=1,
)
print(corpus.csv_text.splitlines()[:3])

#############################################################################
# Cleaning and normalising
# ------------------------
# Slicing gives one 48-slot profile per day.  The TN model is fitted on
# area-normalised weekdays with the overnight residue removed.

series = ingest(io.StringIO(corpus.csv_text))["Demo"]
profiles, dropped = slice_days(series)
weekdays = [normalise(p, "area") for p in profiles if p.day_class == DayClass.WEEKDAY]
print(f"{len(profiles)} usable days, {len(weekdays)} weekdays, {len(dropped)} dropped")

fit = fit_tn(weekdays)
p = fit.params
print("arrivals  ", format_hhmm(p.mu_a), "+/-", format_duration(p.sigma_a))
print("departures", format_hhmm(p.mu_d), "+/-", format_duration(p.sigma_d))
print(f"average loss per day {fit.loss_per_day:.2e}")

# fitted vs generating curve, both on the area scale
from parkcast.models import area_normalised_curve

gap = np.abs(area_normalised_curve(p) - area_normalised_curve(truth)).max()
print(f"largest slot difference to the generating shape: {gap:.2e}")
