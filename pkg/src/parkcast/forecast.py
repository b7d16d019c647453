"""Condition a trained curve on the observed part of a day.

A curve ``f`` on the slot grid is mapped to car counts by the affine map
``beta0 + beta1 * f`` fitted by least squares on slots ``1..h``.  For the TNL
model only the arrival CDF is fitted, and only up to the first slot where the
day reaches its running maximum; the saturation fraction and the excess
demand then follow from the capacity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import truncnorm
from .clock import SLOTS_PER_DAY, slot_times, slot_to_hhmm
from .errors import InvalidParams, SingularFit
from .models import TnParams, tn_curve

MIN_WINDOW = 3
BETA1_FLOOR = 1e-9
TAU_MIN = 1e-9
PREDICTION_HEADER = ("station", "date", "start_hh:mm", "slot", "predicted", "observed", "abs_err_pct", "excess")

DEFAULT_PREDICTION_STARTS = ("07:00", "15:00", "19:00")


@dataclass
class PredictionFit:
    """Affine conditioning of a curve on observed slots ``1..fit_window_end``.

    ``prediction`` holds the conditioned curve in counts for every slot of the
    day (in-sample for slots up to the window end).
    """

    beta0: float
    beta1: float
    fit_window_end: int
    prediction: np.ndarray
    model: str = "TN"
    tau_i: float | None = None
    t_L: float | None = None
    excess: float | None = None
    flags: set = field(default_factory=set)

    def predict(self, slots=None) -> np.ndarray:
        """Predicted counts at 1-based ``slots`` (default: the whole day)."""
        if slots is None:
            return self.prediction.copy()
        return self.prediction[np.asarray(slots) - 1]


def _window(observed, h):
    o = np.asarray(observed, dtype=float)
    if h is None:
        h = len(o)
    if h < MIN_WINDOW:
        raise InvalidParams(f"need at least {MIN_WINDOW} observed slots, got h={h}")
    if len(o) < h:
        raise InvalidParams(f"only {len(o)} observations for h={h}")
    return o, int(h)


def fit_affine(o: np.ndarray, f: np.ndarray):
    """Least-squares ``(beta0, beta1)`` of ``o ~ beta0 + beta1 f`` with ``beta1 > 0``.

    Returns ``(beta0, beta1, flags)``.  A non-positive slope is replaced by
    ``BETA1_FLOOR`` with the intercept refitted, flagged ``LowSignal``.
    """
    o = np.asarray(o, dtype=float)
    f = np.asarray(f, dtype=float)
    fc = f - f.mean()
    sff = float(fc @ fc)
    scale = max(1.0, float(np.max(np.abs(f))))
    if not np.isfinite(sff) or sff <= (1e-12 * scale) ** 2 * len(f):
        raise SingularFit("conditioning curve is constant over the fit window")
    beta1 = float(fc @ (o - o.mean())) / sff
    flags = set()
    if not beta1 > 0:
        beta1 = BETA1_FLOOR
        flags.add("LowSignal")
    beta0 = float(np.mean(o - beta1 * f))
    return beta0, beta1, flags


def condition_curve(observed, curve, h=None, model="AVG") -> PredictionFit:
    """Shift and rescale an arbitrary slot curve (e.g. an average profile) to the day."""
    o, h = _window(observed, h)
    curve = np.asarray(curve, dtype=float)
    beta0, beta1, flags = fit_affine(o[:h], curve[:h])
    return PredictionFit(beta0, beta1, h, beta0 + beta1 * curve, model=model, flags=flags)


def condition_tn(observed, p: TnParams, h=None, n_slots: int = SLOTS_PER_DAY) -> PredictionFit:
    """Condition the TN curve on ``observed[:h]``; ``beta1`` is then the day's demand in cars."""
    return condition_curve(observed, tn_curve(slot_times(n_slots), p), h, model="TN")


def condition_tnl(
    observed, p: TnParams, capacity: float, h=None, n_slots: int = SLOTS_PER_DAY
) -> PredictionFit:
    """Condition the TNL model and estimate saturation time and excess demand.

    ``capacity`` stands in for the day's maximum occupancy: the rated
    capacity or the station's historical maximum.
    """
    o, h = _window(observed, h)
    grid = slot_times(n_slots)
    arrivals = truncnorm.cdf(grid, p.arrival)
    departures = truncnorm.cdf(grid, p.departure)
    t_m = int(np.argmax(o[:h])) + 1  # first slot attaining the running maximum
    m = min(h, t_m)
    if m < 2:
        raise SingularFit(f"occupancy peaks at slot {t_m}; nothing to fit before it")
    beta0, beta1, flags = fit_affine(o[:m], arrivals[:m])
    tau = (float(capacity) - beta0) / beta1
    tau = min(max(tau, TAU_MIN), 1.0)
    t_L = float(truncnorm.quantile(tau, p.arrival)) if tau < 1.0 else None
    prediction = beta0 + beta1 * (np.minimum(arrivals, tau) - tau * departures)
    fit = PredictionFit(
        beta0,
        beta1,
        m,
        prediction,
        model="TNL",
        tau_i=tau,
        t_L=t_L,
        flags=flags,
    )
    fit.excess = excess(fit, capacity)
    return fit


def persistence(observed, h=None, n_slots: int = SLOTS_PER_DAY) -> PredictionFit:
    """Fallback when a curve cannot be conditioned: repeat the last observation."""
    o = np.asarray(observed, dtype=float)
    h = len(o) if h is None else int(h)
    last = float(o[h - 1])
    return PredictionFit(last, 0.0, h, np.full(n_slots, last), model="PERSIST", flags={"Persistence"})


def excess(fit: PredictionFit, max_obs: float) -> float:
    """Cars predicted to arrive after the car park is full, never negative."""
    return max(fit.beta1 + fit.beta0 - float(max_obs), 0.0)


def nowcast_error(observed, fit: PredictionFit, h: int, w: int = 2, max_T=None) -> float:
    """Relative nowcast error in percent over slots ``h..h+w`` inclusive.

    The denominator is ``w * max_T`` where ``max_T`` defaults to the day's
    observed maximum.
    """
    slots = np.arange(h, h + w + 1)
    if h < 1 or h + w > len(fit.prediction):
        raise InvalidParams(f"window h={h}, w={w} does not fit in {len(fit.prediction)} slots")
    return window_error(observed, fit.predict(slots), h, w, max_T)


def window_error(observed, predicted, h: int, w: int = 2, max_T=None) -> float:
    """Same metric as :func:`nowcast_error` for forecasts of slots ``h..h+w`` given directly."""
    o = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if w < 1:
        raise InvalidParams("w must be >= 1")
    if h < 1 or h + w > len(o):
        raise InvalidParams(f"window h={h}, w={w} does not fit in {len(o)} slots")
    if predicted.shape != (w + 1,):
        raise InvalidParams(f"expected {w + 1} predictions, got {predicted.shape}")
    if max_T is None:
        max_T = float(np.max(o))
    if max_T <= 0:
        raise InvalidParams("maximum occupancy must be positive")
    resid = np.abs(o[h - 1 : h + w] - predicted)
    return float(resid.sum() / (w * max_T) * 100.0)


def prediction_rows(station, date, observed, fit: PredictionFit, start_slot: int, station_max: float):
    """Rows of the prediction CSV for every slot after ``start_slot``."""
    o = np.asarray(observed, dtype=float)
    start = slot_to_hhmm(start_slot, len(o))
    exc = "" if fit.excess is None else repr(float(fit.excess))
    rows = []
    for slot in range(start_slot + 1, len(o) + 1):
        pred = float(fit.prediction[slot - 1])
        err = abs(o[slot - 1] - pred) / station_max * 100.0
        rows.append((station, str(date), start, slot, repr(pred), repr(float(o[slot - 1])), repr(err), exc))
    return rows


def write_prediction_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PREDICTION_HEADER)
    w.writerows(rows)
