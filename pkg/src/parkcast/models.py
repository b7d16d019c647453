"""TN and TNL occupancy curves.

The TN curve is the share of a day's cars present at time ``t``: the arrival
CDF minus the departure CDF.  The TNL curve lets only a fraction ``tau`` of
the arrivals in, rescaled so that the car park plateaus at 1 once it is full.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import truncnorm
from .clock import SLOTS_PER_DAY, format_duration, format_hhmm, slot_times
from .errors import InvalidParams, NoSaturation
from .truncnorm import TruncNormParams


@dataclass(frozen=True)
class TnParams:
    arrival: TruncNormParams
    departure: TruncNormParams

    @classmethod
    def from_values(cls, mu_a, sigma_a, mu_d, sigma_d) -> "TnParams":
        return cls(TruncNormParams(mu_a, sigma_a), TruncNormParams(mu_d, sigma_d))

    @property
    def mu_a(self):
        return self.arrival.mu

    @property
    def sigma_a(self):
        return self.arrival.sigma

    @property
    def mu_d(self):
        return self.departure.mu

    @property
    def sigma_d(self):
        return self.departure.sigma

    def as_tuple(self):
        return (self.mu_a, self.sigma_a, self.mu_d, self.sigma_d)

    def is_interpretable(self) -> bool:
        """False for fits whose locations leave the day or whose scales exceed it."""
        return all(0.0 <= m <= 1.0 for m in (self.mu_a, self.mu_d)) and max(
            self.sigma_a, self.sigma_d
        ) <= 1.0


@dataclass(frozen=True)
class TnlParams:
    base: TnParams
    tau: float

    def __post_init__(self):
        tau = float(self.tau)
        if not (0.0 < tau <= 1.0):
            raise InvalidParams(f"tau must be in (0, 1], got {self.tau!r}")
        object.__setattr__(self, "tau", tau)


def tn_curve(t, p: TnParams):
    """Normalised TN occupancy ``Phi_a(t) - Phi_d(t)``."""
    return truncnorm.cdf(t, p.arrival) - truncnorm.cdf(t, p.departure)


def limited_arrivals(t, arrival: TruncNormParams, tau: float):
    """Arrival CDF of the cars that still find a space: ``min(Phi_a / tau, 1)``."""
    return np.minimum(np.asarray(truncnorm.cdf(t, arrival)) / tau, 1.0)


def tnl_curve(t, p: TnlParams):
    out = limited_arrivals(t, p.base.arrival, p.tau) - truncnorm.cdf(t, p.base.departure)
    return out if np.ndim(out) else float(out)


def saturation_time(p: TnlParams) -> float:
    """Time ``t_L`` at which the arrival CDF reaches ``tau``."""
    if p.tau >= 1.0:
        raise NoSaturation("tau = 1: the car park never fills")
    return float(truncnorm.quantile(p.tau, p.base.arrival))


def area_normalised_curve(p: TnParams, n_slots: int = SLOTS_PER_DAY) -> np.ndarray:
    """TN curve on the slot grid rescaled to sum to one, matching area-normalised data."""
    f = tn_curve(slot_times(n_slots), p)
    total = f.sum()
    if not (np.isfinite(total) and total > 0):
        return np.full(n_slots, np.nan)
    return f / total


@dataclass
class ModelRecord:
    """Serialisable result of a fit for one station and day class.

    Times are stored as unit-day fractions with ``hh:mm`` mirrors for reading.
    """

    station: str
    day_class: str
    model: str
    params: TnParams
    beta2: float
    tau_per_day: dict[str, float] | None = None
    loss_per_day: float | None = None
    n_days: int | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def mean_tau(self) -> float | None:
        if not self.tau_per_day:
            return None
        return float(np.mean(list(self.tau_per_day.values())))

    def display_params(self):
        """TNL parameters using the mean daily tau, or the TN parameters."""
        tau = self.mean_tau
        if self.model == "TNL" and tau is not None:
            return TnlParams(self.params, tau)
        return self.params

    def to_dict(self) -> dict:
        p = self.params
        out = {
            "station": self.station,
            "day_class": self.day_class,
            "model": self.model,
            "mu_a": p.mu_a,
            "sigma_a": p.sigma_a,
            "mu_d": p.mu_d,
            "sigma_d": p.sigma_d,
            "mu_a_hhmm": format_hhmm(p.mu_a),
            "sigma_a_hhmm": format_duration(p.sigma_a),
            "mu_d_hhmm": format_hhmm(p.mu_d),
            "sigma_d_hhmm": format_duration(p.sigma_d),
            "beta2": self.beta2,
        }
        if self.tau_per_day is not None:
            out["tau_per_day"] = dict(sorted(self.tau_per_day.items()))
            out["mean_tau"] = self.mean_tau
        if self.loss_per_day is not None:
            out["loss_per_day"] = self.loss_per_day
        if self.n_days is not None:
            out["n_days"] = self.n_days
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ModelRecord":
        if d.get("model") not in ("TN", "TNL"):
            raise InvalidParams(f"unknown model {d.get('model')!r}")
        return cls(
            station=d["station"],
            day_class=d["day_class"],
            model=d["model"],
            params=TnParams.from_values(d["mu_a"], d["sigma_a"], d["mu_d"], d["sigma_d"]),
            beta2=float(d.get("beta2", math.nan)),
            tau_per_day=d.get("tau_per_day"),
            loss_per_day=d.get("loss_per_day"),
            n_days=d.get("n_days"),
            warnings=list(d.get("warnings", [])),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
