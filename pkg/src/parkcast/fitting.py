"""Least-squares estimation of TN and TNL parameters from training profiles.

Both fits minimise a sum of squared residuals with a multi-start Nelder-Mead
simplex over ``(mu_a, log sigma_a, mu_d, log sigma_d)``.  For TNL the per-day
saturation fractions are profiled out: given the shared parameters, each
day's ``tau`` minimises a piecewise quadratic in ``1 / tau`` and is found
exactly by scanning the segments between the sorted arrival-CDF values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .clock import slot_times
from .data import OccupancyProfile
from .errors import InsufficientData, LengthMismatch, OptimizerDiverged, ParkcastError
from .models import TnlParams, TnParams
from .truncnorm import SIGMA_MAX, TruncNormParams, cdf

log = logging.getLogger(__name__)

START_MU_A = (0.25, 0.33, 0.42)
START_MU_D = (0.67, 0.75, 0.83)
START_SIGMA_A = 0.05
START_SIGMA_D = 0.10
SIMPLEX_STEP = np.array([0.04, 0.4, 0.04, 0.4])
XATOL = 1e-7
FATOL = 1e-15
MAX_ITER = 2000
TAU_FLOOR = 0.05
MIN_DAYS = 5

_LOG_SIGMA_MIN = math.log(1e-4)
_LOG_SIGMA_MAX = math.log(SIGMA_MAX)


@dataclass
class TnFit:
    params: TnParams
    beta2: float
    loss: float
    loss_per_day: float
    n_days: int
    trace: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    warnings: list[str] = field(default_factory=list)


@dataclass
class TnlFit:
    params: TnParams
    tau: np.ndarray
    dates: list
    beta2: float
    loss: float
    loss_per_day: float
    n_days: int
    trace: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    warnings: list[str] = field(default_factory=list)

    @property
    def mean_tau(self) -> float:
        return float(np.mean(self.tau))

    @property
    def tau_per_day(self) -> dict[str, float]:
        out = {}
        for d, t in zip(self.dates, self.tau):
            key = str(d)
            k = 1
            while key in out:
                k += 1
                key = f"{d}#{k}"
            out[key] = float(t)
        return out

    def display_params(self) -> TnlParams:
        return TnlParams(self.params, self.mean_tau)


def loss(profiles, curve) -> tuple[float, float]:
    """Total and per-day sum of squared residuals against ``curve``.

    ``curve`` is one shared ``(T,)`` curve or one curve per day ``(N, T)``.
    """
    obs = _as_matrix(profiles)
    curve = np.asarray(curve, dtype=float)
    if curve.shape[-1] != obs.shape[1] or (curve.ndim == 2 and curve.shape != obs.shape):
        raise LengthMismatch(f"curve shape {curve.shape} does not match data {obs.shape}")
    total = float(np.sum((obs - curve) ** 2))
    return total, total / obs.shape[0]


def _as_matrix(profiles) -> np.ndarray:
    if isinstance(profiles, np.ndarray):
        obs = np.atleast_2d(np.asarray(profiles, dtype=float))
    else:
        rows = [p.values if isinstance(p, OccupancyProfile) else p for p in profiles]
        if not rows:
            raise InsufficientData("no training profiles")
        lengths = {len(r) for r in rows}
        if len(lengths) != 1:
            raise LengthMismatch(f"profiles have differing lengths {sorted(lengths)}")
        obs = np.asarray(rows, dtype=float)
    if obs.size == 0:
        raise InsufficientData("no training profiles")
    return obs


def _check_training_set(profiles, normalisation: str, min_days: int) -> np.ndarray:
    obs = _as_matrix(profiles)
    if obs.shape[0] < min_days:
        raise InsufficientData(f"need at least {min_days} training profiles, got {obs.shape[0]}")
    if not isinstance(profiles, np.ndarray):
        profs = [p for p in profiles if isinstance(p, OccupancyProfile)]
        if profs:
            if len({p.day_class for p in profs}) > 1:
                raise ValueError("training profiles mix day classes")
            bad = [p for p in profs if p.normalisation != normalisation]
            if bad:
                raise ValueError(
                    f"expected {normalisation}-normalised profiles, got {bad[0].normalisation!r}"
                )
    if not np.all(np.isfinite(obs)):
        raise ValueError("training profiles contain non-finite values")
    return obs


def _decode(x) -> TnParams:
    mu_a, ls_a, mu_d, ls_d = x
    ls_a = min(max(ls_a, _LOG_SIGMA_MIN), _LOG_SIGMA_MAX)
    ls_d = min(max(ls_d, _LOG_SIGMA_MIN), _LOG_SIGMA_MAX)
    return TnParams(TruncNormParams(mu_a, math.exp(ls_a)), TruncNormParams(mu_d, math.exp(ls_d)))


def _encode(p: TnParams) -> np.ndarray:
    return np.array([p.mu_a, math.log(p.sigma_a), p.mu_d, math.log(p.sigma_d)])


def _starts():
    ls_a, ls_d = math.log(START_SIGMA_A), math.log(START_SIGMA_D)
    return [np.array([ma, ls_a, md, ls_d]) for ma in START_MU_A for md in START_MU_D]


class _Tracker:
    """Wraps an objective, remembering the best value seen and a per-iteration trace."""

    def __init__(self, fun, trace: list):
        self.fun = fun
        self.best = math.inf
        self.trace = trace

    def __call__(self, x):
        try:
            v = float(self.fun(_decode(x)))
        except (ParkcastError, FloatingPointError, ValueError):
            v = math.inf
        if not math.isfinite(v):
            v = math.inf
        if v < self.best:
            self.best = v
        return v

    def callback(self, *args):
        self.trace.append(min(self.best, self.trace[-1]) if self.trace else self.best)


def _simplex(x0, step):
    return np.vstack([x0] + [x0 + np.eye(4)[i] * step[i] for i in range(4)])


def _multistart(objective) -> tuple[TnParams, float, np.ndarray]:
    """Minimise ``objective(TnParams)`` from the fixed start grid, then polish the winner."""
    trace: list[float] = []
    results = []
    for x0 in _starts():
        tr = _Tracker(objective, trace)
        res = minimize(
            tr,
            x0,
            method="Nelder-Mead",
            callback=tr.callback,
            options=dict(
                xatol=XATOL, fatol=FATOL, maxiter=MAX_ITER, initial_simplex=_simplex(x0, SIMPLEX_STEP)
            ),
        )
        results.append((float(res.fun), res.x))

    def key(item):
        f, x = item
        p = _decode(x)
        return (f, p.sigma_a + p.sigma_d)

    best_f, best_x = min(results, key=key)
    if not math.isfinite(best_f):
        raise OptimizerDiverged("loss is non-finite at every start")

    # one restart from the winner with a fresh, smaller simplex
    tr = _Tracker(objective, trace)
    res = minimize(
        tr,
        best_x,
        method="Nelder-Mead",
        callback=tr.callback,
        options=dict(
            xatol=XATOL, fatol=FATOL, maxiter=MAX_ITER, initial_simplex=_simplex(best_x, SIMPLEX_STEP / 20)
        ),
    )
    if key((float(res.fun), res.x)) < key((best_f, best_x)):
        best_f, best_x = float(res.fun), res.x
    return _decode(best_x), best_f, np.minimum.accumulate(np.asarray(trace, dtype=float))


def _interpretability_warnings(p: TnParams) -> list[str]:
    if p.is_interpretable():
        return []
    msg = "non-interpretable parameter values (location outside the day or scale above one day)"
    log.warning("%s: %s", msg, p.as_tuple())
    return [msg]


def fit_tn(train: Sequence[OccupancyProfile] | np.ndarray, min_days: int = MIN_DAYS) -> TnFit:
    """Fit the TN model to area-normalised profiles.

    The model curve is area-normalised on the same slot grid before it is
    compared with the data, so both sides sum to one.
    """
    obs = _check_training_set(train, "area", min_days)
    n, n_slots = obs.shape
    grid = slot_times(n_slots)
    # column-sorted sums make the objective bit-identical under day permutations
    sorted_obs = np.sort(obs, axis=0)
    mean = sorted_obs.sum(axis=0) / n
    spread = float(np.sort(((sorted_obs - mean) ** 2).ravel()).sum())

    def per_day(p: TnParams):
        f = cdf(grid, p.arrival) - cdf(grid, p.departure)
        total = f.sum()
        if not (total > 0 and math.isfinite(total)):
            return math.inf
        return float(np.sum((f / total - mean) ** 2)) + spread / n

    params, best, trace = _multistart(per_day)
    total = best * n
    return TnFit(
        params=params,
        beta2=total / (n * n_slots),
        loss=total,
        loss_per_day=best,
        n_days=n,
        trace=trace * n,
        warnings=_interpretability_warnings(params),
    )


def solve_taus(obs: np.ndarray, arrivals: np.ndarray, departures: np.ndarray, tau_floor: float = TAU_FLOOR):
    """Per-day ``tau`` minimising ``sum_t (o_t - min(A_t / tau, 1) + D_t)^2``.

    Parameters
    ----------
    obs : (N, T) array
        Max-normalised observations.
    arrivals, departures : (T,) arrays
        Arrival and departure CDFs on the slot grid.

    Returns
    -------
    tau : (N,) array in ``[tau_floor, 1]``
    losses : (N,) array of the per-day minimal sums of squares
    """
    obs = np.atleast_2d(obs)
    r = obs + departures
    order = np.argsort(arrivals, kind="stable")
    a = arrivals[order]
    rs = r[:, order]
    n, t = rs.shape
    z = np.zeros((n, 1))
    s_rr = np.hstack([z, np.cumsum(rs * rs, axis=1)])
    s_ra = np.hstack([z, np.cumsum(rs * a, axis=1)])
    s_aa = np.concatenate([[0.0], np.cumsum(a * a)])
    sat = (rs - 1.0) ** 2
    rest = np.hstack([np.cumsum(sat[:, ::-1], axis=1)[:, ::-1], z])

    # segment k: the k smallest arrival values are below tau, a[k-1] <= tau <= a[k]
    lower = np.concatenate([[0.0], a])
    upper = np.concatenate([a, [np.inf]])
    lo = np.maximum(lower, tau_floor)
    hi = np.minimum(upper, 1.0)
    valid = lo <= hi
    lo = np.where(valid, lo, 1.0)
    hi = np.where(valid, hi, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_star = np.where(s_aa > 0, s_ra / s_aa, 1.0 / hi)
    u = np.clip(u_star, 1.0 / hi, 1.0 / lo)
    seg_loss = s_rr - 2.0 * u * s_ra + u * u * s_aa + rest
    seg_loss = np.where(valid, seg_loss, np.inf)
    # scan from the largest tau down so ties resolve towards tau = 1
    rev = seg_loss[:, ::-1]
    k = t - np.argmin(rev, axis=1)
    tau = 1.0 / u[np.arange(n), k]
    fitted = np.minimum(arrivals[None, :] / tau[:, None], 1.0) - departures
    losses = np.sum((obs - fitted) ** 2, axis=1)
    return tau, losses


def fit_tnl(
    train: Sequence[OccupancyProfile] | np.ndarray,
    min_days: int = MIN_DAYS,
    tau_floor: float = TAU_FLOOR,
) -> TnlFit:
    """Fit shared TN parameters plus one saturation fraction per max-normalised day."""
    obs = _check_training_set(train, "max", min_days)
    n, n_slots = obs.shape
    grid = slot_times(n_slots)

    def per_day(p: TnParams):
        a = cdf(grid, p.arrival)
        d = cdf(grid, p.departure)
        _, losses = solve_taus(obs, a, d, tau_floor)
        return float(np.sort(losses).sum()) / n

    params, best, trace = _multistart(per_day)
    tau, losses = solve_taus(obs, cdf(grid, params.arrival), cdf(grid, params.departure), tau_floor)
    total = float(np.sort(losses).sum())
    if isinstance(train, np.ndarray):
        dates = list(range(n))
    else:
        dates = [getattr(p, "date", i) for i, p in enumerate(train)]
    return TnlFit(
        params=params,
        tau=tau,
        dates=dates,
        beta2=total / (n * n_slots),
        loss=total,
        loss_per_day=total / n,
        n_days=n,
        trace=trace * n,
        warnings=_interpretability_warnings(params),
    )


def tn_loss_at(train, p: TnParams) -> float:
    """Total TN loss of ``p`` on area-normalised data (used for stationarity checks)."""
    obs = _as_matrix(train)
    grid = slot_times(obs.shape[1])
    f = cdf(grid, p.arrival) - cdf(grid, p.departure)
    return loss(obs, f / f.sum())[0]


def tnl_loss_at(train, p: TnParams, tau_floor: float = TAU_FLOOR) -> float:
    obs = _as_matrix(train)
    grid = slot_times(obs.shape[1])
    _, losses = solve_taus(obs, cdf(grid, p.arrival), cdf(grid, p.departure), tau_floor)
    return float(losses.sum())
