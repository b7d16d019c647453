"""Average day-cycle profile and linear-regression baselines."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .data import DayClass, OccupancyProfile
from .errors import InsufficientData, InvalidParams, LengthMismatch
from .forecast import PredictionFit, condition_curve

RIDGE = 1e-8


@dataclass(frozen=True)
class AverageProfile:
    day_class: DayClass | None
    values: np.ndarray
    n_days: int


def _values(profiles) -> np.ndarray:
    if isinstance(profiles, np.ndarray):
        return np.atleast_2d(profiles.astype(float))
    rows = [p.values if isinstance(p, OccupancyProfile) else np.asarray(p, float) for p in profiles]
    if not rows:
        return np.empty((0, 0))
    if len({len(r) for r in rows}) != 1:
        raise LengthMismatch("profiles have differing lengths")
    return np.asarray(rows, dtype=float)


def build_average(train, day_class=None) -> AverageProfile:
    """Pointwise mean of normalised training profiles.

    If ``day_class`` is given, profiles of other classes are ignored.  Columns
    are summed in sorted order, so the result does not depend on day order.
    """
    dc = DayClass(day_class) if day_class is not None else None
    if dc is not None and not isinstance(train, np.ndarray):
        train = [p for p in train if not isinstance(p, OccupancyProfile) or p.day_class == dc]
    obs = _values(train)
    if obs.shape[0] < 1:
        raise InsufficientData(f"no training profiles for {dc.value if dc else 'average'} profile")
    values = np.sort(obs, axis=0).sum(axis=0) / obs.shape[0]
    return AverageProfile(dc, values, obs.shape[0])


def predict_average(observed, avg: AverageProfile, h=None) -> PredictionFit:
    """Shift and rescale the average profile to the observed slots ``1..h``."""
    return condition_curve(observed, avg.values, h, model="AVG")


def diff_inputs(o: np.ndarray, x: int) -> np.ndarray:
    """``{0, diff(o_{1:x})}`` for each row of ``o``."""
    o = np.atleast_2d(np.asarray(o, dtype=float))
    d = np.diff(o[:, :x], axis=1)
    return np.hstack([np.zeros((o.shape[0], 1)), d])


@dataclass(frozen=True)
class LinRegModel:
    """``o_y ~ intercept + coef @ {0, diff(o_{1:x})}``; slots are 1-based."""

    window_end: int
    target_slot: int
    intercept: float
    coef: np.ndarray
    n_train: int
    underdetermined: bool
    ridge: float = RIDGE

    def predict(self, observed) -> np.ndarray:
        o = np.atleast_2d(np.asarray(observed, dtype=float))
        if o.shape[1] < self.window_end:
            raise LengthMismatch(f"need {self.window_end} observed slots, got {o.shape[1]}")
        out = self.intercept + diff_inputs(o, self.window_end) @ self.coef
        return out if np.ndim(observed) > 1 else float(out[0])


def fit_linreg(train, x: int, y: int, ridge: float = RIDGE) -> LinRegModel:
    """Regress slot ``y`` on the diff-transformed slots ``1..x``.

    Solved as a least-squares problem with a Tikhonov term ``ridge`` on the
    slope coefficients (the intercept is not penalised).  The penalty enters as
    extra rows of the design matrix, which avoids squaring its condition number
    the way the normal equations would.  The first input is
    identically zero, so the term is what keeps the system solvable; it also
    covers training sets smaller than ``x + 2`` days, flagged as
    ``underdetermined``.
    """
    obs = _values(train)
    n = obs.shape[0]
    if n < 3:
        raise InsufficientData(f"linear regression needs at least 3 training days, got {n}")
    if not (1 <= x < y <= obs.shape[1]):
        raise InvalidParams(f"need 1 <= x < y <= {obs.shape[1]}, got x={x}, y={y}")
    design = np.hstack([np.ones((n, 1)), diff_inputs(obs, x)])
    target = obs[:, y - 1]
    penalty = np.sqrt(ridge) * np.eye(x + 1)[1:]
    beta = np.linalg.lstsq(
        np.vstack([design, penalty]), np.concatenate([target, np.zeros(x)]), rcond=None
    )[0]
    return LinRegModel(
        window_end=x,
        target_slot=y,
        intercept=float(beta[0]),
        coef=beta[1:],
        n_train=n,
        underdetermined=n < x + 2,
        ridge=ridge,
    )


def linreg_target_window(h: int, y: int) -> int:
    """Inputs available when nowcasting slot ``y`` from observations up to ``h``."""
    return min(h, y - 1)


class LinRegCache:
    """Lazily trained ``LinRegModel`` per ``(x, y)`` pair, safe to share across threads."""

    def __init__(self, train, ridge: float = RIDGE):
        self._train = _values(train)
        self._ridge = ridge
        self._models: dict[tuple[int, int], LinRegModel] = {}
        self._lock = threading.Lock()

    def get(self, x: int, y: int) -> LinRegModel:
        key = (x, y)
        model = self._models.get(key)
        if model is None:
            with self._lock:
                model = self._models.get(key)
                if model is None:
                    model = fit_linreg(self._train, x, y, self._ridge)
                    self._models[key] = model
        return model

    def __len__(self):
        return len(self._models)


def predict_linreg(observed, cache: LinRegCache, h: int, slots) -> np.ndarray:
    """Point forecasts for each 1-based slot in ``slots`` from observations ``1..h``.

    Observed slots (``y <= h``) are still forecast from the preceding inputs,
    never copied from the data.
    """
    o = np.asarray(observed, dtype=float)
    return np.array([cache.get(linreg_target_window(h, y), y).predict(o) for y in slots])
