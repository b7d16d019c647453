"""Normal distribution truncated to the unit day ``[0, 1]``.

All functions are vectorised over ``t`` (or ``q``) and take a single
:class:`TruncNormParams`.  The truncation mass is evaluated on whichever side
of the distribution keeps the normal tail probabilities small, and switches to
log space once both standardised bounds are deep in the same tail, so fits
with locations far outside the day (``mu = 10``, ``sigma = 5``) or very narrow
scales stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, log_ndtr, ndtr

from .errors import DegenerateSupport, InvalidParams

SIGMA_MAX = 1e4
LOG_SPACE_THRESHOLD = 6.0
QUANTILE_ITERATIONS = 64

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class TruncNormParams:
    """Location and scale of a truncated normal, in unit-day fractions.

    ``mu`` may lie outside ``[0, 1]``; ``sigma`` must be in ``(0, 1e4]``.
    """

    mu: float
    sigma: float

    def __post_init__(self):
        mu, sigma = float(self.mu), float(self.sigma)
        if not math.isfinite(mu):
            raise InvalidParams(f"mu must be finite, got {self.mu!r}")
        if not (math.isfinite(sigma) and 0.0 < sigma <= SIGMA_MAX):
            raise InvalidParams(f"sigma must be in (0, {SIGMA_MAX:g}], got {self.sigma!r}")
        if not math.isfinite(mu / sigma):
            raise InvalidParams("mu / sigma is not finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    def pdf(self, t):
        return pdf(t, self)

    def cdf(self, t):
        return cdf(t, self)

    def quantile(self, q):
        return quantile(q, self)

    def sample(self, n, seed=None):
        return sample(self, n, seed)


def _as_params(p) -> TruncNormParams:
    if isinstance(p, TruncNormParams):
        return p
    mu, sigma = p
    return TruncNormParams(mu, sigma)


class _Support:
    """Precomputed truncation constants for one parameter pair.

    ``lower_side`` is True when the unit interval sits on the lower tail side
    of the location (``mu >= 0.5``), in which case probabilities are built from
    ``ndtr``; otherwise the survival function ``ndtr(-x)`` is used so that the
    subtracted quantities are never close to one.
    """

    __slots__ = (
        "mu", "sigma", "lower_side", "log_space", "central", "a", "b", "edge", "far", "log_mass",
    )

    def __init__(self, p: TruncNormParams):
        self.mu = p.mu
        self.sigma = p.sigma
        a = (0.0 - p.mu) / p.sigma
        b = (1.0 - p.mu) / p.sigma
        self.a, self.b = a, b
        self.lower_side = p.mu >= 0.5
        if self.lower_side:
            # mass = Phi(b) - Phi(a); both small when b << 0
            self.log_space = b < -LOG_SPACE_THRESHOLD
            near, far = b, a
            self.edge, self.far = float(log_ndtr(near)), float(log_ndtr(far))
        else:
            # mass = Q(a) - Q(b) with Q(x) = Phi(-x); both small when a >> 0
            self.log_space = a > LOG_SPACE_THRESHOLD
            near, far = -a, -b
            self.edge, self.far = float(log_ndtr(near)), float(log_ndtr(far))
        # both bounds near the centre: erf differences avoid cancellation around 0.5
        self.central = max(abs(a), abs(b)) < 1.0
        if self.log_space:
            ratio = self.far - self.edge
            self.log_mass = self.edge + math.log(-math.expm1(ratio)) if ratio < 0 else -math.inf
        else:
            if self.central:
                mass = 0.5 * float(erf(b / _SQRT2) - erf(a / _SQRT2))
            elif self.lower_side:
                mass = float(ndtr(b) - ndtr(a))
            else:
                mass = float(ndtr(-a) - ndtr(-b))
            self.log_mass = math.log(mass) if mass > 1e-300 else -math.inf
        if not math.isfinite(self.log_mass):
            raise DegenerateSupport(
                f"truncation mass of N({p.mu!r}, {p.sigma!r}) on [0, 1] is not representable"
            )

    def cdf_inside(self, t: np.ndarray) -> np.ndarray:
        z = (t - self.mu) / self.sigma
        if self.central:
            return 0.5 * (erf(z / _SQRT2) - erf(self.a / _SQRT2)) / math.exp(self.log_mass)
        if self.lower_side:
            if self.log_space:
                num = np.exp(log_ndtr(z) - self.edge) - math.exp(self.far - self.edge)
                den = -math.expm1(self.far - self.edge)
                return num / den
            return (ndtr(z) - ndtr(self.a)) / math.exp(self.log_mass)
        # upper side: 1 - F(t) = (Q(z) - Q(b)) / mass, F(t) = (Q(a) - Q(z)) / mass
        if self.log_space:
            num = 1.0 - np.exp(log_ndtr(-z) - self.edge)
            den = -math.expm1(self.far - self.edge)
            return num / den
        return (ndtr(-self.a) - ndtr(-z)) / math.exp(self.log_mass)

    def log_pdf_inside(self, t: np.ndarray) -> np.ndarray:
        z = (t - self.mu) / self.sigma
        return -0.5 * z * z - _LOG_SQRT_2PI - math.log(self.sigma) - self.log_mass


def pdf(t, p) -> np.ndarray:
    """Density at ``t``; zero outside the unit interval."""
    s = _Support(_as_params(p))
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= 1.0)
    out = np.zeros(t.shape)
    if np.any(inside):
        out[inside] = np.exp(s.log_pdf_inside(t[inside]))
    return out if out.ndim else float(out)


def cdf(t, p) -> np.ndarray:
    """Cumulative probability; exactly 0 for ``t <= 0`` and 1 for ``t >= 1``."""
    s = _Support(_as_params(p))
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > 0.0) & (t < 1.0)
    if np.any(inside):
        out[inside] = np.clip(s.cdf_inside(t[inside]), 0.0, 1.0)
    return out if out.ndim else float(out)


def quantile(q, p) -> np.ndarray:
    """Inverse CDF by bracketed bisection on ``[0, 1]``."""
    params = _as_params(p)
    s = _Support(params)
    q = np.asarray(q, dtype=float)
    if np.any((q < 0.0) | (q > 1.0)) or np.any(np.isnan(q)):
        raise InvalidParams("quantile levels must lie in [0, 1]")
    lo = np.zeros(q.shape)
    hi = np.ones(q.shape)
    for _ in range(QUANTILE_ITERATIONS):
        mid = 0.5 * (lo + hi)
        below = s.cdf_inside(mid) < q
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    out = np.where(q <= 0.0, 0.0, np.where(q >= 1.0, 1.0, out))
    return out if out.ndim else float(out)


def sample(p, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` times by inverse-transform sampling.

    ``seed`` may be an int, a :class:`numpy.random.SeedSequence` or a
    :class:`numpy.random.Generator`.
    """
    params = _as_params(p)
    if n < 0:
        raise InvalidParams(f"n must be non-negative, got {n}")
    rng = np.random.default_rng(seed)
    if n == 0:
        return np.empty(0)
    return np.asarray(quantile(rng.random(n), params), dtype=float)
