"""Conversions between unit-day fractions, slots and ``hh:mm`` strings."""

from __future__ import annotations

import re

import numpy as np

SLOTS_PER_DAY = 48
MINUTES_PER_DAY = 1440

_HHMM = re.compile(r"^(-?)(\d{1,7}):(\d{2})$")


def slot_times(n_slots: int = SLOTS_PER_DAY) -> np.ndarray:
    """End-of-interval times ``i / T`` for slots ``i = 1..T``."""
    return np.arange(1, n_slots + 1, dtype=float) / n_slots


def parse_hhmm(text: str) -> float:
    """``"06:56"`` -> ``416 / 1440``.  Hours beyond 24 are allowed."""
    m = _HHMM.match(text.strip())
    if not m:
        raise ValueError(f"expected hh:mm, got {text!r}")
    sign, hours, minutes = m.groups()
    if int(minutes) >= 60:
        raise ValueError(f"minutes out of range in {text!r}")
    value = (int(hours) * 60 + int(minutes)) / MINUTES_PER_DAY
    return -value if sign else value


def format_hhmm(fraction: float) -> str:
    """Inverse of :func:`parse_hhmm`, rounded to the nearest minute."""
    total = int(round(float(fraction) * MINUTES_PER_DAY))
    sign = "-" if total < 0 else ""
    hours, minutes = divmod(abs(total), 60)
    return f"{sign}{hours:02d}:{minutes:02d}"


def format_duration(fraction: float) -> str:
    """Scale parameters are shown as ``01h16``."""
    total = int(round(abs(float(fraction)) * MINUTES_PER_DAY))
    hours, minutes = divmod(total, 60)
    return f"{hours:02d}h{minutes:02d}"


def parse_duration(text: str) -> float:
    m = re.match(r"^(\d+)h(\d{2})$", text.strip())
    if not m:
        raise ValueError(f"expected hhhmm duration, got {text!r}")
    return (int(m.group(1)) * 60 + int(m.group(2))) / MINUTES_PER_DAY


def hhmm_to_slot(text: str, n_slots: int = SLOTS_PER_DAY) -> int:
    """Slot index (1-based) whose end-of-interval time is ``text``.

    ``"07:00"`` is slot 14 on the 30-minute grid.
    """
    frac = parse_hhmm(text)
    slot = frac * n_slots
    if abs(slot - round(slot)) > 1e-9 or not 1 <= round(slot) <= n_slots:
        raise ValueError(f"{text!r} is not on the {n_slots}-slot grid")
    return int(round(slot))


def slot_to_hhmm(slot: int, n_slots: int = SLOTS_PER_DAY) -> str:
    return format_hhmm(slot / n_slots)
