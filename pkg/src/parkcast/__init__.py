"""Truncated-normal arrival/departure models for park-and-ride occupancy."""

from .data import DayClass, OccupancyProfile, ingest, normalise, slice_days, split_train_test
from .errors import ParkcastError
from .fitting import fit_tn, fit_tnl
from .forecast import condition_tn, condition_tnl, nowcast_error
from .models import ModelRecord, TnlParams, TnParams, tn_curve, tnl_curve
from .truncnorm import TruncNormParams

__version__ = "0.1.0"

__all__ = [
    "DayClass",
    "ModelRecord",
    "OccupancyProfile",
    "ParkcastError",
    "TnParams",
    "TnlParams",
    "TruncNormParams",
    "condition_tn",
    "condition_tnl",
    "fit_tn",
    "fit_tnl",
    "ingest",
    "normalise",
    "nowcast_error",
    "slice_days",
    "split_train_test",
    "tn_curve",
    "tnl_curve",
]
