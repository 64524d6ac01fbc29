"""Time-series panels aligned to a network's node ordering."""

from __future__ import annotations

import datetime
from dataclasses import dataclass

import numpy as np

FREQUENCIES = ("daily", "weekly")

_STEP = {"daily": datetime.timedelta(days=1), "weekly": datetime.timedelta(days=7)}


class SeriesError(ValueError):
    """Invalid panel construction or use."""


@dataclass(frozen=True, eq=False)
class NetworkTimeSeries:
    """A T x n panel of node-level observations.

    Rows are time steps, columns are nodes in the order fixed by the network
    the panel was built against. Values are stored as a read-only float
    array; instances are immutable and safe to share across workers.
    """

    values: np.ndarray
    frequency: str
    start_date: datetime.date

    def __post_init__(self):
        if self.frequency not in FREQUENCIES:
            raise SeriesError(f"frequency must be one of {FREQUENCIES}, got {self.frequency!r}")
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise SeriesError(f"values must be a T x n matrix with T >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise SeriesError("panel contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.values.shape[1]

    @property
    def step(self) -> datetime.timedelta:
        return _STEP[self.frequency]

    def date_at(self, t: int) -> datetime.date:
        """Calendar date of row ``t`` (0-based)."""
        return self.start_date + t * self.step

    def with_values(self, values, start_date=None, frequency=None) -> "NetworkTimeSeries":
        """New panel with replaced values, keeping metadata unless overridden."""
        return NetworkTimeSeries(
            values=values,
            frequency=frequency or self.frequency,
            start_date=start_date or self.start_date,
        )
