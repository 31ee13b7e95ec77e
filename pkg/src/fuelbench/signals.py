"""Logged signal names and the sampled run container shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

FEATURES = (
    "Q_Pump",
    "Q_Bypass",
    "Q_Engine1",
    "Q_Engine2",
    "Q_PRV",
    "p_Tank",
    "p_Pump",
    "p_FMU",
    "p_Shut",
    "p_Combustion",
    "motor_speed",
    "throttle",
    "bypass_opening",
    "prv_opening",
)


@dataclass(frozen=True)
class TimeSeriesLog:
    """Uniformly sampled run.

    ``columns`` maps every name in ``FEATURES`` (and possibly diagnostics such as
    ``storage_flow``) to a float array aligned with ``time``.
    """

    time: np.ndarray
    columns: dict
    sample_rate: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.time)
        for name, values in self.columns.items():
            if len(values) != n:
                raise ValueError(f"column {name!r} has {len(values)} samples, time has {n}")

    def __len__(self):
        return len(self.time)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def with_columns(self, **updates) -> "TimeSeriesLog":
        columns = dict(self.columns)
        columns.update(updates)
        return replace(self, columns=columns)

    def with_meta(self, **updates) -> "TimeSeriesLog":
        return replace(self, meta={**self.meta, **updates})
