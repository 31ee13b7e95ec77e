"""Phase-conditioned z-score baseline detector.

The reference envelope holds a mean and standard deviation per feature and per
throttle phase (UD1), estimated from healthy runs. A sample's score is its
largest absolute z-score across features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import canonical_features
from .scenario import PAPER_DEFAULT_PROFILE, ThrottleProfile, segment_index
from .signals import FEATURES, TimeSeriesLog

DEFAULT_THRESHOLD = 6.0
DEFAULT_DEBOUNCE = 5
REL_SIGMA_FLOOR = 0.01  # of the feature's overall healthy spread
ABS_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class ReferenceEnvelope:
    features: tuple
    mean: np.ndarray  # (n_phases, n_features)
    std: np.ndarray  # (n_phases, n_features), already floored
    floor: np.ndarray  # (n_features,)
    profile: ThrottleProfile = PAPER_DEFAULT_PROFILE

    @property
    def n_phases(self) -> int:
        return self.mean.shape[0]


def phases(log: TimeSeriesLog, profile: ThrottleProfile) -> np.ndarray:
    if "UD1" in log.columns:
        return np.asarray(log["UD1"]).astype(np.int64)
    return np.array([segment_index(profile, float(t)) for t in log.time], dtype=np.int64)


def fit_reference(logs, profile: ThrottleProfile = PAPER_DEFAULT_PROFILE) -> ReferenceEnvelope:
    logs = list(logs)
    if not logs:
        raise ValueError("at least one healthy run is needed to fit the envelope")
    x = np.concatenate([canonical_features(lg) for lg in logs])
    ph = np.concatenate([phases(lg, profile) for lg in logs])
    n_phases = profile.n_segments
    if ph.max() >= n_phases:
        raise ValueError(f"phase id {ph.max()} outside the profile's {n_phases} segments")
    floor = np.maximum(REL_SIGMA_FLOOR * x.std(axis=0), ABS_SIGMA_FLOOR)
    mean = np.zeros((n_phases, x.shape[1]))
    std = np.tile(floor, (n_phases, 1))
    for k in range(n_phases):
        sel = x[ph == k]
        if len(sel):
            mean[k] = sel.mean(axis=0)
            std[k] = np.maximum(sel.std(axis=0), floor)
    return ReferenceEnvelope(FEATURES, mean, std, floor, profile)


def score(log: TimeSeriesLog, env: ReferenceEnvelope) -> np.ndarray:
    """Per-sample max over features of |x - mean| / sigma in the sample's phase."""
    missing = [f for f in env.features if f not in log.columns]
    if missing:
        raise KeyError(f"log lacks envelope features {missing}")
    x = np.column_stack([np.asarray(log[f], dtype=float) for f in env.features])
    ph = phases(log, env.profile)
    if len(ph) and ph.max() >= env.n_phases:
        raise ValueError(f"phase id {ph.max()} unseen by the envelope")
    z = np.abs(x - env.mean[ph]) / env.std[ph]
    return z.max(axis=1)


def detect(scores, threshold: float = DEFAULT_THRESHOLD, debounce: int = DEFAULT_DEBOUNCE) -> np.ndarray:
    """Flag a sample once the score has exceeded ``threshold`` for ``debounce`` consecutive samples."""
    if debounce < 1:
        raise ValueError("debounce must be >= 1")
    above = np.asarray(scores) > threshold
    # length of the exceedance streak ending at each sample
    idx = np.arange(len(above))
    last_below = np.maximum.accumulate(np.where(above, -1, idx))
    streak = idx - last_below
    return (streak >= debounce).astype(np.int8)
