"""Throttle schedules, run configuration and flow-partition arithmetic."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .faults import FaultSpec

# Reference test rig the circuit was scaled from (L/min).
REFERENCE_PUMP_FLOW = 15.0
REFERENCE_BYPASS_FLOW_OPEN = 14.0  # piston at 1.1 mm
REFERENCE_BYPASS_FLOW_CLOSED = 2.8  # piston at 0.1 mm
SCALED_PUMP_FLOW = 144.0
# Bounds as quoted for the scaled circuit; they don't equal 9.6 * (2.8, 14) exactly.
QUOTED_BYPASS_BOUNDS = (26.3, 131.6)
QUOTED_ENGINE_BOUNDS = (12.4, 117.7)


@dataclass(frozen=True)
class ThrottleProfile:
    """Piecewise-linear throttle schedule, held constant after the last breakpoint."""

    breakpoints: tuple
    name: str = "custom"

    def __post_init__(self):
        bps = tuple((float(t), float(th)) for t, th in self.breakpoints)
        if not bps:
            raise ValueError("throttle profile needs at least one breakpoint")
        times = [t for t, _ in bps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"breakpoint times must be strictly increasing, got {times}")
        if any(not 0.0 <= th <= 1.0 for _, th in bps):
            raise ValueError("throttle values must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", bps)

    @property
    def times(self) -> list:
        return [t for t, _ in self.breakpoints]

    @property
    def n_segments(self) -> int:
        """Ramps/holds between breakpoints plus the trailing hold."""
        return len(self.breakpoints)

    def to_list(self) -> list:
        return [list(bp) for bp in self.breakpoints]


PAPER_DEFAULT_PROFILE = ThrottleProfile(
    ((0.0, 0.20), (12.0, 0.20), (15.0, 0.90), (17.0, 0.90), (20.0, 0.30)),
    name="paper-default",
)

PROFILES = {PAPER_DEFAULT_PROFILE.name: PAPER_DEFAULT_PROFILE}


def get_profile(spec) -> ThrottleProfile:
    """Resolve a profile name or a breakpoint list."""
    if isinstance(spec, ThrottleProfile):
        return spec
    if isinstance(spec, str):
        try:
            return PROFILES[spec]
        except KeyError:
            raise ValueError(f"unknown throttle profile {spec!r}; known: {sorted(PROFILES)}") from None
    return ThrottleProfile(tuple(tuple(bp) for bp in spec))


def throttle_at(profile: ThrottleProfile, t: float) -> float:
    bps = profile.breakpoints
    if t <= bps[0][0]:
        return bps[0][1]
    if t >= bps[-1][0]:
        return bps[-1][1]
    i = bisect.bisect_right(profile.times, t)
    (t0, v0), (t1, v1) = bps[i - 1], bps[i]
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


def throttle_series(profile: ThrottleProfile, t: np.ndarray) -> np.ndarray:
    return np.array([throttle_at(profile, float(ti)) for ti in np.asarray(t, dtype=float)])


def segment_index(profile: ThrottleProfile, t: float) -> int:
    """Index of the active segment; a breakpoint belongs to the segment it closes."""
    times = profile.times
    return max(bisect.bisect_left(times, t) - 1, 0)


@dataclass(frozen=True)
class RunConfig:
    duration: float = 30.0  # s
    sample_rate: float = 200.0  # Hz
    seed: int = 0
    throttle: ThrottleProfile = PAPER_DEFAULT_PROFILE
    fault: FaultSpec = field(default_factory=FaultSpec)
    motor_speed_nominal: float = 100.0  # rev/s
    speed_jitter: float = 0.005  # nominal motor-speed noise, fraction of nominal (1 sigma)

    def __post_init__(self):
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be finite and >= 0, got {self.duration!r}")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate!r}")
        n = self.duration * self.sample_rate
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(f"duration * sample_rate must be integral, got {n!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not self.motor_speed_nominal >= 0:
            raise ValueError(f"motor_speed_nominal must be >= 0, got {self.motor_speed_nominal!r}")
        if not self.speed_jitter >= 0:
            raise ValueError(f"speed_jitter must be >= 0, got {self.speed_jitter!r}")
        if self.fault.mode != 0 and not 0 <= self.fault.onset <= self.duration:
            raise ValueError(f"fault onset {self.fault.onset!r} s outside [0, {self.duration}]")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate)) + 1

    def sample_times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate


def flow_scale_factor(q_target: float, q_reference: float) -> float:
    if q_reference == 0:
        raise ValueError("reference flow must be non-zero")
    if q_reference < 0:
        raise ValueError(f"reference flow must be positive, got {q_reference!r}")
    return q_target / q_reference


def engine_flow(q_pump: float, q_bypass: float) -> float:
    return q_pump - q_bypass


def reference_bypass_fractions() -> tuple:
    """Bypass share of pump flow on the reference rig at the two piston positions."""
    return (
        REFERENCE_BYPASS_FLOW_CLOSED / REFERENCE_PUMP_FLOW,
        REFERENCE_BYPASS_FLOW_OPEN / REFERENCE_PUMP_FLOW,
    )
