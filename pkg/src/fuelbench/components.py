"""Quasi-static flow and opening laws for the pump-circuit components.

All pressures are in Pa, flows in m^3/s, speeds in rev/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fluid import FluidSpec

DEFAULT_CD = 0.7
DEFAULT_LAMINAR_DP = 1e4


def _require_positive(obj, *names):
    for name in names:
        value = getattr(obj, name)
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{type(obj).__name__}.{name} must be positive and finite, got {value!r}")


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


@dataclass(frozen=True)
class PumpSpec:
    displacement: float = 40.7e-6  # m^3/rev
    volumetric_efficiency: float = 0.9
    leakage_coefficient: float = 0.0  # m^3/(s Pa)
    nominal_speed: float = 100.0  # rev/s

    def __post_init__(self):
        _require_positive(self, "displacement", "nominal_speed")
        if not 0 < self.volumetric_efficiency <= 1:
            raise ValueError(
                f"PumpSpec.volumetric_efficiency must lie in (0, 1], got {self.volumetric_efficiency!r}"
            )
        if not self.leakage_coefficient >= 0:
            raise ValueError(
                f"PumpSpec.leakage_coefficient must be >= 0, got {self.leakage_coefficient!r}"
            )


@dataclass(frozen=True)
class OrificeSpec:
    max_area: float  # m^2
    discharge_coefficient: float = DEFAULT_CD
    laminar_transition_dp: float = DEFAULT_LAMINAR_DP  # Pa
    opening_fraction: float = 1.0
    opening_offset: float = 0.0  # mispositioning added to the commanded fraction, then clamped

    def __post_init__(self):
        _require_positive(self, "max_area", "laminar_transition_dp")
        if not -1 <= self.opening_offset <= 1:
            raise ValueError(f"OrificeSpec.opening_offset must lie in [-1, 1], got {self.opening_offset!r}")
        if not 0 < self.discharge_coefficient <= 1:
            raise ValueError(
                f"OrificeSpec.discharge_coefficient must lie in (0, 1], got {self.discharge_coefficient!r}"
            )
        if not 0 <= self.opening_fraction <= 1:
            raise ValueError(
                f"OrificeSpec.opening_fraction must lie in [0, 1], got {self.opening_fraction!r}"
            )

    def opening(self, commanded: float) -> float:
        """Actual opening for a commanded fraction, including any mispositioning."""
        return _clamp01(commanded + self.opening_offset)

    @property
    def effective_area(self) -> float:
        return self.opening(self.opening_fraction) * self.max_area


@dataclass(frozen=True)
class ReliefValveSpec:
    set_pressure: float = 200e5  # Pa, differential to tank
    regulation_range: float = 5e5  # Pa
    max_area: float = 100e-6  # m^2
    leak_fraction: float = 0.0  # residual opening below the set pressure
    discharge_coefficient: float = DEFAULT_CD
    laminar_transition_dp: float = DEFAULT_LAMINAR_DP

    def __post_init__(self):
        _require_positive(self, "set_pressure", "regulation_range", "max_area", "laminar_transition_dp")
        if not 0 <= self.leak_fraction <= 1:
            raise ValueError(f"ReliefValveSpec.leak_fraction must lie in [0, 1], got {self.leak_fraction!r}")
        if not 0 < self.discharge_coefficient <= 1:
            raise ValueError(
                f"ReliefValveSpec.discharge_coefficient must lie in (0, 1], got {self.discharge_coefficient!r}"
            )


@dataclass(frozen=True)
class BypassValveSpec:
    set_differential: float = 67e5  # Pa
    regulation_range: float = 3.45e5  # Pa
    spool_diameter: float = 10e-3  # m
    max_lift: float = 5e-3  # m
    opening_offset: float = 0.0  # added to the regulated fraction before clamping
    discharge_coefficient: float = DEFAULT_CD
    laminar_transition_dp: float = DEFAULT_LAMINAR_DP

    def __post_init__(self):
        _require_positive(
            self, "set_differential", "regulation_range", "spool_diameter", "max_lift", "laminar_transition_dp"
        )
        if not -1 <= self.opening_offset <= 1:
            raise ValueError(f"BypassValveSpec.opening_offset must lie in [-1, 1], got {self.opening_offset!r}")
        if not 0 < self.discharge_coefficient <= 1:
            raise ValueError(
                f"BypassValveSpec.discharge_coefficient must lie in (0, 1], got {self.discharge_coefficient!r}"
            )

    @property
    def max_area(self) -> float:
        """Circumferential opening area of the spool at full lift."""
        return math.pi * self.spool_diameter * self.max_lift


def pump_flow(pump: PumpSpec, speed: float, dp: float) -> float:
    """Delivered flow of a fixed-displacement pump.

    ``dp`` is outlet minus inlet pressure; leakage only acts against a positive rise.
    """
    return (
        pump.displacement * speed * pump.volumetric_efficiency
        - pump.leakage_coefficient * max(dp, 0.0)
    )


def required_displacement(q: float, eta: float, speed: float) -> float:
    """Displacement per revolution needed to deliver ``q`` at ``speed`` with efficiency ``eta``."""
    if not eta > 0:
        raise ValueError(f"volumetric efficiency must be positive, got {eta!r}")
    if not speed > 0:
        raise ValueError(f"speed must be positive, got {speed!r}")
    return q / (eta * speed)


def sharp_orifice_flow(cd_area: float, dp: float, density: float, laminar_dp: float) -> float:
    """Turbulent orifice law with a C1 cubic blend through zero.

    Below ``laminar_dp`` the flow is ``q_t (5u - u^3)/4`` with ``u = dp/laminar_dp``,
    which matches value and slope of the square-root law at ``|dp| = laminar_dp``.
    """
    if cd_area == 0.0:
        return 0.0
    adp = abs(dp)
    if adp >= laminar_dp:
        q = cd_area * math.sqrt(2.0 * adp / density)
        return q if dp > 0 else -q
    q_t = cd_area * math.sqrt(2.0 * laminar_dp / density)
    u = dp / laminar_dp
    return q_t * (1.25 * u - 0.25 * u * u * u)


def orifice_flow(spec: OrificeSpec, dp: float, fluid: FluidSpec) -> float:
    return sharp_orifice_flow(
        spec.discharge_coefficient * spec.effective_area,
        dp,
        fluid.density_ref,
        spec.laminar_transition_dp,
    )


def relief_opening(spec: ReliefValveSpec, dp: float) -> float:
    """Linear proportional opening between cracking and full-open pressure."""
    return _clamp01((dp - spec.set_pressure) / spec.regulation_range)


def relief_flow(spec: ReliefValveSpec, dp: float, fluid: FluidSpec) -> float:
    opening = max(relief_opening(spec, dp), spec.leak_fraction)
    return sharp_orifice_flow(
        spec.discharge_coefficient * opening * spec.max_area,
        dp,
        fluid.density_ref,
        spec.laminar_transition_dp,
    )


def bypass_opening(spec: BypassValveSpec, dp: float) -> float:
    """Spool opening fraction, 0.5 at the set differential.

    ``opening_offset`` models a mispositioned spool and is applied before clamping.
    """
    return _clamp01((dp - spec.set_differential) / spec.regulation_range + 0.5 + spec.opening_offset)


def bypass_area(spec: BypassValveSpec, fraction: float) -> float:
    return fraction * math.pi * spec.spool_diameter * spec.max_lift


def bypass_flow(spec: BypassValveSpec, dp: float, fluid: FluidSpec) -> float:
    area = bypass_area(spec, bypass_opening(spec, dp))
    return sharp_orifice_flow(
        spec.discharge_coefficient * area, dp, fluid.density_ref, spec.laminar_transition_dp
    )
