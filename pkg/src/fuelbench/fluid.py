"""Working-fluid properties for isothermal liquid networks."""

from __future__ import annotations

from dataclasses import dataclass

ATMOSPHERIC_PRESSURE = 101325.0


@dataclass(frozen=True)
class FluidSpec:
    """Isothermal liquid with linearised compressibility.

    Defaults describe Jet-A kerosene at atmospheric pressure.
    """

    density_ref: float = 784.0  # kg/m^3
    dynamic_viscosity: float = 7.67e-4  # Pa s
    bulk_modulus: float = 1.5e9  # Pa
    reference_pressure: float = ATMOSPHERIC_PRESSURE  # Pa, absolute

    def __post_init__(self):
        for name in ("density_ref", "dynamic_viscosity", "bulk_modulus", "reference_pressure"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"FluidSpec.{name} must be positive, got {value!r}")
        if self.bulk_modulus < 1e6:
            raise ValueError(
                f"FluidSpec.bulk_modulus={self.bulk_modulus!r} Pa is implausibly low (< 1e6 Pa)"
            )


def kinematic_viscosity(fluid: FluidSpec) -> float:
    """Return nu = mu / rho in m^2/s."""
    return fluid.dynamic_viscosity / fluid.density_ref


def density_at(fluid: FluidSpec, p: float) -> float:
    """Density at absolute pressure ``p`` using the linear law rho_ref (1 + (p - p_ref)/beta)."""
    if p < 0:
        raise ValueError(f"absolute pressure must be non-negative, got {p!r}")
    rho = fluid.density_ref * (1.0 + (p - fluid.reference_pressure) / fluid.bulk_modulus)
    if rho <= 0:
        raise ValueError(f"pressure {p!r} Pa gives non-positive density")
    return rho
