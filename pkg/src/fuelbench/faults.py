"""Operating modes f0-f9: health annotations and fault injection.

Plant faults (f4-f9) are parameter transforms applied before simulation.
Sensor faults (f2, f3) edit one logged column after simulation. The motor
white-noise fault (f1) perturbs the speed input and therefore needs a
re-simulation of the plant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .network import CircuitParams
    from .scenario import RunConfig
    from .signals import TimeSeriesLog


class FaultMode(IntEnum):
    HEALTHY = 0
    WHITE_NOISE = 1
    SENSOR_DROP_P_FMU = 2
    SENSOR_DROP_Q_ENGINE1 = 3
    PUMP_LEAKAGE = 4
    PUMP_DISPLACEMENT = 5
    PRV_LEAKAGE = 6
    FMU_ORIFICE = 7
    BYPASS_ORIFICE = 8
    HIGH_BOOST = 9


FAULT_NAMES = {
    FaultMode.HEALTHY: "Healthy",
    FaultMode.WHITE_NOISE: "White noise",
    FaultMode.SENSOR_DROP_P_FMU: "Sensor drop p_FMU",
    FaultMode.SENSOR_DROP_Q_ENGINE1: "Sensor drop Q_Engine1",
    FaultMode.PUMP_LEAKAGE: "Pump leakage",
    FaultMode.PUMP_DISPLACEMENT: "Pump displacement change",
    FaultMode.PRV_LEAKAGE: "PRV leakage",
    FaultMode.FMU_ORIFICE: "FMU orifice fault",
    FaultMode.BYPASS_ORIFICE: "Bypass orifice fault",
    FaultMode.HIGH_BOOST: "High boost pressure",
}

COMPONENTS = ("motor", "sensor", "pump", "prv", "fmu", "bypass_valve", "fuel_reservoir")

# Index into COMPONENTS of the faulty component for each mode.
_FAULTY_COMPONENT = {0: None, 1: 0, 2: 1, 3: 1, 4: 2, 5: 2, 6: 3, 7: 4, 8: 5, 9: 6}

# magnitude semantics per mode:
#   f1 speed-noise sigma as a fraction of nominal speed
#   f2, f3 value the dropped sensor reads
#   f4 added pump leakage coefficient, m^3/(s Pa)
#   f5 displacement multiplier
#   f6 PRV residual opening fraction below the set pressure
#   f7, f8 opening offset of FMU / bypass spool
#   f9 tank (boost) pressure multiplier
DEFAULT_MAGNITUDES = {
    0: 0.0,
    1: 0.01,
    2: 0.0,
    3: 0.0,
    4: 5e-11,
    5: 0.9,
    6: 0.02,
    7: -0.15,
    8: 0.10,
    9: 2.0,
}
IDENTITY_MAGNITUDES = {1: 0.0, 4: 0.0, 5: 1.0, 6: 0.0, 7: 0.0, 8: 0.0, 9: 1.0}
MAGNITUDE_RANGES = {
    0: (0.0, 0.0),
    1: (0.0, 0.2),
    2: (-math.inf, math.inf),
    3: (-math.inf, math.inf),
    4: (0.0, 5e-9),
    5: (0.1, 2.0),
    6: (0.0, 1.0),
    7: (-1.0, 1.0),
    8: (-1.0, 1.0),
    9: (0.5, 10.0),
}
DEFAULT_ONSET = 10.0

SIGNAL_FAULT_COLUMNS = {2: "p_FMU", 3: "Q_Engine1"}
PLANT_FAULTS = frozenset({4, 5, 6, 7, 8, 9})
SENSOR_FAULTS = frozenset({2, 3})


def parse_mode(value) -> FaultMode:
    """Accept 3, "3", "f3" or "F3"."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text.startswith("f"):
            text = text[1:]
        if not text.isdigit():
            raise ValueError(f"invalid fault mode {value!r}; expected f0..f9")
        value = int(text)
    try:
        return FaultMode(int(value))
    except ValueError:
        raise ValueError(f"invalid fault mode {value!r}; expected f0..f9") from None


@dataclass(frozen=True)
class FaultSpec:
    mode: FaultMode = FaultMode.HEALTHY
    onset: float = DEFAULT_ONSET  # s
    magnitude: float | None = None  # None selects DEFAULT_MAGNITUDES[mode]

    def __post_init__(self):
        object.__setattr__(self, "mode", parse_mode(self.mode))
        if not (self.onset >= 0 and math.isfinite(self.onset)):
            raise ValueError(f"fault onset must be finite and >= 0, got {self.onset!r}")
        lo, hi = MAGNITUDE_RANGES[int(self.mode)]
        m = self.value
        if not lo <= m <= hi:
            raise ValueError(f"magnitude {m!r} outside [{lo}, {hi}] for mode f{int(self.mode)}")

    @property
    def value(self) -> float:
        return DEFAULT_MAGNITUDES[int(self.mode)] if self.magnitude is None else float(self.magnitude)

    @property
    def name(self) -> str:
        return FAULT_NAMES[self.mode]

    def to_dict(self) -> dict:
        return {"mode": int(self.mode), "name": self.name, "onset": self.onset, "magnitude": self.value}


@dataclass(frozen=True)
class HealthVector:
    """Component health, True meaning nominal."""

    motor: bool = True
    sensor: bool = True
    pump: bool = True
    prv: bool = True
    fmu: bool = True
    bypass_valve: bool = True
    fuel_reservoir: bool = True

    def __post_init__(self):
        if sum(not h for h in self.as_tuple()) > 1:
            raise ValueError("single-fault setting allows at most one faulty component")

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in COMPONENTS)

    def as_dict(self) -> dict:
        return {f"h{i}": h for i, h in enumerate(self.as_tuple())}


def health_vector(mode) -> HealthVector:
    idx = _FAULTY_COMPONENT[int(parse_mode(mode))]
    if idx is None:
        return HealthVector()
    return HealthVector(**{COMPONENTS[idx]: False})


def apply_fault(circuit: "CircuitParams", mode, magnitude: float | None = None) -> "CircuitParams":
    """Return a copy of ``circuit`` with a plant fault (f4-f9) injected."""
    mode = int(parse_mode(mode))
    if mode not in PLANT_FAULTS:
        raise ValueError(f"f{mode} is not a plant fault; sensor and motor faults act on signals")
    m = DEFAULT_MAGNITUDES[mode] if magnitude is None else float(magnitude)
    lo, hi = MAGNITUDE_RANGES[mode]
    if not lo <= m <= hi:
        raise ValueError(f"magnitude {m!r} outside [{lo}, {hi}] for mode f{mode}")
    if mode == FaultMode.PUMP_LEAKAGE:
        pump = circuit.pump
        return replace(circuit, pump=replace(pump, leakage_coefficient=pump.leakage_coefficient + m))
    if mode == FaultMode.PUMP_DISPLACEMENT:
        return replace(circuit, pump=replace(circuit.pump, displacement=circuit.pump.displacement * m))
    if mode == FaultMode.PRV_LEAKAGE:
        prv = circuit.prv
        return replace(circuit, prv=replace(prv, leak_fraction=max(prv.leak_fraction, m)))
    if mode == FaultMode.FMU_ORIFICE:
        fmu = circuit.fmu
        return replace(circuit, fmu=replace(fmu, opening_offset=fmu.opening_offset + m))
    if mode == FaultMode.BYPASS_ORIFICE:
        bp = circuit.bypass
        return replace(circuit, bypass=replace(bp, opening_offset=bp.opening_offset + m))
    return replace(circuit, tank_pressure=circuit.tank_pressure * m)


def plant_fault_active(fault: FaultSpec) -> bool:
    return int(fault.mode) in PLANT_FAULTS


def onset_index(onset: float, sample_rate: float) -> int:
    """First sample index at or after ``onset``."""
    return int(math.ceil(onset * sample_rate - 1e-9))


def nominal_rng(seed: int) -> np.random.Generator:
    """Stream for nominal run-to-run variability; independent of the fault mode."""
    return np.random.default_rng(np.random.SeedSequence([seed, 0]))


def fault_rng(seed: int, mode) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 1, int(parse_mode(mode))]))


def motor_noise(fault: FaultSpec, n_samples: int, sample_rate: float, nominal_speed: float,
                rng: np.random.Generator) -> np.ndarray:
    """Additive motor-speed noise for f1: zero before onset, Gaussian afterwards."""
    noise = np.zeros(n_samples)
    if fault.mode != FaultMode.WHITE_NOISE or fault.value == 0.0:
        return noise
    k0 = min(onset_index(fault.onset, sample_rate), n_samples)
    noise[k0:] = rng.normal(0.0, fault.value * nominal_speed, n_samples - k0)
    return noise


def distort_signals(log: "TimeSeriesLog", fault: FaultSpec, rng: np.random.Generator | None = None,
                    circuit=None, config: "RunConfig | None" = None) -> "TimeSeriesLog":
    """Apply a signal-level fault (f1-f3) to a simulated log.

    f2/f3 hold the affected sensor at ``fault.value`` from onset. f1 adds noise
    to the logged motor speed and re-simulates ``circuit`` under ``config`` so the
    noise drives the plant; both are required unless the noise level is zero.
    """
    mode = int(fault.mode)
    if mode in SENSOR_FAULTS:
        column = SIGNAL_FAULT_COLUMNS[mode]
        if column not in log.columns:
            raise KeyError(f"log has no sensor column {column!r}")
        k0 = onset_index(fault.onset, log.sample_rate)
        values = np.array(log.columns[column], dtype=float, copy=True)
        values[k0:] = fault.value
        return log.with_columns(**{column: values})
    if mode == FaultMode.WHITE_NOISE:
        if fault.value == 0.0:
            return log
        if circuit is None or config is None:
            raise ValueError("white-noise fault needs the circuit and run config to re-simulate")
        from .network import simulate

        if rng is None:
            rng = fault_rng(config.seed, mode)
        noise = motor_noise(fault, len(log), log.sample_rate, config.motor_speed_nominal, rng)
        return simulate(circuit, config, speed=np.asarray(log["motor_speed"]) + noise)
    raise ValueError(f"f{mode} is not a signal fault")


def anomaly_labels(config: "RunConfig") -> np.ndarray:
    """Per-sample ground truth: 1 from fault onset onwards, all zero when healthy."""
    labels = np.zeros(config.n_samples, dtype=np.int8)
    if config.fault.mode != FaultMode.HEALTHY:
        labels[min(onset_index(config.fault.onset, config.sample_rate), config.n_samples):] = 1
    return labels
