"""Benchmark configuration: defaults, file loading and flag overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path

import numpy as np
import yaml

from .components import BypassValveSpec, OrificeSpec, PumpSpec, ReliefValveSpec
from .faults import DEFAULT_MAGNITUDES, DEFAULT_ONSET, FaultSpec, parse_mode
from .fluid import FluidSpec
from .network import CircuitParams, SolverConfig, params_to_dict
from .scenario import RunConfig, get_profile

PAPER_DEFAULT_CONFIG = Path(__file__).with_name("paper-default.yaml")

_NESTED = {
    "fluid": FluidSpec,
    "pump": PumpSpec,
    "fmu": OrificeSpec,
    "shutoff": OrificeSpec,
    "injectors": OrificeSpec,
    "bypass": BypassValveSpec,
    "prv": ReliefValveSpec,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BenchmarkConfig:
    circuit: CircuitParams = field(default_factory=CircuitParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    calibrate_bypass: bool = True
    duration: float = 30.0
    sample_rate: float = 200.0
    throttle: str | tuple = "paper-default"
    motor_speed_nominal: float = 100.0
    speed_jitter: float = 0.005
    runs_per_mode: int = 1000
    modes: tuple = tuple(range(10))
    base_seed: int = 0
    faults: dict = field(default_factory=dict)  # mode -> {"onset": s, "magnitude": x}
    out_dir: str = "out"

    def __post_init__(self):
        get_profile(self.throttle)
        modes = tuple(int(parse_mode(m)) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise ConfigError(f"duplicate modes in {self.modes!r}")
        object.__setattr__(self, "modes", modes)
        if not (isinstance(self.runs_per_mode, int) and self.runs_per_mode >= 1):
            raise ConfigError(f"runs_per_mode must be a positive integer, got {self.runs_per_mode!r}")
        faults = {}
        for key, spec in dict(self.faults).items():
            mode = int(parse_mode(key))
            unknown = set(spec) - {"onset", "magnitude"}
            if unknown:
                raise ConfigError(f"unknown fault keys for f{mode}: {sorted(unknown)}")
            faults[mode] = dict(spec)
        for mode in range(1, 10):
            spec = faults.get(mode, {})
            faults[mode] = {
                "onset": float(spec.get("onset", DEFAULT_ONSET)),
                "magnitude": float(spec.get("magnitude", DEFAULT_MAGNITUDES[mode])),
            }
        object.__setattr__(self, "faults", dict(sorted(faults.items())))
        for mode in modes:
            self.fault_spec(mode)
        seeds = [s for m in modes for s in self.run_seeds(m)]
        if len(set(seeds)) != len(seeds):
            raise ConfigError("run seeds are not unique")

    def fault_spec(self, mode) -> FaultSpec:
        mode = parse_mode(mode)
        if mode == 0:
            return FaultSpec()
        spec = self.faults[int(mode)]
        return FaultSpec(mode=mode, onset=spec["onset"], magnitude=spec["magnitude"])

    def run_seeds(self, mode) -> list:
        """64-bit seeds for every run of ``mode``, derived from (base_seed, mode, run)."""
        mode = int(parse_mode(mode))
        out = []
        for run in range(self.runs_per_mode):
            words = np.random.SeedSequence([self.base_seed, mode, run]).generate_state(2, np.uint32)
            out.append(int(words[0]) << 32 | int(words[1]))
        return out

    def run_config(self, mode, seed: int) -> RunConfig:
        return RunConfig(
            duration=self.duration,
            sample_rate=self.sample_rate,
            seed=seed,
            throttle=get_profile(self.throttle),
            fault=self.fault_spec(mode),
            motor_speed_nominal=self.motor_speed_nominal,
            speed_jitter=self.speed_jitter,
        )

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("circuit", "solver"):
                value = params_to_dict(value)
            elif f.name == "modes":
                value = list(value)
            elif f.name == "faults":
                value = {f"f{m}": dict(v) for m, v in sorted(value.items())}
            elif f.name == "throttle" and not isinstance(value, str):
                value = [list(bp) for bp in value]
            out[f.name] = value
        return out

    def digest(self, mode=None) -> str:
        """Hash of every setting that affects the output; per file when ``mode`` is given."""
        data = self.to_dict()
        del data["out_dir"]
        if mode is not None:
            mode = int(parse_mode(mode))
            del data["modes"]
            data["faults"] = data["faults"].get(f"f{mode}")
            data["mode"] = mode
        text = json.dumps(data, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, overrides: dict) -> "BenchmarkConfig":
        return from_dict({**self.to_dict(), **overrides}) if overrides else self


def _build(cls, data, path):
    if not is_dataclass(cls):
        return data
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {data!r}")
    names = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        sub = _NESTED.get(key) if cls is CircuitParams else None
        if sub is not None:
            value = _build(sub, value, f"{path}.{key}")
        elif key == "node_volumes":
            value = tuple(float(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def merge(base: dict, update: dict) -> dict:
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def from_dict(data: dict) -> BenchmarkConfig:
    data = merge(BenchmarkConfig().to_dict(), data or {})
    known = {f.name for f in fields(BenchmarkConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kwargs = dict(data)
    kwargs["circuit"] = _build(CircuitParams, data["circuit"], "circuit")
    kwargs["solver"] = _build(SolverConfig, data["solver"], "solver")
    if not isinstance(kwargs["throttle"], str):
        kwargs["throttle"] = tuple(tuple(float(x) for x in bp) for bp in kwargs["throttle"])
    kwargs["modes"] = tuple(kwargs["modes"])
    try:
        return BenchmarkConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> BenchmarkConfig:
    """Read a YAML (or JSON) config; absent keys keep their defaults."""
    path = Path(path)
    with path.open() as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_dict(data)


def set_path(data: dict, dotted: str, value) -> dict:
    """Return a copy of ``data`` with ``a.b.c`` set to ``value``."""
    keys = dotted.split(".")
    out = dict(data)
    node = out
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            raise ConfigError(f"{dotted}: {key!r} is not a section")
        node[key] = dict(child)
        node = node[key]
    node[keys[-1]] = value
    return out


def prepared_circuit(config: BenchmarkConfig) -> CircuitParams:
    """Healthy circuit parameters, with the bypass calibrated if requested."""
    from .network import Inputs, calibrate_bypass

    params = config.circuit
    if config.calibrate_bypass:
        params = calibrate_bypass(params, Inputs(config.motor_speed_nominal, 0.9), solver=config.solver)
    return params


def fault_circuit(params: CircuitParams, fault: FaultSpec) -> CircuitParams | None:
    from .faults import apply_fault, plant_fault_active

    if not plant_fault_active(fault):
        return None
    return apply_fault(params, fault.mode, fault.magnitude)

