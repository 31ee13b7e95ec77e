"""Run orchestration, CSV layout, sidecar metadata and benchmark generation."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import BenchmarkConfig, fault_circuit, prepared_circuit
from .faults import (
    SENSOR_FAULTS,
    FaultMode,
    anomaly_labels,
    distort_signals,
    fault_rng,
    health_vector,
    motor_noise,
    nominal_rng,
    parse_mode,
)
from .network import Circuit, CircuitParams, SolverConfig, params_to_dict, simulate
from .scenario import RunConfig, get_profile, segment_index
from .signals import FEATURES, TimeSeriesLog

log = logging.getLogger(__name__)

TIME_COLUMN = "time"
MODE_COLUMNS = ("UD1", "UD2")
HEALTHY_HEADER = (TIME_COLUMN,) + FEATURES + MODE_COLUMNS
FAULT_HEADER = (TIME_COLUMN,) + FEATURES
SPEED_CLASS_WIDTH = 0.05  # fraction of nominal speed per UD2 class


def data_filename(mode) -> str:
    mode = int(parse_mode(mode))
    return "healthy.csv" if mode == 0 else f"fault_{mode}.csv"


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def labels_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_labels.csv")


@dataclass(frozen=True)
class ModeIdentifiers:
    ud1: np.ndarray  # active throttle-profile segment
    ud2: np.ndarray  # commanded-speed class, 0 at nominal speed

    def combined(self) -> np.ndarray:
        """Joint discrete mode, one id per (UD1, UD2) pair."""
        return self.ud1.astype(np.int64) * 1000 + (self.ud2.astype(np.int64) + 500)


def canonical_features(log: TimeSeriesLog) -> np.ndarray:
    """The 14 logged features as an (n, 14) array in ``FEATURES`` order."""
    missing = [name for name in FEATURES if name not in log.columns]
    if missing:
        raise KeyError(f"log is missing signals {missing}")
    return np.column_stack([np.asarray(log[name], dtype=float) for name in FEATURES])


def speed_class(speed: float, nominal: float) -> int:
    if nominal <= 0:
        return 0
    return int(round((speed / nominal - 1.0) / SPEED_CLASS_WIDTH))


def mode_identifiers(config: RunConfig, log: TimeSeriesLog | None = None) -> ModeIdentifiers:
    times = log.time if log is not None else config.sample_times()
    profile = config.throttle
    ud1 = np.array([segment_index(profile, float(t)) for t in times], dtype=np.int64)
    # UD2 follows the commanded speed schedule, which is constant at nominal.
    cls = speed_class(config.motor_speed_nominal, config.motor_speed_nominal)
    ud2 = np.full(len(times), cls, dtype=np.int64)
    return ModeIdentifiers(ud1, ud2)


def speed_schedule(config: RunConfig) -> np.ndarray:
    """Per-sample motor speed: nominal plus run jitter plus any f1 noise."""
    n = config.n_samples
    nominal = float(config.motor_speed_nominal)
    speed = np.full(n, nominal)
    if config.speed_jitter > 0:
        speed = speed + nominal_rng(config.seed).normal(0.0, config.speed_jitter * nominal, n)
    if config.fault.mode == FaultMode.WHITE_NOISE:
        speed = speed + motor_noise(config.fault, n, config.sample_rate, nominal,
                                    fault_rng(config.seed, config.fault.mode))
    return speed


def simulate_run(params: CircuitParams, config: RunConfig, solver: SolverConfig | None = None) -> TimeSeriesLog:
    """One labelled run with the configured fault injected at its onset."""
    fault = config.fault
    faulted = fault_circuit(params, fault)
    out = simulate(Circuit(params), config, speed=speed_schedule(config), solver=solver,
                   faulted=Circuit(faulted) if faulted is not None else None)
    if int(fault.mode) in SENSOR_FAULTS:
        out = distort_signals(out, fault)
    return out.with_meta(health_vector=health_vector(fault.mode).as_dict())


def format_block(log: TimeSeriesLog, ids: ModeIdentifiers | None = None) -> str:
    """CSV rows (no header) for one run; floats use the shortest round-trip repr."""
    columns = [log.time] + [np.asarray(log[name], dtype=float) for name in FEATURES]
    rows = [",".join(repr(float(v)) for v in row) for row in zip(*columns)]
    if ids is not None:
        rows = [f"{r},{a},{b}" for r, a, b in zip(rows, ids.ud1.tolist(), ids.ud2.tolist())]
    return "".join(r + "\n" for r in rows)


def export_csv(runs, path, include_modes: bool = False, overwrite: bool = False) -> Path:
    """Write ``runs`` (TimeSeriesLog, or (log, ModeIdentifiers) pairs) as one CSV file."""
    path = Path(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"{path} exists; pass overwrite=True to replace it")
    header = HEALTHY_HEADER if include_modes else FAULT_HEADER
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for item in runs:
                run, ids = item if isinstance(item, tuple) else (item, None)
                if include_modes and ids is None:
                    raise ValueError("mode identifiers required for a file with UD columns")
                fh.write(format_block(run, ids if include_modes else None))
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    finally:
        if tmp.exists():
            tmp.unlink()
    return path


def read_csv(path) -> tuple:
    """Return (header, values) for a dataset CSV; values is a float array."""
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().rstrip("\n").split(",")
            values = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise OSError(f"failed reading {path}: {exc}") from exc
    if values.size and values.shape[1] != len(header):
        raise ValueError(f"{path}: {values.shape[1]} columns but header has {len(header)}")
    return header, values


def read_sidecar(path) -> dict:
    with sidecar_path(path).open() as fh:
        return json.load(fh)


def split_runs(values: np.ndarray, samples_per_run: int) -> list:
    if len(values) % samples_per_run:
        raise ValueError(f"{len(values)} rows is not a multiple of {samples_per_run} samples per run")
    return [values[i:i + samples_per_run] for i in range(0, len(values), samples_per_run)]


def rows_to_log(header, block: np.ndarray, sample_rate: float) -> TimeSeriesLog:
    cols = {name: block[:, i] for i, name in enumerate(header) if name != TIME_COLUMN}
    return TimeSeriesLog(time=block[:, header.index(TIME_COLUMN)], columns=cols, sample_rate=sample_rate)


def load_runs(path) -> tuple:
    """Parse a dataset file into per-run logs plus its sidecar metadata."""
    meta = read_sidecar(path)
    header, values = read_csv(path)
    blocks = split_runs(values, meta["samples_per_run"])
    return [rows_to_log(header, b, meta["sample_rate"]) for b in blocks], meta


def _run_block(task) -> str:
    params, config, solver, with_modes = task
    out = simulate_run(params, config, solver)
    return format_block(out, mode_identifiers(config, out) if with_modes else None)


def _sidecar(config: BenchmarkConfig, params: CircuitParams, mode: int, seeds, name: str) -> dict:
    fault = config.fault_spec(mode)
    return {
        "file": name,
        "fault": fault.to_dict(),
        "health_vector": health_vector(mode).as_dict(),
        "onset": fault.onset if mode else None,
        "magnitude": fault.value,
        "seeds": seeds,
        "runs": len(seeds),
        "samples_per_run": int(round(config.duration * config.sample_rate)) + 1,
        "sample_rate": config.sample_rate,
        "duration": config.duration,
        "throttle": [list(bp) for bp in get_profile(config.throttle).breakpoints],
        "motor_speed_nominal": config.motor_speed_nominal,
        "columns": list(HEALTHY_HEADER if mode == 0 else FAULT_HEADER),
        "labels_file": labels_path(name).name if mode else None,
        "circuit": params_to_dict(params),
        "config_digest": config.digest(mode),
        "generator_version": __version__,
    }


def generate_benchmark(config: BenchmarkConfig, out_dir=None, jobs: int = 1, force: bool = False,
                       progress=None) -> list:
    """Generate one CSV per configured mode (healthy.csv, fault_1.csv ... fault_9.csv).

    Files whose sidecar records the same config digest are kept (resume); any
    other existing output is an error unless ``force`` is set. Runs may execute
    in parallel but are written in ascending run order.
    """
    out_dir = Path(out_dir if out_dir is not None else config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    params = prepared_circuit(config)
    paths = []
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for mode in config.modes:
            name = data_filename(mode)
            path = out_dir / name
            paths.append(path)
            if path.exists() and not force:
                try:
                    done = read_sidecar(path).get("config_digest") == config.digest(mode)
                except (OSError, ValueError):
                    done = False
                if done:
                    log.info("%s up to date, skipping", path)
                    if progress:
                        progress(name, "skipped")
                    continue
                raise FileExistsError(f"{path} exists from a different configuration; use --force")
            seeds = config.run_seeds(mode)
            tasks = [(params, config.run_config(mode, s), config.solver, mode == 0) for s in seeds]
            blocks = executor.map(_run_block, tasks) if executor else map(_run_block, tasks)
            _write_file(path, HEALTHY_HEADER if mode == 0 else FAULT_HEADER, blocks, name, progress, len(tasks))
            if mode:
                labels = anomaly_labels(config.run_config(mode, seeds[0]))
                text = "anomaly\n" + "".join(f"{v}\n" for v in labels.tolist()) * len(seeds)
                _atomic_write(labels_path(path), text)
            _atomic_write(sidecar_path(path), json.dumps(_sidecar(config, params, mode, seeds, name),
                                                          indent=2, sort_keys=True) + "\n")
    finally:
        if executor:
            executor.shutdown()
    return paths


def _write_file(path: Path, header, blocks, name, progress, total):
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for i, block in enumerate(blocks, 1):
                fh.write(block)
                if progress:
                    progress(name, f"run {i}/{total}")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    finally:
        if tmp.exists():
            tmp.unlink()


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
