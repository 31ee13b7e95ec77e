"""One test per acceptance criterion; each prints a PASS/FAIL line in the terminal summary."""

import hashlib
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_RESULTS
from fuelbench.config import BenchmarkConfig, prepared_circuit
from fuelbench.dataset import (
    FAULT_HEADER,
    HEALTHY_HEADER,
    canonical_features,
    generate_benchmark,
    load_runs,
    read_csv,
    simulate_run,
)
from fuelbench.evaluation import evaluate
from fuelbench.faults import health_vector
from fuelbench.metrics import composite_f1, purity
from fuelbench.network import Inputs, NetworkState, SolverConfig, assemble, simulate, steady_state
from fuelbench.scenario import PAPER_DEFAULT_PROFILE, RunConfig, ThrottleProfile, throttle_at

from test_faults import HEALTH_TABLE


@contextmanager
def criterion(number, title):
    t0 = time.perf_counter()
    info = {}
    try:
        yield info
    except BaseException:
        ACCEPTANCE_RESULTS.append(f"criterion {number}: FAIL  {title} {info.get('detail', '')}".rstrip())
        raise
    dt = time.perf_counter() - t0
    ACCEPTANCE_RESULTS.append(f"criterion {number}: PASS  {title} ({info.get('detail', '')}; {dt:.1f} s)")


def test_c01_steady_state_calibration(calibrated_params):
    with criterion(1, "steady-state calibration") as info:
        t0 = time.perf_counter()
        s = steady_state(assemble(calibrated_params), Inputs(100.0, 0.9))
        elapsed = time.perf_counter() - t0
        p_pump = s.signals["p_Pump"]
        rise = p_pump - s.signals["p_Tank"]
        info["detail"] = f"p_Pump={p_pump / 1e5:.2f} bar, rise={rise / 1e5:.2f} bar"
        assert p_pump == pytest.approx(69e5, abs=2e5)
        assert rise == pytest.approx(67e5, abs=2e5)
        assert elapsed < 1.0


def test_c02_flow_partitioning(circuit):
    with criterion(2, "bypass flow fraction over throttle sweep") as info:
        t0 = time.perf_counter()
        fractions = []
        for theta in np.linspace(0.05, 1.0, 20):
            sig = steady_state(circuit, Inputs(100.0, float(theta))).signals
            fractions.append(sig["Q_Bypass"] / sig["Q_Pump"])
        elapsed = time.perf_counter() - t0
        lo, hi = min(fractions), max(fractions)
        info["detail"] = f"fraction {lo:.3f}..{hi:.3f}"
        assert lo <= 0.25 and hi >= 0.85
        assert lo >= 0.14 and hi <= 0.98
        assert elapsed < 5.0


def test_c03_continuity(calibrated_params):
    with criterion(3, "storage-corrected continuity on a 30 s run") as info:
        t0 = time.perf_counter()
        log = simulate_run(calibrated_params, RunConfig(seed=3))
        elapsed = time.perf_counter() - t0
        err = log["Q_Pump"] - log["Q_Bypass"] - log["Q_PRV"] - log["Q_Engine1"] - log["storage_flow"]
        worst = float(np.max(np.abs(err)))
        info["detail"] = f"max error {worst:.2e} m^3/s"
        assert len(log) == 6001
        assert worst <= 1e-9
        assert elapsed < 30.0


def test_c04_dataset_shape(smoke_benchmark):
    with criterion(4, "smoke benchmark shape, runtime and round trip") as info:
        out = smoke_benchmark["dir"]
        info["detail"] = f"generated in {smoke_benchmark['seconds']:.0f} s"
        assert len(smoke_benchmark["paths"]) == 10
        assert smoke_benchmark["seconds"] < 600
        config = smoke_benchmark["config"]
        for mode, path in zip(config.modes, smoke_benchmark["paths"]):
            header, values = read_csv(path)
            assert tuple(header) == (HEALTHY_HEADER if mode == 0 else FAULT_HEADER)
            assert values.shape == (2 * 6001, 17 if mode == 0 else 15)
        params = prepared_circuit(config)
        runs, meta = load_runs(out / "fault_5.csv")
        direct = simulate_run(params, config.run_config(5, meta["seeds"][1]))
        assert np.array_equal(canonical_features(runs[1]), canonical_features(direct))
        assert np.array_equal(runs[1].time, direct.time)


def test_c05_health_matrix():
    with criterion(5, "health vector table") as info:
        rows = {m: health_vector(m).as_tuple() for m in range(10)}
        info["detail"] = "10 rows"
        assert rows == {m: tuple(bool(h) for h in r) for m, r in HEALTH_TABLE.items()}


def test_c06_metric_oracles():
    with criterion(6, "metrics equal brute-force oracles") as info:
        rng = random.Random(2024)
        for _ in range(1000):
            n = rng.randint(1, 50)
            pred = [rng.randint(0, 1) for _ in range(n)]
            truth = [rng.randint(0, 1) for _ in range(n)]
            states = [rng.randint(0, 6) for _ in range(n)]
            labels = [rng.randint(0, 3) for _ in range(n)]
            assert composite_f1(pred, truth) == oracles.f1(pred, truth)
            assert purity(states, labels) == oracles.purity(states, labels)
        info["detail"] = "1000 random sequences"


def test_c07_throttle_profile():
    with criterion(7, "throttle profile values") as info:
        times = [0, 12, 13.5, 15, 17, 18, 20, 25]
        expected = [0.20, 0.20, 0.55, 0.90, 0.90, 0.70, 0.30, 0.30]
        worst = max(abs(throttle_at(PAPER_DEFAULT_PROFILE, t) - e) for t, e in zip(times, expected))
        info["detail"] = f"max error {worst:.1e}"
        assert worst <= 1e-12


def test_c08_baseline_detectability(smoke_benchmark):
    with criterion(8, "baseline composite F1 on smoke benchmark") as info:
        t0 = time.perf_counter()
        result = evaluate(smoke_benchmark["dir"], baseline=True)
        elapsed = time.perf_counter() - t0
        f1 = {r["fault"]: r["composite_f1"] for r in result["scores"]}
        info["detail"] = ", ".join(f"f{m}={f1[m]:.3f}" for m in sorted(f1))
        assert not result["errors"]
        for m in (2, 4, 5):
            assert f1[m] >= 0.9, m
        for m in (6, 7, 9):
            assert f1[m] >= 0.7, m
        assert elapsed < 120


# Window starting just before the default profile's ramp up, where the transients are sharpest.
_WINDOW_START = 11.8
CONVERGENCE_PROFILE = ThrottleProfile(
    ((0.0, 0.2),) + tuple((t - _WINDOW_START, v) for t, v in PAPER_DEFAULT_PROFILE.breakpoints[1:]),
    name="convergence-window",
)


def test_c09_convergence_order(circuit):
    with criterion(9, "first-order solver convergence") as info:
        cfg = RunConfig(duration=3.5, throttle=CONVERGENCE_PROFILE)
        runs = {}
        for dt in (2e-4, 1e-4, 5e-5):
            log = simulate(circuit, cfg, solver=SolverConfig(max_internal_dt=dt, min_internal_dt=min(dt, 1e-6)))
            runs[dt] = np.column_stack([log[n] for n in ("p_Pump", "p_FMU", "p_Shut")])
        coarse = np.max(np.abs(runs[2e-4] - runs[1e-4]))
        fine = np.max(np.abs(runs[1e-4] - runs[5e-5]))
        ratio = coarse / fine
        info["detail"] = f"deviations {coarse:.3g} / {fine:.3g} Pa, ratio {ratio:.2f}"
        assert fine > 0
        assert ratio >= 1.8


def test_c10_determinism(smoke_benchmark, tmp_path):
    with criterion(10, "byte-identical regeneration") as info:
        config = smoke_benchmark["config"]
        subset = BenchmarkConfig(**{**config.__dict__, "modes": (0, 5)})
        generate_benchmark(subset, tmp_path)
        names = ["healthy.csv", "healthy.json", "fault_5.csv", "fault_5.json", "fault_5_labels.csv"]
        for name in names:
            a = hashlib.sha256((smoke_benchmark["dir"] / name).read_bytes()).hexdigest()
            b = hashlib.sha256((tmp_path / name).read_bytes()).hexdigest()
            assert a == b, name
        info["detail"] = f"{len(names)} files match by sha256"
