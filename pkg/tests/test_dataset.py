import hashlib
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from fuelbench.config import PAPER_DEFAULT_CONFIG, BenchmarkConfig, from_dict
from fuelbench.dataset import (
    FAULT_HEADER,
    HEALTHY_HEADER,
    canonical_features,
    export_csv,
    generate_benchmark,
    labels_path,
    load_runs,
    mode_identifiers,
    read_csv,
    read_sidecar,
    simulate_run,
)
from fuelbench.faults import FaultSpec, health_vector
from fuelbench.scenario import RunConfig
from fuelbench.signals import FEATURES

from test_faults import HEALTH_TABLE

GOLDEN = Path(__file__).parent / "data" / "golden_healthy.csv"
TINY = dict(duration=1.0, runs_per_mode=2, modes=(0, 3, 4), faults={"f3": {"onset": 0.5}, "f4": {"onset": 0.5}})


def test_golden_header():
    assert FEATURES == (
        "Q_Pump", "Q_Bypass", "Q_Engine1", "Q_Engine2", "Q_PRV", "p_Tank", "p_Pump", "p_FMU",
        "p_Shut", "p_Combustion", "motor_speed", "throttle", "bypass_opening", "prv_opening",
    )
    assert HEALTHY_HEADER == ("time",) + FEATURES + ("UD1", "UD2")
    assert len(HEALTHY_HEADER) == 17 and len(FAULT_HEADER) == 15


def test_golden_file_reproduced(tmp_path):
    cfg = BenchmarkConfig(duration=0.05, runs_per_mode=1, modes=(0,))
    generate_benchmark(cfg, tmp_path)
    assert (tmp_path / "healthy.csv").read_bytes() == GOLDEN.read_bytes()


@pytest.fixture(scope="module")
def tiny(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    cfg = BenchmarkConfig(**TINY)
    return cfg, out, generate_benchmark(cfg, out)


def test_tiny_layout(tiny):
    cfg, out, paths = tiny
    assert [p.name for p in paths] == ["healthy.csv", "fault_3.csv", "fault_4.csv"]
    header, values = read_csv(out / "healthy.csv")
    assert tuple(header) == HEALTHY_HEADER
    assert values.shape == (2 * 201, 17)
    header, values = read_csv(out / "fault_4.csv")
    assert tuple(header) == FAULT_HEADER and values.shape == (2 * 201, 15)
    text = (out / "fault_4.csv").read_bytes()
    assert b"\r" not in text and text.endswith(b"\n")


@pytest.mark.parametrize("name,mode", [("fault_3.csv", 3), ("fault_4.csv", 4)])
def test_sidecar_contents(tiny, name, mode):
    cfg, out, _ = tiny
    meta = read_sidecar(out / name)
    assert meta["fault"]["mode"] == mode
    assert list(meta["health_vector"].values()) == [bool(h) for h in HEALTH_TABLE[mode]]
    assert meta["onset"] == 0.5
    assert meta["seeds"] == cfg.run_seeds(mode)
    assert meta["samples_per_run"] == 201 and meta["runs"] == 2
    labels = np.loadtxt(labels_path(out / name), skiprows=1)
    assert labels.shape == (402,) and labels[:100].sum() == 0 and labels[100:201].all()


def test_healthy_sidecar(tiny):
    meta = read_sidecar(tiny[1] / "healthy.csv")
    assert all(meta["health_vector"].values()) and meta["labels_file"] is None


def test_round_trip_bit_exact(tiny, tmp_path):
    cfg = tiny[0]
    log = simulate_run(tiny_params(cfg), cfg.run_config(0, cfg.run_seeds(0)[0]))
    ids = mode_identifiers(cfg.run_config(0, 0), log)
    path = export_csv([(log, ids)], tmp_path / "one.csv", include_modes=True)
    header, values = read_csv(path)
    assert np.array_equal(values[:, 0], log.time)
    for i, name in enumerate(FEATURES, 1):
        assert np.array_equal(values[:, i], log[name]), name
    assert np.array_equal(values[:, 15], ids.ud1)


def tiny_params(cfg, _cache={}):
    from fuelbench.config import prepared_circuit

    if "p" not in _cache:
        _cache["p"] = prepared_circuit(cfg)
    return _cache["p"]


def test_generated_values_match_simulation(tiny):
    cfg, out, _ = tiny
    runs, meta = load_runs(out / "fault_4.csv")
    assert len(runs) == 2
    direct = simulate_run(tiny_params(cfg), cfg.run_config(4, meta["seeds"][1]))
    assert np.array_equal(canonical_features(runs[1]), canonical_features(direct))


def test_redundant_engine_sensors(tiny):
    runs, _ = load_runs(tiny[1] / "healthy.csv")
    for run in runs:
        assert np.array_equal(run["Q_Engine1"], run["Q_Engine2"])
    runs, _ = load_runs(tiny[1] / "fault_3.csv")
    assert (runs[0]["Q_Engine1"][100:] != runs[0]["Q_Engine2"][100:]).all()
    assert np.array_equal(runs[0]["Q_Engine1"][:100], runs[0]["Q_Engine2"][:100])


def test_resume_and_clobber(tiny):
    cfg, out, paths = tiny
    before = {p: p.stat().st_mtime_ns for p in paths}
    generate_benchmark(cfg, out)
    assert {p: p.stat().st_mtime_ns for p in paths} == before
    changed = BenchmarkConfig(**{**TINY, "base_seed": 1})
    with pytest.raises(FileExistsError):
        generate_benchmark(changed, out)


def test_force_overwrites(tmp_path):
    cfg = BenchmarkConfig(duration=0.05, runs_per_mode=1, modes=(0,))
    generate_benchmark(cfg, tmp_path)
    first = (tmp_path / "healthy.csv").read_bytes()
    other = BenchmarkConfig(duration=0.05, runs_per_mode=1, modes=(0,), base_seed=5)
    generate_benchmark(other, tmp_path, force=True)
    assert (tmp_path / "healthy.csv").read_bytes() != first
    assert read_sidecar(tmp_path / "healthy.csv")["config_digest"] == other.digest(0)
    assert not list(tmp_path.glob("*.tmp"))


def test_export_refuses_overwrite(tmp_path):
    log = simulate_run(tiny_params(BenchmarkConfig(**TINY)), RunConfig(duration=0.05))
    path = export_csv([log], tmp_path / "x.csv")
    with pytest.raises(FileExistsError):
        export_csv([log], path)
    export_csv([log], path, overwrite=True)
    with pytest.raises(ValueError):
        export_csv([log], tmp_path / "y.csv", include_modes=True)


def test_unwritable_destination(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError) as err:
        generate_benchmark(BenchmarkConfig(duration=0.05, runs_per_mode=1, modes=(0,)), blocker / "sub")
    assert "sub" in str(err.value)


def test_mode_identifiers():
    cfg = RunConfig()
    ids = mode_identifiers(cfg)
    assert ids.ud1[int(5 * 200)] == 0
    assert ids.ud1[int(16 * 200)] == 2
    assert set(ids.ud1.tolist()) == {0, 1, 2, 3, 4}
    assert len(set(ids.ud2.tolist())) == 1


def test_row_counts():
    assert RunConfig().n_samples * 1000 == 6_001_000
    assert RunConfig(duration=1.0).n_samples == 201


def test_seed_derivation_unique():
    cfg = BenchmarkConfig(runs_per_mode=1000)
    seeds = [s for m in cfg.modes for s in cfg.run_seeds(m)]
    assert len(set(seeds)) == 10_000
    assert all(0 <= s < 2**64 for s in seeds)
    assert cfg.run_seeds(4) == BenchmarkConfig(runs_per_mode=1000).run_seeds(4)


def test_shipped_yaml_matches_defaults():
    data = yaml.safe_load(Path(PAPER_DEFAULT_CONFIG).read_text())
    assert from_dict(data) == BenchmarkConfig()
    assert data == BenchmarkConfig().to_dict()


def test_digest_per_mode_independent_of_other_faults():
    a = BenchmarkConfig()
    b = BenchmarkConfig(faults={"f5": {"magnitude": 0.8}})
    assert a.digest(4) == b.digest(4)
    assert a.digest(5) != b.digest(5)
    assert a.digest(0) == BenchmarkConfig(out_dir="elsewhere").digest(0)
