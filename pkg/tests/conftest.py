import os
import time

import pytest

from fuelbench.config import BenchmarkConfig, prepared_circuit
from fuelbench.dataset import generate_benchmark
from fuelbench.network import CircuitParams, assemble, calibrate_bypass


@pytest.fixture(scope="session")
def calibrated_params():
    return calibrate_bypass(CircuitParams())


@pytest.fixture(scope="session")
def circuit(calibrated_params):
    return assemble(calibrated_params)


@pytest.fixture(scope="session")
def smoke_config():
    return BenchmarkConfig(runs_per_mode=2)


@pytest.fixture(scope="session")
def smoke_benchmark(tmp_path_factory, smoke_config):
    """10-file benchmark with 2 runs per mode, generated once per session."""
    out = tmp_path_factory.mktemp("smoke")
    t0 = time.perf_counter()
    paths = generate_benchmark(smoke_config, out, jobs=os.cpu_count() or 1)
    elapsed = time.perf_counter() - t0
    return {"dir": out, "paths": paths, "seconds": elapsed, "config": smoke_config}


@pytest.fixture(scope="session")
def smoke_params(smoke_config):
    return prepared_circuit(smoke_config)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
