"""Lumped node-pressure model of the main-fuel-pump circuit and its stiff integrator.

Topology (fixed)::

    tank --pump--> [discharge] --bypass--> tank
                   [discharge] --PRV-----> tank
                   [discharge] --FMU-----> [fmu] --shut-off--> [shut] --injectors--> combustion

Each internal node obeys dp/dt = beta/V * (sum of inflows). Valves are quasi-static,
so the state is the three node pressures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, is_dataclass, replace

import numpy as np

from .components import (
    BypassValveSpec,
    OrificeSpec,
    PumpSpec,
    ReliefValveSpec,
    bypass_opening,
    pump_flow,
    relief_opening,
    sharp_orifice_flow,
)
from .fluid import FluidSpec
from .scenario import RunConfig, throttle_at
from .signals import FEATURES, TimeSeriesLog

NODES = ("pump_discharge", "fmu_downstream", "shutoff_downstream")
PATHS = ("pump", "bypass", "prv", "fmu", "shutoff", "injectors")


class CircuitError(ValueError):
    """Invalid circuit parameters; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class SolverDiverged(RuntimeError):
    def __init__(self, message: str, time: float, residual_norm: float, context: dict | None = None):
        super().__init__(f"{message} (t={time:.6g} s, residual={residual_norm:.3g})")
        self.time = time
        self.residual_norm = residual_norm
        self.context = dict(context or {})


@dataclass(frozen=True)
class CircuitParams:
    fluid: FluidSpec = field(default_factory=FluidSpec)
    pump: PumpSpec = field(default_factory=PumpSpec)
    fmu: OrificeSpec = field(default_factory=lambda: OrificeSpec(max_area=100e-6))
    # Shut-off and injector areas are effective flow areas (Cd = 1); the FMU area is geometric.
    shutoff: OrificeSpec = field(default_factory=lambda: OrificeSpec(max_area=100e-6, discharge_coefficient=1.0))
    injectors: OrificeSpec = field(default_factory=lambda: OrificeSpec(max_area=25e-6, discharge_coefficient=1.0))
    bypass: BypassValveSpec = field(default_factory=BypassValveSpec)
    prv: ReliefValveSpec = field(default_factory=ReliefValveSpec)
    tank_pressure: float = 2e5  # Pa
    combustion_pressure: float = 5e5  # Pa
    node_volumes: tuple = (1e-4, 1e-4, 1e-4)  # m^3


_PARAM_TYPES = {
    "fluid": FluidSpec,
    "pump": PumpSpec,
    "fmu": OrificeSpec,
    "shutoff": OrificeSpec,
    "injectors": OrificeSpec,
    "bypass": BypassValveSpec,
    "prv": ReliefValveSpec,
}


def validate_params(params: CircuitParams) -> None:
    for name, cls in _PARAM_TYPES.items():
        value = getattr(params, name)
        if not isinstance(value, cls):
            raise CircuitError(name, f"expected {cls.__name__}, got {type(value).__name__}")
    for name in ("tank_pressure", "combustion_pressure"):
        value = getattr(params, name)
        if not (value > 0 and math.isfinite(value)):
            raise CircuitError(name, f"must be positive and finite, got {value!r}")
    volumes = tuple(params.node_volumes)
    if len(volumes) != len(NODES):
        raise CircuitError("node_volumes", f"expected {len(NODES)} volumes, got {len(volumes)}")
    for i, v in enumerate(volumes):
        if not (v > 0 and math.isfinite(v)):
            raise CircuitError(f"node_volumes[{i}]", f"must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class SolverConfig:
    max_internal_dt: float = 1e-3
    min_internal_dt: float = 1e-6
    newton_rel_tol: float = 1e-8
    newton_max_iters: int = 25

    def __post_init__(self):
        if not 0 < self.min_internal_dt <= self.max_internal_dt:
            raise ValueError("need 0 < min_internal_dt <= max_internal_dt")
        if not self.newton_rel_tol > 0:
            raise ValueError("newton_rel_tol must be positive")
        if not self.newton_max_iters >= 1:
            raise ValueError("newton_max_iters must be >= 1")


@dataclass(frozen=True)
class Inputs:
    speed: float  # rev/s
    throttle: float  # commanded FMU opening fraction


@dataclass(frozen=True)
class NetworkState:
    time: float
    pressures: tuple  # Pa, ordered as NODES
    signals: dict = field(default_factory=dict)

    def __post_init__(self):
        if not all(math.isfinite(p) and p >= 0 for p in self.pressures):
            raise ValueError(f"node pressures must be finite and >= 0, got {self.pressures}")


class Circuit:
    """Assembled circuit: evaluates branch flows, node derivatives and logged signals."""

    nodes = NODES
    paths = PATHS

    def __init__(self, params: CircuitParams):
        validate_params(params)
        self.params = params
        fl = params.fluid
        self._rho = fl.density_ref
        self._capacitance = tuple(v / fl.bulk_modulus for v in params.node_volumes)  # m^3/Pa
        self._gain = tuple(fl.bulk_modulus / v for v in params.node_volumes)
        self._p_tank = params.tank_pressure
        self._p_comb = params.combustion_pressure
        pump, bp, prv = params.pump, params.bypass, params.prv
        self._pump = pump
        self._bypass_cda = bp.discharge_coefficient * bp.max_area
        self._prv_cda = prv.discharge_coefficient * prv.max_area
        self._fmu_cda = params.fmu.discharge_coefficient * params.fmu.max_area
        self._shut_cda = params.shutoff.discharge_coefficient * params.shutoff.effective_area
        self._inj_cda = params.injectors.discharge_coefficient * params.injectors.effective_area

    def branch_flows(self, p, inputs: Inputs) -> tuple:
        """Flows along PATHS (m^3/s), positive in the drawn direction."""
        p1, p2, p3 = p
        prm = self.params
        rho = self._rho
        dp_pump = p1 - self._p_tank
        q_pump = pump_flow(self._pump, inputs.speed, dp_pump)
        x_bp = bypass_opening(prm.bypass, dp_pump)
        q_bp = sharp_orifice_flow(self._bypass_cda * x_bp, dp_pump, rho, prm.bypass.laminar_transition_dp)
        x_prv = max(relief_opening(prm.prv, dp_pump), prm.prv.leak_fraction)
        q_prv = sharp_orifice_flow(self._prv_cda * x_prv, dp_pump, rho, prm.prv.laminar_transition_dp)
        x_fmu = prm.fmu.opening(inputs.throttle)
        q_fmu = sharp_orifice_flow(self._fmu_cda * x_fmu, p1 - p2, rho, prm.fmu.laminar_transition_dp)
        q_shut = sharp_orifice_flow(self._shut_cda, p2 - p3, rho, prm.shutoff.laminar_transition_dp)
        q_inj = sharp_orifice_flow(self._inj_cda, p3 - self._p_comb, rho, prm.injectors.laminar_transition_dp)
        return q_pump, q_bp, q_prv, q_fmu, q_shut, q_inj

    def net_inflows(self, p, inputs: Inputs) -> tuple:
        q_pump, q_bp, q_prv, q_fmu, q_shut, q_inj = self.branch_flows(p, inputs)
        return (q_pump - q_bp - q_prv - q_fmu, q_fmu - q_shut, q_shut - q_inj)

    def derivatives(self, p, inputs: Inputs) -> tuple:
        g = self._gain
        n = self.net_inflows(p, inputs)
        return (g[0] * n[0], g[1] * n[1], g[2] * n[2])

    def signals(self, p, inputs: Inputs, storage=(0.0, 0.0, 0.0)) -> dict:
        q_pump, q_bp, q_prv, q_fmu, q_shut, q_inj = self.branch_flows(p, inputs)
        prm = self.params
        dp_pump = p[0] - self._p_tank
        return {
            "Q_Pump": q_pump,
            "Q_Bypass": q_bp,
            "Q_Engine1": q_inj,
            "Q_Engine2": q_inj,
            "Q_PRV": q_prv,
            "p_Tank": self._p_tank,
            "p_Pump": p[0],
            "p_FMU": p[1],
            "p_Shut": p[2],
            "p_Combustion": self._p_comb,
            "motor_speed": inputs.speed,
            "throttle": inputs.throttle,
            "bypass_opening": bypass_opening(prm.bypass, dp_pump),
            "prv_opening": max(relief_opening(prm.prv, dp_pump), prm.prv.leak_fraction),
            "Q_FMU": q_fmu,
            "Q_Shutoff": q_shut,
            "storage_flow": storage[0] + storage[1] + storage[2],
        }

    def make_state(self, time, p, inputs, storage=(0.0, 0.0, 0.0)) -> NetworkState:
        return NetworkState(time=time, pressures=tuple(p), signals=self.signals(p, inputs, storage))

    def initial_guess(self, inputs: Inputs) -> tuple:
        """Bypass at its set point, engine-path drop split like series orifices."""
        prm = self.params
        p1 = self._p_tank + prm.bypass.set_differential
        if inputs.speed <= 0:
            p1 = self._p_comb
        a1 = self._fmu_cda * prm.fmu.opening(inputs.throttle)
        r = [1.0 / max(a, 1e-12) ** 2 for a in (a1, self._shut_cda, self._inj_cda)]
        total = sum(r)
        drop = p1 - self._p_comb
        p2 = p1 - drop * r[0] / total
        p3 = p2 - drop * r[1] / total
        return (p1, p2, p3)


def assemble(params: CircuitParams) -> Circuit:
    return Circuit(params)


def _fd_jacobian(fun, p, f0, rel=1e-7):
    n = len(p)
    jac = np.empty((n, n))
    for j in range(n):
        h = rel * max(abs(p[j]), 1e5)
        q = list(p)
        q[j] = p[j] + h
        fj = fun(q)
        for i in range(n):
            jac[i, j] = (fj[i] - f0[i]) / h
    return jac


def _implicit_euler(circuit: Circuit, p_old, dt, inputs, solver: SolverConfig):
    """One backward-Euler step; returns (p_new, residual_norm, converged)."""
    gain = circuit._gain

    def residual(p):
        n = circuit.net_inflows(p, inputs)
        return [p[i] - p_old[i] - dt * gain[i] * n[i] for i in range(3)]

    p = list(p_old)
    r = residual(p)
    rnorm = max(abs(x) for x in r)
    for _ in range(solver.newton_max_iters):
        jac = _fd_jacobian(residual, p, r)
        try:
            delta = np.linalg.solve(jac, [-x for x in r]).tolist()
        except np.linalg.LinAlgError:
            return p, rnorm, False
        lam = 1.0
        for _ in range(10):
            trial = [p[i] + lam * delta[i] for i in range(3)]
            if min(trial) >= 0:
                r_trial = residual(trial)
                rn_trial = max(abs(x) for x in r_trial)
                if rn_trial <= rnorm or lam < 1e-2:
                    break
            lam *= 0.5
        else:
            return p, rnorm, False
        p, r, rnorm = trial, r_trial, rn_trial
        scale = max(abs(x) for x in p)
        if lam * max(abs(x) for x in delta) <= solver.newton_rel_tol * scale:
            return p, rnorm, all(math.isfinite(x) for x in p)
    return p, rnorm, False


def step(circuit: Circuit, state: NetworkState, dt: float, inputs: Inputs,
         solver: SolverConfig | None = None) -> NetworkState:
    """Advance ``state`` by ``dt`` with backward Euler, halving the internal step on failure.

    ``inputs`` are held constant over the step. The returned state's signals include
    ``storage_flow``: the compressibility flow sum(V/beta * dp/dt) over the last substep.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    solver = solver or SolverConfig()
    t_end = state.time + dt
    t = state.time
    p = state.pressures
    h = min(dt, solver.max_internal_dt)
    storage = (0.0, 0.0, 0.0)
    while t_end - t > 1e-12 * max(1.0, abs(t_end)):
        h = min(h, t_end - t)
        p_new, rnorm, ok = _implicit_euler(circuit, p, h, inputs, solver)
        if not ok:
            if h / 2 < solver.min_internal_dt:
                raise SolverDiverged("Newton iteration failed at minimum step", t + h, rnorm)
            h /= 2
            continue
        cap = circuit._capacitance
        storage = tuple(cap[i] * (p_new[i] - p[i]) / h for i in range(3))
        p = tuple(p_new)
        t = t + h
        h = min(2 * h, solver.max_internal_dt)
    return circuit.make_state(t_end, p, inputs, storage)


def steady_state(circuit: Circuit, inputs: Inputs, solver: SolverConfig | None = None,
                 time: float = 0.0) -> NetworkState:
    """Equilibrium node pressures (all net node inflows zero)."""
    solver = solver or SolverConfig()

    def fun(p):
        return list(circuit.net_inflows(p, inputs))

    def rel_residual(p, f):
        flows = circuit.branch_flows(p, inputs)
        scale = max(max(abs(q) for q in flows), 1e-6)
        return max(abs(x) for x in f) / scale

    p = list(circuit.initial_guess(inputs))
    f = fun(p)
    norm = max(abs(x) for x in f)
    for _ in range(max(solver.newton_max_iters, 50)):
        if rel_residual(p, f) < solver.newton_rel_tol:
            return circuit.make_state(time, p, inputs)
        jac = _fd_jacobian(fun, p, f)
        try:
            delta = np.linalg.solve(jac, [-x for x in f]).tolist()
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-4:
            trial = [max(p[i] + lam * delta[i], 0.0) for i in range(3)]
            f_trial = fun(trial)
            n_trial = max(abs(x) for x in f_trial)
            if n_trial < norm:
                break
            lam *= 0.5
        else:
            break
        p, f, norm = trial, f_trial, n_trial
    # Newton stalled (typically on a valve clamp kink): relax in pseudo-time.
    return _relax_to_steady(circuit, p, inputs, solver, time)


def _relax_to_steady(circuit, p, inputs, solver, time):
    h = 1e-6
    state = circuit.make_state(time, p, inputs)
    for _ in range(400):
        try:
            nxt = step(circuit, state, h, inputs, SolverConfig(max(h, 1e-6), 1e-9, solver.newton_rel_tol, 50))
        except SolverDiverged:
            h /= 4
            continue
        f = circuit.net_inflows(nxt.pressures, inputs)
        flows = circuit.branch_flows(nxt.pressures, inputs)
        if max(abs(x) for x in f) / max(max(abs(q) for q in flows), 1e-6) < solver.newton_rel_tol:
            return circuit.make_state(time, nxt.pressures, inputs)
        state = NetworkState(time, nxt.pressures, nxt.signals)
        h = min(h * 2, 10.0)
    f = circuit.net_inflows(state.pressures, inputs)
    raise SolverDiverged("steady state not found", time, max(abs(x) for x in f))


def simulate(circuit: Circuit, scenario: RunConfig, speed: np.ndarray | None = None,
             solver: SolverConfig | None = None, faulted: Circuit | None = None) -> TimeSeriesLog:
    """Integrate from the steady state at t=0 and sample at k / sample_rate.

    ``speed`` optionally gives the motor speed per sample (zero-order hold over
    each preceding interval); by default the nominal speed is held. When
    ``faulted`` is given it replaces ``circuit`` for every step ending at or after
    the scenario's fault onset.
    """
    solver = solver or SolverConfig()
    n = scenario.n_samples
    rate = scenario.sample_rate
    if speed is None:
        speed = np.full(n, float(scenario.motor_speed_nominal))
    speed = np.asarray(speed, dtype=float)
    if speed.shape != (n,):
        raise ValueError(f"speed schedule needs {n} samples, got {speed.shape}")
    profile = scenario.throttle
    context = {"fault": scenario.fault.to_dict(), "seed": scenario.seed}
    names = FEATURES + ("Q_FMU", "Q_Shutoff", "storage_flow")
    out = {name: np.empty(n) for name in names}
    onset = scenario.fault.onset if faulted is not None else math.inf

    def active(t):
        return faulted if t >= onset - 1e-12 else circuit

    try:
        state = steady_state(active(0.0), Inputs(float(speed[0]), throttle_at(profile, 0.0)), solver)
    except SolverDiverged as exc:
        exc.context.update(context)
        raise
    _record(out, 0, state.signals)
    n_sub = max(1, math.ceil((1.0 / rate) / solver.max_internal_dt - 1e-9))
    for k in range(1, n):
        t0 = (k - 1) / rate
        t1 = k / rate
        h = (t1 - t0) / n_sub
        for j in range(1, n_sub + 1):
            t = t1 if j == n_sub else t0 + j * h
            inputs = Inputs(float(speed[k]), throttle_at(profile, t))
            try:
                nxt = step(active(t), state, t - state.time, inputs, solver)
            except SolverDiverged as exc:
                exc.context.update(context)
                raise
            state = NetworkState(t, nxt.pressures, nxt.signals)
        _record(out, k, state.signals)
    time = np.arange(n) / rate
    return TimeSeriesLog(time=time, columns=out, sample_rate=rate,
                         meta={"seed": scenario.seed, "fault": scenario.fault.to_dict()})


def _record(out, k, signals):
    for name, arr in out.items():
        arr[k] = signals[name]


def params_to_dict(params) -> dict:
    """Nested plain-dict view of a parameter dataclass (for metadata and config files)."""
    if is_dataclass(params):
        return {f.name: params_to_dict(getattr(params, f.name)) for f in fields(params)}
    if isinstance(params, tuple):
        return [params_to_dict(v) for v in params]
    return params


NOMINAL_INPUTS = Inputs(speed=100.0, throttle=0.9)


def calibrate_bypass(params: CircuitParams, inputs: Inputs = NOMINAL_INPUTS, target_rise: float = 67e5,
                     solver: SolverConfig | None = None, tol: float = 1.0) -> CircuitParams:
    """Shift the bypass set differential so the steady pump rise equals ``target_rise``.

    The regulated rise sits below the set differential by however far the spool has
    to close from mid-stroke; that offset is nearly constant, so a secant iteration
    converges in a few solves.
    """
    def rise(set_dp):
        prm = replace(params, bypass=replace(params.bypass, set_differential=set_dp))
        s = steady_state(Circuit(prm), inputs, solver)
        return s.pressures[0] - prm.tank_pressure - target_rise

    x0 = params.bypass.set_differential
    f0 = rise(x0)
    x1 = x0 - f0
    for _ in range(20):
        f1 = rise(x1)
        if abs(f1) < tol:
            break
        if f1 == f0:
            raise SolverDiverged("bypass calibration stalled", 0.0, abs(f1))
        x0, f0, x1 = x1, f1, x1 - f1 * (x1 - x0) / (f1 - f0)
    else:
        raise SolverDiverged("bypass calibration did not converge", 0.0, abs(f1))
    return replace(params, bypass=replace(params.bypass, set_differential=x1))
