import math

import pytest
from hypothesis import given, strategies as st

from fuelbench.components import (
    BypassValveSpec,
    OrificeSpec,
    PumpSpec,
    ReliefValveSpec,
    bypass_area,
    bypass_opening,
    orifice_flow,
    pump_flow,
    relief_opening,
    required_displacement,
)
from fuelbench.fluid import FluidSpec

KEROSENE = FluidSpec()
finite_dp = st.floats(-1e9, 1e9, allow_nan=False)


def test_pump_nominal_flow():
    pump = PumpSpec(displacement=40.7e-6, volumetric_efficiency=0.9)
    assert pump_flow(pump, 100.0, 67e5) == pytest.approx(3.663e-3, rel=1e-12)
    # 58 gpm
    assert pump_flow(pump, 100.0, 67e5) == pytest.approx(3.67e-3, rel=3e-3)


def test_pump_zero_speed():
    assert pump_flow(PumpSpec(), 0.0, 67e5) == 0.0
    assert pump_flow(PumpSpec(), 0.0, -1e5) == 0.0


def test_pump_leakage_hand_product():
    pump = PumpSpec(displacement=40.7e-6, leakage_coefficient=1e-9)
    # 1e-9 m^3/(s Pa) * 6.7e6 Pa = 6.7e-3 m^3/s
    assert pump_flow(pump, 100.0, 67e5) == pytest.approx(3.663e-3 - 6.7e-3, rel=1e-12)


@given(st.floats(0, 200), st.floats(0, 1e8), st.floats(0, 1e8))
def test_pump_affine_in_dp_and_linear_in_speed(speed, dp1, dp2):
    pump = PumpSpec(leakage_coefficient=3e-11)
    mid = pump_flow(pump, speed, 0.5 * (dp1 + dp2))
    assert mid == pytest.approx(0.5 * (pump_flow(pump, speed, dp1) + pump_flow(pump, speed, dp2)), abs=1e-15)
    nl = PumpSpec()
    assert pump_flow(nl, 2 * speed, dp1) == pytest.approx(2 * pump_flow(nl, speed, dp1), abs=1e-18)


def test_required_displacement():
    assert required_displacement(3.67e-3, 0.9, 100.0) == pytest.approx(4.078e-5, rel=1e-3)
    assert required_displacement(1.0, 1.0, 1.0) == 1.0
    assert required_displacement(3.67e-3, 0.9, 200.0) == 0.5 * required_displacement(3.67e-3, 0.9, 100.0)


@pytest.mark.parametrize("eta,speed", [(0.0, 100.0), (-0.1, 100.0), (0.9, 0.0), (0.9, -1.0)])
def test_required_displacement_rejects(eta, speed):
    with pytest.raises(ValueError):
        required_displacement(1e-3, eta, speed)


def test_orifice_turbulent_hand_value():
    spec = OrificeSpec(max_area=1e-4, discharge_coefficient=0.7)
    expected = 0.7 * 1e-4 * math.sqrt(2e5 / 784)
    assert orifice_flow(spec, 1e5, KEROSENE) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(1.118e-3, rel=1e-3)


def test_orifice_no_drive():
    assert orifice_flow(OrificeSpec(max_area=1e-4), 0.0, KEROSENE) == 0.0


@given(finite_dp)
def test_orifice_odd(dp):
    spec = OrificeSpec(max_area=1e-4)
    assert orifice_flow(spec, -dp, KEROSENE) == -orifice_flow(spec, dp, KEROSENE)


@pytest.mark.parametrize("dp_t", [1e3, 1e4, 1e5])
def test_orifice_c1_at_blend_boundary(dp_t):
    spec = OrificeSpec(max_area=1e-4, laminar_transition_dp=dp_t)
    q_t = orifice_flow(spec, dp_t, KEROSENE)
    analytic = q_t / (2 * dp_t)  # d/dp of C sqrt(dp)
    h = dp_t * 1e-7
    left = (orifice_flow(spec, dp_t, KEROSENE) - orifice_flow(spec, dp_t - h, KEROSENE)) / h
    right = (orifice_flow(spec, dp_t + h, KEROSENE) - orifice_flow(spec, dp_t, KEROSENE)) / h
    assert left == pytest.approx(analytic, rel=1e-6)
    assert right == pytest.approx(analytic, rel=1e-6)
    # value continuity from inside the blend
    assert orifice_flow(spec, dp_t * (1 - 1e-12), KEROSENE) == pytest.approx(q_t, rel=1e-10)


@given(st.floats(-1e4, 1e4))
def test_orifice_blend_monotone(dp):
    spec = OrificeSpec(max_area=1e-4)
    assert orifice_flow(spec, dp + 1.0, KEROSENE) > orifice_flow(spec, dp, KEROSENE)


def test_orifice_closed_has_no_flow():
    assert orifice_flow(OrificeSpec(max_area=1e-4, opening_fraction=0.0), 1e6, KEROSENE) == 0.0


def test_orifice_offset_is_clamped():
    spec = OrificeSpec(max_area=1e-4, opening_fraction=0.1, opening_offset=-0.15)
    assert spec.effective_area == 0.0
    assert OrificeSpec(max_area=1e-4, opening_fraction=0.95, opening_offset=0.1).effective_area == 1e-4


def test_relief_opening_law():
    spec = ReliefValveSpec(set_pressure=200e5, regulation_range=5e5)
    assert relief_opening(spec, 200e5) == 0.0
    assert relief_opening(spec, 205e5) == 1.0
    assert relief_opening(spec, 202.5e5) == pytest.approx(0.5)


def test_bypass_full_area():
    spec = BypassValveSpec(spool_diameter=10e-3, max_lift=5e-3)
    assert bypass_area(spec, 1.0) == pytest.approx(1.5708e-4, rel=1e-4)
    assert bypass_area(spec, 1.0) == math.pi * spec.spool_diameter * spec.max_lift
    assert spec.max_area == bypass_area(spec, 1.0)


def test_bypass_opening_law():
    spec = BypassValveSpec(set_differential=67e5, regulation_range=3.45e5)
    assert bypass_opening(spec, 67e5) == 0.5
    assert bypass_opening(spec, 67e5 + 1.725e5) == 1.0
    assert bypass_opening(spec, 67e5 - 1.725e5) == 0.0


@given(finite_dp)
def test_openings_bounded(dp):
    assert 0.0 <= relief_opening(ReliefValveSpec(), dp) <= 1.0
    assert 0.0 <= bypass_opening(BypassValveSpec(), dp) <= 1.0
    assert 0.0 <= bypass_opening(BypassValveSpec(opening_offset=0.3), dp) <= 1.0


@pytest.mark.parametrize(
    "factory",
    [
        lambda: PumpSpec(displacement=0.0),
        lambda: PumpSpec(volumetric_efficiency=0.0),
        lambda: PumpSpec(volumetric_efficiency=1.1),
        lambda: PumpSpec(leakage_coefficient=-1e-12),
        lambda: OrificeSpec(max_area=0.0),
        lambda: OrificeSpec(max_area=1e-4, discharge_coefficient=1.2),
        lambda: OrificeSpec(max_area=1e-4, laminar_transition_dp=0.0),
        lambda: OrificeSpec(max_area=1e-4, opening_fraction=1.5),
        lambda: ReliefValveSpec(set_pressure=0.0),
        lambda: ReliefValveSpec(regulation_range=-1.0),
        lambda: BypassValveSpec(spool_diameter=0.0),
        lambda: BypassValveSpec(max_lift=-1.0),
    ],
)
def test_invalid_specs_rejected(factory):
    with pytest.raises(ValueError):
        factory()
