"""Plant, sensing, monitor, tracker and controller in isolation."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perception_hazop.model import Guideword
from perception_hazop.sim import (
    ChannelSensor, Controller, ControllerConfig, Controls, EgoInit, GroundTruth, InjectionSpec,
    Measurement, PlantState, PlausibilityGate, Scenario, Segment, SensorChannel, Target,
    TrackerConfig, WorldObject, acc_law, aeb_trigger, alc_law, fcw_trigger, plausibility_monitor,
    step_plant, track, ttc,
)
from perception_hazop.sim.plant import LONG_ACCEL_MIN

DT = 0.01
STRAIGHT = Segment(1000.0)


# ---------------------------------------------------------------------------
# plant


def test_free_motion():
    s = step_plant(PlantState(0.0, 20.0, 0.3, 0.0), Controls(), STRAIGHT, DT)
    assert s.s == pytest.approx(0.2) and s.y == 0.3 and s.vy == 0.0 and s.v == 20.0


def test_curve_drift_rate():
    seg = Segment(1000.0, curvature=1 / 200)
    s = step_plant(PlantState(0.0, 20.0, 0.0, 0.0), Controls(), seg, DT)
    assert abs(s.vy) / DT == pytest.approx(2.0)


def test_full_braking():
    s = PlantState(0.0, 20.0, 0.0, 0.0)
    for _ in range(100):
        s = step_plant(s, Controls(long_accel=-50.0), STRAIGHT, DT)
    assert s.v == pytest.approx(20 + LONG_ACCEL_MIN * 1.0)
    assert s.v == pytest.approx(10.19)


def test_speed_never_negative():
    s = PlantState(0.0, 0.05, 0.0, 0.0)
    s = step_plant(s, Controls(long_accel=-9.0), STRAIGHT, DT)
    assert s.v == 0.0


@settings(max_examples=50)
@given(st.floats(0, 60), st.integers(1, 500))
def test_energy_sanity(v, n):
    s = PlantState(0.0, v, 0.0, 0.0)
    for _ in range(n):
        s = step_plant(s, Controls(), STRAIGHT, DT)
    assert s.v == v
    assert s.s == pytest.approx(n * v * DT, rel=1e-9, abs=1e-9)
    assert s.y == 0.0


# ---------------------------------------------------------------------------
# sensing: each injector against a constant or known truth, sample by sample

N = 100


def _scenario(targets, ego_v=0.0):
    return Scenario("open", N * DT, (STRAIGHT,), EgoInit(ego_v), tuple(targets))


def _readings(channel, targets, injection=None, ego_v=0.0, seed=7):
    sc = _scenario(targets, ego_v)
    sensor = ChannelSensor(channel, 0, [(0, injection)] if injection else [], sc, seed)
    out = []
    for k in range(N):
        t = k * DT
        truth = GroundTruth(t, PlantState(ego_v * t, ego_v, 0.0, 0.0), sc.targets, sc.road_model)
        out.append(sensor.sense(k, truth).value)
    return out


RANGE = SensorChannel("r", "radar", "target_range")
RELV = SensorChannel("v", "radar", "target_relative_velocity")
PRESENT = SensorChannel("p", "radar", "target_present")
CLASS = SensorChannel("c", "camera", "target_class")
OFFSET = SensorChannel("o", "camera", "lane_lateral_offset")
STATIC = Target("static", 50.0, 0.0)
WINDOW = (0.2, 0.5)


def _in_window(k):
    return WINDOW[0] - 1e-9 <= k * DT <= WINDOW[1] + 1e-9


def test_no_or_not_is_dropout_in_window():
    got = _readings(PRESENT, [STATIC], InjectionSpec("p", Guideword.NoOrNot, window=WINDOW))
    for k, value in enumerate(got):
        assert value == ({} if _in_window(k) else {"T0": True})


def test_more_and_less_are_bias():
    for gw, factor in ((Guideword.More, 1.3), (Guideword.Less, 0.7)):
        got = _readings(RANGE, [STATIC], InjectionSpec("r", gw, window=WINDOW, magnitude={"delta": 0.3}))
        for k, value in enumerate(got):
            expected = 50.0 * factor if _in_window(k) else 50.0
            assert value["T0"][0] == pytest.approx(expected)


def test_more_adds_detections_to_sets():
    got = _readings(PRESENT, [STATIC], InjectionSpec("p", Guideword.More, magnitude={"k": 2}))
    assert all(len(v) == 3 for v in got)


def test_as_well_as_adds_one_phantom():
    phantom = Target("vehicle", 20.0, 0.0, lateral_offset=0.5)
    got = _readings(RANGE, [STATIC], InjectionSpec("r", Guideword.AsWellAs, window=WINDOW, spurious_target=phantom))
    for k, value in enumerate(got):
        assert value["T0"] == (50.0, 0.0)
        if _in_window(k):
            assert set(value) == {"T0", "P0"} and value["P0"] == pytest.approx((20.0, 0.5))
        else:
            assert set(value) == {"T0"}


def test_part_of_drops_configured_target():
    near = Target("pedestrian", 30.0, 0.0, lateral_offset=1.0)
    got = _readings(CLASS, [STATIC, near], InjectionSpec("c", Guideword.PartOf, magnitude={"drop": [1]}))
    assert all(v == {"T0": "static"} for v in got)


def test_other_than_substitutes_class():
    ped = Target("pedestrian", 30.0, 0.0)
    inj = InjectionSpec("c", Guideword.OtherThanInstead, magnitude={"from": "pedestrian", "to": "static"})
    assert all(v == {"T0": "static"} for v in _readings(CLASS, [ped], inj))


def test_reverse_flips_sign():
    got = _readings(RELV, [STATIC], InjectionSpec("v", Guideword.Reverse), ego_v=5.0)
    assert all(v["T0"] == pytest.approx(5.0) for v in got)
    nominal = _readings(RELV, [STATIC], ego_v=5.0)
    assert all(v["T0"] == pytest.approx(-5.0) for v in nominal)


def test_early_and_late_shift_in_time():
    approaching = [STATIC]
    nominal = _readings(RANGE, approaching, ego_v=10.0)
    early = _readings(RANGE, approaching, InjectionSpec("r", Guideword.Early, magnitude={"dt": 0.2}), ego_v=10.0)
    late = _readings(RANGE, approaching, InjectionSpec("r", Guideword.Late, magnitude={"dt": 0.2}), ego_v=10.0)
    shift = 20
    for k in range(N - shift):
        assert early[k]["T0"] == pytest.approx(nominal[k + shift]["T0"])
    for k in range(N):
        if k < shift:
            assert late[k] == {}
        else:
            assert late[k] == nominal[k - shift]


def test_intermittent_square_wave():
    inj = InjectionSpec("p", Guideword.Intermittent, magnitude={"period": 0.4, "duty": 0.5})
    flags = [bool(v) for v in _readings(PRESENT, [STATIC], inj)]
    # runs of equal flags are exactly half a period long, apart from the ends
    runs, count = [], 1
    for a, b in zip(flags, flags[1:]):
        if a == b:
            count += 1
        else:
            runs.append(count)
            count = 1
    assert runs[1:] and all(r == 20 for r in runs[1:])
    assert sum(flags) in range(40, 61)


def test_intermittent_flicker_on_class():
    inj = InjectionSpec("c", Guideword.Intermittent, magnitude={"period": 0.1, "duty": 0.5, "flicker_class": "vehicle"})
    got = _readings(CLASS, [Target("pedestrian", 30.0, 0.0)], inj)
    labels = {v["T0"] for v in got}
    assert labels == {"pedestrian", "vehicle"}


def test_intermittent_phase_depends_on_seed():
    inj = InjectionSpec("p", Guideword.Intermittent, magnitude={"period": 0.4, "duty": 0.5})
    patterns = {tuple(bool(v) for v in _readings(PRESENT, [STATIC], inj, seed=s)) for s in range(8)}
    assert len(patterns) > 1
    assert _readings(PRESENT, [STATIC], inj, seed=3) == _readings(PRESENT, [STATIC], inj, seed=3)


def test_lane_offset_dropout_reports_none():
    got = _readings(OFFSET, [], InjectionSpec("o", Guideword.NoOrNot))
    assert all(v is None for v in got)


def test_gating_by_range_and_field_of_view():
    far = Target("vehicle", 200.0, 0.0)
    wide = Target("vehicle", 5.0, 0.0, lateral_offset=4.0)
    got = _readings(PRESENT, [far, wide])
    assert all(v == {} for v in got)


def test_noise_is_seeded():
    noisy = SensorChannel("r", "radar", "target_range", noise_sd=0.5)
    a = _readings(noisy, [STATIC], seed=1)
    assert a == _readings(noisy, [STATIC], seed=1)
    assert a != _readings(noisy, [STATIC], seed=2)


# ---------------------------------------------------------------------------
# plausibility monitor


def test_monitor_verdicts():
    assert plausibility_monitor(-12.0, (0.0, 250.0)) == (False, "below-physical-min")
    assert plausibility_monitor(80.0, (0.0, 250.0)).accepted
    assert plausibility_monitor(300.0, (0.0, 250.0)).reason == "above-physical-max"
    assert plausibility_monitor((-3.0, 0.0), (0.0, 250.0)).reason == "below-physical-min"


def test_gate_holds_then_drops():
    gate = PlausibilityGate((0.0, 250.0), hold_max=0.5)
    gate.filter(Measurement(0.0, "target_range", {"T0": (40.0, 0.0)}))
    kept = []
    for k in range(1, 101):
        m = gate.filter(Measurement(k * DT, "target_range", {"T0": (-40.0, 0.0)}))
        kept.append(m.value.get("T0"))
    assert gate.rejects == 100
    assert all(v == (40.0, 0.0) for v in kept[:50])
    assert all(v is None for v in kept[50:])


def test_gate_scalar_channel():
    gate = PlausibilityGate((-5.0, 5.0))
    assert gate.filter(Measurement(0.0, "lane_lateral_offset", 9.0)).value is None
    assert gate.fault


# ---------------------------------------------------------------------------
# tracker


def _crossing(t):
    return 40.0 - 10.0 * t, -6.0 + 1.5 * t


def test_crossing_prediction():
    samples = [(k * DT, *_crossing(k * DT), "pedestrian") for k in range(201)]
    state = track(samples)
    # truth crosses the lane centre at t = 4 s
    tau = next(tau for tau, _x, y in state.predicted_path if y >= -1e-9)
    assert abs(state.t + tau - 4.0) <= 0.1


def _flicker_samples(period_steps):
    out = []
    for k in range(301):
        cls = "pedestrian" if (k // period_steps) % 2 == 0 else "vehicle"
        out.append((k * DT, *_crossing(k * DT), cls))
    return out


def test_discard_history_loses_velocity():
    cfg = TrackerConfig(discard_history_on_reclass=True)
    samples = _flicker_samples(50)
    # at every reclassification the estimate collapses to zero
    for k in range(50, 301, 50):
        state = track(samples[: k + 1], cfg)
        assert state.predicted_velocity[1] == 0.0
        assert state.n_samples == 1


def test_history_survives_relabel():
    cfg = TrackerConfig(discard_history_on_reclass=False)
    samples = _flicker_samples(50)
    for k in range(50, 301, 10):
        vy = track(samples[: k + 1], cfg).predicted_velocity[1]
        assert abs(vy - 1.5) <= 0.15


def test_static_class_predicts_no_lateral_motion():
    samples = [(k * DT, *_crossing(k * DT), "static") for k in range(50)]
    state = track(samples)
    assert state.velocity[1] == pytest.approx(1.5)
    assert state.predicted_velocity[1] == 0.0


def test_history_horizon_bounds_samples():
    samples = [(k * DT, *_crossing(k * DT), None) for k in range(500)]
    assert track(samples, TrackerConfig(history_horizon=0.5)).n_samples == 51


# ---------------------------------------------------------------------------
# control laws

CFG = ControllerConfig()


def test_acc_equilibrium():
    assert acc_law(1.8 * 25.0, 25.0, 0.0, CFG) == pytest.approx(0.0)


def test_acc_clamps():
    assert acc_law(5.0, 30.0, -20.0, CFG) == CFG.acc_min
    assert acc_law(200.0, 10.0, 5.0, CFG) == CFG.acc_max


def test_ttc_and_boundaries():
    assert ttc(30.0, 20.0) == 1.5
    assert aeb_trigger(ttc(30.0, 20.0), CFG)
    assert not aeb_trigger(ttc(30.1, 20.0), CFG)
    assert fcw_trigger(2.5, CFG)
    assert ttc(30.0, 0.0) == math.inf
    assert ttc(30.0, -3.0) == math.inf


def test_alc_equilibrium_and_clamp():
    assert alc_law(0.0, 0.0, 25.0, 0.0, CFG) == 0.0
    assert alc_law(0.0, 0.0, 20.0, 1 / 200, CFG) == pytest.approx(2.0)
    assert alc_law(-10.0, 0.0, 20.0, 0.0, CFG) == CFG.limits.nominal_max


def _obj(gap, rel_v, lat=0.0):
    return WorldObject("T0", gap, lat, rel_v, None, "vehicle")


def test_aeb_latches_until_stopped_and_clear():
    c = Controller(CFG, 20.0, DT)
    d = c.step(20.0, [_obj(30.0, -20.0)], 0.0, 0.0, True, False, {})
    assert d.aeb and d.aeb_onset and d.controls.long_accel == -CFG.aeb_decel
    # threat gone but still moving: stays latched
    d = c.step(10.0, [], 0.0, 0.0, True, False, {})
    assert d.aeb and not d.aeb_onset
    # standstill and clear: released once the hold time has elapsed
    held = [c.step(0.0, [], 0.0, 0.0, True, False, {}).aeb for _ in range(150)]
    assert held.index(False) == int(round(CFG.aeb_hold / DT)) - 1


def test_aeb_held_while_object_in_lane():
    c = Controller(CFG, 20.0, DT)
    c.step(20.0, [_obj(30.0, -20.0)], 0.0, 0.0, True, False, {})
    for _ in range(300):
        d = c.step(0.0, [_obj(2.0, 0.0)], 0.0, 0.0, True, False, {})
    assert d.aeb
    d = c.step(0.0, [], 0.0, 0.0, True, False, {})
    assert not d.aeb


def test_warning_escalates():
    c = Controller(CFG, 25.0, DT)
    d = c.step(25.0, [_obj(60.0, -25.0)], 0.0, 0.0, True, False, {})
    assert d.fcw and d.aeb
    c = Controller(ControllerConfig(fcw_escalates=False), 25.0, DT)
    d = c.step(25.0, [_obj(60.0, -25.0)], 0.0, 0.0, True, False, {})
    assert d.fcw and not d.aeb


def test_pessimistic_closing_speed():
    o = WorldObject("T0", 20.0, 0.0, 5.0, (-10.0, 0.0), "vehicle")
    assert o.closing_speed() == 10.0


def test_predicted_crossing_is_a_threat():
    c = Controller(ControllerConfig(fcw_escalates=False), 20.0, DT)
    crossing = WorldObject("T0", 25.0, -4.0, -20.0, (-20.0, 3.0), "pedestrian")
    d = c.step(20.0, [crossing], 0.0, 0.0, True, False, {"T0": 3.0})
    assert d.lead is None and d.aeb
    c = Controller(ControllerConfig(fcw_escalates=False), 20.0, DT)
    d = c.step(20.0, [crossing], 0.0, 0.0, True, False, {"T0": 0.0})
    assert not d.aeb


def test_lane_loss_needs_all_lane_channels():
    c = Controller(CFG, 20.0, DT)
    for _ in range(60):
        d = c.step(20.0, [], None, 0.0, True, False, {})
    assert not d.lane_lost
    c = Controller(CFG, 20.0, DT)
    lost = [c.step(20.0, [], None, None, True, False, {}).lane_lost for _ in range(60)]
    assert lost.index(True) == 50


def test_fault_forces_fallback_deceleration():
    c = Controller(CFG, 20.0, DT)
    d = c.step(20.0, [], 0.0, 0.0, True, True, {})
    assert d.controls.long_accel == -CFG.fault_decel
