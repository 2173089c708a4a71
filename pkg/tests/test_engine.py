import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinpat._accel import HAVE_NUMBA, use_backend
from spinpat.engine import (NO_SWITCH, CalibrationRequiredError, CalibrationTable, ScheduleError, SimulationTrace,
                            SupplySchedule, classify_majority_strength, compile_circuit, estimate_area,
                            load_calibration, measure_power, overdrive, simulate, steady_logic_value)
from spinpat.experiments import majority_states
from spinpat.netlist import Netlist, build_majority_gate, build_xnor_cell


@pytest.fixture(scope="module")
def maj3(params):
    return build_majority_gate(3, params)


def const_trace(values, dt=1e-12):
    v = np.asarray(values, float)
    data = np.zeros((v.size, 1, 3))
    data[:, 0, 0] = v
    return SimulationTrace(np.arange(v.size) * dt, ["o"], data, dt)


# ---------------------------------------------------------------- schedules

def test_schedule_cap():
    with pytest.raises(ScheduleError):
        SupplySchedule.constant({"a": 25e-3})


def test_schedule_order():
    with pytest.raises(ScheduleError):
        SupplySchedule([(1e-9, {}), (0.0, {})])


def test_staged_phases(maj3):
    s = SupplySchedule.staged(maj3, 5e-3, [(1e-9, 2e-9)])
    assert s.voltages_at(0.5e-9) == {}
    assert s.voltages_at(1.5e-9) == {"in1": -5e-3, "in2": -5e-3, "in3": -5e-3}
    assert s.voltages_at(2.5e-9) == {}


def test_staged_missing_phase(maj3):
    maj3 = Netlist.from_dict(maj3.to_dict())
    maj3.supplies[0].stage = 3
    with pytest.raises(ScheduleError):
        SupplySchedule.staged(maj3, 5e-3, [(0.0, 1e-9)])


# -------------------------------------------------------------- simulation

def test_non_volatile_without_supply(params):
    net = build_xnor_cell(params)
    st0 = {"A": 1, "B": 0, "C": 0, "carry": 1, "out": 0}
    tr = simulate(net, SupplySchedule.off(), st0, params.thermal(T=0.0), t_end=1e-9)
    for mid, bit in st0.items():
        assert steady_logic_value(tr, mid, 50e-12) == bit


def test_majority_negative_supply(maj3, params):
    tr = simulate(maj3, SupplySchedule.staged(maj3, 5e-3), majority_states(3, 3), params.thermal(T=0.0),
                  t_end=2e-9)
    assert steady_logic_value(tr, "out", 50e-12) == 1


@pytest.mark.parametrize("bits", [(1, 1, 0), (0, 0, 1), (1, 0, 1)])
def test_majority_positive_supply_complements(bits, params):
    net = build_majority_gate(3, params, polarity=1)
    maj = int(sum(bits) >= 2)
    st0 = {"in1": bits[0], "in2": bits[1], "in3": bits[2], "out": maj}
    tr = simulate(net, SupplySchedule.staged(net, 5e-3), st0, params.thermal(T=0.0), t_end=4e-9)
    assert steady_logic_value(tr, "out", 50e-12) == 1 - maj


def test_same_seed_same_trace(maj3, params):
    run = lambda seed: simulate(maj3, SupplySchedule.staged(maj3, 5e-3), majority_states(3, 2),
                                params.thermal(seed=seed), t_end=0.2e-9)
    a, b, c = run(5), run(5), run(6)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")
def test_backends_agree(params):
    net = build_xnor_cell(params)
    st0 = {"A": 1, "B": 1, "C": 0, "carry": 0, "out": 0}
    out = {}
    for b in ("numba", "numpy"):
        with use_backend(b):
            out[b] = simulate(net, SupplySchedule.staged(net, 5e-3), st0, params.thermal(seed=2),
                              t_end=0.1e-9).data
    assert np.max(np.abs(out["numba"] - out["numpy"])) < 1e-10


def test_missing_initial_state(maj3, params):
    with pytest.raises(KeyError):
        simulate(maj3, SupplySchedule.off(), {"in1": 0}, t_end=1e-11, params=params)


def test_bad_initial_value(maj3, params):
    st0 = majority_states(3, 3)
    st0["out"] = 7
    with pytest.raises(ValueError):
        simulate(maj3, SupplySchedule.off(), st0, t_end=1e-11, params=params)


def test_record_subset(maj3, params):
    tr = simulate(maj3, SupplySchedule.off(), majority_states(3, 3), params.thermal(T=0.0), t_end=1e-11,
                  record=["out"])
    assert tr.ids == ["out"]
    with pytest.raises(KeyError):
        tr.m("in1")


def test_csv_roundtrip(tmp_path, maj3, params):
    tr = simulate(maj3, SupplySchedule.staged(maj3, 5e-3), majority_states(3, 3), params.thermal(seed=1),
                  t_end=0.05e-9)
    tr.to_csv(tmp_path / "t.csv")
    back = SimulationTrace.from_csv(tmp_path / "t.csv")
    assert back.ids == tr.ids
    assert np.allclose(back.data, tr.data, atol=1e-8)
    assert np.allclose(back.times, tr.times, rtol=1e-6)


# ---------------------------------------------------------- steady values

def test_steady_logic_values():
    assert steady_logic_value(const_trace([-1, 1, 1, 1]), "o", 2e-12) == 1
    assert steady_logic_value(const_trace([1, -1, -1, -1]), "o", 2e-12) == 0
    osc = 0.5 * np.sin(np.linspace(0, 20, 200))
    assert steady_logic_value(const_trace(osc), "o", 50e-12) is None
    with pytest.raises(KeyError):
        steady_logic_value(const_trace([1, 1]), "x", 1e-12)


# ------------------------------------------------------------ calibration

def test_classify_nearest_median():
    cal = CalibrationTable(5, 5e-3, 300.0, {5: 0.35e-9, 4: 0.65e-9, 3: 1.8e-9})
    assert cal.classify(0.35e-9) == 5
    assert cal.classify(0.7e-9) == 4
    assert cal.classify(None) == NO_SWITCH
    assert cal.classify(2.5e-9) == NO_SWITCH


def test_classify_trace_requires_calibration():
    with pytest.raises(CalibrationRequiredError):
        classify_majority_strength(const_trace([-1, 1]), "o", None)


def test_classify_trace_no_switch():
    cal = CalibrationTable(3, 5e-3, 300.0, {3: 0.5e-9, 2: 1.5e-9})
    assert classify_majority_strength(const_trace(-np.ones(100)), "o", cal) == NO_SWITCH


def test_bundled_calibration():
    cal = load_calibration(3, 5e-3, 300.0)
    assert cal.medians[3] < cal.medians[2] < cal.window
    with pytest.raises(CalibrationRequiredError):
        load_calibration(3, 7e-3, 300.0)


# ------------------------------------------------------------ power / area

def test_zero_supply_zero_power(maj3, params):
    assert measure_power(maj3, SupplySchedule.off(), params).total == 0.0


def test_power_scales_quadratically(maj3, params):
    p5 = measure_power(maj3, {"in1": -5e-3, "in2": -5e-3, "in3": -5e-3}, params).total
    p10 = measure_power(maj3, {"in1": -10e-3, "in2": -10e-3, "in3": -10e-3}, params).total
    assert p10 == pytest.approx(4 * p5, rel=1e-9)
    assert p5 > 0


def test_power_orders(params):
    assert 1.1e-6 < measure_power(build_xnor_cell(params), None, params).total < 110e-6
    assert 0.375e-6 < measure_power(build_majority_gate(3, params), None, params).total < 37.5e-6


def test_area(params):
    assert estimate_area(Netlist(), params) == 0.0
    assert estimate_area(build_xnor_cell(params), params) < 0.3e-12
    assert estimate_area(build_majority_gate(3, params), params) < 0.2e-12


@given(st.floats(1e-3, 20e-3))
@settings(max_examples=10)
def test_overdrive_linear_in_voltage(V):
    from spinpat.config import default_params

    p = default_params()
    net = build_majority_gate(3, p)
    st0 = majority_states(3, 3)
    chi = lambda v: overdrive(net, st0, "out", {k: -v for k in ("in1", "in2", "in3")}, p)
    assert chi(V) == pytest.approx(V / 5e-3 * chi(5e-3), rel=1e-9)


def test_overdrive_orders_alignment(params):
    net = build_majority_gate(5, params)
    chis = [overdrive(net, majority_states(5, k), "out", None, params) for k in (5, 4, 3)]
    assert chis[0] > chis[1] > chis[2] > 1
