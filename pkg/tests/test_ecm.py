"""Cell model: OCV lookup, exact zero-order-hold stepping, simulation."""

import dataclasses
import math

import numpy as np
import pytest

from voltmask import (
    BatteryState,
    OcvCurve,
    TimeSeries,
    invert_ocv,
    ocv,
    simulate,
    state_matrices,
    step,
    synthetic_profile,
    terminal_voltage,
)
from voltmask.ecm import dump_params, load_params


class TestOcvCurve:
    def test_interpolation_midpoint(self):
        curve = OcvCurve((0.0, 1.0), (3.0, 4.2))
        assert math.isclose(ocv(curve, 0.5), 3.6)
        assert ocv(curve, 0.0) == 3.0
        assert ocv(curve, 1.0) == 4.2

    def test_extrapolation_extends_end_segments(self):
        curve = OcvCurve((0.0, 1.0), (3.0, 4.2))
        assert math.isclose(ocv(curve, 1.1), 4.32)
        assert math.isclose(ocv(curve, -0.1), 2.88)

    def test_inversion_round_trip(self, cell):
        for soc in np.linspace(-0.05, 1.05, 41):
            v = ocv(cell.ocv, soc)
            assert math.isclose(invert_ocv(cell.ocv, v), soc, abs_tol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="span"):
            OcvCurve((0.1, 1.0), (3.0, 4.0))
        with pytest.raises(ValueError, match="not strictly increasing"):
            OcvCurve((0.0, 0.5, 0.5, 1.0), (3.0, 3.1, 3.2, 3.3))
        with pytest.raises(ValueError, match="ocv values not strictly increasing"):
            OcvCurve((0.0, 0.5, 1.0), (3.0, 3.5, 3.5))
        with pytest.raises(ValueError, match="count"):
            OcvCurve((0.0, 1.0), (3.0, 3.5, 4.0))
        with pytest.raises(ValueError, match="at least 2"):
            OcvCurve((0.0,), (3.0,))


class TestParams:
    def test_state_matrices_values(self, cell):
        mats = state_matrices(cell)
        # x = (soc, vc): soc has no self-dynamics, vc decays with 1/(r1 c1)
        assert mats.a[0, 0] == 0.0 and mats.a[0, 1] == 0.0 and mats.a[1, 0] == 0.0
        assert mats.a[1, 1] == -1.0 / (cell.r1 * cell.c1)
        assert np.isclose(mats.a[1, 1], -0.0184992, atol=1e-7)
        assert np.allclose(mats.b, [-6.98226e-5, 1.901719e-4], rtol=1e-5)
        assert mats.b[0] == -1.0 / cell.capacity_q
        assert mats.b[1] == 1.0 / cell.c1

    def test_tau1(self, cell):
        assert cell.tau1 == cell.r1 * cell.c1

    def test_positive_finite_required(self, cell):
        with pytest.raises(ValueError, match="r0 must be positive"):
            dataclasses.replace(cell, r0=0.0)
        with pytest.raises(ValueError, match="capacity_q must be positive"):
            dataclasses.replace(cell, capacity_q=-1.0)
        with pytest.raises(ValueError, match="c1 must be positive"):
            dataclasses.replace(cell, c1=math.nan)

    def test_json_round_trip(self, cell, tmp_path):
        path = tmp_path / "cell.json"
        dump_params(cell, path)
        back = load_params(path)
        assert back == cell

    def test_load_errors_name_the_key(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"capacity_As": 100.0}')
        with pytest.raises(ValueError, match="missing key 'r0_ohm'"):
            load_params(path)
        path.write_text("not json")
        with pytest.raises(ValueError, match="invalid JSON"):
            load_params(path)


def test_terminal_voltage_sign_convention(linear_cell):
    state = BatteryState(0.5, 0.05)
    # positive current discharges: ohmic drop subtracts from the terminal
    assert math.isclose(terminal_voltage(linear_cell, state, 4.0), 3.495948)
    assert math.isclose(terminal_voltage(linear_cell, state, -4.0), 3.604052)
    assert math.isclose(terminal_voltage(linear_cell, state, 0.0), 3.55)


def test_step_soc_is_exact_coulomb_counting(cell):
    # 4 A for 1074.15 s moves exactly 4 * 1074.15 / 14322 = 0.3 of SoC
    out = step(cell, BatteryState(0.8, 0.0), 4.0, 1074.15)
    assert math.isclose(out.soc, 0.5, rel_tol=1e-12)


def test_step_vc_zero_order_hold_value(cell):
    out = step(cell, BatteryState(0.5, 0.0), 1.0, 1.0)
    assert math.isclose(out.vc, 1.884237e-4, rel_tol=1e-5)

    # independent check: forward Euler on dvc/dt = -vc/tau + i/c1 at a
    # 10000x finer step agrees to its own O(h) accuracy
    h = 1e-4
    vc = 0.0
    for _ in range(10000):
        vc += h * (-vc / cell.tau1 + 1.0 / cell.c1)
    assert math.isclose(out.vc, vc, abs_tol=1e-9)


def test_step_composition_property(cell):
    # exact discretization: one step of 2*dt equals two steps of dt
    rng = np.random.default_rng(0)
    for _ in range(20):
        state = BatteryState(rng.uniform(0.1, 0.9), rng.uniform(-0.05, 0.05))
        current = rng.uniform(-10.0, 10.0)
        dt = rng.uniform(0.1, 30.0)
        twice = step(cell, step(cell, state, current, dt), current, dt)
        once = step(cell, state, current, 2.0 * dt)
        assert math.isclose(twice.soc, once.soc, rel_tol=1e-12)
        assert math.isclose(twice.vc, once.vc, rel_tol=1e-9, abs_tol=1e-15)


def test_step_rejects_bad_dt(cell):
    with pytest.raises(ValueError, match="dt must be positive"):
        step(cell, BatteryState(0.5, 0.0), 1.0, 0.0)


class TestSimulate:
    def test_matches_repeated_step(self, cell):
        prof = synthetic_profile("sin_mix", 3.0, 1.0, 120.0, 1.0, seed=7)
        x0 = BatteryState(0.7, 0.01)
        sim = simulate(cell, x0, prof)
        state = x0
        for k in range(len(prof)):
            assert abs(state.soc - sim.soc[k]) < 1e-13
            assert state.vc == sim.vc[k]
            if k < len(prof) - 1:
                state = step(cell, state, float(prof.samples[k]), prof.dt)

    def test_voltage_matches_pointwise_readout(self, cell):
        prof = synthetic_profile("pulse_train", 2.0, 0.5, 160.0, 1.0)
        sim = simulate(cell, BatteryState(0.6, 0.0), prof)
        for k in (0, 1, 80, 159, 160):
            state = BatteryState(sim.soc[k], sim.vc[k])
            v = terminal_voltage(cell, state, float(prof.samples[k]))
            assert v == sim.voltage.samples[k]

    def test_final_sample_current_only_affects_voltage(self, cell):
        base = synthetic_profile("constant", 0.0, 2.0, 10.0, 1.0)
        bumped = base.with_samples(np.concatenate([base.samples[:-1], [50.0]]))
        a = simulate(cell, BatteryState(0.5, 0.0), base)
        b = simulate(cell, BatteryState(0.5, 0.0), bumped)
        np.testing.assert_array_equal(a.soc, b.soc)
        np.testing.assert_array_equal(a.vc, b.vc)
        assert a.voltage.samples[-1] != b.voltage.samples[-1]

    def test_coulomb_count_matches_exact_sum(self, cell):
        prof = synthetic_profile("sin_mix", 5.0, 1.3, 5000.0, 1.0, seed=21)
        x0 = BatteryState(0.9, 0.0)
        sim = simulate(cell, x0, prof)
        expected = x0.soc - prof.dt / cell.capacity_q * math.fsum(prof.samples[:-1].tolist())
        assert abs(sim.soc[-1] - expected) <= 1e-12 * abs(expected)

    def test_constant_current_closed_form(self, cell):
        i = 3.0
        prof = synthetic_profile("constant", 0.0, i, 500.0, 1.0)
        sim = simulate(cell, BatteryState(0.8, 0.02), prof)
        k = np.arange(len(prof))
        alpha = math.exp(-prof.dt / cell.tau1)
        vc_expected = 0.02 * alpha**k + cell.r1 * (1.0 - alpha**k) * i
        soc_expected = 0.8 - i * prof.dt * k / cell.capacity_q
        np.testing.assert_allclose(sim.vc, vc_expected, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(sim.soc, soc_expected, rtol=1e-12)

    def test_zero_current_holds_state(self, cell):
        prof = synthetic_profile("constant", 0.0, 0.0, 50.0, 1.0)
        sim = simulate(cell, BatteryState(0.4, 0.0), prof)
        np.testing.assert_array_equal(sim.soc, np.full(51, 0.4))
        np.testing.assert_array_equal(sim.vc, np.zeros(51))
        np.testing.assert_array_equal(sim.voltage.samples, np.full(51, ocv(cell.ocv, 0.4)))

    def test_time_shift_does_not_change_states(self, cell):
        prof = synthetic_profile("sin_mix", 2.0, 1.0, 60.0, 1.0, seed=2)
        shifted = TimeSeries(100.0, prof.dt, prof.samples)
        a = simulate(cell, BatteryState(0.5, 0.0), prof)
        b = simulate(cell, BatteryState(0.5, 0.0), shifted)
        np.testing.assert_array_equal(a.soc, b.soc)
        np.testing.assert_array_equal(a.voltage.samples, b.voltage.samples)
        assert b.voltage.t0 == 100.0

    def test_soc_violation_reported_not_clamped(self, cell):
        # 20 A for an hour empties a 14322 As cell several times over
        prof = synthetic_profile("constant", 0.0, 20.0, 3600.0, 10.0)
        sim = simulate(cell, BatteryState(0.3, 0.0), prof)
        assert sim.soc_violation
        assert sim.soc[-1] < 0.0

        calm = simulate(cell, BatteryState(0.3, 0.0), synthetic_profile("constant", 0.0, 0.1, 100.0, 1.0))
        assert not calm.soc_violation

    def test_states_and_final_state(self, cell):
        prof = synthetic_profile("constant", 0.0, 1.0, 5.0, 1.0)
        sim = simulate(cell, BatteryState(0.5, 0.0), prof)
        states = sim.states()
        assert len(states) == 6
        assert states[0] == BatteryState(0.5, 0.0)
        assert sim.final_state == states[-1]
