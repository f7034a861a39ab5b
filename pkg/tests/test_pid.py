import numpy as np
import pytest

from tregsim.madc import MadcConversion
from tregsim.pid import (PidCoefficients, PidState, default_tuning, pid_cycle,
                         quantization_deviation_bound,
                         transfer_function_response, velocity_response)
from tregsim.thermal import fit_defaults


def test_pure_proportional_expansion():
    coeffs = PidCoefficients.derive(1.0, 0.0, 0.0, 1.0)
    assert (coeffs.c0, coeffs.c1, coeffs.c2) == (1.0, -1.0, 0.0)
    # the recurrence reduces to u(k) - u(k-1) = e(k) - e(k-1)
    e = np.array([3.0, 5.0, 2.0, 2.0])
    u = velocity_response(coeffs.c0, coeffs.c1, coeffs.c2, e)
    assert np.allclose(np.diff(u), np.diff(e))
    assert u[0] == e[0]


def test_null_controller():
    coeffs = PidCoefficients.derive(0.0, 0.0, 0.0, 1.0)
    assert coeffs.mantissas == (0, 0, 0)
    u = velocity_response(*coeffs.quantized, np.ones(10), u0=5.0)
    assert np.all(u == 5.0)


def test_velocity_form_matches_transfer_function_exactly():
    rng = np.random.default_rng(2)
    for _ in range(10):
        kp = 10 ** rng.uniform(-1, 1.5)
        ki = kp / rng.uniform(0.5, 20.0)
        ts = rng.uniform(0.1, 5.0)
        kd = rng.uniform(0.0, kp * ts / 4)
        e = rng.uniform(-1, 1, 500)
        coeffs = PidCoefficients.derive(kp, ki, kd, ts)
        u_vel = velocity_response(coeffs.c0, coeffs.c1, coeffs.c2, e)
        u_tf = transfer_function_response(kp, ki, kd, ts, e)
        assert np.abs(u_vel - u_tf).max() <= 1e-9 * max(1.0, np.abs(u_tf).max())


def test_quantized_recurrence_within_documented_bound():
    rng = np.random.default_rng(4)
    for _ in range(10):
        kp = 10 ** rng.uniform(-1, 1.7)
        ki = kp / rng.uniform(0.5, 20.0)
        ts = rng.uniform(0.1, 5.0)
        kd = rng.uniform(0.0, kp * ts / 4)
        e = rng.uniform(-1, 1, 1000)
        coeffs = PidCoefficients.derive(kp, ki, kd, ts)
        u_ref = transfer_function_response(kp, ki, kd, ts, e)
        u_q = velocity_response(*coeffs.quantized, e)
        bound = quantization_deviation_bound(coeffs, e)
        assert np.all(np.abs(u_q - u_ref) <= bound)


def test_coefficient_normalization():
    coeffs = PidCoefficients.derive(80.0, 8.0, 2.0, 0.2)
    for mag in coeffs.magnitudes:
        assert 0.0 <= mag <= 1.0
    qc = coeffs.quantized
    for c, q in zip((coeffs.c0, coeffs.c1, coeffs.c2), qc):
        assert abs(c - q) <= coeffs.quantization_step / 2 + 1e-12


class StubChannel:
    """Error conversions with a programmable measured count per tap."""

    def __init__(self, n2_of_preload):
        self.n2_of_preload = n2_of_preload
        self.calls = []

    def error_conversion(self, slot, coeff_mag, target_preload):
        self.calls.append((slot, coeff_mag, target_preload))
        n2 = self.n2_of_preload(slot, coeff_mag, target_preload)
        return MadcConversion(coeff_mag=coeff_mag, coeff_sign=1,
                              target_preload=target_preload,
                              subtract_from_target=True,
                              out_count=target_preload - n2,
                              n_charge=0, n_discharge=n2)


def make_state(coeffs, x=(1000.0, 800.0, 60.0)):
    st = PidState(u_prev=1000)
    st.target_x = list(x)
    st.sd_accum = [0.0, 0.0, 0.0]
    return st


def test_zero_error_leaves_actuation_unchanged():
    coeffs = PidCoefficients.derive(10.0, 1.0, 0.5, 2.0)
    # measured count always equals the loaded target: e == 0
    chan = StubChannel(lambda slot, mag, preload: preload)
    st = make_state(coeffs, x=(1000.0, 800.0, 60.0))
    for _ in range(3):
        u = pid_cycle(st, coeffs, chan)
        assert u == 1000
    assert not st.saturated


def test_cold_start_increases_actuation():
    # measured count above target (counts fall with temperature, so the
    # cell is below setpoint): positive kp must push the duty up
    coeffs = PidCoefficients.derive(10.0, 1.0, 0.5, 2.0)
    chan = StubChannel(lambda slot, mag, preload: preload + 20)
    st = make_state(coeffs)
    st.u_prev = 0
    u = pid_cycle(st, coeffs, chan)
    assert u > 0


def test_actuation_clamps_and_flags():
    coeffs = PidCoefficients.derive(10.0, 1.0, 0.5, 2.0)
    chan = StubChannel(lambda slot, mag, preload: preload + 10000)
    st = make_state(coeffs)
    st.u_prev = 4000
    u = pid_cycle(st, coeffs, chan)
    assert u == 4095
    assert st.saturated
    chan2 = StubChannel(lambda slot, mag, preload: max(preload - 10000, 0))
    st2 = make_state(coeffs)
    st2.u_prev = 10
    # drain the bank with three cold cycles
    for _ in range(3):
        u2 = pid_cycle(st2, coeffs, chan2)
    assert u2 == 0


def test_bank_products_saturate_at_8bit_range():
    coeffs = PidCoefficients.derive(10.0, 1.0, 0.5, 2.0)
    chan = StubChannel(lambda slot, mag, preload: preload + 100000)
    st = make_state(coeffs)
    pid_cycle(st, coeffs, chan)
    assert all(p <= 127 for p in st.bank[0])


def test_three_conversions_per_cycle_in_slot_order():
    coeffs = PidCoefficients.derive(10.0, 1.0, 0.5, 2.0)
    chan = StubChannel(lambda slot, mag, preload: preload)
    st = make_state(coeffs)
    pid_cycle(st, coeffs, chan)
    assert [c[0] for c in chan.calls] == [0, 1, 2]
    assert [c[1] for c in chan.calls] == list(coeffs.magnitudes)


def test_default_tuning_properties():
    c_th, g_amb, _ = fit_defaults()
    kp, ki, kd = default_tuning(c_th, g_amb, 0.27, 19.2, 4.0)
    assert ki > 0  # integral action present: no steady-state offset
    assert kp > 0 and kd > 0
    coeffs = PidCoefficients.derive(kp, ki, kd, 4.0, counts_per_kelvin=19.2)
    # all three taps active so every cycle runs three conversions
    assert all(q != 0 for q in coeffs.mantissas)
    # rail guard: scaled coefficient keeps products linear past 11 degC
    assert coeffs.magnitudes[0] * 19.2 <= 11.5
