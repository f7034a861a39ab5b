"""Velocity-form PID computed in the count domain.

The controller never sees a temperature: the plant output is the channel's
count, the setpoint is expressed as a scaled target preload, and the three
per-cycle conversions produce the banked products that the accumulator
sums into the 12-bit duty code.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .madc import COEFF_LEVELS

PRODUCT_LIMIT = 127        # signed product storage (sign + 7-bit magnitude)
DUTY_CODE_MAX = 4095

# Upper limit on (quantized c0) * (pid-scale counts per kelvin).  Keeps the
# +-127 product range good for >= ~11 degC of error so ordinary setpoint
# steps never saturate the bank.
MAX_COEFF_COUNTS_PER_KELVIN = 11.5


def _shared_exponent(c_values, counts_per_kelvin=None):
    m = max(abs(c) for c in c_values)
    if m == 0:
        return 0
    exp = math.ceil(math.log2(m / ((COEFF_LEVELS - 1) / COEFF_LEVELS)))
    if counts_per_kelvin is not None:
        while (abs(c_values[0]) / 2 ** exp) * counts_per_kelvin > MAX_COEFF_COUNTS_PER_KELVIN:
            exp += 1
    return exp


@dataclass(frozen=True)
class PidCoefficients:
    """Gain set plus its fixed-point encoding.

    c0/c1/c2 are the exact velocity-form coefficients; q0/q1/q2 are the
    signed 7-bit mantissas sharing the power-of-two exponent.
    """

    kp: float
    ki: float
    kd: float
    ts: float
    c0: float
    c1: float
    c2: float
    exponent: int
    q0: int
    q1: int
    q2: int

    @classmethod
    def derive(cls, kp, ki, kd, ts, counts_per_kelvin=None):
        """Expand (kp, ki, kd, ts) into quantized velocity coefficients.

        Tustin integral, backward-difference derivative:
            c0 = kp + ki*ts/2 + kd/ts
            c1 = -kp + ki*ts/2 - 2*kd/ts
            c2 = kd/ts
        The shared exponent normalizes every |c_n| below one; passing the
        channel's count slope widens it further so products cannot
        saturate on ordinary steps.
        """
        if ts <= 0:
            raise ConfigurationError("ts must be positive")
        c0 = kp + ki * ts / 2.0 + kd / ts
        c1 = -kp + ki * ts / 2.0 - 2.0 * kd / ts
        c2 = kd / ts
        exp = _shared_exponent((c0, c1, c2), counts_per_kelvin)
        scale = 2.0 ** exp
        q0, q1, q2 = (int(round(c / scale * COEFF_LEVELS)) for c in (c0, c1, c2))
        return cls(kp, ki, kd, ts, c0, c1, c2, exp, q0, q1, q2)

    @property
    def quantized(self):
        """The coefficients actually realized after 7-bit quantization."""
        scale = 2.0 ** self.exponent
        return tuple(q / COEFF_LEVELS * scale for q in (self.q0, self.q1, self.q2))

    @property
    def mantissas(self):
        return (self.q0, self.q1, self.q2)

    @property
    def signs(self):
        return tuple(1 if q >= 0 else -1 for q in self.mantissas)

    @property
    def magnitudes(self):
        """Coefficient magnitudes handed to the converter, in (0, 1]."""
        return tuple(abs(q) / COEFF_LEVELS for q in self.mantissas)

    @property
    def quantization_step(self):
        return 2.0 ** self.exponent / COEFF_LEVELS

    def coefficient_errors(self):
        qc = self.quantized
        return tuple(abs(c - q) for c, q in zip((self.c0, self.c1, self.c2), qc))


@dataclass
class PidState:
    """Loop state: banked products, previous actuation, setpoint scaling."""

    u_prev: int = 0
    bank: list = field(default_factory=lambda: [[0, 0, 0], [0, 0, 0], [0, 0, 0]])
    setpoint_celsius: float = None
    target_x: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    sd_accum: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    saturated: bool = False

    def load_setpoint(self, t_set_c, coeffs, temp_map, cal_preload, charge_scale):
        """Express a Celsius setpoint as per-tap target values.

        The target must live on each tap's own charge scale: the loaded
        calibration word scales with the coefficient (a relative gain
        trim), so the expected discharge count at the setpoint is
        (round(|c_n|*n1_pid) - round(|c_n|*cal*scale)) * r_set with r_set
        estimated from the design curve and the cell's stored
        calibration.  Half a count is subtracted so the floor of the
        dithered conversion is unbiased; the sub-count fraction is
        sigma-delta dithered across cycles by pid_cycle.
        """
        n1 = temp_map.cfg.n1_counts
        r_set = temp_map.counts_cont(t_set_c) / (n1 - cal_preload)
        self.setpoint_celsius = t_set_c
        for n, mag in enumerate(coeffs.magnitudes):
            g = round(mag * n1 * charge_scale)
            cal_n = round(mag * cal_preload * charge_scale)
            self.target_x[n] = (g - cal_n) * r_set - 0.5
        self.sd_accum = [0.0, 0.0, 0.0]


def pid_cycle(state, coeffs, channel):
    """Run one controller cycle: three conversions, bank update, accumulate.

    channel.error_conversion(coeff_mag, target_preload) must perform one
    dual-slope conversion against the temperature-sensing currents and
    return the conversion record.  The banked product is the measured
    count minus the target preload (counts fall with temperature, so a
    cold cell yields positive products), saturating at the 8-bit store.
    Accumulation applies coefficient signs and the shared exponent:
        u(k) = clamp(u(k-1) + 2**exp * (s0*p0(k) + s1*p1(k-1) + s2*p2(k-2)))
    """
    mags = coeffs.magnitudes
    signs = coeffs.signs
    products = [0, 0, 0]
    for n in range(3):
        if coeffs.mantissas[n] == 0:
            continue
        base = math.floor(state.target_x[n])
        frac = state.target_x[n] - base
        state.sd_accum[n] += frac
        if state.sd_accum[n] >= 1.0:
            state.sd_accum[n] -= 1.0
            preload = base + 1
        else:
            preload = base
        conv = channel.error_conversion(n, mags[n], preload)
        p = -conv.out_count  # measured-minus-target ordering
        products[n] = max(-PRODUCT_LIMIT, min(PRODUCT_LIMIT, p))

    increment = (signs[0] * products[0]
                 + signs[1] * state.bank[0][1]
                 + signs[2] * state.bank[1][2])
    if coeffs.exponent >= 0:
        increment = increment * (2 ** coeffs.exponent)
    else:
        increment = math.floor(increment * 2.0 ** coeffs.exponent)
    raw = state.u_prev + increment
    u = max(0, min(DUTY_CODE_MAX, raw))
    state.saturated = (u != raw) or any(abs(p) >= PRODUCT_LIMIT for p in products)
    state.bank = [products, state.bank[0], state.bank[1]]
    state.u_prev = u
    return u


def default_tuning(c_th, g_amb, p_max, counts_per_kelvin, ts, lam=None,
                   duty_codes=DUTY_CODE_MAX + 1):
    """Gains for the fitted first-order plant.

    Discrete lambda tuning: with plant pole a = exp(-ts/tau) and target
    closed-loop pole p = exp(-ts/lam), lam = tau/3, the PI part places
    the pole by zero cancellation (c0 = (1-p)/b, c1 = -a*c0, with b the
    per-cycle count gain of the duty code).  A two-LSB derivative term is
    added so all three conversion slots stay active and the approach is
    lightly damped.
    """
    tau = c_th / g_amb
    if lam is None:
        lam = tau / 3.0
    a = math.exp(-ts / tau)
    p = math.exp(-ts / lam)
    b = (p_max / (duty_codes * g_amb)) * (1.0 - a) * counts_per_kelvin
    c0 = (1.0 - p) / b
    c1 = -a * c0
    exp = _shared_exponent((c0, c1, 0.0), counts_per_kelvin)
    c2 = 2.0 * 2.0 ** exp / COEFF_LEVELS
    ki = (c0 + c1 + c2) / ts
    kd = c2 * ts
    kp = (c0 - c1 - 3.0 * c2) / 2.0
    return kp, ki, kd


def velocity_response(c0, c1, c2, errors, u0=0.0):
    """Reference float recurrence u(k) = u(k-1) + c0 e(k) + c1 e(k-1) + c2 e(k-2)."""
    u = np.empty(len(errors))
    e1 = e2 = 0.0
    prev = u0
    for k, e in enumerate(errors):
        prev = prev + c0 * e + c1 * e1 + c2 * e2
        e2, e1 = e1, e
        u[k] = prev
    return u


def transfer_function_response(kp, ki, kd, ts, errors):
    """Direct simulation of the parallel-form discrete controller.

    Proportional branch, trapezoid-rule integral branch, and
    backward-difference derivative branch, summed.  Serves as the
    independent reference the velocity recurrence is checked against.
    """
    u = np.empty(len(errors))
    ui = 0.0
    e_prev = 0.0
    for k, e in enumerate(errors):
        ui = ui + ki * ts / 2.0 * (e + e_prev)
        ud = kd / ts * (e - e_prev)
        u[k] = kp * e + ui + ud
        e_prev = e
    return u


def quantization_deviation_bound(coeffs, errors):
    """Running bound on |quantized - exact| for the velocity recurrence.

    Each step contributes at most sum_n |c_n - c_n_quantized| * |e|; the
    velocity form accumulates the per-step contributions.
    """
    derr = sum(coeffs.coefficient_errors())
    return np.cumsum(derr * np.abs(np.asarray(errors, dtype=float))) + 1e-9
