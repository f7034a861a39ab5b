"""Behavioral simulator of a distributed on-chip temperature-regulation
array with a shared current-to-digital conversion channel.

The converter digitizes the ratio of a CTAT to a PTAT current, computes
the control products of a velocity-form PID by coefficient-scaled charge
phases and counter preloads, and drives in-cell heaters through a 12-bit
hybrid PWM.  The same channel serves the amperometric measurement modes
(constant-potential, voltammetry, impedance spectroscopy).
"""

from .array_sim import (ArrayConfig, CellState, FraResult, Mode, TempArray,
                        WaveformSpec)
from .devices import (BjtParams, Capacitor, CurrentSourceParams, CvSensor,
                      HeaterParams, ImpedanceSensor, Parallel, PhSensor,
                      Resistor, Series, delta_vbe, heater_power, i_ctat,
                      i_ptat, sensor_current, vbe)
from .errors import (CalibrationError, ConfigurationError, DomainError,
                     FitError)
from .madc import (MadcConfig, MadcConversion, TemperatureMap, convert,
                   convert_signed, digitize_temperature, quantize_coeff,
                   snr_test)
from .pid import (PidCoefficients, PidState, default_tuning, pid_cycle,
                  transfer_function_response, velocity_response)
from .pwm import PwmConfig, duty_of_code, pulse_train, sample_tap_delays
from .thermal import ThermalGrid, fit_defaults, step

__version__ = "0.1.0"
