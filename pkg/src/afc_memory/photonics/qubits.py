"""Time-bin qubit encoding and the unbalanced Mach-Zehnder analyzer.

Port convention: port A carries
    sqrt(s1 t_s s2) E(t) + sqrt((1-s1) t_l (1-s2)) e^{i theta} E(t - T)
and port B
    sqrt(s1 t_s (1-s2)) E(t) - sqrt((1-s1) t_l s2) e^{i theta} E(t - T),
with s1, s2 the short-arm splitter fractions and t_s, t_l the arm
transmissions. |e> + |l> at theta = 0 interferes constructively in port A.
"""

import logging
from typing import Optional

import numpy as np

from ..errors import AFCMemoryError
from ..propagation.models import FOUR_LN2, PulseTrain
from .models import InterferometerSpec, Port, QubitGeometry, TimeBinQubit

logger = logging.getLogger(__name__)

# Largest allowed envelope amplitude halfway between the two bins
MAX_BIN_OVERLAP = 0.01
STATE_LABELS = ("e", "l", "plus", "minus", "plus_i", "custom")


class OverlapError(AFCMemoryError):
    """Early and late bins overlap."""


class DelayMismatchError(AFCMemoryError):
    """Interferometer delay does not fit the sampling grid or the bin separation."""


def qubit_state(label: str, geometry: QubitGeometry, delta_alpha: Optional[float] = None) -> TimeBinQubit:
    """Amplitudes for a named state; superpositions all go through custom(delta_alpha)."""
    if label == "e":
        return TimeBinQubit(1.0 + 0j, 0j, 0.0, geometry)
    if label == "l":
        return TimeBinQubit(0j, 1.0 + 0j, 0.0, geometry)
    phases = {"plus": 0.0, "minus": np.pi, "plus_i": 0.5 * np.pi}
    if label in phases:
        delta_alpha = phases[label]
    elif label != "custom":
        raise ValueError(f"unknown qubit state {label!r}, expected one of {STATE_LABELS}")
    elif delta_alpha is None:
        raise ValueError("custom state needs delta_alpha")
    amplitude = 1.0 / np.sqrt(2.0)
    return TimeBinQubit(amplitude + 0j, amplitude * np.exp(1j * delta_alpha), float(delta_alpha), geometry)


def encode_qubit(label: str, geometry: QubitGeometry, delta_alpha: Optional[float] = None) -> PulseTrain:
    """Weak coherent field for a time-bin qubit.

    Two Gaussian envelopes at the early and late bin centers weighted by the
    qubit amplitudes, scaled so the total energy equals the mean photon number.

    Args:
        label: One of e, l, plus, minus, plus_i, custom
        geometry: Pulse width, bin separation, mean photon number and time grid
        delta_alpha: Relative phase for the custom state (rad)

    Raises:
        OverlapError: Bin envelopes exceed 1% amplitude halfway between the bins
    """
    midpoint_amplitude = np.exp(-FOUR_LN2 * (0.5 * geometry.bin_separation / geometry.pulse_fwhm) ** 2)
    if midpoint_amplitude > MAX_BIN_OVERLAP:
        raise OverlapError(
            f"bins {geometry.bin_separation} ns apart overlap at {midpoint_amplitude:.3%} amplitude "
            f"for {geometry.pulse_fwhm} ns pulses"
        )
    qubit = qubit_state(label, geometry, delta_alpha)

    times = geometry.t_start + geometry.dt * np.arange(int(round(geometry.duration / geometry.dt)))
    early = np.exp(-FOUR_LN2 * ((times - geometry.early_center) / geometry.pulse_fwhm) ** 2)
    late = np.exp(-FOUR_LN2 * ((times - geometry.late_center) / geometry.pulse_fwhm) ** 2)
    samples = qubit.amp_early * early + qubit.amp_late * late
    energy = np.sum(np.abs(samples) ** 2) * geometry.dt
    samples = samples * np.sqrt(geometry.mean_photon_number / energy)
    return PulseTrain(t0=geometry.t_start, dt=geometry.dt, samples=samples)


def umzi_output(
    pulse: PulseTrain,
    spec: InterferometerSpec,
    port: Port = "A",
    bin_separation: Optional[float] = None,
) -> PulseTrain:
    """Field at one output port of the unbalanced interferometer.

    The output grid starts at the input's t0 and is longer by the arm delay,
    so a two-bin input produces three peaks: early-short, the central
    interference of late-short with early-long, and late-long.

    Raises:
        DelayMismatchError: Arm delay is not a whole number of samples, or
            differs from `bin_separation` by more than one sample
    """
    if port not in ("A", "B"):
        raise ValueError(f"port must be 'A' or 'B', got {port!r}")
    shift_float = spec.arm_delay / pulse.dt
    shift = int(round(shift_float))
    if abs(shift_float - shift) > 1e-9:
        raise DelayMismatchError(f"arm delay {spec.arm_delay} ns is not a multiple of dt = {pulse.dt} ns")
    if bin_separation is not None and abs(spec.arm_delay - bin_separation) > pulse.dt:
        raise DelayMismatchError(
            f"arm delay {spec.arm_delay} ns does not match the bin separation {bin_separation} ns"
        )

    s1, s2 = spec.splitter_ratios
    t_short, t_long = spec.arm_transmissions
    if port == "A":
        short = np.sqrt(s1 * t_short * s2)
        long = np.sqrt((1.0 - s1) * t_long * (1.0 - s2))
    else:
        short = np.sqrt(s1 * t_short * (1.0 - s2))
        long = -np.sqrt((1.0 - s1) * t_long * s2)

    n = len(pulse.samples)
    out = np.zeros(n + shift, dtype=complex)
    out[:n] += short * pulse.samples
    out[shift:] += long * np.exp(1j * spec.analysis_phase) * pulse.samples
    return PulseTrain(t0=pulse.t0, dt=pulse.dt, samples=out)
