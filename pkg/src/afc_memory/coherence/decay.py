"""Forward models for fluorescence, photon-echo and spectral-hole decays."""

from typing import Dict, Literal, Sequence

import numpy as np

from .models import DecayModel, DecayTrace, TimeUnit

EchoConvention = Literal["intensity", "amplitude"]
# Exponent factor k in exp(-k * t12 / T2)
ECHO_EXPONENT = {"intensity": 4.0, "amplitude": 2.0}


def model_fluorescence(t, amplitude: float, t1: float, offset: float = 0.0):
    """Single-exponential fluorescence decay A exp(-t/T1) + offset."""
    if t1 <= 0:
        raise ValueError(f"t1 must be positive, got {t1}")
    return amplitude * np.exp(-np.asarray(t, dtype=float) / t1) + offset


def model_two_pulse_echo(t12, amplitude: float, t2: float, convention: EchoConvention = "intensity"):
    """Two-pulse echo versus pulse separation t12 (the echo appears at 2*t12).

    The intensity convention gives A exp(-4 t12/T2); the amplitude convention
    halves the exponent.
    """
    if t2 <= 0:
        raise ValueError(f"t2 must be positive, got {t2}")
    t12 = np.asarray(t12, dtype=float)
    if np.any(t12 < 0):
        raise ValueError("t12 must be non-negative")
    return amplitude * np.exp(-ECHO_EXPONENT[convention] * t12 / t2)


def model_hole_decay(t, amplitudes: Sequence[float], lifetimes: Sequence[float], offset: float = 0.0):
    """Spectral hole area as sum_i a_i exp(-t/tau_i) + offset (one to three components)."""
    if len(amplitudes) != len(lifetimes) or not 1 <= len(lifetimes) <= 3:
        raise ValueError("need one to three (amplitude, lifetime) pairs")
    lifetimes = np.asarray(lifetimes, dtype=float)
    if np.any(lifetimes <= 0):
        raise ValueError("lifetimes must be positive")
    if np.any(np.diff(lifetimes) < 0):
        raise ValueError("lifetimes must be sorted ascending")
    t = np.asarray(t, dtype=float)
    total = np.full(t.shape, float(offset))
    for a, tau in zip(amplitudes, lifetimes):
        total = total + a * np.exp(-t / tau)
    return total


def evaluate_model(
    model: DecayModel,
    t,
    parameters: Dict[str, float],
    convention: EchoConvention = "intensity",
):
    """Evaluate a model from a parameter dict as produced by `fit_decay`."""
    if model == "single_exp":
        return model_fluorescence(t, parameters["amplitude"], parameters["lifetime"], parameters.get("offset", 0.0))
    if model == "two_pulse_echo":
        return model_two_pulse_echo(t, parameters["amplitude"], parameters["t2"], convention)
    if model == "triple_exp":
        return model_hole_decay(
            t,
            [parameters["a1"], parameters["a2"], parameters["a3"]],
            [parameters["tau1"], parameters["tau2"], parameters["tau3"]],
            parameters.get("offset", 0.0),
        )
    raise ValueError(f"unknown decay model {model!r}")


def signal_amplitude(model: DecayModel, parameters: Dict[str, float]) -> float:
    if model == "triple_exp":
        return abs(parameters["a1"] + parameters["a2"] + parameters["a3"])
    return abs(parameters["amplitude"])


def synthesize_trace(
    model: DecayModel,
    parameters: Dict[str, float],
    times: np.ndarray,
    snr: float = float("inf"),
    seed: int = 0,
    time_unit: TimeUnit = "ms",
    convention: EchoConvention = "intensity",
) -> DecayTrace:
    """Noisy synthetic trace with Gaussian noise sigma = amplitude / snr.

    An infinite snr gives a noiseless trace without noise_sigma.
    """
    if snr <= 0:
        raise ValueError(f"snr must be positive, got {snr}")
    times = np.asarray(times, dtype=float)
    clean = evaluate_model(model, times, parameters, convention)
    if not np.isfinite(snr):
        return DecayTrace(times, clean, None, time_unit)
    sigma = signal_amplitude(model, parameters) / snr
    rng = np.random.default_rng(seed)
    noisy = clean + rng.normal(0.0, sigma, size=times.shape)
    return DecayTrace(times, noisy, np.full(times.shape, sigma), time_unit)
