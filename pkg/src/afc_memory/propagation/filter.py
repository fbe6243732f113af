"""Causal linear-filter propagation through the comb."""

import logging

import numpy as np
from scipy import fft
from scipy.signal import hilbert

from ..ensemble.models import SpectralProfile
from ..errors import AFCMemoryError
from .models import PulseTrain, TransferFunction

logger = logging.getLogger(__name__)

NYQUIST_GUARD = 0.8
NYQUIST_TOLERANCE = 1e-6
GRID_TOLERANCE = 1e-3


class NyquistViolationError(AFCMemoryError):
    """Pulse spectrum reaches the Nyquist edge of its sampling grid."""


class GridMismatchError(AFCMemoryError):
    """Pulse spectrum extends beyond the transfer-function grid."""


def transfer_function(profile: SpectralProfile, padding: int = 8) -> TransferFunction:
    """Build H(w) = exp(-d(w)/2 + i*phi(w)) for an absorption profile.

    phi is the Kramers-Kronig partner of d/2, computed as the discrete Hilbert
    transform on a grid zero-padded `padding` times. The profile is referenced
    to its edge level first so the padding does not introduce a step.

    Args:
        profile: Optical depth on a uniform grid
        padding: Zero-padding factor for the Hilbert transform (>= 1)

    Returns:
        TransferFunction on the profile's grid
    """
    if padding < 1:
        raise ValueError(f"padding must be at least 1, got {padding}")
    depth = profile.optical_depth
    edge_level = 0.5 * (depth[0] + depth[-1])
    analytic = hilbert(0.5 * (depth - edge_level), N=padding * len(depth))
    phase = np.imag(analytic)[: len(depth)]
    response = np.exp(-0.5 * depth + 1j * phase)
    return TransferFunction(profile.detuning_grid.copy(), response)


def _spectral_fraction(power: np.ndarray, mask: np.ndarray) -> float:
    total = power.sum()
    return float(power[mask].sum() / total) if total > 0 else 0.0


def propagate(pulse: PulseTrain, response: TransferFunction, padding: int = 8) -> PulseTrain:
    """Filter a pulse through the comb: ifft(fft(E) * H) on a padded time grid.

    The output keeps the input's t0 and dt and is `padding` times longer, so
    echoes after the input window are retained instead of wrapping around.
    H is interpolated onto the FFT frequencies through its attenuation and
    unwrapped phase.

    Args:
        pulse: Input field
        response: Comb transfer function
        padding: Length multiplier of the output time grid (>= 1)

    Returns:
        Output field

    Raises:
        NyquistViolationError: More than 1e-6 of the pulse energy sits above 0.8 x Nyquist
        GridMismatchError: More than 1e-3 of the pulse energy falls outside the H grid
    """
    if padding < 1:
        raise ValueError(f"padding must be at least 1, got {padding}")
    n_padded = padding * len(pulse.samples)
    spectrum = fft.fft(pulse.samples, n_padded)
    freqs = fft.fftfreq(n_padded, pulse.dt) * 1e3
    power = np.abs(spectrum) ** 2

    nyquist = 0.5e3 / pulse.dt
    beyond = _spectral_fraction(power, np.abs(freqs) > NYQUIST_GUARD * nyquist)
    if beyond > NYQUIST_TOLERANCE:
        raise NyquistViolationError(
            f"{beyond:.2e} of the pulse energy lies above {NYQUIST_GUARD} x Nyquist ({nyquist:.4g} MHz)"
        )
    grid = response.detuning_grid
    outside = _spectral_fraction(power, (freqs < grid[0]) | (freqs > grid[-1]))
    if outside > GRID_TOLERANCE:
        raise GridMismatchError(
            f"{outside:.2e} of the pulse energy lies outside the transfer-function grid "
            f"[{grid[0]:.4g}, {grid[-1]:.4g}] MHz"
        )

    attenuation = -np.log(np.maximum(response.magnitude, np.finfo(float).tiny))
    attenuation_f = np.interp(freqs, grid, attenuation)
    phase_f = np.interp(freqs, grid, response.phase)
    filtered = fft.ifft(spectrum * np.exp(-attenuation_f + 1j * phase_f))

    logger.debug(f"Propagated {len(pulse.samples)} samples through {len(grid)}-point filter (padding {padding})")
    return PulseTrain(t0=pulse.t0, dt=pulse.dt, samples=filtered)
