"""Comb construction and comb parameter extraction."""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from ..errors import AFCMemoryError
from .models import CombSpec, IonEnsembleParams, SpectralProfile

logger = logging.getLogger(__name__)

FOUR_LN2 = 4.0 * np.log(2.0)


class GridTooCoarseError(AFCMemoryError):
    """Grid spacing cannot resolve the comb teeth."""


class GridTooNarrowError(AFCMemoryError):
    """Grid does not cover the comb plus its guard band."""


class NoPeaksFoundError(AFCMemoryError):
    """No comb teeth could be located in a profile."""


class ToothFitError(AFCMemoryError):
    """Too many per-tooth fits failed."""


def detuning_grid(half_span_mhz: float, step_mhz: float) -> np.ndarray:
    """Uniform detuning grid covering [-half_span, +half_span] with the given step.

    The number of points is rounded up so the requested span is always covered.
    """
    if half_span_mhz <= 0 or step_mhz <= 0:
        raise ValueError("half_span_mhz and step_mhz must be positive")
    n_half = int(np.ceil(half_span_mhz / step_mhz - 1e-9))
    return np.arange(-n_half, n_half + 1) * step_mhz


def comb_grid(spec: CombSpec, step_mhz: Optional[float] = None, half_span_mhz: Optional[float] = None) -> np.ndarray:
    """Grid hosting a comb: at least four bandwidths wide, step gamma/20 by default."""
    step = spec.tooth_fwhm / 20.0 if step_mhz is None else step_mhz
    minimum = max(2.0 * spec.bandwidth, 0.5 * spec.bandwidth + 2.0 * spec.tooth_spacing)
    half_span = minimum if half_span_mhz is None else max(half_span_mhz, minimum)
    return detuning_grid(half_span, step)


def gaussian_tooth(offset: np.ndarray, fwhm: float) -> np.ndarray:
    """Unit-peak Gaussian with the given FWHM."""
    return np.exp(-FOUR_LN2 * (offset / fwhm) ** 2)


def square_tooth(offset: np.ndarray, fwhm: float) -> np.ndarray:
    return (np.abs(offset) <= 0.5 * fwhm).astype(float)


def tooth_centers(spec: CombSpec) -> np.ndarray:
    """Tooth positions k*Delta lying inside the comb bandwidth."""
    k_max = int(np.floor(0.5 * spec.bandwidth / spec.tooth_spacing + 1e-9))
    return np.arange(-k_max, k_max + 1) * spec.tooth_spacing


def absorption_line(params: IonEnsembleParams, grid: np.ndarray) -> SpectralProfile:
    """Inhomogeneous absorption line as an equal-FWHM pseudo-Voigt.

    Args:
        params: Ensemble parameters (peak absorption, linewidth, length)
        grid: Detuning grid in MHz relative to line center

    Returns:
        SpectralProfile with peak optical depth alpha * L at zero detuning
    """
    grid = np.asarray(grid, dtype=float)
    fwhm_mhz = params.inhomogeneous_fwhm * 1e3
    x = grid / fwhm_mhz
    lorentz = 1.0 / (1.0 + 4.0 * x**2)
    gauss = np.exp(-FOUR_LN2 * x**2)
    shape = params.lorentz_weight * lorentz + (1.0 - params.lorentz_weight) * gauss
    return SpectralProfile(grid, params.peak_optical_depth * shape)


def ideal_comb_profile(spec: CombSpec, grid: np.ndarray) -> SpectralProfile:
    """Sample d(w) = d0 + d1 * sum_k shape(w - k*Delta) on a detuning grid.

    Overlapping tooth tails add linearly; nothing is renormalized.

    Args:
        spec: Comb description
        grid: Uniform detuning grid (MHz)

    Returns:
        SpectralProfile of the comb

    Raises:
        GridTooCoarseError: Grid spacing exceeds a tenth of the tooth FWHM
        GridTooNarrowError: Grid misses the band plus two tooth spacings on each side
    """
    grid = np.asarray(grid, dtype=float)
    step = float(grid[1] - grid[0])
    if step > spec.tooth_fwhm / 10.0 * (1 + 1e-9):
        raise GridTooCoarseError(
            f"grid step {step:.4g} MHz exceeds tooth FWHM/10 = {spec.tooth_fwhm / 10:.4g} MHz"
        )
    guard = 0.5 * spec.bandwidth + 2.0 * spec.tooth_spacing
    if grid[0] > -guard + 0.5 * step or grid[-1] < guard - 0.5 * step:
        raise GridTooNarrowError(
            f"grid [{grid[0]:.4g}, {grid[-1]:.4g}] MHz does not cover +/-{guard:.4g} MHz"
        )

    shape = gaussian_tooth if spec.tooth_shape == "gaussian" else square_tooth
    offsets = np.subtract.outer(grid, tooth_centers(spec))
    teeth = shape(offsets, spec.tooth_fwhm).sum(axis=1)
    return SpectralProfile(grid, spec.background_depth + spec.comb_depth * teeth)


def _tooth_model(has_left: bool, has_right: bool, spacing: float):
    """Gaussian tooth on a flat floor, with the tails of its fitted neighbours."""

    def model(x, floor, depth, center, fwhm):
        teeth = gaussian_tooth(x - center, fwhm)
        if has_left:
            teeth = teeth + gaussian_tooth(x - center + spacing, fwhm)
        if has_right:
            teeth = teeth + gaussian_tooth(x - center - spacing, fwhm)
        return floor + depth * teeth

    return model


def _fit_tooth(
    grid: np.ndarray,
    depth: np.ndarray,
    peak: int,
    spacing: float,
    has_left: bool,
    has_right: bool,
) -> Tuple[float, float, float, float]:
    center0 = grid[peak]
    window = np.abs(grid - center0) <= 0.5 * spacing
    x, y = grid[window], depth[window]
    floor0 = float(y.min())
    height0 = float(depth[peak] - floor0)
    above = y >= floor0 + 0.5 * height0
    step = float(grid[1] - grid[0])
    width0 = max(float(above.sum()) * step, 2.0 * step)

    popt, _ = curve_fit(
        _tooth_model(has_left, has_right, spacing),
        x,
        y,
        p0=[floor0, height0, center0, width0],
        maxfev=2000,
    )
    floor, height, center, fwhm = (float(v) for v in popt)
    fwhm = abs(fwhm)
    if not np.all(np.isfinite(popt)) or height <= 0 or fwhm <= 0 or abs(center - center0) > 0.5 * spacing:
        raise RuntimeError(f"tooth fit at {center0:.4g} MHz diverged")
    return floor, height, center, fwhm


def extract_comb_params(profile: SpectralProfile, prominence_fraction: float = 0.25) -> CombSpec:
    """Estimate comb parameters from a measured or simulated profile.

    Teeth are located with scipy's peak finder and each tooth is fitted with a
    Gaussian on a flat floor (neighbouring tooth tails included in the model).
    Delta comes from a linear regression of fitted centers on tooth index,
    gamma/d1/d0 are the means of the per-tooth FWHM, height and floor.

    Args:
        profile: Spectral profile holding at least five teeth
        prominence_fraction: Minimum tooth prominence relative to the profile's peak-to-peak

    Returns:
        Fitted CombSpec (Gaussian tooth shape)

    Raises:
        NoPeaksFoundError: Fewer than five teeth found
        ToothFitError: More than half of the tooth fits failed
    """
    grid, depth = profile.detuning_grid, profile.optical_depth
    swing = float(np.ptp(depth))
    if swing <= 1e-12:
        raise NoPeaksFoundError("profile is flat, no comb teeth present")

    peaks, _ = find_peaks(depth, prominence=prominence_fraction * swing)
    if len(peaks) < 5:
        raise NoPeaksFoundError(f"found {len(peaks)} teeth, at least 5 are required")

    centers0 = grid[peaks]
    spacing0 = float(np.median(np.diff(centers0)))

    floors: List[float] = []
    heights: List[float] = []
    centers: List[float] = []
    widths: List[float] = []
    skipped = 0
    for i, peak in enumerate(peaks):
        has_left = i > 0 and abs(centers0[i] - centers0[i - 1] - spacing0) < 0.25 * spacing0
        has_right = i < len(peaks) - 1 and abs(centers0[i + 1] - centers0[i] - spacing0) < 0.25 * spacing0
        try:
            floor, height, center, fwhm = _fit_tooth(grid, depth, peak, spacing0, has_left, has_right)
        except (RuntimeError, ValueError) as e:
            skipped += 1
            logger.warning(f"Skipping tooth at {centers0[i]:.4g} MHz: {e}")
            continue
        floors.append(floor)
        heights.append(height)
        centers.append(center)
        widths.append(fwhm)

    if skipped > 0.5 * len(peaks) or len(centers) < 2:
        raise ToothFitError(f"{skipped} of {len(peaks)} tooth fits failed")

    centers_arr = np.asarray(centers)
    index = np.round((centers_arr - centers_arr[0]) / spacing0)
    spacing = float(np.polyfit(index, centers_arr, 1)[0])
    fwhm = float(np.mean(widths))
    if fwhm >= spacing:
        raise ToothFitError(f"fitted tooth FWHM {fwhm:.4g} MHz is not below the spacing {spacing:.4g} MHz")

    bandwidth = max(float(np.ptp(index)) * spacing, 2.0 * spacing)
    fitted = CombSpec(
        tooth_spacing=spacing,
        tooth_fwhm=fwhm,
        comb_depth=float(np.mean(heights)),
        background_depth=max(float(np.mean(floors)), 0.0),
        bandwidth=bandwidth,
        tooth_shape="gaussian",
    )
    logger.debug(
        f"Extracted comb: Delta={fitted.tooth_spacing:.4g} MHz, gamma={fitted.tooth_fwhm:.4g} MHz, "
        f"d1={fitted.comb_depth:.4g}, d0={fitted.background_depth:.4g} from {len(centers)} teeth"
    )
    return fitted
