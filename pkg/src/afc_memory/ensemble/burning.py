"""Spectral hole burning with ground/excited/shelf rate equations.

Each frequency class carries a population vector [g, e, s_1..s_m]: pumping
moves g to e, the excited state decays with T1 either back to g or (with the
shelving branch) into one shelf per hole lifetime, and each shelf relaxes to
g with its own lifetime. The generator conserves total population, so the
propagator exp(A h) is applied exactly per step.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from ..errors import AFCMemoryError
from .comb import comb_grid, gaussian_tooth, square_tooth, tooth_centers
from .models import BurnSchedule, CombSpec, IonEnsembleParams, PopulationHistory, SpectralProfile

logger = logging.getLogger(__name__)

CONSERVATION_TOLERANCE = 1e-9
NEGATIVE_TOLERANCE = -1e-12
# Pump steps are at most T1/50; dark intervals are split into at most this many checkpoints.
DARK_CHECKPOINTS = 200

Segment = Tuple[float, bool]


class IntegratorError(AFCMemoryError):
    """Rate-equation integration produced non-finite or non-conserving populations."""


class NegativePopulationError(AFCMemoryError):
    """A population went below zero during integration."""


def population_generator(params: IonEnsembleParams, rates: np.ndarray) -> np.ndarray:
    """Stacked rate-equation generators, one (m, m) matrix per pump rate (units s^-1)."""
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    t1 = params.t1_excited * 1e-3
    beta = params.shelving_branch
    size = 2 + len(params.hole_lifetimes)

    gen = np.zeros((len(rates), size, size))
    gen[:, 0, 0] = -rates
    gen[:, 1, 0] = rates
    gen[:, 0, 1] = (1.0 - beta) / t1
    gen[:, 1, 1] = -1.0 / t1
    for i, (fraction, lifetime) in enumerate(params.hole_lifetimes):
        shelf = 2 + i
        gen[:, shelf, 1] = beta * fraction / t1
        gen[:, shelf, shelf] = -1.0 / lifetime
        gen[:, 0, shelf] = 1.0 / lifetime
    return gen


def burn_segments(schedule: BurnSchedule) -> List[Segment]:
    """Expand a schedule into (duration_ms, pumped) segments."""
    segments: List[Segment] = []
    for rep in range(schedule.repetitions):
        segments.append((schedule.pulse_duration, True))
        if schedule.interval > 0 and rep < schedule.repetitions - 1:
            segments.append((schedule.interval, False))
    if schedule.wait_after > 0:
        segments.append((schedule.wait_after, False))
    return segments


def _check_state(state: np.ndarray, elapsed_ms: float) -> Tuple[float, float]:
    if not np.all(np.isfinite(state)):
        raise IntegratorError(f"non-finite population at t={elapsed_ms:.6g} ms")
    error = float(np.abs(state.sum(axis=-1) - 1.0).max())
    if error > CONSERVATION_TOLERANCE:
        raise IntegratorError(f"population not conserved at t={elapsed_ms:.6g} ms (error {error:.3g})")
    lowest = float(state.min())
    if lowest < NEGATIVE_TOLERANCE:
        raise NegativePopulationError(f"population {lowest:.3g} at t={elapsed_ms:.6g} ms")
    return error, lowest


def integrate_populations(
    params: IonEnsembleParams,
    rates: np.ndarray,
    segments: Sequence[Segment],
    initial: Optional[np.ndarray] = None,
) -> PopulationHistory:
    """Integrate the rate equations through a sequence of pumped/dark segments.

    Args:
        params: Ensemble parameters (T1, hole lifetimes, shelving branch)
        rates: Pump rates in s^-1, one per simulated class
        segments: (duration in ms, pump on) pairs applied in order
        initial: Starting populations, shape (len(rates), pools); all in g if omitted

    Returns:
        PopulationHistory with a snapshot at t=0 and after every segment

    Raises:
        IntegratorError: Non-finite values or a conservation error above 1e-9
        NegativePopulationError: Any population below -1e-12
    """
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    size = 2 + len(params.hole_lifetimes)
    if initial is None:
        state = np.zeros((len(rates), size))
        state[:, 0] = 1.0
    else:
        state = np.array(initial, dtype=float).reshape(len(rates), size)

    t1_s = params.t1_excited * 1e-3
    pumped_gen = population_generator(params, rates)
    dark_gen = population_generator(params, np.zeros(1))

    max_error, lowest = _check_state(state, 0.0)
    snapshots = [state.copy()]
    times = [0.0]
    elapsed = 0.0
    steps = 0

    for duration_ms, pumped in segments:
        if duration_ms <= 0:
            continue
        duration_s = duration_ms * 1e-3
        max_step = t1_s / 50.0 if pumped else max(t1_s / 50.0, duration_s / DARK_CHECKPOINTS)
        n_steps = int(np.ceil(duration_s / max_step - 1e-9))
        step_s = duration_s / n_steps
        propagator = expm((pumped_gen if pumped else dark_gen) * step_s)

        for k in range(n_steps):
            state = np.matmul(propagator, state[..., None])[..., 0]
            steps += 1
            error, low = _check_state(state, elapsed + (k + 1) * step_s * 1e3)
            max_error = max(max_error, error)
            lowest = min(lowest, low)

        elapsed += duration_ms
        snapshots.append(state.copy())
        times.append(elapsed)

    return PopulationHistory(
        rates=rates,
        times_ms=np.asarray(times),
        populations=np.stack(snapshots),
        max_conservation_error=max_error,
        min_population=lowest,
        steps=steps,
    )


def complement_pump(spec: CombSpec, grid: np.ndarray, pump_rate: float) -> np.ndarray:
    """Pump spectral density that burns away everything between the teeth.

    The rate is `pump_rate` at anti-tooth frequencies inside the comb band,
    falls to zero on the tooth centers and is zero outside the band.
    """
    if pump_rate < 0:
        raise ValueError(f"pump_rate must be non-negative, got {pump_rate}")
    grid = np.asarray(grid, dtype=float)
    shape = gaussian_tooth if spec.tooth_shape == "gaussian" else square_tooth
    teeth = shape(np.subtract.outer(grid, tooth_centers(spec)), spec.tooth_fwhm).sum(axis=1)
    pump = pump_rate * np.clip(1.0 - teeth, 0.0, 1.0)
    pump[np.abs(grid) > 0.5 * spec.bandwidth + 0.5 * spec.tooth_spacing] = 0.0
    return pump


def burn_comb(
    params: IonEnsembleParams,
    target: CombSpec,
    schedule: BurnSchedule,
    grid: Optional[np.ndarray] = None,
    initial: Optional[SpectralProfile] = None,
) -> SpectralProfile:
    """Burn a comb into the absorption line by optical pumping.

    The line is flat at the peak optical depth across the comb window unless
    an `initial` profile is given. After the schedule, each class absorbs in
    proportion to its remaining ground population. Only the distinct pump
    rates are integrated; classes sharing a rate share a trajectory.

    Args:
        params: Ensemble parameters
        target: Comb the pump was designed for (sets the default grid)
        schedule: Pump sequence; its pump density is sampled on `grid`
        grid: Detuning grid (MHz); `comb_grid(target)` if omitted. When
            `initial` is also given, it must match `initial.detuning_grid`
        initial: Profile before burning

    Returns:
        Burned SpectralProfile on the same grid

    Raises:
        ValueError: `grid` disagrees with `initial`, or the pump density has the wrong length
        IntegratorError: Non-finite or non-conserving populations
        NegativePopulationError: A population went negative
    """
    if initial is None:
        grid = comb_grid(target) if grid is None else np.asarray(grid, dtype=float)
        initial = SpectralProfile(grid, np.full(len(grid), params.peak_optical_depth))
    elif grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid.shape != initial.detuning_grid.shape or not np.allclose(grid, initial.detuning_grid):
            raise ValueError("grid does not match the detuning grid of the initial profile")
    rates = schedule.pump_spectral_density
    if rates.shape != initial.optical_depth.shape:
        raise ValueError(
            f"pump density has {rates.size} samples but the grid has {initial.optical_depth.size}"
        )
    if not np.any(rates > 0):
        logger.info("Pump density is zero everywhere, profile left unchanged")
        return SpectralProfile(initial.detuning_grid.copy(), initial.optical_depth.copy())

    unique_rates, inverse = np.unique(rates, return_inverse=True)
    history = integrate_populations(params, unique_rates, burn_segments(schedule))
    ground = history.final[:, 0][inverse]
    ground[rates == 0] = 1.0

    burned = initial.optical_depth * np.clip(ground, 0.0, 1.0)
    logger.info(
        f"Burned {schedule.repetitions} x {schedule.pulse_duration} ms pulses over {unique_rates.size} pump levels "
        f"({history.steps} steps, conservation error {history.max_conservation_error:.2e}), "
        f"minimum depth {burned.min():.4g}"
    )
    return SpectralProfile(initial.detuning_grid.copy(), burned)


def hole_area_decay(params: IonEnsembleParams, t) -> np.ndarray:
    """Normalized spectral hole area sum_i a_i exp(-t/tau_i) at dark time t (s)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    area = np.zeros(t.shape)
    for fraction, lifetime in params.hole_lifetimes:
        area = area + fraction * np.exp(-t / lifetime)
    return area
