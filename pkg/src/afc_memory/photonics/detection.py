"""Poisson photon counting and signal-to-noise analysis."""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import List, Tuple

import numpy as np

from ..propagation.models import PulseTrain
from .models import CountHistogram, DetectorModel, SNRResult

logger = logging.getLogger(__name__)

# Trials drawn per seeded block; the block layout fixes the random streams.
TRIALS_PER_BLOCK = 10_000_000

Window = Tuple[float, float]


def expected_counts_per_trial(field: PulseTrain, detector: DetectorModel) -> Tuple[float, np.ndarray]:
    """Mean counts per bin for a single trial, and the histogram origin."""
    ratio = detector.bin_width / field.dt
    samples_per_bin = int(round(ratio))
    if samples_per_bin < 1 or abs(ratio - samples_per_bin) > 1e-9:
        raise ValueError(f"bin_width {detector.bin_width} ns must be a whole multiple of dt = {field.dt} ns")

    n_bins = len(field.samples) // samples_per_bin
    photons = field.intensity[: n_bins * samples_per_bin].reshape(n_bins, samples_per_bin).sum(axis=1) * field.dt
    rate = detector.quantum_efficiency * photons + detector.dark_rate * detector.bin_width * 1e-9

    if detector.gate is not None:
        starts = field.t0 + detector.bin_width * np.arange(n_bins)
        closed = (starts < detector.gate[0]) | (starts + detector.bin_width > detector.gate[1])
        rate[closed] = 0.0
    return field.t0, rate


def _draw_block(rate: np.ndarray, seed: int, block: int, trials: int) -> np.ndarray:
    rng = np.random.default_rng([seed, block])
    return rng.poisson(rate * trials)


def detect(field: PulseTrain, detector: DetectorModel, n_trials: int, workers: int = 1) -> CountHistogram:
    """Monte Carlo arrival histogram for n_trials repetitions of a field.

    Per-bin counts are Poisson with mean n_trials * (eta * photons in bin +
    dark_rate * bin_width). Trials are grouped in blocks of TRIALS_PER_BLOCK,
    block b drawing from default_rng([seed, b]); blocks are summed, so the
    histogram depends on the seed but not on the number of workers.

    Args:
        field: Field reaching the detector
        detector: Efficiency, dark rate, gate, seed and bin width
        n_trials: Number of repetitions (>= 1)
        workers: Threads drawing blocks in parallel

    Returns:
        CountHistogram
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be at least 1, got {n_trials}")
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    origin, rate = expected_counts_per_trial(field, detector)

    block_sizes: List[int] = [TRIALS_PER_BLOCK] * (n_trials // TRIALS_PER_BLOCK)
    if n_trials % TRIALS_PER_BLOCK:
        block_sizes.append(n_trials % TRIALS_PER_BLOCK)

    counts = np.zeros(len(rate), dtype=np.int64)
    if workers == 1 or len(block_sizes) == 1:
        for block, trials in enumerate(block_sizes):
            counts += _draw_block(rate, detector.rng_seed, block, trials)
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(_draw_block, rate, detector.rng_seed, block, trials): block
                for block, trials in enumerate(block_sizes)
            }
            for future in as_completed(futures):
                counts += future.result()

    logger.debug(
        f"Detected {int(counts.sum())} counts over {n_trials} trials in {len(block_sizes)} blocks "
        f"(seed {detector.rng_seed})"
    )
    return CountHistogram(bin_width=detector.bin_width, origin=origin, counts=counts, n_trials=n_trials)


def snr(hist: CountHistogram, signal_window: Window, noise_window: Window) -> SNRResult:
    """Background-subtracted signal-to-noise ratio (S - N) / N.

    Both windows must be disjoint and of equal duration, so N is also the
    expected noise inside the signal window. The uncertainty propagates
    Poisson errors on S and N. With no noise counts N is replaced by 1 and
    the result is flagged as a lower bound.
    """
    (s0, s1), (n0, n1) = signal_window, noise_window
    if s1 <= s0 or n1 <= n0:
        raise ValueError("windows must be increasing intervals")
    if s0 < n1 and n0 < s1:
        raise ValueError(f"signal window {signal_window} overlaps noise window {noise_window}")
    if abs((s1 - s0) - (n1 - n0)) > 1e-9 * max(s1 - s0, n1 - n0):
        raise ValueError("signal and noise windows must have equal duration")

    signal = hist.counts_in(signal_window)
    noise = hist.counts_in(noise_window)
    lower_bound = noise == 0
    if lower_bound:
        logger.warning("Noise window holds no counts, SNR reported as a lower bound")
    n = max(noise, 1)
    value = (signal - noise) / n
    uncertainty = float(np.sqrt(signal / n**2 + signal**2 / n**3))
    return SNRResult(
        value=float(value),
        uncertainty=uncertainty,
        signal_counts=signal,
        noise_counts=noise,
        lower_bound=lower_bound,
    )
