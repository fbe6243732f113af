"""Dark-count calibration against a target echo SNR."""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from ..errors import InfeasibleError
from ..photonics import detect, snr
from .config import ScenarioConfig
from .scenarios import centered_window, detector_for, simulate_storage
from .runner import stage_seed

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 60


@dataclass
class CalibrationResult:
    dark_rate_per_s: float
    snr: float
    target_snr: float
    iterations: int
    history: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dark_rate_per_s": self.dark_rate_per_s,
            "snr": self.snr,
            "target_snr": self.target_snr,
            "iterations": self.iterations,
            "history": [{"dark_rate_per_s": rate, "snr": value} for rate, value in self.history],
        }


def calibrate_dark_rate(
    config: ScenarioConfig,
    target_snr: float = 56.3,
    tolerance: float = 0.5,
    scan_range: Tuple[float, float] = (1.0, 1e4),
    seed: Optional[int] = None,
    n_trials: Optional[int] = None,
) -> CalibrationResult:
    """Find the dark-count rate whose simulated echo SNR matches `target_snr`.

    The echo field is simulated once; each step re-runs detection with a
    fixed seed, so the SNR falls monotonically with the dark rate and a
    bisection in log(rate) converges.

    Raises:
        ValueError: tolerance <= 0 or an invalid scan range
        InfeasibleError: target below zero, or outside the SNRs reached at the scan ends
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if target_snr < 0:
        raise InfeasibleError(f"target SNR {target_snr} is negative")
    low, high = scan_range
    if not 0 < low < high:
        raise ValueError(f"scan range must satisfy 0 < low < high, got {scan_range}")

    storage = simulate_storage(config)
    signal_window = centered_window(storage.tau, config.analysis.snr_window_ns)
    noise_window = config.analysis.noise_window_ns
    trials = n_trials or config.trials.n_trials
    detect_seed = seed if seed is not None else stage_seed(config.seed, "detect_output")
    history: List[Tuple[float, float]] = []

    def measure(rate: float) -> float:
        detector = replace(detector_for(config, detect_seed), dark_rate=rate)
        hist = detect(storage.output, detector, trials, config.trials.workers)
        value = snr(hist, signal_window, noise_window).value
        history.append((rate, value))
        logger.info(f"dark rate {rate:.4g} /s -> SNR {value:.3f}")
        return value

    snr_low, snr_high = measure(low), measure(high)
    if not snr_high <= target_snr <= snr_low:
        raise InfeasibleError(
            f"target SNR {target_snr} lies outside [{snr_high:.3g}, {snr_low:.3g}] reached over {scan_range} /s"
        )

    log_low, log_high = math.log(low), math.log(high)
    for iteration in range(1, MAX_ITERATIONS + 1):
        rate = math.exp(0.5 * (log_low + log_high))
        value = measure(rate)
        if abs(value - target_snr) <= tolerance:
            logger.info(f"✓ Calibrated dark rate {rate:.4g} /s after {iteration} iterations")
            return CalibrationResult(rate, value, target_snr, iteration, history)
        if value > target_snr:
            log_low = math.log(rate)
        else:
            log_high = math.log(rate)

    raise InfeasibleError(f"no dark rate within {tolerance} of SNR {target_snr} after {MAX_ITERATIONS} iterations")
