"""Storage efficiency, analytic AFC efficiency and multimode bookkeeping."""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import AFCMemoryError
from .models import MemoryResult, PulseTrain

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
# Exponent of the finite-finesse dephasing factor exp(-7/F^2)
DEPHASING_CONSTANT = 7.0
# Round-off allowed above unit efficiency
PASSIVITY_TOLERANCE = 1e-6


class WindowOverlapError(AFCMemoryError):
    """Echo window reaches back into the transmitted pulse or a neighbouring mode."""


class PassivityError(AFCMemoryError):
    """Echo carries more energy than the input, so the output field is not physical."""


def _efficiency(echo_energy: float, input_energy: float) -> float:
    ratio = echo_energy / input_energy
    if ratio > 1.0 + PASSIVITY_TOLERANCE:
        logger.error(f"Echo energy {echo_energy:.6g} exceeds input energy {input_energy:.6g}")
        raise PassivityError(f"storage efficiency {ratio:.6g} is above 1")
    return min(ratio, 1.0)


def _echo_in_window(output: PulseTrain, center: float, window: float) -> Tuple[float, float]:
    start, end = center - 0.5 * window, center + 0.5 * window
    energy = output.energy(start, end)
    try:
        centroid = output.centroid(start, end)
    except ValueError:
        centroid = center
    return energy, centroid


def echo_efficiency(
    output: PulseTrain,
    input: PulseTrain,
    tau: float,
    window: float,
    reference: Optional[float] = None,
    orders: int = 3,
) -> MemoryResult:
    """Fraction of the input energy re-emitted in the echo window around tau.

    Args:
        output: Field after the memory
        input: Field before the memory
        tau: Storage time 1/Delta (ns)
        window: Full width of the integration window (ns), must be below tau
        reference: Input time the delay is measured from; input energy centroid by default
        orders: Highest echo order reported in `higher_order_efficiencies`

    Returns:
        MemoryResult with times relative to the reference

    Raises:
        WindowOverlapError: window >= tau
    """
    if tau <= 0 or window <= 0:
        raise ValueError("tau and window must be positive")
    if window >= tau:
        raise WindowOverlapError(f"echo window {window} ns is not shorter than the storage time {tau} ns")
    input_energy = input.energy()
    if input_energy <= 0:
        raise ValueError("input pulse carries no energy")
    if reference is None:
        reference = input.centroid()

    echo_energy, centroid = _echo_in_window(output, reference + tau, window)
    output_end = output.times[-1]
    higher = {}
    for order in range(2, orders + 1):
        center = reference + order * tau
        if center + 0.5 * window > output_end:
            break
        energy, _ = _echo_in_window(output, center, window)
        higher[order] = energy / input_energy

    return MemoryResult(
        efficiency=_efficiency(echo_energy, input_energy),
        echo_time=centroid - reference,
        echo_window=(tau - 0.5 * window, tau + 0.5 * window),
        input_energy=input_energy,
        echo_energy=echo_energy,
        higher_order_efficiencies=higher,
    )


def mode_efficiencies(
    output: PulseTrain,
    input: PulseTrain,
    mode_centers: Sequence[float],
    tau: float,
    window: float,
) -> List[MemoryResult]:
    """Per-mode storage efficiency of a multimode train, read out first-in-first-out.

    Each mode's input energy and echo energy are integrated over `window`
    around its own center and around center + tau.
    """
    if window >= tau:
        raise WindowOverlapError(f"mode window {window} ns is not shorter than the storage time {tau} ns")
    centers = np.sort(np.asarray(mode_centers, dtype=float))
    if len(centers) > 1 and np.min(np.diff(centers)) < window - 1e-9:
        raise WindowOverlapError(f"mode window {window} ns is wider than the mode spacing")

    results = []
    for center in centers:
        input_energy = input.energy(center - 0.5 * window, center + 0.5 * window)
        if input_energy <= 0:
            raise ValueError(f"no input energy around mode at {center} ns")
        echo_energy, centroid = _echo_in_window(output, center + tau, window)
        results.append(
            MemoryResult(
                efficiency=_efficiency(echo_energy, input_energy),
                echo_time=centroid - center,
                echo_window=(tau - 0.5 * window, tau + 0.5 * window),
                input_energy=input_energy,
                echo_energy=echo_energy,
            )
        )
    return results


def afc_efficiency_analytic(d1: float, finesse: float, d0: float) -> float:
    """Forward-echo AFC efficiency (d1/F)^2 exp(-d1/F) exp(-7/F^2) exp(-d0)."""
    if d1 < 0 or d0 < 0:
        raise ValueError("d1 and d0 must be non-negative")
    if finesse <= 0:
        raise ValueError(f"finesse must be positive, got {finesse}")
    effective = d1 / finesse
    return effective**2 * math.exp(-effective) * math.exp(-DEPHASING_CONSTANT / finesse**2) * math.exp(-d0)


def optimal_finesse(d1: float) -> float:
    """Finesse maximizing the analytic efficiency at fixed d1.

    Positive root of -2F^2 + d1*F + 14 = 0.
    """
    if d1 < 0:
        raise ValueError(f"d1 must be non-negative, got {d1}")
    return (d1 + math.sqrt(d1**2 + 8 * 2 * DEPHASING_CONSTANT)) / 4.0


def multimode_capacity(tau: float, mode_duration: float) -> int:
    if tau <= 0 or mode_duration <= 0:
        raise ValueError("tau and mode_duration must be positive")
    return int(math.floor(tau / mode_duration + 1e-9))


def delay_line_comparison(tau: float, group_index: float, loss_per_m: float) -> Tuple[float, float]:
    """Waveguide length and loss needed to delay light by tau.

    Args:
        tau: Delay (ns)
        group_index: Group index of the delay waveguide
        loss_per_m: Propagation loss (dB/m)

    Returns:
        (length in m, total loss in dB)
    """
    if tau < 0 or loss_per_m < 0:
        raise ValueError("tau and loss_per_m must be non-negative")
    if group_index <= 0:
        raise ValueError(f"group_index must be positive, got {group_index}")
    length = SPEED_OF_LIGHT * tau * 1e-9 / group_index
    return length, length * loss_per_m


def efficiency_db(efficiency: float) -> float:
    """Storage efficiency expressed as a loss in dB (negative for eta < 1)."""
    if efficiency <= 0:
        raise ValueError(f"efficiency must be positive, got {efficiency}")
    return 10.0 * math.log10(efficiency)
