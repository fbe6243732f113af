"""Qubit fidelity estimators and the classical measure-and-prepare bound."""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.stats import poisson

from ..errors import AFCMemoryError, InfeasibleError
from .models import CountHistogram, FidelityResult, VisibilityResult

logger = logging.getLogger(__name__)

Window = Tuple[float, float]
MIN_FRINGE_POINTS = 6
MIN_FRINGE_SPAN = 0.8 * 2 * np.pi


class ZeroCountsError(AFCMemoryError):
    """No counts in the gates a fidelity is computed from."""


class FitDivergenceError(AFCMemoryError):
    """Fringe fit produced a non-positive mean or non-finite coefficients."""


def _gate_counts(hist: CountHistogram, window: Window, background: Optional[Window]) -> float:
    counts = float(hist.counts_in(window))
    if background is None:
        return counts
    return max(counts - hist.counts_in(background), 0.0)


def _binomial(right: float, wrong: float, label: str) -> Tuple[float, float]:
    total = right + wrong
    if total <= 0:
        raise ZeroCountsError(f"no counts in the {label} gates")
    value = right / total
    return value, math.sqrt(value * (1.0 - value) / total)


def fidelity_el(
    hist_e: CountHistogram,
    hist_l: CountHistogram,
    early_window: Window,
    late_window: Window,
    background_window: Optional[Window] = None,
) -> FidelityResult:
    """Average early/late basis fidelity (F_e + F_l) / 2.

    F_e is the fraction of |e> counts falling in the early gate, F_l the
    fraction of |l> counts in the late gate. With `background_window` (same
    duration as the gates) its counts are subtracted from each gate first.
    """
    ee = _gate_counts(hist_e, early_window, background_window)
    el = _gate_counts(hist_e, late_window, background_window)
    ll = _gate_counts(hist_l, late_window, background_window)
    le = _gate_counts(hist_l, early_window, background_window)
    f_e, sigma_e = _binomial(ee, el, "|e>")
    f_l, sigma_l = _binomial(ll, le, "|l>")
    return FidelityResult(
        value=0.5 * (f_e + f_l),
        uncertainty=0.5 * math.sqrt(sigma_e**2 + sigma_l**2),
        counts={"e_early": int(ee), "e_late": int(el), "l_late": int(ll), "l_early": int(le)},
    )


def fidelity_pm(
    constructive: CountHistogram,
    destructive: CountHistogram,
    window: Window,
    background_window: Optional[Window] = None,
) -> FidelityResult:
    """Superposition-basis fidelity from the central peak of both interferometer ports.

    `constructive` is the port where the prepared state should exit.
    """
    right = _gate_counts(constructive, window, background_window)
    wrong = _gate_counts(destructive, window, background_window)
    value, sigma = _binomial(right, wrong, "central-peak")
    return FidelityResult(value=value, uncertainty=sigma, counts={"constructive": int(right), "destructive": int(wrong)})


def visibility_and_fidelity(
    fringe: Sequence[Tuple[float, float]],
) -> VisibilityResult:
    """Fit counts = C (1 + V sin(delta_alpha + phi0)) to a phase scan.

    The fit is linear in (C, a, b) with counts = C + a sin + b cos and
    Poisson weights; V = sqrt(a^2 + b^2) / C, phi0 = atan2(b, a) and
    F = (1 + V) / 2. A visibility above 1 is reported as fitted and flagged
    `clamped`, with the fidelity computed from V = 1.

    Args:
        fringe: (delta_alpha in rad, counts) pairs, at least 6 spanning 0.8 x 2 pi

    Returns:
        VisibilityResult with uncertainties from the fit covariance
    """
    data = np.asarray(fringe, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < MIN_FRINGE_POINTS:
        raise ValueError(f"fringe needs at least {MIN_FRINGE_POINTS} (phase, counts) points")
    phases, counts = data[:, 0], data[:, 1]
    if np.ptp(phases) < MIN_FRINGE_SPAN - 1e-12:
        raise ValueError(f"fringe phases span {np.ptp(phases):.3f} rad, need at least {MIN_FRINGE_SPAN:.3f}")

    weights = 1.0 / np.sqrt(np.maximum(counts, 1.0))
    design = np.column_stack([np.ones_like(phases), np.sin(phases), np.cos(phases)])
    weighted = design * weights[:, None]
    coeffs, _, _, _ = np.linalg.lstsq(weighted, counts * weights, rcond=None)
    mean, a, b = coeffs
    if not np.all(np.isfinite(coeffs)) or mean <= 0:
        raise FitDivergenceError(f"fringe fit gave mean counts {mean}")
    try:
        cov = np.linalg.inv(weighted.T @ weighted)
    except np.linalg.LinAlgError as e:
        raise FitDivergenceError(f"fringe fit covariance is singular: {e}") from e

    amplitude = math.hypot(a, b)
    visibility = amplitude / mean
    if amplitude > 0:
        grad_v = np.array([-amplitude / mean**2, a / (amplitude * mean), b / (amplitude * mean)])
        grad_phi = np.array([0.0, -b / amplitude**2, a / amplitude**2])
        sigma_phi = math.sqrt(max(grad_phi @ cov @ grad_phi, 0.0))
    else:
        grad_v = np.array([0.0, 1.0 / mean, 1.0 / mean]) / math.sqrt(2.0)
        sigma_phi = math.pi
    sigma_v = math.sqrt(max(grad_v @ cov @ grad_v, 0.0))

    clamped = bool(visibility > 1.0)
    if clamped:
        logger.warning(f"Fitted visibility {visibility:.4f} exceeds 1, fidelity computed from V = 1")
    fidelity = 0.5 * (1.0 + min(visibility, 1.0))
    return VisibilityResult(
        visibility=float(visibility),
        visibility_uncertainty=sigma_v,
        fidelity=float(fidelity),
        fidelity_uncertainty=0.5 * sigma_v,
        phase_offset=float(math.atan2(b, a)),
        phase_offset_uncertainty=sigma_phi,
        counts_avg=float(mean),
        clamped=clamped,
    )


def total_fidelity(
    f_el: float,
    f_pm: float,
    sigma_el: float = 0.0,
    sigma_pm: float = 0.0,
) -> Tuple[float, float]:
    """F_T = F_el / 3 + 2 F_pm / 3 with the uncertainty added in quadrature."""
    for name, value in (("f_el", f_el), ("f_pm", f_pm)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    value = f_el / 3.0 + 2.0 * f_pm / 3.0
    return value, math.sqrt((sigma_el / 3.0) ** 2 + (2.0 * sigma_pm / 3.0) ** 2)


def estimation_fidelity(n: np.ndarray) -> np.ndarray:
    """Optimal fidelity (N + 1) / (N + 2) for estimating a qubit from N copies."""
    return (n + 1.0) / (n + 2.0)


def _photon_distribution(mu: float, n_max: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    if n_max is None:
        n_max = max(int(poisson.isf(1e-16, mu)) + 1, 20)
    n = np.arange(0, n_max + 1)
    return n, poisson.pmf(n, mu)


def _required_throughput(mu: float, efficiency: float, p0: float) -> float:
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if efficiency <= 0:
        raise ValueError(f"efficiency must be positive, got {efficiency}")
    if efficiency > 1.0 + 1e-12:
        raise InfeasibleError(f"efficiency {efficiency} demands more events than the source provides")
    return min(efficiency, 1.0) * (1.0 - p0)


def classical_bound(mu: float, efficiency: float) -> float:
    """Best measure-and-prepare fidelity for a Poissonian source reproducing a device efficiency.

    The classical device must pass a fraction efficiency * (1 - p(0)) of all
    pulses. It passes the highest photon numbers first, since their
    estimation fidelity (N + 1) / (N + 2) is largest, and takes a partial
    share of the photon number where the budget runs out.

    Raises:
        InfeasibleError: efficiency above 1
    """
    n, p = _photon_distribution(mu)
    budget = _required_throughput(mu, efficiency, p[0])
    fidelities = estimation_fidelity(n)

    remaining = budget
    weighted = 0.0
    for count in range(len(n) - 1, 0, -1):
        take = min(p[count], remaining)
        weighted += take * fidelities[count]
        remaining -= take
        if remaining <= 0:
            break
    if remaining > 1e-12 * max(budget, 1e-300):
        raise InfeasibleError(f"required throughput {budget:.3g} exceeds the available multi-photon events")
    return float(weighted / budget)


def classical_bound_bruteforce(mu: float, efficiency: float, n_max: int = 20) -> float:
    """Optimize independent pass probabilities q_N for N = 1..n_max as a linear program.

    Maximizes sum q_N p_N F_N subject to sum q_N p_N = budget and 0 <= q_N <= 1,
    with no ordering of the photon numbers assumed.

    Raises:
        InfeasibleError: the truncated distribution cannot supply the budget
    """
    n, p = _photon_distribution(mu, n_max)
    budget = _required_throughput(mu, efficiency, p[0])
    weights = p[1:] * estimation_fidelity(n[1:])
    available = float(p[1:].sum())
    if budget > available + 1e-9:
        raise InfeasibleError(f"no strategy with N <= {n_max} reaches throughput {budget:.3g}")
    budget = min(budget, available)

    # Scaled by the budget: the objective value is the fidelity.
    result = linprog(
        -weights / budget,
        A_eq=(p[1:] / budget)[np.newaxis, :],
        b_eq=[1.0],
        bounds=[(0.0, 1.0)] * n_max,
        method="highs",
    )
    if result.status != 0:
        raise InfeasibleError(f"pass-probability optimization failed: {result.message}")
    logger.debug(f"LP pass probabilities for mu={mu}, eta={efficiency}: {np.round(result.x, 4)}")
    return float(-result.fun)


def classical_bound_threshold(mu: float, efficiency: float, n_max: int = 20, resolution: float = 1e-3) -> float:
    """Grid search over threshold strategies: pass every N above k, a fraction q of N = k.

    Photon numbers are truncated at n_max and q runs over a grid of the given
    resolution; a strategy is feasible when its throughput reaches the budget.
    """
    n, p = _photon_distribution(mu, n_max)
    budget = _required_throughput(mu, efficiency, p[0])
    fidelities = estimation_fidelity(n)
    fractions = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)

    best = -np.inf
    for k in range(1, n_max + 1):
        above = slice(k + 1, n_max + 1)
        base_throughput = p[above].sum()
        base_weighted = (p[above] * fidelities[above]).sum()
        throughput = base_throughput + fractions * p[k]
        feasible = throughput >= budget - 1e-9
        if not np.any(feasible):
            continue
        value = (base_weighted + fractions * p[k] * fidelities[k])[feasible] / throughput[feasible]
        best = max(best, float(value.max()))
    if not np.isfinite(best):
        raise InfeasibleError(f"no strategy with N <= {n_max} reaches throughput {budget:.3g}")
    return best
