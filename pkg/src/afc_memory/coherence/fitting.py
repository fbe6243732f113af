"""Weighted nonlinear least-squares fits of decay traces."""

import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from ..errors import AFCMemoryError
from .decay import ECHO_EXPONENT, EchoConvention
from .models import DecayModel, DecayTrace, FitReport

logger = logging.getLogger(__name__)

PARAMETER_NAMES: Dict[str, Tuple[str, ...]] = {
    "single_exp": ("amplitude", "lifetime", "offset"),
    "two_pulse_echo": ("amplitude", "t2"),
    "triple_exp": ("a1", "a2", "a3", "tau1", "tau2", "tau3", "offset"),
}
TIME_PARAMETERS = {"lifetime", "t2", "tau1", "tau2", "tau3"}

MAX_EVALUATIONS = 500
MIN_LIFETIME = 1e-12
TOLERANCE = 1e-14
# Trial lifetimes for the grid initial guess, in units of the largest time
LIFETIME_GRID = np.geomspace(1e-4, 1e2, 241)


class InsufficientDataError(AFCMemoryError):
    """Fewer than two data points per free parameter."""


class DegenerateTraceError(AFCMemoryError):
    """All trace values are equal, nothing to fit."""


def _model_function(model: str, k: float) -> Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """Return f(p, t) -> (prediction, jacobian) for a model."""

    def single(p, t):
        amplitude, tau, offset = p
        decay = np.exp(-t / tau)
        jac = np.column_stack([decay, amplitude * t * decay / tau**2, np.ones_like(t)])
        return amplitude * decay + offset, jac

    def echo(p, t):
        amplitude, t2 = p
        decay = np.exp(-k * t / t2)
        jac = np.column_stack([decay, amplitude * k * t * decay / t2**2])
        return amplitude * decay, jac

    def triple(p, t):
        amplitudes, taus, offset = p[:3], p[3:6], p[6]
        decays = np.exp(-t[:, None] / taus[None, :])
        jac = np.hstack([decays, amplitudes * t[:, None] * decays / taus**2, np.ones((len(t), 1))])
        return decays @ amplitudes + offset, jac

    return {"single_exp": single, "two_pulse_echo": echo, "triple_exp": triple}[model]


def _grid_exponential(t: np.ndarray, y: np.ndarray, w: np.ndarray, with_offset: bool) -> Tuple[float, float, float]:
    """Best (amplitude, lifetime, offset) over the lifetime grid, amplitudes by linear least squares."""
    best = (np.inf, 0.0, 1.0, 0.0)
    for tau in LIFETIME_GRID:
        columns = [np.exp(-t / tau)]
        if with_offset:
            columns.append(np.ones_like(t))
        design = np.column_stack(columns) * w[:, None]
        coeffs, _, _, _ = np.linalg.lstsq(design, y * w, rcond=None)
        sse = float(np.sum((design @ coeffs - y * w) ** 2))
        if sse < best[0]:
            best = (sse, float(coeffs[0]), float(tau), float(coeffs[1]) if with_offset else 0.0)
    return best[1], best[2], best[3]


def _echo_guess(t: np.ndarray, y: np.ndarray, k: float) -> np.ndarray:
    positive = y > 0
    if positive.sum() >= 2:
        slope, intercept = np.polyfit(t[positive], np.log(y[positive]), 1, w=y[positive])
        if slope < 0:
            return np.array([np.exp(intercept), -k / slope])
    return np.array([y[0], k])


def _triple_guess(t: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Tail peeling: fit the late, middle and early log-time thirds in turn."""
    positive = t[t > 0]
    log_t = np.log(positive)
    low, span = log_t.min(), np.ptp(log_t)
    fallback = np.concatenate(
        [np.full(3, (y[0] - y[-1]) / 3.0), np.exp(low + span * np.array([1 / 6, 1 / 2, 5 / 6])), [y[-1]]]
    )
    edges = np.exp(low + span * np.array([1 / 3, 2 / 3]))
    early, late = t <= edges[0], t > edges[1]
    middle = ~early & ~late
    if min(early.sum(), middle.sum(), late.sum()) < 3:
        return fallback

    a3, tau3, offset = _grid_exponential(t[late], y[late], w[late], with_offset=True)
    residual = y - a3 * np.exp(-t / tau3) - offset
    a2, tau2, _ = _grid_exponential(t[middle], residual[middle], w[middle], with_offset=False)
    residual = residual - a2 * np.exp(-t / tau2)
    a1, tau1, _ = _grid_exponential(t[early], residual[early], w[early], with_offset=False)

    taus = np.array([tau1, tau2, tau3])
    amplitudes = np.array([a1, a2, a3])
    order = np.argsort(taus)
    taus, amplitudes = taus[order], amplitudes[order]
    if np.any(amplitudes <= 0) or np.any(taus[1:] / taus[:-1] < 1.5):
        return fallback
    return np.concatenate([amplitudes, taus, [offset]])


def _initial_guess(model: str, t: np.ndarray, y: np.ndarray, w: np.ndarray, k: float) -> np.ndarray:
    if model == "two_pulse_echo":
        return _echo_guess(t, y, k)
    if model == "single_exp":
        return np.array(_grid_exponential(t, y, w, with_offset=True))
    return _triple_guess(t, y, w)


def _covariance(jac: np.ndarray, residuals: np.ndarray, weighted: bool) -> np.ndarray:
    n, p = jac.shape
    try:
        cov = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        return np.full((p, p), np.inf)
    if not weighted:
        cov = cov * float(residuals @ residuals) / (n - p)
    diagonal = np.diag(cov)
    invalid = ~np.isfinite(diagonal) | (diagonal < 0)
    if np.any(invalid):
        cov = cov.copy()
        cov[invalid, :] = np.inf
        cov[:, invalid] = np.inf
    return cov


def fit_decay(
    trace: DecayTrace,
    model: DecayModel = "single_exp",
    initial_guess: Optional[Dict[str, float]] = None,
    convention: EchoConvention = "intensity",
    starts: int = 1,
    seed: Optional[int] = None,
) -> FitReport:
    """Fit a decay model to a trace.

    The fit runs in normalized units (time over its largest magnitude, values
    over their largest magnitude) with a trust-region reflective solver and
    analytic Jacobians, then maps parameters and covariance back. Points are
    weighted by 1/sigma when the trace carries noise_sigma, in which case the
    uncertainties use sigma as absolute; otherwise the covariance is scaled by
    the residual variance.

    Args:
        trace: Data to fit
        model: single_exp, two_pulse_echo or triple_exp
        initial_guess: Starting parameters keyed like FitReport.parameters; automatic if omitted
        convention: Echo exponent convention for two_pulse_echo
        starts: Number of starting points; extra starts are seeded perturbations of the first
        seed: Seed for the multi-start perturbations

    Returns:
        FitReport in the trace's time unit. Non-convergence is reported, not raised.

    Raises:
        InsufficientDataError: Fewer than 2 points per free parameter
        DegenerateTraceError: All values equal
    """
    if model not in PARAMETER_NAMES:
        raise ValueError(f"unknown decay model {model!r}")
    names = PARAMETER_NAMES[model]
    n_free = len(names)
    if len(trace) < 2 * n_free:
        raise InsufficientDataError(f"{model} has {n_free} free parameters but the trace has {len(trace)} points")
    if np.ptp(trace.values) == 0:
        raise DegenerateTraceError("all trace values are equal")
    if starts < 1:
        raise ValueError(f"starts must be at least 1, got {starts}")

    t_scale = float(np.max(np.abs(trace.times)))
    y_scale = float(np.max(np.abs(trace.values)))
    t = trace.times / t_scale
    y = trace.values / y_scale
    weighted = trace.noise_sigma is not None
    w = y_scale / trace.noise_sigma if weighted else np.ones_like(y)
    scales = np.array([t_scale if name in TIME_PARAMETERS else y_scale for name in names])
    is_time = np.array([name in TIME_PARAMETERS for name in names])
    lower = np.where(is_time, MIN_LIFETIME, -np.inf)

    k = ECHO_EXPONENT[convention]
    predict = _model_function(model, k)

    if initial_guess is None:
        x0 = _initial_guess(model, t, y, w, k)
    else:
        x0 = np.array([initial_guess[name] for name in names], dtype=float) / scales
    if not np.all(np.isfinite(x0)):
        raise ValueError(f"initial guess is not finite: {dict(zip(names, x0 * scales))}")
    x0 = np.where(is_time, np.maximum(x0, 2 * MIN_LIFETIME), x0)

    candidates = [x0]
    rng = np.random.default_rng(seed)
    for _ in range(starts - 1):
        jitter = np.exp(rng.normal(0.0, 0.3, size=n_free))
        candidates.append(x0 * jitter)

    def residuals(p):
        return w * (predict(p, t)[0] - y)

    def jacobian(p):
        return w[:, None] * predict(p, t)[1]

    best = None
    for start in candidates:
        result = least_squares(
            residuals,
            start,
            jac=jacobian,
            bounds=(lower, np.inf),
            method="trf",
            ftol=TOLERANCE,
            xtol=TOLERANCE,
            gtol=TOLERANCE,
            max_nfev=MAX_EVALUATIONS,
        )
        ok = result.status > 0 and np.all(np.isfinite(result.x))
        if best is None or (ok and (not best[1] or result.cost < best[0].cost)):
            best = (result, ok)

    result, converged = best
    x = result.x.copy()
    if model == "triple_exp":
        order = np.argsort(x[3:6])
        x[:3], x[3:6] = x[:3][order], x[3:6][order]

    jac = jacobian(x)
    r = residuals(x)
    cov = _covariance(jac, r, weighted) * np.outer(scales, scales)
    sigma = np.sqrt(np.where(np.isfinite(np.diag(cov)), np.diag(cov), np.inf))
    prediction = predict(x, t)[0]
    residual_rms = float(y_scale * np.sqrt(np.mean((prediction - y) ** 2)))

    parameters = {name: float(v) for name, v in zip(names, x * scales)}
    if not converged:
        logger.warning(f"{model} fit did not converge after {result.nfev} evaluations: {result.message}")
    else:
        logger.debug(f"{model} fit converged in {result.nfev} evaluations: {parameters}")

    return FitReport(
        model=model,
        parameters=parameters,
        uncertainties={name: float(s) for name, s in zip(names, sigma)},
        residual_rms=residual_rms,
        converged=bool(converged),
        iterations=int(result.nfev),
        time_unit=trace.time_unit,
        convention=convention if model == "two_pulse_echo" else None,
        covariance=cov,
    )
