"""Forward models and fits for fluorescence, photon-echo and hole decays."""

from .decay import (
    evaluate_model,
    model_fluorescence,
    model_hole_decay,
    model_two_pulse_echo,
    synthesize_trace,
)
from .fitting import DegenerateTraceError, InsufficientDataError, fit_decay
from .models import DecayTrace, FitReport

__all__ = [
    "DecayTrace",
    "DegenerateTraceError",
    "FitReport",
    "InsufficientDataError",
    "evaluate_model",
    "fit_decay",
    "model_fluorescence",
    "model_hole_decay",
    "model_two_pulse_echo",
    "synthesize_trace",
]
