"""Time-bin qubits, interferometric analysis, photon counting and fidelities."""

from .detection import detect, expected_counts_per_trial, snr
from .fidelity import (
    FitDivergenceError,
    ZeroCountsError,
    classical_bound,
    classical_bound_bruteforce,
    classical_bound_threshold,
    fidelity_el,
    fidelity_pm,
    total_fidelity,
    visibility_and_fidelity,
)
from .models import (
    CountHistogram,
    DetectorModel,
    FidelityResult,
    InterferometerSpec,
    QubitGeometry,
    SNRResult,
    TimeBinQubit,
    VisibilityResult,
)
from .qubits import DelayMismatchError, OverlapError, encode_qubit, qubit_state, umzi_output

__all__ = [
    "CountHistogram",
    "DelayMismatchError",
    "DetectorModel",
    "FidelityResult",
    "FitDivergenceError",
    "InterferometerSpec",
    "OverlapError",
    "QubitGeometry",
    "SNRResult",
    "TimeBinQubit",
    "VisibilityResult",
    "ZeroCountsError",
    "classical_bound",
    "classical_bound_bruteforce",
    "classical_bound_threshold",
    "detect",
    "encode_qubit",
    "expected_counts_per_trial",
    "fidelity_el",
    "fidelity_pm",
    "qubit_state",
    "snr",
    "total_fidelity",
    "umzi_output",
    "visibility_and_fidelity",
]
