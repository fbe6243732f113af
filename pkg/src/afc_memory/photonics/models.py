"""Time-bin qubit, interferometer, detector and histogram models."""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd

Port = Literal["A", "B"]
_TRIALS_LINE = re.compile(r"#\s*n_trials\s*:\s*(\d+)")


@dataclass
class QubitGeometry:
    """Pulse layout shared by every encoded qubit (times in ns)."""

    pulse_fwhm: float = 50.0
    bin_separation: float = 130.0
    mean_photon_number: float = 0.578
    dt: float = 1.0
    t_start: float = -500.0
    duration: float = 2000.0
    early_center: float = 0.0

    def __post_init__(self):
        if self.pulse_fwhm <= 0 or self.dt <= 0 or self.duration <= 0:
            raise ValueError("pulse_fwhm, dt and duration must be positive")
        if self.bin_separation <= self.pulse_fwhm:
            raise ValueError(
                f"bin_separation {self.bin_separation} ns must exceed pulse_fwhm {self.pulse_fwhm} ns"
            )
        if self.mean_photon_number <= 0:
            raise ValueError(f"mean_photon_number must be positive, got {self.mean_photon_number}")

    @property
    def late_center(self) -> float:
        return self.early_center + self.bin_separation


@dataclass
class TimeBinQubit:
    """Qubit a_e|e> + a_l|l> carried by a weak coherent pulse pair."""

    amp_early: complex
    amp_late: complex
    relative_phase: float
    geometry: QubitGeometry

    def __post_init__(self):
        norm = abs(self.amp_early) ** 2 + abs(self.amp_late) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"qubit amplitudes are not normalized (|a_e|^2 + |a_l|^2 = {norm})")


@dataclass
class InterferometerSpec:
    """Unbalanced Mach-Zehnder analyzer.

    Attributes:
        arm_delay: Long-arm delay relative to the short arm (ns)
        analysis_phase: Phase theta added in the long arm (rad)
        splitter_ratios: Power fraction sent to the short arm at the first and second splitter
        arm_transmissions: Power transmission of the short and long arm
    """

    arm_delay: float = 130.0
    analysis_phase: float = 0.0
    splitter_ratios: Tuple[float, float] = (0.5, 0.5)
    arm_transmissions: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        self.splitter_ratios = tuple(float(r) for r in self.splitter_ratios)
        self.arm_transmissions = tuple(float(t) for t in self.arm_transmissions)
        if self.arm_delay <= 0:
            raise ValueError(f"arm_delay must be positive, got {self.arm_delay}")
        for name, pair in (("splitter_ratios", self.splitter_ratios), ("arm_transmissions", self.arm_transmissions)):
            if len(pair) != 2 or not all(0.0 <= v <= 1.0 for v in pair):
                raise ValueError(f"{name} must hold two fractions in [0, 1], got {pair}")


@dataclass
class DetectorModel:
    """Single-photon detector with Poisson dark counts.

    `quantum_efficiency` is the total detection efficiency applied to the
    field (collection losses included). Outside `gate` the detector is off.
    """

    quantum_efficiency: float = 0.85
    dark_rate: float = 0.0
    gate: Optional[Tuple[float, float]] = None
    rng_seed: int = 0
    bin_width: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise ValueError(f"quantum_efficiency must lie in [0, 1], got {self.quantum_efficiency}")
        if self.dark_rate < 0:
            raise ValueError(f"dark_rate must be non-negative, got {self.dark_rate}")
        if self.bin_width <= 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")
        if self.gate is not None:
            self.gate = (float(self.gate[0]), float(self.gate[1]))
            if self.gate[1] <= self.gate[0]:
                raise ValueError(f"gate must be an increasing interval, got {self.gate}")


@dataclass
class CountHistogram:
    """Photon arrival histogram accumulated over n_trials repetitions."""

    bin_width: float
    origin: float
    counts: np.ndarray
    n_trials: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.bin_width <= 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be at least 1, got {self.n_trials}")

    @property
    def bin_starts(self) -> np.ndarray:
        return self.origin + self.bin_width * np.arange(len(self.counts))

    def window_mask(self, window: Tuple[float, float]) -> np.ndarray:
        """Bins whose start lies in [start, end)."""
        start, end = window
        starts = self.bin_starts
        tolerance = 1e-9 * self.bin_width
        return (starts >= start - tolerance) & (starts < end - tolerance)

    def counts_in(self, window: Tuple[float, float]) -> int:
        return int(self.counts[self.window_mask(window)].sum())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"bin_start_ns": self.bin_starts, "counts": self.counts})

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as handle:
            handle.write(f"# n_trials: {self.n_trials}\n")
            self.to_frame().to_csv(handle, index=False, float_format="%.9g", lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "CountHistogram":
        n_trials = 1
        with open(path) as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                match = _TRIALS_LINE.match(line)
                if match:
                    n_trials = int(match.group(1))
        frame = pd.read_csv(path, comment="#")
        starts = frame["bin_start_ns"].to_numpy()
        return cls(
            bin_width=float(starts[1] - starts[0]),
            origin=float(starts[0]),
            counts=frame["counts"].to_numpy(),
            n_trials=n_trials,
        )


@dataclass
class SNRResult:
    value: float
    uncertainty: float
    signal_counts: int
    noise_counts: int
    lower_bound: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "snr": self.value,
            "snr_uncertainty": self.uncertainty,
            "signal_counts": self.signal_counts,
            "noise_counts": self.noise_counts,
            "lower_bound": self.lower_bound,
        }


@dataclass
class FidelityResult:
    """A fidelity estimate with its 1-sigma uncertainty and the underlying counts."""

    value: float
    uncertainty: float
    counts: Dict[str, int]

    def to_dict(self) -> Dict[str, Any]:
        return {"fidelity": self.value, "fidelity_uncertainty": self.uncertainty, "counts": dict(self.counts)}


@dataclass
class VisibilityResult:
    visibility: float
    visibility_uncertainty: float
    fidelity: float
    fidelity_uncertainty: float
    phase_offset: float
    phase_offset_uncertainty: float
    counts_avg: float
    clamped: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "visibility": self.visibility,
            "visibility_uncertainty": self.visibility_uncertainty,
            "fidelity": self.fidelity,
            "fidelity_uncertainty": self.fidelity_uncertainty,
            "phase_offset_rad": self.phase_offset,
            "phase_offset_uncertainty_rad": self.phase_offset_uncertainty,
            "counts_avg": self.counts_avg,
            "clamped": self.clamped,
        }
