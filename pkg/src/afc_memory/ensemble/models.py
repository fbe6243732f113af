"""Data models for the Er ion ensemble and its spectral profiles."""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Literal, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import AFCMemoryError

ToothShape = Literal["gaussian", "square"]


class GridNotUniformError(AFCMemoryError):
    """Detuning grid is not strictly increasing with uniform spacing."""


@dataclass
class Environment:
    """Measurement conditions. Metadata only, no dynamics depend on it."""

    temperature_k: float = 1.6
    magnetic_field_t: float = 4.0
    polarization_axis: str = "Y"
    field_axis: str = "Z"


@dataclass
class IonEnsembleParams:
    """Er3+ ensemble properties.

    Units follow the field names: absorption in cm^-1, linewidth in GHz,
    wavelength in nm, T1 in ms, hole lifetimes in s and length in mm.
    """

    peak_absorption: float = 10.52
    inhomogeneous_fwhm: float = 250.0
    center_wavelength: float = 1531.6
    t1_excited: float = 2.78
    # (amplitude fraction, lifetime in s). Only the shortest lifetime is measured.
    hole_lifetimes: List[Tuple[float, float]] = field(
        default_factory=lambda: [(0.5, 1.95), (0.3, 19.5), (0.2, 195.0)]
    )
    waveguide_length: float = 5.0
    shelving_branch: float = 0.1
    lorentz_weight: float = 0.5
    environment: Environment = field(default_factory=Environment)

    def __post_init__(self):
        if self.peak_absorption <= 0:
            raise ValueError(f"peak_absorption must be positive, got {self.peak_absorption}")
        if self.inhomogeneous_fwhm <= 0:
            raise ValueError(f"inhomogeneous_fwhm must be positive, got {self.inhomogeneous_fwhm}")
        if self.t1_excited <= 0:
            raise ValueError(f"t1_excited must be positive, got {self.t1_excited}")
        if not 1 <= len(self.hole_lifetimes) <= 3:
            raise ValueError("hole_lifetimes needs between 1 and 3 channels")
        self.hole_lifetimes = [(float(a), float(tau)) for a, tau in self.hole_lifetimes]
        if any(tau <= 0 or a < 0 for a, tau in self.hole_lifetimes):
            raise ValueError("hole lifetimes must be positive with non-negative fractions")
        total = sum(a for a, _ in self.hole_lifetimes)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"hole lifetime fractions must sum to 1, got {total}")
        if not 0.0 <= self.shelving_branch <= 1.0:
            raise ValueError(f"shelving_branch must lie in [0, 1], got {self.shelving_branch}")
        if not 0.0 <= self.lorentz_weight <= 1.0:
            raise ValueError(f"lorentz_weight must lie in [0, 1], got {self.lorentz_weight}")

    @property
    def peak_optical_depth(self) -> float:
        """Line-center optical depth alpha * L (length converted mm -> cm)."""
        return self.peak_absorption * self.waveguide_length / 10.0

    @property
    def hole_to_excited_ratio(self) -> float:
        """Shortest hole lifetime over T1 (about 700 for the measured device)."""
        shortest = min(tau for _, tau in self.hole_lifetimes)
        return shortest / (self.t1_excited * 1e-3)


@dataclass
class SpectralProfile:
    """Optical depth d(w) = alpha(w) * L sampled on a uniform detuning grid (MHz)."""

    detuning_grid: np.ndarray
    optical_depth: np.ndarray

    def __post_init__(self):
        self.detuning_grid = np.asarray(self.detuning_grid, dtype=float)
        self.optical_depth = np.asarray(self.optical_depth, dtype=float)
        if self.detuning_grid.shape != self.optical_depth.shape or self.detuning_grid.ndim != 1:
            raise ValueError("detuning_grid and optical_depth must be 1-D arrays of equal length")
        if len(self.detuning_grid) < 2:
            raise ValueError("a spectral profile needs at least two samples")
        if np.any(self.optical_depth < 0) or not np.all(np.isfinite(self.optical_depth)):
            raise ValueError("optical_depth must be finite and non-negative")
        steps = np.diff(self.detuning_grid)
        if np.any(steps <= 0):
            raise GridNotUniformError("detuning grid must be strictly increasing")
        if np.ptp(steps) > 1e-6 * steps.mean():
            raise GridNotUniformError("detuning grid spacing is not uniform")

    @property
    def step(self) -> float:
        return float(self.detuning_grid[1] - self.detuning_grid[0])

    @property
    def span(self) -> float:
        return float(self.detuning_grid[-1] - self.detuning_grid[0])

    def covers(self, low: float, high: float) -> bool:
        """True if the grid spans [low, high] up to half a grid step."""
        tolerance = 0.5 * self.step
        return self.detuning_grid[0] <= low + tolerance and self.detuning_grid[-1] >= high - tolerance

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"detuning_mhz": self.detuning_grid, "optical_depth": self.optical_depth})

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.9g", lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "SpectralProfile":
        """Load a profile written by `to_csv` (comment lines starting with '#' are skipped)."""
        frame = pd.read_csv(path, comment="#")
        return cls(
            detuning_grid=frame["detuning_mhz"].to_numpy(),
            optical_depth=frame["optical_depth"].to_numpy(),
        )


@dataclass
class CombSpec:
    """Parametric atomic frequency comb (all frequencies in MHz)."""

    tooth_spacing: float
    tooth_fwhm: float
    comb_depth: float
    background_depth: float
    bandwidth: float
    tooth_shape: ToothShape = "gaussian"

    def __post_init__(self):
        if not self.tooth_spacing > self.tooth_fwhm > 0:
            raise ValueError(
                f"comb needs spacing > tooth width > 0, got {self.tooth_spacing} and {self.tooth_fwhm}"
            )
        if self.comb_depth < 0 or self.background_depth < 0:
            raise ValueError("comb_depth and background_depth must be non-negative")
        if self.bandwidth < 2 * self.tooth_spacing:
            raise ValueError(f"bandwidth {self.bandwidth} MHz must cover at least two tooth spacings")
        if self.tooth_shape not in ("gaussian", "square"):
            raise ValueError(f"unknown tooth_shape {self.tooth_shape!r}")

    @property
    def finesse(self) -> float:
        return self.tooth_spacing / self.tooth_fwhm

    @property
    def storage_time_ns(self) -> float:
        """Echo delay 1/Delta (MHz -> ns)."""
        return 1e3 / self.tooth_spacing

    def with_finesse(self, finesse: float) -> "CombSpec":
        return replace(self, tooth_fwhm=self.tooth_spacing / finesse)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tooth_spacing_mhz": self.tooth_spacing,
            "tooth_fwhm_mhz": self.tooth_fwhm,
            "comb_depth": self.comb_depth,
            "background_depth": self.background_depth,
            "bandwidth_mhz": self.bandwidth,
            "tooth_shape": self.tooth_shape,
            "finesse": self.finesse,
        }


@dataclass
class BurnSchedule:
    """Optical pumping sequence for spectral hole burning.

    Attributes:
        pulse_duration: Length of one pump pulse (ms)
        repetitions: Number of pump pulses
        pump_spectral_density: Pump rate per frequency class (s^-1), on the burn grid
        wait_after: Dark time between the last pulse and the readout (ms)
        interval: Dark time between consecutive pulses (ms)
    """

    pulse_duration: float
    repetitions: int
    pump_spectral_density: np.ndarray
    wait_after: float = 0.0
    interval: float = 0.0

    def __post_init__(self):
        self.pump_spectral_density = np.asarray(self.pump_spectral_density, dtype=float)
        if self.pulse_duration <= 0:
            raise ValueError(f"pulse_duration must be positive, got {self.pulse_duration}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.wait_after < 0 or self.interval < 0:
            raise ValueError("wait_after and interval must be non-negative")
        if np.any(self.pump_spectral_density < 0):
            raise ValueError("pump rates must be non-negative")


@dataclass
class PopulationHistory:
    """Rate-equation trajectory summary for the distinct pump rates of a burn.

    `populations` has shape (snapshots, rates, pools) with pools ordered
    ground, excited, then one shelf pool per hole lifetime.
    """

    rates: np.ndarray
    times_ms: np.ndarray
    populations: np.ndarray
    max_conservation_error: float
    min_population: float
    steps: int

    @property
    def final(self) -> np.ndarray:
        return self.populations[-1]