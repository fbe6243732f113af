"""Pulse, filter and storage-result models."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

FOUR_LN2 = 4.0 * np.log(2.0)


@dataclass
class PulseTrain:
    """Sampled complex field envelope.

    Samples are in sqrt(photon flux) units, so sum(|E|^2) * dt is the mean
    photon number. Time is in ns.
    """

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.samples.ndim != 1 or len(self.samples) < 2:
            raise ValueError("a pulse train needs a 1-D array of at least two samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("pulse samples must be finite")

    @classmethod
    def gaussian(
        cls,
        fwhm_ns: float,
        center_ns: float = 0.0,
        mean_photon_number: float = 1.0,
        dt: float = 1.0,
        t_start: float = -500.0,
        duration: float = 2000.0,
        phase: float = 0.0,
    ) -> "PulseTrain":
        """Single Gaussian pulse whose field amplitude has the given FWHM."""
        return cls.gaussian_train(
            fwhm_ns, [center_ns], mean_photon_number, dt, t_start, duration, phases=[phase]
        )

    @classmethod
    def gaussian_train(
        cls,
        fwhm_ns: float,
        centers_ns: Sequence[float],
        mean_photon_number: float = 1.0,
        dt: float = 1.0,
        t_start: float = -500.0,
        duration: float = 2000.0,
        phases: Optional[Sequence[float]] = None,
    ) -> "PulseTrain":
        """Train of Gaussian pulses, each normalized to `mean_photon_number`.

        The width is the FWHM of the field amplitude; the intensity FWHM is
        fwhm_ns / sqrt(2).
        """
        if fwhm_ns <= 0:
            raise ValueError(f"fwhm_ns must be positive, got {fwhm_ns}")
        if mean_photon_number < 0:
            raise ValueError(f"mean_photon_number must be non-negative, got {mean_photon_number}")
        phases = [0.0] * len(centers_ns) if phases is None else list(phases)
        if len(phases) != len(centers_ns):
            raise ValueError("phases must match centers_ns in length")

        times = t_start + dt * np.arange(int(round(duration / dt)))
        samples = np.zeros(len(times), dtype=complex)
        for center, phase in zip(centers_ns, phases):
            envelope = np.exp(-FOUR_LN2 * ((times - center) / fwhm_ns) ** 2)
            energy = np.sum(envelope**2) * dt
            samples += np.sqrt(mean_photon_number / energy) * envelope * np.exp(1j * phase)
        return cls(t0=t_start, dt=dt, samples=samples)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def duration(self) -> float:
        return self.dt * len(self.samples)

    def _mask(self, start: Optional[float], end: Optional[float]) -> np.ndarray:
        times = self.times
        mask = np.ones(len(times), dtype=bool)
        if start is not None:
            mask &= times >= start
        if end is not None:
            mask &= times <= end
        return mask

    def energy(self, start: Optional[float] = None, end: Optional[float] = None) -> float:
        """Photon number sum(|E|^2) * dt, optionally restricted to [start, end]."""
        return float(np.sum(self.intensity[self._mask(start, end)]) * self.dt)

    def centroid(self, start: Optional[float] = None, end: Optional[float] = None) -> float:
        """Energy-weighted mean time in [start, end]."""
        mask = self._mask(start, end)
        weights = self.intensity[mask]
        total = weights.sum()
        if total <= 0:
            raise ValueError("no energy in the requested interval")
        return float(np.sum(self.times[mask] * weights) / total)

    def shifted(self, delay_ns: float) -> "PulseTrain":
        return PulseTrain(t0=self.t0 + delay_ns, dt=self.dt, samples=self.samples.copy())

    def cropped(self, start: float, end: float) -> "PulseTrain":
        """Samples with start <= t < end."""
        times = self.times
        keep = (times >= start - 1e-9 * self.dt) & (times < end - 1e-9 * self.dt)
        first = int(np.argmax(keep))
        return PulseTrain(t0=float(times[first]), dt=self.dt, samples=self.samples[keep].copy())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"time_ns": self.times, "re": self.samples.real, "im": self.samples.imag})

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.9g", lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "PulseTrain":
        frame = pd.read_csv(path, comment="#")
        times = frame["time_ns"].to_numpy()
        return cls(
            t0=float(times[0]),
            dt=float(times[1] - times[0]),
            samples=frame["re"].to_numpy() + 1j * frame["im"].to_numpy(),
        )


@dataclass
class TransferFunction:
    """Complex response H(w) of the comb on a detuning grid (MHz)."""

    detuning_grid: np.ndarray
    complex_response: np.ndarray

    def __post_init__(self):
        self.detuning_grid = np.asarray(self.detuning_grid, dtype=float)
        self.complex_response = np.asarray(self.complex_response, dtype=complex)
        if self.detuning_grid.shape != self.complex_response.shape:
            raise ValueError("detuning_grid and complex_response must have equal shape")
        if np.any(np.abs(self.complex_response) > 1.0 + 1e-9):
            raise ValueError("|H| exceeds 1, the medium must be passive")

    @classmethod
    def identity(cls, detuning_grid: np.ndarray) -> "TransferFunction":
        grid = np.asarray(detuning_grid, dtype=float)
        return cls(grid, np.ones(len(grid), dtype=complex))

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.complex_response)

    @property
    def phase(self) -> np.ndarray:
        return np.unwrap(np.angle(self.complex_response))


@dataclass
class MemoryResult:
    """Storage efficiency of one echo.

    Times are relative to the reference input time (by default the input
    energy centroid), so `echo_time` is the measured storage delay.
    """

    efficiency: float
    echo_time: float
    echo_window: Tuple[float, float]
    input_energy: float
    echo_energy: float
    higher_order_efficiencies: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0 + 1e-9:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "efficiency": self.efficiency,
            "echo_time_ns": self.echo_time,
            "echo_window_ns": list(self.echo_window),
            "input_energy": self.input_energy,
            "echo_energy": self.echo_energy,
            "higher_order_efficiencies": {str(k): v for k, v in self.higher_order_efficiencies.items()},
        }
