"""Decay traces and fit reports."""

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import numpy as np
import pandas as pd

TimeUnit = Literal["ms", "us", "s"]
DecayModel = Literal["single_exp", "two_pulse_echo", "triple_exp"]

SECONDS_PER_UNIT = {"s": 1.0, "ms": 1e-3, "us": 1e-6}
_UNIT_LINE = re.compile(r"#\s*time_unit\s*:\s*(\w+)")


@dataclass
class DecayTrace:
    """Time-domain measurement: times, values and optional per-point sigma."""

    times: np.ndarray
    values: np.ndarray
    noise_sigma: Optional[np.ndarray] = None
    time_unit: TimeUnit = "ms"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if self.noise_sigma is not None:
            self.noise_sigma = np.broadcast_to(np.asarray(self.noise_sigma, dtype=float), self.times.shape).copy()
            if np.any(self.noise_sigma <= 0):
                raise ValueError("noise_sigma must be positive")
        if self.time_unit not in SECONDS_PER_UNIT:
            raise ValueError(f"unknown time unit {self.time_unit!r}")

    def __len__(self) -> int:
        return len(self.times)

    def to_unit(self, unit: TimeUnit) -> "DecayTrace":
        """Same trace with the time axis expressed in another unit."""
        if unit not in SECONDS_PER_UNIT:
            raise ValueError(f"unknown time unit {unit!r}")
        factor = SECONDS_PER_UNIT[self.time_unit] / SECONDS_PER_UNIT[unit]
        sigma = None if self.noise_sigma is None else self.noise_sigma.copy()
        return DecayTrace(self.times * factor, self.values.copy(), sigma, unit)

    def scaled(self, factor: float) -> "DecayTrace":
        sigma = None if self.noise_sigma is None else self.noise_sigma * factor
        return DecayTrace(self.times.copy(), self.values * factor, sigma, self.time_unit)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"time": self.times, "value": self.values})
        if self.noise_sigma is not None:
            frame["sigma"] = self.noise_sigma
        return frame

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as handle:
            handle.write(f"# time_unit: {self.time_unit}\n")
            self.to_frame().to_csv(handle, index=False, float_format="%.9g", lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Union[str, Path], time_unit: Optional[TimeUnit] = None) -> "DecayTrace":
        """Read `time, value[, sigma]` with a `# time_unit: <unit>` header line.

        An explicit `time_unit` argument wins over the header; without either
        the unit defaults to ms.
        """
        header_unit = None
        with open(path) as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                match = _UNIT_LINE.match(line)
                if match:
                    header_unit = match.group(1)
        frame = pd.read_csv(path, comment="#")
        sigma = frame["sigma"].to_numpy() if "sigma" in frame.columns else None
        return cls(
            times=frame["time"].to_numpy(),
            values=frame["value"].to_numpy(),
            noise_sigma=sigma,
            time_unit=time_unit or header_unit or "ms",
        )


@dataclass
class FitReport:
    """Outcome of a decay fit. Parameters and 1-sigma uncertainties share keys."""

    model: DecayModel
    parameters: Dict[str, float]
    uncertainties: Dict[str, float]
    residual_rms: float
    converged: bool
    iterations: int
    time_unit: TimeUnit = "ms"
    convention: Optional[str] = None
    covariance: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if any(u < 0 for u in self.uncertainties.values()):
            raise ValueError("uncertainties must be non-negative")
        if self.residual_rms < 0:
            raise ValueError("residual_rms must be non-negative")

    def relative_uncertainty(self, name: str) -> float:
        value = self.parameters[name]
        return float("inf") if value == 0 else self.uncertainties[name] / abs(value)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("covariance")
        data["parameters"] = {k: _json_float(v) for k, v in self.parameters.items()}
        data["uncertainties"] = {k: _json_float(v) for k, v in self.uncertainties.items()}
        return data

    def to_json(self, path: Union[str, Path]) -> None:
        with open(path, "w") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")


def _json_float(value: float) -> Union[float, str]:
    return value if np.isfinite(value) else str(value)
