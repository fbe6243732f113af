"""Scenario configuration documents.

A scenario is a JSON object with one section per concern. Every section is a
dataclass; `from_dict` checks keys and types and reports the JSON pointer of
the first problem, then builds the domain object once so range errors carry
the same pointer.
"""

import dataclasses
import hashlib
import json
import os
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..coherence.models import SECONDS_PER_UNIT
from ..ensemble.models import CombSpec, Environment, IonEnsembleParams
from ..errors import AFCMemoryError
from ..photonics.models import InterferometerSpec

OUTPUT_ROOT_ENV = "AFC_MEMORY_OUTPUT_ROOT"
SCENARIO_NAMES = (
    "fluorescence",
    "photon_echo",
    "hole_decay",
    "comb_preparation",
    "storage",
    "multimode",
    "qubit_fidelity",
    "fringe",
    "delay_line",
)
BUNDLED_CONFIGS = ("fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c", "fig4a", "fig4d", "delayline")


class SchemaError(AFCMemoryError):
    """Configuration document does not match the schema."""

    def __init__(self, path: str, message: str):
        self.path = path or "/"
        super().__init__(f"{self.path}: {message}")


class PathNotFoundError(AFCMemoryError):
    """A parameter path does not resolve to a configuration key."""


def _type_name(hint: Any) -> str:
    return getattr(hint, "__name__", str(hint))


def _coerce(value: Any, hint: Any, pointer: str) -> Any:
    """Check `value` against a type hint, returning the value in its dataclass form."""
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)

    if origin is Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], pointer)
    if dataclasses.is_dataclass(hint):
        return _section_from_dict(hint, value, pointer)
    if origin in (list, List):
        if not isinstance(value, list):
            raise SchemaError(pointer, f"expected a list, got {type(value).__name__}")
        return [_coerce(item, args[0], f"{pointer}/{i}") for i, item in enumerate(value)]
    if origin in (tuple, Tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(args):
            raise SchemaError(pointer, f"expected a list of {len(args)} values")
        return tuple(_coerce(item, a, f"{pointer}/{i}") for i, (item, a) in enumerate(zip(value, args)))
    if origin in (dict, Dict):
        if not isinstance(value, dict):
            raise SchemaError(pointer, f"expected an object, got {type(value).__name__}")
        return {str(k): _coerce(v, args[1], f"{pointer}/{k}") for k, v in value.items()}
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(pointer, f"expected a number, got {type(value).__name__}")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(pointer, f"expected an integer, got {type(value).__name__}")
        return value
    if hint is str or hint is bool:
        if not isinstance(value, hint):
            raise SchemaError(pointer, f"expected {_type_name(hint)}, got {type(value).__name__}")
        return value
    raise TypeError(f"unsupported config type {hint!r}")


def _section_from_dict(cls, data: Any, pointer: str):
    if not isinstance(data, dict):
        raise SchemaError(pointer, f"expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise SchemaError(f"{pointer}/{key}", "unknown key")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _coerce(data[f.name], hints[f.name], f"{pointer}/{f.name}")
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise SchemaError(f"{pointer}/{f.name}", "missing required key")
    section = cls(**kwargs)
    check = getattr(section, "check", None)
    if check is not None:
        check(pointer)
    return section


def _to_plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value):
        return {f.name: _to_plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _to_plain(v) for k, v in value.items()}
    return value


def _require(condition: bool, pointer: str, message: str) -> None:
    if not condition:
        raise SchemaError(pointer, message)


@dataclass
class HoleLifetimeConfig:
    fraction: float
    lifetime_s: float


@dataclass
class EnsembleConfig:
    peak_absorption_per_cm: float = 10.52
    inhomogeneous_fwhm_ghz: float = 250.0
    center_wavelength_nm: float = 1531.6
    t1_excited_ms: float = 2.78
    hole_lifetimes: List[HoleLifetimeConfig] = field(
        default_factory=lambda: [
            HoleLifetimeConfig(0.5, 1.95),
            HoleLifetimeConfig(0.3, 19.5),
            HoleLifetimeConfig(0.2, 195.0),
        ]
    )
    shelving_branch: float = 0.1
    waveguide_length_mm: float = 5.0
    line_shape_lorentz_weight: float = 0.5
    temperature_k: float = 1.6
    magnetic_field_t: float = 4.0

    def check(self, pointer: str) -> None:
        try:
            self.to_params()
        except ValueError as e:
            raise SchemaError(pointer, str(e)) from e

    def to_params(self) -> IonEnsembleParams:
        return IonEnsembleParams(
            peak_absorption=self.peak_absorption_per_cm,
            inhomogeneous_fwhm=self.inhomogeneous_fwhm_ghz,
            center_wavelength=self.center_wavelength_nm,
            t1_excited=self.t1_excited_ms,
            hole_lifetimes=[(h.fraction, h.lifetime_s) for h in self.hole_lifetimes],
            waveguide_length=self.waveguide_length_mm,
            shelving_branch=self.shelving_branch,
            lorentz_weight=self.line_shape_lorentz_weight,
            environment=Environment(temperature_k=self.temperature_k, magnetic_field_t=self.magnetic_field_t),
        )


@dataclass
class CombConfig:
    """Comb geometry. `finesse`, when set, overrides tooth_fwhm_mhz as spacing / finesse."""

    tooth_spacing_mhz: float = 2.5
    tooth_fwhm_mhz: float = 1.03
    comb_depth: float = 1.61
    background_depth: float = 1.36
    bandwidth_mhz: float = 40.0
    tooth_shape: str = "gaussian"
    source: str = "ideal"
    finesse: Optional[float] = None
    grid_step_mhz: Optional[float] = None
    grid_half_span_mhz: Optional[float] = None

    def check(self, pointer: str) -> None:
        _require(self.source in ("ideal", "burned"), f"{pointer}/source", "must be 'ideal' or 'burned'")
        _require(self.finesse is None or self.finesse > 1, f"{pointer}/finesse", "must exceed 1")
        _require(
            self.grid_step_mhz is None or self.grid_step_mhz > 0, f"{pointer}/grid_step_mhz", "must be positive"
        )
        try:
            self.to_spec()
        except ValueError as e:
            raise SchemaError(pointer, str(e)) from e

    def to_spec(self) -> CombSpec:
        spec = CombSpec(
            tooth_spacing=self.tooth_spacing_mhz,
            tooth_fwhm=self.tooth_fwhm_mhz,
            comb_depth=self.comb_depth,
            background_depth=self.background_depth,
            bandwidth=self.bandwidth_mhz,
            tooth_shape=self.tooth_shape,
        )
        return spec if self.finesse is None else spec.with_finesse(self.finesse)


@dataclass
class BurnConfig:
    pulse_duration_ms: float = 5.0
    repetitions: int = 150
    pump_rate_per_s: float = 2.0e4
    wait_after_ms: float = 0.0
    interval_ms: float = 0.0

    def check(self, pointer: str) -> None:
        _require(self.pulse_duration_ms > 0, f"{pointer}/pulse_duration_ms", "must be positive")
        _require(self.repetitions >= 1, f"{pointer}/repetitions", "must be at least 1")
        _require(self.pump_rate_per_s >= 0, f"{pointer}/pump_rate_per_s", "must be non-negative")
        _require(self.wait_after_ms >= 0, f"{pointer}/wait_after_ms", "must be non-negative")
        _require(self.interval_ms >= 0, f"{pointer}/interval_ms", "must be non-negative")


@dataclass
class PulseConfig:
    """Input pulses. Widths are field-amplitude FWHM; t = 0 is the first pulse center."""

    pulse_fwhm_ns: float = 50.0
    mean_photon_number: float = 0.578
    dt_ns: float = 1.0
    lead_ns: float = 500.0
    duration_ns: float = 2000.0
    padding: int = 8
    modes: int = 1
    mode_spacing_ns: float = 100.0
    bin_separation_ns: float = 130.0

    def check(self, pointer: str) -> None:
        for name in ("pulse_fwhm_ns", "mean_photon_number", "dt_ns", "lead_ns", "duration_ns", "mode_spacing_ns"):
            _require(getattr(self, name) > 0, f"{pointer}/{name}", "must be positive")
        _require(self.padding >= 1, f"{pointer}/padding", "must be at least 1")
        _require(self.modes >= 1, f"{pointer}/modes", "must be at least 1")
        _require(
            self.bin_separation_ns > self.pulse_fwhm_ns,
            f"{pointer}/bin_separation_ns",
            "must exceed pulse_fwhm_ns",
        )
        _require(self.duration_ns > self.lead_ns, f"{pointer}/duration_ns", "must exceed lead_ns")

    @property
    def t_start(self) -> float:
        return -self.lead_ns


@dataclass
class DetectorConfig:
    quantum_efficiency: float = 0.85
    collection_efficiency: float = 0.125
    dark_rate_per_s: float = 212.6
    bin_width_ns: float = 1.0
    gate_ns: Optional[Tuple[float, float]] = None

    def check(self, pointer: str) -> None:
        for name in ("quantum_efficiency", "collection_efficiency"):
            _require(0.0 <= getattr(self, name) <= 1.0, f"{pointer}/{name}", "must lie in [0, 1]")
        _require(self.dark_rate_per_s >= 0, f"{pointer}/dark_rate_per_s", "must be non-negative")
        _require(self.bin_width_ns > 0, f"{pointer}/bin_width_ns", "must be positive")
        if self.gate_ns is not None:
            _require(self.gate_ns[1] > self.gate_ns[0], f"{pointer}/gate_ns", "must be an increasing interval")

    @property
    def detection_efficiency(self) -> float:
        return self.quantum_efficiency * self.collection_efficiency


@dataclass
class InterferometerConfig:
    analysis_phase_rad: float = 0.0
    splitter_ratios: Tuple[float, float] = (0.5, 0.5)
    arm_transmissions: Tuple[float, float] = (1.0, 1.0)

    def check(self, pointer: str) -> None:
        for name in ("splitter_ratios", "arm_transmissions"):
            for i, value in enumerate(getattr(self, name)):
                _require(0.0 <= value <= 1.0, f"{pointer}/{name}/{i}", "must lie in [0, 1]")

    def to_spec(self, arm_delay_ns: float) -> InterferometerSpec:
        return InterferometerSpec(
            arm_delay=arm_delay_ns,
            analysis_phase=self.analysis_phase_rad,
            splitter_ratios=self.splitter_ratios,
            arm_transmissions=self.arm_transmissions,
        )


@dataclass
class TrialsConfig:
    n_trials: int = 100_000_000
    fringe_points: int = 12
    workers: int = 4

    def check(self, pointer: str) -> None:
        _require(self.n_trials >= 1, f"{pointer}/n_trials", "must be at least 1")
        _require(self.fringe_points >= 6, f"{pointer}/fringe_points", "must be at least 6")
        _require(self.workers >= 1, f"{pointer}/workers", "must be at least 1")


@dataclass
class AnalysisConfig:
    """Readout windows (ns). echo_window_ns defaults to six input-pulse FWHM."""

    echo_window_ns: Optional[float] = None
    snr_window_ns: float = 100.0
    noise_window_ns: Tuple[float, float] = (-450.0, -350.0)
    echo_convention: str = "intensity"

    def check(self, pointer: str) -> None:
        _require(
            self.echo_window_ns is None or self.echo_window_ns > 0, f"{pointer}/echo_window_ns", "must be positive"
        )
        _require(self.snr_window_ns > 0, f"{pointer}/snr_window_ns", "must be positive")
        _require(
            self.noise_window_ns[1] > self.noise_window_ns[0], f"{pointer}/noise_window_ns", "must be increasing"
        )
        _require(
            self.echo_convention in ("intensity", "amplitude"),
            f"{pointer}/echo_convention",
            "must be 'intensity' or 'amplitude'",
        )


@dataclass
class SpectroscopyConfig:
    """Decay experiment. Unset fields take the scenario's defaults."""

    model: Optional[str] = None
    parameters: Dict[str, float] = field(default_factory=dict)
    time_start: Optional[float] = None
    time_stop: Optional[float] = None
    points: Optional[int] = None
    spacing: Optional[str] = None
    snr: Optional[float] = None
    time_unit: Optional[str] = None
    trace_path: Optional[str] = None

    def check(self, pointer: str) -> None:
        _require(
            self.model is None or self.model in ("single_exp", "two_pulse_echo", "triple_exp"),
            f"{pointer}/model",
            "must be single_exp, two_pulse_echo or triple_exp",
        )
        _require(self.spacing is None or self.spacing in ("linear", "log"), f"{pointer}/spacing", "must be linear or log")
        _require(self.points is None or self.points >= 2, f"{pointer}/points", "must be at least 2")
        _require(self.snr is None or self.snr > 0, f"{pointer}/snr", "must be positive")
        _require(
            self.time_unit is None or self.time_unit in SECONDS_PER_UNIT, f"{pointer}/time_unit", "must be ms, us or s"
        )


@dataclass
class DelayLineConfig:
    """Fiber/waveguide delay line compared against the memory. length_m overrides group_index."""

    group_index: float = 2.0
    loss_db_per_m: float = 1.3
    length_m: Optional[float] = None

    def check(self, pointer: str) -> None:
        _require(self.group_index > 0, f"{pointer}/group_index", "must be positive")
        _require(self.loss_db_per_m >= 0, f"{pointer}/loss_db_per_m", "must be non-negative")
        _require(self.length_m is None or self.length_m > 0, f"{pointer}/length_m", "must be positive")


@dataclass
class OutputConfig:
    directory: str = "runs"


@dataclass
class ScenarioConfig:
    """A complete scenario document."""

    name: str
    scenario: str
    seed: int = 2024
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    comb: CombConfig = field(default_factory=CombConfig)
    burn: BurnConfig = field(default_factory=BurnConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    interferometer: InterferometerConfig = field(default_factory=InterferometerConfig)
    trials: TrialsConfig = field(default_factory=TrialsConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    spectroscopy: SpectroscopyConfig = field(default_factory=SpectroscopyConfig)
    delay_line: DelayLineConfig = field(default_factory=DelayLineConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def check(self, pointer: str) -> None:
        _require(bool(self.name), f"{pointer}/name", "must not be empty")
        _require(
            self.scenario in SCENARIO_NAMES,
            f"{pointer}/scenario",
            f"unknown scenario {self.scenario!r}, expected one of {', '.join(SCENARIO_NAMES)}",
        )

    @classmethod
    def from_dict(cls, data: Any) -> "ScenarioConfig":
        """Validate a parsed document and build the config.

        Raises:
            SchemaError: With the JSON pointer of the first offending key
        """
        return _section_from_dict(cls, data, "")

    def to_dict(self) -> Dict[str, Any]:
        return _to_plain(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def output_directory(self) -> Path:
        """Run directory: output root (env override first) joined with the scenario name."""
        root = os.environ.get(OUTPUT_ROOT_ENV) or self.output.directory
        return Path(root) / self.name


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """Parse and validate a scenario document from disk."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError("", f"{path} is not valid JSON: {e}") from e
    return ScenarioConfig.from_dict(data)


def dump_config(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def bundled_config(name: str) -> ScenarioConfig:
    """Load one of the golden scenario documents shipped with the package."""
    if name not in BUNDLED_CONFIGS:
        raise SchemaError("", f"unknown bundled config {name!r}, expected one of {', '.join(BUNDLED_CONFIGS)}")
    text = resources.files("afc_memory.configs").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return ScenarioConfig.from_dict(json.loads(text))


def resolve_config(reference: Union[str, Path]) -> ScenarioConfig:
    """Load a config from a file path, or by bundled name when no such file exists."""
    path = Path(reference)
    if path.exists():
        return load_config(path)
    if str(reference) in BUNDLED_CONFIGS:
        return bundled_config(str(reference))
    raise SchemaError("", f"config {reference} not found")


def with_parameter(config: ScenarioConfig, parameter_path: str, value: Any) -> ScenarioConfig:
    """Copy of `config` with the key at a JSON pointer such as /pulse/mean_photon_number replaced.

    Raises:
        PathNotFoundError: The pointer does not name an existing key
        SchemaError: The new value fails validation
    """
    parts = [p for p in parameter_path.split("/") if p]
    if not parts:
        raise PathNotFoundError(f"empty parameter path {parameter_path!r}")
    data = config.to_dict()
    node = data
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise PathNotFoundError(f"{parameter_path} does not resolve in the config")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise PathNotFoundError(f"{parameter_path} does not resolve in the config")
    node[parts[-1]] = value
    return ScenarioConfig.from_dict(data)
