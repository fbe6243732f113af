"""Scenario configs, pipelines, sweeps, calibration and artifact output."""

from .calibration import CalibrationResult, calibrate_dark_rate
from .config import (
    BUNDLED_CONFIGS,
    SCENARIO_NAMES,
    PathNotFoundError,
    ScenarioConfig,
    SchemaError,
    bundled_config,
    dump_config,
    load_config,
    resolve_config,
    with_parameter,
)
from .plotdata import MissingArtifactError, emit_plotdata
from .runner import RunManifest, StageFailure, run_scenario, stage_seed
from .scenarios import SCENARIOS, simulate_storage
from .sweep import sweep

__all__ = [
    "BUNDLED_CONFIGS",
    "CalibrationResult",
    "MissingArtifactError",
    "PathNotFoundError",
    "RunManifest",
    "SCENARIOS",
    "SCENARIO_NAMES",
    "ScenarioConfig",
    "SchemaError",
    "StageFailure",
    "bundled_config",
    "calibrate_dark_rate",
    "dump_config",
    "emit_plotdata",
    "load_config",
    "resolve_config",
    "run_scenario",
    "simulate_storage",
    "stage_seed",
    "sweep",
]
