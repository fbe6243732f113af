"""Scenario execution: stage timing, seed derivation, artifact bookkeeping and the run manifest."""

import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Union

import pandas as pd

from .. import __version__
from ..errors import AFCMemoryError, InfeasibleError
from . import artifacts
from .config import ScenarioConfig, SchemaError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class StageFailure(AFCMemoryError):
    """An error raised inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


def stage_seed(seed: int, stage: str) -> int:
    """Stable 32-bit seed derived from the run seed and a stage name."""
    payload = "::".join([str(seed), stage]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little") % (2**32)


@dataclass
class RunManifest:
    """Record of one scenario run. `outputs` are file names relative to `directory`."""

    name: str
    scenario: str
    config_hash: str
    seed: int
    tool_version: str
    directory: Path
    stage_timings_s: Dict[str, float] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def path(self) -> Path:
        return self.directory / MANIFEST_NAME

    def output_paths(self) -> List[Path]:
        return [self.directory / name for name in self.outputs]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "scenario": self.scenario,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "stage_timings_s": dict(self.stage_timings_s),
            "outputs": list(self.outputs),
            "summary": dict(self.summary),
        }

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "RunManifest":
        path = Path(path)
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        return cls(
            name=data["name"],
            scenario=data["scenario"],
            config_hash=data["config_hash"],
            seed=data["seed"],
            tool_version=data["tool_version"],
            directory=path.parent,
            stage_timings_s=data.get("stage_timings_s", {}),
            outputs=data.get("outputs", []),
            summary=data.get("summary", {}),
        )


class RunContext:
    """Per-run state handed to a scenario pipeline."""

    def __init__(self, config: ScenarioConfig, directory: Path):
        self.config = config
        self.directory = directory
        self.config_hash = config.config_hash
        self.timings: Dict[str, float] = {}
        self.outputs: List[str] = []
        self.summary: Dict[str, Any] = {}

    def seed_for(self, stage: str) -> int:
        return stage_seed(self.config.seed, stage)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Time a stage and wrap its failures in StageFailure.

        Schema and feasibility errors pass through unchanged so callers can
        map them to their own exit codes.
        """
        logger.info(f"[{self.config.name}] stage {name}")
        start = time.perf_counter()
        try:
            yield
        except (SchemaError, InfeasibleError, StageFailure):
            raise
        except Exception as e:
            logger.error(f"[{self.config.name}] stage {name} failed: {e}")
            raise StageFailure(name, e) from e
        finally:
            self.timings[name] = round(time.perf_counter() - start, 6)

    def _record(self, filename: str) -> Path:
        if filename not in self.outputs:
            self.outputs.append(filename)
        return self.directory / filename

    def write_csv(self, filename: str, frame: pd.DataFrame, header: Optional[Dict[str, Any]] = None) -> Path:
        return artifacts.write_csv(self._record(filename), frame, self.config_hash, header)

    def write_json(self, filename: str, data: Dict[str, Any]) -> Path:
        return artifacts.write_json(self._record(filename), data, self.config_hash)


Pipeline = Callable[[RunContext], None]


def run_scenario(config: ScenarioConfig, output_dir: Optional[Union[str, Path]] = None) -> RunManifest:
    """Run the pipeline registered for `config.scenario` and write its manifest.

    Args:
        config: Validated scenario
        output_dir: Run directory; `config.output_directory()` if omitted

    Returns:
        RunManifest (also written as manifest.json in the run directory)

    Raises:
        StageFailure: A stage raised; the original error is chained
        SchemaError: Unknown scenario
        InfeasibleError: A stage found its request infeasible
    """
    from .scenarios import SCENARIOS

    if config.scenario not in SCENARIOS:
        raise SchemaError("/scenario", f"no pipeline registered for {config.scenario!r}")
    directory = Path(output_dir) if output_dir is not None else config.output_directory()
    directory.mkdir(parents=True, exist_ok=True)

    context = RunContext(config, directory)
    logger.info(f"Running {config.scenario} scenario '{config.name}' (seed {config.seed}) into {directory}")
    start = time.perf_counter()

    context.write_json("config.json", {"config": config.to_dict()})
    SCENARIOS[config.scenario](context)

    manifest = RunManifest(
        name=config.name,
        scenario=config.scenario,
        config_hash=context.config_hash,
        seed=config.seed,
        tool_version=__version__,
        directory=directory,
        stage_timings_s=context.timings,
        outputs=context.outputs,
        summary=context.summary,
    )
    artifacts.write_json(manifest.path, manifest.to_dict())
    logger.info(f"✓ {config.name} finished in {time.perf_counter() - start:.2f} s with {len(context.outputs)} outputs")
    return manifest
