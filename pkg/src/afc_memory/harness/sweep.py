"""Parameter sweeps: one scenario run per value, collected into sweep.csv."""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from . import artifacts
from .config import ScenarioConfig, with_parameter
from .runner import run_scenario

logger = logging.getLogger(__name__)

SWEEP_NAME = "sweep.csv"


def _scalars(summary: Dict[str, Any]) -> Dict[str, Any]:
    return {
        key: value
        for key, value in summary.items()
        if isinstance(value, (int, float, bool)) or value is None
    }


def sweep(
    config: ScenarioConfig,
    parameter_path: str,
    values: Sequence[Any],
    workers: int = 1,
    output_dir: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    """Run the scenario once per value of the key at `parameter_path`.

    Every point runs in its own point_NNN directory under the sweep
    directory. Rows keep the order of `values` and carry the scalar
    summary fields of each run.

    Raises:
        PathNotFoundError: The parameter path names no config key
        SchemaError: A value fails validation (checked before anything runs)
    """
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    directory = Path(output_dir) if output_dir is not None else config.output_directory()
    directory.mkdir(parents=True, exist_ok=True)
    points = [with_parameter(config, parameter_path, value) for value in values]
    logger.info(f"Sweeping {parameter_path} over {len(points)} values with {workers} workers")

    rows: List[Optional[Dict[str, Any]]] = [None] * len(points)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(run_scenario, point, directory / f"point_{i:03d}"): i for i, point in enumerate(points)
        }
        for future in as_completed(futures):
            i = futures[future]
            manifest = future.result()
            rows[i] = {"parameter": parameter_path, "value": values[i], **_scalars(manifest.summary)}
            logger.info(f"✓ point {i} ({parameter_path} = {values[i]})")

    frame = pd.DataFrame(rows) if rows else pd.DataFrame(columns=["parameter", "value"])
    artifacts.write_csv(directory / SWEEP_NAME, frame, config.config_hash, {"parameter": parameter_path})
    return frame
