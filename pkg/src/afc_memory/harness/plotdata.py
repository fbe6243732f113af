"""Gnuplot-ready .dat files from the artifacts of a finished run."""

import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..coherence import evaluate_model
from ..errors import AFCMemoryError
from . import artifacts
from .runner import RunManifest

logger = logging.getLogger(__name__)

PLOTS_DIR = "plots"
CURVE_POINTS = 400


class MissingArtifactError(AFCMemoryError):
    """A run lacks an artifact its plot data is built from."""


def _write_dat(path: Path, frame: pd.DataFrame, manifest: RunManifest, title: str) -> Path:
    lines = [
        f"# {title}",
        f"# run: {manifest.name} ({manifest.scenario})",
        f"# config_hash: {manifest.config_hash}",
        "# columns: " + " ".join(frame.columns),
    ]
    body = frame.to_csv(sep=" ", index=False, header=False, float_format="%.9g", lineterminator="\n")
    return artifacts.atomic_write_text(path, "\n".join(lines) + "\n" + body)


def _load(manifest: RunManifest, name: str) -> pd.DataFrame:
    if name not in manifest.outputs or not (manifest.directory / name).exists():
        raise MissingArtifactError(f"run '{manifest.name}' has no {name}")
    return artifacts.read_csv(manifest.directory / name)


def _histogram(manifest: RunManifest, name: str, out: Path) -> List[Path]:
    frame = _load(manifest, name)
    return [_write_dat(out / name.replace(".csv", ".dat"), frame, manifest, "photon arrival histogram (counts per bin)")]


def _decay(manifest: RunManifest, out: Path) -> List[Path]:
    trace = _load(manifest, "trace.csv")
    unit = artifacts.read_csv_header(manifest.directory / "trace.csv").get("time_unit", "ms")
    written = [_write_dat(out / "trace.dat", trace, manifest, f"decay trace (time in {unit})")]

    fit_path = manifest.directory / "fit.json"
    if not fit_path.exists():
        raise MissingArtifactError(f"run '{manifest.name}' has no fit.json")
    with open(fit_path, encoding="utf-8") as handle:
        fit = json.load(handle)
    parameters = fit["parameters"]
    if all(isinstance(v, (int, float)) for v in parameters.values()):
        times = trace["time"].to_numpy()
        if np.all(times > 0) and times[-1] / times[0] > 100:
            curve_t = np.geomspace(times[0], times[-1], CURVE_POINTS)
        else:
            curve_t = np.linspace(times[0], times[-1], CURVE_POINTS)
        curve = evaluate_model(fit["model"], curve_t, parameters, fit.get("convention") or "intensity")
        written.append(
            _write_dat(
                out / "fit_curve.dat",
                pd.DataFrame({"time": curve_t, "model": curve}),
                manifest,
                f"fitted {fit['model']} curve (time in {unit})",
            )
        )
    else:
        logger.warning(f"Fit in run '{manifest.name}' has non-finite parameters, no curve written")
    return written


def _comb(manifest: RunManifest, out: Path) -> List[Path]:
    return [_write_dat(out / "comb.dat", _load(manifest, "comb.csv"), manifest, "optical depth against detuning (MHz)")]


def _storage(manifest: RunManifest, out: Path) -> List[Path]:
    written = _comb(manifest, out)
    written.append(
        _write_dat(out / "waveform.dat", _load(manifest, "waveform.csv"), manifest, "input and output intensity (photons/ns)")
    )
    written.extend(_histogram(manifest, "histogram.csv", out))
    return written


def _multimode(manifest: RunManifest, out: Path) -> List[Path]:
    written = _storage(manifest, out)
    written.append(_write_dat(out / "modes.dat", _load(manifest, "modes.csv"), manifest, "per-mode efficiency"))
    return written


def _qubit(manifest: RunManifest, out: Path) -> List[Path]:
    return _histogram(manifest, "histogram_el.csv", out) + _histogram(manifest, "histogram_umzi.csv", out)


def _fringe(manifest: RunManifest, out: Path) -> List[Path]:
    return [_write_dat(out / "fringe.dat", _load(manifest, "fringe.csv"), manifest, "central-peak counts against phase (rad)")]


EMITTERS: Dict[str, Callable[[RunManifest, Path], List[Path]]] = {
    "fluorescence": _decay,
    "photon_echo": _decay,
    "hole_decay": _decay,
    "comb_preparation": _comb,
    "storage": _storage,
    "multimode": _multimode,
    "qubit_fidelity": _qubit,
    "fringe": _fringe,
}


def emit_plotdata(
    manifest: Union[RunManifest, str, Path],
    output_dir: Optional[Union[str, Path]] = None,
) -> List[Path]:
    """Write the .dat files for a run, by default into its plots/ directory.

    Args:
        manifest: A RunManifest, its manifest.json, or the run directory

    Raises:
        MissingArtifactError: An artifact the plots need is missing
    """
    if not isinstance(manifest, RunManifest):
        path = Path(manifest)
        if path.is_dir():
            path = path / "manifest.json"
        if not path.exists():
            raise MissingArtifactError(f"no manifest at {path}")
        manifest = RunManifest.from_json(path)

    emitter = EMITTERS.get(manifest.scenario)
    if emitter is None:
        logger.info(f"Scenario {manifest.scenario} has no plot data")
        return []
    out = Path(output_dir) if output_dir is not None else manifest.directory / PLOTS_DIR
    out.mkdir(parents=True, exist_ok=True)
    written = emitter(manifest, out)
    logger.info(f"✓ Wrote {len(written)} plot files to {out}")
    return written
