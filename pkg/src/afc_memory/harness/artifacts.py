"""Atomic artifact writers. Every CSV starts with a `# config_hash:` line and every JSON document carries a `config_hash` key."""

import io
import json
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

_HEADER_LINE = re.compile(r"#\s*([\w.-]+)\s*:\s*(.*)")


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def write_json(path: Union[str, Path], data: Dict[str, Any], config_hash: Optional[str] = None) -> Path:
    document = dict(data)
    if config_hash is not None:
        document["config_hash"] = config_hash
    return atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_csv(
    path: Union[str, Path],
    frame: pd.DataFrame,
    config_hash: Optional[str] = None,
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """CSV with `# key: value` comment lines, a header row and 9-significant-digit floats."""
    buffer = io.StringIO()
    if config_hash is not None:
        buffer.write(f"# config_hash: {config_hash}\n")
    for key, value in (header or {}).items():
        buffer.write(f"# {key}: {value}\n")
    frame.to_csv(buffer, index=False, float_format="%.9g", lineterminator="\n")
    return atomic_write_text(path, buffer.getvalue())


def read_csv_header(path: Union[str, Path]) -> Dict[str, str]:
    """The `# key: value` lines at the top of a CSV."""
    header = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            match = _HEADER_LINE.match(line.strip())
            if match:
                header[match.group(1)] = match.group(2)
    return header


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def artifact_config_hash(path: Union[str, Path]) -> Optional[str]:
    """Config hash recorded inside a CSV or JSON artifact, None if absent."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as handle:
            return json.load(handle).get("config_hash")
    return read_csv_header(path).get("config_hash")
