"""CSV tables and JSON run manifests."""
from __future__ import annotations

import csv
import json
import math
import os
import subprocess
from pathlib import Path

from .. import __version__
from .config import (STREAM_DFO, STREAM_INIT, STREAM_ROLLOUTS, STREAM_TARGET, STREAM_TEST_STATES,
                     STREAM_TRAIN_STATES)

TRACE_COLUMNS = ["method", "iteration", "evals", "reward", "objective", "reward_std", "sigma",
                 "baseline", "grad_norm", "mean_fidelity", "wall_ms"]

_STREAMS = {
    "target": STREAM_TARGET,
    "train_states": STREAM_TRAIN_STATES,
    "rollouts": STREAM_ROLLOUTS,
    "test_states": STREAM_TEST_STATES,
    "dfo": STREAM_DFO,
    "init": STREAM_INIT,
}


class OutputError(OSError):
    """Output location cannot be created or written."""


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {path}: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise OutputError(f"output directory is not writable: {path}")
    return path


def write_csv(path, columns, records) -> Path:
    """Write dict records with a fixed column order; missing keys are blank."""
    path = Path(path)
    ensure_dir(path.parent)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for record in records:
                writer.writerow([format_value(record.get(col)) for col in columns])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def trace_records(trace, record_timing: bool = False) -> list[dict]:
    out = []
    for row in trace.rows:
        rec = dict(vars(row), method=trace.method)
        if not record_timing:
            rec["wall_ms"] = None
        out.append(rec)
    return out


def write_traces(path, traces, record_timing: bool = False) -> Path:
    records = [rec for trace in traces for rec in trace_records(trace, record_timing)]
    return write_csv(path, TRACE_COLUMNS, records)


def version_string() -> str:
    """Package version, with the git revision appended when available."""
    try:
        rev = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, cwd=Path(__file__).parent, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return __version__
    if rev.returncode != 0 or not rev.stdout.strip():
        return __version__
    return f"{__version__}+g{rev.stdout.strip()}"


def seed_lineage(seeds) -> dict:
    """How every random stream of a run is derived from its master seed."""
    return {
        "derivation": "numpy SeedSequence(master_seed, spawn_key=(stream_id, ...))",
        "stream_ids": dict(_STREAMS),
        "master_seeds": [int(s) for s in seeds],
    }


def write_manifest(path, command: str, config: dict, seeds, outputs: dict, extra: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "version": version_string(),
        "config": config,
        "seeds": seed_lineage(seeds),
        "outputs": {k: str(v) for k, v in outputs.items()},
    }
    if extra:
        manifest.update(extra)
    path = Path(path)
    ensure_dir(path.parent)
    try:
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    return path
