"""Run manifests and on-disk formats.

Every CLI run emits a manifest: tool version, the command, all physical
and Monte Carlo parameters, the master seed, and a content hash over
the produced files.  Replaying a manifest reproduces the outputs
bit-identically (the timestamp is excluded from the hash).

Observable series persist as CSV, one measurement per row, one column
per observable, with a JSON sidecar carrying the run parameters.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .mc import ObservableSeries


@dataclass
class RunManifest:
    command: str
    params: dict
    master_seed: int
    version: str = __version__
    backend: str = ""
    created: str = ""
    outputs: dict = field(default_factory=dict)  # filename -> sha256

    def __post_init__(self):
        if not self.created:
            self.created = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
        if not self.backend:
            from . import kernels

            self.backend = kernels.BACKEND

    def content_hash(self):
        """Joint hash of all outputs; order-independent, timestamp-free."""
        digest = hashlib.sha256()
        for name in sorted(self.outputs):
            digest.update(name.encode())
            digest.update(self.outputs[name].encode())
        return digest.hexdigest()

    def register(self, path):
        path = Path(path)
        self.outputs[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def to_json(self):
        record = asdict(self)
        record["content_hash"] = self.content_hash()
        return json.dumps(record, indent=2, sort_keys=True) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text):
        record = json.loads(text)
        record.pop("content_hash", None)
        return cls(**record)

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())


def save_series(series, csv_path):
    """CSV (one row per measurement) + JSON sidecar next to it."""
    csv_path = Path(csv_path)
    keys = series.keys()
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for i in range(len(series)):
            writer.writerow([repr(float(series.records[k][i])) for k in keys])
    sidecar = {
        "kind": series.kind,
        "shape": _shape_record(series.shape),
        "beta": series.beta,
        "p": series.p,
        "seed": series.seed,
        "therm_sweeps": series.therm_sweeps,
        "interval": series.interval,
        "columns": keys,
    }
    Path(str(csv_path) + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )
    return csv_path


def _shape_record(shape_key):
    d, lengths, bcs = shape_key
    return {"dimension": d, "lengths": list(lengths), "bcs": list(bcs)}


def load_series(csv_path):
    csv_path = Path(csv_path)
    sidecar = json.loads(Path(str(csv_path) + ".json").read_text())
    with csv_path.open() as fh:
        reader = csv.reader(fh)
        keys = next(reader)
        columns = {k: [] for k in keys}
        for row in reader:
            for k, v in zip(keys, row):
                columns[k].append(float(v))
    shape = (
        sidecar["shape"]["dimension"],
        tuple(sidecar["shape"]["lengths"]),
        tuple(sidecar["shape"]["bcs"]),
    )
    return ObservableSeries(
        kind=sidecar["kind"],
        shape=shape,
        beta=sidecar["beta"],
        p=sidecar["p"],
        seed=sidecar["seed"],
        therm_sweeps=sidecar["therm_sweeps"],
        interval=sidecar["interval"],
        records={k: np.array(v) for k, v in columns.items()},
    )


def write_table(path, header, rows):
    """Plot-ready CSV with repr-round-trip floats."""
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row]
        )
    path.write_text(buf.getvalue())
    return path


def load_config(path, overrides=None):
    """Single JSON config document; CLI flag overrides win key-by-key."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            config[key] = value
    return config


def require_keys(config, keys, context):
    for key in keys:
        if key not in config:
            raise ConfigError(f"{context}: missing required key '{key}'")
