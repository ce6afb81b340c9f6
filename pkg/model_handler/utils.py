import hashlib
import json
import os
import subprocess
import time
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from model_handler.constant import VERSION

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
METADATA_PREFIX = "# "


def version_string():
    """`git describe` of the checkout, or the package version outside a repository."""
    try:
        described = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=ROOT,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return VERSION
    if described.returncode != 0 or not described.stdout.strip():
        return VERSION
    return f"{VERSION}+{described.stdout.strip()}"


def _to_builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_to_builtin)


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


@dataclass
class RunMetadata:
    seed: int
    config_hash: str
    version: str
    started: float

    @classmethod
    def start(cls, seed, config):
        return cls(seed=seed, config_hash=config_hash(config), version=version_string(), started=time.perf_counter())

    def as_dict(self):
        fields = asdict(self)
        del fields["started"]
        fields["duration_seconds"] = round(time.perf_counter() - self.started, 3)
        return fields


def write_csv(frame, path, metadata=None, extra=None):
    """CSV with the run metadata (and any ``extra`` keys) as leading `# key=value` lines."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    header = {} if metadata is None else metadata.as_dict()
    header.update(extra or {})
    with open(path, "w", newline="") as f:
        for key, value in header.items():
            f.write(f"{METADATA_PREFIX}{key}={value}\n")
        frame.to_csv(f, index=False)
    return path


def write_json(payload, path, metadata=None):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    document = dict(payload)
    if metadata is not None:
        document["metadata"] = metadata.as_dict()
    with open(path, "w") as f:
        f.write(json.dumps(document, indent=2, default=_to_builtin))
    return path


def read_metadata(path):
    metadata = {}
    with open(path) as f:
        for line in f:
            if not line.startswith(METADATA_PREFIX):
                break
            key, _, value = line[len(METADATA_PREFIX) :].rstrip("\n").partition("=")
            metadata[key] = value
    return metadata


def read_csv(path):
    """Data rows of a file written by `write_csv`, metadata lines skipped."""
    skip = len(read_metadata(path))
    return pd.read_csv(path, skiprows=skip)


def data_rows(path):
    """Raw data lines, for byte-level reproducibility checks."""
    with open(path) as f:
        return [line for line in f if not line.startswith(METADATA_PREFIX)]
