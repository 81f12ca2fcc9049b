"""JSON reports: normalisation, serialisation and atomic file output."""
from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

SCHEMA_VERSION = 1
SIG_DIGITS = 12


def normalize(obj):
    """Plain-JSON form: numpy scalars unwrapped, floats rounded, non-finite as strings."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0:
            return 0.0
        return float(f"{x:.{SIG_DIGITS}g}")
    if isinstance(obj, (complex, np.complexfloating)):
        return [normalize(obj.real), normalize(obj.imag)]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(normalize(report), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> dict:
    data = json.loads(text)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema version {data.get('schema_version')!r}")
    return data


def write_atomic(path: str, text: str) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def check(name: str, value, tol, passed: bool, **extra) -> dict:
    """One embedded verification: every number travels with its tolerance."""
    out = {"name": name, "value": value, "tol": tol, "passed": bool(passed)}
    out.update(extra)
    return out
