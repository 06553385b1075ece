"""Small JSON helpers shared by the serialization entry points."""

from __future__ import annotations

import json
import os

import numpy as np


def to_jsonable(value):
    """Recursively convert numpy scalars/arrays into plain Python objects."""
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def dump_json(obj: dict, path: str | os.PathLike) -> None:
    """Write `obj` as JSON.

    Floats go through Python's shortest round-trip repr, which preserves the
    exact double and keeps reruns byte-identical.
    """
    with open(path, "w") as fh:
        json.dump(to_jsonable(obj), fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_json(path: str | os.PathLike) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: expected a JSON object at top level")
    return obj
