"""Deterministic CSV/JSON output and scenario loading.

Floats are written with 17 significant digits so that a value survives a
write/read round trip exactly and reruns give byte-identical files.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from fractions import Fraction
from pathlib import Path

import numpy as np

from .stack import SCENARIOS, StackParams

FLOAT_FORMAT = ".17g"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, FLOAT_FORMAT)


def _plain(obj):
    """Convert to JSON-compatible builtins; non-finite floats become strings."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _RawFloat(float(obj))
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return _plain(obj.to_dict())
        return _plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


class _RawFloat:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, _RawFloat):
        return fmt(obj.v) if math.isfinite(obj.v) else json.dumps(fmt(obj.v))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(obj)


def dumps(obj, indent: int = 2) -> str:
    return _encode(_plain(obj), indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path, text_columns=("regime",)):
    """Header and float array of a CSV file; named text columns are returned apart."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    num = [i for i, h in enumerate(header) if h not in text_columns]
    text = {header[i]: [r[i].strip() for r in rows[1:]] for i in range(len(header))
            if header[i] in text_columns}
    data = np.array([[float(r[i]) for i in num] for r in rows[1:]], dtype=float)
    return [header[i] for i in num], data.reshape(-1, len(num)), text


# -- scenarios ------------------------------------------------------------------

PARAM_KEYS = {f.name for f in dataclasses.fields(StackParams)}
ALIASES = {"nu3": "lam3", "D": "B", "Lambda3": "lam3"}


def load_scenario(spec: str | os.PathLike | None):
    """StackParams plus extra keys (seed, tolerances) from a name or a flat JSON file."""
    if spec is None:
        return SCENARIOS["R"], {}
    if str(spec) in SCENARIOS:
        return SCENARIOS[str(spec)], {}
    path = Path(spec)
    if not path.is_file():
        raise ValueError(f"unknown scenario {spec!r}: not a name in {sorted(SCENARIOS)} "
                         f"and not a file")
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: scenario file must hold a flat JSON object")
    base = SCENARIOS.get(raw.pop("base", None) or "R")
    params, extra = {}, {}
    for k, v in raw.items():
        k = ALIASES.get(k, k)
        (params if k in PARAM_KEYS else extra)[k] = v
    return dataclasses.replace(base, **params), extra
