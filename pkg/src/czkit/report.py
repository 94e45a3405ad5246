"""JSON reports with exact floats and a separate metadata sidecar.

Every float is written as ``{"dec": <number>, "hex": <float.hex()>}``
so values round-trip bit for bit; non-finite values carry ``dec`` as the
strings ``"inf"``, ``"-inf"`` or ``"nan"``.  The report body holds only
results, which makes it byte-identical across runs with the same inputs.
Timing and environment go to ``<out>.meta.json``.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import platform
import tempfile
from pathlib import Path

import numpy as np

from .dyadic import DyadicInterval, Interval


def encode(obj):
    """Plain JSON-compatible tree with floats expanded to decimal + hex."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return {"dec": v, "hex": v.hex()}
        return {"dec": "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"), "hex": v.hex()}
    if isinstance(obj, DyadicInterval):
        return {"j": obj.j, "k": obj.k}
    if isinstance(obj, Interval):
        return {"center": encode(obj.center), "length": encode(obj.length)}
    if isinstance(obj, np.ndarray):
        return [encode(x) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot encode {type(obj).__name__} in a report")


def decode_float(node) -> float:
    """Exact float from an encoded node (the hex form is authoritative)."""
    return float.fromhex(node["hex"])


def dumps(report: dict) -> str:
    return json.dumps(encode(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def metadata_path(out: str | os.PathLike) -> Path:
    return Path(str(out) + ".meta.json")


def write_report(out: str | os.PathLike, report: dict, meta: dict) -> None:
    """Write the report and its metadata sidecar."""
    from . import __version__

    out = Path(out)
    _atomic_write(out, dumps(report))
    meta = dict(meta, version=__version__, python=platform.python_version(), numpy=np.__version__)
    _atomic_write(metadata_path(out), json.dumps(meta, sort_keys=True, indent=2, default=str) + "\n")
