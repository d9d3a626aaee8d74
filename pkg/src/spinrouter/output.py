"""Self-describing CSV and JSON artifacts.

CSV files start with ``#`` metadata lines, then a header row.  Floats are
written with 17 significant digits so a file read back reproduces the
binary values, and nothing time-dependent is recorded, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .config import FORMAT_VERSION, spec_to_dict
from .model import RouterSpec, time_unit


def _version() -> str:
    from . import __version__
    return __version__


def spec_hash(spec: RouterSpec) -> str:
    canon = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def metadata(spec: RouterSpec, command: str, **extra) -> dict:
    meta = {
        "format_version": FORMAT_VERSION,
        "code_version": _version(),
        "command": command,
        "units": spec.units,
        "time_unit": time_unit(spec),
        "spec_sha256": spec_hash(spec),
    }
    meta.update(extra)
    return meta


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows, meta: dict | None = None) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for key, value in (meta or {}).items():
            fh.write(f"# {key}: {format_value(value)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])
    return path


def _parse_cell(x: str):
    if x in ("true", "false"):
        return x == "true"
    try:
        return float(x)
    except ValueError:
        return x


def read_csv(path) -> tuple[dict, list[str], list[list]]:
    """Metadata, header and rows of a file written by :func:`write_csv`.

    Cells come back as floats where they parse, booleans for ``true``/``false``
    and strings otherwise.
    """
    meta, lines = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        else:
            lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], [[_parse_cell(x) for x in r] for r in rows[1:]]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
