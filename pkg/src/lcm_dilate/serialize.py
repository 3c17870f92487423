"""JSON codecs: complex scalars as [re, im] pairs, canonical dumps, hashes."""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np

from .errors import SchemaError


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m: np.ndarray) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    return [[encode_complex(z) for z in row] for row in m]


def encode_vector(v: np.ndarray) -> list:
    return [encode_complex(z) for z in np.asarray(v, dtype=np.complex128)]


def decode_complex(doc, location: str = "") -> complex:
    if isinstance(doc, (int, float)):
        return complex(doc)
    if (
        isinstance(doc, (list, tuple))
        and len(doc) == 2
        and all(isinstance(x, (int, float)) for x in doc)
    ):
        return complex(doc[0], doc[1])
    raise SchemaError(f"malformed complex scalar {doc!r}", location)


def decode_matrix(doc, location: str = "") -> np.ndarray:
    if not isinstance(doc, list) or not doc or not isinstance(doc[0], list):
        raise SchemaError("expected a matrix (list of rows)", location)
    rows = []
    width = None
    for i, row in enumerate(doc):
        if not isinstance(row, list):
            raise SchemaError("expected a matrix row", f"{location}/{i}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SchemaError("ragged matrix rows", f"{location}/{i}")
        rows.append([decode_complex(z, f"{location}/{i}/{j}") for j, z in enumerate(row)])
    return np.array(rows, dtype=np.complex128)


def canonical_json(obj: Any) -> str:
    """Deterministic textual form: sorted keys, no whitespace jitter."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def sha256_of(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {
            k: _strip_timing(v)
            for k, v in obj.items()
            if k not in ("wall_ms", "wall_time", "report_hash")
        }
    if isinstance(obj, list):
        return [_strip_timing(x) for x in obj]
    return obj


def report_hash(report_doc: dict) -> str:
    """Hash of a report with timing fields excluded."""
    return sha256_of(_strip_timing(report_doc))


def load_json(path: str) -> Any:
    try:
        with open(path, "r") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", f"{path}:{exc.lineno}")
