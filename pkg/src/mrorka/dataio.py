"""Synthetic data, grid files and result documents.

Binary grid layout (all little endian)::

    offset  size      field
    0       4         magic b"ORKA"
    4       4         version, unsigned 32-bit (currently 1)
    8       8         M, unsigned 64-bit
    16      8         N, unsigned 64-bit
    24      8*M*N     float64 values, column-major (one column per measurement)

CSV grids are plain comma-separated rows of the matrix without a header,
written with 17 significant digits.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .core import ShiftPath
from .errors import (
    BadMagicError,
    DimensionOverflowError,
    ParameterError,
    TruncatedGridError,
    UnsupportedVersionError,
)

__all__ = [
    "GaussSpec",
    "generate_gauss",
    "gauss_truth",
    "path_error",
    "integer_baseline_error",
    "read_grid",
    "write_grid",
    "grid_to_bytes",
    "grid_from_bytes",
    "read_csv",
    "write_csv",
    "RESULT_SCHEMA",
    "result_document",
    "write_result",
    "read_result",
    "validate_result",
]

MAGIC = b"ORKA"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
# refuse headers announcing more than 2**40 values (8 TiB)
MAX_VALUES = 2**40


@dataclass(frozen=True)
class GaussSpec:
    """Periodic Gauss kernel moving by ``s`` samples per column."""

    M: int = 512
    N: int = 512
    alpha: float = 10.0
    s: float = 10.0
    center: float | None = None

    def __post_init__(self):
        # accept Fractions and other numbers for the real parameters
        for name in ("alpha", "s"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.center is not None:
            object.__setattr__(self, "center", float(self.center))
        if self.M < 2 or self.N < 2:
            raise ParameterError("Gauss grid needs M >= 2 and N >= 2")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")


def generate_gauss(spec: GaussSpec) -> np.ndarray:
    """``D[j, k-1] = exp(-((mod(j - s*k, M) - center) / alpha)**2)``.

    Rows are indexed ``j = 0 .. M-1`` and columns by the measurement number
    ``k = 1 .. N``.  The default center is ``M / 2``.
    """
    center = spec.M / 2 if spec.center is None else spec.center
    j = np.arange(spec.M, dtype=np.float64)[:, None]
    k = np.arange(1, spec.N + 1, dtype=np.float64)[None, :]
    return np.exp(-(((np.mod(j - spec.s * k, spec.M) - center) / spec.alpha) ** 2))


def gauss_truth(spec: GaussSpec) -> np.ndarray:
    """True shifts of :func:`generate_gauss` relative to the first column."""
    return spec.s * np.arange(spec.N, dtype=np.float64)


def path_error(path: ShiftPath, truth) -> float:
    """``sum_k |path_k / 2**scale - truth_k|`` with both sides gauged to 0 at k=1."""
    truth = np.asarray(truth, dtype=np.float64)
    phys = path.entries / 2.0**path.scale
    return float(np.sum(np.abs((phys - phys[0]) - (truth - truth[0]))))


def integer_baseline_error(N: int, s: Fraction) -> Fraction:
    """``sum_{k=1}^N |floor(s k) - s k|``, computed exactly."""
    s = Fraction(s)
    return sum((s * k - math.floor(s * k) for k in range(1, N + 1)), Fraction(0))


def grid_to_bytes(D) -> bytes:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2:
        raise ParameterError("only 2-D grids can be serialized")
    M, N = D.shape
    return _HEADER.pack(MAGIC, VERSION, M, N) + D.astype("<f8").tobytes(order="F")


def grid_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < 4 or data[:4] != MAGIC:
        if len(data) < 4 and MAGIC.startswith(data):
            raise TruncatedGridError("file ends inside the magic bytes")
        raise BadMagicError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < _HEADER.size:
        raise TruncatedGridError(f"header needs {_HEADER.size} bytes, file has {len(data)}")
    _, version, M, N = _HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported grid version {version}")
    if M * N > MAX_VALUES:
        raise DimensionOverflowError(f"header announces {M} x {N} values")
    need = _HEADER.size + 8 * M * N
    if len(data) < need:
        raise TruncatedGridError(f"expected {need} bytes for a {M} x {N} grid, got {len(data)}")
    if len(data) > need:
        raise TruncatedGridError(f"{len(data) - need} unexpected trailing bytes")
    values = np.frombuffer(data, dtype="<f8", count=M * N, offset=_HEADER.size)
    return values.reshape((M, N), order="F").astype(np.float64)


def write_grid(path, D) -> None:
    Path(path).write_bytes(grid_to_bytes(D))


def read_grid(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv(path)
    return grid_from_bytes(path.read_bytes())


def write_csv(path, D) -> None:
    np.savetxt(path, np.asarray(D, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))


_PATH_SCHEMA = {
    "type": "object",
    "required": ["numerators", "denominator", "scale"],
    "properties": {
        "numerators": {"type": "array", "items": {"type": "integer"}},
        "denominator": {"type": "integer", "minimum": 1},
        "scale": {"type": "integer", "minimum": 0},
    },
}

_BOUNDS_SCHEMA = {
    "type": "object",
    "required": ["level", "lhs11", "rhs13", "lhs12", "rhs14", "total_gap"],
    "properties": {
        "level": {"type": "integer"},
        "lhs11": {"type": "number"},
        "rhs13": {"type": "number"},
        "lhs12": {"type": "number"},
        "rhs14": {"type": "number"},
        "total_gap": {"type": "number"},
    },
}

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "orka tracking result",
    "type": "object",
    "required": ["format", "version", "mode", "input", "config", "objects", "residual_energy"],
    "properties": {
        "format": {"const": "orka-result"},
        "version": {"const": 1},
        "mode": {"enum": ["orka", "multires"]},
        "input": {
            "type": "object",
            "required": ["M", "N", "energy"],
            "properties": {
                "M": {"type": "integer", "minimum": 2},
                "N": {"type": "integer", "minimum": 2},
                "energy": {"type": "number", "minimum": 0},
            },
        },
        "config": {"type": "object"},
        "residual_energy": {"type": "number", "minimum": 0},
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["path", "objective", "surrogate", "residual_energy", "nodes", "trace"],
                "properties": {
                    "path": _PATH_SCHEMA,
                    "objective": {"type": "number"},
                    "surrogate": {"type": ["number", "null"]},
                    "residual_energy": {"type": "number", "minimum": 0},
                    "nodes": {"type": "integer", "minimum": 0},
                    "trace": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["level", "rows", "path", "update", "surrogate", "nodes"],
                            "properties": {
                                "level": {"type": "integer"},
                                "rows": {"type": "integer"},
                                "path": {"type": "array", "items": {"type": "integer"}},
                                "update": {"type": "array", "items": {"type": "integer"}},
                                "surrogate": {"type": "number"},
                                "nodes": {"type": "integer"},
                            },
                        },
                    },
                    "bounds": {"type": "array", "items": _BOUNDS_SCHEMA},
                },
            },
        },
    },
}


def _path_doc(path: ShiftPath) -> dict:
    return {
        "numerators": [int(v) for v in path.entries],
        "denominator": 2**path.scale,
        "scale": path.scale,
    }


def _trace_doc(trace) -> list:
    if trace is None:
        return []
    return [
        {
            "level": int(r.level),
            "rows": int(r.rows),
            "path": [int(v) for v in r.path],
            "update": [int(v) for v in r.update],
            "surrogate": float(r.surrogate),
            "nodes": int(r.nodes),
        }
        for r in trace.records
    ]


def result_document(mode, D, config: dict, objects, residual_energy, traces=None,
                    bounds=None) -> dict:
    """Assemble the JSON result for a tracking run.

    ``objects`` are :class:`~mrorka.core.ObjectEstimate` instances, ``traces``
    the matching refinement traces (or ``None``), ``bounds`` a list (one entry
    per object) of lists of ``(level, BoundReport)`` pairs.
    """
    D = np.asarray(D)
    traces = traces or [None] * len(objects)
    items = []
    for i, (est, trace) in enumerate(zip(objects, traces)):
        item = {
            "path": _path_doc(est.path),
            "objective": float(est.objective),
            "surrogate": None if est.surrogate is None else float(est.surrogate),
            "residual_energy": float(est.residual_energy),
            "nodes": int(est.nodes),
            "trace": _trace_doc(trace),
        }
        if bounds is not None:
            item["bounds"] = [dict(level=int(level), **rep.as_dict()) for level, rep in bounds[i]]
        items.append(item)
    return {
        "format": "orka-result",
        "version": 1,
        "mode": mode,
        "input": {"M": int(D.shape[0]), "N": int(D.shape[1]), "energy": float(np.sum(D * D))},
        "config": config,
        "objects": items,
        "residual_energy": float(residual_energy),
    }


def validate_result(doc: dict) -> None:
    jsonschema.validate(doc, RESULT_SCHEMA)


def write_result(doc: dict, path) -> None:
    validate_result(doc)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_result(path) -> dict:
    doc = json.loads(Path(path).read_text())
    validate_result(doc)
    return doc


def path_from_document(entry: dict) -> ShiftPath:
    return ShiftPath(np.array(entry["numerators"], dtype=np.int64), entry["scale"])
