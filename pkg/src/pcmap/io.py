"""File formats and run manifests.

Matrix files
    CSV: header ``voxel,s1,...,ss`` then one row per voxel (voxel numbers
    1-based). Binary: ``PCM1`` magic, little-endian u64 m and s, then m*s
    float64 values in row-major order.
Lower bounds
    CSV ``voxel,d`` or, given a 3-D grid, ``x,y,z,d`` in row-major order.

Every writer goes through :func:`atomic_path`, so an interrupted write only
ever leaves a ``.partial`` file behind.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import os
import struct
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import LowerBounds, PValueMatrix, PValueRangeError, RejectionSet, TruthVector

MAGIC = b"PCM1"
_HEADER = struct.Struct("<4sQQ")


class FormatError(ValueError):
    pass


@contextmanager
def atomic_path(path) -> Iterator[Path]:
    """Yield a ``.partial`` sibling of ``path``; rename it into place on success."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    yield tmp
    os.replace(tmp, path)


def _fmt(x: float) -> str:
    return repr(float(x))


def detect_format(path) -> str:
    with open(path, "rb") as fh:
        return "binary" if fh.read(4) == MAGIC else "csv"


def read_pvalue_matrix(path, format: Optional[str] = None) -> PValueMatrix:
    fmt = format or detect_format(path)
    if fmt == "binary":
        return _read_binary(path)
    if fmt == "csv":
        return _read_csv(path)
    raise ValueError(f"unknown matrix format {fmt!r}")


def _read_binary(path) -> PValueMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("binary matrix truncated before header end")
    magic, m, s = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"wrong magic bytes {magic!r}, expected {MAGIC!r}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * m * s:
        raise FormatError(f"binary matrix body has {len(body)} bytes, expected {8 * m * s} for {m}x{s}")
    values = np.frombuffer(body, dtype="<f8").reshape(m, s)
    return PValueMatrix(values)


def _read_csv(path) -> PValueMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise FormatError("empty CSV file")
        header = [h.strip() for h in header]
        s = len(header) - 1
        if s < 1 or header[0] != "voxel" or header[1:] != [f"s{i}" for i in range(1, s + 1)]:
            raise FormatError(f"malformed header {','.join(header)!r}; expected voxel,s1,...,ss")
        rows = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != s + 1:
                raise FormatError(f"row {row_no}: expected {s + 1} fields, got {len(row)}")
            try:
                voxel = int(row[0])
            except ValueError:
                raise FormatError(f"row {row_no}: voxel id {row[0]!r} is not an integer") from None
            if voxel != row_no:
                raise FormatError(f"row {row_no}: voxel id {voxel} out of sequence (1-based, ascending)")
            vals = []
            for col, cell in enumerate(row[1:], start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise FormatError(f"row {row_no}, column s{col}: cannot parse {cell!r}") from None
                if not 0.0 <= v <= 1.0:
                    raise PValueRangeError(row_no, col, v)
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise FormatError("CSV matrix has no data rows")
    return PValueMatrix(np.array(rows, dtype=np.float64))


def write_pvalue_matrix(matrix: PValueMatrix, path, format: str = "csv") -> Path:
    path = Path(path)
    with atomic_path(path) as tmp:
        if format == "binary":
            with open(tmp, "wb") as fh:
                fh.write(_HEADER.pack(MAGIC, matrix.m, matrix.s))
                fh.write(np.ascontiguousarray(matrix.values, dtype="<f8").tobytes())
        elif format == "csv":
            with open(tmp, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["voxel"] + [f"s{i}" for i in range(1, matrix.s + 1)])
                for j, row in enumerate(matrix.values, start=1):
                    w.writerow([j] + [_fmt(v) for v in row])
        else:
            raise ValueError(f"unknown matrix format {format!r}")
    return path


def _write_int_table(path, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    path = Path(path)
    with atomic_path(path) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(zip(*(c.tolist() for c in columns)))
    return path


def write_truth(truth: TruthVector, path) -> Path:
    return _write_int_table(path, ["voxel", "delta"], [np.arange(1, truth.m + 1), truth.delta])


def read_truth(path) -> TruthVector:
    return TruthVector(_read_int_column(path, "delta"))


def _read_int_column(path, name: str) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or name not in reader.fieldnames:
            raise FormatError(f"{path}: missing column {name!r}")
        return np.array([int(row[name]) for row in reader], dtype=np.int64)


def write_lower_bounds(d: LowerBounds, path, grid: Optional[Sequence[int]] = None) -> Path:
    """Write ``voxel,d`` rows, or ``x,y,z,d`` rows (1-based coordinates, row-major) given a grid."""
    if grid is None:
        return _write_int_table(path, ["voxel", "d"], [np.arange(1, d.m + 1), d.d])
    grid = tuple(int(g) for g in grid)
    if len(grid) != 3 or int(np.prod(grid)) != d.m:
        raise ValueError(f"grid {grid} does not match {d.m} voxels")
    x, y, z = np.unravel_index(np.arange(d.m), grid)
    return _write_int_table(path, ["x", "y", "z", "d"], [x + 1, y + 1, z + 1, d.d])


def read_lower_bounds(path) -> LowerBounds:
    return LowerBounds(_read_int_column(path, "d"))


def write_rejections(rs: RejectionSet, path) -> Path:
    """One 1-based voxel number per row under a ``voxel`` header."""
    return _write_int_table(path, ["voxel"], [rs.indices + 1])


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def dumps_json(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    with atomic_path(path) as tmp:
        tmp.write_text(dumps_json(obj))
    return path


@dataclass
class RunManifest:
    """Everything needed to redo a run. ``timestamp`` is informational only."""

    command: str
    tool_version: str
    procedure: dict
    seed: Optional[int] = None
    replications: Optional[int] = None
    scenario: Optional[dict] = None
    input_digest: Optional[str] = None
    gamma: Optional[str] = None
    conventions: dict = field(default_factory=lambda: {
        "voxel_index_base": 1,
        "subject_index_base": 1,
        "grid_coordinate_base": 1,
        "fdp_without_discoveries": 0.0,
        "power_without_eligible_voxels": None,
    })
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(**data)


def write_manifest(manifest: RunManifest, path) -> Path:
    return write_json(manifest.to_dict(), path)


def read_manifest(path) -> RunManifest:
    return RunManifest.from_dict(json.loads(Path(path).read_text()))
