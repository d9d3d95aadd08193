"""Domain types shared across the package.

Voxels are rows and subjects are columns. Internally every index is 0-based;
files and user-facing reports use 1-based voxel numbers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class PValueRangeError(ValueError):
    """A p-value outside [0, 1] (or NaN). ``row`` and ``col`` are 1-based."""

    def __init__(self, row: int, col: int, value: float):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"p-value out of range at row {row}, column {col}: {value!r}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _first_bad(values: np.ndarray, ok: np.ndarray):
    r, c = np.argwhere(~ok)[0]
    return int(r), int(c), float(values[r, c])


@dataclass(frozen=True)
class PValueMatrix:
    """m x s matrix of per-voxel, per-subject p-values."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"matrix must have at least one voxel and one subject, got shape {v.shape}")
        ok = (v >= 0.0) & (v <= 1.0)  # NaN fails both
        if not ok.all():
            r, c, val = _first_bad(v, ok)
            raise PValueRangeError(r + 1, c + 1, val)
        object.__setattr__(self, "values", _readonly(v))

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def s(self) -> int:
        return self.values.shape[1]


def new_pvalue_matrix(values) -> PValueMatrix:
    """Validate ``values`` (rows are voxels) and wrap them."""
    if isinstance(values, (list, tuple)) and values and isinstance(values[0], (list, tuple)):
        widths = {len(row) for row in values}
        if len(widths) != 1:
            raise ValueError("ragged rows: every voxel needs the same number of subjects")
    return PValueMatrix(np.asarray(values, dtype=np.float64))


def check_gamma(gamma: int, s: int) -> int:
    """Return ``gamma`` as int if 1 <= gamma <= s."""
    g = int(gamma)
    if g != gamma or not 1 <= g <= s:
        raise ValueError(f"granularity must be an integer in [1, {s}], got {gamma!r}")
    return g


@dataclass(frozen=True)
class PcField:
    """PC p-values; column ``gamma - 1`` holds p_j^{gamma/s} for every voxel."""

    pc: np.ndarray

    def __post_init__(self):
        pc = np.array(self.pc, dtype=np.float64, copy=True)
        if pc.ndim != 2:
            raise ValueError("PC field must be 2-D")
        if not ((pc >= 0.0) & (pc <= 1.0)).all():
            raise ValueError("PC p-values must lie in [0, 1]")
        object.__setattr__(self, "pc", _readonly(pc))

    @property
    def m(self) -> int:
        return self.pc.shape[0]

    @property
    def s(self) -> int:
        return self.pc.shape[1]

    def column(self, gamma: int) -> np.ndarray:
        return self.pc[:, check_gamma(gamma, self.s) - 1]


@dataclass(frozen=True)
class RejectionSet:
    """Voxels rejected at one granularity. ``indices`` are 0-based and sorted."""

    gamma: int
    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    tau_used: Optional[float] = None

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if idx.size and idx[0] < 0:
            raise ValueError("voxel indices must be non-negative")
        if self.gamma < 1:
            raise ValueError("granularity must be >= 1")
        if self.tau_used is not None and not 0.0 < self.tau_used <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau_used}")
        object.__setattr__(self, "indices", _readonly(idx))

    def __len__(self) -> int:
        return int(self.indices.size)


def _count_vector(values, s: Optional[int], what: str) -> np.ndarray:
    a = np.asarray(values)
    if a.ndim != 1:
        raise ValueError(f"{what} must be a 1-D vector")
    if a.size and not np.all(np.equal(np.mod(a, 1), 0)):
        raise ValueError(f"{what} must hold integers")
    a = a.astype(np.int64)
    if a.size and a.min() < 0:
        raise ValueError(f"{what} entries must be >= 0")
    if s is not None and a.size and a.max() > s:
        raise ValueError(f"{what} entries must be <= s={s}")
    return _readonly(a)


@dataclass(frozen=True)
class LowerBounds:
    """Per-voxel lower bound d_j on the number of subjects with activation."""

    d: np.ndarray
    s: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "d", _count_vector(self.d, self.s, "lower bounds"))

    @property
    def m(self) -> int:
        return int(self.d.size)


@dataclass(frozen=True)
class TruthVector:
    """Per-voxel true number of subjects in which the voxel is active."""

    delta: np.ndarray
    s: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "delta", _count_vector(self.delta, self.s, "truth vector"))

    @property
    def m(self) -> int:
        return int(self.delta.size)
