"""Fisher-combination partial conjunction p-values."""
from __future__ import annotations

import logging

import numpy as np

from .core import PcField, PValueMatrix, check_gamma
from .numerics import chisq_sf

log = logging.getLogger(__name__)

#: p-values below this are clamped before taking logs
LOG_FLOOR = 1e-300


def _check_probabilities(p: np.ndarray) -> None:
    if not ((p >= 0.0) & (p <= 1.0)).all():
        raise ValueError("p-values must lie in [0, 1]")


def fisher_pc_pvalue(pvals, gamma: int) -> float:
    """PC p-value for "active in at least ``gamma`` of s subjects".

    Only the s - gamma + 1 largest p-values enter Fisher's statistic,
    which is referred to a chi-square with 2(s - gamma + 1) degrees of freedom.
    """
    p = np.asarray(pvals, dtype=np.float64).ravel()
    _check_probabilities(p)
    g = check_gamma(gamma, p.size)
    tail = np.sort(p, kind="stable")[g - 1:]
    # summed largest-first, the same order pc_field uses
    stat = -2.0 * np.cumsum(np.log(np.maximum(tail, LOG_FLOOR))[::-1])[-1]
    return chisq_sf(max(stat, 0.0), 2 * tail.size)


def pc_field(matrix: PValueMatrix) -> PcField:
    """PC p-values for every voxel and every granularity.

    Each row is sorted once; the Fisher statistic for granularity gamma is a
    suffix sum of the sorted log p-values.
    """
    s = matrix.s
    logs = np.log(np.maximum(np.sort(matrix.values, axis=1, kind="stable"), LOG_FLOOR))
    # suffix[:, g-1] = sum of logs from order statistic g to s
    suffix = np.cumsum(logs[:, ::-1], axis=1)[:, ::-1]
    stats = np.maximum(-2.0 * suffix, 0.0)
    pc = np.empty_like(stats)
    for g in range(1, s + 1):
        pc[:, g - 1] = chisq_sf(stats[:, g - 1], 2 * (s - g + 1))
    if log.isEnabledFor(logging.DEBUG) and s > 1:
        n_up = int((np.diff(pc, axis=1) < 0).any(axis=1).sum())
        if n_up:
            log.debug("PC p-values decrease in gamma for %d voxel(s)", n_up)
    return PcField(pc)


def conditional_pc(pc, tau: float):
    """Conditional PC p-value pc / tau for a voxel already selected by pc <= tau."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    arr = np.asarray(pc, dtype=np.float64)
    if (arr > tau).any():
        raise ValueError("conditional PC p-value requested for a voxel that was not selected (pc > tau)")
    out = arr / tau
    return float(out) if out.ndim == 0 else out
