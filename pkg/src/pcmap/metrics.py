"""Overall false discovery proportion, power, and Monte Carlo summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import LowerBounds, TruthVector

QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


def _pair(d, delta) -> Tuple[np.ndarray, np.ndarray]:
    d = d.d if isinstance(d, LowerBounds) else np.asarray(d)
    delta = delta.delta if isinstance(delta, TruthVector) else np.asarray(delta)
    if d.shape != delta.shape:
        raise ValueError(f"length mismatch: {d.size} bounds vs {delta.size} truth values")
    return d, delta


def discovery_counts(d, delta) -> Tuple[int, int]:
    """(number of voxels with d_j > 0, number with d_j > delta_j)."""
    d, delta = _pair(d, delta)
    return int((d > 0).sum()), int((d > delta).sum())


def overall_fdp(d, delta) -> float:
    """Share of discoveries whose claim exceeds the truth; 0 with no discoveries."""
    n_disc, n_false = discovery_counts(d, delta)
    return n_false / max(n_disc, 1)


def power_beta(d, delta) -> Optional[float]:
    """Mean of d_j / delta_j over active voxels whose claim is not too strong.

    ``None`` when no voxel qualifies.
    """
    d, delta = _pair(d, delta)
    keep = (delta > 0) & (d <= delta)
    if not keep.any():
        return None
    return float(np.mean(d[keep] / delta[keep]))


@dataclass(frozen=True)
class TrialMetrics:
    fdp: float
    power_beta: Optional[float]
    n_discoveries: int
    n_false: int
    per_gamma_rejections: Tuple[int, ...] = ()
    tau_per_gamma: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.n_false > self.n_discoveries:
            raise ValueError("more false discoveries than discoveries")


def trial_metrics(d, delta, rejections=None) -> TrialMetrics:
    """Score one replication; ``rejections`` (per-gamma sets) fills the per-gamma fields."""
    n_disc, n_false = discovery_counts(d, delta)
    per_gamma: Tuple[int, ...] = ()
    taus = None
    if rejections is not None:
        per_gamma = tuple(len(r) for r in rejections)
        if rejections and all(r.tau_used is not None for r in rejections):
            taus = tuple(r.tau_used for r in rejections)
    return TrialMetrics(
        fdp=n_false / max(n_disc, 1),
        power_beta=power_beta(d, delta),
        n_discoveries=n_disc,
        n_false=n_false,
        per_gamma_rejections=per_gamma,
        tau_per_gamma=taus,
    )


def _describe(x: np.ndarray) -> dict:
    return {
        "mean": float(x.mean()),
        "sd": float(x.std(ddof=1)) if x.size > 1 else None,
        "quantiles": {f"{q:g}": float(v) for q, v in zip(QUANTILES, np.quantile(x, QUANTILES))},
    }


def aggregate(trials: Sequence[TrialMetrics]) -> dict:
    """Monte Carlo summary of a list of trials.

    The empirical FDR is the mean FDP; its standard error is sd / sqrt(R),
    reported as ``None`` for a single trial. Power is averaged over the trials
    where it is defined.
    """
    if not trials:
        raise ValueError("cannot aggregate an empty list of trials")
    # sorting makes the float reductions independent of trial order
    fdp = np.sort(np.array([t.fdp for t in trials], dtype=np.float64))
    betas = np.sort(np.array([t.power_beta for t in trials if t.power_beta is not None], dtype=np.float64))
    r = fdp.size
    se = float(fdp.std(ddof=1) / math.sqrt(r)) if r > 1 else None
    out = {
        "replications": r,
        "fdr": float(fdp.mean()),
        "fdr_se": se,
        "fdp": _describe(fdp),
        "power_defined": int(betas.size),
        "power": _describe(betas) if betas.size else None,
        "mean_discoveries": float(np.mean(np.sort([t.n_discoveries for t in trials]))),
        "mean_false": float(np.mean(np.sort([t.n_false for t in trials]))),
    }
    return out


def fixed_gamma_fdp(rejected, delta, gamma: int) -> float:
    """FDP of a single-granularity rejection set: nulls are voxels with delta_j < gamma."""
    delta = delta.delta if isinstance(delta, TruthVector) else np.asarray(delta)
    idx = getattr(rejected, "indices", rejected)
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    return float((delta[idx] < gamma).sum() / idx.size)
