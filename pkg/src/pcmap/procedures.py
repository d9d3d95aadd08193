"""Multiple testing procedures for partial conjunction hypotheses.

Every procedure works on 0-based voxel indices and returns sorted index
arrays wrapped in :class:`~pcmap.core.RejectionSet` or a
:class:`~pcmap.core.LowerBounds` vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .combine import pc_field
from .core import LowerBounds, PcField, PValueMatrix, RejectionSet, check_gamma

METHODS = ("cofilter-fixed", "cofilter-adaptive", "adafilter", "bh-selective")
INDEXING_MODES = ("standard", "literal")

_EMPTY = np.empty(0, dtype=np.int64)


def default_tau_grid() -> Tuple[float, ...]:
    """Candidate selection thresholds 0.01, 0.02, ..., 1.00."""
    return tuple(k / 100 for k in range(1, 101))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("tau grid must be a non-empty 1-D sequence")
    if not ((g > 0.0) & (g <= 1.0)).all():
        raise ValueError("tau grid values must lie in (0, 1]")
    if g.size > 1 and not (np.diff(g) > 0).all():
        raise ValueError("tau grid must be strictly increasing")
    return g


@dataclass(frozen=True)
class Procedure:
    """A testing procedure together with its configuration.

    ``tau`` is used by ``cofilter-fixed``, ``tau_grid`` by ``cofilter-adaptive``
    (``None`` means :func:`default_tau_grid`), ``indexing`` by ``adafilter``.
    """

    method: str
    alpha: float = 0.05
    tau: Optional[float] = None
    tau_grid: Optional[Tuple[float, ...]] = None
    indexing: str = "standard"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        _check_alpha(self.alpha)
        if self.method == "cofilter-fixed":
            if self.tau is None or not 0.0 < self.tau <= 1.0:
                raise ValueError("cofilter-fixed needs tau in (0, 1]")
        if self.method == "cofilter-adaptive":
            grid = default_tau_grid() if self.tau_grid is None else tuple(float(t) for t in self.tau_grid)
            _check_grid(grid)
            object.__setattr__(self, "tau_grid", grid)
        if self.indexing not in INDEXING_MODES:
            raise ValueError(f"indexing must be one of {INDEXING_MODES}")

    @property
    def label(self) -> str:
        if self.method == "cofilter-fixed":
            return f"cofilter-fixed(tau={self.tau:g})"
        if self.method == "adafilter":
            return f"adafilter({self.indexing})"
        return self.method

    def config(self) -> dict:
        out = {"method": self.method, "alpha": self.alpha}
        if self.method == "cofilter-fixed":
            out["tau"] = self.tau
        elif self.method == "cofilter-adaptive":
            out["tau_grid"] = list(self.tau_grid)
        elif self.method == "adafilter":
            out["indexing"] = self.indexing
        return out


def bh(pvals, alpha: float) -> np.ndarray:
    """Benjamini-Hochberg step-up; returns the sorted indices of rejected hypotheses."""
    _check_alpha(alpha)
    p = np.asarray(pvals, dtype=np.float64).ravel()
    n = p.size
    if n == 0:
        return _EMPTY
    if not ((p >= 0.0) & (p <= 1.0)).all():
        raise ValueError("p-values must lie in [0, 1]")
    order = np.argsort(p, kind="stable")
    passed = np.flatnonzero(p[order] <= alpha * np.arange(1, n + 1) / n)
    if passed.size == 0:
        return _EMPTY
    return np.sort(order[: passed[-1] + 1])


def benjamini_heller(matrix: PValueMatrix, alpha: float, pc: Optional[PcField] = None) -> LowerBounds:
    """Selective lower bounds of Benjamini and Heller.

    Voxels are screened by BH on the global-null PC p-values; a selected voxel
    gets the largest gamma such that every PC p-value up to gamma is at most
    |selected| * alpha / m.
    """
    _check_alpha(alpha)
    if pc is None:
        pc = pc_field(matrix)
    d = np.zeros(matrix.m, dtype=np.int64)
    selected = bh(pc.pc[:, 0], alpha)
    if selected.size:
        theta = selected.size * alpha / matrix.m
        ok = pc.pc[selected] <= theta
        # length of the leading run of passes; the scan stops at the first failure
        d[selected] = np.cumprod(ok, axis=1).sum(axis=1)
    return LowerBounds(d, s=matrix.s)


def cofilter_fixed(pc_col, alpha: float, tau: float, gamma: int = 1) -> RejectionSet:
    """Select voxels with pc <= tau, then BH on pc / tau within the selection."""
    _check_alpha(alpha)
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    pc = np.asarray(pc_col, dtype=np.float64).ravel()
    selected = np.flatnonzero(pc <= tau)
    rejected = selected[bh(pc[selected] / tau, alpha)] if selected.size else _EMPTY
    return RejectionSet(gamma, rejected, tau_used=float(tau))


def cofilter_adaptive(pc_col, alpha: float, grid: Optional[Sequence[float]] = None, gamma: int = 1) -> RejectionSet:
    """CoFilter with the threshold chosen to maximize the number of rejections.

    Ties go to the largest threshold on the grid.
    """
    _check_alpha(alpha)
    taus = _check_grid(default_tau_grid() if grid is None else grid)
    pc = np.asarray(pc_col, dtype=np.float64).ravel()
    order = np.argsort(pc, kind="stable")
    q = pc[order]
    n_sel = np.searchsorted(q, taus, side="right")
    best_k, best_tau = 0, float(taus[-1])
    for tau, n in zip(taus, n_sel):
        k = 0
        if n:
            passed = np.flatnonzero(q[:n] / tau <= alpha * np.arange(1, n + 1) / n)
            k = int(passed[-1]) + 1 if passed.size else 0
        if k >= best_k:
            best_k, best_tau = k, float(tau)
    return RejectionSet(gamma, order[:best_k], tau_used=best_tau)


@dataclass(frozen=True)
class AdaFilterStats:
    f: np.ndarray
    sel: np.ndarray
    t0: float


def adafilter_threshold(f, sel, alpha: float) -> float:
    """sup{t in [0, alpha] : t * #{f < t} / max(#{sel < t}, 1) <= alpha}.

    Both counts are constant on each interval (b_{k-1}, b_k] between
    consecutive statistic values, where the ratio is linear in t, so the
    supremum is found exactly interval by interval.
    """
    f = np.sort(np.asarray(f, dtype=np.float64))
    sel = np.sort(np.asarray(sel, dtype=np.float64))
    pts = np.concatenate([f, sel, [alpha]])
    pts = np.unique(pts[(pts > 0.0) & (pts <= alpha)])
    left = np.concatenate([[0.0], pts[:-1]])
    n_f = np.searchsorted(f, left, side="right")
    n_s = np.maximum(np.searchsorted(sel, left, side="right"), 1)
    with np.errstate(divide="ignore"):
        cap = np.where(n_f > 0, alpha * n_s / np.maximum(n_f, 1), np.inf)
    upper = np.minimum(pts, cap)
    feasible = upper > left
    return float(upper[feasible].max()) if feasible.any() else 0.0


def adafilter_stats(matrix: PValueMatrix, gamma: int, alpha: float, indexing: str = "standard") -> AdaFilterStats:
    """Filter and selection statistics of AdaFilter (Bonferroni combining).

    ``standard`` uses the (gamma-1)-th and gamma-th smallest p-values;
    ``literal`` uses the (s-1)-th and s-th smallest regardless of gamma.
    """
    _check_alpha(alpha)
    s = matrix.s
    g = check_gamma(gamma, s)
    if indexing not in INDEXING_MODES:
        raise ValueError(f"indexing must be one of {INDEXING_MODES}")
    ordered = np.sort(matrix.values, axis=1)
    lo, hi = (g - 1, g) if indexing == "standard" else (s - 1, s)
    zeros = np.zeros(matrix.m)
    f = ordered[:, lo - 1] if lo >= 1 else zeros
    sel = ordered[:, hi - 1]
    scale = s - g + 1
    f = np.minimum(scale * f, 1.0)
    sel = np.minimum(scale * sel, 1.0)
    return AdaFilterStats(f, sel, adafilter_threshold(f, sel, alpha))


def adafilter(matrix: PValueMatrix, gamma: int, alpha: float, indexing: str = "standard") -> RejectionSet:
    st = adafilter_stats(matrix, gamma, alpha, indexing)
    return RejectionSet(gamma, np.flatnonzero(st.sel < st.t0))


def lower_bounds_from_rejections(rejections: Sequence[RejectionSet], m: int, s: int) -> LowerBounds:
    """d_j = largest gamma at which voxel j was rejected, 0 if never."""
    d = np.zeros(m, dtype=np.int64)
    for rs in rejections:
        if rs.indices.size and rs.indices[-1] >= m:
            raise ValueError("rejection index beyond the number of voxels")
        d[rs.indices] = np.maximum(d[rs.indices], rs.gamma)
    return LowerBounds(d, s=s)


def run_granularities(matrix: PValueMatrix, procedure: Procedure,
                      pc: Optional[PcField] = None) -> List[RejectionSet]:
    """Run ``procedure`` separately at gamma = 1, ..., s.

    For ``bh-selective`` the set at gamma is {j : d_j >= gamma}.
    """
    s = matrix.s
    if procedure.method == "adafilter":
        return [adafilter(matrix, g, procedure.alpha, procedure.indexing) for g in range(1, s + 1)]
    if pc is None:
        pc = pc_field(matrix)
    if procedure.method == "bh-selective":
        d = benjamini_heller(matrix, procedure.alpha, pc).d
        return [RejectionSet(g, np.flatnonzero(d >= g)) for g in range(1, s + 1)]
    if procedure.method == "cofilter-fixed":
        return [cofilter_fixed(pc.pc[:, g - 1], procedure.alpha, procedure.tau, gamma=g) for g in range(1, s + 1)]
    return [cofilter_adaptive(pc.pc[:, g - 1], procedure.alpha, procedure.tau_grid, gamma=g) for g in range(1, s + 1)]


def analyze(matrix: PValueMatrix, procedure: Procedure,
            pc: Optional[PcField] = None) -> Tuple[LowerBounds, List[RejectionSet]]:
    """Lower bounds plus the per-granularity rejection sets behind them."""
    sets = run_granularities(matrix, procedure, pc)
    if procedure.method == "bh-selective":
        d = np.zeros(matrix.m, dtype=np.int64)
        for rs in sets:
            d[rs.indices] = rs.gamma
        return LowerBounds(d, s=matrix.s), sets
    return lower_bounds_from_rejections(sets, matrix.m, matrix.s), sets


def superimpose(matrix: PValueMatrix, procedure: Procedure, pc: Optional[PcField] = None) -> LowerBounds:
    """Per-voxel lower bounds from running ``procedure`` at every granularity."""
    if procedure.method == "bh-selective":
        return benjamini_heller(matrix, procedure.alpha, pc)
    return analyze(matrix, procedure, pc)[0]
