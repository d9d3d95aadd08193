"""Synthetic p-value maps and the seeded Monte Carlo harness.

Two generators are provided. The equi-correlated one draws n observations of
an m-variate normal with equi-correlation rho per subject and turns each voxel
into a two-sided one-sample t-test p-value. The phantom is a simplified 3-D
z-map with one spherical activation shared by all subjects; it does not model
fMRI time series.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erfc

from .combine import pc_field
from .core import PValueMatrix, TruthVector
from .metrics import TrialMetrics, aggregate, trial_metrics
from .numerics import RngStream, mean_for_power, rng_standard_normal, t_sf_two_sided
from .procedures import Procedure, analyze

# spawn-key tag separating subject-assignment streams from data streams
_ASSIGN_TAG = 0x41535347


@dataclass(frozen=True)
class EquiCorrScenario:
    m: int = 1000
    s: int = 10
    n: int = 50
    rho: float = 0.0
    c: float = 1.5
    eta: float = 0.95
    alpha_cal: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.c <= 1.0:
            raise ValueError("c must exceed 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.s < 1 or self.m < self.s + 1:
            raise ValueError("need s >= 1 and m >= s + 1")

    kind = "equicorr"

    @property
    def mu_active(self) -> float:
        return mean_for_power(self.alpha_cal, self.eta, self.n)


@dataclass(frozen=True)
class PhantomScenario:
    """Spherical activation in a 3-D grid of voxels, identical across subjects.

    ``sphere_center`` defaults to the grid centre (voxel coordinates, 0-based).
    """

    grid: Tuple[int, int, int] = (10, 10, 10)
    s: int = 8
    sphere_center: Optional[Tuple[float, float, float]] = None
    sphere_radius: float = 3.0
    snr: float = 2.0
    seed: int = 0

    def __post_init__(self):
        grid = tuple(int(g) for g in self.grid)
        if len(grid) != 3 or min(grid) < 1:
            raise ValueError("grid must have three positive dimensions")
        object.__setattr__(self, "grid", grid)
        if self.sphere_center is None:
            object.__setattr__(self, "sphere_center", tuple((g - 1) / 2 for g in grid))
        else:
            object.__setattr__(self, "sphere_center", tuple(float(x) for x in self.sphere_center))
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.sphere_radius < 0:
            raise ValueError("sphere radius must be non-negative")
        if self.s < 1:
            raise ValueError("need at least one subject")

    kind = "phantom"

    @property
    def m(self) -> int:
        return int(np.prod(self.grid))


Scenario = Union[EquiCorrScenario, PhantomScenario]


def scenario_to_dict(scenario: Scenario) -> dict:
    out = {"kind": scenario.kind}
    out.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(scenario).items()})
    if scenario.kind == "phantom":
        out["generator"] = "simplified spherical z-map phantom"
    return out


def scenario_from_dict(data: dict) -> Scenario:
    data = dict(data)
    kind = data.pop("kind", "equicorr")
    data.pop("generator", None)
    if kind == "equicorr":
        return EquiCorrScenario(**data)
    if kind == "phantom":
        for key in ("grid", "sphere_center"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return PhantomScenario(**data)
    raise ValueError(f"unknown scenario kind {kind!r}")


def delta_profile(m: int, s: int, c: float) -> TruthVector:
    """Truth vector whose count of voxels active in exactly i subjects is roughly proportional to c**(s - i).

    Counts are rounded by largest remainder (ties favour fewer active
    subjects) and laid out in blocks: the first voxels have delta = s, the
    last ones delta = 0.
    """
    if s < 1 or m < s + 1:
        raise ValueError(f"need m >= s + 1, got m={m}, s={s}")
    if c <= 1.0:
        raise ValueError("c must exceed 1")
    i = np.arange(s + 1)
    # c**(s-i) normalized through logs to survive large c
    logw = (s - i) * math.log(c)
    w = np.exp(logw - logw.max())
    quota = m * w / w.sum()
    counts = np.floor(quota).astype(np.int64)
    short = m - int(counts.sum())
    if short:
        rem = quota - counts
        # stable sort on -rem keeps low delta first among equal remainders
        counts[np.argsort(-rem, kind="stable")[:short]] += 1
    delta = np.repeat(i[::-1], counts[::-1])
    return TruthVector(delta, s=s)


def _stream_id(replication: int, subject: int) -> int:
    return (int(replication) << 32) | int(subject)


def subject_stream(seed: int, replication: int, subject: int) -> RngStream:
    """Random stream for one subject map of one replication."""
    return RngStream(seed, _stream_id(replication, subject))


@lru_cache(maxsize=16)
def _active_cached(seed: int, s: int, delta_bytes: bytes) -> np.ndarray:
    delta = np.frombuffer(delta_bytes, dtype=np.int64)
    active = np.zeros((delta.size, s), dtype=bool)
    for j, dj in enumerate(delta):
        if dj:
            ss = np.random.SeedSequence(seed, spawn_key=(_ASSIGN_TAG, j))
            perm = np.random.Generator(np.random.Philox(ss)).permutation(s)
            active[j, perm[:dj]] = True
    active.setflags(write=False)
    return active


def active_subjects(delta: TruthVector, s: int, seed: int) -> np.ndarray:
    """Boolean m x s table: voxel j is active in a random set of delta_j subjects.

    The set for voxel j comes from a permutation seeded by ``(seed, j)`` alone,
    so it is the same in every replication.
    """
    d = np.ascontiguousarray(delta.delta, dtype=np.int64)
    if d.size and d.max() > s:
        raise ValueError("delta exceeds the number of subjects")
    return _active_cached(int(seed), int(s), d.tobytes())


def equicorr_observations(mu: np.ndarray, n: int, rho: float, stream: RngStream) -> np.ndarray:
    """n x m draws from MVN(mu, Sigma_rho) via one shared factor per observation."""
    mu = np.asarray(mu, dtype=np.float64)
    m = mu.size
    z = rng_standard_normal(stream, n * (m + 1)).reshape(n, m + 1)
    shared, own = z[:, :1], z[:, 1:]
    return mu + math.sqrt(rho) * shared + math.sqrt(1.0 - rho) * own


def one_sample_t_pvalues(x: np.ndarray) -> np.ndarray:
    """Two-sided one-sample t-test of mean zero for each column of ``x``."""
    n = x.shape[0]
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    t = mean / (sd / math.sqrt(n))
    return t_sf_two_sided(t, n - 1)


def gen_equicorr_map(scenario: EquiCorrScenario, subject_index: int, delta: TruthVector,
                     stream: RngStream) -> np.ndarray:
    """p-values of all voxels for one subject (``subject_index`` is 0-based)."""
    if not 0 <= subject_index < scenario.s:
        raise ValueError("subject index out of range")
    active = active_subjects(delta, scenario.s, scenario.seed)[:, subject_index]
    mu = np.where(active, scenario.mu_active, 0.0)
    x = equicorr_observations(mu, scenario.n, scenario.rho, stream)
    return one_sample_t_pvalues(x)


def phantom_truth(scenario: PhantomScenario) -> TruthVector:
    """delta_j = s inside the sphere (centre distance <= radius), 0 outside; voxels in row-major order."""
    coords = np.indices(scenario.grid).reshape(3, -1).T
    dist2 = ((coords - np.asarray(scenario.sphere_center)) ** 2).sum(axis=1)
    inside = dist2 <= scenario.sphere_radius ** 2
    return TruthVector(np.where(inside, scenario.s, 0), s=scenario.s)


def gen_phantom_map(scenario: PhantomScenario, subject_index: int,
                    stream: RngStream) -> Tuple[np.ndarray, TruthVector]:
    if not 0 <= subject_index < scenario.s:
        raise ValueError("subject index out of range")
    truth = phantom_truth(scenario)
    z = scenario.snr * (truth.delta > 0) + rng_standard_normal(stream, scenario.m)
    return erfc(np.abs(z) / math.sqrt(2.0)), truth


def generate_replication(scenario: Scenario, replication: int) -> Tuple[PValueMatrix, TruthVector]:
    """All s subject maps of one replication, stacked as columns."""
    s = scenario.s
    cols = []
    if isinstance(scenario, EquiCorrScenario):
        truth = delta_profile(scenario.m, s, scenario.c)
        for i in range(s):
            cols.append(gen_equicorr_map(scenario, i, truth, subject_stream(scenario.seed, replication, i)))
    else:
        for i in range(s):
            p, truth = gen_phantom_map(scenario, i, subject_stream(scenario.seed, replication, i))
            cols.append(p)
    return PValueMatrix(np.column_stack(cols)), truth


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``PCMAP_THREADS``; 0 means one per CPU."""
    if threads is None:
        raw = os.environ.get("PCMAP_THREADS", "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"PCMAP_THREADS must be an integer, got {raw!r}") from None
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    return threads or (os.cpu_count() or 1)


def _one_replication(scenario: Scenario, procedures: Sequence[Procedure], r: int) -> List[TrialMetrics]:
    matrix, truth = generate_replication(scenario, r)
    pc = pc_field(matrix)
    out = []
    for proc in procedures:
        d, sets = analyze(matrix, proc, pc)
        out.append(trial_metrics(d, truth, sets))
    return out


def simulate_trials(scenario: Scenario, procedures: Sequence[Procedure], replications: int,
                    threads: Optional[int] = None) -> Dict[str, List[TrialMetrics]]:
    """Run every procedure on the same simulated data; trials keyed by procedure label.

    Replication r only uses streams derived from ``(scenario.seed, r)``, so
    the result does not depend on the worker count or scheduling.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    labels = [p.label for p in procedures]
    if len(set(labels)) != len(labels):
        raise ValueError("procedures must have distinct labels")
    workers = min(resolve_threads(threads), replications)
    if workers == 1:
        rows = [_one_replication(scenario, procedures, r) for r in range(replications)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _one_replication(scenario, procedures, r), range(replications)))
    return {lab: [row[k] for row in rows] for k, lab in enumerate(labels)}


@dataclass
class StudyResult:
    scenario: Scenario
    procedure: Procedure
    trials: List[TrialMetrics] = field(repr=False)
    summary: dict = field(default_factory=dict)


def run_study(scenario: Scenario, procedure: Procedure, replications: int,
              threads: Optional[int] = None) -> StudyResult:
    trials = simulate_trials(scenario, [procedure], replications, threads)[procedure.label]
    return StudyResult(scenario, procedure, trials, aggregate(trials))
