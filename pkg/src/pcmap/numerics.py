"""Special functions and the random stream contract.

The incomplete gamma and beta kernels follow the usual split: a power series
where it converges quickly and a modified-Lentz continued fraction elsewhere.
They are vectorized over the argument; shape parameters are scalars because
every caller here uses one degree-of-freedom value per call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 100_000


class ConvergenceError(RuntimeError):
    pass


def _gamma_series(a: float, x: np.ndarray) -> np.ndarray:
    # P(a, x) for x < a + 1
    ap = np.full_like(x, a)
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap[active] += 1.0
        term[active] *= x[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) >= np.abs(total) * _EPS
        if not active.any():
            break
    else:
        raise ConvergenceError(f"incomplete gamma series did not converge (a={a})")
    return total * np.exp(-x + a * np.log(x) - math.lgamma(a))


def _gamma_contfrac(a: float, x: np.ndarray) -> np.ndarray:
    # Q(a, x) for x >= a + 1, modified Lentz
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            break
    else:
        raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a})")
    return np.exp(-x + a * np.log(x) - math.lgamma(a)) * h


def gammaincc(a: float, x) -> np.ndarray:
    """Regularized upper incomplete gamma function Q(a, x), vectorized in ``x``."""
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    x = np.asarray(x, dtype=np.float64)
    out = np.ones(x.shape)
    pos = x > 0
    lo = pos & (x < a + 1.0)
    hi = pos & ~lo
    if lo.any():
        out[lo] = 1.0 - _gamma_series(a, x[lo])
    if hi.any():
        out[hi] = _gamma_contfrac(a, x[hi])
    return np.clip(out, 0.0, 1.0)


def chisq_sf(x, df: int):
    """Survival function of the chi-square distribution, P(X > x).

    Parameters
    ----------
    x : float or array_like
        Non-negative statistic(s).
    df : int
        Degrees of freedom, at least 1.
    """
    if int(df) != df or df < 1:
        raise ValueError(f"df must be a positive integer, got {df!r}")
    arr = np.asarray(x, dtype=np.float64)
    if np.isnan(arr).any() or (arr < 0).any():
        raise ValueError("chi-square statistic must be non-negative")
    out = gammaincc(0.5 * df, 0.5 * arr)
    return float(out) if out.ndim == 0 else out


def _beta_contfrac(a: float, b: float, x: np.ndarray) -> np.ndarray:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, _MAX_ITER):
        m2 = 2 * k
        aa = k * (b - k) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(active, h * d * c, h)
        aa = -(a + k) * (qab + k) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            break
    else:
        raise ConvergenceError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")
    return h


def betainc(a: float, b: float, x, y=None) -> np.ndarray:
    """Regularized incomplete beta I_x(a, b).

    ``y`` may carry 1 - x computed without cancellation by the caller.
    """
    x = np.asarray(x, dtype=np.float64)
    y = 1.0 - x if y is None else np.asarray(y, dtype=np.float64)
    out = np.where(x <= 0.0, 0.0, 1.0)
    inner = (x > 0.0) & (y > 0.0)
    if inner.any():
        xi, yi = x[inner], y[inner]
        lnpre = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * np.log(xi) + b * np.log(yi)
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if direct.any():
            res[direct] = np.exp(lnpre[direct]) * _beta_contfrac(a, b, xi[direct]) / a
        flip = ~direct
        if flip.any():
            res[flip] = 1.0 - np.exp(lnpre[flip]) * _beta_contfrac(b, a, yi[flip]) / b
        out[inner] = res
    return np.clip(out, 0.0, 1.0)


def t_sf_two_sided(t, df: int):
    """Two-sided Student-t tail probability P(|T_df| >= |t|)."""
    if int(df) != df or df < 1:
        raise ValueError(f"df must be a positive integer, got {df!r}")
    arr = np.asarray(t, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("t statistic must be finite")
    t2 = arr * arr
    out = betainc(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2))
    out = np.where(t2 == 0.0, 1.0, out)
    return float(out) if out.ndim == 0 else out


def _t_critical(alpha: float, df: int) -> float:
    hi = 1.0
    while t_sf_two_sided(hi, df) > alpha:
        hi *= 2.0
    return optimize.brentq(lambda c: t_sf_two_sided(c, df) - alpha, 0.0, hi, xtol=1e-14, rtol=1e-15)


def _std_normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def noncentral_t_cdf(t: float, df: int, nc: float) -> float:
    """P(T <= t) for a noncentral t with ``df`` degrees of freedom and noncentrality ``nc``.

    Integrates Phi(t * sqrt(u / df) - nc) against the chi-square(df) density.
    """
    if not 1 <= df <= 1000:
        raise ValueError("noncentral t integration supports 1 <= df <= 1000")
    k = 0.5 * df
    log_norm = -k * math.log(2.0) - math.lgamma(k)

    def integrand(u: float) -> float:
        if u <= 0.0:
            return 0.0
        dens = math.exp(log_norm + (k - 1.0) * math.log(u) - 0.5 * u)
        return _std_normal_cdf(t * math.sqrt(u / df) - nc) * dens

    # chi-square mass sits around df with spread sqrt(2 df)
    spread = math.sqrt(2.0 * df)
    upper = df + 40.0 * spread + 50.0
    pts = sorted({max(df - 4 * spread, 1e-9), float(df), df + 4 * spread})
    val, _ = integrate.quad(integrand, 0.0, upper, points=pts, limit=500, epsabs=1e-13, epsrel=1e-12)
    return min(max(val, 0.0), 1.0)


def t_test_power(mu: float, alpha: float, n: int) -> float:
    """Power of the two-sided one-sample t-test with n unit-variance normal draws of mean ``mu``."""
    df = n - 1
    crit = _t_critical(alpha, df)
    nc = mu * math.sqrt(n)
    return 1.0 - noncentral_t_cdf(crit, df, nc) + noncentral_t_cdf(-crit, df, nc)


@lru_cache(maxsize=64)
def mean_for_power(alpha: float, eta: float, n: int) -> float:
    """Mean shift giving the two-sided one-sample t-test power ``eta``.

    Returns 0.0 when ``eta`` equals ``alpha`` (power at the null).
    """
    if not 0 < alpha < 1 or not 0 < eta < 1:
        raise ValueError("alpha and eta must lie in (0, 1)")
    if n < 2:
        raise ValueError("need at least two observations")
    if eta < alpha:
        raise ValueError("target power below the test level is unattainable")
    if eta == alpha:
        return 0.0
    hi = 1.0
    for _ in range(64):
        if t_test_power(hi, alpha, n) >= eta:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the power root")
    root, info = optimize.brentq(lambda mu: t_test_power(mu, alpha, n) - eta, 0.0, hi,
                                 xtol=1e-14, rtol=1e-10, maxiter=500, full_output=True)
    if not info.converged:
        raise ConvergenceError("power root did not converge")
    return float(root)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Backed by a Philox counter-based generator; the key goes through
    ``numpy.random.SeedSequence`` so nearby ids give unrelated streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v < 2**64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


def rng_standard_normal(stream: RngStream, count: int) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be non-negative")
    return stream.generator().standard_normal(count)
