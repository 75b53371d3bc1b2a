"""Chi-square utilities and concentration bounds for the block statistics."""

from __future__ import annotations

import numpy as np
from scipy import special


class StatsError(ValueError):
    pass


def chi2_sf(x, df) -> np.ndarray:
    """``P(Gamma_df > x)`` for real ``df > 0`` (regularized upper gamma)."""
    x = np.asarray(x, dtype=float)
    df = np.asarray(df, dtype=float)
    if np.any(df <= 0):
        raise StatsError("df must be positive")
    if np.any(x < 0):
        raise StatsError("x must be non-negative")
    return special.gammaincc(0.5 * df, 0.5 * x)


def chi2_cdf(x, df) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    df = np.asarray(df, dtype=float)
    if np.any(df <= 0):
        raise StatsError("df must be positive")
    if np.any(x < 0):
        raise StatsError("x must be non-negative")
    return special.gammainc(0.5 * df, 0.5 * x)


def chi2_quantile(p, df) -> np.ndarray:
    """Inverse of :func:`chi2_cdf` in ``x``, refined by one Newton step."""
    p = np.asarray(p, dtype=float)
    df = np.asarray(df, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise StatsError("p must lie in (0, 1)")
    if np.any(df <= 0):
        raise StatsError("df must be positive")
    x = 2.0 * special.gammaincinv(0.5 * df, p)
    # density of chi2(df) at x
    logpdf = (0.5 * df - 1) * np.log(x) - 0.5 * x - 0.5 * df * np.log(2) - special.gammaln(0.5 * df)
    step = (special.gammainc(0.5 * df, 0.5 * x) - p) / np.exp(logpdf)
    x_new = x - step
    return np.where(np.isfinite(x_new) & (x_new > 0), x_new, x)


def gaussian_tail_threshold(alpha: float, sigma: float) -> float:
    """``t = sigma sqrt(-2 log(alpha / 4))``."""
    if not 0 < alpha < 1:
        raise StatsError("alpha must lie in (0, 1)")
    return float(sigma * np.sqrt(-2.0 * np.log(alpha / 4.0)))


def chi2_difference_quantile(
    p: float, df_a: float, df_b: float, scale_a: float = 1.0,
    n_samples: int = 10**6, seed: int = 20240101,
) -> float:
    """Monte Carlo quantile of ``scale_a * Gamma_{df_a} - Gamma_{df_b}``."""
    if not 0 < p < 1:
        raise StatsError("p must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    d = scale_a * rng.chisquare(df_a, n_samples) - rng.chisquare(df_b, n_samples)
    return float(np.quantile(d, p))


def support_detection_threshold(alpha: float, df: float, **kw) -> float:
    """Smallest ``||f_k|| / sigma`` for which ``p_k <= alpha`` is guaranteed.

    Solves ``x (x - 2 t) = Q`` where ``t = t_{alpha/2, 1}`` and ``Q`` is the
    ``1 - alpha/2`` quantile of the difference of two independent
    ``chi2(df)`` variables.
    """
    t = gaussian_tail_threshold(alpha / 2.0, 1.0)
    q = chi2_difference_quantile(1.0 - alpha / 2.0, df, df, **kw)
    return float(t + np.sqrt(t * t + max(q, 0.0)))


def support_error_bound(alpha: float, sigma: float, df: float, n_missed: int, **kw) -> float:
    """Bound on ``||f - f_I||^2`` when ``n_missed`` support blocks have ``p_k > alpha``."""
    t = gaussian_tail_threshold(alpha / 2.0, sigma)
    q = sigma * chi2_difference_quantile(1.0 - alpha / 2.0, df, df, **kw)
    return float(n_missed * (t + np.sqrt(t * t + q * q)) ** 2)


# --------------------------------------------------------------------------
# concentration of the noise-level estimators
# --------------------------------------------------------------------------

def _noise_block_constants(counts):
    n = np.asarray(counts, dtype=float)
    if n.ndim != 1 or n.size == 0 or np.any(n <= 0):
        raise StatsError("counts must be a non-empty vector of positive reals")
    return n.size, float(n.min()), float(n.max())


def median_concentration_bound(t: float, counts, sigma: float = 1.0, side: str = "upper") -> float:
    """Tail bound for the median estimator over pure-noise blocks of sizes ``counts``.

    ``upper`` bounds ``P(med >= sigma^2 (1 + 2t) / beta)`` and ``lower`` bounds
    ``P(med <= beta sigma^2 (1 - t))`` with ``beta = n_0 / n_inf``; both equal
    ``exp((K/2) log(4 p (1 - p)))`` for the matching chi-square tail ``p``.
    """
    K, n0, ninf = _noise_block_constants(counts)
    if t < 0:
        raise StatsError("t must be non-negative")
    if side == "upper":
        p = float(chi2_sf(ninf + 2.0 * ninf * t, ninf))
    elif side == "lower":
        if t > 1:
            raise StatsError("lower bound needs t in [0, 1]")
        p = float(chi2_cdf(max(n0 - n0 * t, 0.0), n0))
        if p > 0.5:
            raise StatsError(f"lower bound needs p^-(t) <= 1/2, got {p}")
    else:
        raise StatsError(f"unknown side '{side}'")
    q = 4.0 * p * (1.0 - p)
    if q <= 0.0:
        return 0.0
    return float(min(np.exp(0.5 * K * np.log(q)), 1.0))


def median_deviation_levels(t: float, counts, sigma: float = 1.0) -> tuple:
    """Thresholds ``(lower, upper)`` on ``sigma_med^2`` matching the two bounds."""
    K, n0, ninf = _noise_block_constants(counts)
    beta = n0 / ninf
    return beta * sigma**2 * (1.0 - t), sigma**2 * (1.0 + 2.0 * t) / beta


def mean_concentration_bound(t: float, counts, sigma: float = 1.0, side: str = "upper") -> float:
    """Sub-gamma tail bound for the mean estimator over pure-noise blocks.

    ``upper`` bounds ``P(mean - sigma^2 >= t)``; ``lower`` bounds
    ``P(mean - sigma^2 <= -t)`` for ``0 <= t <= sigma^2``.
    """
    K, n0, _ = _noise_block_constants(counts)
    n = np.asarray(counts, dtype=float)
    if t < 0:
        raise StatsError("t must be non-negative")
    V = 2.0 * sigma**4 * float(np.sum(1.0 / n))
    B = 2.0 * sigma**2 / n0
    if side == "upper":
        den = V * (1.0 + B + np.sqrt(1.0 + 2.0 * B * K * t / V))
        return float(np.exp(-(K * t) ** 2 / den))
    if side == "lower":
        if t > sigma**2:
            raise StatsError("lower bound needs t <= sigma^2")
        return float(np.exp(-(K * t) ** 2 / (2.0 * V)))
    raise StatsError(f"unknown side '{side}'")
