"""Spectral measure estimation: interval counts, KPM density and the elbow rule.

All estimates go through Chebyshev moments ``m_i = mean_p z_p^T T_i(Lt) z_p``
of Rademacher probes ``z_p``. The count of interval ``I_k`` is then the inner
product of ``m`` with the damped indicator coefficients of ``I_k``, which is
the same as running the projector filter bank on every probe but lets one
probe sweep serve any number of partitions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .chebyshev import _damp, chebyshev_basis_sweep, indicator_coefficients, jackson_multipliers
from .graph import DENSE_CAP, EigenSystem, dense_eigendecomposition


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Regular partition of ``[0, lambda_max]`` into ``K`` half-open intervals.

    The last interval is closed. ``counts`` holds eigenvalue counts per
    interval: integers in ``exact`` mode, non-negative reals in ``estimated``.
    """

    boundaries: np.ndarray
    counts: Optional[np.ndarray] = None
    mode: str = "none"

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise SpectrumError("need at least two boundaries")
        if not np.all(np.diff(b) > 0):
            raise SpectrumError("boundaries must be strictly increasing")
        if b[0] != 0.0:
            raise SpectrumError("first boundary must be 0")
        object.__setattr__(self, "boundaries", b)
        if self.counts is not None:
            c = np.asarray(self.counts, dtype=float)
            if c.shape != (b.size - 1,):
                raise SpectrumError("one count per interval required")
            object.__setattr__(self, "counts", c)

    @property
    def K(self) -> int:
        return self.boundaries.size - 1

    @property
    def lambda_max(self) -> float:
        return float(self.boundaries[-1])

    @property
    def intervals(self) -> list:
        return list(zip(self.boundaries[:-1], self.boundaries[1:]))

    def with_counts(self, counts, mode: str) -> "Partition":
        return Partition(self.boundaries, counts, mode)

    def locate(self, lam) -> np.ndarray:
        """Interval index of each eigenvalue (values above the top go last)."""
        idx = np.searchsorted(self.boundaries, np.asarray(lam, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.K - 1)


def regular_partition(lambda_max: float, K: int) -> Partition:
    """``K`` intervals of equal width on ``[0, lambda_max]``."""
    if K < 1:
        raise SpectrumError("K must be >= 1")
    if not lambda_max > 0:
        raise SpectrumError("lambda_max must be positive")
    b = np.linspace(0.0, lambda_max, K + 1)
    b[-1] = lambda_max
    return Partition(b)


def exact_interval_counts(eig: EigenSystem, partition: Partition) -> np.ndarray:
    """Eigenvalue counts per interval from the dense oracle."""
    return np.bincount(partition.locate(eig.eigenvalues), minlength=partition.K).astype(float)


# --------------------------------------------------------------------------
# probe moments
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeMoments:
    """Per-probe Chebyshev moments ``z_p^T T_i(Lt) z_p``, shape ``(N+1, n_H)``."""

    per_probe: np.ndarray
    lambda_max: float
    n: int
    seed: Optional[int]

    @property
    def N(self) -> int:
        return self.per_probe.shape[0] - 1

    @property
    def n_H(self) -> int:
        return self.per_probe.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.per_probe.mean(axis=1)


def probe_moments(L, N: int, n_H: int, seed=None, block: int = 64) -> ProbeMoments:
    """Run the Chebyshev recurrence on ``n_H`` Rademacher probes.

    Probes are drawn in one batch from ``seed`` and processed in column blocks
    of size ``block``; each block's contribution lands in fixed columns, so the
    result does not depend on ``block``.
    """
    if n_H < 1:
        raise SpectrumError("n_H must be >= 1")
    if N < 1:
        raise SpectrumError("N must be >= 1")
    n = L.n
    rng = np.random.default_rng(seed)
    Z = rng.choice(np.array([-1.0, 1.0]), size=(n, n_H))
    out = np.empty((N + 1, n_H))
    for c0 in range(0, n_H, block):
        Zb = Z[:, c0:c0 + block]
        for i, T in enumerate(chebyshev_basis_sweep(L, Zb, N, L.lambda_max)):
            out[i, c0:c0 + block] = np.einsum("ij,ij->j", Zb, T)
    return ProbeMoments(out, float(L.lambda_max), n, seed)


def _indicator_matrix(partition: Partition, N: int, lambda_max: float, damping: str) -> np.ndarray:
    return np.vstack(
        [_damp(indicator_coefficients(a, b, N, lambda_max), damping) for a, b in partition.intervals]
    )


def counts_from_moments(
    moments: ProbeMoments, partition: Partition, damping: str = "jackson", per_probe: bool = False
):
    """Hutchinson counts ``n_k^N`` (clipped at 0) from precomputed moments."""
    A = _indicator_matrix(partition, moments.N, moments.lambda_max, damping)
    if per_probe:
        return A @ moments.per_probe
    return np.maximum(A @ moments.mean, 0.0)


def hutchinson_interval_counts(
    L, partition: Partition, N: int = 200, n_H: int = 50, seed=None, damping: str = "jackson"
) -> np.ndarray:
    """Estimated eigenvalue counts ``(1/n_H) sum_p z_p^T P_k z_p`` per interval.

    ``P_k`` is the damped polynomial projector of interval ``k``; all intervals
    share the same Rademacher probes. Negative estimates are clipped to 0.
    """
    return counts_from_moments(probe_moments(L, N, n_H, seed), partition, damping)


def count_standard_errors(moments: ProbeMoments, partition: Partition, damping: str = "jackson"):
    """Standard error of each interval count across probes."""
    x = counts_from_moments(moments, partition, damping, per_probe=True)
    if moments.n_H < 2:
        return np.full(partition.K, np.inf)
    return x.std(axis=1, ddof=1) / np.sqrt(moments.n_H)


# --------------------------------------------------------------------------
# KPM cumulative density
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralDensityEstimate:
    """Clipped KPM density and its cumulative table on ``[0, lambda_max]``.

    ``grid`` increases from 0 to ``lambda_max``; ``cdf`` is non-decreasing
    with ``cdf[-1] == 1``.
    """

    moments: np.ndarray
    degree: int
    n_H: int
    seed: Optional[int]
    grid: np.ndarray
    cdf: np.ndarray
    lambda_max: float

    def __call__(self, lam) -> np.ndarray:
        return np.interp(lam, self.grid, self.cdf)

    def density_theta(self, theta) -> np.ndarray:
        i = np.arange(self.degree + 1)
        g = jackson_multipliers(self.degree)
        w = np.where(i == 0, 1.0, 2.0) * g * self.moments
        return np.maximum(np.cos(np.outer(np.atleast_1d(theta), i)) @ w / np.pi, 0.0)


def kpm_cumulative_density(
    L, degree: int = 100, n_H: int = 50, seed=None, n_grid: Optional[int] = None,
    moments: Optional[ProbeMoments] = None,
) -> SpectralDensityEstimate:
    """Cumulative spectral distribution ``omega_0`` from Jackson-damped KPM.

    The density is evaluated in the angle variable (where it is a plain cosine
    series), clipped at zero, integrated by the trapezoid rule and normalized.
    """
    if degree < 8:
        raise SpectrumError("degree must be >= 8")
    if moments is None:
        moments = probe_moments(L, degree, n_H, seed)
    mu = moments.mean[: degree + 1] / moments.n
    n_grid = n_grid or 8 * degree + 1
    theta = np.linspace(np.pi, 0.0, n_grid)  # lambda increasing
    est = SpectralDensityEstimate(mu, degree, moments.n_H, seed, np.empty(0), np.empty(0),
                                  moments.lambda_max)
    h = est.density_theta(theta)
    dtheta = np.abs(np.diff(theta))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (h[1:] + h[:-1]) * dtheta)])
    if not cum[-1] > 0:
        raise SpectrumError("estimated density vanishes identically")
    cdf = cum / cum[-1]
    grid = 0.5 * moments.lambda_max * (np.cos(theta) + 1.0)
    grid[0], grid[-1] = 0.0, moments.lambda_max
    return SpectralDensityEstimate(mu, degree, moments.n_H, seed, grid, cdf, moments.lambda_max)


# --------------------------------------------------------------------------
# entropy and partition selection
# --------------------------------------------------------------------------

def partition_entropy(counts) -> float:
    """``-sum (n_k/n) log(n_k/n)`` with ``0 log 0 = 0``."""
    c = np.asarray(counts, dtype=float)
    if np.any(c < 0):
        raise SpectrumError("counts must be non-negative")
    total = c.sum()
    if not total > 0:
        raise SpectrumError("entropy undefined for all-zero counts")
    p = c[c > 0] / total
    return float(-(p * np.log(p)).sum())


def mean_relative_error(est_counts, exact_counts, n: Optional[float] = None) -> float:
    """``sum |n_k - n_k^N| / n`` with ``n`` defaulting to the exact total."""
    a = np.asarray(est_counts, dtype=float)
    b = np.asarray(exact_counts, dtype=float)
    if a.shape != b.shape:
        raise SpectrumError(f"length mismatch: {a.shape} vs {b.shape}")
    n = b.sum() if n is None else n
    return float(np.abs(a - b).sum() / n)


def elbow_index(entropies: Sequence[float], gain: float = 0.05) -> int:
    """First index whose forward relative entropy gain is below ``gain``.

    Falls back to the last index when the entropy keeps growing.
    """
    E = np.asarray(entropies, dtype=float)
    for i in range(E.size - 1):
        if E[i + 1] > 0 and (E[i + 1] - E[i]) / E[i + 1] < gain:
            return i
    return E.size - 1


@dataclass
class PartitionSelection:
    partition: Partition
    K_elbow: int
    K_grid: np.ndarray
    entropy: np.ndarray
    mre_proxy: np.ndarray
    mre_exact: Optional[np.ndarray] = None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            cols = ["K", "entropy", "mre_proxy"]
            if self.mre_exact is not None:
                cols.append("mre_exact")
            cols.append("elbow")
            w.writerow(cols)
            for i, K in enumerate(self.K_grid):
                row = [int(K), repr(float(self.entropy[i])), repr(float(self.mre_proxy[i]))]
                if self.mre_exact is not None:
                    row.append(repr(float(self.mre_exact[i])))
                row.append(int(K == self.K_elbow))
                w.writerow(row)


def select_partition(
    L, K_grid: Sequence[int] = tuple(range(5, 55, 5)), N: int = 200, n_H: int = 50,
    seed=None, gain: float = 0.05, eig: Optional[EigenSystem] = None,
    exact_mre: bool = False,
) -> PartitionSelection:
    """Regular partition at the entropy elbow, with per-``K`` diagnostics.

    A single probe sweep is shared by every ``K``. The MRE proxy is the summed
    count standard errors over ``n``. With ``exact_mre`` (or ``eig`` given) the
    true MRE against dense counts is reported too, subject to the dense cap.
    """
    K_grid = np.asarray(K_grid, dtype=int)
    if K_grid.size < 3 or np.any(np.diff(K_grid) <= 0) or K_grid[0] < 1:
        raise SpectrumError("K_grid must hold at least 3 increasing positive values")
    mom = probe_moments(L, N, n_H, seed)
    if eig is None and exact_mre and L.n <= DENSE_CAP:
        eig = dense_eigendecomposition(L)
    ent, proxy, exact = [], [], []
    parts = {}
    for K in K_grid:
        part = regular_partition(L.lambda_max, int(K))
        counts = counts_from_moments(mom, part)
        if not np.all(np.isfinite(counts)) or not counts.sum() > 0:
            raise SpectrumError(f"count estimation failed for K={K}")
        ent.append(partition_entropy(counts))
        proxy.append(float(count_standard_errors(mom, part).sum() / L.n))
        if eig is not None:
            exact.append(mean_relative_error(counts, exact_interval_counts(eig, part), L.n))
        parts[int(K)] = part.with_counts(counts, "estimated")
    i = elbow_index(ent, gain)
    K_el = int(K_grid[i])
    return PartitionSelection(
        parts[K_el], K_el, K_grid, np.array(ent), np.array(proxy),
        np.array(exact) if eig is not None else None,
    )
