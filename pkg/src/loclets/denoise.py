"""Noise-level estimation, spectral support detection and LocLet denoising.

Block energies ``E_k`` are quadratic forms ``<f, P_k f>`` with the damped
polynomial projector ``P_k`` of interval ``k``; the same moments that give the
Hutchinson counts give the energies, so ``E_k / sigma^2`` and ``n_k`` are
estimated consistently (``E[xi^T P_k xi] = sigma^2 tr P_k``). With an exact
projector this is ``||P_k f||^2``.

Three estimators are provided:

``LLet``
    soft-threshold the LocLet coefficients on the detected support ``I`` and
    on its complement with separate global thresholds.
``PF``
    soft-threshold the coefficients of the Parseval frame built from the full
    eigendecomposition, each coefficient with its own noise scale.
``LLet+PF``
    the Parseval-frame estimator restricted to the eigenvectors of ``I`` plus
    LocLet thresholding on the complement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chebyshev import (
    _damp,
    apply_filter_bank,
    apply_filter_bank_adjoint,
    chebyshev_basis_sweep,
    indicator_coefficients,
)
from .frames import FrameSpec, interval_masks, parseval_filters
from .graph import DENSE_CAP, DenseCapError, EigenSystem
from .spectrum import Partition, exact_interval_counts
from .stats import chi2_sf

DF_FLOOR = 0.5
METHODS = ("LLet", "LLet+PF", "PF")


class DenoiseError(ValueError):
    pass


# --------------------------------------------------------------------------
# block statistics and noise level
# --------------------------------------------------------------------------

@dataclass
class BlockStats:
    """Per-interval energies, degrees of freedom and ``c_k = E_k / n_k``.

    Arrays are ``(K,)`` for one signal or ``(K, m)`` for a block of signals.
    Intervals with ``n_k < df_floor`` are invalid and carry ``c_k = nan``.
    """

    energies: np.ndarray
    counts: np.ndarray
    df_floor: float = DF_FLOOR

    @property
    def valid(self) -> np.ndarray:
        return self.counts >= self.df_floor

    @property
    def c(self) -> np.ndarray:
        n = np.where(self.valid, self.counts, np.nan)
        if self.energies.ndim == 2:
            n = n[:, None]
        return self.energies / n

    @property
    def K(self) -> int:
        return self.counts.size


def signal_moments(L, f, N: int) -> np.ndarray:
    """``f^T T_i(Lt) f`` for ``i = 0..N`` (per column if ``f`` is 2-D)."""
    f = np.asarray(f, dtype=float)
    out = np.empty((N + 1,) + f.shape[1:])
    for i, T in enumerate(chebyshev_basis_sweep(L, f, N, L.lambda_max)):
        out[i] = np.einsum("i...,i...->...", f, T)
    return out


def block_energies(
    L, partition: Partition, f, N: int = 200, damping: str = "jackson",
    eig: Optional[EigenSystem] = None,
) -> np.ndarray:
    """``E_k`` per interval; exact ``||P_k f||^2`` when ``eig`` is given."""
    f = np.asarray(f, dtype=float)
    if eig is not None:
        fh = eig.gft(f)
        return np.stack([np.sum(fh[m] ** 2, axis=0) for m in interval_masks(eig, partition)])
    return energies_from_moments(signal_moments(L, f, N), partition, L.lambda_max, damping)


def energies_from_moments(moments, partition: Partition, lambda_max: float,
                          damping: str = "jackson") -> np.ndarray:
    """Block energies from :func:`signal_moments` (one sweep serves any partition)."""
    N = moments.shape[0] - 1
    A = np.vstack([
        _damp(indicator_coefficients(a, b, N, lambda_max), damping)
        for a, b in partition.intervals
    ])
    return np.maximum(np.tensordot(A, moments, axes=1), 0.0)


def block_statistics(
    L, partition: Partition, f, N: int = 200, damping: str = "jackson",
    eig: Optional[EigenSystem] = None, df_floor: float = DF_FLOOR,
) -> BlockStats:
    """Block energies and ``c_k`` with real-valued ``n_k`` from the partition.

    Without counts on the partition, exact counts are taken from ``eig``.
    """
    counts = partition.counts
    if counts is None:
        if eig is None:
            raise DenoiseError("partition has no counts; pass eig for exact counts")
        counts = exact_interval_counts(eig, partition)
    counts = np.asarray(counts, dtype=float)
    if not np.any(counts >= df_floor):
        raise DenoiseError("every interval is below the df floor")
    E = block_energies(L, partition, f, N, damping, eig)
    return BlockStats(E, counts, df_floor)


def sigma_med(stats: BlockStats, min_intervals: int = 3):
    """``sqrt`` of the central ``c_k``: rank ``ceil(K/2)`` in decreasing order.

    For odd ``K`` this is the ordinary median; for even ``K`` it is the upper
    of the two middle values.
    """
    v = stats.valid
    K = int(v.sum())
    if K < min_intervals:
        raise DenoiseError(f"need at least {min_intervals} valid intervals, got {K}")
    c = -np.sort(-stats.c[v], axis=0)
    return np.sqrt(c[(K + 1) // 2 - 1])


def sigma_mean(stats: BlockStats, r: int):
    """Trimmed mean: sort ``c_k`` decreasingly, average 1-based ranks ``r..K-r``."""
    v = stats.valid
    K = int(v.sum())
    if not 1 <= r <= K / 2:
        raise DenoiseError(f"r must lie in [1, K/2] with K={K}, got r={r}")
    c = -np.sort(-stats.c[v], axis=0)
    return np.sqrt(c[r - 1:K - r].mean(axis=0))


# --------------------------------------------------------------------------
# support approximation
# --------------------------------------------------------------------------

@dataclass
class SupportEstimate:
    selected: np.ndarray
    p_values: np.ndarray
    alpha: float
    sigma: float

    @property
    def complement(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.p_values.size), self.selected)


def support_from_stats(stats: BlockStats, sigma: float, alpha: float = 0.001) -> SupportEstimate:
    """``p_k = P(sigma^2 Gamma_{n_k} > E_k)``; keep intervals with ``p_k <= alpha``."""
    if not sigma > 0:
        raise DenoiseError("sigma must be positive")
    if not 0 < alpha < 1:
        raise DenoiseError("alpha must lie in (0, 1)")
    v = stats.valid
    p = np.ones(stats.energies.shape)
    df = np.where(v, stats.counts, 1.0)
    if p.ndim == 2:
        df = df[:, None]
        vv = np.broadcast_to(v[:, None], p.shape)
    else:
        vv = v
    p = np.where(vv, chi2_sf(stats.energies / sigma**2, df), 1.0)
    return SupportEstimate(np.flatnonzero(p <= alpha) if p.ndim == 1 else p <= alpha,
                           p, alpha, float(sigma))


def support_approximation(
    L, partition: Partition, f, sigma: Optional[float] = None, alpha: float = 0.001,
    N: int = 200, damping: str = "jackson", eig: Optional[EigenSystem] = None,
) -> SupportEstimate:
    """Chi-square test per interval; ``sigma`` defaults to :func:`sigma_med`."""
    stats = block_statistics(L, partition, f, N, damping, eig)
    if sigma is None:
        sigma = float(sigma_med(stats))
    return support_from_stats(stats, sigma, alpha)


# --------------------------------------------------------------------------
# thresholding
# --------------------------------------------------------------------------

def soft_threshold(c, t):
    """``sign(c) max(|c| - t, 0)`` (broadcasting)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DenoiseError("threshold must be non-negative")
    c = np.asarray(c, dtype=float)
    return np.sign(c) * np.maximum(np.abs(c) - t, 0.0)


def snr_db(f, f_hat) -> np.ndarray:
    """``10 log10(||f||^2 / ||f_hat - f||^2)``; ``f_hat`` may carry extra columns."""
    f = np.asarray(f, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float)
    diff = f_hat - (f[:, None] if f_hat.ndim > f.ndim else f)
    return 10.0 * np.log10(np.sum(f**2) / np.sum(diff**2, axis=0))


def threshold_grid(sigma: float, size: int = 20, lo: float = 1e-3, hi: float = 10.0) -> np.ndarray:
    return sigma * np.logspace(np.log10(lo), np.log10(hi), size)


def llet_components(
    L, frame: FrameSpec, partition: Partition, f, selected: Sequence[int],
    t1, t2, N: int = 200, damping: str = "jackson",
):
    """``(f_hat_I, f_hat_Ibar)`` for every threshold in ``t1`` and ``t2``.

    Returns two ``(n, len(t))`` arrays. One forward sweep serves both sides;
    each side needs one adjoint sweep for all of its thresholds.
    """
    K = partition.K
    sel = sorted(set(int(k) for k in selected))
    comp = [k for k in range(K) if k not in sel]
    t1 = np.atleast_1d(np.asarray(t1, dtype=float))
    t2 = np.atleast_1d(np.asarray(t2, dtype=float))
    n = L.n
    groups = [g for g in (sel, comp) if g]
    bank = frame.loclet_bank(partition, groups=groups, N=N, damping=damping)
    coeffs = np.stack(apply_filter_bank(L, bank, f))
    nb = frame.n_bands
    out = []
    gi = 0
    for grp, t in ((sel, t1), (comp, t2)):
        if not grp:
            out.append(np.zeros((n, t.size)))
            continue
        sub = bank.filters[gi * nb:(gi + 1) * nb]
        st = soft_threshold(coeffs[gi * nb:(gi + 1) * nb, :, None], t[None, None, :])
        out.append(apply_filter_bank_adjoint(L, sub, st))
        gi += 1
    return out[0], out[1]


def pf_component(eig: EigenSystem, frame: FrameSpec, f, thresholds, mask=None) -> np.ndarray:
    """Parseval-frame soft thresholding on the eigenvectors selected by ``mask``.

    Frame vectors are ``r_{j,i} = U diag(g_j(lam)) U^T delta_i`` restricted to
    ``mask``; coefficient ``<f, r_{j,i}>`` is shrunk by ``t ||r_{j,i}||``.
    Returns ``(n, len(thresholds))``.
    """
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    U, lam = eig.eigenvectors, eig.eigenvalues
    if mask is not None:
        U, lam = U[:, mask], lam[mask]
    n = eig.n
    if lam.size == 0:
        return np.zeros((n, thresholds.size))
    fh = U.T @ np.asarray(f, dtype=float)
    U2 = U**2
    out = np.zeros((n, thresholds.size))
    for j in range(frame.n_bands):
        gj = frame.band(j)(lam)
        if not np.any(gj > 0):
            continue
        c = U @ (gj * fh)
        nrm = np.sqrt(U2 @ gj**2)
        st = soft_threshold(c[:, None], nrm[:, None] * thresholds[None, :])
        out += U @ (gj[:, None] * (U.T @ st))
    return out


def best_pair(f, A, B):
    """Best SNR over all sums ``A[:, a] + B[:, b]``; returns ``(snr, a, b)``."""
    R = f[:, None] - A
    err = (
        np.sum(R**2, axis=0)[:, None]
        + np.sum(B**2, axis=0)[None, :]
        - 2.0 * (R.T @ B)
    )
    err = np.maximum(err, np.finfo(float).tiny)
    a, b = np.unravel_index(np.argmin(err), err.shape)
    return 10.0 * np.log10(np.sum(f**2) / err[a, b]), int(a), int(b)


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------

@dataclass
class DenoiseConfig:
    alpha: float = 0.001
    t1: float = 0.0
    t2: float = 0.0
    sigma: Optional[float] = None
    N: int = 200
    damping: str = "jackson"
    b: float = 2.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DenoiseError("alpha must lie in (0, 1)")
        if self.t1 < 0 or self.t2 < 0:
            raise DenoiseError("thresholds must be non-negative")


@dataclass
class DenoiseResult:
    estimate: np.ndarray
    method: str
    support: Optional[SupportEstimate] = None
    snr_in: Optional[float] = None
    snr_out: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def support_size(self) -> int:
        return 0 if self.support is None else int(np.size(self.support.selected))

    def score(self, f) -> "DenoiseResult":
        """Fill the SNR fields against the clean signal ``f``."""
        self.snr_out = float(snr_db(f, self.estimate))
        if "noisy" in self.extra:
            self.snr_in = float(snr_db(f, self.extra["noisy"]))
        return self


def _support(L, partition, f_noisy, config, eig=None):
    return support_approximation(
        L, partition, f_noisy, config.sigma, config.alpha, config.N, config.damping
    )


def denoise_llet(
    L, f_noisy, partition: Partition, config: DenoiseConfig = DenoiseConfig(),
    frame: Optional[FrameSpec] = None,
) -> DenoiseResult:
    """Support test, then LocLet soft thresholding with ``t1`` on ``I`` and ``t2`` off it."""
    frame = frame or parseval_filters(L.lambda_max, config.b)
    sup = _support(L, partition, f_noisy, config)
    A, B = llet_components(
        L, frame, partition, f_noisy, sup.selected, config.t1, config.t2, config.N, config.damping
    )
    return DenoiseResult(A[:, 0] + B[:, 0], "LLet", sup, extra={"noisy": f_noisy})


def denoise_pf(eig: EigenSystem, f_noisy, t: float, frame: Optional[FrameSpec] = None,
               b: float = 2.0) -> DenoiseResult:
    """Full-spectrum Parseval-frame thresholding (needs the whole eigenbasis)."""
    frame = frame or parseval_filters(eig.lambda_1, b)
    est = pf_component(eig, frame, f_noisy, [t])[:, 0]
    return DenoiseResult(est, "PF", extra={"noisy": f_noisy})


def denoise_llet_pf(
    L, f_noisy, partition: Partition, config: DenoiseConfig = DenoiseConfig(),
    eig: Optional[EigenSystem] = None, frame: Optional[FrameSpec] = None,
    cap: int = DENSE_CAP,
) -> DenoiseResult:
    """Parseval-frame thresholding on the detected support, LocLets off it.

    The eigenpairs with eigenvalues in ``I`` come from the dense oracle, which
    limits this estimator to graphs with ``n <= cap``.
    """
    if eig is None:
        if L.n > cap:
            raise DenseCapError(
                f"n={L.n} exceeds the dense cap {cap}; use denoise_llet for large graphs"
            )
        from .graph import dense_eigendecomposition

        eig = dense_eigendecomposition(L, cap)
    frame = frame or parseval_filters(L.lambda_max, config.b)
    sup = _support(L, partition, f_noisy, config)
    masks = interval_masks(eig, partition)
    mask = np.zeros(eig.n, bool)
    for k in sup.selected:
        mask |= masks[k]
    fI = pf_component(eig, frame, f_noisy, [config.t1], mask)[:, 0]
    _, B = llet_components(
        L, frame, partition, f_noisy, sup.selected, [0.0], config.t2, config.N, config.damping
    )
    return DenoiseResult(fI + B[:, 0], "LLet+PF", sup, extra={"noisy": f_noisy})
