"""Parseval SGWT, LocLet transforms and the tight-frame constructions.

The frame is generated by a piecewise-linear ``omega`` (1 below ``1/b``, 0
above 1): ``zeta0 = omega``, ``zeta1(x) = omega(x / b) - omega(x)``, scaling
function ``phi = sqrt(zeta0)``, kernel ``psi = sqrt(zeta1)`` and scales
``s_j = b^(1 - j)``. Band 0 is the scaling band; bands ``1..J`` are wavelets.

LocLets restrict every band to a spectral interval ``I_k``. The filter of band
``j`` on interval ``k`` is ``g_j`` times the (Jackson-damped) polynomial
indicator of ``I_k``, re-expanded as one Chebyshev polynomial of the same
degree; all ``(j, k)`` filters share a single basis sweep. Because the damped
indicators of a partition sum to one, the LocLet bands of a partition add up
to the plain SGWT bands. With an eigendecomposition (``eig=``) the restriction
is the exact spectral projection instead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chebyshev import (
    ChebyshevFilter,
    FilterBank,
    _damp,
    indicator_coefficients,
    apply_filter_bank,
    apply_filter_bank_adjoint,
    chebyshev_coefficients,
)
from .graph import DENSE_CAP, DenseCapError, EigenSystem


class FrameError(ValueError):
    pass


def _boundaries(partition) -> np.ndarray:
    return np.asarray(getattr(partition, "boundaries", partition), dtype=float)


def _diag(d, x):
    return d[:, None] * x if x.ndim == 2 else d * x


def interval_masks(eig: EigenSystem, boundaries) -> list:
    """Eigenvalue masks of ``[b_k, b_{k+1})``, the last interval closed."""
    b = _boundaries(boundaries)
    K = b.size - 1
    lam = eig.eigenvalues
    # the first interval also takes anything below b_0, the last anything above
    masks = []
    for k in range(K):
        lo = lam >= b[k] if k > 0 else np.ones(lam.size, bool)
        hi = lam < b[k + 1] if k < K - 1 else np.ones(lam.size, bool)
        masks.append(lo & hi)
    return masks


@dataclass(frozen=True)
class FrameSpec:
    """Parseval partition-of-unity frame on ``[0, lambda_max]``."""

    lambda_max: float
    b: float = 2.0
    J: int = field(default=0)

    def __post_init__(self):
        if not self.lambda_max > 0:
            raise FrameError("lambda_max must be positive")
        if not self.b > 1:
            raise FrameError("dilation base b must exceed 1")
        if self.J == 0:
            J = int(np.floor(np.log(self.lambda_max) / np.log(self.b))) + 2
            object.__setattr__(self, "J", max(J, 1))

    @property
    def scales(self) -> np.ndarray:
        return self.b ** (1.0 - np.arange(1, self.J + 1))

    @property
    def n_bands(self) -> int:
        return self.J + 1

    def omega(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = 1.0 / self.b
        return np.clip((1.0 - x) / (1.0 - lo), 0.0, 1.0)

    def zeta0(self, lam) -> np.ndarray:
        return self.omega(lam)

    def zeta1(self, x) -> np.ndarray:
        return self.omega(np.asarray(x, dtype=float) / self.b) - self.omega(x)

    def band_square(self, j: int):
        """``zeta`` of band ``j`` as a function of ``lambda``."""
        if j == 0:
            return self.zeta0
        s = self.scales[j - 1]
        return lambda lam: self.zeta1(s * np.asarray(lam, dtype=float))

    def band(self, j: int):
        """``phi`` (j = 0) or ``psi(s_j .)`` as a function of ``lambda``."""
        sq = self.band_square(j)
        return lambda lam: np.sqrt(np.maximum(sq(lam), 0.0))

    def band_kinks(self, j: int) -> list:
        """Points where band ``j`` is not smooth (in ``lambda``)."""
        if j == 0:
            return [1.0 / self.b, 1.0]
        s = self.scales[j - 1]
        return [x / s for x in (1.0 / self.b, 1.0, self.b)]

    def unity_residual(self, lam) -> np.ndarray:
        """``zeta0 + sum_j zeta1(s_j lam) - 1``."""
        total = self.zeta0(lam)
        for j in range(1, self.J + 1):
            total = total + self.band_square(j)(lam)
        return total - 1.0

    # -- Chebyshev banks ----------------------------------------------------

    def sgwt_bank(self, N: int = 200, damping: str = "none") -> FilterBank:
        return FilterBank(
            [
                chebyshev_coefficients(self.band(j), N, self.lambda_max, damping)
                for j in range(self.n_bands)
            ]
        )

    def localized_filter(
        self, j: int, intervals: Sequence[tuple], N: int = 200, damping: str = "jackson"
    ) -> ChebyshevFilter:
        """Expansion of ``g_j * p_I`` where ``I`` is a union of intervals.

        ``p_I`` is the (damped) polynomial indicator of ``I``. The product is
        sampled at the cosine nodes used for every frame filter, so summing the
        localized filters over a partition gives back the plain band filter.
        """
        ind = np.zeros(N + 1)
        for a, b in intervals:
            ind += _damp(indicator_coefficients(a, b, N, self.lambda_max), damping)
        p_I = ChebyshevFilter(ind, self.lambda_max)
        g = self.band(j)
        filt = chebyshev_coefficients(lambda lam: g(lam) * p_I(lam), N, self.lambda_max)
        return ChebyshevFilter(filt.coeffs, self.lambda_max, damping)

    def loclet_bank(
        self, boundaries, groups=None, N: int = 200, damping: str = "jackson"
    ) -> FilterBank:
        """Bank ordered ``(group, band)``; ``groups`` lists interval indices.

        By default every interval is its own group.
        """
        b = _boundaries(boundaries)
        K = b.size - 1
        if groups is None:
            groups = [[k] for k in range(K)]
        filters = []
        for grp in groups:
            ivs = [(b[k], b[k + 1]) for k in grp]
            for j in range(self.n_bands):
                filters.append(self.localized_filter(j, ivs, N, damping))
        return FilterBank(filters)


def parseval_filters(lambda_max: float, b: float = 2.0) -> FrameSpec:
    """Frame with ``J = floor(log lambda_max / log b) + 2`` wavelet scales."""
    return FrameSpec(float(lambda_max), float(b))


# --------------------------------------------------------------------------
# SGWT
# --------------------------------------------------------------------------

def sgwt_forward(
    L, frame: FrameSpec, f, N: int = 200, damping: str = "none",
    eig: Optional[EigenSystem] = None,
) -> np.ndarray:
    """``(phi(L) f, psi(s_1 L) f, ..., psi(s_J L) f)`` as a ``(J+1, n)`` array.

    With ``eig`` the filters are applied exactly instead of by Chebyshev.
    """
    f = np.asarray(f, dtype=float)
    if eig is not None:
        return np.stack([eig.apply(frame.band(j), f) for j in range(frame.n_bands)])
    return np.stack(apply_filter_bank(L, frame.sgwt_bank(N, damping), f))


def sgwt_adjoint(
    L, frame: FrameSpec, coeffs, N: int = 200, damping: str = "none",
    eig: Optional[EigenSystem] = None,
) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != frame.n_bands:
        raise FrameError(f"expected {frame.n_bands} bands, got {coeffs.shape[0]}")
    if eig is not None:
        return sum(eig.apply(frame.band(j), coeffs[j]) for j in range(frame.n_bands))
    return apply_filter_bank_adjoint(L, frame.sgwt_bank(N, damping), coeffs)


# --------------------------------------------------------------------------
# LocLets
# --------------------------------------------------------------------------

@dataclass
class LocLetCoefficients:
    """LocLet coefficients ``coeffs[k, j]`` for interval ``k`` and band ``j``."""

    coeffs: np.ndarray
    boundaries: np.ndarray
    N: int
    damping: str

    @property
    def K(self) -> int:
        return self.coeffs.shape[0]

    @property
    def J(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def n(self) -> int:
        return self.coeffs.shape[2]

    def band_sum(self) -> np.ndarray:
        """Sum over intervals: the SGWT coefficients."""
        return self.coeffs.sum(axis=0)

    def save(self, path) -> None:
        """CSV: two header lines, then one row ``k, j, c_0..c_{n-1}`` per band."""
        with open(path, "w", newline="") as fh:
            fh.write(
                f"# n={self.n},K={self.K},J={self.J},N={self.N},damping={self.damping}\n"
            )
            fh.write("# boundaries=" + ",".join(repr(float(x)) for x in self.boundaries) + "\n")
            w = csv.writer(fh)
            for k in range(self.K):
                for j in range(self.J + 1):
                    w.writerow([k, j] + [repr(float(v)) for v in self.coeffs[k, j]])

    @classmethod
    def load(cls, path) -> "LocLetCoefficients":
        with open(path, newline="") as fh:
            head = fh.readline().lstrip("# ").strip()
            meta = dict(item.split("=") for item in head.split(","))
            bline = fh.readline().lstrip("# ").strip()
            boundaries = np.array([float(x) for x in bline.split("=", 1)[1].split(",")])
            n, K, J = int(meta["n"]), int(meta["K"]), int(meta["J"])
            coeffs = np.zeros((K, J + 1, n))
            for row in csv.reader(fh):
                coeffs[int(row[0]), int(row[1])] = [float(v) for v in row[2:]]
        return cls(coeffs, boundaries, int(meta["N"]), meta["damping"])


def loclet_forward(
    L, frame: FrameSpec, partition, f, N: int = 200, damping: str = "jackson",
    eig: Optional[EigenSystem] = None,
) -> LocLetCoefficients:
    """LocLet coefficients of ``f`` for every interval of ``partition``.

    In oracle mode (``eig`` given) each band is filtered exactly and then
    projected onto the eigenvectors of the interval.
    """
    b = _boundaries(partition)
    K = b.size - 1
    f = np.asarray(f, dtype=float)
    if eig is not None:
        masks = interval_masks(eig, b)
        fh = eig.gft(f)
        out = np.empty((K, frame.n_bands) + f.shape)
        for j in range(frame.n_bands):
            gl = frame.band(j)(eig.eigenvalues)
            for k, m in enumerate(masks):
                out[k, j] = eig.igft(_diag(np.where(m, gl, 0.0), fh))
        return LocLetCoefficients(out, b, 0, "exact")
    bank = frame.loclet_bank(b, N=N, damping=damping)
    flat = np.stack(apply_filter_bank(L, bank, f))
    return LocLetCoefficients(
        flat.reshape((K, frame.n_bands) + f.shape), b, N, damping
    )


def loclet_adjoint(
    L, frame: FrameSpec, partition, coeffs, N: int = 200, damping: str = "jackson",
    eig: Optional[EigenSystem] = None, intervals: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """``sum_k W^{I_k *} eta_k`` (optionally restricted to ``intervals``)."""
    b = _boundaries(partition)
    K = b.size - 1
    eta = coeffs.coeffs if isinstance(coeffs, LocLetCoefficients) else np.asarray(coeffs, float)
    if eta.shape[:2] != (K, frame.n_bands):
        raise FrameError(
            f"coefficients have shape {eta.shape[:2]}, expected {(K, frame.n_bands)}"
        )
    ks = list(range(K)) if intervals is None else list(intervals)
    if eig is not None:
        masks = interval_masks(eig, b)
        total = np.zeros(eta.shape[2:])
        for j in range(frame.n_bands):
            gl = frame.band(j)(eig.eigenvalues)
            for k in ks:
                total = total + eig.igft(_diag(np.where(masks[k], gl, 0.0), eig.gft(eta[k, j])))
        return total
    bank = frame.loclet_bank(b, groups=[[k] for k in ks], N=N, damping=damping)
    sel = eta[ks].reshape((len(ks) * frame.n_bands,) + eta.shape[2:])
    return apply_filter_bank_adjoint(L, bank, sel)


# --------------------------------------------------------------------------
# Tight frame of LocLets built on the kernel supports
# --------------------------------------------------------------------------

def support_partition(frame: FrameSpec) -> np.ndarray:
    """Boundaries ``0, 1/b, 1, b, ..., b^(J-1)``.

    With 0-based intervals, ``zeta_0`` lives on intervals 0 and 1 and band
    ``j >= 1`` on intervals ``j`` and ``j + 1``; the last boundary is at least
    ``lambda_max / b``, so any ``lambda_1 <= b^(J-1)`` is covered.
    """
    return np.concatenate([[0.0], frame.b ** np.arange(-1.0, frame.J)])


def _band_intervals(j: int, K: int) -> list:
    ks = [0, 1] if j == 0 else [j, j + 1]
    return [k for k in ks if k < K]


def tight_loclet_frame_vectors(eig: EigenSystem, frame: FrameSpec, boundaries=None) -> np.ndarray:
    """Rows ``sqrt(zeta_j)(L_{I_k}) delta_m`` for every band and its two intervals.

    The analysis coefficients of ``f`` are ``R @ f``; since each ``zeta_j``
    vanishes off its two intervals, the rows form a tight frame with bound 1.
    """
    if eig.n > DENSE_CAP:
        raise DenseCapError(f"n={eig.n} exceeds dense cap {DENSE_CAP}")
    if boundaries is None:
        boundaries = support_partition(frame)
    b = _boundaries(boundaries)
    K = b.size - 1
    if K != frame.J + 1:
        raise FrameError(f"need {frame.J + 1} intervals, got {K}")
    if eig.lambda_1 > b[-1] * (1 + 1e-12):
        raise FrameError("partition does not cover the spectrum")
    grid = np.linspace(0.0, b[-1], 20001)
    for j in range(frame.n_bands):
        ks = _band_intervals(j, K)
        lo, hi = b[ks[0]], b[ks[-1] + 1]
        off = (grid < lo) | (grid > hi)
        if np.any(frame.band_square(j)(grid[off]) > 1e-14):
            raise FrameError(f"band {j} is not supported in intervals {ks}")
    masks = interval_masks(eig, b)
    U, lam = eig.eigenvectors, eig.eigenvalues
    rows = []
    for j in range(frame.n_bands):
        g = frame.band(j)(lam)
        for k in _band_intervals(j, K):
            rows.append((U * np.where(masks[k], g, 0.0)) @ U.T)
    return np.vstack(rows)


# --------------------------------------------------------------------------
# Spectrum-adapted (warped) frame identity
# --------------------------------------------------------------------------

def cosine_kernel(d: Sequence[float], R: int, width: float):
    """``y -> sum_i d_i cos(2 pi i (y / (R width) + 1/2))`` on ``[-R width, 0]``."""
    d = np.asarray(d, dtype=float)
    if abs(np.sum(d * (-1.0) ** np.arange(d.size))) > 1e-12:
        raise FrameError("kernel coefficients must satisfy sum (-1)^i d_i = 0")

    def ghat(y):
        y = np.asarray(y, dtype=float)
        inside = (y >= -R * width) & (y <= 0)
        u = y / (R * width) + 0.5
        val = np.cos(2 * np.pi * np.outer(np.arange(d.size), np.where(inside, u, 0.0).ravel()))
        val = (d @ val).reshape(y.shape)
        return np.where(inside, val, 0.0)

    return ghat


def warped_frame_identity_check(
    eig: EigenSystem, gamma: float, J: int, R: int, omega0,
    d: Sequence[float] = (0.5, 0.5), C: Optional[float] = None,
    cap: int = 200,
) -> float:
    """Max deviation between the spectrum-adapted frame vectors and their
    expression as sums of warped LocLets over ``R`` intervals.

    ``omega0`` maps eigenvalues to the cumulative spectral distribution.
    """
    if eig.n > cap:
        raise DenseCapError(f"n={eig.n} exceeds cap {cap} for the warped identity check")
    if not 2 <= R <= J:
        raise FrameError(f"need 2 <= R <= J, got R={R}, J={J}")
    width = gamma / (J + 1 + R)
    ghat = cosine_kernel(d, R, width)
    if C is None:
        C = float(np.exp(gamma))
    lam = eig.eigenvalues
    w0 = np.asarray(omega0(lam), dtype=float)
    with np.errstate(divide="ignore"):
        warped = np.log(C * w0)

    def psi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x > 0, ghat(np.log(C * np.where(x > 0, x, 1.0))), 0.0)

    U = eig.eigenvectors
    edges = np.exp((np.arange(R + 1) - R) * width) / C
    worst = 0.0
    for j in range(1, J + 1):
        direct = ghat(warped - j * width)
        s = np.exp(-j * width)
        x = s * w0
        local = np.zeros_like(direct)
        for k in range(R):
            inside = (x >= edges[k]) & ((x < edges[k + 1]) if k < R - 1 else (x <= edges[k + 1]))
            local = local + np.where(inside, psi(x), 0.0)
        # g_{m,j} for all m are the columns of U diag(.) U^T
        G = (U * direct) @ U.T
        H = (U * local) @ U.T
        worst = max(worst, float(np.abs(G - H).max()))
    return worst
