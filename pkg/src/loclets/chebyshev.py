"""Truncated Chebyshev expansions of spectral filters.

A filter ``g`` on ``[0, lambda_max]`` is represented by coefficients
``a_0..a_N`` such that ``g(L) ~= sum_i a_i T_i(Lt)`` with the rescaled
operator ``Lt = (2 / lambda_max) L - I``. Applying the expansion needs only
the three-term recurrence and ``N`` sparse mat-vecs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.fft import dct

DAMPING_KINDS = ("none", "jackson")


class FilterError(ValueError):
    pass


@dataclass(frozen=True)
class ChebyshevFilter:
    """Coefficients of ``sum_i coeffs[i] T_i`` on ``[0, lambda_max]``.

    ``coeffs`` already include the damping multipliers (if any); ``damping``
    only records how they were produced.
    """

    coeffs: np.ndarray
    lambda_max: float
    damping: str = "none"

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise FilterError("need at least two coefficients (degree >= 1)")
        if not self.lambda_max > 0:
            raise FilterError("lambda_max must be positive")
        if self.damping not in DAMPING_KINDS:
            raise FilterError(f"unknown damping '{self.damping}'")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, lam) -> np.ndarray:
        """Evaluate the polynomial at eigenvalues ``lam``."""
        x = 2.0 * np.asarray(lam, dtype=float) / self.lambda_max - 1.0
        return np.polynomial.chebyshev.chebval(x, self.coeffs)

    def __add__(self, other: "ChebyshevFilter") -> "ChebyshevFilter":
        _check_compatible([self, other])
        return ChebyshevFilter(self.coeffs + other.coeffs, self.lambda_max, self.damping)

    def scaled(self, c: float) -> "ChebyshevFilter":
        return ChebyshevFilter(c * self.coeffs, self.lambda_max, self.damping)


class FilterBank:
    """Filters sharing degree and domain, applied with one recurrence sweep."""

    def __init__(self, filters: Sequence[ChebyshevFilter]):
        filters = list(filters)
        if not filters:
            raise FilterError("empty filter bank")
        _check_compatible(filters)
        self.filters = filters
        self.coeffs = np.vstack([f.coeffs for f in filters])

    def __len__(self):
        return len(self.filters)

    def __getitem__(self, k):
        return self.filters[k]

    @property
    def degree(self) -> int:
        return self.filters[0].degree

    @property
    def lambda_max(self) -> float:
        return self.filters[0].lambda_max


def _check_compatible(filters):
    deg = filters[0].degree
    lmax = filters[0].lambda_max
    for f in filters[1:]:
        if f.degree != deg or f.lambda_max != lmax:
            raise FilterError("filters must share degree and lambda_max")


def jackson_multipliers(N: int) -> np.ndarray:
    """Jackson kernel damping factors ``g_0..g_N`` (``g_0 = 1``)."""
    i = np.arange(N + 1)
    q = np.pi / (N + 2)
    return ((N + 2 - i) * np.cos(i * q) + np.sin(i * q) / np.tan(q)) / (N + 2)


def _damp(a: np.ndarray, damping: str) -> np.ndarray:
    if damping == "jackson":
        return a * jackson_multipliers(a.size - 1)
    if damping == "none":
        return a
    raise FilterError(f"unknown damping '{damping}'")


def _theta(lam, lambda_max):
    x = np.clip(2.0 * np.asarray(lam, dtype=float) / lambda_max - 1.0, -1.0, 1.0)
    return np.arccos(x)


def chebyshev_coefficients(
    g: Callable[[np.ndarray], np.ndarray],
    N: int,
    lambda_max: float,
    damping: str = "none",
    support: Optional[tuple] = None,
    breakpoints: Sequence[float] = (),
    n_nodes: Optional[int] = None,
) -> ChebyshevFilter:
    """Chebyshev expansion of degree ``N`` of ``g`` on ``[0, lambda_max]``.

    Without ``support`` the coefficients come from the discrete cosine sums
    on ``n_nodes = 2 (N + 1)`` Chebyshev nodes. With ``support=(a, b)`` the
    expansion is that of ``g * 1_[a, b)``, integrated in the angle variable by
    composite Gauss-Legendre quadrature restricted to the support; pass the
    kinks of ``g`` as ``breakpoints`` to keep that quadrature accurate.
    """
    if N < 1:
        raise FilterError("degree N must be >= 1")
    if not lambda_max > 0:
        raise FilterError("lambda_max must be positive")
    if support is None:
        M = n_nodes or 2 * (N + 1)
        theta = np.pi * (np.arange(M) + 0.5) / M
        lam = 0.5 * lambda_max * (np.cos(theta) + 1.0)
        vals = np.asarray(g(lam), dtype=float) * np.ones(M)
        bad = ~np.isfinite(vals)
        if bad.any():
            m = int(np.flatnonzero(bad)[0])
            raise FilterError(f"filter is not finite at node {m} (lambda={lam[m]!r})")
        a = dct(vals, type=2)[: N + 1] / M
        a[0] *= 0.5
        if a.size < N + 1:
            a = np.concatenate([a, np.zeros(N + 1 - a.size)])
    else:
        a = _restricted_coefficients(g, N, lambda_max, support, breakpoints)
    return ChebyshevFilter(_damp(a, damping), lambda_max, damping)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _restricted_coefficients(g, N, lambda_max, support, breakpoints):
    lo, hi = support
    lo, hi = max(lo, 0.0), min(hi, lambda_max)
    if not hi > lo:
        return np.zeros(N + 1)
    # theta decreases as lambda increases
    th_hi, th_lo = _theta(lo, lambda_max), _theta(hi, lambda_max)
    cuts = [th_lo, th_hi]
    for b in breakpoints:
        if lo < b < hi:
            cuts.append(float(_theta(b, lambda_max)))
    cuts = np.unique(cuts)
    panel = np.pi / max(N, 8)
    edges = [cuts[0]]
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(1, int(np.ceil((b - a) / panel)))
        edges.extend(np.linspace(a, b, m + 1)[1:])
    edges = np.asarray(edges)
    left, right = edges[:-1], edges[1:]
    half = 0.5 * (right - left)
    th = (0.5 * (left + right))[:, None] + half[:, None] * _GL_X[None, :]
    wts = (half[:, None] * _GL_W[None, :]).ravel()
    th = th.ravel()
    lam = 0.5 * lambda_max * (np.cos(th) + 1.0)
    vals = np.asarray(g(lam), dtype=float) * np.ones(th.size)
    bad = ~np.isfinite(vals)
    if bad.any():
        m = int(np.flatnonzero(bad)[0])
        raise FilterError(f"filter is not finite at lambda={lam[m]!r}")
    i = np.arange(N + 1)
    a = (2.0 / np.pi) * (np.cos(np.outer(i, th)) @ (wts * vals))
    a[0] *= 0.5
    return a


def indicator_coefficients(a: float, b: float, N: int, lambda_max: float) -> np.ndarray:
    """Exact (undamped) Chebyshev coefficients of ``1_[a, b]`` on ``[0, lambda_max]``."""
    th_a, th_b = _theta(a, lambda_max), _theta(b, lambda_max)
    i = np.arange(1, N + 1)
    c = np.empty(N + 1)
    c[0] = (th_a - th_b) / np.pi
    c[1:] = 2.0 * (np.sin(i * th_a) - np.sin(i * th_b)) / (i * np.pi)
    return c


def projector_filter(
    interval: tuple, N: int, lambda_max: float, damping: str = "jackson"
) -> ChebyshevFilter:
    """Damped expansion of the indicator of ``interval`` (spectral projector)."""
    a, b = interval
    if not b > a:
        raise FilterError(f"empty interval [{a}, {b})")
    a, b = max(a, 0.0), min(b, lambda_max)
    if not b > a:
        raise FilterError(f"interval [{interval[0]}, {interval[1]}) misses [0, {lambda_max}]")
    c = indicator_coefficients(a, b, N, lambda_max)
    return ChebyshevFilter(_damp(c, damping), lambda_max, damping)


# --------------------------------------------------------------------------
# application
# --------------------------------------------------------------------------

def _operator_matrix(L):
    return getattr(L, "matrix", L)


def chebyshev_basis_sweep(L, f: np.ndarray, N: int, lambda_max: float):
    """Yield ``T_i(Lt) f`` for ``i = 0..N``."""
    A = _operator_matrix(L)
    c = 2.0 / lambda_max
    t_prev = np.asarray(f, dtype=float)
    yield t_prev
    t_cur = c * (A @ t_prev) - t_prev
    yield t_cur
    for _ in range(2, N + 1):
        t_next = 2.0 * (c * (A @ t_cur) - t_cur) - t_prev
        yield t_next
        t_prev, t_cur = t_cur, t_next


def apply_filter_bank(L, bank, f: np.ndarray, block: int = 32) -> list:
    """Apply every filter of ``bank`` to ``f`` with a single basis sweep.

    ``f`` may be a vector or an ``(n, m)`` block of signals. Returns one array
    per filter, shaped like ``f``.
    """
    if not isinstance(bank, FilterBank):
        bank = FilterBank(bank)
    f = np.asarray(f, dtype=float)
    n = _operator_matrix(L).shape[0]
    if f.shape[0] != n:
        raise FilterError(f"signal has length {f.shape[0]}, operator has n={n}")
    A = bank.coeffs
    K = len(bank)
    flat = f.reshape(n, -1)
    m = flat.shape[1]
    out = np.zeros((K, n * m))
    # basis vectors are buffered and folded in with one product per filter
    # and block; each filter sees the same operations whatever the bank size
    buf = np.empty((block, n * m))
    i0 = 0
    for i, t in enumerate(chebyshev_basis_sweep(L, flat, bank.degree, bank.lambda_max)):
        buf[i - i0] = t.reshape(-1)
        if i - i0 == block - 1 or i == bank.degree:
            rows = buf[: i - i0 + 1]
            for k in range(K):
                out[k] += A[k, i0:i + 1] @ rows
            i0 = i + 1
    out = out.reshape((K,) + f.shape)
    return list(out)


def apply_filter(L, filt: ChebyshevFilter, f: np.ndarray) -> np.ndarray:
    """``g_N(L) f`` by the three-term recurrence."""
    return apply_filter_bank(L, FilterBank([filt]), f)[0]


def apply_filter_bank_adjoint(L, bank, signals) -> np.ndarray:
    """``sum_k g_k(L) signals[k]`` with one Clenshaw sweep.

    Each filter is a symmetric polynomial in ``L``, so this is the adjoint of
    :func:`apply_filter_bank`; its cost does not depend on the bank size.
    """
    if not isinstance(bank, FilterBank):
        bank = FilterBank(bank)
    eta = np.asarray(signals, dtype=float)
    if eta.shape[0] != len(bank):
        raise FilterError(f"expected {len(bank)} signals, got {eta.shape[0]}")
    A = _operator_matrix(L)
    n = A.shape[0]
    if eta.shape[1] != n:
        raise FilterError(f"signal has length {eta.shape[1]}, operator has n={n}")
    # v_i = sum_k a_{k,i} eta_k, i = 0..N
    flat = eta.reshape(len(bank), -1)
    V = (bank.coeffs.T @ flat).reshape((bank.degree + 1,) + eta.shape[1:])
    c = 2.0 / bank.lambda_max

    def lt(x):
        return c * (A @ x) - x

    b1 = np.zeros(eta.shape[1:])
    b2 = np.zeros(eta.shape[1:])
    for i in range(bank.degree, 0, -1):
        b1, b2 = V[i] + 2.0 * lt(b1) - b2, b1
    return V[0] + lt(b1) - b2
