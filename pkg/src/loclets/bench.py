"""Experiment harness: signals, noise, and the three benchmark sweeps.

Every random draw comes from a generator seeded by :func:`mix_seed` applied to
the root seed and the coordinates of the draw, so a sweep gives the same
numbers whatever order (or process) its cells run in.
"""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .denoise import (
    DenoiseError,
    BlockStats,
    best_pair,
    energies_from_moments,
    llet_components,
    pf_component,
    sigma_mean,
    sigma_med,
    signal_moments,
    snr_db,
    support_from_stats,
    threshold_grid,
)
from .frames import interval_masks, parseval_filters
from .graph import (
    DENSE_CAP,
    DenseCapError,
    EigenSystem,
    WeightedGraph,
    load_dataset,
    load_matrix_market,
    synthetic_swissroll,
)
from .spectrum import counts_from_moments, probe_moments, regular_partition, select_partition

MASK64 = (1 << 64) - 1


def mix_seed(root: int, *keys: int) -> int:
    """Fold integer ``keys`` into ``root`` with the splitmix64 finalizer."""
    x = int(root) & MASK64
    for k in keys:
        x = (x + 0x9E3779B97F4A7C15 + (int(k) & MASK64)) & MASK64
        x ^= x >> 30
        x = (x * 0xBF58476D1CE4E5B9) & MASK64
        x ^= x >> 27
        x = (x * 0x94D049BB133111EB) & MASK64
        x ^= x >> 31
    return x


def resolve_graph(source: str, mode: str = "abs") -> WeightedGraph:
    """``swissroll[:n[,k]]``, a Matrix Market path, or a dataset name."""
    m = re.fullmatch(r"swissroll(?::(\d+)(?:,(\d+))?)?", source)
    if m:
        n = int(m.group(1) or 1000)
        k = int(m.group(2) or 10)
        return synthetic_swissroll(n, k)
    if os.path.exists(source):
        return load_matrix_market(source, mode=mode)
    return load_dataset(source)


# --------------------------------------------------------------------------
# signals and noise
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SignalSpec:
    """Signal ``f_{i-j}`` spanned by eigenvectors ``i..j`` (1-based, decreasing eigenvalues)."""

    i: int
    j: int
    seed: int = 0
    unit_norm: bool = True

    @property
    def label(self) -> str:
        return f"f{self.i}-{self.j}"

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "SignalSpec":
        m = re.fullmatch(r"f?(\d+)-(\d+)", text.strip())
        if not m:
            raise ValueError(f"bad signal range '{text}', expected i-j")
        return cls(int(m.group(1)), int(m.group(2)), seed)


def generate_signal(eig: EigenSystem, spec: SignalSpec) -> np.ndarray:
    """Normalized random combination of the eigenvectors ``spec.i..spec.j``."""
    if eig.n > DENSE_CAP:
        raise DenseCapError(f"n={eig.n} exceeds the dense cap {DENSE_CAP}")
    if not 1 <= spec.i <= spec.j <= eig.n:
        raise ValueError(f"need 1 <= i <= j <= n={eig.n}, got {spec.i}-{spec.j}")
    rng = np.random.default_rng(spec.seed)
    coef = rng.standard_normal(spec.j - spec.i + 1)
    f = eig.eigenvectors[:, spec.i - 1:spec.j] @ coef
    if spec.unit_norm:
        f = f / np.linalg.norm(f)
    return f


def add_noise(f, sigma: float, seed=None) -> np.ndarray:
    """``f + xi`` with i.i.d. ``N(0, sigma^2)`` entries."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    f = np.asarray(f, dtype=float)
    if sigma == 0:
        return f.copy()
    return f + sigma * np.random.default_rng(seed).standard_normal(f.shape)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_rows(path, header: Sequence[str], rows) -> str:
    """Write CSV rows (floats in round-trip form); returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


# --------------------------------------------------------------------------
# noise-level estimation sweep
# --------------------------------------------------------------------------

NOISE_HEADER = ["sigma", "K", "r", "rep", "sigma_med", "sigma_mean"]


def run_noise_estimation(
    L, eig: EigenSystem, signal: SignalSpec, sigmas: Sequence[float],
    K_grid: Sequence[int] = (5, 10, 20, 30, 40, 50), r_grid: Sequence[int] = (1, 2),
    reps: int = 10, seed: int = 0, N: int = 200, n_H: int = 50, out=None,
) -> list:
    """Noise-level estimates for every ``(sigma, K, r, rep)``.

    Counts and signal moments are computed once per graph and noisy signal,
    then reused for every ``K``. Estimates that are undefined for a cell
    (``r > K/2``, too few intervals for the median) are reported as ``nan``.
    For ``K < 3`` the median is taken over whatever intervals exist.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    f = generate_signal(eig, signal)
    mom = probe_moments(L, N, n_H, mix_seed(seed, 0))
    parts = []
    for K in K_grid:
        P = regular_partition(L.lambda_max, int(K))
        parts.append(P.with_counts(counts_from_moments(mom, P), "estimated"))
    rows = []
    for si, sigma in enumerate(sigmas):
        noisy = np.stack(
            [add_noise(f, sigma, mix_seed(seed, 1, si, rep)) for rep in range(reps)], axis=1
        )
        smom = signal_moments(L, noisy, N)
        for P in parts:
            st = BlockStats(energies_from_moments(smom, P, L.lambda_max), P.counts)
            try:
                med = sigma_med(st, min_intervals=1 if P.K < 3 else 3)
            except DenoiseError:
                med = np.full(reps, np.nan)
            for r in r_grid:
                try:
                    mean = sigma_mean(st, int(r))
                except DenoiseError:
                    mean = np.full(reps, np.nan)
                for rep in range(reps):
                    rows.append([float(sigma), P.K, int(r), rep, float(med[rep]), float(mean[rep])])
    write_rows(out, NOISE_HEADER, rows)
    return rows


# --------------------------------------------------------------------------
# denoising benchmark
# --------------------------------------------------------------------------

BENCH_HEADER = ["method", "signal", "sigma", "snr_in", "best_snr", "mean_snr",
                "t1", "t2", "support_size"]


def run_denoise_benchmark(
    L, eig: Optional[EigenSystem], signals: Sequence[SignalSpec], sigmas: Sequence[float],
    K: int = 22, reps: int = 10, seed: int = 0, methods=("PF", "LLet", "LLet+PF"),
    alpha: float = 0.001, N: int = 200, n_H: int = 50, grid_size: int = 20, out=None,
) -> list:
    """``M_D`` (best over reps) and ``mu_D`` (mean) of grid-searched SNRs.

    For every repetition each method reports its best SNR over the threshold
    grid (:func:`threshold_grid` of the true ``sigma``); the support test
    uses ``sigma_med``. ``t1``, ``t2`` and ``support_size`` describe the
    repetition achieving ``M_D``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if eig is None:
        raise DenseCapError(
            f"signal synthesis and the PF baselines need the dense eigendecomposition (n={L.n})"
        )
    methods = list(methods)
    frame = parseval_filters(L.lambda_max)
    P = regular_partition(L.lambda_max, K)
    P = P.with_counts(counts_from_moments(probe_moments(L, N, n_H, mix_seed(seed, 0)), P), "estimated")
    masks = interval_masks(eig, P)
    rows = []
    for spec in signals:
        f = generate_signal(eig, spec)
        for si, sigma in enumerate(sigmas):
            T = threshold_grid(sigma, grid_size)
            res = {m: [] for m in ["SNR_in"] + methods}
            for rep in range(reps):
                noisy = add_noise(f, sigma, mix_seed(seed, 2, spec.i, spec.j, si, rep))
                res["SNR_in"].append((float(snr_db(f, noisy)), np.nan, np.nan, 0))
                if not any(m in methods for m in ("LLet", "LLet+PF")):
                    sel = np.array([], int)
                else:
                    st = BlockStats(energies_from_moments(signal_moments(L, noisy, N), P,
                                                          L.lambda_max), P.counts)
                    sup = support_from_stats(st, float(sigma_med(st)), alpha)
                    sel = sup.selected
                    A, B = llet_components(L, frame, P, noisy, sel, T, T, N)
                if "LLet" in methods:
                    s, a, b = best_pair(f, A, B)
                    res["LLet"].append((s, T[a], T[b], sel.size))
                if "PF" in methods:
                    snr = snr_db(f, pf_component(eig, frame, noisy, T))
                    a = int(np.argmax(snr))
                    res["PF"].append((float(snr[a]), T[a], np.nan, 0))
                if "LLet+PF" in methods:
                    mask = np.zeros(eig.n, bool)
                    for k in sel:
                        mask |= masks[k]
                    AI = pf_component(eig, frame, noisy, T, mask)
                    s, a, b = best_pair(f, AI, B)
                    res["LLet+PF"].append((s, T[a], T[b], sel.size))
            for m, vals in res.items():
                snrs = np.array([v[0] for v in vals])
                best = int(np.argmax(snrs))
                snr_in = float(np.mean([v[0] for v in res["SNR_in"]]))
                rows.append([m, spec.label, float(sigma), snr_in, float(snrs[best]),
                             float(snrs.mean()), float(vals[best][1]), float(vals[best][2]),
                             int(vals[best][3])])
    write_rows(out, BENCH_HEADER, rows)
    return rows


# --------------------------------------------------------------------------
# entropy scan
# --------------------------------------------------------------------------

ENTROPY_HEADER = ["K", "entropy", "mre", "mre_kind", "elbow"]


def run_entropy_scan(
    L, K_grid: Sequence[int] = tuple(range(5, 55, 5)), N: int = 200, n_H: int = 50,
    seed: int = 0, gain: float = 0.05, eig: Optional[EigenSystem] = None, out=None,
) -> list:
    """Entropy and MRE per ``K`` (exact MRE with ``eig``, probe proxy otherwise)."""
    sel = select_partition(L, K_grid, N, n_H, mix_seed(seed, 0), gain, eig=eig)
    exact = sel.mre_exact is not None
    rows = []
    for i, K in enumerate(sel.K_grid):
        mre = sel.mre_exact[i] if exact else sel.mre_proxy[i]
        rows.append([int(K), float(sel.entropy[i]), float(mre), "exact" if exact else "proxy",
                     int(K == sel.K_elbow)])
    write_rows(out, ENTROPY_HEADER, rows)
    return rows
