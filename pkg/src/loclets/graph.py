"""Weighted graphs, combinatorial Laplacians and a dense eigen-oracle.

Everything downstream works with a :class:`LaplacianOperator`, a thin wrapper
around a symmetric CSR matrix ``L = D - W`` that also carries an upper bound
``lambda_max`` on its spectrum (needed to map ``sp(L)`` into ``[-1, 1]`` for
Chebyshev expansions).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.spatial import cKDTree

#: Default largest size for which :func:`dense_eigendecomposition` is allowed.
DENSE_CAP = 4000

EPS_FLOOR = 1e-12


class GraphError(ValueError):
    """Invalid graph data or parameters."""


class MatrixMarketError(GraphError):
    """Malformed Matrix Market input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class DenseCapError(RuntimeError):
    """Dense eigendecomposition refused because the graph is too large."""


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph stored as an upper-triangular edge list.

    Each stored edge ``(i[e], j[e], w[e])`` with ``i < j`` stands for both
    directions. Self-loops are not representable.
    """

    n: int
    i: np.ndarray
    j: np.ndarray
    w: np.ndarray
    name: str = ""

    def __post_init__(self):
        i = np.asarray(self.i, dtype=np.int64)
        j = np.asarray(self.j, dtype=np.int64)
        w = np.asarray(self.w, dtype=float)
        if not (i.shape == j.shape == w.shape) or i.ndim != 1:
            raise GraphError("edge arrays must be 1-d and of equal length")
        if self.n < 1:
            raise GraphError("graph must have at least one vertex")
        if i.size:
            if np.any(i >= j):
                raise GraphError("edges must satisfy i < j (no self-loops)")
            if i.min() < 0 or j.max() >= self.n:
                raise GraphError("vertex index out of range")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise GraphError("edge weights must be finite and non-negative")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "w", w)

    @property
    def n_edges(self) -> int:
        return int(self.i.size)

    @property
    def edges(self) -> list:
        return list(zip(self.i.tolist(), self.j.tolist(), self.w.tolist()))

    def adjacency(self) -> sp.csr_matrix:
        W = sp.coo_matrix((self.w, (self.i, self.j)), shape=(self.n, self.n))
        return (W + W.T).tocsr()

    def is_connected(self) -> bool:
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        return ncomp == 1

    @classmethod
    def from_adjacency(cls, W, name: str = "") -> "WeightedGraph":
        """Build from a square (dense or sparse) weight matrix.

        The matrix is symmetrized as ``(W + W.T) / 2`` and its diagonal dropped.
        """
        W = sp.coo_matrix(W)
        if W.shape[0] != W.shape[1]:
            raise GraphError(f"adjacency must be square, got {W.shape}")
        W = ((W + W.T) * 0.5).tocoo()
        upper = W.row < W.col
        Wu = sp.coo_matrix(
            (W.data[upper], (W.row[upper], W.col[upper])), shape=W.shape
        ).tocsr()
        Wu.sum_duplicates()
        Wu.eliminate_zeros()
        Wu = Wu.tocoo()
        return cls(W.shape[0], Wu.row, Wu.col, Wu.data, name=name)


@dataclass(frozen=True)
class LaplacianOperator:
    """Sparse symmetric combinatorial Laplacian ``L = D - W``."""

    matrix: sp.csr_matrix
    lambda_max: float
    name: str = ""

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def shape(self):
        return self.matrix.shape

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def __matmul__(self, x):
        return self.matrix @ x

    def with_bound(self, lambda_max: float) -> "LaplacianOperator":
        return LaplacianOperator(self.matrix, float(lambda_max), self.name)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class EigenSystem:
    """Full eigendecomposition, eigenvalues in DECREASING order.

    ``eigenvectors[:, l]`` is the unit eigenvector for ``eigenvalues[l]``; with
    the decreasing convention the last column belongs to the smallest
    eigenvalue (0 for a Laplacian).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_1(self) -> float:
        return float(self.eigenvalues[0])

    def gft(self, f: np.ndarray) -> np.ndarray:
        """Fourier coefficients ``<f, chi_l>`` (same order as eigenvalues)."""
        return self.eigenvectors.T @ f

    def igft(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ coeffs

    def apply(self, g: Callable[[np.ndarray], np.ndarray], f: np.ndarray) -> np.ndarray:
        """Exact ``g(L) f``."""
        gl = np.asarray(g(self.eigenvalues), dtype=float)
        fh = self.gft(f)
        if fh.ndim == 2:
            return self.igft(gl[:, None] * fh)
        return self.igft(gl * fh)

    def interval_mask(self, a: float, b: float, closed: bool = False) -> np.ndarray:
        """Boolean mask of eigenvalues in ``[a, b)`` (``[a, b]`` if closed)."""
        lam = self.eigenvalues
        if closed:
            return (lam >= a) & (lam <= b)
        return (lam >= a) & (lam < b)

    def project(self, mask: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Exact spectral projection of ``f`` onto the eigenvectors in ``mask``."""
        U = self.eigenvectors[:, mask]
        return U @ (U.T @ f)


def laplacian(g: WeightedGraph, lambda_max: Optional[float] = None) -> LaplacianOperator:
    """Assemble ``L = D - W``; ``lambda_max`` defaults to :func:`spectral_upper_bound`."""
    W = g.adjacency()
    deg = np.asarray(W.sum(axis=1)).ravel()
    L = (sp.diags(deg) - W).tocsr()
    L.sum_duplicates()
    L.sort_indices()
    op = LaplacianOperator(L, 0.0, g.name)
    if lambda_max is None:
        lambda_max = spectral_upper_bound(op)
    return op.with_bound(lambda_max)


def laplacian_from_matrix(M, name: str = "") -> LaplacianOperator:
    """Wrap a matrix that already is a graph Laplacian.

    The matrix must be symmetric, have non-positive off-diagonal entries and
    zero row sums (to a relative 1e-10).
    """
    M = sp.csr_matrix(M, dtype=float)
    if M.shape[0] != M.shape[1]:
        raise GraphError(f"Laplacian must be square, got {M.shape}")
    if abs(M - M.T).max() > 1e-12 * max(abs(M).max(), 1.0):
        raise GraphError("Laplacian must be symmetric")
    off = M - sp.diags(M.diagonal())
    if off.nnz and off.data.max() > 0:
        raise GraphError("Laplacian off-diagonal entries must be non-positive")
    rows = np.asarray(M.sum(axis=1)).ravel()
    scale = max(abs(M.diagonal()).max(), 1.0)
    if np.abs(rows).max() > 1e-10 * scale:
        raise GraphError("Laplacian rows must sum to zero")
    op = LaplacianOperator(M, 0.0, name)
    return op.with_bound(spectral_upper_bound(op))


def gershgorin_bound(L: LaplacianOperator) -> float:
    """``max_i sum_j |L_ij|`` which for a Laplacian equals twice the max degree."""
    A = abs(L.matrix)
    return float(np.asarray(A.sum(axis=1)).max()) if L.nnz else 0.0


def spectral_upper_bound(
    L: LaplacianOperator,
    tol: float = 1e-8,
    safety: float = 1.01,
    seed: int = 0,
) -> float:
    """Upper bound ``gamma >= lambda_1``: Lanczos estimate inflated by ``safety``.

    The estimate is capped by the Gershgorin bound, which is also the fallback
    when ARPACK does not converge. Returns ``EPS_FLOOR`` for a zero matrix.
    """
    gersh = gershgorin_bound(L)
    if gersh <= 0.0:
        return EPS_FLOOR
    if L.n <= 16:
        mu = float(np.linalg.eigvalsh(L.matrix.toarray())[-1])
    else:
        v0 = np.random.default_rng(seed).standard_normal(L.n)
        try:
            mu = float(eigsh(L.matrix, k=1, which="LA", tol=tol, v0=v0,
                             return_eigenvectors=False)[0])
        except ArpackNoConvergence:
            return gersh
    if mu <= 0.0:
        return gersh
    return max(min(safety * mu, gersh), EPS_FLOOR)


def dense_eigendecomposition(L, cap: int = DENSE_CAP) -> EigenSystem:
    """Full eigendecomposition via LAPACK; refuses graphs larger than ``cap``."""
    M = L.matrix if isinstance(L, LaplacianOperator) else L
    n = M.shape[0]
    if n > cap:
        raise DenseCapError(
            f"dense eigendecomposition refused: n={n} exceeds cap={cap}"
        )
    A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    lam, U = np.linalg.eigh(A)
    return EigenSystem(lam[::-1].copy(), U[:, ::-1].copy())


# --------------------------------------------------------------------------
# Matrix Market I/O
# --------------------------------------------------------------------------

def _read_matrix_market(path):
    with open(path, "r") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixMarketError("empty file", 1, path)
    header = lines[0].strip().split()
    if len(header) < 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket banner", 1, path)
    obj, fmt, field_, symm = (h.lower() for h in header[1:5])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError("only 'matrix coordinate' files are supported", 1, path)
    if field_ not in ("real", "integer", "pattern"):
        raise MatrixMarketError(f"unsupported field '{field_}'", 1, path)
    if symm not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry '{symm}'", 1, path)

    k = 1
    while k < len(lines) and (lines[k].startswith("%") or not lines[k].strip()):
        k += 1
    if k == len(lines):
        raise MatrixMarketError("missing size line", k, path)
    try:
        nrows, ncols, nnz = (int(t) for t in lines[k].split()[:3])
    except ValueError:
        raise MatrixMarketError("malformed size line", k + 1, path) from None
    if nrows != ncols:
        raise MatrixMarketError(f"matrix is not square ({nrows}x{ncols})", k + 1, path)
    if nrows < 1:
        raise MatrixMarketError("empty matrix", k + 1, path)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz)
    e = 0
    for lineno in range(k + 1, len(lines)):
        text = lines[lineno].strip()
        if not text or text.startswith("%"):
            continue
        if e >= nnz:
            raise MatrixMarketError("more entries than declared", lineno + 1, path)
        parts = text.split()
        try:
            r, c = int(parts[0]), int(parts[1])
            if field_ != "pattern":
                vals[e] = float(parts[2])
        except (ValueError, IndexError):
            raise MatrixMarketError(f"cannot parse entry '{text}'", lineno + 1, path) from None
        if not (1 <= r <= nrows and 1 <= c <= ncols):
            raise MatrixMarketError(f"index ({r}, {c}) out of range", lineno + 1, path)
        rows[e], cols[e] = r - 1, c - 1
        e += 1
    if e != nnz:
        raise MatrixMarketError(f"expected {nnz} entries, found {e}", len(lines), path)

    M = sp.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols))
    if symm == "symmetric":
        off = rows != cols
        M = M + sp.coo_matrix((vals[off], (cols[off], rows[off])), shape=M.shape)
    return M.tocsr()


def load_matrix_market(path, mode: str = "abs") -> WeightedGraph:
    """Read a Matrix Market coordinate file as a weighted graph.

    Parameters
    ----------
    path : str or path-like
    mode : {'abs', 'raw', 'laplacian-direct'}
        ``'abs'`` uses ``|value|`` of off-diagonal entries as edge weights;
        ``'raw'`` requires them to be non-negative already;
        ``'laplacian-direct'`` reads the file as a Laplacian (weights are
        ``-L_ij``) and requires diagonal dominance.
    """
    M = _read_matrix_market(path)
    name = os.path.splitext(os.path.basename(str(path)))[0]
    if mode == "laplacian-direct":
        diag = M.diagonal()
        off = M - sp.diags(diag)
        offsum = np.asarray(abs(off).sum(axis=1)).ravel()
        if np.any(diag < offsum * (1 - 1e-12)):
            raise GraphError(f"{path}: matrix is not diagonally dominant")
        W = -off
        if W.nnz and W.data.min() < 0:
            raise GraphError(f"{path}: positive off-diagonal entries in Laplacian")
    elif mode == "abs":
        W = abs(M)
    elif mode == "raw":
        W = M.copy()
        if W.nnz and W.data.min() < 0:
            raise GraphError(f"{path}: negative entries; use mode='abs'")
    else:
        raise GraphError(f"unknown mode '{mode}'")
    W = W.tolil()
    W.setdiag(0)
    W = _one_sided_symmetrize(W.tocsr())
    g = WeightedGraph.from_adjacency(W, name=name)
    if g.n_edges == 0:
        raise GraphError(f"{path}: graph has no edges")
    return g


def _one_sided_symmetrize(W: sp.csr_matrix) -> sp.csr_matrix:
    """Average ``W_ij`` and ``W_ji`` where both are stored, else keep the one present.

    A general file that lists each edge once must not lose half its weight.
    """
    P = (W != 0).astype(float)
    cnt = P + P.T
    S = (W + W.T).tocsr()
    cnt = cnt.tocsr()
    S.sort_indices()
    cnt.sort_indices()
    # S and cnt share the same sparsity pattern
    S.data = S.data / np.where(cnt.data > 0, cnt.data, 1.0)
    return S


def write_matrix_market(path, g: WeightedGraph, comment: str = "") -> None:
    """Write the adjacency of ``g`` as a symmetric coordinate real file."""
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        for line in comment.splitlines():
            fh.write(f"%{line}\n")
        fh.write(f"{g.n} {g.n} {g.n_edges}\n")
        # lower triangle, 1-based
        for a, b, w in zip(g.j + 1, g.i + 1, g.w):
            fh.write(f"{a} {b} {float(w)!r}\n")


def load_dataset(name: str) -> WeightedGraph:
    """Load a named graph.

    ``$LOCLETS_<NAME>`` (e.g. ``LOCLETS_SI2``) may point at a Matrix Market
    file; otherwise the package data directory is searched (it ships
    ``minnesota``).
    """
    env = os.environ.get(f"LOCLETS_{name.upper()}")
    if env:
        return load_matrix_market(env)
    here = os.path.join(os.path.dirname(__file__), "data", f"{name}.mtx")
    if not os.path.exists(here):
        raise GraphError(
            f"no dataset named '{name}' (bundle it as data/{name}.mtx "
            f"or set LOCLETS_{name.upper()})"
        )
    return load_matrix_market(here)


# --------------------------------------------------------------------------
# Synthetic graphs
# --------------------------------------------------------------------------

def swissroll_points(n: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = 1.5 * np.pi * (1 + 2 * rng.uniform(size=n))
    h = 21.0 * rng.uniform(size=n)
    return np.column_stack((t * np.cos(t), h, t * np.sin(t)))


def knn_graph(points: np.ndarray, k_nn: int, name: str = "") -> WeightedGraph:
    """Symmetric k-NN graph with Gaussian weights ``exp(-d^2 / 2 tau^2)``.

    ``tau`` is the mean distance to the ``k_nn`` nearest neighbours.
    """
    n = points.shape[0]
    if k_nn < 1 or n < k_nn + 1:
        raise GraphError(f"need n >= k_nn + 1 and k_nn >= 1 (n={n}, k_nn={k_nn})")
    dist, idx = cKDTree(points).query(points, k=k_nn + 1)
    dist, idx = dist[:, 1:], idx[:, 1:]
    tau = float(dist.mean())
    if tau <= 0:
        raise GraphError("degenerate point cloud (zero neighbour distances)")
    rows = np.repeat(np.arange(n), k_nn)
    cols = idx.ravel()
    d = dist.ravel()
    a, b = np.minimum(rows, cols), np.maximum(rows, cols)
    keep = a != b
    key = a[keep] * n + b[keep]
    key, first = np.unique(key, return_index=True)
    w = np.exp(-d[keep][first] ** 2 / (2 * tau**2))
    return WeightedGraph(n, key // n, key % n, w, name=name)


def synthetic_swissroll(n: int = 1000, k_nn: int = 10, seed=1) -> WeightedGraph:
    """k-NN graph of ``n`` points sampled on the swiss roll surface."""
    if n < k_nn + 1:
        raise GraphError(f"need n >= k_nn + 1 (n={n}, k_nn={k_nn})")
    return knn_graph(swissroll_points(n, seed), k_nn, name=f"swissroll{n}")


def random_graph(n: int, p: float = 0.05, seed=None, weights: str = "uniform") -> WeightedGraph:
    """Connected Erdos-Renyi graph: a random Hamiltonian path plus G(n, p) edges.

    ``weights`` is ``'uniform'`` (U(0.5, 1.5)) or ``'unit'``.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    pi, pj = perm[:-1], perm[1:]
    iu, ju = np.triu_indices(n, k=1)
    pick = rng.uniform(size=iu.size) < p
    a = np.concatenate([np.minimum(pi, pj), iu[pick]])
    b = np.concatenate([np.maximum(pi, pj), ju[pick]])
    key = np.unique(a * n + b)
    if weights == "uniform":
        w = rng.uniform(0.5, 1.5, size=key.size)
    elif weights == "unit":
        w = np.ones(key.size)
    else:
        raise GraphError(f"unknown weights '{weights}'")
    return WeightedGraph(n, key // n, key % n, w, name=f"random{n}")
