"""
Counting eigenvalues without diagonalizing
==========================================

Stochastic interval counts on a swiss-roll graph, checked against the dense
spectrum, and the entropy curve used to pick the number of intervals.
"""

import numpy as np

from loclets.graph import dense_eigendecomposition, laplacian, synthetic_swissroll
from loclets.spectrum import (
    exact_interval_counts,
    hutchinson_interval_counts,
    mean_relative_error,
    regular_partition,
    select_partition,
)

# a k-nearest-neighbour graph on 1000 points of a swiss roll
g = synthetic_swissroll(1000, 10, seed=1)
L = laplacian(g)
print(f"n={L.n}, edges={g.n_edges}, lambda_max bound={L.lambda_max:.3f}")

# split [0, lambda_max] into 22 equal intervals and count eigenvalues in each
# from 50 Rademacher probes and degree-200 Chebyshev projectors
P = regular_partition(L.lambda_max, 22)
est = hutchinson_interval_counts(L, P, N=200, n_H=50, seed=0)

# the dense spectrum is affordable at this size, so compare
eig = dense_eigendecomposition(L)
exact = exact_interval_counts(eig, P)
print("interval  estimated  exact")
for k, (a, b) in enumerate(P.intervals):
    print(f"[{a:6.2f}, {b:6.2f})  {est[k]:8.1f}  {exact[k]:5.0f}")
print(f"mean relative error: {mean_relative_error(est, exact):.3f}")

# entropy of the counts as K grows; the elbow is where the gain drops below 5%
sel = select_partition(L, K_grid=range(5, 55, 5), seed=0, eig=eig)
for K, E, mre in zip(sel.K_grid, sel.entropy, sel.mre_exact):
    mark = "  <- elbow" if K == sel.K_elbow else ""
    print(f"K={K:2d}  entropy={E:.3f}  MRE={mre:.3f}{mark}")
