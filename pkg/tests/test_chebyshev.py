import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loclets.chebyshev import (
    ChebyshevFilter,
    FilterBank,
    FilterError,
    apply_filter,
    apply_filter_bank,
    apply_filter_bank_adjoint,
    chebyshev_coefficients,
    indicator_coefficients,
    jackson_multipliers,
    projector_filter,
)
from loclets.graph import WeightedGraph, dense_eigendecomposition, laplacian, random_graph
from loclets.spectrum import regular_partition


def expm(lam):
    return np.exp(-lam)


class TestCoefficients:
    def test_constant(self):
        for N in (1, 5, 50):
            c = chebyshev_coefficients(lambda lam: np.ones_like(lam), N, 3.0).coeffs
            assert c[0] == pytest.approx(1.0, abs=1e-14)
            np.testing.assert_allclose(c[1:], 0.0, atol=1e-14)

    def test_linear_exact(self):
        filt = chebyshev_coefficients(lambda lam: lam, 1, 2.0)
        x = np.linspace(0, 2, 101)
        np.testing.assert_allclose(filt(x), x, atol=1e-14)

    def test_exp_accuracy(self):
        filt = chebyshev_coefficients(expm, 30, 4.0)
        x = np.linspace(0, 4, 1000)
        assert np.abs(filt(x) - np.exp(-x)).max() <= 1e-10

    def test_error_decreases_with_N(self):
        x = np.linspace(0, 10, 1000)
        errs = [np.abs(chebyshev_coefficients(lambda l: np.sqrt(l), N, 10.0)(x) - np.sqrt(x)).max()
                for N in (50, 100, 200)]
        assert errs[0] > errs[1] > errs[2]

    def test_non_finite_filter(self):
        with pytest.raises(FilterError, match="not finite"):
            chebyshev_coefficients(lambda lam: np.where(lam > 0.5, np.nan, lam), 10, 1.0)

    def test_bad_degree(self):
        with pytest.raises(FilterError):
            chebyshev_coefficients(expm, 0, 1.0)

    def test_jackson_multipliers(self):
        g = jackson_multipliers(40)
        assert g[0] == pytest.approx(1.0)
        assert np.all(np.diff(g) < 0)
        assert 0 < g[-1] < 0.01

    def test_indicator_matches_quadrature(self):
        # closed form against the Gauss-Legendre route
        a, b, N, lmax = 0.7, 2.1, 60, 4.0
        exact = indicator_coefficients(a, b, N, lmax)
        quad = chebyshev_coefficients(lambda lam: np.ones_like(lam), N, lmax, support=(a, b)).coeffs
        np.testing.assert_allclose(quad, exact, atol=1e-12)

    def test_support_quadrature_with_kinks(self):
        # g = |lam - 1| restricted to [0.5, 3]: integrals of T_i against a kinked integrand
        g = lambda lam: np.abs(lam - 1.0)
        N, lmax = 40, 4.0
        c = chebyshev_coefficients(g, N, lmax, support=(0.5, 3.0), breakpoints=[1.0]).coeffs
        from scipy.integrate import quad

        def ref(i):
            def f(th):
                lam = 0.5 * lmax * (np.cos(th) + 1)
                return g(lam) * np.cos(i * th) if 0.5 <= lam < 3.0 else 0.0
            th_pts = np.arccos(2 * np.array([0.5, 1.0, 3.0]) / lmax - 1)
            v = quad(f, 0, np.pi, points=th_pts, limit=400, epsabs=1e-13)[0]
            return v / np.pi if i == 0 else 2 * v / np.pi

        np.testing.assert_allclose(c[:8], [ref(i) for i in range(8)], atol=1e-10)


class TestApply:
    def test_identity(self, tiny, rng):
        _, L, _ = tiny
        f = rng.standard_normal(L.n)
        filt = chebyshev_coefficients(lambda lam: np.ones_like(lam), 20, L.lambda_max)
        np.testing.assert_allclose(apply_filter(L, filt, f), f, atol=1e-12)

    def test_linear_is_L(self, tiny, rng):
        _, L, _ = tiny
        f = rng.standard_normal(L.n)
        filt = chebyshev_coefficients(lambda lam: lam, 3, L.lambda_max)
        np.testing.assert_allclose(apply_filter(L, filt, f), L @ f, atol=1e-10)

    def test_exp_against_oracle(self, tiny, rng):
        _, L, eig = tiny
        f = rng.standard_normal(L.n)
        filt = chebyshev_coefficients(expm, 100, L.lambda_max)
        out = apply_filter(L, filt, f)
        assert np.abs(out - eig.apply(expm, f)).max() <= 1e-8

    def test_length_mismatch(self, tiny):
        _, L, _ = tiny
        filt = chebyshev_coefficients(expm, 5, L.lambda_max)
        with pytest.raises(FilterError, match="length"):
            apply_filter(L, filt, np.zeros(L.n + 1))

    def test_block_of_signals(self, tiny, rng):
        _, L, _ = tiny
        F = rng.standard_normal((L.n, 3))
        filt = chebyshev_coefficients(expm, 40, L.lambda_max)
        out = apply_filter(L, filt, F)
        for c in range(3):
            np.testing.assert_allclose(out[:, c], apply_filter(L, filt, F[:, c]), atol=1e-13)

    @settings(max_examples=20, deadline=None)
    @given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**31))
    def test_linearity(self, tiny, a, b, seed):
        _, L, _ = tiny
        r = np.random.default_rng(seed)
        f, h = r.standard_normal((2, L.n))
        filt = chebyshev_coefficients(expm, 30, L.lambda_max)
        lhs = apply_filter(L, filt, a * f + b * h)
        rhs = a * apply_filter(L, filt, f) + b * apply_filter(L, filt, h)
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * scale + 1e-300

    def test_error_decreases_with_N_on_graphs(self, tiny, small, rng):
        for _, L, eig in (tiny, small):
            f = rng.standard_normal(L.n)
            g = lambda lam: np.exp(-5 * lam / L.lambda_max) * np.sqrt(np.maximum(lam, 0.0))
            ref = eig.apply(g, f)
            errs = [np.linalg.norm(apply_filter(L, chebyshev_coefficients(g, N, L.lambda_max), f) - ref)
                    for N in (50, 100, 200)]
            assert errs[0] > errs[1] > errs[2]


class TestBank:
    def test_copies(self, tiny, rng):
        _, L, _ = tiny
        f = rng.standard_normal(L.n)
        filt = chebyshev_coefficients(expm, 50, L.lambda_max)
        outs = apply_filter_bank(L, [filt] * 4, f)
        for o in outs:
            np.testing.assert_array_equal(o, outs[0])

    def test_bank_equals_single_bitwise(self, small, rng):
        _, L, _ = small
        f = rng.standard_normal(L.n)
        filters = [projector_filter(iv, 200, L.lambda_max)
                   for iv in regular_partition(L.lambda_max, 7).intervals]
        outs = apply_filter_bank(L, filters, f)
        for filt, o in zip(filters, outs):
            np.testing.assert_array_equal(o, apply_filter(L, filt, f))

    def test_indicator_bank_sums_to_damped_identity(self, small, rng):
        _, L, _ = small
        f = rng.standard_normal(L.n)
        P = regular_partition(L.lambda_max, 10)
        outs = apply_filter_bank(L, [projector_filter(iv, 200, L.lambda_max) for iv in P.intervals], f)
        one = chebyshev_coefficients(lambda lam: np.ones_like(lam), 200, L.lambda_max, "jackson")
        np.testing.assert_allclose(sum(outs), apply_filter(L, one, f), atol=1e-11)
        np.testing.assert_allclose(sum(outs), f, atol=1e-11)

    def test_coefficient_sum_is_bitwise(self, small, rng):
        _, L, _ = small
        f = rng.standard_normal(L.n)
        g = lambda lam: np.exp(-lam)
        P = regular_partition(L.lambda_max, 5)
        parts = [chebyshev_coefficients(g, 80, L.lambda_max, support=iv) for iv in P.intervals]
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        whole = ChebyshevFilter(total.coeffs, L.lambda_max)
        np.testing.assert_array_equal(apply_filter(L, whole, f), apply_filter(L, total, f))

    def test_damped_pieces_sum_within_tolerance(self, small, rng):
        _, L, _ = small
        f = rng.standard_normal(L.n)
        g = lambda lam: np.exp(-lam / 4)
        P = regular_partition(L.lambda_max, 8)
        pieces = []
        for a, b in P.intervals:
            ind = ChebyshevFilter(
                indicator_coefficients(a, b, 200, L.lambda_max) * jackson_multipliers(200),
                L.lambda_max,
            )
            pieces.append(chebyshev_coefficients(lambda lam: g(lam) * ind(lam), 200, L.lambda_max))
        sep = sum(apply_filter_bank(L, pieces, f))
        whole = apply_filter(L, chebyshev_coefficients(g, 200, L.lambda_max), f)
        assert np.linalg.norm(sep - whole) <= 2e-3 * np.linalg.norm(f)

    def test_incompatible_filters(self):
        with pytest.raises(FilterError, match="share"):
            FilterBank([ChebyshevFilter(np.ones(3), 1.0), ChebyshevFilter(np.ones(4), 1.0)])

    def test_adjoint(self, small, rng):
        _, L, _ = small
        bank = FilterBank([chebyshev_coefficients(lambda lam, s=s: np.exp(-s * lam), 60, L.lambda_max)
                           for s in (0.1, 0.5, 2.0)])
        f = rng.standard_normal(L.n)
        c = rng.standard_normal((3, L.n))
        lhs = sum(o @ ck for o, ck in zip(apply_filter_bank(L, bank, f), c))
        rhs = f @ apply_filter_bank_adjoint(L, bank, c)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)

    def test_bank_timing(self):
        g = random_graph(3000, p=0.004, seed=2)
        L = laplacian(g)
        f = np.random.default_rng(0).standard_normal(L.n)
        P = regular_partition(L.lambda_max, 20)
        bank = FilterBank([projector_filter(iv, 200, L.lambda_max) for iv in P.intervals])

        def best(fn, reps=5):
            ts = []
            for _ in range(reps):
                t0 = time.perf_counter()
                fn()
                ts.append(time.perf_counter() - t0)
            return min(ts)

        single = best(lambda: apply_filter(L, bank[0], f))
        multi = best(lambda: apply_filter_bank(L, bank, f))
        assert multi <= 1.5 * single, f"bank {multi:.4f}s vs single {single:.4f}s"


class TestProjector:
    def test_full_interval(self, small, rng):
        _, L, _ = small
        f = rng.standard_normal(L.n)
        out = apply_filter(L, projector_filter((0.0, L.lambda_max), 200, L.lambda_max), f)
        assert np.linalg.norm(out - f) <= 1e-3 * np.linalg.norm(f)

    def test_disjoint_leakage(self, small, rng):
        _, L, _ = small
        f = rng.standard_normal(L.n)
        third = L.lambda_max / 3
        a = apply_filter(L, projector_filter((0.0, third), 200, L.lambda_max), f)
        b = apply_filter(L, projector_filter((2 * third, L.lambda_max), 200, L.lambda_max), f)
        assert abs(a @ b) <= 1e-2 * (f @ f)

    def test_low_end_against_oracle(self, rng):
        # ten weakly linked cliques: ten eigenvalues near 0, then a wide gap
        blocks = np.kron(np.eye(10), np.ones((20, 20)) - np.eye(20))
        chain = np.zeros((200, 200))
        for c in range(9):
            chain[20 * c, 20 * (c + 1)] = chain[20 * (c + 1), 20 * c] = 0.05
        L = laplacian(WeightedGraph.from_adjacency(blocks + chain))
        eig = dense_eigendecomposition(L)
        lam = eig.eigenvalues[::-1]
        assert lam[10] - lam[9] >= L.lambda_max / 50
        cut = 0.5 * (lam[9] + lam[10])
        f = rng.standard_normal(L.n)
        out = apply_filter(L, projector_filter((0.0, cut), 500, L.lambda_max), f)
        ref = eig.project(eig.eigenvalues < cut, f)
        assert np.linalg.norm(out - ref) <= 5e-3 * np.linalg.norm(f)

    def test_empty_interval(self):
        with pytest.raises(FilterError):
            projector_filter((1.0, 1.0), 10, 2.0)
