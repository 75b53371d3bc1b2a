import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loclets.stats import (
    StatsError,
    chi2_cdf,
    chi2_difference_quantile,
    chi2_quantile,
    chi2_sf,
    gaussian_tail_threshold,
    mean_concentration_bound,
    median_concentration_bound,
    median_deviation_levels,
    support_detection_threshold,
)


def mp_sf(x, k):
    return float(mpmath.gammainc(mpmath.mpf(k) / 2, mpmath.mpf(x) / 2, mpmath.inf, regularized=True))


class TestChi2:
    def test_sf_at_zero(self):
        for df in (0.5, 1, 2.5, 50):
            assert chi2_sf(0.0, df) == 1.0

    def test_closed_form_df2(self):
        assert chi2_sf(2.0, 2) == pytest.approx(np.exp(-1.0), rel=1e-15)
        x = np.linspace(0, 30, 31)
        np.testing.assert_allclose(chi2_sf(x, 2), np.exp(-x / 2), rtol=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(x=st.floats(0, 400), df=st.floats(0.5, 300))
    def test_sf_against_mpmath(self, x, df):
        ref = mp_sf(x, df)
        got = float(chi2_sf(x, df))
        assert got == pytest.approx(ref, rel=1e-9, abs=1e-300)

    @pytest.mark.parametrize("df", [1, 2.5, 50])
    def test_quantile_roundtrip(self, df):
        for p in (1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999):
            x = chi2_quantile(p, df)
            assert chi2_cdf(x, df) == pytest.approx(p, rel=1e-9)
            assert 1 - chi2_sf(x, df) == pytest.approx(p, abs=1e-12)

    def test_preconditions(self):
        with pytest.raises(StatsError):
            chi2_sf(-1.0, 2)
        with pytest.raises(StatsError):
            chi2_sf(1.0, 0)
        with pytest.raises(StatsError):
            chi2_quantile(1.0, 3)
        with pytest.raises(StatsError):
            chi2_quantile(0.5, -1)


class TestGaussianTail:
    def test_formula(self):
        assert gaussian_tail_threshold(0.4, 1.0) == pytest.approx(np.sqrt(-2 * np.log(0.1)))
        assert gaussian_tail_threshold(0.4, 1.0) == pytest.approx(2.14597, abs=1e-5)
        assert gaussian_tail_threshold(0.4, 3.0) == pytest.approx(3 * 2.14597, abs=1e-4)

    @pytest.mark.parametrize("alpha", [1.0, 4.0, 0.0])
    def test_alpha_range(self, alpha):
        with pytest.raises(StatsError):
            gaussian_tail_threshold(alpha, 1.0)

    def test_coverage(self):
        # <f_k, xi> ~ N(0, sigma^2 ||f_k||^2)
        rng = np.random.default_rng(0)
        fk = rng.standard_normal(30)
        sigma, alpha = 0.7, 0.05
        t = gaussian_tail_threshold(alpha, sigma)
        xi = sigma * rng.standard_normal((10**5, 30))
        freq = np.mean(np.abs(xi @ fk) >= t * np.linalg.norm(fk))
        assert freq <= alpha


class TestDifferenceQuantile:
    def test_symmetric_median(self):
        q = chi2_difference_quantile(0.5, 8, 8, n_samples=10**5, seed=1)
        # sd of the difference is 4; sd of the sample median ~ 1.25 * 4 / sqrt(n)
        assert abs(q) <= 3 * 1.2533 * 4 / np.sqrt(10**5)

    def test_reproducible(self):
        a = chi2_difference_quantile(0.975, 10, 10, seed=7)
        b = chi2_difference_quantile(0.975, 10, 10, seed=7)
        assert a == b > 0

    def test_scale_shifts_mean(self):
        base = chi2_difference_quantile(0.5, 5, 5, 1.0, n_samples=10**5, seed=2)
        shifted = chi2_difference_quantile(0.5, 5, 5, 2.0, n_samples=10**5, seed=2)
        # mean moves from 0 to 2*5 - 5 = 5; the median moves by a comparable amount
        assert 3.5 < shifted - base < 5.5

    def test_threshold_guarantees_detection(self):
        alpha, n = 0.001, 45
        x = support_detection_threshold(alpha, n, n_samples=2 * 10**5)
        assert x > gaussian_tail_threshold(alpha / 2, 1.0)


class TestConcentration:
    counts = np.full(20, 45.0)

    def test_vacuous_at_zero(self):
        # p = P(Gamma_n >= n) tends to 1/2 as n grows
        assert 0.99 < median_concentration_bound(0.0, np.full(20, 1e4)) <= 1.0
        assert 0.95 < median_concentration_bound(0.0, self.counts) <= 1.0

    def test_monotone_in_t(self):
        ts = np.linspace(0, 2, 30)
        b = [median_concentration_bound(t, self.counts) for t in ts]
        assert np.all(np.diff(b) <= 0)
        assert b[-1] < 1e-6

    def test_lower_side_precondition(self):
        with pytest.raises(StatsError):
            median_concentration_bound(1.5, self.counts, side="lower")
        with pytest.raises(StatsError):
            median_concentration_bound(0.0, self.counts, side="lower")
        with pytest.raises(StatsError):
            median_concentration_bound(0.5, self.counts, side="middle")

    def test_levels(self):
        lo, hi = median_deviation_levels(0.5, [40.0, 50.0], sigma=2.0)
        assert lo == pytest.approx(0.8 * 4 * 0.5)
        assert hi == pytest.approx(4 * 2.0 / 0.8)

    def test_median_bound_holds_t05(self):
        rng = np.random.default_rng(3)
        c = rng.chisquare(45, size=(10**4, 20)) / 45
        med = -np.sort(-c, axis=1)[:, 9]
        freq = np.mean(med >= 1 + 2 * 0.5)
        assert freq <= median_concentration_bound(0.5, self.counts)

    def test_mean_bound_decreasing(self):
        b = [mean_concentration_bound(t, self.counts) for t in (0.05, 0.1, 0.2)]
        assert b[0] > b[1] > b[2]
        with pytest.raises(StatsError):
            mean_concentration_bound(2.0, self.counts, side="lower")

    def test_bad_counts(self):
        with pytest.raises(StatsError):
            median_concentration_bound(0.2, [45.0, 0.0])
