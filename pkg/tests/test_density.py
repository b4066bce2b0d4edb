import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from oracles import gaussian_kde_bruteforce, loo_loglik_bruteforce
from pu_active.density import (
    FLOOR_FACTOR,
    fit_kde,
    fit_kde_cv,
    kde_evaluate,
    likelihood_ratio,
    loo_log_likelihood,
    negative_density_estimate,
    rule_of_thumb_bandwidth,
    select_bandwidth_loo,
)


class TestFitEvaluate:
    def test_single_kernel_peak(self):
        m = fit_kde([[0.0]], 1.0)
        assert kde_evaluate(m, [0.0]) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
        assert kde_evaluate(m, [0.0]) == pytest.approx(0.398942, abs=1e-6)

    def test_symmetric_pair(self):
        m = fit_kde([[-1.0], [1.0]], 1.0)
        want = gaussian_kde_bruteforce([[-1.0], [1.0]], 1.0, [0.0])
        assert kde_evaluate(m, [0.0]) == pytest.approx(want, rel=1e-12)
        assert kde_evaluate(m, [0.0]) == pytest.approx(0.241971, abs=1e-6)

    @pytest.mark.parametrize("h", [0.0, -1.0])
    def test_bad_bandwidth(self, h):
        with pytest.raises(ValueError):
            fit_kde([[0.0]], h)

    def test_empty(self):
        with pytest.raises(ValueError):
            fit_kde(np.empty((0, 2)), 1.0)

    def test_dimension_mismatch(self):
        m = fit_kde([[0.0, 0.0]], 1.0)
        with pytest.raises(ValueError):
            kde_evaluate(m, [0.0])

    def test_peak_at_training_point(self, rng):
        m = fit_kde([[0.3, -0.2]], 0.7)
        peak = kde_evaluate(m, [0.3, -0.2])
        for x in rng.normal(size=(50, 2)):
            assert kde_evaluate(m, x) <= peak

    def test_far_tail(self):
        m = fit_kde([[0.0, 0.0], [1.0, 0.0]], 0.5)
        peak = (2 * math.pi * 0.25) ** -1
        # exp(-r^2 / 2h^2) < 1e-12 once r > h * sqrt(2 * 12 ln 10) ~ 3.72 for h=0.5
        assert kde_evaluate(m, [10.0, 0.0]) < 1e-12 * peak

    def test_duplicated_training_set(self, rng):
        p = rng.normal(size=(1, 3))
        a, b = fit_kde(p, 0.8), fit_kde(np.vstack([p, p]), 0.8)
        X = rng.normal(size=(20, 3))
        np.testing.assert_allclose(a.density(X), b.density(X), rtol=1e-13)

    def test_matches_bruteforce(self, rng):
        pts = rng.normal(size=(15, 3))
        m = fit_kde(pts, 0.6)
        for x in rng.normal(size=(10, 3)):
            assert kde_evaluate(m, x) == pytest.approx(gaussian_kde_bruteforce(pts, 0.6, x), rel=1e-10)


class TestNormalization:
    @pytest.mark.parametrize("seed", range(5))
    def test_trapezoid_1d(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 51))
        pts = rng.normal(scale=2.0, size=(n, 1))
        h = float(rng.uniform(0.1, 1.5))
        m = fit_kde(pts, h)
        grid = np.arange(pts.min() - 10 * h, pts.max() + 10 * h, h / 100)
        dens = m.density(grid[:, None])
        assert np.all(dens >= 0)
        assert abs(np.trapezoid(dens, grid) - 1.0) < 1e-3

    def test_monte_carlo_2d(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(20, 2))
        h = 0.5
        m = fit_kde(pts, h)
        lo, hi = pts.min(0) - 6 * h, pts.max(0) + 6 * h
        u = rng.uniform(lo, hi, size=(200_000, 2))
        est = m.density(u).mean() * np.prod(hi - lo)
        assert abs(est - 1.0) < 0.02


class TestProperties:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(12, 2))
        X = rng.normal(size=(8, 2))
        a = fit_kde(pts, 0.4).density(X)
        b = fit_kde(pts[rng.permutation(12)], 0.4).density(X)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(pts=hnp.arrays(float, (6, 2), elements=st.floats(-5, 5)),
           x=hnp.arrays(float, (2,), elements=st.floats(-6, 6)))
    def test_nonnegative(self, pts, x):
        assert kde_evaluate(fit_kde(pts, 0.3), x) >= 0


class TestBandwidth:
    def test_matches_bruteforce_loo(self, rng):
        pts = rng.normal(size=(12, 2))
        for h in (0.1, 0.5, 2.0):
            assert loo_log_likelihood(pts, h) == pytest.approx(loo_loglik_bruteforce(pts, h), rel=1e-10)

    def test_two_clusters_pick_mid_scale(self):
        # unit-spaced points in two clusters 1000 apart: h=0.01 makes every
        # left-out point improbable, h=100 smears everything flat
        c = np.array([[0.0], [1.0], [2.0], [0.5], [1.5]])
        pts = np.vstack([c, c + 1000.0])
        grid = [0.01, 1.0, 100.0]
        scores = {h: loo_loglik_bruteforce(pts, h) for h in grid}
        assert max(scores, key=scores.get) == 1.0
        assert select_bandwidth_loo(pts, grid) == 1.0

    def test_single_candidate(self, rng):
        assert select_bandwidth_loo(rng.normal(size=(5, 1)), [0.37]) == 0.37

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            select_bandwidth_loo([[0.0]], [1.0])

    def test_tie_goes_to_smaller(self):
        pts = np.array([[0.0], [1.0], [3.0]])
        assert select_bandwidth_loo(pts, [0.8, 0.8, 0.8]) == 0.8
        h = select_bandwidth_loo(pts, [2.0, 0.5])
        assert h == min([0.5, 2.0], key=lambda v: -loo_log_likelihood(pts, v))

    def test_rule_of_thumb(self, rng):
        pts = rng.normal(scale=2.0, size=(100, 3))
        want = np.mean(pts.std(axis=0, ddof=1)) * 100 ** (-1 / 7)
        assert rule_of_thumb_bandwidth(pts) == pytest.approx(want)

    def test_cv_fallback_on_single_point(self):
        m = fit_kde_cv([[1.0, 2.0]])
        assert m.h > 0


class TestLikelihoodRatio:
    def test_identical_models(self, rng):
        pts = rng.normal(size=(10, 2))
        a = likelihood_ratio(fit_kde(pts, 0.5), fit_kde(pts, 0.5), rng.normal(size=(25, 2)))
        np.testing.assert_allclose(a, 1.0, rtol=1e-12)

    def test_known_ratio(self):
        # one kernel each, chosen so p(x|+)=0.2 and p(x)=0.4 at x=0
        pos = fit_kde([[0.0]], 1 / (0.2 * math.sqrt(2 * math.pi)))
        all_ = fit_kde([[0.0]], 1 / (0.4 * math.sqrt(2 * math.pi)))
        assert kde_evaluate(pos, [0.0]) == pytest.approx(0.2)
        assert kde_evaluate(all_, [0.0]) == pytest.approx(0.4)
        assert likelihood_ratio(pos, all_, [0.0]) == pytest.approx(0.5)

    def test_floor_when_px_underflows(self):
        pos = fit_kde([[0.0]], 1.0)
        all_ = fit_kde([[0.0]], 0.01)
        a = likelihood_ratio(pos, all_, [5.0])
        assert np.isfinite(a)
        floor = FLOOR_FACTOR * (2 * math.pi * 0.01**2) ** -0.5
        assert a == pytest.approx(kde_evaluate(pos, [5.0]) / floor, rel=1e-9)

    def test_duplicate_invariance(self, rng):
        P = rng.normal(size=(8, 2))
        A = rng.normal(size=(30, 2))
        X = rng.normal(size=(10, 2))
        a = likelihood_ratio(fit_kde(P, 0.6), fit_kde(A, 0.7), X)
        b = likelihood_ratio(fit_kde(np.vstack([P, P]), 0.6), fit_kde(np.vstack([A, A]), 0.7), X)
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            likelihood_ratio(fit_kde([[0.0]], 1.0), fit_kde([[0.0, 0.0]], 1.0), [0.0])


class TestNegativeDensity:
    @staticmethod
    def _model_with_peak(value):
        return fit_kde([[0.0]], 1 / (value * math.sqrt(2 * math.pi)))

    def test_substitution(self):
        pos, all_ = self._model_with_peak(0.5), self._model_with_peak(0.5)
        assert negative_density_estimate(pos, all_, [0.0], 0.5) == pytest.approx(0.5)

    def test_clamped(self):
        pos, all_ = self._model_with_peak(1.0), self._model_with_peak(0.3)
        raw = (0.3 - 1.0 * 0.5) / 0.5
        assert raw == pytest.approx(-0.4)
        assert negative_density_estimate(pos, all_, [0.0], 0.5) == 0.0

    @pytest.mark.parametrize("prior", [0.0, 1.0, 1.5])
    def test_prior_range(self, prior):
        m = fit_kde([[0.0]], 1.0)
        with pytest.raises(ValueError):
            negative_density_estimate(m, m, [0.0], prior)
