"""Estimators: determinism, window algebra, identity checks, tail rates."""

import math

import numpy as np
import pytest

from equicount.errors import DomainError
from equicount.montecarlo import (
    FULL_LINE,
    IntervalB,
    concentration_miss_fractions,
    empirical_spectral_test,
    empirical_tail_rate,
    estimate_equilibria_count,
    verify_dimension_lift,
    _count_contributions,
)
from equicount.rates import ModelParams
from equicount.sampling import MCEstimate, batch_sizes, derive_seed, substream, z_score
from equicount.special_functions import rate_function

PARAMS = ModelParams(phi1=1.0, dphi1=2.0, phi2=0.0, sigma2=0.25)  # tau=0, b^2=0.625
SEED = 777


def contributions(window, n_trials=20_000, m=0, variant="m+1"):
    return np.concatenate(
        list(_count_contributions(2, m, PARAMS, window, n_trials, SEED, variant, 4096))
    )


class TestSampling:
    def test_substream_independence_of_batch_layout(self):
        a = substream(9, 3).standard_normal(5)
        b = substream(9, 3).standard_normal(5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, substream(9, 4).standard_normal(5))

    def test_batch_sizes_cover(self):
        assert list(batch_sizes(10, 4)) == [(0, 4), (1, 4), (2, 2)]

    def test_derive_seed_stable(self):
        assert derive_seed(123, 1) == derive_seed(123, 1)
        assert derive_seed(123, 1) != derive_seed(123, 2)

    def test_z_score_degenerate(self):
        a = MCEstimate(1.0, 0.0, 10, 0)
        assert z_score(a, a) == 0.0
        assert z_score(a, MCEstimate(2.0, 0.0, 10, 0)) == math.inf


class TestIntervalB:
    def test_invariant(self):
        with pytest.raises(DomainError):
            IntervalB(1.0, 1.0)
        with pytest.raises(DomainError):
            IntervalB(2.0, 1.0)

    def test_half_open(self):
        w = IntervalB(0.0, 1.0)
        assert w.contains(0.0) and not w.contains(1.0)


class TestEstimateEquilibriaCount:
    def test_window_beyond_spectrum_is_zero(self):
        est = estimate_equilibria_count(
            2, 0, PARAMS, IntervalB(50.0, 50.5), n_trials=5000, seed=SEED
        )
        assert est.mean == 0.0 and est.stderr == 0.0

    def test_determinism(self):
        a = estimate_equilibria_count(2, 0, PARAMS, FULL_LINE, n_trials=30_000, seed=SEED)
        b = estimate_equilibria_count(2, 0, PARAMS, FULL_LINE, n_trials=30_000, seed=SEED)
        assert (a.mean, a.stderr) == (b.mean, b.stderr)
        assert a.seed == SEED and a.n_trials == 30_000

    def test_per_trial_window_additivity_exact(self):
        # Disjoint adjacent half-open windows partition their union trial by
        # trial: with shared streams the contribution arrays add exactly.
        left = contributions(IntervalB(-math.inf, 0.3))
        right = contributions(IntervalB(0.3, math.inf))
        union = contributions(FULL_LINE)
        assert np.array_equal(left + right, union)

    def test_window_monotonicity_per_trial(self):
        small = contributions(IntervalB(0.0, 0.7))
        large = contributions(IntervalB(0.0, 2.0))
        assert np.all(small <= large)

    def test_index_bounds(self):
        with pytest.raises(DomainError):
            estimate_equilibria_count(2, 2, PARAMS, n_trials=10, seed=SEED)
        with pytest.raises(DomainError):
            estimate_equilibria_count(2, 0, PARAMS, n_trials=10, seed=SEED, index_variant="m")
        with pytest.raises(DomainError):
            estimate_equilibria_count(2, 0, PARAMS, n_trials=10, seed=SEED, index_variant="x")

    def test_legacy_variant_runs(self):
        est = estimate_equilibria_count(
            3, 1, PARAMS, FULL_LINE, n_trials=5000, seed=SEED, index_variant="m"
        )
        assert est.mean > 0.0


class TestVerifyDimensionLift:
    def test_empty_window_both_sides_zero(self):
        report = verify_dimension_lift(
            3, 1, 0.0, IntervalB(60.0, 61.0), n_trials=2000, seed=SEED
        )
        assert report.lhs.mean == 0.0 and report.rhs.mean == 0.0
        assert report.z_score == 0.0

    def test_identity_tau_zero(self):
        report = verify_dimension_lift(
            3, 1, 0.0, IntervalB(1.0, 1.4), n_trials=150_000, seed=SEED
        )
        assert report.z_score < 3.0

    def test_identity_nonzero_tau(self):
        report = verify_dimension_lift(
            3, 1, 0.3, IntervalB(1.0, 1.4), n_trials=150_000, seed=SEED + 1
        )
        assert report.z_score < 3.0

    def test_identity_m2_n4(self):
        report = verify_dimension_lift(
            4, 2, -0.2, IntervalB(0.2, 0.8), n_trials=60_000, seed=SEED + 2
        )
        assert report.z_score < 3.0

    def test_requires_bounded_window(self):
        with pytest.raises(DomainError):
            verify_dimension_lift(3, 1, 0.0, FULL_LINE, n_trials=100, seed=SEED)

    def test_m_bounds(self):
        with pytest.raises(DomainError):
            verify_dimension_lift(3, 3, 0.0, IntervalB(1.0, 1.4), n_trials=100, seed=SEED)


class TestEmpiricalTailRate:
    def test_precondition_inside_support(self):
        with pytest.raises(DomainError):
            empirical_tail_rate([10], 1, 0.9, 0.0, 100, SEED)

    def test_reference_scales_with_m(self):
        pts1 = empirical_tail_rate([8], 1, 1.3, 0.0, 200, SEED)
        pts2 = empirical_tail_rate([8], 2, 1.3, 0.0, 200, SEED)
        assert pts2[0].reference == pytest.approx(2.0 * pts1[0].reference, rel=1e-14)
        assert pts1[0].reference == pytest.approx(rate_function(1.3, 0.0), rel=1e-14)

    def test_insufficient_hits_flagged(self):
        pts = empirical_tail_rate([12], 1, 2.6, 0.0, 300, SEED)
        assert not pts[0].sufficient

    def test_zero_hits_rate_infinite(self):
        pts = empirical_tail_rate([12], 1, 5.0, 0.0, 50, SEED)
        assert pts[0].hits == 0 and pts[0].rate_hat == math.inf


class TestEmpiricalSpectralTest:
    def test_small_n_rejected(self):
        with pytest.raises(DomainError):
            empirical_spectral_test(10, 0.0, 5, SEED)

    def test_distance_shrinks_with_n(self):
        d100 = empirical_spectral_test(100, 0.2, 10, SEED)
        d400 = empirical_spectral_test(400, 0.2, 10, SEED)
        assert d400 < d100

    def test_near_symmetric_limit(self):
        # tau = 0.99: the marginal approaches a semicircle of radius ~2 and
        # the empirical law still tracks it.
        assert empirical_spectral_test(400, 0.99, 50, SEED + 3) < 0.05


class TestConcentration:
    def test_negative_abscissa_for_large_gamma(self):
        from equicount.ellipse import tail_quantile

        assert tail_quantile(0.9, 0.0) < 0.0

    def test_huge_epsilon_never_misses(self):
        out = concentration_miss_fractions([50], 0.5, 0.0, 200, 5.0, SEED)
        assert out[0][1] == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            concentration_miss_fractions([50], 0.0, 0.0, 10, 0.1, SEED)
        with pytest.raises(DomainError):
            concentration_miss_fractions([50], 0.5, 0.0, 10, 0.0, SEED)
