"""Uniform law on the ellipse: sampler, marginal, tail mass, quantile.

Monte Carlo oracles run at 10^6 draws with 4-sigma gates; quadrature oracles
are recomputed in-test from the defining integrals.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from equicount.ellipse import (
    EllipseParams,
    real_marginal_density,
    sample_uniform_ellipse,
    tail_mass,
    tail_quantile,
)
from equicount.errors import DomainError

RNG_SEED = 20240914


class TestEllipseParams:
    def test_axes_and_area(self):
        p = EllipseParams(tau=0.4)
        assert p.semi_axis_x == pytest.approx(1.4)
        assert p.semi_axis_y == pytest.approx(0.6)
        assert p.area == pytest.approx(math.pi * 1.4 * 0.6)

    def test_domain(self):
        with pytest.raises(DomainError):
            EllipseParams(tau=1.0)
        with pytest.raises(DomainError):
            EllipseParams(tau=-1.0)


class TestSampler:
    def test_single_point_inside(self):
        p = EllipseParams(tau=0.3)
        rng = np.random.default_rng(RNG_SEED)
        x, y = sample_uniform_ellipse(p, rng)
        assert (x / 1.3) ** 2 + (y / 0.7) ** 2 <= 1.0

    def test_acceptance_probability_is_quarter_pi(self):
        # The rejection step accepts box-uniform points at rate pi/4.
        tau = 0.3
        rng = np.random.default_rng(RNG_SEED + 9)
        trials = 400_000
        xs = rng.uniform(-(1 + tau), 1 + tau, size=trials)
        ys = rng.uniform(-(1 - tau), 1 - tau, size=trials)
        inside = (xs / (1 + tau)) ** 2 + (ys / (1 - tau)) ** 2 <= 1.0
        p = math.pi / 4.0
        se = math.sqrt(p * (1 - p) / trials)
        assert abs(inside.mean() - p) < 4.0 * se

    def test_mean_is_origin(self):
        p = EllipseParams(tau=0.3)
        rng = np.random.default_rng(RNG_SEED)
        pts = sample_uniform_ellipse(p, rng, size=1_000_000)
        # Var(x) <= (1+tau)^2/4, so 4 sigma on the mean is generous.
        for col, axis in ((0, 1.3), (1, 0.7)):
            se = axis / 2.0 / math.sqrt(len(pts))
            assert abs(pts[:, col].mean()) < 4.0 * se

    def test_second_moment_unit_disk(self):
        # E[x^2] over the unit disk is 1/4: quadrature oracle recomputed here.
        oracle, _ = integrate.dblquad(
            lambda y, x: x * x, -1, 1,
            lambda x: -math.sqrt(1 - x * x), lambda x: math.sqrt(1 - x * x),
        )
        oracle /= math.pi
        assert oracle == pytest.approx(0.25, abs=1e-9)
        rng = np.random.default_rng(RNG_SEED + 1)
        pts = sample_uniform_ellipse(EllipseParams(tau=0.0), rng, size=1_000_000)
        x2 = pts[:, 0] ** 2
        se = x2.std(ddof=1) / math.sqrt(len(x2))
        assert abs(x2.mean() - oracle) < 4.0 * se

    def test_histogram_matches_marginal(self):
        tau = 0.25
        rng = np.random.default_rng(RNG_SEED + 2)
        pts = sample_uniform_ellipse(EllipseParams(tau=tau), rng, size=1_000_000)
        counts, edges = np.histogram(pts[:, 0], bins=50, range=(-(1 + tau), 1 + tau), density=True)
        mids = 0.5 * (edges[:-1] + edges[1:])
        assert np.max(np.abs(counts - real_marginal_density(mids, tau))) < 0.01


class TestMarginalDensity:
    def test_normalization(self):
        for tau in (-0.5, 0.0, 0.6):
            total, _ = integrate.quad(
                lambda s: real_marginal_density(s, tau), -(1 + tau), 1 + tau, epsabs=1e-12
            )
            assert total == pytest.approx(1.0, abs=1e-10)

    def test_center_value_disk(self):
        assert real_marginal_density(0.0, 0.0) == pytest.approx(2.0 / math.pi, rel=1e-14)

    def test_zero_outside_support(self):
        assert real_marginal_density(1.5, 0.0) == 0.0
        assert real_marginal_density(-2.0, 0.3) == 0.0


class TestTailMass:
    def test_half_at_center(self):
        for tau in (-0.4, 0.0, 0.7):
            assert tail_mass(0.0, tau) == 0.5

    def test_support_edges(self):
        for tau in (-0.4, 0.0, 0.7):
            assert tail_mass(1.0 + tau, tau) == 0.0
            assert tail_mass(-(1.0 + tau), tau) == 1.0

    def test_against_quadrature(self):
        # 0.19550110947788532 frozen from quad of the marginal over [0.5, 1].
        oracle, _ = integrate.quad(lambda s: real_marginal_density(s, 0.0), 0.5, 1.0, epsabs=1e-13)
        assert oracle == pytest.approx(0.19550110947788532, abs=1e-11)
        assert tail_mass(0.5, 0.0) == pytest.approx(oracle, abs=1e-11)

    def test_empirical_tail(self):
        tau = 0.2
        rng = np.random.default_rng(RNG_SEED + 3)
        pts = sample_uniform_ellipse(EllipseParams(tau=tau), rng, size=1_000_000)
        for frac in (-0.9, 0.0, 0.7):
            s = frac * (1 + tau)
            p = tail_mass(s, tau)
            hat = float((pts[:, 0] >= s).mean())
            se = math.sqrt(p * (1 - p) / len(pts))
            assert abs(hat - p) < 4.0 * se


class TestTailQuantile:
    def test_median_is_zero(self):
        for tau in (-0.4, 0.0, 0.7):
            assert tail_quantile(0.5, tau) == 0.0

    def test_inverse_of_tail_mass_example(self):
        assert tail_quantile(0.19550110947788532, 0.0) == pytest.approx(0.5, abs=1e-9)

    def test_antisymmetry(self):
        for gamma in (0.1, 0.31, 0.42):
            assert tail_quantile(1.0 - gamma, 0.25) == pytest.approx(
                -tail_quantile(gamma, 0.25), abs=1e-10
            )

    def test_round_trip_100_random(self):
        rng = np.random.default_rng(RNG_SEED + 4)
        for _ in range(100):
            gamma = rng.uniform(0.001, 0.999)
            tau = rng.uniform(-0.9, 0.9)
            s = tail_quantile(gamma, tau)
            assert abs(tail_mass(s, tau) - gamma) < 1e-10

    def test_strictly_decreasing_in_gamma(self):
        gammas = np.linspace(0.02, 0.98, 25)
        values = [tail_quantile(g, 0.3) for g in gammas]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            tail_quantile(0.0, 0.3)
        with pytest.raises(DomainError):
            tail_quantile(0.5, 0.3, tol=0.0)
