import math
import os

import numpy as np
import pytest
from pytest import approx

from logderiv.ensembles import SO_EVEN, SO_ODD, USP, EigenSample
from logderiv.errors import InvalidArgumentError
from logderiv.moments import (
    ScaledPoint, draw_logderivs, estimate_moment, estimate_pole_subtracted_moment,
    estimate_pole_subtraction, logderiv, logderiv_values, negative_fraction, pole_term,
    product_moment_estimate, scaled_variance_usp, summarize,
)


# -- Helpers -----------------------------------------------------------------

def within(estimate, expected, sigmas=4.0):
    return abs(estimate.mean - expected) <= sigmas * estimate.std_error


WORKERS = os.cpu_count() or 1


def scaled_deviation(N, a, samples, seed, threads=1, chunk_size=2000):
    """Mean of ((1/N) Lambda'/Lambda - 1)^2 over USp(2N) with its standard error"""
    squares = (draw_logderivs(USP, ScaledPoint(N, a), samples, seed, threads, chunk_size) / N - 1) ** 2
    return squares.mean(), squares.std(ddof=1) / math.sqrt(samples)


class TestScaledPoint:
    def test_derived_quantities(self):
        point = ScaledPoint(50, 0.1)
        assert point.alpha == approx(0.002)
        assert point.s == approx(math.exp(-0.002))
        assert point.delta == approx(1 - math.exp(-0.002), rel=1e-12)

    @pytest.mark.parametrize("N, a", [(0, 0.1), (5, 0.0), (5, -1.0), (5, math.inf)])
    def test_invalid(self, N, a):
        with pytest.raises(InvalidArgumentError):
            ScaledPoint(N, a)


class TestLogDerivative:
    def test_right_angle_pair(self):
        value = logderiv(EigenSample(SO_EVEN, 1, np.array([np.pi / 2])), 1 - 1e-8)
        assert value == approx(1.0, abs=1e-7)

    def test_eigenvalue_near_one(self):
        # 2/(s - 1) when the pair sits on 1
        value = logderiv(EigenSample(SO_EVEN, 1, np.array([1e-8])), 0.9)
        assert value == approx(-20.0, rel=1e-9)

    def test_forced_eigenvalue(self):
        # 2s/(1 + s^2) - 1/(1 - s) at s = 1/2
        value = logderiv(EigenSample(SO_ODD, 1, np.array([np.pi / 2])), 0.5)
        assert value == approx(0.8 - 2.0)

    def test_sum_over_pairs(self):
        angles = np.array([[0.3, 1.1, 2.9]])
        s = 0.7
        direct = sum((2 * s - 2 * math.cos(t)) / (s * s - 2 * s * math.cos(t) + 1) for t in angles[0])
        assert logderiv_values(angles, s, USP)[0] == approx(direct, rel=1e-12)

    def test_cancellation_free_near_one(self):
        point = ScaledPoint(1000, 1e-6)
        angles = np.array([[np.pi / 3]])
        value = logderiv_values(angles, point.s, SO_EVEN, point.delta)[0]
        assert value == approx(1.0, rel=1e-6)

    @pytest.mark.parametrize("s", [0.0, 1.0, 1.5, -0.2])
    def test_point_outside_unit_interval(self, s):
        with pytest.raises(InvalidArgumentError):
            logderiv_values(np.array([[1.0]]), s, SO_EVEN)


class TestSmallGroupMeans:
    # exact first moments at N = 1 and a = 1
    def test_so2_mean_is_zero(self):
        estimate = estimate_moment(SO_EVEN, 1, ScaledPoint(1, 1.0), 20_000, seed=1)
        assert within(estimate, 0.0)

    def test_usp2_mean(self):
        estimate = estimate_moment(USP, 1, ScaledPoint(1, 1.0), 20_000, seed=2)
        assert within(estimate, math.exp(-1.0))

    def test_so3_mean(self):
        estimate = estimate_moment(SO_ODD, 1, ScaledPoint(1, 1.0), 20_000, seed=3)
        assert within(estimate, -1 / math.expm1(1.0))


class TestDeterminism:
    def test_chunking_invariance(self):
        point = ScaledPoint(4, 0.5)
        whole = draw_logderivs(USP, point, 300, seed=12, chunk_size=300)
        pieces = draw_logderivs(USP, point, 300, seed=12, chunk_size=13)
        assert whole == approx(pieces, rel=1e-12)

    def test_worker_count_invariance(self):
        point = ScaledPoint(3, 0.5)
        serial = draw_logderivs(SO_ODD, point, 200, seed=4, threads=1, chunk_size=50)
        parallel = draw_logderivs(SO_ODD, point, 200, seed=4, threads=2, chunk_size=50)
        assert serial == approx(parallel, rel=1e-12)

    def test_same_estimate_for_same_seed(self):
        point = ScaledPoint(5, 0.3)
        first = estimate_moment(SO_EVEN, 2, point, 200, seed=8, chunk_size=64)
        second = estimate_moment(SO_EVEN, 2, point, 200, seed=8, chunk_size=200)
        assert first.mean == approx(second.mean, rel=1e-12)
        assert first.std_error == approx(second.std_error, rel=1e-9)


class TestEstimates:
    def test_zeroth_moment(self):
        estimate = estimate_moment(USP, 0, ScaledPoint(5, 0.1), 100)
        assert (estimate.mean, estimate.std_error) == (1.0, 0.0)

    def test_run_limits(self):
        with pytest.raises(InvalidArgumentError):
            estimate_moment(USP, 9, ScaledPoint(5, 0.1), 1000)
        with pytest.raises(InvalidArgumentError):
            estimate_moment(USP, 1, ScaledPoint(5, 0.1), 99)

    def test_summarize(self):
        values = np.array([1.0, 2.0, 3.0, 4.0])
        estimate = summarize(values, 2, ScaledPoint(1, 1.0), SO_EVEN, 0)
        assert estimate.mean == approx(7.5)
        assert estimate.std_error == approx(math.sqrt(np.var(values ** 2, ddof=1) / 4))

    def test_pole_subtraction(self):
        point = ScaledPoint(10, 0.01)
        full = estimate_moment(SO_ODD, 1, point, 2_000, seed=5)
        subtracted = estimate_pole_subtracted_moment(1, point, 2_000, seed=5)
        assert subtracted.mean == approx(full.mean - pole_term(point), rel=1e-9)
        assert abs(subtracted.mean) * 10 < abs(full.mean)

    def test_subtraction_shares_one_draw(self):
        point = ScaledPoint(6, 0.1)
        subtracted, full = estimate_pole_subtraction(1, point, 500, seed=9)
        assert full.mean == approx(estimate_moment(SO_ODD, 1, point, 500, seed=9).mean, rel=1e-12)
        assert subtracted.mean == approx(full.mean - pole_term(point), rel=1e-9)
        assert subtracted.std_error == approx(full.std_error, rel=1e-9)

    def test_pole_dominates_as_a_shrinks(self):
        N = 10
        for a in (0.2, 0.1, 0.05):
            subtracted, full = estimate_pole_subtraction(1, ScaledPoint(N, a), 2_000, seed=7)
            # subtracted mean stays of order N, the full mean grows like -N/a
            assert 0 < subtracted.mean < 1.5 * N
            assert -1.3 * N < full.mean * a < -0.7 * N

    def test_pole_term(self):
        assert pole_term(ScaledPoint(10, 0.1)) == approx(-1 / (1 - math.exp(-0.01)))


class TestSymplecticVariance:
    def test_small_for_small_a(self):
        value = scaled_variance_usp(ScaledPoint(5, 0.1), 40_000, seed=21)
        assert 0 < value < 0.1

    def test_decreases_with_a(self):
        wide = scaled_variance_usp(ScaledPoint(5, 0.2), 20_000, seed=22)
        narrow = scaled_variance_usp(ScaledPoint(20, 0.05), 20_000, seed=23)
        assert narrow <= wide

    def test_matches_direct_mean(self):
        mean, _ = scaled_deviation(5, 0.1, 500, seed=28)
        assert scaled_variance_usp(ScaledPoint(5, 0.1), 500, seed=28) == approx(mean, rel=1e-9)

    def test_flat_in_N_at_fixed_a(self):
        estimates = [scaled_deviation(N, 0.1, 10_000, seed=27 + N) for N in (5, 10, 20)]
        for (smaller, smaller_se), (larger, larger_se) in zip(estimates, estimates[1:]):
            assert larger - smaller <= 3 * math.hypot(smaller_se, larger_se)

    @pytest.mark.slow
    def test_acceptance_scale(self):
        assert scaled_variance_usp(ScaledPoint(50, 0.1), 40_000, seed=24, threads=WORKERS, chunk_size=250) < 0.1
        wide = scaled_variance_usp(ScaledPoint(25, 0.2), 20_000, seed=25, threads=WORKERS, chunk_size=500)
        narrow = scaled_variance_usp(ScaledPoint(100, 0.05), 20_000, seed=26, threads=WORKERS, chunk_size=100)
        assert narrow <= wide

    @pytest.mark.slow
    def test_acceptance_flat_in_N(self):
        estimates = [scaled_deviation(N, 0.1, 20_000, seed=40 + N, threads=WORKERS, chunk_size=100)
                     for N in (25, 50, 100)]
        for (smaller, smaller_se), (larger, larger_se) in zip(estimates, estimates[1:]):
            assert larger - smaller <= 3 * math.hypot(smaller_se, larger_se)


class TestSigns:
    def test_orthogonal_values_go_negative(self):
        assert negative_fraction(SO_EVEN, ScaledPoint(20, 0.1), 1_000, seed=31) > 0

    def test_symplectic_values_rarely_negative(self):
        assert negative_fraction(USP, ScaledPoint(20, 0.1), 5_000, seed=32) < 0.01

    @pytest.mark.slow
    def test_acceptance_scale(self):
        point = ScaledPoint(20, 0.1)
        assert negative_fraction(SO_EVEN, point, 10_000, seed=33, threads=WORKERS) > 0
        assert negative_fraction(USP, point, 10_000, seed=34, threads=WORKERS) < 0.01


class TestProductMoment:
    def test_single_shift_matches_first_moment(self):
        point = ScaledPoint(3, 0.9)
        product = product_moment_estimate([point.alpha], 3, 500, seed=40)
        first = estimate_moment(SO_EVEN, 1, point, 500, seed=40)
        assert product["mean"] == approx(first.mean, rel=1e-9)

    def test_rejects_bad_shifts(self):
        with pytest.raises(InvalidArgumentError):
            product_moment_estimate([], 3, 100)
        with pytest.raises(InvalidArgumentError):
            product_moment_estimate([0.1, -0.2], 3, 100)
