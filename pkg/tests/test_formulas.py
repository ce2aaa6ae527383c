import math
import os
from fractions import Fraction

import numpy as np
import pytest
from pytest import approx

from logderiv.ensembles import SO_EVEN, SO_ODD, USP
from logderiv.errors import ConfluentLimitError, DomainError, InvalidArgumentError, PoleError
from logderiv.formulas import (
    asymptotic_coefficients, asymptotic_moment, compare, confluent_j1, confluent_j2, dlog,
    exact_first_moment, exact_J, exact_moment, exact_moment_so_even, j_to_moment, moment_to_j,
    product_moment_so_even, size_two_partitions, telephone_number,
    z, z_eval,
)
from logderiv.moments import ScaledPoint, product_moment_estimate

WORKERS = os.cpu_count() or 1


class TestZFunction:
    def test_value(self):
        assert z(math.log(2)) == approx(2.0)

    def test_reflection(self):
        for x in (1e-7, 1e-3, 0.4, 3.0, 25.0):
            assert z(x) + z(-x) == approx(1.0, abs=1e-12)

    def test_laurent_branch(self):
        x = 1e-6
        assert z(x) == approx(1 / x + 0.5, rel=1e-12)
        assert dlog(x) == approx(-1 / x + 0.5, rel=1e-12)

    def test_branches_agree_at_switch(self):
        below, above = z_eval(0.999e-4), z_eval(1.001e-4)
        assert below.z - above.z == approx(2e-7 / 1e-8, rel=1e-3)
        assert above.z == approx(1 / 1.001e-4 + 0.5 + 1.001e-4 / 12, rel=1e-12)

    def test_derivatives(self):
        x, h = 0.7, 1e-5
        at = z_eval(x)
        assert at.z_prime == approx((z(x + h) - z(x - h)) / (2 * h), rel=1e-7)
        assert at.dlog_prime == approx((dlog(x + h) - dlog(x - h)) / (2 * h), rel=1e-7)

    def test_complex_argument(self):
        value = z(0.3 + 0.2j)
        assert value == approx(1 / (1 - np.exp(-(0.3 + 0.2j))))

    def test_pole(self):
        with pytest.raises(PoleError):
            z(0)
        with pytest.raises(ZeroDivisionError):
            z_eval(0.0)

    @pytest.mark.parametrize("x", [35.0, 400.0, 800.0, 5000.0])
    def test_far_arguments(self, x):
        at, mirror = z_eval(x), z_eval(-x)
        assert at.z == approx(1 / (1 - math.exp(-x)), rel=1e-15)
        assert at.dlog == approx(-math.exp(-x) / (1 - math.exp(-x)), rel=1e-12, abs=1e-300)
        assert at.dlog_prime == approx(at.dlog * -at.z, rel=1e-12, abs=1e-300)
        assert at.z + mirror.z == approx(1.0, abs=1e-15)
        assert mirror.dlog == approx(1.0)

    def test_far_branch_joins_expm1_branch(self):
        for x in (29.999, 30.001):
            assert dlog(x) == approx(-1 / math.expm1(x), rel=1e-12)
            assert z(-x) == approx(-1 / math.expm1(x), rel=1e-12)

    def test_far_complex_argument(self):
        x = 600 + 1j
        assert z(x) == approx(1.0)
        assert z(-x) == approx(0.0, abs=1e-200)


class TestAsymptotics:
    def test_coefficients(self):
        assert asymptotic_coefficients(SO_EVEN, 1) == {1: -1}
        assert asymptotic_coefficients(SO_EVEN, 3) == {1: Fraction(-6, 2)}
        assert asymptotic_coefficients(USP, 2) == {2: 1, 3: Fraction(-4, 3)}
        assert asymptotic_coefficients(USP, 4) == {3: Fraction(2 * 3, 3 * 6)}
        assert asymptotic_coefficients(SO_ODD, 2) == {0: 1, 1: -2}

    def test_values(self):
        result = asymptotic_moment(USP, 2, 10, 0.1)
        assert result.leading == approx(100.0)
        assert result.next_to_leading == approx(-40 / 3)
        assert result.value == approx(100.0 - 40 / 3)
        assert result.formula_id == "usp:K=2"

        odd = asymptotic_moment(SO_ODD, 1, 10, 0.1)
        assert odd.leading == approx(-100.0)
        assert odd.next_to_leading == approx(10.0)

        even = asymptotic_moment("so-even", 2, 10, 0.1)
        assert even.leading == approx(2 * 100 / 0.1)
        assert even.next_to_leading is None

    @pytest.mark.parametrize("K", [0, -1])
    def test_k_range(self, K):
        with pytest.raises(InvalidArgumentError):
            asymptotic_moment(USP, K, 10, 0.1)

    def test_no_upper_bound_on_k(self):
        # 2 (2K-3)!!/(K-1)! and (2/3) (2K-5)!!/(K-1)! at K = 12
        assert asymptotic_coefficients(SO_EVEN, 12) == {1: Fraction(2 * 13749310575, 39916800)}
        assert asymptotic_coefficients(USP, 12) == {3: Fraction(2 * 654729075, 3 * 39916800)}
        assert asymptotic_moment(SO_ODD, 20, 10, 0.1).leading == approx((10 / 0.1) ** 20)

    def test_bad_point(self):
        with pytest.raises(InvalidArgumentError):
            asymptotic_moment(USP, 1, 10, 0.0)


class TestExactMoments:
    def test_small_group_oracles(self):
        alpha = 0.8
        assert exact_first_moment(SO_EVEN, 1, alpha) == approx(0.0, abs=1e-12)
        assert exact_first_moment(USP, 1, alpha) == approx(math.exp(-alpha))
        assert exact_first_moment(SO_ODD, 1, alpha) == approx(-1 / math.expm1(alpha))

    @pytest.mark.parametrize("K", [1, 2])
    @pytest.mark.parametrize("a", [0.1, 0.01, 0.001])
    def test_exact_approaches_asymptotic(self, K, a):
        N = 10 ** 6
        exact = exact_moment_so_even(K, N, a / N)
        leading = asymptotic_moment(SO_EVEN, K, N, a).leading
        assert abs(exact / leading - 1) <= 5 * a

    @pytest.mark.parametrize("N", [2, 5, 50])
    @pytest.mark.parametrize("alpha", [0.05, 0.4, 2.0])
    def test_closed_forms_match_confluent_j(self, N, alpha):
        first = j_to_moment(confluent_j1(alpha, N), [alpha])
        second = j_to_moment(confluent_j2(alpha, N), [alpha, alpha])
        assert exact_moment_so_even(1, N, alpha) == approx(first, rel=1e-9)
        assert exact_moment_so_even(2, N, alpha) == approx(second, rel=1e-9)

    def test_large_alpha(self):
        alpha = 400.0
        assert exact_moment_so_even(1, 1, alpha) == approx(0.0)
        assert exact_moment_so_even(2, 1, alpha) == approx(2.0)
        assert exact_first_moment(USP, 1, alpha) == approx(math.exp(-alpha), rel=1e-12)
        assert exact_first_moment(SO_ODD, 1, alpha) == approx(-math.exp(-alpha), rel=1e-12)
        assert confluent_j1(alpha, 3) == approx(0.0)
        assert exact_moment_so_even(1, 10, 5000.0) == approx(0.0)

    def test_exact_moment_availability(self):
        assert exact_moment(USP, 2, 10, 0.01) is None
        assert exact_moment(SO_EVEN, 2, 10, 0.01) == exact_moment_so_even(2, 10, 0.01)
        with pytest.raises(InvalidArgumentError):
            exact_moment_so_even(3, 10, 0.01)

    def test_normalisation_round_trip(self):
        alphas = [0.2, 0.5]
        assert moment_to_j(j_to_moment(3.5, alphas), alphas) == approx(3.5)
        assert j_to_moment(1.0, [0.3]) == approx(-math.exp(0.3))

    def test_normalisation_overflow(self):
        with pytest.raises(DomainError):
            j_to_moment(0.0, [400.0, 401.0])


class TestPartitions:
    def test_telephone_numbers(self):
        assert [telephone_number(m) for m in range(6)] == [1, 1, 2, 4, 10, 26]

    def test_partition_count(self):
        for m in range(7):
            partitions = list(size_two_partitions(list(range(m))))
            assert len(partitions) == telephone_number(m)
            for partition in partitions:
                assert sorted(x for block in partition for x in block) == list(range(m))


class TestExactFormula:
    @pytest.mark.parametrize("N", [5, 50])
    def test_single_shift_is_confluent_first_moment(self, N):
        rng = np.random.default_rng(13 + N)
        for alpha in rng.uniform(0.01, 1.0, size=20):
            assert exact_J([alpha], N) == approx(confluent_j1(alpha, N), rel=1e-12)

    def test_large_shifts(self):
        assert exact_J([400.0], 3) == approx(confluent_j1(400.0, 3))
        assert math.isfinite(exact_J([400.0, 401.0], 5))
        assert math.isfinite(exact_J([0.1, 900.0], 5))
        with pytest.raises(DomainError):
            product_moment_so_even([400.0, 401.0], 5)

    def test_pair_approaches_confluent_limit(self):
        alpha, h, N = 0.01, 1e-5, 100
        value = exact_J([alpha, alpha + h], N)
        assert value == approx(confluent_j2(alpha + h / 2, N), rel=1e-4)

    def test_symmetric_in_shifts(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            shifts = list(rng.uniform(0.05, 1.0, size=3))
            reference = exact_J(shifts, 5)
            for order in ([1, 0, 2], [2, 1, 0], [0, 2, 1]):
                assert exact_J([shifts[i] for i in order], 5) == approx(reference, rel=1e-10)

    def test_coincident_shifts(self):
        with pytest.raises(ConfluentLimitError):
            exact_J([0.1, 0.1], 5)

    def test_too_many_shifts(self):
        with pytest.raises(DomainError):
            exact_J([0.1, 0.2, 0.3], 2)

    def test_invalid_shifts(self):
        with pytest.raises(InvalidArgumentError):
            exact_J([], 3)
        with pytest.raises(InvalidArgumentError):
            exact_J([0.1, -0.1], 3)

    def test_product_moment_against_sampling(self):
        alphas, N = [0.3, 0.5], 3
        exact = product_moment_so_even(alphas, N)
        estimate = product_moment_estimate(alphas, N, 20_000, seed=51)
        assert abs(estimate["mean"] - exact) <= 5 * estimate["std_error"]


class TestComparison:
    def test_so_even_first_moment(self):
        result = compare(SO_EVEN, 1, 10, 0.5, 5_000, seed=61)
        assert result.exact is not None
        assert abs(result.z_score) < 4
        assert result.reference == result.exact

    def test_usp_first_moment(self):
        result = compare(USP, 1, 10, 0.1, 5_000, seed=62)
        assert abs(result.z_score) < 4
        assert 0 <= result.p_value <= 1

    def test_usp_second_moment(self):
        result = compare(USP, 2, 20, 0.1, 4_000, seed=63)
        assert result.exact is None
        # N^2 (1 - 4a/3) with the next-to-leading term included
        assert result.reference == approx(20 ** 2 * (1 - 0.4 / 3))
        assert result.monte_carlo.mean == approx(result.reference, rel=0.15)

    @pytest.mark.slow
    def test_usp_second_moment_correction(self):
        result = compare(USP, 2, 20, 0.1, 40_000, seed=64, threads=WORKERS)
        assert result.monte_carlo.mean == approx(20 ** 2 * (1 - 0.4 / 3), rel=0.05)

    def test_so_odd_first_moment(self):
        result = compare(SO_ODD, 1, 10, 0.1, 2_000, seed=65)
        assert result.monte_carlo.mean == approx(result.asymptotic.value, rel=0.15)
        assert abs(result.z_score) < 4

    @pytest.mark.slow
    def test_acceptance_first_moment_at_n50(self):
        result = compare(USP, 1, 50, 0.1, 100_000, seed=66, threads=WORKERS)
        assert abs(result.z_score) < 3
        assert result.monte_carlo.mean == approx(50, rel=0.15)

    @pytest.mark.slow
    def test_acceptance_so_even_at_n50(self):
        result = compare(SO_EVEN, 1, 50, 0.1, 100_000, seed=69, threads=WORKERS)
        assert abs(result.z_score) < 3
        assert result.monte_carlo.mean == approx(-50, rel=0.15)

    @pytest.mark.slow
    def test_acceptance_usp_second_moment_at_n50(self):
        result = compare(USP, 2, 50, 0.1, 100_000, seed=70, threads=WORKERS)
        assert result.monte_carlo.mean == approx(50 ** 2, rel=0.15)
        assert result.monte_carlo.mean == approx(result.reference, rel=0.05)

    @pytest.mark.slow
    def test_acceptance_so_odd_at_n50(self):
        result = compare(SO_ODD, 1, 50, 0.1, 10_000, seed=71, threads=WORKERS)
        assert result.monte_carlo.mean == approx(-(50 / 0.1 - 50), rel=0.15)

    def test_row(self):
        row = compare(SO_EVEN, 1, 4, 0.5, 200, seed=67).as_row()
        assert list(row) == ["ensemble", "K", "N", "a", "samples", "seed", "mc_mean", "mc_stderr",
                             "asymptotic", "exact", "ratio", "z_score"]
        assert row["ensemble"] == SO_EVEN and row["samples"] == 200

    def test_point_is_shared(self):
        point = ScaledPoint(10, 0.5)
        result = compare(SO_EVEN, 1, 10, 0.5, 200, seed=68)
        assert result.exact == approx(exact_first_moment(SO_EVEN, 10, point.alpha))
