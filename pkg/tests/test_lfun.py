import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primerace.characters import character_from_discriminant, chi4, general_weight
from primerace.errors import CapabilityError, DomainError, ValidationError
from primerace.lfun import (
    BoundedValue,
    b_function,
    bias_bound_scan,
    conjecture_scan,
    euler_product_value,
    l_value,
    mellin_identity_check,
    prime_power_sum,
    verify_log_decomposition,
)

from oracles import catalan_alternating, machin_pi_over_4, mp_b_double_sum


class TestBoundedValue:
    def test_radius_must_be_nonnegative(self):
        with pytest.raises(ValidationError):
            BoundedValue(1.0, -1e-9)

    def test_arithmetic_adds_radii(self):
        a = BoundedValue(1.0, 1e-3)
        b = BoundedValue(2.0, 1e-4)
        assert (a + b).radius >= 1.1e-3
        assert (a - b).value == -1.0
        assert a.scaled(-2.0).radius >= 2e-3

    def test_log_propagation_and_domain(self):
        v = BoundedValue(math.e, 1e-6).log()
        assert abs(v.value - 1.0) < 1e-12
        assert v.radius >= 2e-6 / math.e
        with pytest.raises(DomainError):
            BoundedValue(1e-9, 1e-3).log()

    def test_overlaps_is_radius_aware(self):
        assert BoundedValue(1.0, 0.1).overlaps(BoundedValue(1.15, 0.06))
        assert not BoundedValue(1.0, 0.01).overlaps(BoundedValue(1.15, 0.01))


class TestLValue:
    def test_pi_over_4(self):
        oracle, oracle_bound = machin_pi_over_4()
        assert abs(oracle - math.pi / 4) <= oracle_bound + 1e-15
        lv = l_value(chi4(), 1.0, 10**6)
        assert abs(lv.value - oracle) < 1e-10
        assert lv.radius + oracle_bound >= abs(lv.value - oracle)

    def test_catalan(self):
        oracle, oracle_bound = catalan_alternating(10**6)
        lv = l_value(chi4(), 2.0, 10**5)
        assert abs(lv.value - oracle) < 1e-10
        assert lv.radius + oracle_bound >= abs(lv.value - oracle)

    def test_large_sigma_is_one(self):
        lv = l_value(chi4(), 30.0, 10**3)
        assert abs(lv.value - 1.0) < 1e-14

    def test_domain_and_validation(self):
        with pytest.raises(DomainError):
            l_value(chi4(), 0.0, 100)
        with pytest.raises(DomainError):
            l_value(chi4(), -0.5, 100)
        with pytest.raises(ValidationError):
            l_value(chi4(), 1.0, 3)  # below the modulus
        with pytest.raises(CapabilityError):
            l_value(general_weight({2: 1.0}), 1.0, 100)

    @pytest.mark.parametrize("sigma,n", [(0.8, 20_000), (1.0, 50_000), (0.55, 10_000), (2.0, 5_000)])
    def test_tail_bounds_are_honest(self, sigma, n):
        # halving/doubling the truncation moves the center by less than the
        # larger radius
        half = l_value(chi4(), sigma, n // 2)
        base = l_value(chi4(), sigma, n)
        double = l_value(chi4(), sigma, 2 * n)
        assert abs(double.value - base.value) < base.radius
        assert abs(base.value - half.value) < half.radius


class TestEulerProduct:
    @pytest.mark.parametrize("d", [-4, 5])
    @pytest.mark.parametrize("sigma", [1.5, 2.0, 3.0])
    def test_two_method_agreement(self, d, sigma):
        w = character_from_discriminant(d)
        series = l_value(w, sigma, 10**6)
        product = euler_product_value(w, sigma, 10**5)
        assert series.overlaps(product)

    def test_large_sigma_trivial(self):
        bv = euler_product_value(chi4(), 30.0, 10)
        assert abs(bv.value - 1.0) < 1e-13

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            euler_product_value(chi4(), 1.0, 100)
        with pytest.raises(DomainError):
            euler_product_value(chi4(), 0.9, 100)
        with pytest.raises(ValidationError):
            euler_product_value(chi4(), 2.0, 1)

    def test_tail_honesty(self):
        a = euler_product_value(chi4(), 1.5, 10**4)
        b = euler_product_value(chi4(), 1.5, 2 * 10**4)
        assert abs(b.value - a.value) < a.radius


class TestBFunction:
    def test_against_high_precision_double_sum(self):
        bv = b_function(chi4(), 2.0, 10**4, 60)
        oracle = mp_b_double_sum(2.0, 10**4, 60, dps=40)
        assert bv.value > 0
        assert bv.radius < 1e-10
        assert abs(bv.value - oracle) <= bv.radius

    def test_sigma_three_quarters(self):
        bv = b_function(chi4(), 0.75, 2 * 10**4, 60)
        oracle = mp_b_double_sum(0.75, 2 * 10**4, 60, dps=40)
        assert abs(bv.value - oracle) <= bv.radius + 1e-13
        assert math.isfinite(bv.radius)

    def test_large_sigma_vanishes(self):
        bv = b_function(chi4(), 30.0, 100)
        assert abs(bv.value) < 1e-15

    def test_radius_strictly_shrinks_with_truncation(self):
        base = b_function(chi4(), 0.75, 10**3, 16).radius
        assert b_function(chi4(), 0.75, 10**4, 16).radius < base
        assert b_function(chi4(), 0.75, 10**3, 32).radius < base
        assert base < b_function(chi4(), 0.75, 10**3, 8).radius

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            b_function(chi4(), 0.5, 100)
        with pytest.raises(ValidationError):
            b_function(chi4(), 1.0, 100, m_max=1)


class TestDecomposition:
    def test_sigma2_reproduces_identity(self):
        rep = verify_log_decomposition(chi4(), 2.0, 10**6)
        assert rep.within_radii
        assert abs(rep.residual) < 1e-8

    def test_sigma_just_above_one_within_radii(self):
        rep = verify_log_decomposition(chi4(), 1.1, 10**5)
        assert rep.within_radii

    def test_large_sigma_trivial(self):
        rep = verify_log_decomposition(chi4(), 30.0, 100, n_trunc=1000)
        assert abs(rep.residual) < 1e-13

    def test_requires_sigma_above_one(self):
        with pytest.raises(DomainError):
            verify_log_decomposition(chi4(), 1.0, 1000)


class TestBiasScan:
    def test_penalty_vanishes_at_sigma_one(self):
        (point,) = bias_bound_scan(chi4(), [1.0], 10**4)
        assert point.penalty == 0.0
        assert point.status == "ok"
        assert abs(point.r_value - (point.log_l_value - point.race_value)) < 1e-12

    def test_grid_rows_all_finite(self):
        grid = [0.55, 0.65, 0.75, 0.85, 0.95]
        rows = bias_bound_scan(chi4(), grid, 10**5)
        assert [r.sigma for r in rows] == grid
        for r in rows:
            assert r.status == "ok"
            assert math.isfinite(r.r_value)
            assert r.r_radius > 0

    def test_truncation_shift_is_disclosed(self):
        # moving x_max from 1e5 to 5e4 shifts R by at most the unsigned mass
        # of the dropped primes plus the quoted radii
        sigma = 0.6
        (full,) = bias_bound_scan(chi4(), [sigma], 10**5)
        (half,) = bias_bound_scan(chi4(), [sigma], 5 * 10**4)
        allowance = (
            prime_power_sum(sigma, 10**5)
            - prime_power_sum(sigma, 5 * 10**4)
            + full.r_radius
            + half.r_radius
        )
        assert abs(full.r_value - half.r_value) <= allowance

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            bias_bound_scan(chi4(), [0.5], 1000)
        with pytest.raises(DomainError):
            bias_bound_scan(chi4(), [1.01], 1000)

    @pytest.mark.parametrize("sigma", [0.55, 0.6, 0.7])
    def test_prime_square_sum_tracks_log_singularity(self, sigma):
        # sum_{p<=P} p^(-2 sigma) stays within an O(1) band of log(1/(2s-1))
        total = prime_power_sum(2 * sigma, 10**6)
        assert abs(total - math.log(1.0 / (2 * sigma - 1.0))) <= 3.0


class TestConjectureScan:
    def test_small_points(self):
        scan = conjecture_scan([2, 10, 100])
        assert scan.points[0].value == 0.0
        expected_10 = -(3 ** -0.5) + 5 ** -0.5 - 7 ** -0.5
        assert abs(scan.points[1].value - expected_10) < 1e-15
        assert scan.final_x == 100

    def test_summary_fields(self):
        scan = conjecture_scan([10**3, 10**4, 10**5])
        assert scan.all_negative_beyond_1000
        assert scan.min_x == 10**5
        assert scan.min_value == scan.final_value
        assert scan.final_value < -1.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            conjecture_scan([])
        with pytest.raises(ValidationError):
            conjecture_scan([100, 100])
        with pytest.raises(ValidationError):
            conjecture_scan([10, 10**6], budget=10**5)


class TestMellinIdentity:
    def test_example_small(self):
        assert mellin_identity_check(chi4(), 0.0, 2.0, 10) < 1e-14

    def test_degenerate_case_is_exactly_zero(self):
        assert mellin_identity_check(chi4(), 0.7, 0.7, 1000) == 0.0

    def test_half_to_five_quarters(self):
        assert mellin_identity_check(chi4(), 0.5, 1.25, 10**4) < 1e-10

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            mellin_identity_check(chi4(), -0.5, 1.0, 100)
        with pytest.raises(DomainError):
            mellin_identity_check(chi4(), 1.0, 0.5, 100)
        with pytest.raises(ValidationError):
            mellin_identity_check(chi4(), 0.0, 1.0, 1)

    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=2.5),
        st.floats(min_value=0.01, max_value=0.5),
        st.integers(min_value=2, max_value=2000),
    )
    def test_residual_is_rounding_level(self, sigma, gap, x_limit):
        assert mellin_identity_check(chi4(), sigma, sigma + gap, x_limit) < 1e-10
