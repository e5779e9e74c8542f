"""Tests for exact continued fractions, Liouville witnesses and equidistribution counts."""

from fractions import Fraction
from math import isqrt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hofer_lab.core.diophantine import (
    ContinuedFraction,
    GrowthSchedule,
    PowerOfTwoRule,
    QuadraticIrrational,
    TorusVector,
    cf_expand,
    circle_norm,
    circle_norm_interval,
    compare_with_exp_neg,
    construct_exp_liouville,
    discrepancy_bound,
    equidistribution_density,
    exact_ceil_exp,
    exp_bounds,
    exp_liouville_witnesses,
    is_rational_within,
    random_quadratic,
    torus_norm,
    verify_certificate,
)
from hofer_lab.core.errors import DomainError, PrecisionError

GOLDEN_CONJUGATE = 0.6180339887498949


@pytest.fixture
def golden():
    return cf_expand(QuadraticIrrational.golden())


class TestExponentials:
    def test_e(self):
        lo, hi = exp_bounds(1, 64)
        assert lo <= Fraction("2.7182818284590452354")
        assert hi >= Fraction("2.7182818284590452353")
        assert hi - lo < Fraction(1, 2**60)

    def test_inverse_e(self):
        lo, hi = exp_bounds(-1, 64)
        assert lo <= Fraction("0.3678794411714423216")
        assert hi >= Fraction("0.3678794411714423215")

    def test_zero(self):
        assert exp_bounds(0) == (1, 1)

    @given(st.fractions(min_value=-20, max_value=20, max_denominator=50))
    @settings(max_examples=50, deadline=None)
    def test_enclosures_are_ordered(self, x):
        lo, hi = exp_bounds(x, 48)
        assert 0 < lo <= hi

    def test_ceil(self):
        assert exact_ceil_exp(Fraction(1)) == 3
        assert exact_ceil_exp(Fraction(2)) == 8

    def test_comparison(self):
        assert compare_with_exp_neg(Fraction(1, 3), Fraction(1, 3), Fraction(1)) is True
        assert compare_with_exp_neg(Fraction(1, 2), Fraction(1, 2), Fraction(1)) is False


class TestCircleNorm:
    def test_point(self):
        assert circle_norm(Fraction(9, 10)) == Fraction(1, 10)
        assert circle_norm(Fraction(-1, 4)) == Fraction(1, 4)

    def test_interval_across_an_integer(self):
        assert circle_norm_interval(Fraction(9, 10), Fraction(11, 10)) == (0, Fraction(1, 10))

    def test_interval_across_a_half(self):
        assert circle_norm_interval(Fraction(1, 5), Fraction(4, 5)) == (Fraction(1, 5), Fraction(1, 2))

    def test_torus_norm(self):
        assert torus_norm([0.9]) == (Fraction(1, 10), Fraction(1, 10))
        assert torus_norm(["1/4", "3/4"]) == (Fraction(1, 4), Fraction(1, 4))


class TestGrowthSchedule:
    def test_parse_linear(self):
        schedule = GrowthSchedule.parse("c_n=2n+1")
        assert (schedule.kind, schedule.c(3)) == ("linear", 7)
        assert schedule.unbounded

    def test_parse_identity(self):
        assert GrowthSchedule.parse("c_n=n").c(5) == 5

    def test_parse_constant(self):
        schedule = GrowthSchedule.parse("c_n=5")
        assert schedule.c(100) == 5
        assert not schedule.unbounded

    def test_parse_garbage(self):
        with pytest.raises(DomainError):
            GrowthSchedule.parse("c_n=abc")


class TestContinuedFractions:
    def test_rational(self):
        cf = cf_expand(Fraction(3, 4))
        assert cf.quotients == (0, 1, 3)
        assert cf.value == Fraction(3, 4)
        assert not cf.infinite

    def test_sqrt_two(self):
        cf = cf_expand(QuadraticIrrational.sqrt(2), depth=3)
        assert cf.convergents()[:4] == [(1, 1), (3, 2), (7, 5), (17, 12)]

    def test_golden_denominators_are_fibonacci(self, golden):
        assert golden.quotients[:4] == (0, 1, 1, 1)
        assert golden.denominators()[:8] == [1, 1, 2, 3, 5, 8, 13, 21]

    def test_enclosure(self, golden):
        lo, hi = golden.enclosure()
        assert lo < hi
        assert float(lo) == pytest.approx(GOLDEN_CONJUGATE, abs=1e-12)
        assert float(hi) == pytest.approx(GOLDEN_CONJUGATE, abs=1e-12)

    @given(st.integers(2, 500).filter(lambda d: isqrt(d) ** 2 != d))
    @settings(max_examples=30, deadline=None)
    def test_convergent_law(self, d):
        cf = cf_expand(QuadraticIrrational.sqrt(d), depth=12)
        lo, hi = cf.enclosure()
        pairs = cf.convergents()
        for (p, q), (_, q_next) in zip(pairs[:-2], pairs[1:-1]):
            assert max(abs(q * lo - p), abs(q * hi - p)) < Fraction(1, q_next)

    def test_error_interval_beats_next_denominator(self, golden):
        for n in range(1, 10):
            _, upper = golden.error_interval(n)
            assert upper < Fraction(1, golden.convergent(n + 1)[1])

    def test_infinite_has_no_value(self, golden):
        with pytest.raises(DomainError):
            golden.value

    def test_invalid_quotients(self):
        with pytest.raises(DomainError):
            ContinuedFraction([])
        with pytest.raises(DomainError):
            ContinuedFraction([0, 0])

    def test_quadratic_needs_non_square(self):
        with pytest.raises(ValueError):
            QuadraticIrrational.sqrt(4)

    def test_descriptor(self):
        descriptor = cf_expand(Fraction(3, 4)).descriptor()
        assert descriptor["denominators"] == ["1", "1", "4"]
        assert descriptor["rule"] is None


class TestExpLiouville:
    def test_construction_caps(self):
        cf = construct_exp_liouville(GrowthSchedule.parse("c_n=n"), stages=10)
        assert cf.denominators()[:3] == [1, 2, 17]
        assert cf.depth == 3
        assert cf.capped
        assert cf.denominators()[3] > 10**15
        assert cf.proves_liouville

    def test_capped_convergent_is_a_precision_error(self):
        cf = construct_exp_liouville(GrowthSchedule(), stages=10)
        with pytest.raises(PrecisionError):
            cf.convergent(5)

    def test_bounded_schedule_does_not_prove(self):
        assert not construct_exp_liouville(GrowthSchedule.parse("c_n=1"), stages=2).proves_liouville

    def test_witnesses_on_convergents(self):
        cf = construct_exp_liouville(GrowthSchedule.parse("c_n=n"), stages=4)
        certificate = exp_liouville_witnesses(cf, 1, 1000)
        assert 17 in [w.k for w in certificate.witnesses]
        assert verify_certificate(certificate, cf)

    def test_certificate_json(self):
        cf = construct_exp_liouville(GrowthSchedule.parse("c_n=n"), stages=4)
        payload = exp_liouville_witnesses(cf, 1, 1000).to_json_dict()
        assert (payload["c"], payload["k_max"]) == ("1", 1000)
        assert set(payload["witnesses"][0]) == {"k", "dist_num", "dist_den_log2", "bound_log"}

    def test_power_of_two_rule_below_log_two(self):
        cf = ContinuedFraction([0, 1], PowerOfTwoRule())
        certificate = exp_liouville_witnesses(cf, Fraction(1, 2), 100)
        assert {3, 25} <= {w.k for w in certificate.witnesses}
        assert not cf.proves_liouville

    @pytest.mark.slow
    def test_golden_has_no_witnesses(self, golden):
        certificate = exp_liouville_witnesses(golden, 1, 10_000)
        assert certificate.witnesses == []
        assert certificate.undecided == []

    def test_rational_is_rejected(self):
        with pytest.raises(DomainError):
            exp_liouville_witnesses(cf_expand(Fraction(1, 3)), 1, 10)

    def test_decay_must_be_positive(self, golden):
        with pytest.raises(DomainError):
            exp_liouville_witnesses(golden, 0, 10)

    def test_torus_vector_properties(self, golden):
        vector = TorusVector.of(golden, "1/3")
        assert vector.k == 2
        assert not vector.is_rational
        assert TorusVector.of("5/4").components == (Fraction(1, 4),)


class TestEquidistribution:
    def test_golden_density(self, golden):
        assert equidistribution_density(golden, 0.1, 100_000) == pytest.approx(0.2, abs=0.01)

    def test_rational_density(self):
        assert equidistribution_density(Fraction(1, 3), 0.05, 99) == pytest.approx(1 / 3)

    @pytest.mark.parametrize("eps", [0, 0.6])
    def test_eps_range(self, golden, eps):
        with pytest.raises(DomainError):
            equidistribution_density(golden, eps, 10)

    def test_discrepancy(self, golden):
        assert discrepancy_bound(Fraction(1, 3), 10) == pytest.approx(0.3)
        assert discrepancy_bound(golden, 10) == pytest.approx(0.6)

    def test_random_quadratic(self):
        vector = random_quadratic(2)
        assert vector.k == 1
        assert not vector.is_rational


class TestRationalWithin:
    def test_near_third(self):
        assert is_rational_within(0.333334, 10, 1e-5) == Fraction(1, 3)

    def test_exact_half(self):
        assert is_rational_within(0.5, 10, 0) == Fraction(1, 2)

    def test_golden_is_not_rational(self):
        assert is_rational_within(GOLDEN_CONJUGATE, 10**6, 1e-13) is None

    def test_interval_input(self):
        assert is_rational_within((Fraction(1, 7) - Fraction(1, 10**9), Fraction(1, 7)), 100, 1e-8) == Fraction(1, 7)
