"""Tests for the high/low lemma verifiers and their reports."""

import math

import numpy as np
import pytest

from decoupling_lab.config import configure_verifiers, reset_config
from decoupling_lab.errors import InvalidInputError, InvalidParameterError
from decoupling_lab.highlow.lemmas import (
    constancy_ratio,
    high_lemma_ratio,
    low_lemma_residual,
    near_ranges,
    sliding_near_sums,
    weak_high_domination,
)
from decoupling_lab.highlow.registry import LEMMA_NAMES, run_lemma
from decoupling_lab.highlow.report import (
    LemmaReport,
    identity_report,
    log_exponent,
    ratio_report,
)
from decoupling_lab.highlow.squares import (
    SquareField,
    square_field,
    square_field_leakage,
    tile_square_norms,
)


class TestReports:
    """Tests for report construction."""

    def setup_method(self):
        reset_config()

    def teardown_method(self):
        reset_config()

    def test_log_exponent(self):
        """Test log ratio / log log R."""
        assert log_exponent(8.0, 8.0) == pytest.approx(1.0)
        assert log_exponent(0.0, 8.0) is None
        assert log_exponent(math.inf, 8.0) is None
        assert log_exponent(None, 8.0) is None

    def test_ratio_within_allowance_passes(self):
        """Test lhs/rhs <= tol (log R)^(power + slack)."""
        report = ratio_report("x", {}, 64.0, 1.0, 8.0, 2.0, tolerance_factor=1.0, exponent_slack=0.0)

        assert report.passed
        assert report.ratio == 64.0
        assert report.log_exponent == pytest.approx(2.0)

    def test_ratio_above_allowance_fails(self):
        """Test that a ratio above the allowance fails."""
        report = ratio_report("x", {}, 65.0, 1.0, 8.0, 2.0, tolerance_factor=1.0, exponent_slack=0.0)

        assert not report.passed

    def test_zero_lhs_is_vacuous_with_zero_rhs(self):
        """Test that 0 <= 0 passes and is marked vacuous."""
        report = ratio_report("x", {}, 0.0, 0.0, 8.0, 1.0)

        assert report.passed
        assert report.vacuous
        assert report.ratio == 0.0

    def test_zero_rhs_fails(self):
        """Test that a positive lhs against a zero rhs fails with no finite ratio."""
        report = ratio_report("x", {}, 1.0, 0.0, 8.0, 1.0)

        assert not report.passed
        assert report.ratio is None

    def test_defaults_from_config(self):
        """Test that the tolerance and slack come from configuration."""
        configure_verifiers(tolerance_factor=3.0, exponent_slack=0.25)

        report = ratio_report("x", {}, 1.0, 1.0, 8.0, 1.0)

        assert report.tolerance_factor == 3.0
        assert report.exponent_slack == 0.25

    def test_identity_report(self):
        """Test identity reports pass on the residual."""
        assert identity_report("low", {}, 2.0, 2.0, 1e-9, 1e-6).passed
        assert not identity_report("low", {}, 2.0, 1.0, 0.5, 1e-6).passed
        assert identity_report("low", {}, 0.0, 0.0, 1.0, 1e-6).vacuous


class TestNearSums:
    """Tests for near ranges and the sliding window."""

    def test_ranges_contain_own_index(self, tree):
        """Test that every cap is near itself and ranges are contiguous."""
        caps = tree.caps(2)
        ranges = near_ranges(caps)

        for i, (lo, hi) in enumerate(ranges):
            assert lo <= i <= hi
        assert [lo for lo, _ in ranges] == sorted(lo for lo, _ in ranges)

    def test_sliding_sums_match_direct(self, tree):
        """Test that windowed sums equal direct sums over each range."""
        caps = tree.caps(2)
        ranges = near_ranges(caps)
        built = []

        def build(j):
            built.append(j)
            return np.array([float(j)])

        for i, own, near in sliding_near_sums(build, ranges):
            lo, hi = ranges[i]
            assert own[0] == i
            assert near[0] == sum(range(lo, hi + 1))
        assert sorted(built) == list(range(len(caps)))


class TestSquareFields:
    """Tests for square function fields."""

    def test_square_field_is_sum_over_thetas(self, decomp):
        """Test that the whole-cell square field of f integrates to sum ||f_theta||^2."""
        sq = square_field(decomp)
        direct = sum(
            float(np.sum(np.abs(decomp.theta_field(t)) ** 2)) for t in decomp.thetas
        ) * decomp.grid.cell_area

        assert sq.integral == pytest.approx(direct)

    def test_tile_norms_partition_the_integral(self, decomp, tree):
        """Test that tile norms over a plate sum to the integral."""
        cap = tree.cap(1, 3)
        sq = square_field(decomp, cap)

        assert tile_square_norms(sq, decomp.system(cap)).sum() == pytest.approx(sq.integral)

    def test_square_field_spectrum_is_small(self, decomp, tree):
        """Test that |f_theta|^2 sums have their spectrum near the origin."""
        sq = square_field(decomp, tree.cap(1, 5))

        assert square_field_leakage(sq, 0.5) <= 1e-12

    def test_member_needs_level(self, decomp):
        """Test that bad and pruned members need a level."""
        with pytest.raises(InvalidParameterError, match="needs a level"):
            square_field(decomp, None, "bad")

    def test_unknown_member(self, decomp):
        """Test that an unknown member is rejected."""
        with pytest.raises(InvalidParameterError, match="Invalid member"):
            square_field(decomp, None, "good", 2)

    def test_negative_values_rejected(self, grid):
        """Test that a negative square field is invalid input."""
        with pytest.raises(InvalidInputError, match="negative"):
            SquareField(grid, None, None, -np.ones((grid.M, grid.M)))


class TestLowLemma:
    """Tests for the low-lemma identity."""

    def test_identity_holds(self, decomp):
        """Test that the filtered bad square equals the near-pair sum."""
        report = low_lemma_residual(decomp, 2, 2)

        assert report.passed
        assert report.residual <= 1e-6

    def test_identity_inside_a_cap(self, decomp):
        """Test the identity for tau_1 inside the cell."""
        report = low_lemma_residual(decomp, 2, 2, s=1, cap_index=4)

        assert report.residual <= 1e-6

    def test_radius_above_gate(self, decomp):
        """Test that r above 1/R_k is rejected."""
        with pytest.raises(InvalidParameterError, match="Invalid r"):
            low_lemma_residual(decomp, 2, 2, r=1.0)

    @pytest.mark.parametrize("m,k", [(1, 2), (3, 3), (2, 1)])
    def test_invalid_indices(self, decomp, m, k):
        """Test that m and k outside 2 <= m <= k <= N are rejected."""
        with pytest.raises(InvalidParameterError):
            low_lemma_residual(decomp, m, k)


class TestHighAndConstancy:
    """Tests for the high-lemma, constancy and domination verifiers."""

    @pytest.mark.parametrize("variant", ["a", "b", "c"])
    def test_high_variants_report(self, decomp, variant):
        """Test that every variant reports nonnegative sides and its stated power."""
        report = high_lemma_ratio(decomp, variant, 2, 0, 1 if variant == "c" else 0)

        assert report.lemma == f"high-{variant}"
        assert report.lhs >= 0.0 and report.rhs >= 0.0
        assert report.stated_power == (4.0 if variant == "c" else 1.0)

    def test_high_unknown_variant(self, decomp):
        """Test that an unknown variant is rejected."""
        with pytest.raises(InvalidParameterError, match="Valid options: a, b, c"):
            high_lemma_ratio(decomp, "d", 2, 0)

    def test_high_k_plus_l_bounded(self, decomp):
        """Test that k + l above N is rejected."""
        with pytest.raises(InvalidParameterError, match="at most N"):
            high_lemma_ratio(decomp, "c", 2, 1, 2)

    def test_pointwise_theta_tolerance(self, decomp):
        """Test that the pointwise check passes at ten times the kernel mass."""
        report = constancy_ratio(decomp, "pointwise_theta")

        assert report.tolerance_factor == pytest.approx(10.0 * report.extras["kernel_l1"])

    def test_integrated_a_needs_dyadic_radius(self, decomp):
        """Test that a non-dyadic r is rejected."""
        with pytest.raises(InvalidParameterError, match="dyadic"):
            constancy_ratio(decomp, "integrated_a", m=2, k=2, r=0.3)

    def test_integrated_a_unknown_gate(self, decomp):
        """Test that an unknown gate is rejected."""
        with pytest.raises(InvalidParameterError, match="Invalid gate"):
            constancy_ratio(decomp, "integrated_a", m=2, k=2, r=1 / 16, gate="other")

    def test_integrated_a_records_both_gates(self, decomp):
        """Test that both gate readings and the log-free reading are reported."""
        report = constancy_ratio(decomp, "integrated_a", m=2, k=2, r=1 / 16, cap_index=0)

        assert {"loose_gate", "strict_gate", "passed_without_log"} <= set(report.extras)

    def test_integrated_b_needs_k_at_least_m(self, decomp):
        """Test that k < m is rejected."""
        with pytest.raises(InvalidParameterError, match="needs k >= m"):
            constancy_ratio(decomp, "integrated_b", m=2, k=1)

    def test_domination_k_below_m(self, decomp):
        """Test that k >= m is rejected."""
        with pytest.raises(InvalidParameterError, match="Invalid k"):
            weak_high_domination(decomp, 2, 2, "a")

    def test_domination_uses_kappa(self, decomp):
        """Test that part a is judged against the configured kappa."""
        report = weak_high_domination(decomp, 2, 0, "a")

        assert report.tolerance_factor == 10.0
        assert report.exponent_slack == 0.0


class TestRegistry:
    """Tests for run_lemma dispatch."""

    def test_unknown_lemma(self, decomp):
        """Test that an unknown name lists the valid ones."""
        with pytest.raises(InvalidParameterError, match="Invalid lemma"):
            run_lemma("medium", decomp)

    def test_low_defaults(self, decomp):
        """Test that low defaults to m = k = N."""
        report = run_lemma("low", decomp)

        assert report.params["m"] == decomp.N
        assert report.params["k"] == decomp.N

    @pytest.mark.slow
    @pytest.mark.parametrize("name", LEMMA_NAMES)
    def test_every_lemma_runs(self, decomp, name):
        """Test that every verifier runs on its defaults and names itself."""
        report = run_lemma(name, decomp, seed=3, nodes=500)

        assert isinstance(report, LemmaReport)
        assert report.lemma == name
