"""Tests for the wave envelope estimate."""

import numpy as np
import pytest

from decoupling_lab.envelope import (
    EnvelopeReport,
    alpha_grid,
    envelope_scan,
    envelope_sides,
    scan_maxima,
    superlevel_decomposition,
)
from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.synthesis import FrequencyProfile, build_lattice


def _report(family, R, exponent, passed=True):
    return EnvelopeReport(
        family=family,
        R=R,
        alpha=1.0,
        cp=1.0,
        lhs=1.0,
        rhs_core=1.0,
        rhs_weighted=1.0,
        log_exponent=exponent,
        e2=31.0,
        superlevel_measure=0.0,
        quantization_error=0.0,
        passed=passed,
    )


class TestAlphaGrid:
    """Tests for the default amplitude grid."""

    def test_grid_at_256(self):
        """Test 2^(j/2) for j = 0..log2 R."""
        grid = alpha_grid(256)

        assert len(grid) == 9
        assert grid[0] == 1.0
        assert grid[-1] == pytest.approx(16.0)

    def test_grid_is_increasing(self):
        """Test that amplitudes increase by sqrt(2)."""
        grid = alpha_grid(1024)

        np.testing.assert_allclose(np.diff(np.log2(grid)), 0.5)


class TestEnvelopeSides:
    """Tests for envelope_sides."""

    def test_sides_on_shared_decomposition(self, decomp):
        """Test lhs = alpha^4 |U_alpha| and ratio = lhs / rhs_core."""
        report = envelope_sides(decomp.profile, decomp.alpha, grid=decomp.grid, decomp=decomp)

        assert report.lhs == pytest.approx(decomp.alpha**4 * report.superlevel_measure)
        if report.rhs_core > 0:
            assert report.ratio == pytest.approx(report.lhs / report.rhs_core)
        assert report.tile_counts == {1: 8, 2: 16}
        assert report.e2 == 31.0
        assert report.passed

    def test_population_matches_gauges(self, decomp):
        """Test that the gauge population counts tiles of active caps."""
        report = envelope_sides(decomp.profile, decomp.alpha, grid=decomp.grid, decomp=decomp)

        for level, count in report.gauge_population.items():
            expected = sum(
                len(decomp.gauge_set(c))
                for c in decomp.tree.caps(level)
                if decomp.active.get(c.key, False)
            )
            assert count == expected

    def test_zero_function_is_vacuous(self, grid):
        """Test that f = 0 gives an empty, passing report."""
        lattice = build_lattice(256)
        profile = FrequencyProfile(lattice, np.zeros(len(lattice), dtype=complex))

        report = envelope_sides(profile, 2.0, grid=grid)

        assert report.vacuous
        assert report.passed
        assert report.ratio is None

    def test_alpha_out_of_range_noted(self, decomp):
        """Test that alpha above R^(1/2) warns and is recorded."""
        with pytest.warns(UserWarning, match="outside"):
            report = envelope_sides(decomp.profile, 32.0, grid=decomp.grid)

        assert any("outside" in note for note in report.warnings)


class TestScan:
    """Tests for envelope_scan and scan_maxima."""

    def test_negative_perturb(self):
        """Test that a negative perturbation count is rejected."""
        with pytest.raises(InvalidParameterError, match="perturb"):
            envelope_scan(["flat"], [256], perturb=-1)

    def test_scan_with_perturbation(self):
        """Test one point with one random re-drawing."""
        reports = envelope_scan(["plane_wave"], [256], alphas=[2.0], seed=3, perturb=1)

        assert len(reports) == 1
        assert reports[0].perturbations == 1
        assert reports[0].family == "plane_wave"

    def test_scan_is_deterministic(self):
        """Test that the same seed gives the same reports."""
        first = envelope_scan(["random_phase"], [256], alphas=[4.0], seed=9)
        second = envelope_scan(["random_phase"], [256], alphas=[4.0], seed=9)

        assert first[0].model_dump() == second[0].model_dump()

    def test_maxima(self):
        """Test the largest exponent per family and R."""
        reports = [
            _report("flat", 256, 0.5),
            _report("flat", 256, 1.5),
            _report("flat", 256, None, passed=False),
            _report("gaussian", 256, None),
        ]

        maxima = scan_maxima(reports)

        assert maxima["flat:256"]["max_log_exponent"] == 1.5
        assert maxima["flat:256"]["passed"] is False
        assert maxima["gaussian:256"]["max_log_exponent"] is None


class TestSuperlevel:
    """Tests for the superlevel reduction."""

    def test_v_is_covered(self, decomp):
        """Test that V_alpha is covered by U^1 and the U^m."""
        report = superlevel_decomposition(decomp)

        assert report.v_uncovered == 0
        assert report.passed

    def test_u_inside_v_when_gap_small(self, decomp):
        """Test that U_alpha lies in V_alpha when the replacement gap is below alpha/2."""
        report = superlevel_decomposition(decomp)

        if report.u_in_v_expected:
            assert report.u_outside_v == 0
        assert set(report.um_measures) == set(range(2, decomp.N + 1))
