"""Tests for the small cap decoupling battery."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decoupling_lab.decoupling import (
    ExponentTriple,
    admissible_exponents,
    decoupling_ratio,
    exponent_fit,
    theoretical_bound,
)
from decoupling_lab.errors import InvalidParameterError, UndefinedRatioError
from decoupling_lab.geometry import small_cap_partition
from decoupling_lab.synthesis import (
    FrequencyProfile,
    build_grid,
    build_lattice,
    cap_component,
    make_family,
    synthesize,
)


class TestExponentTriple:
    """Tests for exponent validation and the bound."""

    @given(p=st.integers(min_value=1, max_value=30), q=st.integers(min_value=1, max_value=30))
    @settings(max_examples=200)
    def test_admissibility_is_exact(self, p, q):
        """Test 3/p + 1/q <= 1 against integer arithmetic."""
        triple = ExponentTriple(float(p), float(q), 0.5)

        assert admissible_exponents(triple) == (3 * q + p <= p * q)

    def test_boundary_is_admissible(self):
        """Test that (4, 4) sits exactly on the boundary and is accepted."""
        assert admissible_exponents(ExponentTriple(4.0, 4.0, 0.5))
        assert admissible_exponents(ExponentTriple(6.0, 2.0, 0.5))

    @pytest.mark.parametrize(
        "p,q,beta,match",
        [
            (0.5, 2.0, 0.5, "Invalid p"),
            (6.0, math.inf, 0.5, "Invalid q"),
            (6.0, 6.0, 0.4, "Invalid beta"),
            (6.0, 6.0, 1.1, "Invalid beta"),
        ],
    )
    def test_invalid_triples(self, p, q, beta, match):
        """Test the ranges of p, q and beta."""
        with pytest.raises(InvalidParameterError, match=match):
            ExponentTriple(p, q, beta)

    def test_predicted_exponent(self):
        """Test the dominant exponent of the bound."""
        assert ExponentTriple(6.0, 6.0, 1.0).predicted_exponent() == pytest.approx(3.0)
        assert ExponentTriple(4.0, 4.0, 0.5).predicted_exponent() == pytest.approx(0.5)

    def test_theoretical_bound(self):
        """Test (log R)^(30 + 3p) (1 + R^a + R^b)."""
        triple = ExponentTriple(6.0, 6.0, 1.0)

        bound, core = theoretical_bound(triple, 256)

        assert core == pytest.approx(1.0 + 256.0**3 + 256.0**2)
        assert bound == pytest.approx(8.0**48 * core)

    def test_bound_rejects_inadmissible(self):
        """Test that the bound needs admissible exponents."""
        with pytest.raises(InvalidParameterError, match="3/p \\+ 1/q > 1"):
            theoretical_bound(ExponentTriple(2.0, 2.0, 0.5), 256)


def _dense_lp_power(profile, p, oversampling=8):
    """Riemann sum of |f|^p on a dense grid; exact for even p < oversampling."""
    grid = build_grid(profile.R, oversampling)
    values = synthesize(profile, grid, method="fft").values
    return float(np.sum(np.abs(values) ** p)) * grid.cell_area


def _dense_d_emp(profile, triple, ladder):
    """d_emp from dense grid sums over every small cap."""
    p, q = triple.p, triple.q
    total = 0.0
    for gamma in small_cap_partition(ladder, triple.beta):
        component = cap_component(profile, gamma)
        if not component.is_zero():
            total += _dense_lp_power(component, p) ** (q / p)
    return _dense_lp_power(profile, p) / total ** (p / q)


class TestDecouplingRatio:
    """Tests for decoupling_ratio."""

    @pytest.mark.parametrize("beta", [0.5, 1.0])
    def test_single_cap_has_unit_constant(self, ladder, grid, beta):
        """Test that a function inside one small cap has d_emp = 1."""
        profile = make_family("single_cap", ladder, beta=beta, grid=grid)

        report = decoupling_ratio(profile, ExponentTriple(6.0, 6.0, beta), ladder)

        assert abs(report.d_emp - 1.0) <= 1e-10
        assert report.active_caps == 1

    def test_cap_count(self, ladder):
        """Test that the partition size is recorded."""
        profile = make_family("flat", ladder, normalize=False)

        report = decoupling_ratio(profile, ExponentTriple(4.0, 4.0, 0.5), ladder)

        assert report.cap_count == 32
        assert report.active_caps == 32
        assert report.d_emp > 0.0
        assert report.e1 == 42.0
        assert report.passed

    @pytest.mark.parametrize(
        "family,triple",
        [
            ("flat", ExponentTriple(4.0, 4.0, 0.5)),
            ("gaussian", ExponentTriple(4.0, 4.0, 0.5)),
            ("gaussian", ExponentTriple(6.0, 6.0, 0.5)),
            ("gaussian", ExponentTriple(6.0, 2.0, 0.5)),
        ],
    )
    def test_matches_dense_oversampled_sums(self, ladder, family, triple):
        """Test d_emp against Riemann sums on a grid oversampled twice over."""
        profile = make_family(family, ladder, seed=2, normalize=False)

        report = decoupling_ratio(profile, triple, ladder)

        assert report.d_emp == pytest.approx(_dense_d_emp(profile, triple, ladder), rel=1e-6)

    @pytest.mark.parametrize("scale", [1e-3, 1e3])
    @pytest.mark.parametrize(
        "triple",
        [ExponentTriple(6.0, 6.0, 0.5), ExponentTriple(6.0, 2.0, 0.5), ExponentTriple(4.0, 8.0, 1.0)],
    )
    def test_ratio_is_scale_invariant(self, ladder, scale, triple):
        """Test that d_emp(c f) = d_emp(f) for admissible (p, q)."""
        profile = make_family("random_phase", ladder, seed=4, normalize=False)

        first = decoupling_ratio(profile, triple, ladder)
        second = decoupling_ratio(profile.scaled(scale), triple, ladder)

        assert second.d_emp == pytest.approx(first.d_emp, rel=1e-9)

    def test_dropping_an_active_cap_lowers_denominator(self, ladder):
        """Test that every active small cap contributes to the denominator."""
        triple = ExponentTriple(6.0, 2.0, 0.5)
        profile = make_family("gaussian", ladder, seed=5, normalize=False)
        partition = small_cap_partition(ladder, triple.beta)
        full = decoupling_ratio(profile, triple, ladder)

        for gamma in (partition.caps[0], partition.caps[len(partition) // 2], partition.caps[-1]):
            kept = FrequencyProfile(
                profile.lattice, profile.coeffs - cap_component(profile, gamma).coeffs
            )
            reduced = decoupling_ratio(kept, triple, ladder)

            assert reduced.active_caps == full.active_caps - 1
            assert reduced.denominator < full.denominator

    def test_zero_function(self, ladder):
        """Test that f = 0 has no defined ratio."""
        lattice = build_lattice(256)
        profile = FrequencyProfile(lattice, np.zeros(len(lattice), dtype=complex))

        with pytest.raises(UndefinedRatioError, match="identically zero"):
            decoupling_ratio(profile, ExponentTriple(6.0, 6.0, 0.5), ladder)

    def test_inadmissible(self, ladder):
        """Test that inadmissible exponents are rejected before any work."""
        profile = make_family("flat", ladder, normalize=False)

        with pytest.raises(InvalidParameterError, match="Invalid exponents"):
            decoupling_ratio(profile, ExponentTriple(3.0, 2.0, 0.5), ladder)


class TestExponentFit:
    """Tests for exponent_fit."""

    def test_needs_three_radii(self):
        """Test that fewer than three distinct R are rejected."""
        with pytest.raises(InvalidParameterError, match="at least 3"):
            exponent_fit("flat", ExponentTriple(6.0, 6.0, 1.0), [256, 512, 512])

    def test_inadmissible(self):
        """Test that the fit checks the exponents."""
        with pytest.raises(InvalidParameterError, match="Invalid exponents"):
            exponent_fit("flat", ExponentTriple(2.0, 2.0, 1.0), [256, 512, 1024])

    @pytest.mark.slow
    def test_single_cap_slope_is_zero(self):
        """Test that single-cap functions fit a flat line."""
        fit = exponent_fit("single_cap", ExponentTriple(6.0, 6.0, 0.5), [1024, 256, 512])

        assert fit.radii == [256, 512, 1024]
        assert fit.slope == pytest.approx(0.0, abs=1e-8)
        assert fit.predicted == pytest.approx(1.0)
        assert not fit.attained
        assert "reports" not in fit.summary()
