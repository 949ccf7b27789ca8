"""Tests for Gevrey bumps, radial filters, polynomial weights and the self-test."""

import numpy as np
import pytest

from decoupling_lab.cutoffs import (
    build_filter_bank,
    build_gevrey_bump,
    cutoff_selftest,
    kappa_w,
    plate_weight,
    scale_weight,
    weighted_cell_average,
)
from decoupling_lab.cutoffs.bumps import (
    FIT_RANGE,
    FIT_SAMPLES,
    band_filter,
    box_cutoff,
    box_radii,
)
from decoupling_lab.cutoffs.weights import convolve_weight, weighted_tile_averages
from decoupling_lab.errors import InvalidInputError, InvalidParameterError
from decoupling_lab.geometry import plate_tiling
from decoupling_lab.synthesis import SampledField


@pytest.fixture(scope="module")
def bump():
    """Default reproducing bump."""
    return build_gevrey_bump()


@pytest.fixture(scope="module")
def bank(grid):
    """Radial filters on the R = 256 grid."""
    return build_filter_bank(grid)


class TestGevreyBump:
    """Tests for the Gevrey bump."""

    def test_plateau_and_support(self, bump):
        """Test g = 1 on the plateau and g = 0 from |t| = 1 on."""
        assert bump(0.0) == 1.0
        assert bump(1.0 - bump.epsilon0) == 1.0
        assert bump(1.0) == 0.0
        assert bump(-1.5) == 0.0

    def test_values_in_unit_interval(self, bump):
        """Test 0 <= g <= 1 and g nonincreasing on [0, 1]."""
        t = np.linspace(0.0, 1.0, 4001)
        values = bump(t)

        assert np.all(values >= 0.0)
        assert np.all(values <= 1.0)
        assert np.all(np.diff(values) <= 1e-12)

    def test_radii_sum_to_margin(self, bump):
        """Test that the convolution radii add up to epsilon0/2."""
        assert float(np.sum(bump.radii)) == pytest.approx(bump.margin)
        assert np.all(np.diff(box_radii(1.0, 12)) < 0)

    def test_transform_at_zero(self, bump):
        """Test that the transform at zero is the integral 2(1 - r)."""
        assert float(bump.transform(0.0)) == pytest.approx(2.0 * (1.0 - bump.margin))

    def test_subexponential_decay_fit(self, bump):
        """Test the fitted decay |g^(x)| <= K exp(-c |x|^(1/2)) with c > 0."""
        x = np.linspace(FIT_RANGE[0], FIT_RANGE[1], FIT_SAMPLES)[::50]

        assert bump.decay_constant > 0
        assert bump.fit_residual <= 0.05
        assert np.all(np.abs(bump.transform(x)) <= bump.decay_bound(x) * (1 + 1e-9))

    def test_cached(self):
        """Test that equal parameters return the cached bump."""
        assert build_gevrey_bump(0.25, 40) is build_gevrey_bump(0.25, 40)

    @pytest.mark.parametrize("eps", [0.0, 0.5, -0.1])
    def test_invalid_epsilon(self, eps):
        """Test that epsilon0 outside (0, 1/2) is rejected."""
        with pytest.raises(InvalidParameterError, match="epsilon0"):
            build_gevrey_bump(epsilon0=eps)

    def test_invalid_conv_terms(self):
        """Test that fewer than ten convolution factors are rejected."""
        with pytest.raises(InvalidParameterError, match="conv_terms"):
            build_gevrey_bump(conv_terms=5)


class TestFilters:
    """Tests for the radial filters."""

    def test_low_plus_high_is_base(self, bank):
        """Test eta_<=r + eta_>r = phi exactly."""
        r = 1.0 / 16.0

        np.testing.assert_allclose(bank.low(r) + bank.high(r), bank.base(), atol=1e-15)

    def test_low_is_one_inside_radius(self, bank):
        """Test eta_<=r = 1 for |xi| <= r and 0 for |xi| >= 2r."""
        r = 0.5
        low = bank.low(r)

        assert np.all(low[bank.radius <= r] == 1.0)
        assert np.all(low[bank.radius >= 2 * r] == 0.0)

    def test_annulus_is_nonnegative(self, bank):
        """Test eta_~r >= 0 and vanishing near the origin."""
        annulus = bank.annulus(0.25)

        assert np.all(annulus >= -1e-15)
        assert np.all(annulus[bank.radius <= 0.125] == 0.0)

    def test_low_filter_keeps_constants(self, grid, bank):
        """Test that a constant field passes the low filter unchanged."""
        field = SampledField(grid, np.full((grid.M, grid.M), 3.0))
        filtered = band_filter(field, 0.1, "low", bank)

        np.testing.assert_allclose(filtered.values, 3.0, atol=1e-12)
        assert not np.iscomplexobj(filtered.values)

    def test_invalid_radius(self, bank):
        """Test that a nonpositive radius is rejected."""
        with pytest.raises(InvalidParameterError, match="radius"):
            bank.low(0.0)

    def test_invalid_kind(self, bank):
        """Test that an unknown filter kind is rejected."""
        with pytest.raises(InvalidParameterError, match="filter kind"):
            bank.multiplier(1.0, "bandpass")

    def test_box_cutoff_plateau(self, bump, grid, tree):
        """Test rho_T = 1 at the box centre and 0 far outside."""
        cap = tree.cap(1, 4)
        rho = box_cutoff(bump, grid, cap.center, cap.tangent, cap.box_half_extents())
        freqs = grid.frequencies()
        i = int(np.argmin(np.abs(freqs - cap.center[0])))
        j = int(np.argmin(np.abs(freqs - cap.center[1])))

        assert rho.max() == 1.0
        assert rho[(i + grid.M // 2) % grid.M, j] == 0.0


class TestWeights:
    """Tests for W_U and w_s."""

    def test_scale_weight_unit_mass(self, ladder, grid):
        """Test that every w_k has unit mass."""
        for k in range(ladder.N + 1):
            assert scale_weight(ladder.scale(k), grid).mass == pytest.approx(1.0, abs=1e-8)

    def test_scale_weight_invalid(self, grid):
        """Test that a nonpositive scale is rejected."""
        with pytest.raises(InvalidParameterError, match="scale"):
            scale_weight(0.0, grid)

    def test_plate_weight_peak(self, tree, ladder, grid):
        """Test W_U = 1 at the tile centre and W_U <= 1 everywhere."""
        weight = plate_weight(plate_tiling(tree.cap(1, 3), ladder), grid)

        assert weight.values[0, 0] == 1.0
        assert weight.values.max() == 1.0

    def test_scale_weight_has_no_tiles(self, grid):
        """Test that w_k has no tile translates."""
        with pytest.raises(InvalidParameterError, match="W_U"):
            scale_weight(8.0, grid).at_tile(1)

    def test_kappa_w_bounded(self, tree, ladder, grid):
        """Test 0 < kappa_W < 1 for the realised tiles."""
        value = kappa_w(plate_tiling(tree.cap(2, 0), ladder), grid)

        assert 0.0 < value < 1.0

    def test_average_of_constant(self, tree, ladder, grid):
        """Test that every weighted average of 1 equals kappa_W."""
        plate = plate_tiling(tree.cap(1, 5), ladder)
        weight = plate_weight(plate, grid)
        ones = SampledField(grid, np.ones((grid.M, grid.M)))
        averages = weighted_tile_averages(ones, weight)

        np.testing.assert_allclose(averages, kappa_w(plate, grid), rtol=1e-12)
        assert weighted_cell_average(ones, 2, weight) == pytest.approx(averages[2])

    def test_negative_field_rejected(self, tree, ladder, grid):
        """Test that weighted averages refuse negative fields."""
        weight = plate_weight(plate_tiling(tree.cap(1, 0), ladder), grid)
        field = SampledField(grid, -np.ones((grid.M, grid.M)))

        with pytest.raises(InvalidInputError, match="negative"):
            weighted_cell_average(field, 0, weight)

    def test_convolution_preserves_constants(self, grid):
        """Test that convolving 1 with a unit-mass w_s gives 1."""
        ones = SampledField(grid, np.ones((grid.M, grid.M)))
        smoothed = convolve_weight(ones, scale_weight(8.0, grid))

        np.testing.assert_allclose(smoothed.values, 1.0, atol=1e-10)


class TestSelftest:
    """Tests for the cutoff self-test report."""

    def test_selftest_passes(self, grid):
        """Test that the self-test passes at R = 256."""
        report = cutoff_selftest(256, seed=0, grid=grid)

        assert report.passed
        assert report.plateau_value == 1.0
        assert report.edge_value == 0.0
        assert len(report.levels) == 2
        for check in report.levels:
            assert check.partition_deviation <= 1e-8
            assert check.min_psi >= -1e-14
            assert check.peak_at_centre
        assert report.filter_identity_error <= 1e-12

    def test_selftest_is_deterministic(self, grid):
        """Test that equal seeds give equal reports."""
        a = cutoff_selftest(256, seed=4, grid=grid)
        b = cutoff_selftest(256, seed=4, grid=grid)

        assert a.model_dump() == b.model_dump()
