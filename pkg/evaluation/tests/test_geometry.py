"""Tests for frequency geometry: ladder, caps, small caps and plates."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.geometry import (
    are_near,
    build_cap_tree,
    build_scale_ladder,
    plate_tiling,
    small_cap_partition,
)


class TestScaleLadder:
    """Tests for build_scale_ladder."""

    def test_ladder_65536(self):
        """Test R = 2^16: L = 16, N = 2, scales 1, 16 and R_N = 256."""
        ladder = build_scale_ladder(65536)

        assert ladder.N == 2
        assert ladder.logR == 16.0
        assert list(ladder.scales) == [1.0, 16.0, 256.0]
        assert ladder.RN == 256.0

    def test_ladder_256(self):
        """Test R = 256: L = 8 and N = ceil(4/3) = 2."""
        ladder = build_scale_ladder(256)

        assert ladder.N == 2
        assert ladder.scales == (1.0, 8.0, 16.0)

    def test_to_dict_lists_scales_below_n(self):
        """Test that to_dict reports R_0..R_{N-1} and R_N separately."""
        data = build_scale_ladder(65536).to_dict()

        assert data["scales"] == [1.0, 16.0]
        assert data["RN"] == 256.0

    def test_scale_beyond_n_continues_geometrically(self):
        """Test that R_j for j > N is (log2 R)^j."""
        ladder = build_scale_ladder(256)

        assert ladder.scale(3) == 8.0**3
        assert ladder.scale(5) == 8.0**5

    def test_negative_scale_index(self):
        """Test that a negative ladder index is rejected."""
        with pytest.raises(InvalidParameterError, match="ladder index"):
            build_scale_ladder(256).scale(-1)

    @pytest.mark.parametrize("R", [100, 300, 1000])
    def test_rejects_non_power_of_two(self, R):
        """Test that R must be a power of two."""
        with pytest.raises(InvalidParameterError, match="power of two"):
            build_scale_ladder(R)

    def test_rejects_small_r(self):
        """Test that R below 256 is rejected."""
        with pytest.raises(InvalidParameterError, match=">= 256"):
            build_scale_ladder(128)

    @settings(max_examples=10, deadline=None)
    @given(exponent=st.integers(min_value=8, max_value=40))
    def test_n_is_least_with_scale_above_sqrt(self, exponent):
        """Test that N is the least integer with (log2 R)^N >= R^(1/2)."""
        ladder = build_scale_ladder(2**exponent)
        L = float(exponent)

        assert L**ladder.N >= 2 ** (exponent / 2) * (1 - 1e-12)
        assert L ** (ladder.N - 1) < 2 ** (exponent / 2)


class TestCapTree:
    """Tests for nested cap partitions."""

    def test_level_counts(self, tree):
        """Test cap counts 1, 2*ceil(R_1) and 2*ceil(R^(1/2)) at R = 256."""
        assert len(tree.caps(0)) == 1
        assert len(tree.caps(1)) == 16
        assert len(tree.thetas) == 32

    def test_levels_partition_interval(self, tree, ladder):
        """Test that every level tiles [-1, 1] with no gaps, exactly."""
        for level in range(ladder.N + 1):
            caps = tree.caps(level)
            assert caps[0].a == -1
            assert caps[-1].b == 1
            for left, right in zip(caps, caps[1:], strict=False):
                assert left.b == right.a
            assert sum((c.width for c in caps), Fraction(0)) == 2

    def test_only_last_cap_is_closed(self, tree):
        """Test that only the rightmost cap owns the endpoint 1."""
        closed = [cap.index for cap in tree.thetas if cap.closed]

        assert closed == [len(tree.thetas) - 1]

    def test_nesting(self, tree, ladder):
        """Test that each cap lies in its parent and children cover it."""
        for level in range(1, ladder.N + 1):
            for cap in tree.caps(level):
                parent = tree.parent(cap)
                assert parent is not None
                assert parent.contains(cap)
        for cap in tree.caps(1):
            children = tree.child_caps(cap)
            assert children[0].a == cap.a
            assert children[-1].b == cap.b

    def test_ancestor_and_descendants(self, tree, ladder):
        """Test ancestor lookup and the descendant list."""
        theta = tree.thetas[5]
        assert tree.ancestor(theta, 0) == tree.cap(0, 0)
        assert theta in tree.descendants(tree.ancestor(theta, 1), ladder.N)
        assert len(tree.descendants(tree.cap(0, 0), ladder.N)) == len(tree.thetas)

    def test_theta_ancestry_table(self, tree, ladder):
        """Test the theta ancestry table against ancestor()."""
        table = tree.theta_ancestry

        assert table.shape == (len(tree.thetas), ladder.N + 1)
        assert np.all(table[:, 0] == 0)
        assert table[7, 1] == tree.ancestor(tree.thetas[7], 1).index

    def test_invalid_level(self, tree):
        """Test that an out-of-range level is rejected."""
        with pytest.raises(InvalidParameterError, match="Invalid level"):
            tree.caps(5)

    def test_cap_frames(self, tree):
        """Test that tangent and normal are orthonormal."""
        cap = tree.cap(1, 3)
        tx, ty = cap.tangent
        nx, ny = cap.normal

        assert math.isclose(tx * tx + ty * ty, 1.0)
        assert math.isclose(tx * nx + ty * ny, 0.0, abs_tol=1e-15)


class TestSmallCaps:
    """Tests for small cap partitions."""

    @pytest.mark.parametrize("beta,count", [(0.5, 32), (1.0, 512)])
    def test_counts(self, ladder, beta, count):
        """Test the number of small caps at R = 256."""
        assert len(small_cap_partition(ladder, beta)) == count

    @settings(max_examples=20, deadline=None)
    @given(beta=st.floats(min_value=0.5, max_value=1.0))
    def test_partition_is_exact(self, beta):
        """Test that small caps tile [-1, 1] exactly for any beta."""
        partition = small_cap_partition(build_scale_ladder(256), beta)
        caps = partition.caps

        assert caps[0].a == -1
        assert caps[-1].b == 1
        assert all(left.b == right.a for left, right in zip(caps, caps[1:], strict=False))

    @pytest.mark.parametrize("beta", [0.4, 1.1])
    def test_rejects_beta_out_of_range(self, ladder, beta):
        """Test that beta outside [1/2, 1] is rejected."""
        with pytest.raises(InvalidParameterError, match="beta"):
            small_cap_partition(ladder, beta)

    @pytest.mark.parametrize("beta", [0.5, 0.75, 1.0])
    def test_cap_of_matches_intervals(self, ladder, beta):
        """Test that cap_of returns the cap whose interval holds j/R."""
        partition = small_cap_partition(ladder, beta)
        R = ladder.R
        j = np.arange(-R, R + 1)

        owners = partition.cap_of(j)

        for column, owner in zip(j.tolist(), owners.tolist(), strict=True):
            gamma = partition.caps[owner]
            x = Fraction(column, R)
            assert gamma.a <= x < gamma.b or (gamma.closed and x == gamma.b)

    def test_cap_of_rejects_outside_columns(self, ladder):
        """Test that columns beyond |j| = R are rejected."""
        partition = small_cap_partition(ladder, 0.5)

        with pytest.raises(InvalidParameterError, match="Invalid column"):
            partition.cap_of(np.array([ladder.R + 1]))


class TestPlates:
    """Tests for dual plate tilings."""

    def test_plate_dimensions(self, tree, ladder):
        """Test the tile count n_k = 2^floor(log2 R_k) and realised width R/n_k."""
        plate = plate_tiling(tree.cap(1, 0), ladder)

        assert plate.count == 8
        assert plate.width == 32
        assert plate.area == 32.0 * 256
        assert plate.nominal_area == 256.0 * 32.0

    def test_orientation_follows_normal(self, tree, ladder):
        """Test that the long side points along the cap normal up to rounding."""
        cap = tree.cap(2, 3)
        plate = plate_tiling(cap, ladder)
        ox, oy = plate.orientation
        nx, ny = cap.normal

        assert abs(ox * nx + oy * ny) > 0.95

    def test_tiles_partition_cell(self, tree, ladder):
        """Test that tile indices cover every node of the cell equally."""
        plate = plate_tiling(tree.cap(1, 2), ladder)
        x = np.arange(0, 256, 1.0)
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        counts = np.bincount(plate.tile_index(x1, x2).ravel(), minlength=plate.count)

        assert np.all(counts == counts[0])
        assert counts.sum() == 256 * 256

    def test_tile_centre_maps_to_its_index(self, tree, ladder):
        """Test that each tile centre lies in its own tile."""
        plate = plate_tiling(tree.cap(2, 9), ladder)
        for index, (cx, cy) in plate.tiles():
            assert plate.tile_index(np.array([cx]), np.array([cy]))[0] == index

    def test_level_zero_has_no_plate(self, tree, ladder):
        """Test that tau_0 has no plate."""
        with pytest.raises(InvalidParameterError, match="No plate"):
            plate_tiling(tree.cap(0, 0), ladder)


class TestNear:
    """Tests for the near relation."""

    def test_near_is_symmetric(self, tree):
        """Test that are_near is symmetric and reflexive."""
        caps = tree.caps(1)
        for a in caps:
            assert are_near(a, a)
            for b in caps:
                assert are_near(a, b) == are_near(b, a)

    def test_far_caps(self, tree):
        """Test that the two ends of the parabola are far at level 2."""
        thetas = tree.thetas

        assert not are_near(thetas[0], thetas[-1])

    def test_mixed_levels_rejected(self, tree):
        """Test that caps from different levels are rejected."""
        with pytest.raises(InvalidParameterError, match="levels"):
            are_near(tree.cap(1, 0), tree.cap(2, 0))
