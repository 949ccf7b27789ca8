"""Tests for broad/narrow classification and the bilinear check."""

from fractions import Fraction

import numpy as np
import pytest

from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.highlow.dichotomy import (
    bilinear_ratio,
    broad_set_measures,
    classify_point,
    classify_points,
    omega_caps,
)
from decoupling_lab.highlow.registry import narrow_coverage


@pytest.fixture(scope="module")
def sample_nodes(decomp):
    rng = np.random.default_rng(11)
    return rng.choice(decomp.grid.M**2, size=2000, replace=False)


@pytest.fixture(scope="module")
def classified(decomp, sample_nodes):
    return classify_points(decomp, 2, sample_nodes)


class TestClassification:
    """Tests for classify_points."""

    def test_shapes(self, decomp, classified, sample_nodes):
        """Test per-level array shapes."""
        N = decomp.N
        assert classified.chain.shape == (N + 1, sample_nodes.size)
        assert classified.broad.shape == (N, sample_nodes.size)
        assert classified.narrow.shape == (N, sample_nodes.size)

    def test_chain_descends_the_tree(self, decomp, classified):
        """Test that each chain entry is a child of the one above it."""
        tree = decomp.tree
        assert (classified.chain[0] == 0).all()
        for k in range(decomp.N):
            caps = tree.caps(k + 1)
            parents = np.array([tree.parent(caps[i]).index for i in classified.chain[k + 1]])
            np.testing.assert_array_equal(parents, classified.chain[k])

    def test_root_value_is_bad_part(self, decomp, classified, sample_nodes):
        """Test that the level 0 value is |f^B_m| at the node."""
        expected = np.abs(decomp.bad_field(2).ravel()[sample_nodes])

        np.testing.assert_allclose(classified.values[0], expected, atol=1e-12 * decomp.sup_norm)

    def test_guaranteed_levels_are_covered(self, classified):
        """Test that levels with few enough children leave no node uncovered."""
        assert all(classified.guaranteed)
        assert not classified.uncovered.any()

    def test_first_broad_level(self, classified):
        """Test that first_broad_level points at a broad verdict or is -1."""
        first = classified.first_broad_level
        for i, level in enumerate(first[:200]):
            if level >= 0:
                assert classified.broad[level, i]
                assert not classified.broad[:level, i].any()
            else:
                assert not classified.broad[:, i].any()

    def test_single_point(self, decomp):
        """Test the per-level verdict list at one node."""
        verdicts = classify_point(decomp, 2, (5, 7))

        assert [v["level"] for v in verdicts] == list(range(decomp.N))
        assert verdicts[0]["cap_index"] == 0

    def test_invalid_m(self, decomp):
        """Test that m outside 2..N is rejected."""
        with pytest.raises(InvalidParameterError, match="Invalid m"):
            classify_points(decomp, 1, np.array([0]))

    def test_narrow_coverage_report(self, decomp):
        """Test the node-sampled coverage report."""
        report = narrow_coverage(decomp, 2, nodes=1000, seed=5)

        assert report.passed
        assert report.rhs == 1000.0
        assert report.params == {"m": 2, "nodes": 1000, "seed": 5}
        assert report.extras["uncovered_ungated"] == 0
        assert all(report.extras["guaranteed_levels"])


class TestBroadSets:
    """Tests for broad_set_measures."""

    def test_measures_partition_u(self, decomp):
        """Test that first-broad and narrow measures add up to |U|."""
        report = broad_set_measures(decomp, 2)

        total = sum(report.first_broad_measures.values()) + report.narrow_measure
        assert total == pytest.approx(report.u_measure)
        assert report.passed

    def test_empty_region(self, decomp):
        """Test that an alpha above every value gives an empty set."""
        report = broad_set_measures(decomp, 2, alpha=1e6 * decomp.sup_norm)

        assert report.u_measure == 0.0
        assert report.passed


class TestBilinear:
    """Tests for the bilinear restriction check."""

    def test_omega_caps_partition(self):
        """Test that omega caps tile [-1, 1] with width S^(-1/2)."""
        caps = omega_caps(256, 256.0)

        assert caps[0].a == -1
        assert caps[-1].b == 1
        assert all(left.b == right.a for left, right in zip(caps, caps[1:]))
        assert {c.width for c in caps} == {Fraction(1, 16)}

    def test_separated_caps(self, decomp, tree):
        """Test that two far caps produce a finite report."""
        caps = tree.caps(1)
        report = bilinear_ratio(decomp.profile, caps[0], caps[-1], 0.5, 0.0, 256.0, decomp.grid)

        assert report.lemma == "bilinear"
        assert report.lhs > 0.0
        assert report.rhs > 0.0
        assert report.extras["region_measure"] > 0.0

    def test_alpha_above_everything_is_vacuous(self, decomp, tree):
        """Test that an empty region passes trivially."""
        caps = tree.caps(1)
        report = bilinear_ratio(
            decomp.profile, caps[0], caps[-1], 0.5, 1e6 * decomp.sup_norm, 256.0, decomp.grid
        )

        assert report.passed
        assert report.vacuous

    @pytest.mark.parametrize(
        "E,S,match",
        [(0.5, 2.0, "Invalid S"), (0.5, 512.0, "Invalid S"), (0.01, 256.0, "Invalid E")],
    )
    def test_invalid_scales(self, decomp, tree, E, S, match):
        """Test the ranges of S and E."""
        caps = tree.caps(1)
        with pytest.raises(InvalidParameterError, match=match):
            bilinear_ratio(decomp.profile, caps[0], caps[-1], E, 1.0, S)

    def test_adjacent_caps_rejected(self, decomp, tree):
        """Test that caps closer than E are rejected."""
        caps = tree.caps(1)
        with pytest.raises(InvalidParameterError, match="separation"):
            bilinear_ratio(decomp.profile, caps[0], caps[1], 0.25, 1.0, 256.0)

    def test_negative_alpha(self, decomp, tree):
        """Test that a negative alpha is rejected."""
        caps = tree.caps(1)
        with pytest.raises(InvalidParameterError, match="nonnegative"):
            bilinear_ratio(decomp.profile, caps[0], caps[-1], 0.5, -1.0, 256.0)
