"""Tests for configuration module."""

import pytest

from decoupling_lab.config import (
    GridConfig,
    PruningConfig,
    VerifierConfig,
    configure_grid,
    configure_pruning,
    configure_verifiers,
    get_envelope_config,
    get_grid_config,
    get_pruning_config,
    get_verifier_config,
    get_worker_count,
    reset_config,
)
from decoupling_lab.errors import DecouplingLabError, InvalidParameterError


class TestConfigDataclasses:
    """Tests for the frozen configuration dataclasses."""

    def test_grid_defaults(self):
        """Test GridConfig defaults."""
        config = GridConfig()

        assert config.oversampling == 4
        assert config.quadrature_tolerance == 1e-6
        assert config.quadrature_refinements == 2

    def test_pruning_defaults(self):
        """Test PruningConfig defaults."""
        config = PruningConfig()

        assert config.cp == 1e4
        assert config.k_rep == 10.0

    def test_config_is_frozen(self):
        """Test that config objects are immutable."""
        config = VerifierConfig()

        with pytest.raises(AttributeError):
            config.near_kappa = 2.0


class TestYamlDefaults:
    """Tests that lab.yaml matches the hardcoded fallbacks."""

    def setup_method(self):
        """Reset config before each test."""
        reset_config()

    def test_loaded_values(self):
        """Test the values loaded from config/lab.yaml."""
        assert get_grid_config() == GridConfig()
        assert get_pruning_config().cp == 1e4
        assert get_verifier_config().tolerance_factor == 100.0
        assert get_envelope_config().e2 == 31.0

    def test_missing_config_dir_uses_defaults(self, monkeypatch, tmp_path):
        """Test that an empty config dir falls back to the defaults."""
        monkeypatch.setenv("DCPL_CONFIG_DIR", str(tmp_path))
        reset_config()

        assert get_pruning_config() == PruningConfig()
        reset_config()

    def test_config_dir_override(self, monkeypatch, tmp_path):
        """Test that DCPL_CONFIG_DIR points the loader at another lab.yaml."""
        (tmp_path / "lab.yaml").write_text("pruning:\n  cp: 250.0\n")
        monkeypatch.setenv("DCPL_CONFIG_DIR", str(tmp_path))
        reset_config()

        assert get_pruning_config().cp == 250.0
        monkeypatch.delenv("DCPL_CONFIG_DIR")
        reset_config()


class TestConfigure:
    """Tests for runtime configuration."""

    def setup_method(self):
        """Reset config before each test."""
        reset_config()

    def teardown_method(self):
        """Reset config after each test."""
        reset_config()

    def test_configure_grid(self):
        """Test setting the oversampling."""
        configure_grid(oversampling=8)

        assert get_grid_config().oversampling == 8

    def test_configure_grid_rejects_low_oversampling(self):
        """Test that oversampling below 4 is rejected."""
        with pytest.raises(InvalidParameterError, match="oversampling"):
            configure_grid(oversampling=2)

    def test_configure_grid_quadrature(self):
        """Test setting the quadrature controls without touching oversampling."""
        configure_grid(quadrature_tolerance=1e-9, quadrature_refinements=4)

        config = get_grid_config()
        assert config.quadrature_tolerance == 1e-9
        assert config.quadrature_refinements == 4
        assert config.oversampling == 4

    @pytest.mark.parametrize(
        "kwargs,match",
        [
            ({"quadrature_tolerance": 0.0}, "quadrature_tolerance"),
            ({"quadrature_refinements": -1}, "quadrature_refinements"),
        ],
    )
    def test_configure_grid_rejects_bad_quadrature(self, kwargs, match):
        """Test that a nonpositive tolerance or negative refinement count is rejected."""
        with pytest.raises(InvalidParameterError, match=match):
            configure_grid(**kwargs)

    def test_configure_pruning_preserves_unchanged(self):
        """Test that unchanged pruning values are kept."""
        configure_pruning(cp=100.0)
        config = get_pruning_config()

        assert config.cp == 100.0
        assert config.k_rep == 10.0

    def test_configure_pruning_rejects_nonpositive(self):
        """Test that a nonpositive cp is rejected."""
        with pytest.raises(InvalidParameterError, match="cp"):
            configure_pruning(cp=0.0)

    def test_configure_verifiers(self):
        """Test overriding verifier constants; None leaves a value alone."""
        configure_verifiers(near_kappa=2.0, domination_kappa=None)
        config = get_verifier_config()

        assert config.near_kappa == 2.0
        assert config.domination_kappa == 10.0

    def test_configure_verifiers_unknown_field(self):
        """Test that unknown verifier settings are rejected."""
        with pytest.raises(InvalidParameterError, match="Valid options"):
            configure_verifiers(bogus=1.0)

    def test_errors_are_lab_errors(self):
        """Test that configuration errors derive from the lab base error and ValueError."""
        with pytest.raises(DecouplingLabError):
            configure_grid(oversampling=3)
        with pytest.raises(ValueError):
            configure_grid(oversampling=3)


class TestWorkerCount:
    """Tests for the DCPL_THREADS worker cap."""

    def test_env_value(self, monkeypatch):
        """Test that DCPL_THREADS caps the worker count."""
        monkeypatch.setenv("DCPL_THREADS", "3")

        assert get_worker_count() == 3

    def test_invalid_env_warns(self, monkeypatch):
        """Test that an unparsable DCPL_THREADS warns and falls back."""
        monkeypatch.setenv("DCPL_THREADS", "many")

        with pytest.warns(UserWarning, match="DCPL_THREADS"):
            count = get_worker_count()
        assert count >= 1
