"""
Configuration constants for the decoupling lab.

Centralizes tolerances, constants and numerical parameters used by the
geometry, cutoff, pruning and verifier modules.

Configuration is loaded from config/lab.yaml. If the file is missing or a
parameter is not specified, hardcoded defaults apply.
"""

import multiprocessing as mp
import os
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import yaml

from decoupling_lab.errors import InvalidParameterError

CONFIG_DIR_ENV = "DCPL_CONFIG_DIR"
THREADS_ENV = "DCPL_THREADS"


@dataclass(frozen=True)
class GridConfig:
    """Configuration for the periodic sampling grid and L^p quadrature.

    Attributes:
        oversampling: Samples per unit length, sigma (default: 4)
                      The grid has M = sigma * R nodes per side, spacing 1/sigma
        quadrature_tolerance: Relative change at which refinement of an L^p
                              integral stops for p not an even integer (default: 1e-6)
        quadrature_refinements: Node doublings tried before giving up (default: 2)
    """

    oversampling: int = 4
    quadrature_tolerance: float = 1e-6
    quadrature_refinements: int = 2


@dataclass(frozen=True)
class CutoffConfig:
    """Configuration for Gevrey bumps, tile weights and polynomial weights.

    Attributes:
        epsilon0: Plateau margin of the reproducing bump (default: 0.25)
        conv_terms: Truncation of the infinite convolution (default: 40)
        weight_floor: W_U values below this are dropped from quadrature (default: 1e-30)
        profile_samples: Samples per unit length of the 1D bump profile (default: 32768)
    """

    epsilon0: float = 0.25
    conv_terms: int = 40
    weight_floor: float = 1e-30
    profile_samples: int = 32768


@dataclass(frozen=True)
class PruningConfig:
    """Configuration for the pruning cascade.

    Attributes:
        cp: Pruning constant C_p in the gauge threshold (default: 1e4)
        zero_threshold: Caps with sup |f_tau| below this fraction of ||f||_inf
                        are treated as identically zero (default: 1e-14)
        k_rep: Constant allowed in the replacement gap bound (default: 10)
        mask_cache_mb: Memory kept for cached envelope masks, in MiB (default: 512)
    """

    cp: float = 1e4
    zero_threshold: float = 1e-14
    k_rep: float = 10.0
    mask_cache_mb: int = 512


@dataclass(frozen=True)
class VerifierConfig:
    """Configuration for lemma verifiers.

    Attributes:
        near_kappa: Constant in the near relation (default: 1)
        tolerance_factor: Constant allowance in front of the log power (default: 100)
        exponent_slack: Extra log exponent tolerated over the stated power (default: 0.5)
        domination_kappa: kappa for weak high-domination (default: 10)
        domination_kappa_prime: kappa' for weak high-domination part b (default: 10)
        dichotomy_kappa: near constant used by the broad/narrow dichotomy (default: 1)
    """

    near_kappa: float = 1.0
    tolerance_factor: float = 100.0
    exponent_slack: float = 0.5
    domination_kappa: float = 10.0
    domination_kappa_prime: float = 10.0
    dichotomy_kappa: float = 1.0


@dataclass(frozen=True)
class EnvelopeConfig:
    """Configuration for the wave envelope gate.

    Attributes:
        e2: Largest log exponent accepted for the envelope ratio (default: 31)
    """

    e2: float = 31.0


@dataclass(frozen=True)
class DecouplingConfig:
    """Configuration for decoupling batteries.

    Attributes:
        slope_tolerance: Distance from the predicted exponent that counts as
                         attained by a fitted slope (default: 0.25)
        direct_column_limit: Caps with at most this many frequency columns are
                             evaluated column-wise instead of by 2D FFT (default: 16)
    """

    slope_tolerance: float = 0.25
    direct_column_limit: int = 16


def _find_config_dir() -> Path | None:
    """
    Find the config directory.

    Searches for:
    1. Directory specified in the DCPL_CONFIG_DIR environment variable
    2. 'config' directory in parent directories (up to 3 levels)

    Returns:
        Path to config directory if found, None otherwise
    """
    env_config_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_config_dir:
        config_path = Path(env_config_dir)
        if config_path.is_dir():
            return config_path

    current = Path(__file__).parent.parent.parent
    for _ in range(3):
        config_dir = current / "config"
        if config_dir.is_dir():
            return config_dir
        current = current.parent

    return None


def _load_yaml_config(filename: str = "lab.yaml") -> dict[str, Any]:
    """
    Load configuration from a YAML file.

    Args:
        filename: Name of YAML file in config/ directory

    Returns:
        Dictionary of configuration values, or empty dict if file not found
    """
    config_dir = _find_config_dir()
    if config_dir is None:
        return {}

    config_file = config_dir / filename
    if not config_file.exists():
        return {}

    try:
        with open(config_file) as f:
            return yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        warnings.warn(f"Parse error {config_file}: {e}", UserWarning, stacklevel=2)
        return {}
    except OSError as e:
        warnings.warn(f"Read error {config_file}: {e}", UserWarning, stacklevel=2)
        return {}


def _section(name: str) -> dict[str, Any]:
    section = _load_yaml_config().get(name, {})
    return section if isinstance(section, dict) else {}


def _load_grid_config() -> GridConfig:
    """Load grid configuration from YAML or use defaults."""
    grid = _section("grid")
    return GridConfig(
        oversampling=int(grid.get("oversampling", 4)),
        quadrature_tolerance=float(grid.get("quadrature_tolerance", 1e-6)),
        quadrature_refinements=int(grid.get("quadrature_refinements", 2)),
    )


def _load_cutoff_config() -> CutoffConfig:
    """Load cutoff configuration from YAML or use defaults."""
    cutoffs = _section("cutoffs")
    return CutoffConfig(
        epsilon0=float(cutoffs.get("epsilon0", 0.25)),
        conv_terms=int(cutoffs.get("conv_terms", 40)),
        weight_floor=float(cutoffs.get("weight_floor", 1e-30)),
        profile_samples=int(cutoffs.get("profile_samples", 32768)),
    )


def _load_pruning_config() -> PruningConfig:
    """Load pruning configuration from YAML or use defaults."""
    pruning = _section("pruning")
    return PruningConfig(
        cp=float(pruning.get("cp", 1e4)),
        zero_threshold=float(pruning.get("zero_threshold", 1e-14)),
        k_rep=float(pruning.get("k_rep", 10.0)),
        mask_cache_mb=int(pruning.get("mask_cache_mb", 512)),
    )


def _load_verifier_config() -> VerifierConfig:
    """Load verifier configuration from YAML or use defaults."""
    verifiers = _section("verifiers")
    return VerifierConfig(
        near_kappa=float(verifiers.get("near_kappa", 1.0)),
        tolerance_factor=float(verifiers.get("tolerance_factor", 100.0)),
        exponent_slack=float(verifiers.get("exponent_slack", 0.5)),
        domination_kappa=float(verifiers.get("domination_kappa", 10.0)),
        domination_kappa_prime=float(verifiers.get("domination_kappa_prime", 10.0)),
        dichotomy_kappa=float(verifiers.get("dichotomy_kappa", 1.0)),
    )


def _load_envelope_config() -> EnvelopeConfig:
    """Load envelope configuration from YAML or use defaults."""
    envelope = _section("envelope")
    return EnvelopeConfig(e2=float(envelope.get("e2", 31.0)))


def _load_decoupling_config() -> DecouplingConfig:
    """Load decoupling configuration from YAML or use defaults."""
    decoupling = _section("decoupling")
    return DecouplingConfig(
        slope_tolerance=float(decoupling.get("slope_tolerance", 0.25)),
        direct_column_limit=int(decoupling.get("direct_column_limit", 16)),
    )


def get_worker_count() -> int:
    """Worker cap for pools and FFTs.

    Reads DCPL_THREADS; falls back to the CPU count when unset or invalid.

    Returns:
        Positive number of workers
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return mp.cpu_count()
    try:
        value = int(raw)
    except ValueError:
        warnings.warn(
            f"Ignoring {THREADS_ENV}={raw!r}: not an integer", UserWarning, stacklevel=2
        )
        return mp.cpu_count()
    if value < 1:
        warnings.warn(f"Ignoring {THREADS_ENV}={raw!r}: must be >= 1", UserWarning, stacklevel=2)
        return mp.cpu_count()
    return value


def configure_grid(
    oversampling: int | None = None,
    quadrature_tolerance: float | None = None,
    quadrature_refinements: int | None = None,
) -> None:
    """Configure the sampling grid and L^p quadrature at runtime.

    Args:
        oversampling: Samples per unit length (must be an integer >= 4)
        quadrature_tolerance: Relative refinement tolerance (must be > 0)
        quadrature_refinements: Node doublings for p not an even integer (>= 0)

    Raises:
        InvalidParameterError: If a value is out of range
    """
    global GRID_CONFIG

    if oversampling is not None and (int(oversampling) != oversampling or oversampling < 4):
        raise InvalidParameterError(
            f"Invalid oversampling: '{oversampling}'. Valid options: integers >= 4"
        )
    if quadrature_tolerance is not None and not quadrature_tolerance > 0:
        raise InvalidParameterError(
            f"Invalid quadrature_tolerance: '{quadrature_tolerance}'. Must be positive"
        )
    if quadrature_refinements is not None and (
        int(quadrature_refinements) != quadrature_refinements or quadrature_refinements < 0
    ):
        raise InvalidParameterError(
            f"Invalid quadrature_refinements: '{quadrature_refinements}'. "
            "Valid options: integers >= 0"
        )

    updates: dict[str, Any] = {}
    if oversampling is not None:
        updates["oversampling"] = int(oversampling)
    if quadrature_tolerance is not None:
        updates["quadrature_tolerance"] = float(quadrature_tolerance)
    if quadrature_refinements is not None:
        updates["quadrature_refinements"] = int(quadrature_refinements)
    GRID_CONFIG = replace(GRID_CONFIG, **updates)


def configure_pruning(
    cp: float | None = None,
    zero_threshold: float | None = None,
    k_rep: float | None = None,
) -> None:
    """Configure pruning constants at runtime.

    Args:
        cp: Pruning constant (must be > 0)
        zero_threshold: Relative sup-norm below which caps count as zero
        k_rep: Constant in the replacement gap bound (must be > 0)

    Raises:
        InvalidParameterError: If a value is not positive
    """
    global PRUNING_CONFIG

    for name, value in (("cp", cp), ("zero_threshold", zero_threshold), ("k_rep", k_rep)):
        if value is not None and value <= 0:
            raise InvalidParameterError(f"Invalid {name}: '{value}'. Must be positive")

    updates = {
        key: value
        for key, value in (("cp", cp), ("zero_threshold", zero_threshold), ("k_rep", k_rep))
        if value is not None
    }
    PRUNING_CONFIG = replace(PRUNING_CONFIG, **updates)


def configure_verifiers(**overrides: float) -> None:
    """Configure verifier constants at runtime.

    Args:
        **overrides: Any VerifierConfig field with a positive value

    Raises:
        InvalidParameterError: If a field is unknown or a value is not positive
    """
    global VERIFIER_CONFIG

    valid = set(VerifierConfig.__dataclass_fields__)
    for name, value in overrides.items():
        if name not in valid:
            raise InvalidParameterError(
                f"Invalid verifier setting: '{name}'. Valid options: {', '.join(sorted(valid))}"
            )
        if value is None:
            continue
        if name != "exponent_slack" and value <= 0:
            raise InvalidParameterError(f"Invalid {name}: '{value}'. Must be positive")
        if name == "exponent_slack" and value < 0:
            raise InvalidParameterError(f"Invalid {name}: '{value}'. Must be >= 0")

    VERIFIER_CONFIG = replace(
        VERIFIER_CONFIG, **{k: float(v) for k, v in overrides.items() if v is not None}
    )


def get_grid_config() -> GridConfig:
    """Get the current grid configuration."""
    return GRID_CONFIG


def get_cutoff_config() -> CutoffConfig:
    """Get the current cutoff configuration."""
    return CUTOFF_CONFIG


def get_pruning_config() -> PruningConfig:
    """Get the current pruning configuration."""
    return PRUNING_CONFIG


def get_verifier_config() -> VerifierConfig:
    """Get the current verifier configuration."""
    return VERIFIER_CONFIG


def get_envelope_config() -> EnvelopeConfig:
    """Get the current envelope configuration."""
    return ENVELOPE_CONFIG


def get_decoupling_config() -> DecouplingConfig:
    """Get the current decoupling configuration."""
    return DECOUPLING_CONFIG


def reset_config() -> None:
    """Reset all configuration to the YAML-backed defaults.

    Useful for testing or resetting state between runs.
    """
    global GRID_CONFIG, CUTOFF_CONFIG, PRUNING_CONFIG
    global VERIFIER_CONFIG, ENVELOPE_CONFIG, DECOUPLING_CONFIG

    GRID_CONFIG = _load_grid_config()
    CUTOFF_CONFIG = _load_cutoff_config()
    PRUNING_CONFIG = _load_pruning_config()
    VERIFIER_CONFIG = _load_verifier_config()
    ENVELOPE_CONFIG = _load_envelope_config()
    DECOUPLING_CONFIG = _load_decoupling_config()


# Values are loaded from YAML with fallback to hardcoded defaults
GRID_CONFIG = _load_grid_config()
CUTOFF_CONFIG = _load_cutoff_config()
PRUNING_CONFIG = _load_pruning_config()
VERIFIER_CONFIG = _load_verifier_config()
ENVELOPE_CONFIG = _load_envelope_config()
DECOUPLING_CONFIG = _load_decoupling_config()
