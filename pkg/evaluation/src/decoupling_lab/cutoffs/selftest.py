"""Self-test of the cutoff system on one grid."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field

from decoupling_lab.cutoffs.bumps import build_filter_bank, build_gevrey_bump
from decoupling_lab.cutoffs.tiles import build_tile_weights
from decoupling_lab.cutoffs.weights import kappa_w, scale_weight
from decoupling_lab.geometry import build_cap_tree, build_scale_ladder, plate_tiling
from decoupling_lab.synthesis import GridSpec, build_grid

PARTITION_TOLERANCE = 1e-8
NEGATIVITY_TOLERANCE = 1e-14
FIT_RESIDUAL_LIMIT = 0.05
MASS_TOLERANCE = 1e-8
SAMPLE_POINTS = 100


class LevelCheck(BaseModel):
    """Tile weight checks for one level."""

    level: int
    tiles: int
    tile_width: float
    partition_deviation: float
    min_psi: float
    peak_at_centre: bool
    kappa_w: float


class CutoffSelftestReport(BaseModel):
    """Partition of unity, positivity and decay checks for the cutoffs."""

    R: int
    oversampling: int
    epsilon0: float
    conv_terms: int
    plateau_value: float
    edge_value: float
    decay_constant: float
    decay_scale: float
    fit_residual: float
    filter_identity_error: float
    levels: list[LevelCheck] = Field(default_factory=list)
    scale_masses: dict[int, float] = Field(default_factory=dict)
    passed: bool


def cutoff_selftest(R: int, seed: int = 0, grid: GridSpec | None = None) -> CutoffSelftestReport:
    """
    Check the bump, the tile weights of every level and the radial filters.

    Tile sums are sampled at random off-grid points; positivity is checked on
    the grid for tile 0 of each level.
    """
    ladder = build_scale_ladder(R)
    tree = build_cap_tree(ladder)
    grid = build_grid(R) if grid is None else grid
    bump = build_gevrey_bump()
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, R, size=(SAMPLE_POINTS, 2))

    levels = []
    for level in range(1, ladder.N + 1):
        cap = tree.cap(level, len(tree.caps(level)) // 2)
        plate = plate_tiling(cap, ladder)
        system = build_tile_weights(plate, grid)
        total = system.partition_sum(points)
        psi = system.psi(0)
        centre = psi[0, 0]
        edge = system.evaluate(np.array([[plate.width / 2.0, 0.0]]), tiles=[0])[0]
        levels.append(
            LevelCheck(
                level=level,
                tiles=plate.count,
                tile_width=plate.width,
                partition_deviation=float(np.max(np.abs(total - 1.0))),
                min_psi=float(np.min(psi)),
                peak_at_centre=bool(centre >= edge),
                kappa_w=kappa_w(plate, grid),
            )
        )

    masses = {k: scale_weight(ladder.scale(k), grid).mass for k in range(ladder.N + 1)}

    bank = build_filter_bank(grid)
    r = 1.0 / ladder.RN
    identity_error = float(np.max(np.abs(bank.low(r) + bank.high(r) - bank.base())))

    passed = (
        abs(float(bump(0.0)) - 1.0) <= 1e-9
        and float(bump(1.0)) == 0.0
        and bump.decay_constant > 0
        and bump.fit_residual <= FIT_RESIDUAL_LIMIT
        and identity_error <= 1e-12
        and all(check.partition_deviation <= PARTITION_TOLERANCE for check in levels)
        and all(check.min_psi >= -NEGATIVITY_TOLERANCE for check in levels)
        and all(abs(mass - 1.0) <= MASS_TOLERANCE for mass in masses.values())
    )
    return CutoffSelftestReport(
        R=R,
        oversampling=grid.oversampling,
        epsilon0=bump.epsilon0,
        conv_terms=bump.conv_terms,
        plateau_value=float(bump(0.0)),
        edge_value=float(bump(1.0)),
        decay_constant=bump.decay_constant,
        decay_scale=bump.decay_scale,
        fit_residual=bump.fit_residual,
        filter_identity_error=identity_error,
        levels=levels,
        scale_masses=masses,
        passed=passed,
    )
