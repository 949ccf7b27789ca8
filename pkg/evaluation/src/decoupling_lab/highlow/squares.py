"""Square-function fields and restricted square norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.fft

from decoupling_lab.config import get_worker_count
from decoupling_lab.cutoffs.tiles import TileWeightSystem
from decoupling_lab.errors import InvalidInputError, InvalidParameterError
from decoupling_lab.geometry import Cap
from decoupling_lab.pruning import PrunedDecomposition
from decoupling_lab.synthesis import GridSpec, SampledField

NEGATIVE_TOLERANCE = 1e-12


class Member(Enum):
    """Decomposition member a square field is built from."""

    F = "f"
    PRUNED = "pruned"
    BAD = "bad"


@dataclass(frozen=True, eq=False)
class SquareField:
    """Sum of |g_theta|^2 over the thetas inside a cap.

    Attributes:
        grid: Sampling grid
        level: Level of the member (pruned level k or bad index m); None for f
        cap: Parent cap, or None for the whole cell
        values: Real field on the grid
        provenance: "f", "pruned" or "bad"
    """

    grid: GridSpec
    level: int | None
    cap: Cap | None
    values: np.ndarray = field(repr=False)
    provenance: str = "f"

    def __post_init__(self) -> None:
        if self.values.size and float(np.min(self.values)) < -NEGATIVE_TOLERANCE:
            raise InvalidInputError(
                f"Invalid square field: minimum {float(np.min(self.values)):.3e} is negative"
            )

    @property
    def integral(self) -> float:
        return float(np.sum(self.values)) * self.grid.cell_area

    def as_field(self) -> SampledField:
        return SampledField(self.grid, self.values)


def _member_theta(decomp: PrunedDecomposition, member: Member, level: int | None, theta: Cap):
    if member is Member.F:
        return decomp.theta_field(theta)
    if level is None:
        raise InvalidParameterError(f"Invalid level: member '{member.value}' needs a level")
    if member is Member.PRUNED:
        return decomp.pruned_theta(level, theta)
    return decomp.bad_theta(level, theta)


def square_field(
    decomp: PrunedDecomposition,
    cap: Cap | None = None,
    member: Member | str = "f",
    level: int | None = None,
) -> SquareField:
    """
    Node-wise sum of |g_theta|^2 over theta inside `cap` (all thetas when None).

    `member` picks g: f_theta, the pruned f_{level,theta} or the bad part
    f^B_{level,theta}.

    Raises:
        InvalidParameterError: If the member is unknown or needs a level
    """
    try:
        member = Member(member)
    except ValueError:
        valid = ", ".join(m.value for m in Member)
        raise InvalidParameterError(
            f"Invalid member: '{member}'. Valid options: {valid}"
        ) from None

    thetas = decomp.thetas if cap is None else decomp.tree.descendants(cap, decomp.N)
    M = decomp.grid.M
    out = np.zeros((M, M))
    for theta in thetas:
        if member is Member.F or decomp.active.get(theta.key, False):
            out += np.abs(_member_theta(decomp, member, level, theta)) ** 2
    return SquareField(
        grid=decomp.grid,
        level=level if member is not Member.F else None,
        cap=cap,
        values=out,
        provenance=member.value,
    )


def restricted_square_norm(sq: SquareField, system: TileWeightSystem, tile: int) -> float:
    """
    ||S_U f||_2 = (integral over U of the square field)^(1/2), U sharp.

    Tile indices wrap around the cell.
    """
    if system.grid != sq.grid:
        raise InvalidParameterError("Invalid tiling: grid does not match the square field")
    inside = system.tile_map == (tile % system.count)
    return float(np.sqrt(np.sum(sq.values[inside]) * sq.grid.cell_area))


def tile_square_norms(sq: SquareField, system: TileWeightSystem) -> np.ndarray:
    """||S_U f||_2^2 for every tile U of a tiling."""
    if system.grid != sq.grid:
        raise InvalidParameterError("Invalid tiling: grid does not match the square field")
    sums = np.bincount(
        system.tile_map.ravel(), weights=sq.values.ravel(), minlength=system.count
    )
    return sums * sq.grid.cell_area


def square_field_leakage(sq: SquareField, radius: float) -> float:
    """Fraction of spectral energy of a square field outside the ball |xi| <= radius."""
    spectrum = scipy.fft.fft2(sq.values, workers=get_worker_count())
    energy = np.abs(spectrum) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    freqs = sq.grid.frequencies()
    outside = np.hypot(freqs[:, None], freqs[None, :]) > radius
    return float(np.sum(energy[outside])) / total
