"""
Polynomial weights W_U and w_s.

W_U(x) = (1 + (s/h)^2)^-100 (1 + (t/R)^2)^-100 where (s, t) are the tangent
and normal coordinates of the minimal-image displacement x - c_U, h is the
short side of the tile and R its long side. w_s(x) = c (1 + |x|^2/s)^-10 with
c chosen so that w_s has unit mass on the cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.fft

from decoupling_lab.config import get_cutoff_config, get_worker_count
from decoupling_lab.errors import InvalidInputError, InvalidParameterError
from decoupling_lab.geometry import PlateSpec
from decoupling_lab.synthesis import GridSpec, SampledField

PLATE_EXPONENT = 100
SCALE_EXPONENT = 10
NEGATIVE_TOLERANCE = 1e-12


class WeightKind(Enum):
    """Polynomial weight families."""

    PLATE = "W_U"
    SCALE = "w_k"


@dataclass(frozen=True, eq=False)
class PolyWeight:
    """A polynomial weight sampled on the grid, centred at the origin.

    Attributes:
        kind: W_U or w_k
        exponent: 100 for W_U, 10 for w_k
        grid: Sampling grid
        values: Weight at every grid node, centred at the origin
        plate: Tiling the weight belongs to (W_U only)
        scale: Scale s (w_k only)
    """

    kind: WeightKind
    exponent: int
    grid: GridSpec
    values: np.ndarray = field(repr=False)
    plate: PlateSpec | None = None
    scale: float | None = None

    def at_tile(self, index: int) -> np.ndarray:
        """W_U for tile `index`: the origin weight moved to the tile centre."""
        if self.plate is None:
            raise InvalidParameterError("Invalid weight: tile translates exist only for W_U")
        shift = (index % self.plate.count) * self.plate.width * self.grid.oversampling
        return np.roll(self.values, shift, axis=0)

    @property
    def mass(self) -> float:
        return float(np.sum(self.values)) * self.grid.cell_area


def _minimal_image(grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    coords = grid.coordinates()
    wrapped = coords - grid.R * np.floor(coords / grid.R + 0.5)
    return wrapped[:, None], wrapped[None, :]


def plate_weight(plate: PlateSpec, grid: GridSpec) -> PolyWeight:
    """W_U for tile 0 of a plate tiling, in the cap's tangent/normal frame."""
    if grid.R != plate.R:
        raise InvalidParameterError(f"Invalid grid: R={grid.R} does not match plate R={plate.R}")
    d1, d2 = _minimal_image(grid)
    tx, ty = plate.cap.tangent
    nx, ny = plate.cap.normal
    s = (d1 * tx + d2 * ty) / plate.width
    t = (d1 * nx + d2 * ny) / plate.R
    values = np.exp(-PLATE_EXPONENT * (np.log1p(s * s) + np.log1p(t * t)))
    values[values < get_cutoff_config().weight_floor] = 0.0
    return PolyWeight(
        kind=WeightKind.PLATE, exponent=PLATE_EXPONENT, grid=grid, values=values, plate=plate
    )


def scale_weight(s: float, grid: GridSpec) -> PolyWeight:
    """
    w_s(x) = c / (1 + |x|^2/s)^10 with unit mass on the cell.

    w_k is w_s at s = R_k.
    """
    if not s > 0:
        raise InvalidParameterError(f"Invalid weight scale: '{s}'. Must be positive")
    d1, d2 = _minimal_image(grid)
    raw = (1.0 + (d1 * d1 + d2 * d2) / s) ** -SCALE_EXPONENT
    values = raw / (np.sum(raw) * grid.cell_area)
    return PolyWeight(
        kind=WeightKind.SCALE, exponent=SCALE_EXPONENT, grid=grid, values=values, scale=float(s)
    )


def _check_nonnegative(field_: SampledField) -> np.ndarray:
    values = field_.values
    if np.iscomplexobj(values):
        values = values.real
    if values.size and float(np.min(values)) < -NEGATIVE_TOLERANCE:
        raise InvalidInputError(
            f"Invalid field: minimum {float(np.min(values)):.3e} is negative; "
            "weighted averages are defined for square functions"
        )
    return values


def weighted_cell_average(field_: SampledField, tile: int, weight: PolyWeight) -> float:
    """
    |U|^-1 sum_x field(x) W_U(x) cell_area.

    Raises:
        InvalidInputError: If the field has values below -1e-12
    """
    if weight.plate is None:
        raise InvalidParameterError("Invalid weight: weighted averages need a W_U weight")
    values = _check_nonnegative(field_)
    total = float(np.sum(values * weight.at_tile(tile))) * field_.grid.cell_area
    return total / weight.plate.area


def weighted_tile_averages(field_: SampledField, weight: PolyWeight) -> np.ndarray:
    """Weighted averages over every tile of the weight's plate tiling."""
    if weight.plate is None:
        raise InvalidParameterError("Invalid weight: weighted averages need a W_U weight")
    values = _check_nonnegative(field_)
    plate = weight.plate
    step = plate.width * field_.grid.oversampling
    out = np.empty(plate.count)
    for i in range(plate.count):
        shifted = np.roll(values, -i * step, axis=0)
        out[i] = float(np.sum(shifted * weight.values))
    return out * field_.grid.cell_area / plate.area


def kappa_w(plate: PlateSpec, grid: GridSpec) -> float:
    """|U|^-1 integral of W_U, measured by quadrature."""
    weight = plate_weight(plate, grid)
    return weight.mass / plate.area


def convolve_weight(field_: SampledField, weight: PolyWeight) -> SampledField:
    """Periodic convolution field * w on the grid."""
    workers = get_worker_count()
    spectrum = scipy.fft.fft2(field_.values, workers=workers) * scipy.fft.fft2(
        weight.values, workers=workers
    )
    out = scipy.fft.ifft2(spectrum, workers=workers) * field_.grid.cell_area
    if not np.iscomplexobj(field_.values):
        out = out.real
    return field_.with_values(out)
