"""
Nonnegative tile weights psi_U forming an exact partition of unity.

Each weight is a trigonometric polynomial on the periodic cell. Its
coefficients are (1/n) P(n xi.a) P(n xi.b) where a, b span the plate lattice
and P is the normalised autocorrelation of a Gevrey bump sampled inside a
quarter of the dual box. P is positive-definite, so psi_U >= 0, and only the
zero frequency survives the sum over all n tiles, so the weights sum to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft
import scipy.signal

from decoupling_lab.config import get_cutoff_config, get_worker_count
from decoupling_lab.cutoffs.bumps import build_gevrey_bump
from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.geometry import PlateSpec
from decoupling_lab.synthesis import GridSpec

MIN_TILE_SAMPLES = 4


@lru_cache(maxsize=32)
def autocorrelation_sequence(count: int, epsilon0: float, conv_terms: int) -> np.ndarray:
    """
    Positive-definite sequence P on -count/2 < k < count/2 with P(0) = 1.

    P is the autocorrelation of chi(k/count), chi(t) = g(4t), normalised at 0.
    Index k is stored at position k + count//2.
    """
    bump = build_gevrey_bump(epsilon0, conv_terms)
    half = count // 2
    k = np.arange(-half, half + 1)
    chi = bump(4.0 * k / count)
    corr = scipy.signal.fftconvolve(chi, chi[::-1], mode="full")[half : half + 2 * half + 1]
    corr = 0.5 * (corr + corr[::-1])
    corr = corr / corr[half]
    corr[np.abs(k) >= half] = 0.0
    corr.setflags(write=False)
    return corr


@dataclass(frozen=True, eq=False)
class TileWeightSystem:
    """Tile weights for one plate tiling.

    Attributes:
        plate: The tiling
        grid: Sampling grid
        j: Column index of every nonzero coefficient
        m: Row index of every nonzero coefficient
        coeffs: Coefficient of psi_0 at (j/R, m/R)
    """

    plate: PlateSpec
    grid: GridSpec
    j: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return self.plate.count

    def _tile_phases(self, tiles) -> np.ndarray:
        """sum_{i in tiles} e^{-2 pi i j i / n} for every coefficient."""
        indicator = np.zeros(self.count)
        indicator[np.asarray(list(tiles), dtype=np.int64) % self.count] = 1.0
        spectrum = scipy.fft.fft(indicator)
        return spectrum[self.j % self.count]

    def mask(self, tiles) -> np.ndarray:
        """sum_{U in tiles} psi_U on the grid (real array of shape (M, M))."""
        tiles = list(tiles)
        M = self.grid.M
        if not tiles:
            return np.zeros((M, M))
        spectrum = np.zeros((M, M), dtype=np.complex128)
        np.add.at(spectrum, (self.j % M, self.m % M), self.coeffs * self._tile_phases(tiles))
        values = scipy.fft.ifft2(spectrum, norm="forward", workers=get_worker_count())
        return values.real

    def psi(self, index: int) -> np.ndarray:
        return self.mask([index])

    def evaluate(self, points: np.ndarray, tiles=None) -> np.ndarray:
        """sum_{U in tiles} psi_U at arbitrary points of shape (k, 2); all tiles by default."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        tiles = range(self.count) if tiles is None else tiles
        weights = self.coeffs * self._tile_phases(tiles)
        R = self.plate.R
        phase = np.outer(points[:, 0], self.j) + np.outer(points[:, 1], self.m)
        return (np.exp(2j * np.pi * phase / R) @ weights).real

    def partition_sum(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)

    @cached_property
    def tile_map(self) -> np.ndarray:
        """Index of the tile containing each grid node."""
        coords = self.grid.coordinates()
        return self.plate.tile_index(coords[:, None], coords[None, :])

    def tile_centers_on_grid(self) -> np.ndarray:
        """Grid row offset of each tile centre along axis 0."""
        return np.arange(self.count) * self.plate.width * self.grid.oversampling


def build_tile_weights(plate: PlateSpec, grid: GridSpec) -> TileWeightSystem:
    """
    Build psi_U for every tile of a plate tiling.

    Raises:
        InvalidParameterError: If the grid does not match or a tile is narrower
            than four grid spacings
    """
    if grid.R != plate.R:
        raise InvalidParameterError(f"Invalid grid: R={grid.R} does not match plate R={plate.R}")
    if plate.width < MIN_TILE_SAMPLES * grid.spacing:
        raise InvalidParameterError(
            f"Invalid tiling: tile width {plate.width} is below "
            f"{MIN_TILE_SAMPLES} grid spacings ({grid.spacing})"
        )

    cfg = get_cutoff_config()
    n = plate.count
    half = n // 2
    P = autocorrelation_sequence(n, cfg.epsilon0, cfg.conv_terms)
    q = plate.shear

    js, ms, values = [], [], []
    for j in range(-half + 1, half):
        pa = P[j + half]
        if pa == 0.0:
            continue
        # v = n*m - q*j must satisfy |v| < n/2; at most one m qualifies
        m = int(np.round(q * j / n))
        for candidate in (m - 1, m, m + 1):
            v = n * candidate - q * j
            if abs(v) < half and P[v + half] != 0.0:
                js.append(j)
                ms.append(candidate)
                values.append(pa * P[v + half] / n)

    return TileWeightSystem(
        plate=plate,
        grid=grid,
        j=np.asarray(js, dtype=np.int64),
        m=np.asarray(ms, dtype=np.int64),
        coeffs=np.asarray(values, dtype=float),
    )
