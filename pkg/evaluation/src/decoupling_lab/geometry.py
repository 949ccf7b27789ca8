"""
Frequency geometry: scale ladder, nested caps, small caps and dual plates.

Cap endpoints are exact fractions so that partition and nesting checks are
exact. Plates live on the periodic cell [0, R)^2 and are realised as the
cells of a sheared lattice that contains R*Z^2, so that every level tiles the
cell with zero overlap.
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any

import numpy as np

from decoupling_lab.errors import InvalidParameterError

MIN_R = 256


def _is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


@dataclass(frozen=True)
class ScaleLadder:
    """Intermediate scales between 1 and R^(1/2).

    Attributes:
        R: Frequency scale (power of two, >= 256)
        N: Number of ladder steps
        scales: R_0 = 1, R_k = (log2 R)^k for k < N, and R_N = R^(1/2)
        logR: log2 R
    """

    R: int
    N: int
    scales: tuple[float, ...]
    logR: float

    def scale(self, k: int) -> float:
        """Return R_k; indices beyond N continue the geometric sequence (log2 R)^k."""
        if k < 0:
            raise InvalidParameterError(f"Invalid ladder index: '{k}'. Must be >= 0")
        if k <= self.N:
            return self.scales[k]
        return self.logR**k

    @property
    def RN(self) -> float:
        return self.scales[self.N]

    def to_dict(self) -> dict[str, Any]:
        return {
            "R": self.R,
            "N": self.N,
            "scales": list(self.scales[: self.N]),
            "RN": self.RN,
            "logR": self.logR,
        }


def build_scale_ladder(R: int) -> ScaleLadder:
    """
    Build the scale ladder for R.

    N is the least integer with (log2 R)^N >= R^(1/2).

    Args:
        R: Power of two, at least 256

    Returns:
        ScaleLadder

    Raises:
        InvalidParameterError: If R is not a power of two or is below 256
    """
    if isinstance(R, bool) or int(R) != R or not _is_power_of_two(int(R)):
        raise InvalidParameterError(f"Invalid R: '{R}'. Must be a power of two")
    R = int(R)
    if R < MIN_R:
        raise InvalidParameterError(f"Invalid R: '{R}'. Must be >= {MIN_R}")

    log_r = float(R.bit_length() - 1)
    N = math.ceil(0.5 * log_r / math.log2(log_r))
    scales = tuple([log_r**k for k in range(N)] + [math.sqrt(R)])
    return ScaleLadder(R=R, N=N, scales=scales, logR=log_r)


@dataclass(frozen=True)
class Cap:
    """An interval of the parabola at one ladder level.

    Attributes:
        level: Ladder level (0..N)
        index: Position within the level, left to right
        a: Left endpoint (exact)
        b: Right endpoint (exact)
        level_count: Number of caps at this level
        logR: log2 R of the owning ladder
        thickness: Vertical half-thickness, R_level^-2 (R^-1 at level N)
    """

    level: int
    index: int
    a: Fraction
    b: Fraction
    level_count: int
    logR: float
    thickness: float

    @property
    def width(self) -> Fraction:
        return self.b - self.a

    @property
    def nominal_width(self) -> float:
        """Width of a cap at this level if all were equal."""
        return 2.0 / self.level_count

    @property
    def closed(self) -> bool:
        """The rightmost cap of a level also owns the endpoint 1."""
        return self.b == 1

    @property
    def x_interval(self) -> tuple[Fraction, Fraction]:
        return (self.a, self.b)

    @property
    def c(self) -> float:
        return float((self.a + self.b) / 2)

    @property
    def center(self) -> tuple[float, float]:
        c = self.c
        return (c, c * c)

    @property
    def tangent(self) -> tuple[float, float]:
        c = self.c
        norm = math.sqrt(1.0 + 4.0 * c * c)
        return (1.0 / norm, 2.0 * c / norm)

    @property
    def normal(self) -> tuple[float, float]:
        c = self.c
        norm = math.sqrt(1.0 + 4.0 * c * c)
        return (-2.0 * c / norm, 1.0 / norm)

    @property
    def key(self) -> tuple[int, int]:
        return (self.level, self.index)

    def contains(self, other: Cap | SmallCap) -> bool:
        return self.a <= other.a and other.b <= self.b

    def box_half_extents(self) -> tuple[float, float]:
        """Half extents of the cap's box in its tangent/normal frame."""
        c = self.c
        stretch = math.sqrt(1.0 + 4.0 * c * c)
        half = float(self.width) / 2.0
        return (half * stretch, (half * half + self.thickness) / stretch)

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "index": self.index,
            "a": str(self.a),
            "b": str(self.b),
            "center": list(self.center),
        }


@dataclass(frozen=True)
class CapTree:
    """Nested cap partitions for every ladder level.

    Attributes:
        ladder: The scale ladder the tree is built for
        levels: levels[k] is the ordered tuple of level-k caps
        parents: parents[k][i] is the index of the level-(k-1) parent (level 0 maps to -1)
        children: children[k][i] is the tuple of level-(k+1) child indices
    """

    ladder: ScaleLadder
    levels: tuple[tuple[Cap, ...], ...]
    parents: tuple[tuple[int, ...], ...]
    children: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def thetas(self) -> tuple[Cap, ...]:
        return self.levels[self.ladder.N]

    def caps(self, level: int) -> tuple[Cap, ...]:
        if not 0 <= level <= self.ladder.N:
            raise InvalidParameterError(
                f"Invalid level: '{level}'. Valid options: 0..{self.ladder.N}"
            )
        return self.levels[level]

    def cap(self, level: int, index: int) -> Cap:
        caps = self.caps(level)
        if not 0 <= index < len(caps):
            raise InvalidParameterError(f"Invalid cap index: '{index}' at level {level}")
        return caps[index]

    def parent(self, cap: Cap) -> Cap | None:
        if cap.level == 0:
            return None
        return self.levels[cap.level - 1][self.parents[cap.level][cap.index]]

    def child_caps(self, cap: Cap) -> tuple[Cap, ...]:
        if cap.level == self.ladder.N:
            return ()
        return tuple(self.levels[cap.level + 1][i] for i in self.children[cap.level][cap.index])

    def ancestor(self, cap: Cap, level: int) -> Cap:
        """The level-`level` cap containing `cap`."""
        if level > cap.level:
            raise InvalidParameterError(
                f"Invalid ancestor level: '{level}'. Must be <= {cap.level}"
            )
        current = cap
        while current.level > level:
            parent = self.parent(current)
            assert parent is not None
            current = parent
        return current

    def descendants(self, cap: Cap, level: int) -> tuple[Cap, ...]:
        """All level-`level` caps inside `cap`, left to right."""
        if level < cap.level:
            raise InvalidParameterError(
                f"Invalid descendant level: '{level}'. Must be >= {cap.level}"
            )
        current = (cap,)
        while current and current[0].level < level:
            current = tuple(child for c in current for child in self.child_caps(c))
        return current

    @cached_property
    def theta_ancestry(self) -> np.ndarray:
        """Array of shape (#theta, N + 1): ancestor index of each theta per level."""
        N = self.ladder.N
        table = np.zeros((len(self.thetas), N + 1), dtype=np.int64)
        for theta in self.thetas:
            for level in range(N + 1):
                table[theta.index, level] = self.ancestor(theta, level).index
        return table

    def to_dict(self) -> dict[str, Any]:
        return {
            "ladder": self.ladder.to_dict(),
            "levels": [
                {
                    "level": k,
                    "count": len(caps),
                    "endpoints": [str(c.a) for c in caps] + [str(caps[-1].b)],
                }
                for k, caps in enumerate(self.levels)
            ],
        }


def _group_sizes(total: int, groups: int) -> list[int]:
    base, extra = divmod(total, groups)
    return [base + 1 if i < extra else base for i in range(groups)]


def build_cap_tree(ladder: ScaleLadder) -> CapTree:
    """
    Build nested cap partitions of [-1, 1] for every ladder level.

    The finest level has 2*ceil(R^(1/2)) equal caps. Each coarser level groups
    consecutive children as evenly as possible into 2*ceil(R_k) caps, and
    level 0 is the single cap [-1, 1].

    Args:
        ladder: Scale ladder

    Returns:
        CapTree
    """
    N = ladder.N
    R = ladder.R

    def thickness(level: int) -> float:
        return 1.0 / R if level == N else ladder.scale(level) ** -2

    n_fine = 2 * math.ceil(math.sqrt(R))
    endpoints: list[list[Fraction]] = [[] for _ in range(N + 1)]
    endpoints[N] = [Fraction(-1) + Fraction(2 * i, n_fine) for i in range(n_fine + 1)]
    parents: list[list[int]] = [[] for _ in range(N + 1)]
    children: list[list[tuple[int, ...]]] = [[] for _ in range(N + 1)]
    children[N] = [() for _ in range(n_fine)]

    for level in range(N - 1, -1, -1):
        n_children = len(endpoints[level + 1]) - 1
        target = 1 if level == 0 else 2 * math.ceil(ladder.scale(level))
        n_groups = min(target, n_children)
        sizes = _group_sizes(n_children, n_groups)
        cuts = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        endpoints[level] = [endpoints[level + 1][cut] for cut in cuts]
        children[level] = [tuple(range(cuts[i], cuts[i + 1])) for i in range(n_groups)]
        parents[level + 1] = [i for i, size in enumerate(sizes) for _ in range(size)]
    parents[0] = [-1]

    levels = []
    for level in range(N + 1):
        ends = endpoints[level]
        count = len(ends) - 1
        levels.append(
            tuple(
                Cap(
                    level=level,
                    index=i,
                    a=ends[i],
                    b=ends[i + 1],
                    level_count=count,
                    logR=ladder.logR,
                    thickness=thickness(level),
                )
                for i in range(count)
            )
        )

    return CapTree(
        ladder=ladder,
        levels=tuple(levels),
        parents=tuple(tuple(p) for p in parents),
        children=tuple(tuple(c) for c in children),
    )


@dataclass(frozen=True)
class SmallCap:
    """A small cap gamma: a run of frequency columns [a, b).

    Attributes:
        index: Position left to right
        a: Left endpoint (exact)
        b: Right endpoint (exact)
    """

    index: int
    a: Fraction
    b: Fraction

    @property
    def width(self) -> Fraction:
        return self.b - self.a

    @property
    def closed(self) -> bool:
        return self.b == 1

    @property
    def x_interval(self) -> tuple[Fraction, Fraction]:
        return (self.a, self.b)


@dataclass(frozen=True)
class SmallCapPartition:
    """Partition of [-1, 1] into small caps of width about R^-beta.

    Attributes:
        R: Frequency scale
        beta: Exponent in [1/2, 1]
        columns: Frequency columns (units of 1/R) per cap
        caps: Ordered small caps; the last may be shorter
    """

    R: int
    beta: float
    columns: int
    caps: tuple[SmallCap, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.caps)

    def __iter__(self) -> Iterator[SmallCap]:
        return iter(self.caps)

    def cap_of(self, j: np.ndarray) -> np.ndarray:
        """Index of the cap holding each frequency column j (units of 1/R, |j| <= R)."""
        j = np.asarray(j, dtype=np.int64)
        if j.size and (j.min() < -self.R or j.max() > self.R):
            raise InvalidParameterError(f"Invalid column: outside [-{self.R}, {self.R}]")
        return np.minimum((j + self.R) // self.columns, len(self.caps) - 1)


def small_cap_partition(ladder: ScaleLadder, beta: float) -> SmallCapPartition:
    """
    Partition [-1, 1] into caps of width R^-beta.

    Widths are rounded to whole frequency columns so the caps align with the
    lattice: each cap spans max(1, round(R^(1-beta))) columns.

    Args:
        ladder: Scale ladder (supplies R)
        beta: Exponent in [1/2, 1]

    Returns:
        SmallCapPartition

    Raises:
        InvalidParameterError: If beta is outside [1/2, 1]
    """
    if not 0.5 <= beta <= 1.0:
        raise InvalidParameterError(f"Invalid beta: '{beta}'. Valid range: [0.5, 1]")

    R = ladder.R
    columns = max(1, round(R ** (1.0 - beta)))
    starts = list(range(-R, R, columns))
    caps = tuple(
        SmallCap(
            index=i,
            a=Fraction(start, R),
            b=Fraction(min(start + columns, R), R),
        )
        for i, start in enumerate(starts)
    )
    return SmallCapPartition(R=R, beta=float(beta), columns=columns, caps=caps)


@dataclass(frozen=True)
class PlateSpec:
    """Dual plates of a level-k cap on the periodic cell.

    The tiles are the cells of the lattice spanned by a = (h, 0) and
    b = (-q*h, R), where h = R/n and n = 2^floor(log2 R_k). The lattice
    contains R*Z^2, so its n cells partition [0, R)^2. The long side b points
    along the cap normal up to rounding of q.

    Attributes:
        cap: The cap (level >= 1)
        R: Frequency scale
        long_dim: R
        short_dim: Nominal short side R/R_k
        count: Number of tiles in the cell, n
        width: Realised short side h = R/n
        shear: Integer q = round(2*c*n)
        origin: Centre of tile 0
    """

    cap: Cap
    R: int
    long_dim: float
    short_dim: float
    count: int
    width: int
    shear: int
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def area(self) -> float:
        """Realised tile area |U| = h*R."""
        return float(self.width * self.R)

    @property
    def nominal_area(self) -> float:
        return self.long_dim * self.short_dim

    @property
    def a_vector(self) -> tuple[float, float]:
        return (float(self.width), 0.0)

    @property
    def b_vector(self) -> tuple[float, float]:
        return (float(-self.shear * self.width), float(self.R))

    @property
    def orientation(self) -> tuple[float, float]:
        """Unit vector along the realised long side."""
        bx, by = self.b_vector
        norm = math.hypot(bx, by)
        return (bx / norm, by / norm)

    @property
    def dual_box(self) -> tuple[float, float]:
        """Long and short sides of the dual box: R_k/R along the tangent, 1/R across."""
        return (1.0 / self.short_dim, 1.0 / self.long_dim)

    def center(self, index: int) -> tuple[float, float]:
        return (self.origin[0] + (index % self.count) * self.width, self.origin[1])

    def tiles(self) -> Iterator[tuple[int, tuple[float, float]]]:
        """Yield (index, centre) for every tile of the periodic cell."""
        for i in range(self.count):
            yield i, self.center(i)

    def tile_index(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Index of the tile containing each point (periodic in both axes)."""
        t = np.asarray(x2, dtype=float) / self.R
        t = t - np.floor(t + 0.5)
        s = (np.asarray(x1, dtype=float) - self.origin[0]) / self.width + t * self.shear
        return np.mod(np.floor(s + 0.5), self.count).astype(np.int64)

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.cap.level,
            "index": self.cap.index,
            "long_dim": self.long_dim,
            "short_dim": self.short_dim,
            "width": self.width,
            "count": self.count,
            "shear": self.shear,
            "area": self.area,
        }


def plate_tiling(cap: Cap, ladder: ScaleLadder) -> PlateSpec:
    """
    Build the dual plate tiling for a cap.

    Args:
        cap: Cap with level >= 1
        ladder: Scale ladder of the cap's tree

    Returns:
        PlateSpec

    Raises:
        InvalidParameterError: If cap is the level-0 cap
    """
    if cap.level < 1:
        raise InvalidParameterError("Invalid cap level: '0'. No plate is defined for tau_0")

    scale = ladder.scale(cap.level)
    count = 2 ** int(math.floor(math.log2(scale) + 1e-12))
    count = min(count, ladder.R)
    width = ladder.R // count
    shear = int(round(2.0 * cap.c * count))
    return PlateSpec(
        cap=cap,
        R=ladder.R,
        long_dim=float(ladder.R),
        short_dim=ladder.R / scale,
        count=count,
        width=width,
        shear=shear,
    )


def are_near(a: Cap, b: Cap, kappa: float = 1.0) -> bool:
    """
    Decide whether two same-level caps are near.

    Caps are near when the gap between their intervals is at most
    kappa * log2(R) * (nominal level width).

    Raises:
        InvalidParameterError: If the caps sit at different levels or kappa <= 0
    """
    if a.level != b.level:
        raise InvalidParameterError(
            f"Invalid cap pair: levels {a.level} and {b.level} differ"
        )
    if kappa <= 0:
        raise InvalidParameterError(f"Invalid kappa: '{kappa}'. Must be positive")
    gap = max(Fraction(0), max(a.a, b.a) - min(a.b, b.b))
    return float(gap) <= kappa * a.logR * a.nominal_width
