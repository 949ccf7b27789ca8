"""
Band-limited functions on the R^-1 neighbourhood of the parabola.

Frequencies live on the lattice (Z/R)^2, so every function is periodic with
period R in both variables and is evaluated on one periodic cell sampled by an
M x M grid, M = sigma*R. Axis 0 of a sampled field is x1, axis 1 is x2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Protocol

import numpy as np
import scipy.fft

from decoupling_lab.config import get_decoupling_config, get_grid_config, get_worker_count
from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.geometry import (
    ScaleLadder,
    SmallCapPartition,
    build_cap_tree,
    small_cap_partition,
)

ROW_CHUNK = 256
QUADRATURE_BLOCK = 2**22
SPECTRAL_FLOOR = 1e-13


class HasInterval(Protocol):
    @property
    def x_interval(self) -> tuple[Fraction, Fraction]: ...


class FamilyKind(Enum):
    """Test function families."""

    FLAT = "flat"
    RANDOM_PHASE = "random_phase"
    SINGLE_CAP = "single_cap"
    BLOCK = "block"
    GAUSSIAN = "gaussian"
    PLANE_WAVE = "plane_wave"


@dataclass(frozen=True, eq=False)
class FrequencyLattice:
    """Lattice points (j, m) with |j| <= R and |m - j^2/R| <= 1.

    The point (j, m) stands for the frequency (j/R, m/R).

    Attributes:
        R: Frequency scale
        j: Column index of every point
        m: Row index of every point
    """

    R: int
    j: np.ndarray = field(repr=False)
    m: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.j.size)

    @property
    def xi(self) -> np.ndarray:
        """Frequencies as an array of shape (n, 2)."""
        return np.stack([self.j, self.m], axis=1) / self.R

    def index_of(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(zip(self.j, self.m, strict=True))}


def build_lattice(R: int) -> FrequencyLattice:
    """
    Enumerate the frequency lattice inside the R^-1 neighbourhood.

    Args:
        R: Frequency scale

    Returns:
        FrequencyLattice ordered by column, then row
    """
    js: list[int] = []
    ms: list[int] = []
    for j in range(-R, R + 1):
        sq = j * j
        m_lo = -((R - sq) // R)
        m_hi = (sq + R) // R
        for m in range(m_lo, m_hi + 1):
            js.append(j)
            ms.append(m)
    return FrequencyLattice(R=R, j=np.asarray(js, dtype=np.int64), m=np.asarray(ms, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class FrequencyProfile:
    """Complex coefficients on a frequency lattice.

    Attributes:
        lattice: The lattice the coefficients live on
        coeffs: One complex coefficient per lattice point
    """

    lattice: FrequencyLattice
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.coeffs.shape != (len(self.lattice),):
            raise InvalidParameterError(
                f"Invalid coefficient count: {self.coeffs.shape}. Expected ({len(self.lattice)},)"
            )

    @property
    def R(self) -> int:
        return self.lattice.R

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def active_columns(self) -> np.ndarray:
        return np.unique(self.lattice.j[self.coeffs != 0])

    def scaled(self, factor: complex) -> FrequencyProfile:
        return FrequencyProfile(self.lattice, self.coeffs * factor)

    def __add__(self, other: FrequencyProfile) -> FrequencyProfile:
        if other.lattice.R != self.lattice.R:
            raise InvalidParameterError(f"Cannot add profiles with R={self.R} and R={other.R}")
        return FrequencyProfile(self.lattice, self.coeffs + other.coeffs)


def column_mask(lattice: FrequencyLattice, a: Fraction, b: Fraction, closed: bool) -> np.ndarray:
    """Boolean mask of lattice points whose column j/R lies in [a, b) ([a, b] when closed)."""
    a, b = Fraction(a), Fraction(b)
    j = lattice.j
    R = lattice.R
    lower = j * a.denominator >= a.numerator * R
    if closed:
        upper = j * b.denominator <= b.numerator * R
    else:
        upper = j * b.denominator < b.numerator * R
    return lower & upper


def cap_component(
    profile: FrequencyProfile, interval: HasInterval | tuple[Fraction, Fraction]
) -> FrequencyProfile:
    """
    Fourier projection onto the columns of an interval.

    Columns with j/R in [a, b) are kept; an interval ending at 1 is closed.

    Args:
        profile: Source profile
        interval: A cap (anything with x_interval) or an (a, b) pair inside [-1, 1]

    Returns:
        Profile with coefficients outside the interval set to zero
    """
    a, b = interval if isinstance(interval, tuple) else interval.x_interval
    a, b = Fraction(a), Fraction(b)
    if a < -1 or b > 1 or a > b:
        raise InvalidParameterError(f"Invalid interval: [{a}, {b}]. Must lie inside [-1, 1]")
    keep = column_mask(profile.lattice, a, b, closed=(b == 1))
    return FrequencyProfile(profile.lattice, np.where(keep, profile.coeffs, 0))


@dataclass(frozen=True)
class GridSpec:
    """Periodic sampling grid of the cell [0, R)^2.

    Attributes:
        R: Period in both axes
        oversampling: Samples per unit length, sigma
    """

    R: int
    oversampling: int

    @property
    def M(self) -> int:
        return self.R * self.oversampling

    @property
    def spacing(self) -> float:
        return self.R / self.M

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def cell_measure(self) -> float:
        return float(self.R) ** 2

    def coordinates(self) -> np.ndarray:
        """Node coordinates along one axis."""
        return np.arange(self.M) * self.spacing

    def frequencies(self) -> np.ndarray:
        """Spectral frequencies along one axis, matching scipy.fft ordering."""
        return scipy.fft.fftfreq(self.M, d=self.spacing)


def build_grid(R: int, oversampling: int | None = None) -> GridSpec:
    """
    Build the sampling grid for scale R.

    Args:
        R: Period
        oversampling: Samples per unit length; defaults to the configured value

    Raises:
        InvalidParameterError: If oversampling is below 4
    """
    sigma = get_grid_config().oversampling if oversampling is None else oversampling
    if int(sigma) != sigma or sigma < 4:
        raise InvalidParameterError(f"Invalid oversampling: '{sigma}'. Must be an integer >= 4")
    return GridSpec(R=int(R), oversampling=int(sigma))


@dataclass(frozen=True, eq=False)
class SampledField:
    """Samples of a function on a grid.

    Attributes:
        grid: The grid
        values: Array of shape (M, M), complex or real
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        M = self.grid.M
        if self.values.shape != (M, M):
            raise InvalidParameterError(
                f"Invalid field shape: {self.values.shape}. Expected ({M}, {M})"
            )

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def with_values(self, values: np.ndarray) -> SampledField:
        return SampledField(self.grid, values)


def _check_grid(profile: FrequencyProfile, grid: GridSpec) -> None:
    if grid.R != profile.R:
        raise InvalidParameterError(
            f"Invalid grid: R={grid.R} does not match profile R={profile.R}"
        )


def _column_factors(profile: FrequencyProfile, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Split a profile into per-column x2 factors H and x1 phases for a separable product."""
    M = grid.M
    nonzero = profile.coeffs != 0
    j = profile.lattice.j[nonzero]
    m = profile.lattice.m[nonzero]
    a = profile.coeffs[nonzero]
    columns, slot = np.unique(j, return_inverse=True)
    spectrum = np.zeros((columns.size, M), dtype=np.complex128)
    np.add.at(spectrum, (slot, m % M), a)
    H = scipy.fft.ifft(spectrum, axis=1, norm="forward", workers=get_worker_count())
    return columns, H


def _column_phases(columns: np.ndarray, rows: np.ndarray, M: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.outer(rows, columns) / M)


def synthesize(profile: FrequencyProfile, grid: GridSpec, method: str = "auto") -> SampledField:
    """
    Evaluate sum_xi a_xi e^{2 pi i xi.x} at every grid node.

    Args:
        profile: Coefficients
        grid: Grid with the same R
        method: "fft" (zero-padded inverse 2D FFT), "columns" (separable product,
                cheap when few columns are active) or "auto"

    Returns:
        SampledField with complex values

    Raises:
        InvalidParameterError: If R differs or the method is unknown
    """
    _check_grid(profile, grid)
    M = grid.M
    if method not in ("auto", "fft", "columns"):
        raise InvalidParameterError(
            f"Invalid synthesis method: '{method}'. Valid options: auto, fft, columns"
        )
    if method == "auto":
        n_columns = profile.active_columns().size
        method = "columns" if n_columns <= get_decoupling_config().direct_column_limit else "fft"

    if method == "columns":
        columns, H = _column_factors(profile, grid)
        if columns.size == 0:
            return SampledField(grid, np.zeros((M, M), dtype=np.complex128))
        E = _column_phases(columns, np.arange(M), M)
        return SampledField(grid, E @ H)

    spectrum = np.zeros((M, M), dtype=np.complex128)
    np.add.at(spectrum, (profile.lattice.j % M, profile.lattice.m % M), profile.coeffs)
    values = scipy.fft.ifft2(spectrum, norm="forward", workers=get_worker_count())
    return SampledField(grid, values)


def _stream_rows(profile: FrequencyProfile, grid: GridSpec):
    """Yield row blocks of |f| without materialising the full field."""
    M = grid.M
    columns, H = _column_factors(profile, grid)
    if columns.size == 0:
        return
    if columns.size == 1:
        # |f| does not depend on x1 for a single column
        yield np.broadcast_to(np.abs(H[0]), (M, M))
        return
    if columns.size > get_decoupling_config().direct_column_limit:
        yield np.abs(synthesize(profile, grid, method="fft").values)
        return
    for start in range(0, M, ROW_CHUNK):
        rows = np.arange(start, min(start + ROW_CHUNK, M))
        yield np.abs(_column_phases(columns, rows, M) @ H)


def _quadrature_nodes(span: int, p: float, refinement: int) -> int:
    """
    Nodes along one axis for a frequency span of `span` lattice steps.

    |f|^2 has frequencies in [-span, span], so |f|^{2n} stays below n*span and
    the Riemann sum on more than n*span nodes is exact.
    """
    half_order = max(1, math.ceil(p / 2))
    return scipy.fft.next_fast_len(half_order * span * refinement + 1)


def _is_even_integer(p: float) -> bool:
    return float(p).is_integer() and int(p) % 2 == 0


def _lp_power_on_nodes(
    j: np.ndarray, m: np.ndarray, c: np.ndarray, R: int, p: float, n1: int, n2: int
) -> float:
    """Riemann sum of |f|^p over the cell on n1 x n2 nodes; j, m start at 0, sorted by j."""
    columns, starts = np.unique(j, return_index=True)
    block = max(1, QUADRATURE_BLOCK // max(n1, c.size))
    total = 0.0
    for start in range(0, n2, block):
        nodes = np.arange(start, min(start + block, n2))
        terms = c[:, None] * np.exp(2j * np.pi * np.outer(m, nodes) / n2)
        G = np.zeros((n1, nodes.size), dtype=np.complex128)
        G[columns] = np.add.reduceat(terms, starts, axis=0)
        values = scipy.fft.ifft(G, axis=0, norm="forward", workers=get_worker_count())
        total += float(np.sum(np.abs(values) ** p))
    return total * (R / n1) * (R / n2)


def _lp_power(j: np.ndarray, m: np.ndarray, c: np.ndarray, R: int, p: float) -> float:
    """
    Integral of |f|^p over the cell for f = sum c e^{2 pi i (j x1 + m x2)/R}.

    The frequencies are shifted to start at 0, which leaves |f| unchanged and
    sizes the node grid by the span of the support rather than by R. Exact for
    even integer p; otherwise refined by doubling until two values agree.
    """
    if c.size == 0:
        return 0.0
    order = np.argsort(j, kind="stable")
    j, m, c = j[order] - j.min(), m[order] - m.min(), c[order]
    span1, span2 = int(j.max()), int(m.max())

    def integrate(refinement: int) -> float:
        n1 = _quadrature_nodes(span1, p, refinement)
        n2 = _quadrature_nodes(span2, p, refinement)
        return _lp_power_on_nodes(j, m, c, R, p, n1, n2)

    value = integrate(1)
    if _is_even_integer(p):
        return value
    cfg = get_grid_config()
    for level in range(1, cfg.quadrature_refinements + 1):
        finer = integrate(2**level)
        if abs(finer - value) <= cfg.quadrature_tolerance * abs(finer):
            return finer
        value = finer
    warnings.warn(
        f"L^{p} quadrature changed by more than {cfg.quadrature_tolerance:g} after "
        f"{cfg.quadrature_refinements} refinements",
        UserWarning,
        stacklevel=3,
    )
    return value


def _require_p(p: float) -> None:
    if not p >= 1:
        raise InvalidParameterError(f"Invalid p: '{p}'. Must be >= 1")


def profile_lp_power(profile: FrequencyProfile, p: float) -> float:
    """||f||_p^p over the periodic cell, from the profile's nonzero coefficients."""
    _require_p(p)
    nonzero = profile.coeffs != 0
    return _lp_power(
        profile.lattice.j[nonzero], profile.lattice.m[nonzero], profile.coeffs[nonzero], profile.R, p
    )


def cap_lp_powers(profile: FrequencyProfile, partition: SmallCapPartition, p: float) -> np.ndarray:
    """
    ||f_gamma||_p^p for every small cap, in partition order.

    Each cap is integrated on nodes sized by its own frequency span, so the cost
    follows the size of the cap rather than the grid.
    """
    _require_p(p)
    if partition.R != profile.R:
        raise InvalidParameterError(
            f"Invalid partition: R={partition.R} does not match profile R={profile.R}"
        )
    nonzero = profile.coeffs != 0
    j, m, c = profile.lattice.j[nonzero], profile.lattice.m[nonzero], profile.coeffs[nonzero]
    owner = partition.cap_of(j)
    powers = np.zeros(len(partition))
    order = np.argsort(owner, kind="stable")
    caps, starts = np.unique(owner[order], return_index=True)
    for cap, lo, hi in zip(caps, starts, [*starts[1:], order.size], strict=True):
        members = order[lo:hi]
        powers[cap] = _lp_power(j[members], m[members], c[members], profile.R, p)
    return powers


def profile_lp_norm(profile: FrequencyProfile, p: float) -> float:
    """L^p norm over the periodic cell; see profile_lp_power."""
    return profile_lp_power(profile, p) ** (1.0 / p)


def profile_sup_norm(profile: FrequencyProfile, grid: GridSpec) -> float:
    """Grid sup-norm computed from the profile in row blocks."""
    _check_grid(profile, grid)
    best = 0.0
    for block in _stream_rows(profile, grid):
        best = max(best, float(np.max(block)))
    return best


def lp_norm(field_: SampledField, p: float) -> float:
    """
    L^p norm over one periodic cell of a field band-limited below the grid Nyquist rate.

    The field is expanded in its grid spectrum and integrated like a profile,
    so the result does not depend on the oversampling.

    Raises:
        InvalidParameterError: If p < 1
    """
    _require_p(p)
    grid = field_.grid
    spectrum = scipy.fft.fft2(field_.values, norm="forward", workers=get_worker_count())
    magnitude = np.abs(spectrum)
    peak = float(magnitude.max()) if magnitude.size else 0.0
    if peak == 0.0:
        return 0.0
    k1, k2 = np.nonzero(magnitude > SPECTRAL_FLOOR * peak)
    M = grid.M
    j = np.where(k1 < M // 2, k1, k1 - M)
    m = np.where(k2 < M // 2, k2, k2 - M)
    return _lp_power(j, m, spectrum[k1, k2], grid.R, p) ** (1.0 / p)


def superlevel_measure(field_: SampledField, alpha: float) -> float:
    """Measure of {|f| > alpha} by node counting."""
    if alpha < 0:
        raise InvalidParameterError(f"Invalid alpha: '{alpha}'. Must be >= 0")
    count = int(np.count_nonzero(np.abs(field_.values) > alpha))
    return count * field_.grid.cell_area


def superlevel_boundary_count(field_: SampledField, alpha: float) -> int:
    """Nodes of {|f| > alpha} with a 4-neighbour outside the set."""
    inside = np.abs(field_.values) > alpha
    boundary = np.zeros_like(inside)
    for axis in (0, 1):
        for shift in (1, -1):
            boundary |= inside & ~np.roll(inside, shift, axis=axis)
    return int(np.count_nonzero(boundary))


def theta_sup_norms(profile: FrequencyProfile, ladder: ScaleLadder, grid: GridSpec) -> np.ndarray:
    """Grid sup-norm of every canonical cap component."""
    tree = build_cap_tree(ladder)
    return np.array(
        [profile_sup_norm(cap_component(profile, theta), grid) for theta in tree.thetas]
    )


def normalize_profile(
    profile: FrequencyProfile, ladder: ScaleLadder, grid: GridSpec
) -> FrequencyProfile:
    """Scale so that max over theta of sup |f_theta| equals 1 on the grid."""
    peak = float(np.max(theta_sup_norms(profile, ladder, grid)))
    if peak == 0.0:
        return profile
    return profile.scaled(1.0 / peak)


def _middle(count: int) -> int:
    return count // 2


def make_family(
    kind: FamilyKind | str,
    ladder: ScaleLadder,
    beta: float = 0.5,
    seed: int = 0,
    grid: GridSpec | None = None,
    level: int | None = None,
    cap_index: int | None = None,
    normalize: bool = True,
) -> FrequencyProfile:
    """
    Build a test function.

    Args:
        kind: Family name (flat, random_phase, single_cap, block, gaussian, plane_wave)
        ladder: Scale ladder
        beta: Small cap exponent (single_cap)
        seed: Seed for random families
        grid: Grid used to measure the normalisation; defaults to the configured grid
        level: Cap level for block (default 1)
        cap_index: Which cap for single_cap/block (default: the middle one)
        normalize: Scale so that max over theta of sup |f_theta| is 1

    Returns:
        FrequencyProfile

    Raises:
        InvalidParameterError: If the kind is unknown or the cap selection is invalid
    """
    try:
        family = FamilyKind(kind)
    except ValueError:
        valid = ", ".join(k.value for k in FamilyKind)
        raise InvalidParameterError(f"Invalid family: '{kind}'. Valid options: {valid}") from None

    lattice = build_lattice(ladder.R)
    n = len(lattice)
    rng = np.random.default_rng(seed)

    if family is FamilyKind.FLAT:
        coeffs = np.ones(n, dtype=np.complex128)
    elif family is FamilyKind.RANDOM_PHASE:
        coeffs = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, size=n))
    elif family is FamilyKind.GAUSSIAN:
        coeffs = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    elif family is FamilyKind.PLANE_WAVE:
        coeffs = np.zeros(n, dtype=np.complex128)
        coeffs[np.flatnonzero((lattice.j == 0) & (lattice.m == 0))] = 1.0
    elif family is FamilyKind.SINGLE_CAP:
        partition = small_cap_partition(ladder, beta)
        index = _middle(len(partition)) if cap_index is None else cap_index
        if not 0 <= index < len(partition):
            raise InvalidParameterError(f"Invalid small cap index: '{index}'")
        gamma = partition.caps[index]
        keep = column_mask(lattice, gamma.a, gamma.b, closed=gamma.closed)
        coeffs = keep.astype(np.complex128)
    else:
        tree = build_cap_tree(ladder)
        cap_level = 1 if level is None else level
        caps = tree.caps(cap_level)
        index = _middle(len(caps)) if cap_index is None else cap_index
        cap = tree.cap(cap_level, index)
        keep = column_mask(lattice, cap.a, cap.b, closed=cap.closed)
        coeffs = keep.astype(np.complex128)

    profile = FrequencyProfile(lattice, coeffs)
    if normalize:
        profile = normalize_profile(profile, ladder, grid or build_grid(ladder.R))
    return profile


def family_names() -> list[str]:
    return [k.value for k in FamilyKind]


def describe_profile(profile: FrequencyProfile) -> dict[str, Any]:
    return {
        "R": profile.R,
        "points": len(profile.lattice),
        "active_columns": int(profile.active_columns().size),
        "energy": profile.energy,
    }
