"""
Amplitude-dependent pruning of wave envelopes.

For an amplitude alpha the cascade keeps, at every level k and cap tau_k,
the gauge tiles U on which

    C_p (log R)^4 |U|^-1 int W_U sum_{theta in tau_k} |f_{k+1,theta}|^2 >= alpha^2 / (#tau_k)^2

and multiplies every f_{k+1,theta} by the sum of psi_U over those tiles.
Level N starts from f_{N+1,theta} = f_theta. Pruned pieces are rebuilt on
demand from the cached gauge masks so that no level is stored in full.
"""

from __future__ import annotations

import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from pydantic import BaseModel, Field

from decoupling_lab.config import get_pruning_config, get_worker_count
from decoupling_lab.cutoffs.tiles import TileWeightSystem, build_tile_weights
from decoupling_lab.cutoffs.weights import (
    PolyWeight,
    plate_weight,
    weighted_tile_averages,
)
from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.geometry import Cap, CapTree, PlateSpec, ScaleLadder, plate_tiling
from decoupling_lab.synthesis import (
    FrequencyProfile,
    GridSpec,
    SampledField,
    cap_component,
    profile_sup_norm,
    synthesize,
)


class _ArrayCache:
    """Least-recently-used cache bounded by total array bytes."""

    def __init__(self, max_bytes: int):
        self.max_bytes = max_bytes
        self._items: OrderedDict[object, np.ndarray] = OrderedDict()
        self._bytes = 0

    def get(self, key, build):
        if key in self._items:
            self._items.move_to_end(key)
            return self._items[key]
        value = build()
        if value.nbytes <= self.max_bytes:
            self._items[key] = value
            self._bytes += value.nbytes
            while self._bytes > self.max_bytes:
                _, evicted = self._items.popitem(last=False)
                self._bytes -= evicted.nbytes
        return value


@dataclass(frozen=True)
class GaugeSet:
    """High-amplitude tiles of one cap.

    Attributes:
        cap: Cap at level >= 1
        alpha: Amplitude
        cp: Pruning constant
        threshold: Smallest weighted average a member tile may have
        averages: Weighted square-function average of every tile
        tiles: Indices of the member tiles
    """

    cap: Cap
    alpha: float
    cp: float
    threshold: float
    averages: tuple[float, ...]
    tiles: frozenset[int]

    def __len__(self) -> int:
        return len(self.tiles)


def gauge_threshold(alpha: float, cp: float, log_r: float, cap_count: int) -> float:
    """Smallest weighted average kept: alpha^2 / ((#tau)^2 C_p (log R)^4); inf when #tau is 0."""
    if cap_count == 0:
        return math.inf
    return alpha**2 / (cap_count**2 * cp * log_r**4)


def select_tiles(averages: np.ndarray, threshold: float) -> frozenset[int]:
    return frozenset(int(i) for i in np.flatnonzero(averages >= threshold))


@dataclass(eq=False)
class PrunedDecomposition:
    """Pruned functions f_k, bad parts f_m^B and gauge sets for one amplitude.

    Level indices run 1..N for f_k; index N+1 stands for the unpruned f.
    Bad parts f_m^B = f_m - f_{m-1} are defined for m = 2..N, and m = N+1
    gives f^B = f - f_N.

    Attributes:
        profile: Source coefficients
        alpha: Amplitude
        cp: Pruning constant
        ladder: Scale ladder
        tree: Cap tree
        grid: Sampling grid
        sup_norm: Grid sup-norm of f
        cap_counts: #tau_k per level (caps whose f_tau is not identically zero)
        gauges: Gauge set per cap key (level, index)
    """

    profile: FrequencyProfile
    alpha: float
    cp: float
    ladder: ScaleLadder
    tree: CapTree
    grid: GridSpec
    sup_norm: float = 0.0
    cap_counts: dict[int, int] = field(default_factory=dict)
    gauges: dict[tuple[int, int], GaugeSet] = field(default_factory=dict)
    active: dict[tuple[int, int], bool] = field(default_factory=dict)
    _theta_profiles: list[FrequencyProfile] = field(default_factory=list, repr=False)
    _systems: dict[tuple[int, int], TileWeightSystem] = field(default_factory=dict, repr=False)
    _weights: dict[tuple[int, int], PolyWeight] = field(default_factory=dict, repr=False)
    _cache: _ArrayCache | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.ladder.N

    @property
    def thetas(self) -> tuple[Cap, ...]:
        return self.tree.thetas

    def plate(self, cap: Cap) -> PlateSpec:
        return self.system(cap).plate

    def system(self, cap: Cap) -> TileWeightSystem:
        if cap.key not in self._systems:
            plate = plate_tiling(cap, self.ladder)
            self._systems[cap.key] = build_tile_weights(plate, self.grid)
        return self._systems[cap.key]

    def weight(self, cap: Cap) -> PolyWeight:
        if cap.key not in self._weights:
            self._weights[cap.key] = plate_weight(self.plate(cap), self.grid)
        return self._weights[cap.key]

    def _cached(self, key, build) -> np.ndarray:
        if self._cache is None:
            self._cache = _ArrayCache(get_pruning_config().mask_cache_mb * 2**20)
        return self._cache.get(key, build)

    def theta_profile(self, theta: Cap) -> FrequencyProfile:
        return self._theta_profiles[theta.index]

    def theta_field(self, theta: Cap) -> np.ndarray:
        """f_theta on the grid."""
        return self._cached(
            ("theta", theta.index),
            lambda: synthesize(self.theta_profile(theta), self.grid).values,
        )

    def field(self) -> np.ndarray:
        """f on the grid."""
        return self._cached(("f",), lambda: synthesize(self.profile, self.grid).values)

    def gauge_set(self, cap: Cap) -> GaugeSet:
        """
        The recorded gauge set of a cap.

        Raises:
            InvalidParameterError: If the cap is level 0 or not part of the tree
        """
        if cap.level < 1 or cap.key not in self.gauges:
            raise InvalidParameterError(
                f"Invalid cap: level {cap.level}, index {cap.index} has no gauge set"
            )
        return self.gauges[cap.key]

    def mask(self, cap: Cap) -> np.ndarray:
        """Sum of psi_U over the gauge tiles of a cap."""
        gauge = self.gauge_set(cap)
        if not gauge.tiles:
            return np.zeros((self.grid.M, self.grid.M))
        return self._cached(("mask", cap.key), lambda: self.system(cap).mask(gauge.tiles))

    def product_mask(self, theta: Cap, level: int) -> np.ndarray:
        """prod_{j=level..N} mask(tau_j(theta)); the constant 1 for level N+1."""
        if level > self.N:
            return np.ones((self.grid.M, self.grid.M))
        out = self.mask(self.tree.ancestor(theta, self.N)).copy()
        for j in range(self.N - 1, level - 1, -1):
            out *= self.mask(self.tree.ancestor(theta, j))
        return out

    def pruned_theta(self, level: int, theta: Cap) -> np.ndarray:
        """f_{level,theta}; level N+1 returns f_theta."""
        self._check_level(level, low=1, high=self.N + 1)
        if not self.active.get(theta.key, False):
            return np.zeros((self.grid.M, self.grid.M), dtype=np.complex128)
        return self.theta_field(theta) * self.product_mask(theta, level)

    def bad_theta(self, m: int, theta: Cap) -> np.ndarray:
        """f^B_{m,theta} = f_{m,theta} - f_{m-1,theta} for 2 <= m <= N+1."""
        self._check_level(m, low=2, high=self.N + 1)
        if not self.active.get(theta.key, False):
            return np.zeros((self.grid.M, self.grid.M), dtype=np.complex128)
        upper = self.product_mask(theta, m)
        lower = upper * self.mask(self.tree.ancestor(theta, m - 1))
        return self.theta_field(theta) * (upper - lower)

    def pruned_cap(self, level: int, cap: Cap) -> np.ndarray:
        """f_{level,cap} = sum over theta inside cap of f_{level,theta}."""
        out = np.zeros((self.grid.M, self.grid.M), dtype=np.complex128)
        for theta in self.tree.descendants(cap, self.N):
            if self.active.get(theta.key, False):
                out += self.pruned_theta(level, theta)
        return out

    def bad_cap(self, m: int, cap: Cap) -> np.ndarray:
        """f^B_{m,cap} = sum over theta inside cap of f^B_{m,theta}."""
        out = np.zeros((self.grid.M, self.grid.M), dtype=np.complex128)
        for theta in self.tree.descendants(cap, self.N):
            if self.active.get(theta.key, False):
                out += self.bad_theta(m, theta)
        return out

    def level_field(self, level: int) -> np.ndarray:
        """f_level on the grid (f for level N+1)."""
        return self.pruned_cap(level, self.tree.cap(0, 0))

    def bad_field(self, m: int) -> np.ndarray:
        """f_m^B on the grid (f^B = f - f_N for m = N+1)."""
        return self.bad_cap(m, self.tree.cap(0, 0))

    def square_sum(self, level: int, cap: Cap) -> np.ndarray:
        """sum over theta inside cap of |f_{level,theta}|^2."""
        out = np.zeros((self.grid.M, self.grid.M))
        for theta in self.tree.descendants(cap, self.N):
            if self.active.get(theta.key, False):
                out += np.abs(self.pruned_theta(level, theta)) ** 2
        return out

    def recompute_gauge(self, cap: Cap) -> GaugeSet:
        """Recompute a gauge set from scratch using the recorded finer levels."""
        sq = SampledField(self.grid, self.square_sum(cap.level + 1, cap))
        averages = weighted_tile_averages(sq, self.weight(cap))
        threshold = gauge_threshold(
            self.alpha, self.cp, self.ladder.logR, self.cap_counts.get(cap.level, 0)
        )
        return GaugeSet(
            cap=cap,
            alpha=self.alpha,
            cp=self.cp,
            threshold=threshold,
            averages=tuple(float(a) for a in averages),
            tiles=select_tiles(averages, threshold),
        )

    def _check_level(self, level: int, low: int, high: int) -> None:
        if not low <= level <= high:
            raise InvalidParameterError(f"Invalid level: '{level}'. Valid options: {low}..{high}")


def count_active_caps(
    profile: FrequencyProfile, tree: CapTree, grid: GridSpec, sup_norm: float
) -> tuple[dict[int, int], dict[tuple[int, int], bool]]:
    """#tau_k per level: caps whose grid sup-norm exceeds zero_threshold * ||f||_inf."""
    floor = get_pruning_config().zero_threshold * sup_norm
    counts: dict[int, int] = {}
    active: dict[tuple[int, int], bool] = {}
    for level in range(tree.ladder.N + 1):
        counts[level] = 0
        for cap in tree.caps(level):
            component = cap_component(profile, cap)
            is_active = sup_norm > 0 and not component.is_zero() and (
                profile_sup_norm(component, grid) > floor
            )
            active[cap.key] = is_active
            counts[level] += int(is_active)
    return counts, active


def prune_cascade(
    f: FrequencyProfile,
    alpha: float,
    cp: float | None,
    ladder: ScaleLadder,
    tree: CapTree,
    grid: GridSpec,
) -> PrunedDecomposition:
    """
    Run the pruning cascade at amplitude alpha.

    Args:
        f: Normalised profile
        alpha: Amplitude (> 0; values outside [1, R^(1/2)] warn)
        cp: Pruning constant; defaults to the configured value
        ladder: Scale ladder
        tree: Cap tree of the ladder
        grid: Sampling grid

    Returns:
        PrunedDecomposition with every gauge set recorded

    Raises:
        InvalidParameterError: If alpha <= 0, cp <= 0 or R differs between inputs
    """
    cp = get_pruning_config().cp if cp is None else float(cp)
    if not alpha > 0:
        raise InvalidParameterError(f"Invalid alpha: '{alpha}'. Must be positive")
    if not cp > 0:
        raise InvalidParameterError(f"Invalid cp: '{cp}'. Must be positive")
    if not (f.R == ladder.R == grid.R):
        raise InvalidParameterError(
            f"Invalid inputs: profile R={f.R}, ladder R={ladder.R}, grid R={grid.R} differ"
        )
    if not 1.0 <= alpha <= math.sqrt(ladder.R):
        warnings.warn(
            f"alpha={alpha} is outside [1, R^(1/2)] = [1, {math.sqrt(ladder.R):g}]",
            UserWarning,
            stacklevel=2,
        )

    decomp = PrunedDecomposition(
        profile=f, alpha=float(alpha), cp=cp, ladder=ladder, tree=tree, grid=grid
    )
    decomp._theta_profiles = [cap_component(f, theta) for theta in tree.thetas]
    decomp.sup_norm = float(np.max(np.abs(decomp.field()))) if not f.is_zero() else 0.0
    decomp.cap_counts, decomp.active = count_active_caps(f, tree, grid, decomp.sup_norm)

    for level in range(ladder.N, 0, -1):
        threshold = gauge_threshold(alpha, cp, ladder.logR, decomp.cap_counts[level])
        for cap in tree.caps(level):
            if decomp.active[cap.key]:
                sq = SampledField(grid, decomp.square_sum(level + 1, cap))
                averages = weighted_tile_averages(sq, decomp.weight(cap))
            else:
                averages = np.zeros(decomp.plate(cap).count)
            decomp.gauges[cap.key] = GaugeSet(
                cap=cap,
                alpha=float(alpha),
                cp=cp,
                threshold=threshold,
                averages=tuple(float(a) for a in averages),
                tiles=select_tiles(averages, threshold),
            )
    return decomp


def gauge_set(decomp: PrunedDecomposition, cap: Cap) -> GaugeSet:
    """The recorded gauge set of a cap (see PrunedDecomposition.gauge_set)."""
    return decomp.gauge_set(cap)


class PruningReport(BaseModel):
    """Pruning invariants and the replacement gap for one decomposition."""

    R: int
    alpha: float
    cp: float
    cap_counts: dict[int, int]
    gauge_sizes: dict[int, list[int]]
    tile_counts: dict[int, list[int]]
    sup_norm: float
    telescoping_residual: float
    bad_part_residual: float
    monotonicity_violation: float
    leakage: float
    leakage_dilate: dict[int, float]
    leakage_tight: float | None = None
    replacement_gap: float
    replacement_bound: float
    k_rep: float
    gauge_recompute_mismatches: int = 0
    passed: bool = False
    warnings: list[str] = Field(default_factory=list)


def dilate_factors(N: int, level: int) -> tuple[float, float | None]:
    """Dilate 2(N-k+1) used for leakage, and the printed 2(N-k) (None when zero)."""
    tight = 2 * (N - level)
    return float(2 * (N - level + 1)), (float(tight) if tight > 0 else None)


def spectral_leakage(values: np.ndarray, theta: Cap, grid: GridSpec, dilate: float) -> float:
    """Energy fraction of a field's spectrum outside dilate * theta (tangent/normal box)."""
    spectrum = scipy.fft.fft2(values, norm="forward", workers=get_worker_count())
    energy = np.abs(spectrum) ** 2
    total = float(np.sum(energy))
    if total == 0.0:
        return 0.0
    freqs = grid.frequencies()
    cx, cy = theta.center
    tx, ty = theta.tangent
    d1 = freqs[:, None] - cx
    d2 = freqs[None, :] - cy
    along = np.abs(d1 * tx + d2 * ty)
    across = np.abs(-d1 * ty + d2 * tx)
    half_len, half_thick = theta.box_half_extents()
    inside = (along <= dilate * half_len) & (across <= dilate * half_thick)
    return float(np.sum(energy[~inside])) / total


def replacement_gap(
    f: FrequencyProfile, decomp: PrunedDecomposition, k_rep: float | None = None
) -> tuple[float, float, bool]:
    """
    sup |f - f_N| against K_rep alpha / (C_p^(1/2) log R).

    Returns:
        (gap, bound, passed)
    """
    if f is not decomp.profile and not np.array_equal(f.coeffs, decomp.profile.coeffs):
        raise InvalidParameterError("Invalid profile: does not match the decomposition")
    k_rep = get_pruning_config().k_rep if k_rep is None else float(k_rep)
    gap = float(np.max(np.abs(decomp.bad_field(decomp.N + 1)))) if decomp.sup_norm else 0.0
    bound = k_rep * decomp.alpha / (math.sqrt(decomp.cp) * decomp.ladder.logR)
    return gap, bound, gap <= bound


def pruning_invariant_report(
    decomp: PrunedDecomposition, k_rep: float | None = None, check_gauges: bool = True
) -> PruningReport:
    """
    Check the pruning lemmas on a decomposition.

    Reports the telescoping residual, the largest increase of |f_{k,theta}|
    from level k+1 to k, and the spectral energy fraction of every f_{k,theta}
    outside the dilate 2(N-k+1) theta (and the printed 2(N-k) theta).
    """
    N = decomp.N
    grid = decomp.grid
    M = grid.M
    scale = decomp.sup_norm if decomp.sup_norm > 0 else 1.0
    k_rep = get_pruning_config().k_rep if k_rep is None else float(k_rep)

    f_N = np.zeros((M, M), dtype=np.complex128)
    f_1 = np.zeros((M, M), dtype=np.complex128)
    bad_sum = np.zeros((M, M), dtype=np.complex128)
    bad_rebuilt = np.zeros((M, M), dtype=np.complex128)
    monotone = 0.0
    leakage_by_level = {k: 0.0 for k in range(1, N + 1)}
    tight_leakage: float | None = None

    for theta in decomp.thetas:
        if not decomp.active.get(theta.key, False):
            continue
        previous = np.abs(decomp.theta_field(theta))
        for level in range(N, 0, -1):
            pruned = decomp.pruned_theta(level, theta)
            current = np.abs(pruned)
            monotone = max(monotone, float(np.max(current - previous)))
            previous = current

            dilate, tight = dilate_factors(N, level)
            leakage_by_level[level] = max(
                leakage_by_level[level], spectral_leakage(pruned, theta, grid, dilate)
            )
            if tight is not None:
                tight_leakage = max(
                    tight_leakage or 0.0, spectral_leakage(pruned, theta, grid, tight)
                )
            if level == N:
                f_N += pruned
            if level == 1:
                f_1 += pruned

        for m in range(2, N + 1):
            bad_sum += decomp.bad_theta(m, theta)
            cap = decomp.tree.ancestor(theta, m - 1)
            complement = set(range(decomp.plate(cap).count)) - set(decomp.gauge_set(cap).tiles)
            bad_rebuilt += decomp.system(cap).mask(complement) * decomp.pruned_theta(m, theta)

    telescoping = float(np.max(np.abs(f_N - f_1 - bad_sum))) / scale
    bad_residual = float(np.max(np.abs(bad_sum - bad_rebuilt))) / scale
    gap, bound, gap_ok = replacement_gap(decomp.profile, decomp, k_rep)

    mismatches = 0
    if check_gauges:
        for key, recorded in decomp.gauges.items():
            if not decomp.active.get(key, False):
                continue
            if decomp.recompute_gauge(recorded.cap).tiles != recorded.tiles:
                mismatches += 1

    leakage = max(leakage_by_level.values()) if leakage_by_level else 0.0
    report_warnings = []
    if not 1.0 <= decomp.alpha <= math.sqrt(decomp.ladder.R):
        report_warnings.append(f"alpha={decomp.alpha} outside [1, R^(1/2)]")

    passed = (
        telescoping <= 1e-12
        and monotone <= 1e-12 * scale
        and leakage <= 1e-6
        and gap_ok
        and mismatches == 0
    )
    return PruningReport(
        R=decomp.ladder.R,
        alpha=decomp.alpha,
        cp=decomp.cp,
        cap_counts=dict(decomp.cap_counts),
        gauge_sizes={
            k: [len(decomp.gauges[c.key]) for c in decomp.tree.caps(k)] for k in range(1, N + 1)
        },
        tile_counts={
            k: [decomp.plate(c).count for c in decomp.tree.caps(k)] for k in range(1, N + 1)
        },
        sup_norm=decomp.sup_norm,
        telescoping_residual=telescoping,
        bad_part_residual=bad_residual,
        monotonicity_violation=monotone,
        leakage=leakage,
        leakage_dilate=leakage_by_level,
        leakage_tight=tight_leakage,
        replacement_gap=gap,
        replacement_bound=bound,
        k_rep=k_rep,
        gauge_recompute_mismatches=mismatches,
        passed=passed,
        warnings=report_warnings,
    )
