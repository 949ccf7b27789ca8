"""
Broad/narrow classification and the bilinear restriction check.

At a node x the chain starts from the whole cell and, at every level k,
compares |f^B_{m,tau_k}(x)| with the broad bound
(log R)^3 max_{not near} |f^B_{m,tau_{k+1}} f^B_{m,tau_{k+1}'}|^{1/2} and the
narrow bound (1 + 1/log R) max |sum_{near} f^B_{m,tau_{k+1}'}|, then moves
to the child with the largest |f^B_{m,tau_{k+1}}(x)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
import scipy.fft
from pydantic import BaseModel, Field

from decoupling_lab.config import get_verifier_config, get_worker_count
from decoupling_lab.cutoffs.weights import convolve_weight, scale_weight
from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.geometry import SmallCap, are_near
from decoupling_lab.highlow.report import LemmaReport, ratio_report
from decoupling_lab.pruning import PrunedDecomposition
from decoupling_lab.synthesis import (
    FrequencyProfile,
    GridSpec,
    HasInterval,
    SampledField,
    build_grid,
    cap_component,
    synthesize,
)

CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True, eq=False)
class DichotomyResult:
    """Per-level verdicts for a batch of nodes.

    Attributes:
        m: Bad-part index
        nodes: Flat grid indices
        chain: Cap index per level (shape (N + 1, n)); row k is tau_k(x)
        values: |f^B_{m,tau_k}(x)| along the chain (shape (N, n))
        broad: Broad verdict per level (shape (N, n)), levels 0..N-1
        narrow: Narrow verdict per level (shape (N, n))
        guaranteed: Levels where #children (1 + log R) <= (log R)^3
    """

    m: int
    nodes: np.ndarray = field(repr=False)
    chain: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    broad: np.ndarray = field(repr=False)
    narrow: np.ndarray = field(repr=False)
    guaranteed: tuple[bool, ...] = ()

    @property
    def uncovered(self) -> np.ndarray:
        """Boolean (N, n): neither verdict holds."""
        return ~(self.broad | self.narrow)

    @property
    def first_broad_level(self) -> np.ndarray:
        """First broad level per node, -1 when the node is narrow at every level."""
        any_broad = self.broad.any(axis=0)
        return np.where(any_broad, np.argmax(self.broad, axis=0), -1)

    def point(self, i: int) -> list[dict[str, Any]]:
        return [
            {
                "level": k,
                "cap_index": int(self.chain[k, i]),
                "value": float(self.values[k, i]),
                "broad": bool(self.broad[k, i]),
                "narrow": bool(self.narrow[k, i]),
            }
            for k in range(self.broad.shape[0])
        ]


def _near_matrix(decomp: PrunedDecomposition, level: int, kappa: float) -> np.ndarray:
    caps = decomp.tree.caps(level)
    n = len(caps)
    near = np.eye(n, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            near[i, j] = near[j, i] = are_near(caps[i], caps[j], kappa)
            if not near[i, j] and caps[j].a > caps[i].b:
                break
    return near


def _sample_bad_parts(decomp: PrunedDecomposition, m: int, nodes: np.ndarray) -> np.ndarray:
    """f^B_{m,theta} at the nodes, shape (#theta, n)."""
    out = np.zeros((len(decomp.thetas), nodes.size), dtype=np.complex128)
    for theta in decomp.thetas:
        if decomp.active.get(theta.key, False):
            out[theta.index] = decomp.bad_theta(m, theta).ravel()[nodes]
    return out


def _classify_chunk(
    decomp: PrunedDecomposition,
    m: int,
    nodes: np.ndarray,
    near: list[np.ndarray],
    parents: list[np.ndarray],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    N = decomp.N
    log_r = decomp.ladder.logR
    ancestry = decomp.tree.theta_ancestry
    theta_values = _sample_bad_parts(decomp, m, nodes)
    n = nodes.size
    cols = np.arange(n)

    cap_values = []
    for level in range(N + 1):
        values = np.zeros((len(decomp.tree.caps(level)), n), dtype=np.complex128)
        np.add.at(values, ancestry[:, level], theta_values)
        cap_values.append(values)

    chain = np.zeros((N + 1, n), dtype=np.int64)
    sizes = np.zeros((N, n))
    broad = np.zeros((N, n), dtype=bool)
    narrow = np.zeros((N, n), dtype=bool)
    for k in range(N):
        current = chain[k]
        F = np.abs(cap_values[k][current, cols])
        is_child = parents[k + 1][:, None] == current[None, :]
        child = np.where(is_child, cap_values[k + 1], 0.0)
        magnitude = np.abs(child)

        far_max = np.zeros_like(magnitude)
        for i in range(magnitude.shape[0]):
            far = ~near[k + 1][i]
            if far.any():
                far_max[i] = magnitude[far].max(axis=0)
        bilinear = np.sqrt(np.max(magnitude * far_max, axis=0))
        near_sums = np.abs(near[k + 1].astype(float) @ child)
        narrow_bound = np.max(np.where(is_child, near_sums, 0.0), axis=0)

        sizes[k] = F
        broad[k] = F <= log_r**3 * bilinear
        narrow[k] = F <= (1.0 + 1.0 / log_r) * narrow_bound * (1.0 + 1e-12)
        chain[k + 1] = np.argmax(magnitude, axis=0)
    return chain, sizes, broad, narrow


def classify_points(
    decomp: PrunedDecomposition,
    m: int,
    nodes: np.ndarray,
    kappa: float | None = None,
) -> DichotomyResult:
    """
    Broad/narrow chain for a batch of nodes given as flat grid indices.

    Raises:
        InvalidParameterError: Unless 2 <= m <= N
    """
    if not 2 <= m <= decomp.N:
        raise InvalidParameterError(f"Invalid m: '{m}'. Valid options: 2..{decomp.N}")
    kappa = get_verifier_config().dichotomy_kappa if kappa is None else kappa
    nodes = np.asarray(nodes, dtype=np.int64).ravel() % (decomp.grid.M**2)
    N = decomp.N
    tree = decomp.tree
    near = [_near_matrix(decomp, level, kappa) for level in range(N + 1)]
    parents = [np.zeros(1, dtype=np.int64)] + [
        np.array([tree.parent(c).index for c in tree.caps(level)], dtype=np.int64)
        for level in range(1, N + 1)
    ]
    log_r = decomp.ladder.logR
    guaranteed = tuple(
        max(len(tree.child_caps(c)) for c in tree.caps(k)) * (1.0 + log_r) <= log_r**3
        for k in range(N)
    )

    chunk = max(1, CHUNK_BYTES // (16 * max(1, len(decomp.thetas))))
    parts = [
        _classify_chunk(decomp, m, nodes[start : start + chunk], near, parents)
        for start in range(0, nodes.size, chunk)
    ] or [_classify_chunk(decomp, m, nodes, near, parents)]
    chain, sizes, broad, narrow = (np.concatenate(arrays, axis=1) for arrays in zip(*parts))
    return DichotomyResult(
        m=m,
        nodes=nodes,
        chain=chain,
        values=sizes,
        broad=broad,
        narrow=narrow,
        guaranteed=guaranteed,
    )


def classify_point(
    decomp: PrunedDecomposition,
    m: int,
    node: tuple[int, int],
    kappa: float | None = None,
) -> list[dict[str, Any]]:
    """Per-level broad/narrow verdicts at one grid node (row, column)."""
    M = decomp.grid.M
    flat = (node[0] % M) * M + node[1] % M
    return classify_points(decomp, m, np.array([flat]), kappa).point(0)


class BroadSetReport(BaseModel):
    """Measures of the broad sets inside U_alpha^m."""

    m: int
    alpha: float
    u_measure: float
    broad_measures: dict[int, float] = Field(default_factory=dict)
    first_broad_measures: dict[int, float] = Field(default_factory=dict)
    narrow_measure: float = 0.0
    uncovered_nodes: int = 0
    guaranteed_levels: list[bool] = Field(default_factory=list)
    passed: bool = True


def broad_set_measures(
    decomp: PrunedDecomposition, m: int, alpha: float | None = None
) -> BroadSetReport:
    """
    Classify every node of U_alpha^m = {x in V_alpha : |f^B_m| >= |f_N|/N}.

    broad_measures[k] is the measure of nodes broad at level k of their chain
    (k = 0 is Broad_{1,m}); narrow_measure covers nodes narrow at every level.
    """
    alpha = decomp.alpha if alpha is None else float(alpha)
    N = decomp.N
    if not 2 <= m <= N:
        raise InvalidParameterError(f"Invalid m: '{m}'. Valid options: 2..{N}")
    f_N = np.abs(decomp.level_field(N))
    bad = np.abs(decomp.bad_field(m))
    region = (f_N > alpha / 2.0) & (bad >= f_N / N)
    nodes = np.flatnonzero(region)
    area = decomp.grid.cell_area

    if nodes.size == 0:
        return BroadSetReport(m=m, alpha=alpha, u_measure=0.0)
    result = classify_points(decomp, m, nodes)
    first = result.first_broad_level
    return BroadSetReport(
        m=m,
        alpha=alpha,
        u_measure=nodes.size * area,
        broad_measures={k: float(result.broad[k].sum()) * area for k in range(N)},
        first_broad_measures={k: float((first == k).sum()) * area for k in range(N)},
        narrow_measure=float((first == -1).sum()) * area,
        uncovered_nodes=int(result.uncovered.any(axis=0).sum()),
        guaranteed_levels=list(result.guaranteed),
        passed=not bool(result.uncovered.any()),
    )


def _separation(tau: HasInterval, tau_prime: HasInterval) -> float:
    a0, b0 = tau.x_interval
    a1, b1 = tau_prime.x_interval
    return float(max(Fraction(0), max(a0, a1) - min(b0, b1)))


def omega_caps(R: int, S: float) -> tuple[SmallCap, ...]:
    """Partition of [-1, 1] into caps of about S^{-1/2} (whole frequency columns)."""
    columns = max(1, round(R / math.sqrt(S)))
    return tuple(
        SmallCap(index=i, a=Fraction(start, R), b=Fraction(min(start + columns, R), R))
        for i, start in enumerate(range(-R, R, columns))
    )


def _disk_neighbourhood(region: np.ndarray, radius: float, grid: GridSpec) -> np.ndarray:
    coords = grid.coordinates()
    wrapped = coords - grid.R * np.floor(coords / grid.R + 0.5)
    disk = (wrapped[:, None] ** 2 + wrapped[None, :] ** 2 <= radius * radius).astype(float)
    workers = get_worker_count()
    hits = scipy.fft.ifft2(
        scipy.fft.fft2(region.astype(float), workers=workers)
        * scipy.fft.fft2(disk, workers=workers),
        workers=workers,
    ).real
    return hits > 0.5


def bilinear_ratio(
    f: FrequencyProfile,
    tau: HasInterval,
    tau_prime: HasInterval,
    E: float,
    alpha: float,
    S: float,
    grid: GridSpec | None = None,
) -> LemmaReport:
    """
    Both sides of the bilinear restriction estimate on X = {|f_tau f_tau'|^{1/2} > alpha}.

    LHS = int_X |f_tau|^2 |f_tau'|^2 and RHS = E^-2 int over the S^{1/2}
    neighbourhood of X of |sum_omega |f_omega|^2 * w_{S^{1/2}}|^2, with omega
    running over S^{-1/2} caps of f_tau + f_tau'. Passes at tolerance_factor.

    Raises:
        InvalidParameterError: Unless 4 <= S <= R, S^{-1/2} <= E <= 1/2 and the
            caps are E-separated
    """
    R = f.R
    if not 4 <= S <= R:
        raise InvalidParameterError(f"Invalid S: '{S}'. Valid range: [4, {R}]")
    if not S**-0.5 <= E <= 0.5:
        raise InvalidParameterError(f"Invalid E: '{E}'. Valid range: [{S**-0.5:.6g}, 0.5]")
    separation = _separation(tau, tau_prime)
    if separation < E:
        raise InvalidParameterError(
            f"Invalid caps: separation {separation:.6g} is below E = {E:.6g}"
        )
    if not alpha >= 0:
        raise InvalidParameterError(f"Invalid alpha: '{alpha}'. Must be nonnegative")

    grid = build_grid(R) if grid is None else grid
    part = cap_component(f, tau)
    part_prime = cap_component(f, tau_prime)
    f_tau = synthesize(part, grid).values
    f_tau_prime = synthesize(part_prime, grid).values
    product = np.abs(f_tau) ** 2 * np.abs(f_tau_prime) ** 2
    region = np.sqrt(product) > alpha
    params = {"E": E, "alpha": alpha, "S": S, "separation": separation}

    lhs = float(np.sum(product[region])) * grid.cell_area
    if lhs == 0.0:
        return ratio_report("bilinear", params, 0.0, 0.0, math.log2(R), 0.0, exponent_slack=0.0)

    combined = part + part_prime
    squares = np.zeros((grid.M, grid.M))
    for omega in omega_caps(R, S):
        component = cap_component(combined, omega)
        if not component.is_zero():
            squares += np.abs(synthesize(component, grid).values) ** 2
    smoothed = convolve_weight(SampledField(grid, squares), scale_weight(math.sqrt(S), grid))
    neighbourhood = _disk_neighbourhood(region, math.sqrt(S), grid)
    rhs = float(np.sum(smoothed.values[neighbourhood] ** 2)) * grid.cell_area / E**2
    return ratio_report(
        "bilinear",
        params,
        lhs,
        rhs,
        math.log2(R),
        0.0,
        exponent_slack=0.0,
        extras={"region_measure": float(region.sum()) * grid.cell_area},
    )
