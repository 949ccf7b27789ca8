"""
Numerical verifiers for the high/low lemmas.

Every verifier evaluates both sides of one display on the periodic cell,
with convolutions against eta^vee done as Fourier multipliers, and returns a
LemmaReport. Inequalities are judged by their log-power scaling; the low
lemma is an identity and is judged by its relative sup residual.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from enum import Enum
from typing import Any

import numpy as np
import scipy.fft

from decoupling_lab.config import get_pruning_config, get_verifier_config, get_worker_count
from decoupling_lab.cutoffs.bumps import (
    FilterBank,
    apply_multiplier,
    box_cutoff,
    build_filter_bank,
    build_gevrey_bump,
    cutoff_kernel,
)
from decoupling_lab.cutoffs.weights import (
    convolve_weight,
    scale_weight,
    weighted_tile_averages,
)
from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.geometry import Cap, are_near
from decoupling_lab.highlow.report import LemmaReport, identity_report, ratio_report
from decoupling_lab.highlow.squares import square_field
from decoupling_lab.pruning import PrunedDecomposition
from decoupling_lab.synthesis import GridSpec, SampledField

LOW_LEMMA_TOLERANCE = 1e-6
POINTWISE_THETA_FACTOR = 10.0


class HighVariant(Enum):
    A = "a"
    B = "b"
    C = "c"


class ConstancyKind(Enum):
    POINTWISE_THETA = "pointwise_theta"
    POINTWISE_TAU = "pointwise_tau"
    INTEGRATED_A = "integrated_a"
    INTEGRATED_B = "integrated_b"


class DominationPart(Enum):
    A = "a"
    B = "b"


def _parse(enum_cls: type[Enum], value: Any, what: str) -> Any:
    try:
        return enum_cls(value)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise InvalidParameterError(f"Invalid {what}: '{value}'. Valid options: {valid}") from None


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameterError(message)


def _check_m(decomp: PrunedDecomposition, m: int) -> None:
    _require(2 <= m <= decomp.N, f"Invalid m: '{m}'. Valid options: 2..{decomp.N}")


def _filtered(values: np.ndarray, grid: GridSpec, multiplier: np.ndarray) -> np.ndarray:
    return apply_multiplier(SampledField(grid, values), multiplier).values


def _integral_sq(values: np.ndarray, grid: GridSpec) -> float:
    return float(np.sum(np.abs(values) ** 2)) * grid.cell_area


def _convolve_kernel(values: np.ndarray, kernel: np.ndarray, grid: GridSpec) -> np.ndarray:
    workers = get_worker_count()
    spectrum = scipy.fft.fft2(values, workers=workers) * scipy.fft.fft2(kernel, workers=workers)
    out = scipy.fft.ifft2(spectrum, workers=workers) * grid.cell_area
    return out.real if not np.iscomplexobj(values) else out


def near_ranges(caps: tuple[Cap, ...], kappa: float | None = None) -> list[tuple[int, int]]:
    """For each cap, the first and last position of the caps near it (inclusive)."""
    kappa = get_verifier_config().near_kappa if kappa is None else kappa
    ranges = []
    for i, cap in enumerate(caps):
        lo, hi = i, i
        while lo > 0 and are_near(cap, caps[lo - 1], kappa):
            lo -= 1
        while hi < len(caps) - 1 and are_near(cap, caps[hi + 1], kappa):
            hi += 1
        ranges.append((lo, hi))
    return ranges


def sliding_near_sums(
    build: Callable[[int], np.ndarray], ranges: list[tuple[int, int]]
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """
    Yield (i, F_i, sum of F_j over j near i) while holding only a window of F.

    Near ranges are contiguous and move right with i.
    """
    window: dict[int, np.ndarray] = {}
    for i, (lo, hi) in enumerate(ranges):
        for j in [j for j in window if j < lo]:
            del window[j]
        for j in range(lo, hi + 1):
            if j not in window:
                window[j] = build(j)
        near = window[lo].copy()
        for j in range(lo + 1, hi + 1):
            near += window[j]
        yield i, window[i], near


def low_lemma_residual(
    decomp: PrunedDecomposition,
    m: int,
    k: int,
    s: int = 0,
    r: float | None = None,
    cap_index: int = 0,
    bank: FilterBank | None = None,
) -> LemmaReport:
    """
    Both sides of the low-lemma identity for one tau_s.

    LHS = |f^B_{m,tau_s}|^2 * eta_{<=r}^vee and RHS is the near-pair sum over
    tau_k inside tau_s, filtered the same way. r defaults to 1/R.

    Raises:
        InvalidParameterError: Unless 2 <= m <= k <= N, 0 <= s <= k and 0 < r <= 1/R_k
    """
    ladder, grid = decomp.ladder, decomp.grid
    _check_m(decomp, m)
    _require(m <= k <= decomp.N, f"Invalid k: '{k}'. Valid options: {m}..{decomp.N}")
    _require(0 <= s <= k, f"Invalid s: '{s}'. Valid options: 0..{k}")
    r = 1.0 / ladder.R if r is None else float(r)
    Rk = ladder.scale(k)
    _require(0 < r <= 1.0 / Rk, f"Invalid r: '{r}'. Must lie in (0, 1/R_k = {1.0 / Rk:.6g}]")

    bank = bank if bank is not None and bank.grid == grid else build_filter_bank(grid)
    low = bank.low(r)
    tau_s = decomp.tree.cap(s, cap_index)

    lhs = _filtered(np.abs(decomp.bad_cap(m, tau_s)) ** 2, grid, low)

    caps = decomp.tree.descendants(tau_s, k)
    ranges = near_ranges(caps)
    pair_sum = np.zeros((grid.M, grid.M), dtype=np.complex128)
    for _, own, near in sliding_near_sums(lambda j: decomp.bad_cap(m, caps[j]), ranges):
        pair_sum += own * np.conj(near)
    rhs = _filtered(pair_sum, grid, low)

    lhs_sup = float(np.max(np.abs(lhs)))
    rhs_sup = float(np.max(np.abs(rhs)))
    diff = float(np.max(np.abs(lhs - rhs)))
    residual = diff / lhs_sup if lhs_sup > 0 else diff
    return identity_report(
        "low",
        {"m": m, "k": k, "s": s, "r": r, "cap_index": cap_index},
        lhs_sup,
        rhs_sup,
        residual,
        LOW_LEMMA_TOLERANCE,
        extras={"imag_sup": float(np.max(np.abs(rhs.imag))), "tau_k_count": len(caps)},
    )


def high_lemma_ratio(
    decomp: PrunedDecomposition,
    variant: HighVariant | str,
    m: int,
    k: int,
    l: int = 0,  # noqa: E741
    bank: FilterBank | None = None,
) -> LemmaReport:
    """
    Both sides of a high-lemma display.

    (a) int |sum_theta |f^B_{m,theta}|^2 * eta_{>R_k/R}|^2 against
        sum_{tau_k} int |sum_{theta in tau_k} |f_{m,theta}|^2 * eta_{>R_k/R}|^2, power 1
    (b) int |sum_{tau_k} |f^B_{m,tau_k}|^2 * eta_{>1/R_k}|^2 against
        sum_{tau_k} int |f^B_{m,tau_k}|^4, power 1
    (c) the near-pair sum filtered by eta_{>1/R_{k+l}} against the (b) right
        side, power l + 3

    Raises:
        InvalidParameterError: Unless 2 <= m <= N, k >= 0, l >= 0 and k + l <= N
    """
    variant = _parse(HighVariant, variant, "high-lemma variant")
    ladder, grid, tree = decomp.ladder, decomp.grid, decomp.tree
    _check_m(decomp, m)
    _require(k >= 0 and l >= 0, f"Invalid k, l: '{k}', '{l}'. Must be nonnegative")
    _require(k + l <= decomp.N, f"Invalid k + l: '{k + l}'. Must be at most N = {decomp.N}")
    bank = bank if bank is not None and bank.grid == grid else build_filter_bank(grid)
    params: dict[str, Any] = {"variant": variant.value, "m": m, "k": k, "l": l}
    caps = tree.caps(k)

    if variant is HighVariant.A:
        high = bank.high(ladder.scale(k) / ladder.R)
        bad_sq = square_field(decomp, None, "bad", m).values
        lhs = _integral_sq(_filtered(bad_sq, grid, high), grid)
        rhs = 0.0
        for cap in caps:
            if decomp.active.get(cap.key, False):
                sq = square_field(decomp, cap, "pruned", m).values
                rhs += _integral_sq(_filtered(sq, grid, high), grid)
        return ratio_report(f"high-{variant.value}", params, lhs, rhs, ladder.logR, 1.0)

    fourth = 0.0
    if variant is HighVariant.B:
        total = np.zeros((grid.M, grid.M))
        for cap in caps:
            F = decomp.bad_cap(m, cap)
            sq = np.abs(F) ** 2
            total += sq
            fourth += float(np.sum(sq * sq)) * grid.cell_area
        lhs = _integral_sq(_filtered(total, grid, bank.high(1.0 / ladder.scale(k))), grid)
        return ratio_report(f"high-{variant.value}", params, lhs, fourth, ladder.logR, 1.0)

    pair_sum = np.zeros((grid.M, grid.M), dtype=np.complex128)
    ranges = near_ranges(caps)
    for _, own, near in sliding_near_sums(lambda j: decomp.bad_cap(m, caps[j]), ranges):
        pair_sum += own * np.conj(near)
        fourth += float(np.sum(np.abs(own) ** 4)) * grid.cell_area
    high = bank.high(1.0 / ladder.scale(k + l))
    lhs = _integral_sq(_filtered(pair_sum, grid, high), grid)
    return ratio_report(f"high-{variant.value}", params, lhs, fourth, ladder.logR, l + 3.0)


def _worst_pointwise(lhs: np.ndarray, rhs: np.ndarray, floor: float) -> tuple[float, float]:
    """(lhs, rhs) at the node maximising lhs/rhs among nodes with lhs above floor."""
    mask = lhs > floor
    if not np.any(mask):
        return 0.0, float(np.max(rhs)) if rhs.size else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mask, lhs / np.where(rhs > 0, rhs, np.nan), -np.inf)
    if np.any(np.isnan(ratio) & mask):
        idx = np.flatnonzero((np.isnan(ratio) & mask).ravel())[0]
    else:
        idx = int(np.nanargmax(ratio))
    return float(lhs.ravel()[idx]), float(rhs.ravel()[idx])


def envelope_box_kernel(decomp: PrunedDecomposition, cap: Cap, dilate: float) -> np.ndarray:
    """|rho^vee| for dilate * U*_{tau_k,R}, the R_k/R x 1/R box along the cap tangent."""
    ladder, grid = decomp.ladder, decomp.grid
    half = (dilate * ladder.scale(cap.level) / (2.0 * ladder.R), dilate / (2.0 * ladder.R))
    cutoff = box_cutoff(build_gevrey_bump(), grid, (0.0, 0.0), cap.tangent, half)
    return np.abs(cutoff_kernel(cutoff, grid))


def _caps_for(decomp: PrunedDecomposition, k: int, cap_index: int | None) -> list[Cap]:
    if cap_index is not None:
        return [decomp.tree.cap(k, cap_index)]
    return [c for c in decomp.tree.caps(k) if decomp.active.get(c.key, False)]


def _is_dyadic(r: float) -> bool:
    exponent = math.log2(r)
    return abs(exponent - round(exponent)) < 1e-9


def constancy_ratio(
    decomp: PrunedDecomposition,
    kind: ConstancyKind | str,
    m: int | None = None,
    k: int | None = None,
    r: float | None = None,
    cap_index: int | None = None,
    gate: str = "loose",
    bank: FilterBank | None = None,
) -> LemmaReport:
    """
    Local constancy checks.

    pointwise_theta: max over nodes and theta of |f_theta|^2 / (|f_theta|^2 * |rho_theta^vee|),
        passing at 10 ||rho_theta^vee||_1.
    pointwise_tau: max over nodes of |f_{m,tau_k}|^2 / (|f_{m,tau_k}|^2 * w_{R_k}), power 0.
    integrated_a: eta_{~r} filtered bad square sum against its |rho^vee| smoothing over
        (log R)^3 U*_{tau_k,R}; r dyadic with r <= 2 R_{k+3}/R ("loose" gate) or
        r <= R_{k+3}/(2R) ("strict" gate); power 1, the power 0 reading in extras.
    integrated_b: the smoothed bad square sum against the gauge-set envelope sum
        sum_{U in G_{tau_k}} |U| (W_U average of sum |f_theta|^2)^2, k >= m; power 1.

    Integrated kinds sum over every active tau_k unless cap_index is given.

    Raises:
        InvalidParameterError: If the parameters violate the lemma's hypotheses
    """
    kind = _parse(ConstancyKind, kind, "constancy kind")
    ladder, grid = decomp.ladder, decomp.grid
    log_r = ladder.logR
    floor = get_pruning_config().zero_threshold * max(decomp.sup_norm, 0.0) ** 2

    if kind is ConstancyKind.POINTWISE_THETA:
        bump = build_gevrey_bump()
        worst = (0.0, 0.0, 0.0)
        kernel_norm = 0.0
        for theta in decomp.thetas:
            if not decomp.active.get(theta.key, False):
                continue
            cutoff = box_cutoff(bump, grid, theta.center, theta.tangent, theta.box_half_extents())
            kernel = np.abs(cutoff_kernel(cutoff, grid))
            norm = float(np.sum(kernel)) * grid.cell_area
            g = np.abs(decomp.theta_field(theta)) ** 2
            lhs, rhs = _worst_pointwise(g, _convolve_kernel(g, kernel, grid), floor)
            ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
            if ratio >= worst[0]:
                worst = (ratio, lhs, rhs)
                kernel_norm = norm
        return ratio_report(
            "const-pointwise-theta",
            {"kind": kind.value},
            worst[1],
            worst[2],
            log_r,
            0.0,
            tolerance_factor=POINTWISE_THETA_FACTOR * kernel_norm,
            exponent_slack=0.0,
            extras={"kernel_l1": kernel_norm},
        )

    if kind is ConstancyKind.POINTWISE_TAU:
        _require(m is not None and 1 <= m <= decomp.N + 1, f"Invalid m: '{m}'. Valid: 1..N+1")
        _require(k is not None and 0 <= k <= decomp.N, f"Invalid k: '{k}'. Valid: 0..N")
        weight = scale_weight(ladder.scale(k), grid)
        best = (0.0, 0.0, 0.0)
        for cap in _caps_for(decomp, k, cap_index):
            g = np.abs(decomp.pruned_cap(m, cap)) ** 2
            smooth = convolve_weight(SampledField(grid, g), weight).values
            lhs, rhs = _worst_pointwise(g, smooth, floor)
            ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
            if ratio >= best[0]:
                best = (ratio, lhs, rhs)
        return ratio_report(
            "const-pointwise-tau", {"kind": kind.value, "m": m, "k": k}, best[1], best[2],
            log_r, 0.0,
        )

    _require(m is not None, "Invalid m: integrated constancy needs m")
    assert m is not None
    _check_m(decomp, m)
    _require(k is not None and 1 <= k <= decomp.N, f"Invalid k: '{k}'. Valid options: 1..N")
    assert k is not None
    smoothed_total = 0.0
    params: dict[str, Any] = {"kind": kind.value, "m": m, "k": k, "cap_index": cap_index}

    if kind is ConstancyKind.INTEGRATED_A:
        _require(r is not None and r > 0 and _is_dyadic(r), f"Invalid r: '{r}'. Must be dyadic")
        _require(
            gate in ("loose", "strict"), f"Invalid gate: '{gate}'. Valid options: loose, strict"
        )
        assert r is not None
        loose_gate = 2.0 * ladder.scale(k + 3) / ladder.R
        strict_gate = 0.5 * ladder.scale(k + 3) / ladder.R
        limit = loose_gate if gate == "loose" else strict_gate
        _require(r <= limit, f"Invalid r: '{r}'. The {gate} gate needs r <= {limit:.6g}")
        bank = bank if bank is not None and bank.grid == grid else build_filter_bank(grid)
        annulus = bank.annulus(r)
        lhs = 0.0
        for cap in _caps_for(decomp, k, cap_index):
            sq = square_field(decomp, cap, "bad", m).values
            lhs += _integral_sq(_filtered(sq, grid, annulus), grid)
            kernel = envelope_box_kernel(decomp, cap, log_r**3)
            smoothed_total += _integral_sq(_convolve_kernel(sq, kernel, grid), grid)
        params.update({"r": r, "gate": gate})
        report = ratio_report("const-integrated-a", params, lhs, smoothed_total, log_r, 1.0)
        no_log = ratio_report("const-integrated-a", params, lhs, smoothed_total, log_r, 0.0)
        report.extras.update(
            {
                "loose_gate": r <= loose_gate,
                "strict_gate": r <= strict_gate,
                "passed_without_log": no_log.passed,
            }
        )
        return report

    _require(k >= m, f"Invalid k: '{k}'. integrated_b needs k >= m = {m}")
    envelope = 0.0
    for cap in _caps_for(decomp, k, cap_index):
        sq = square_field(decomp, cap, "bad", m).values
        kernel = envelope_box_kernel(decomp, cap, log_r**3)
        smoothed_total += _integral_sq(_convolve_kernel(sq, kernel, grid), grid)
        tiles = decomp.gauge_set(cap).tiles
        if tiles:
            full = square_field(decomp, cap, "f").as_field()
            averages = weighted_tile_averages(full, decomp.weight(cap))
            area = decomp.plate(cap).area
            envelope += sum(area * averages[i] ** 2 for i in tiles)
    return ratio_report("const-integrated-b", params, smoothed_total, envelope, log_r, 1.0)


def weak_high_domination(
    decomp: PrunedDecomposition,
    m: int,
    k: int,
    part: DominationPart | str,
    cap_index: int | None = None,
    bank: FilterBank | None = None,
) -> LemmaReport:
    """
    Weak high-domination of bad parts.

    (a) sup |sum_{tau_{m-1} in tau_k} |f^B_{m,tau_{m-1}}|^2 * eta_{<=R_{m-1}/R}| against
        alpha^2 #(tau_{m-1} in tau_k) / (C_p (log R)^2 (#tau_{m-1})^2), passing at kappa.
    (b) on nodes with alpha <= kappa log R |f^B_{m,tau_k}|, the bad square sum against
        |its eta_{>R_{m-1}/R} part|, passing at kappa'; vacuous with no such nodes.

    Raises:
        InvalidParameterError: Unless 2 <= m <= N and 0 <= k < m
    """
    part = _parse(DominationPart, part, "domination part")
    cfg = get_verifier_config()
    ladder, grid, tree = decomp.ladder, decomp.grid, decomp.tree
    log_r = ladder.logR
    _check_m(decomp, m)
    _require(0 <= k < m, f"Invalid k: '{k}'. Valid options: 0..{m - 1}")
    bank = bank if bank is not None and bank.grid == grid else build_filter_bank(grid)
    radius = ladder.scale(m - 1) / ladder.R
    total_count = decomp.cap_counts.get(m - 1, 0)
    params: dict[str, Any] = {"part": part.value, "m": m, "k": k, "alpha": decomp.alpha}

    caps = _caps_for(decomp, k, cap_index)
    worst_ratio, worst_lhs, worst_rhs = 0.0, 0.0, 0.0
    qualifying = 0
    for cap in caps:
        sq = np.zeros((grid.M, grid.M))
        children = [c for c in tree.descendants(cap, m - 1) if decomp.active.get(c.key, False)]
        for child in children:
            sq += np.abs(decomp.bad_cap(m, child)) ** 2

        if part is DominationPart.A:
            lhs = float(np.max(np.abs(_filtered(sq, grid, bank.low(radius)))))
            rhs = (
                decomp.alpha**2 * len(children) / (decomp.cp * log_r**2 * total_count**2)
                if total_count
                else 0.0
            )
            ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
        else:
            F = decomp.bad_cap(m, cap)
            nodes = decomp.alpha <= cfg.domination_kappa * log_r * np.abs(F)
            count = int(np.count_nonzero(nodes))
            if count == 0:
                continue
            qualifying += count
            high = np.abs(_filtered(sq, grid, bank.high(radius)))
            lhs, rhs = _worst_pointwise(np.where(nodes, sq, 0.0), high, 0.0)
            ratio = lhs / rhs if rhs > 0 else (math.inf if lhs > 0 else 0.0)
        if ratio >= worst_ratio:
            worst_ratio, worst_lhs, worst_rhs = ratio, lhs, rhs

    if part is DominationPart.B and qualifying == 0:
        return LemmaReport(
            lemma="whd-b",
            params=params,
            lhs=0.0,
            rhs=0.0,
            stated_power=0.0,
            tolerance_factor=cfg.domination_kappa_prime,
            exponent_slack=0.0,
            passed=True,
            vacuous=True,
            extras={"qualifying_nodes": 0},
        )

    kappa = cfg.domination_kappa if part is DominationPart.A else cfg.domination_kappa_prime
    report = ratio_report(
        f"whd-{part.value}",
        params,
        worst_lhs,
        worst_rhs,
        log_r,
        0.0,
        tolerance_factor=kappa,
        exponent_slack=0.0,
    )
    if part is DominationPart.B:
        report.extras["qualifying_nodes"] = qualifying
    return report
