"""Dispatch of lemma verifiers by name."""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from decoupling_lab.errors import InvalidParameterError
from decoupling_lab.highlow.dichotomy import bilinear_ratio, classify_points
from decoupling_lab.highlow.lemmas import (
    constancy_ratio,
    high_lemma_ratio,
    low_lemma_residual,
    weak_high_domination,
)
from decoupling_lab.highlow.report import LemmaReport
from decoupling_lab.pruning import PrunedDecomposition

LEMMA_NAMES = (
    "low",
    "high-a",
    "high-b",
    "high-c",
    "const-pointwise-theta",
    "const-pointwise-tau",
    "const-integrated-a",
    "const-integrated-b",
    "whd-a",
    "whd-b",
    "narrow",
    "bilinear",
)
DEFAULT_NARROW_NODES = 10_000


def narrow_coverage(
    decomp: PrunedDecomposition, m: int, nodes: int = DEFAULT_NARROW_NODES, seed: int = 0
) -> LemmaReport:
    """
    Classify random nodes and count those with neither verdict at a guaranteed level.

    Levels outside the guarantee are reported in extras but not gated.
    """
    total = decomp.grid.M**2
    rng = np.random.default_rng(seed)
    sample = rng.choice(total, size=min(nodes, total), replace=False)
    result = classify_points(decomp, m, sample)
    gated = np.array(result.guaranteed, dtype=bool)
    uncovered = int(result.uncovered[gated].any(axis=0).sum())
    first = result.first_broad_level
    return LemmaReport(
        lemma="narrow",
        params={"m": m, "nodes": int(sample.size), "seed": seed},
        lhs=float(uncovered),
        rhs=float(sample.size),
        ratio=uncovered / sample.size if sample.size else None,
        passed=uncovered == 0,
        extras={
            "broad_fraction": {
                k: float(result.broad[k].mean()) if sample.size else 0.0
                for k in range(result.broad.shape[0])
            },
            "narrow_everywhere": int((first == -1).sum()),
            "uncovered_ungated": int(result.uncovered[~gated].any(axis=0).sum()),
            "guaranteed_levels": list(result.guaranteed),
        },
    )


def _bilinear(decomp: PrunedDecomposition, **kwargs: Any) -> LemmaReport:
    level = int(kwargs.get("level") or 1)
    caps = decomp.tree.caps(level)
    tau = caps[int(kwargs.get("tau") or 0)]
    tau_index = kwargs.get("tau_prime")
    tau_prime = caps[len(caps) - 1 if tau_index is None else int(tau_index)]
    S = float(kwargs.get("S") or decomp.ladder.R)
    separation = float(max(0, max(tau.a, tau_prime.a) - min(tau.b, tau_prime.b)))
    E = kwargs.get("E")
    E = float(E) if E is not None else min(0.5, separation)
    alpha = kwargs.get("alpha")
    alpha = decomp.alpha if alpha is None else float(alpha)
    return bilinear_ratio(decomp.profile, tau, tau_prime, E, alpha, S, decomp.grid)


def run_lemma(name: str, decomp: PrunedDecomposition, seed: int = 0, **kwargs: Any) -> LemmaReport:
    """
    Run one verifier on a decomposition.

    Args:
        name: One of LEMMA_NAMES
        decomp: Pruned decomposition
        seed: Seed for node sampling (narrow)
        **kwargs: m, k, l, s, r, cap_index, gate, part parameters; missing
                  values fall back to m = N, k = N (low, integrated) or 0

    Raises:
        InvalidParameterError: If the name is unknown or parameters are invalid
    """
    N = decomp.N
    m = int(kwargs.get("m") or N)
    k = kwargs.get("k")
    cap_index = kwargs.get("cap_index")

    if name == "low":
        r = kwargs.get("r")
        return low_lemma_residual(
            decomp,
            m,
            N if k is None else int(k),
            int(kwargs.get("s") or 0),
            None if r is None else float(r),
            int(cap_index or 0),
        )
    elif name in ("high-a", "high-b", "high-c"):
        return high_lemma_ratio(
            decomp, name[-1], m, 0 if k is None else int(k), int(kwargs.get("l") or 0)
        )
    elif name.startswith("const-"):
        kind = name[len("const-") :].replace("-", "_")
        k_value = None if k is None else int(k)
        r = kwargs.get("r")
        if kind.startswith("integrated") and k_value is None:
            k_value = N
        if kind == "integrated_a" and r is None:
            scale = decomp.ladder.scale(k_value or N) / decomp.ladder.R
            r = 2.0 ** math.floor(math.log2(scale))
        if kind == "pointwise_tau" and k_value is None:
            k_value = 0
        return constancy_ratio(
            decomp,
            kind,
            m=m,
            k=k_value,
            r=None if r is None else float(r),
            cap_index=None if cap_index is None else int(cap_index),
            gate=str(kwargs.get("gate") or "loose"),
        )
    elif name in ("whd-a", "whd-b"):
        return weak_high_domination(
            decomp,
            m,
            0 if k is None else int(k),
            name[-1],
            None if cap_index is None else int(cap_index),
        )
    elif name == "narrow":
        return narrow_coverage(decomp, m, int(kwargs.get("nodes") or DEFAULT_NARROW_NODES), seed)
    elif name == "bilinear":
        return _bilinear(decomp, **kwargs)
    else:
        valid = ", ".join(LEMMA_NAMES)
        raise InvalidParameterError(f"Invalid lemma: '{name}'. Valid options: {valid}")
