"""Square functions and high/low lemma verifiers."""

from decoupling_lab.highlow.dichotomy import (
    BroadSetReport,
    DichotomyResult,
    bilinear_ratio,
    broad_set_measures,
    classify_point,
    classify_points,
)
from decoupling_lab.highlow.lemmas import (
    ConstancyKind,
    DominationPart,
    HighVariant,
    constancy_ratio,
    high_lemma_ratio,
    low_lemma_residual,
    weak_high_domination,
)
from decoupling_lab.highlow.registry import LEMMA_NAMES, narrow_coverage, run_lemma
from decoupling_lab.highlow.report import LemmaReport
from decoupling_lab.highlow.squares import (
    SquareField,
    restricted_square_norm,
    square_field,
    square_field_leakage,
    tile_square_norms,
)

__all__ = [
    "BroadSetReport",
    "ConstancyKind",
    "DichotomyResult",
    "DominationPart",
    "HighVariant",
    "LEMMA_NAMES",
    "LemmaReport",
    "SquareField",
    "bilinear_ratio",
    "broad_set_measures",
    "classify_point",
    "classify_points",
    "constancy_ratio",
    "high_lemma_ratio",
    "low_lemma_residual",
    "narrow_coverage",
    "restricted_square_norm",
    "run_lemma",
    "square_field",
    "square_field_leakage",
    "tile_square_norms",
    "weak_high_domination",
]
