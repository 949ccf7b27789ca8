"""
Direct tests of small cap decoupling.

    ||f||_p^p <= D_{p,q}(R; beta) (sum_gamma ||f_gamma||_p^q)^{p/q}

with gamma running over caps of width R^-beta. The empirical constant is
compared with (log R)^{30+3p} (1 + R^{beta(p - p/q - 1) - 1} + R^{p beta(1/2 - 1/q)}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

from decoupling_lab.config import get_decoupling_config
from decoupling_lab.errors import InvalidParameterError, UndefinedRatioError
from decoupling_lab.geometry import ScaleLadder, build_scale_ladder, small_cap_partition
from decoupling_lab.synthesis import (
    FrequencyProfile,
    cap_lp_powers,
    make_family,
    profile_lp_power,
)

MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class ExponentTriple:
    """Exponents (p, q, beta).

    Attributes:
        p: Lebesgue exponent, finite and >= 1
        q: Outer exponent, finite and >= 1
        beta: Small cap exponent in [1/2, 1]
    """

    p: float
    q: float
    beta: float

    def __post_init__(self) -> None:
        for name in ("p", "q"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 1):
                raise InvalidParameterError(
                    f"Invalid {name}: '{value}'. Must be finite and >= 1"
                )
        if not 0.5 <= self.beta <= 1.0:
            raise InvalidParameterError(f"Invalid beta: '{self.beta}'. Valid range: [0.5, 1]")

    @property
    def e1(self) -> float:
        """Log exponent 30 + 3p."""
        return 30.0 + 3.0 * self.p

    def exponents(self) -> tuple[float, float]:
        """Power-law exponents beta(p - p/q - 1) - 1 and p beta (1/2 - 1/q)."""
        p, q, beta = self.p, self.q, self.beta
        return beta * (p - p / q - 1.0) - 1.0, p * beta * (0.5 - 1.0 / q)

    def predicted_exponent(self) -> float:
        """Exponent of the dominant term of the bound."""
        return max(0.0, *self.exponents())

    def to_dict(self) -> dict[str, float]:
        return {"p": self.p, "q": self.q, "beta": self.beta}


def admissible_exponents(triple: ExponentTriple) -> bool:
    """3/p + 1/q <= 1, decided in exact arithmetic."""
    return Fraction(3) / Fraction(triple.p) + Fraction(1) / Fraction(triple.q) <= 1


def _require_admissible(triple: ExponentTriple) -> None:
    if not admissible_exponents(triple):
        raise InvalidParameterError(
            f"Invalid exponents: 3/p + 1/q > 1 for p={triple.p}, q={triple.q}"
        )


def theoretical_bound(triple: ExponentTriple, R: int) -> tuple[float, float]:
    """
    (full bound, bound_core) where bound_core = 1 + R^a + R^b and the full
    bound multiplies it by (log2 R)^{30+3p}.
    """
    _require_admissible(triple)
    a, b = triple.exponents()
    core = 1.0 + R**a + R**b
    return math.log2(R) ** triple.e1 * core, core


class DecouplingReport(BaseModel):
    """Empirical decoupling constant for one profile."""

    family: str = "custom"
    R: int
    p: float
    q: float
    beta: float
    seed: int | None = None
    d_emp: float
    numerator: float
    denominator: float
    active_caps: int
    cap_count: int
    bound_core: float
    bound: float
    log_margin: float | None = None
    e1: float
    passed: bool


def decoupling_ratio(
    f: FrequencyProfile,
    triple: ExponentTriple,
    ladder: ScaleLadder | None = None,
    family: str = "custom",
    seed: int | None = None,
) -> DecouplingReport:
    """
    d_emp = ||f||_p^p / (sum_gamma ||f_gamma||_p^q)^{p/q} over the periodic cell.

    Caps with f_gamma = 0 are dropped from the sum. Norms come from the
    profile's coefficients, exactly for even p (see profile_lp_power).

    Raises:
        InvalidParameterError: If the triple is not admissible
        UndefinedRatioError: If f vanishes
    """
    _require_admissible(triple)
    ladder = build_scale_ladder(f.R) if ladder is None else ladder
    if f.is_zero():
        raise UndefinedRatioError("Undefined decoupling ratio: f is identically zero")

    p, q = triple.p, triple.q
    numerator = profile_lp_power(f, p)
    partition = small_cap_partition(ladder, triple.beta)
    powers = cap_lp_powers(f, partition, p)
    active = powers[powers > 0]
    denominator = float(np.sum(active ** (q / p))) ** (p / q)
    if not denominator > 0:
        raise UndefinedRatioError("Undefined decoupling ratio: every small cap norm vanishes")

    d_emp = numerator / denominator
    bound, core = theoretical_bound(triple, f.R)
    log_margin = math.log(d_emp / core) / math.log(ladder.logR) if d_emp > 0 else None
    return DecouplingReport(
        family=family,
        R=f.R,
        p=p,
        q=q,
        beta=triple.beta,
        seed=seed,
        d_emp=d_emp,
        numerator=numerator,
        denominator=denominator,
        active_caps=int(active.size),
        cap_count=len(partition),
        bound_core=core,
        bound=bound,
        log_margin=log_margin,
        e1=triple.e1,
        passed=log_margin is not None and log_margin <= triple.e1,
    )


class ExponentFit(BaseModel):
    """Least-squares slope of log2 d_emp against log2 R."""

    family: str
    p: float
    q: float
    beta: float
    radii: list[int]
    d_emp: list[float]
    slope: float
    intercept: float
    residual: float
    predicted: float
    attained: bool
    reports: list[DecouplingReport] = Field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        return self.model_dump(exclude={"reports"})


def exponent_fit(
    family: str,
    triple: ExponentTriple,
    radii: list[int],
    seed: int = 0,
) -> ExponentFit:
    """
    Fit log2 d_emp = slope log2 R + intercept over several R.

    `attained` is true when the slope is within slope_tolerance of the
    predicted dominant exponent.

    Raises:
        InvalidParameterError: With fewer than three R values
    """
    from decoupling_lab.batch import derive_seed

    radii = sorted(set(int(R) for R in radii))
    if len(radii) < MIN_FIT_POINTS:
        raise InvalidParameterError(
            f"Invalid R list: {radii}. Need at least {MIN_FIT_POINTS} distinct values"
        )
    _require_admissible(triple)

    reports = []
    for R in radii:
        ladder = build_scale_ladder(R)
        run_seed = derive_seed(seed, R, family)
        # d_emp is scale invariant, so the family is left unnormalised
        profile = make_family(family, ladder, beta=triple.beta, seed=run_seed, normalize=False)
        reports.append(decoupling_ratio(profile, triple, ladder, family, run_seed))

    x = np.log2(np.asarray(radii, dtype=float))
    y = np.log2(np.asarray([r.d_emp for r in reports]))
    fit = stats.linregress(x, y)
    residual = float(np.sqrt(np.mean((y - (fit.slope * x + fit.intercept)) ** 2)))
    predicted = triple.predicted_exponent()
    tolerance = get_decoupling_config().slope_tolerance
    return ExponentFit(
        family=family,
        p=triple.p,
        q=triple.q,
        beta=triple.beta,
        radii=radii,
        d_emp=[r.d_emp for r in reports],
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        residual=residual,
        predicted=predicted,
        attained=abs(float(fit.slope) - predicted) <= tolerance,
        reports=reports,
    )
