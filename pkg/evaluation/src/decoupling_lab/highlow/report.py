"""Lemma report model shared by the high/low verifiers."""

import math
from typing import Any

from pydantic import BaseModel, Field

from decoupling_lab.config import get_verifier_config


class LemmaReport(BaseModel):
    """
    Both sides of one lemma display for one parameter draw.

    ratio is lhs/rhs; log_exponent is log(ratio)/log(log2 R). A report passes
    when ratio <= tolerance_factor * (log2 R)^(stated_power + exponent_slack),
    or, for identities, when the relative residual is within tolerance.
    A report with lhs = rhs = 0 is a vacuous pass.
    """

    lemma: str
    params: dict[str, Any] = Field(default_factory=dict)
    lhs: float
    rhs: float
    ratio: float | None = None
    log_exponent: float | None = None
    stated_power: float | None = None
    tolerance_factor: float = 100.0
    exponent_slack: float = 0.5
    residual: float | None = None
    passed: bool
    vacuous: bool = False
    extras: dict[str, Any] = Field(default_factory=dict)


def log_exponent(ratio: float | None, log_r: float) -> float | None:
    if ratio is None or not ratio > 0 or math.isinf(ratio):
        return None
    return math.log(ratio) / math.log(log_r)


def ratio_report(
    lemma: str,
    params: dict[str, Any],
    lhs: float,
    rhs: float,
    log_r: float,
    stated_power: float,
    tolerance_factor: float | None = None,
    exponent_slack: float | None = None,
    extras: dict[str, Any] | None = None,
) -> LemmaReport:
    """Build a report for an inequality lhs <~ (log R)^stated_power rhs."""
    cfg = get_verifier_config()
    tol = cfg.tolerance_factor if tolerance_factor is None else tolerance_factor
    slack = cfg.exponent_slack if exponent_slack is None else exponent_slack
    lhs = max(float(lhs), 0.0)
    rhs = max(float(rhs), 0.0)

    if lhs == 0.0:
        ratio: float | None = 0.0
        passed, vacuous = True, rhs == 0.0
    elif rhs == 0.0:
        ratio, passed, vacuous = math.inf, False, False
    else:
        ratio = lhs / rhs
        passed = ratio <= tol * log_r ** (stated_power + slack)
        vacuous = False

    return LemmaReport(
        lemma=lemma,
        params=params,
        lhs=lhs,
        rhs=rhs,
        ratio=None if ratio is not None and math.isinf(ratio) else ratio,
        log_exponent=log_exponent(ratio, log_r),
        stated_power=stated_power,
        tolerance_factor=tol,
        exponent_slack=slack,
        passed=passed,
        vacuous=vacuous,
        extras=extras or {},
    )


def identity_report(
    lemma: str,
    params: dict[str, Any],
    lhs: float,
    rhs: float,
    residual: float,
    tolerance: float,
    extras: dict[str, Any] | None = None,
) -> LemmaReport:
    """Build a report for an identity checked by its relative residual."""
    vacuous = lhs == 0.0 and rhs == 0.0
    return LemmaReport(
        lemma=lemma,
        params=params,
        lhs=float(lhs),
        rhs=float(rhs),
        ratio=None if rhs == 0.0 else float(lhs) / float(rhs),
        residual=float(residual),
        passed=vacuous or residual <= tolerance,
        vacuous=vacuous,
        extras=extras or {},
    )
