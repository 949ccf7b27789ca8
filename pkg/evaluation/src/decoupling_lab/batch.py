"""
Batch runs of lab jobs.

A job is a (kind, params) pair with kind one of "prune", "envelope", "verify"
or "decouple". Jobs run serially or on a process pool; each job derives its own
seed so results do not depend on scheduling.
"""

import multiprocessing as mp
import traceback
import zlib
from typing import Any

from pydantic import BaseModel, Field

from decoupling_lab.config import get_worker_count
from decoupling_lab.cutoffs import cutoff_selftest
from decoupling_lab.decoupling import (
    MIN_FIT_POINTS,
    ExponentTriple,
    decoupling_ratio,
    exponent_fit,
)
from decoupling_lab.envelope import alpha_grid, envelope_sides
from decoupling_lab.errors import DecouplingLabError, InvalidParameterError
from decoupling_lab.geometry import build_cap_tree, build_scale_ladder
from decoupling_lab.highlow.registry import LEMMA_NAMES, run_lemma
from decoupling_lab.pruning import PrunedDecomposition, prune_cascade, pruning_invariant_report
from decoupling_lab.synthesis import build_grid, family_names, make_family

JOB_KINDS = ("prune", "envelope", "verify", "decouple")
SUITE_PRUNE_FAMILIES = ("flat", "random_phase", "gaussian")
SUITE_TRIPLES = ((6.0, 6.0, 1.0), (4.0, 4.0, 0.5))
SINGLE_CAP_TOLERANCE = 1e-10


def derive_seed(base_seed: int, index: int, name: str) -> int:
    """Derive a deterministic seed per job index and name."""
    seed_material = f"{base_seed}:{index}:{name}".encode()
    return int(zlib.adler32(seed_material) & 0xFFFFFFFF)


def build_decomposition(
    family: str,
    R: int,
    alpha: float,
    seed: int = 0,
    cp: float | None = None,
    beta: float = 0.5,
) -> PrunedDecomposition:
    """Synthesize a family member at R and prune it at alpha."""
    ladder = build_scale_ladder(R)
    tree = build_cap_tree(ladder)
    grid = build_grid(R)
    profile = make_family(family, ladder, beta=beta, seed=seed, grid=grid)
    return prune_cascade(profile, alpha, cp, ladder, tree, grid)


def process_job(kind: str, params: dict[str, Any], seed: int, index: int = 0) -> dict[str, Any]:
    """
    Run one job and return its report as a dictionary.

    Failures are recorded under "errors" instead of raised, so one bad job
    does not stop a batch.
    """
    family = str(params.get("family", "random_phase"))
    job_seed = derive_seed(seed, index, f"{kind}:{family}")
    result: dict[str, Any] = {"kind": kind, "index": index, "params": params, "seed": job_seed}
    try:
        R = int(params["R"])
        if kind == "prune":
            decomp = build_decomposition(
                family, R, float(params.get("alpha", R**0.25)), job_seed, params.get("cp")
            )
            report = pruning_invariant_report(decomp)
        elif kind == "envelope":
            ladder = build_scale_ladder(R)
            grid = build_grid(R)
            profile = make_family(family, ladder, seed=job_seed, grid=grid)
            report = envelope_sides(
                profile, float(params["alpha"]), params.get("cp"), grid, family, job_seed
            )
        elif kind == "verify":
            decomp = build_decomposition(
                family, R, float(params.get("alpha", R**0.25)), job_seed, params.get("cp")
            )
            extra = {k: v for k, v in params.items() if k not in ("family", "R", "alpha", "cp")}
            lemma = extra.pop("lemma")
            report = run_lemma(lemma, decomp, seed=job_seed, **extra)
        elif kind == "decouple":
            triple = ExponentTriple(
                float(params["p"]), float(params["q"]), float(params.get("beta", 0.5))
            )
            ladder = build_scale_ladder(R)
            profile = make_family(
                family, ladder, beta=triple.beta, seed=job_seed, normalize=False
            )
            report = decoupling_ratio(profile, triple, ladder, family, job_seed)
        else:
            raise ValueError(f"Unknown job kind: '{kind}'. Valid options: {', '.join(JOB_KINDS)}")
        result["report"] = report.model_dump()
    except Exception as e:
        error_msg = f"Failed {kind} job {index}: {type(e).__name__}: {e}"
        result["errors"] = [error_msg]
        print(f"Warning: {error_msg}")
    return result


def run_serial(jobs: list[tuple[str, dict[str, Any]]], seed: int) -> list[dict[str, Any]]:
    """Run jobs one at a time."""
    return [process_job(kind, params, seed, i) for i, (kind, params) in enumerate(jobs)]


def run_parallel(
    jobs: list[tuple[str, dict[str, Any]]], seed: int, workers: int | None = None
) -> list[dict[str, Any]]:
    """
    Run jobs on a process pool.

    Args:
        jobs: (kind, params) pairs
        seed: Base seed
        workers: Number of worker processes (default: DCPL_THREADS or CPU count)

    Raises:
        RuntimeError: If the pool itself fails
    """
    if workers is None:
        workers = get_worker_count()

    try:
        with mp.Pool(processes=workers) as pool:
            results = pool.starmap(
                process_job,
                [(kind, params, seed, i) for i, (kind, params) in enumerate(jobs)],
            )
        failed = [r["index"] for r in results if "errors" in r]
        if failed:
            print(f"Warning: {len(failed)} jobs failed: {failed}")
        return results

    except Exception as e:
        error_msg = f"Parallel processing failed: {type(e).__name__}: {e}"
        print(f"Error: {error_msg}")
        print(traceback.format_exc())
        raise RuntimeError(error_msg) from e


class SuiteSummary(BaseModel):
    """Gates and headline numbers of one acceptance battery."""

    radii: list[int]
    seed: int
    jobs: int
    gates: dict[str, bool]
    failures: list[str] = Field(default_factory=list)
    envelope_max_log_exponent: float | None = None
    decoupling_max_log_margin: float | None = None
    slopes: list[dict[str, Any]] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)
    passed: bool


def suite_jobs(radii: list[int]) -> list[tuple[str, dict[str, Any]]]:
    """Jobs of the acceptance battery, in a fixed order."""
    jobs: list[tuple[str, dict[str, Any]]] = []
    for R in radii:
        for family in SUITE_PRUNE_FAMILIES:
            jobs.append(("prune", {"family": family, "R": R}))
        for lemma in LEMMA_NAMES:
            jobs.append(("verify", {"family": "random_phase", "R": R, "lemma": lemma}))
        for family in family_names():
            for alpha in alpha_grid(R):
                jobs.append(("envelope", {"family": family, "R": R, "alpha": alpha}))
            for p, q, beta in SUITE_TRIPLES:
                jobs.append(
                    ("decouple", {"family": family, "R": R, "p": p, "q": q, "beta": beta})
                )
    return jobs


def _job_label(result: dict[str, Any]) -> str:
    params = result["params"]
    detail = params.get("lemma") or params.get("alpha") or params.get("p", "")
    return f"{result['kind']} {params.get('family')} R={params.get('R')} {detail}".rstrip()


def _max_metric(results: list[dict[str, Any]], kind: str, metric: str) -> float | None:
    values = [
        r["report"][metric]
        for r in results
        if r["kind"] == kind and "report" in r and r["report"].get(metric) is not None
    ]
    return float(max(values)) if values else None


def run_suite(
    radii: list[int],
    seed: int = 0,
    workers: int | None = None,
    config: dict[str, Any] | None = None,
) -> tuple[SuiteSummary, list[dict[str, Any]]]:
    """
    Run the acceptance battery.

    Runs the cutoff self-test per R, then pruning, lemma, envelope and
    decoupling jobs, and with at least three R values the exponent fits.

    Args:
        radii: Values of R (powers of two, >= 256)
        seed: Base seed
        workers: Worker processes; 1 runs serially
        config: Resolved run configuration echoed into the summary

    Returns:
        (summary, per-job results)

    Raises:
        InvalidParameterError: If no R is given
    """
    radii = sorted(set(int(R) for R in radii))
    if not radii:
        raise InvalidParameterError("Invalid R list: []. Need at least one value")

    selftests = [cutoff_selftest(R, seed) for R in radii]
    jobs = suite_jobs(radii)
    if workers == 1:
        results = run_serial(jobs, seed)
    else:
        results = run_parallel(jobs, seed, workers)

    failures: list[str] = []
    for selftest in selftests:
        if not selftest.passed:
            failures.append(f"cutoff-selftest R={selftest.R}: gate failed")
    for result in results:
        if "errors" in result:
            failures.extend(result["errors"])
        elif not result["report"].get("passed", False):
            failures.append(f"{_job_label(result)}: gate failed")

    def kind_passed(kind: str) -> bool:
        return all(
            "errors" not in r and r["report"].get("passed", False)
            for r in results
            if r["kind"] == kind
        )

    single_cap = [
        r["report"]["d_emp"]
        for r in results
        if r["kind"] == "decouple" and r["params"]["family"] == "single_cap" and "report" in r
    ]
    gates = {
        "cutoffs": all(s.passed for s in selftests),
        "pruning": kind_passed("prune"),
        "lemmas": kind_passed("verify"),
        "envelope": kind_passed("envelope"),
        "decoupling": kind_passed("decouple"),
        "single_cap": bool(single_cap)
        and all(abs(d - 1.0) <= SINGLE_CAP_TOLERANCE for d in single_cap),
    }

    slopes: list[dict[str, Any]] = []
    if len(radii) >= MIN_FIT_POINTS:
        for p, q, beta in SUITE_TRIPLES:
            triple = ExponentTriple(p, q, beta)
            attained = False
            for family in family_names():
                try:
                    fit = exponent_fit(family, triple, radii, seed)
                except DecouplingLabError as e:
                    failures.append(f"fit {family} ({p:g},{q:g},{beta:g}): {e}")
                    continue
                slopes.append(fit.summary())
                attained = attained or fit.attained
            gates[f"sharpness ({p:g},{q:g},{beta:g})"] = attained
            if not attained:
                failures.append(f"sharpness ({p:g},{q:g},{beta:g}): no family attains the slope")

    summary = SuiteSummary(
        radii=radii,
        seed=seed,
        jobs=len(jobs) + len(selftests),
        gates=gates,
        failures=failures,
        envelope_max_log_exponent=_max_metric(results, "envelope", "log_exponent"),
        decoupling_max_log_margin=_max_metric(results, "decouple", "log_margin"),
        slopes=slopes,
        config=config or {},
        passed=all(gates.values()) and not failures,
    )
    return summary, results
