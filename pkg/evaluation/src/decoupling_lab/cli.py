"""CLI entry point for the decoupling lab."""

import json
import sys
import warnings
from collections.abc import Callable
from enum import Enum
from pathlib import Path
from typing import Any, NoReturn, TypeVar

import click
import typer
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from decoupling_lab.audit import create_run_record, write_run_record, write_table
from decoupling_lab.batch import build_decomposition, derive_seed, run_suite
from decoupling_lab.config import (
    configure_grid,
    configure_pruning,
    configure_verifiers,
    reset_config,
)
from decoupling_lab.cutoffs import cutoff_selftest
from decoupling_lab.decoupling import (
    MIN_FIT_POINTS,
    ExponentTriple,
    admissible_exponents,
    decoupling_ratio,
    exponent_fit,
)
from decoupling_lab.envelope import envelope_scan, scan_maxima
from decoupling_lab.errors import DecouplingLabError, InvalidInputError, InvalidParameterError
from decoupling_lab.fieldio import write_field, write_profile
from decoupling_lab.geometry import (
    build_cap_tree,
    build_scale_ladder,
    plate_tiling,
    small_cap_partition,
)
from decoupling_lab.highlow import LEMMA_NAMES, run_lemma
from decoupling_lab.pruning import pruning_invariant_report
from decoupling_lab.synthesis import (
    build_grid,
    describe_profile,
    family_names,
    make_family,
    synthesize,
)
from decoupling_lab.utils.json_safety import convert_numpy_types

app = typer.Typer(help="Decoupling Lab - numerical checks of small cap decoupling on the parabola")

T = TypeVar("T")

GATE_FAILURE = 2
DEFAULT_SUITE_SUMMARY = Path("suite_summary.json")
ENVELOPE_COLUMNS = ["family", "R", "alpha", "lhs", "rhs_core", "ratio", "log_exponent"]
DECOUPLE_COLUMNS = ["family", "p", "q", "beta", "R", "d_emp", "bound_core", "log_margin", "slope"]


class OutputFormat(str, Enum):
    """Output formats for reports and fields."""

    JSON = "json"
    CSV = "csv"
    BINARY_FIELD = "binary-field"


class RunConfig(BaseModel):
    """
    Resolved configuration of one command.

    Built from an optional JSON config file with explicit flags on top, and
    echoed into every run record.
    """

    model_config = ConfigDict(extra="forbid")

    command: str
    R: int | None = None
    radii: list[int] = Field(default_factory=list)
    family: str = "random_phase"
    families: list[str] = Field(default_factory=list)
    beta: float = 0.5
    p: float | None = None
    q: float | None = None
    alpha: float | None = None
    alphas: list[float] | None = None
    cp: float | None = None
    oversampling: int | None = None
    near_kappa: float | None = None
    dichotomy_kappa: float | None = None
    domination_kappa: float | None = None
    lemma: str | None = None
    lemma_params: dict[str, Any] = Field(default_factory=dict)
    draws: int = 1
    perturb: int = 0
    workers: int | None = None
    seed: int = 0
    out: Path | None = None
    format: OutputFormat = OutputFormat.JSON

    def require(self, *names: str) -> None:
        """Raise if any named field is unset."""
        for name in names:
            if getattr(self, name) in (None, []):
                flag = "--R-list" if name == "radii" else f"--{name.replace('_', '-')}"
                raise InvalidParameterError(f"Missing option for '{self.command}': {flag}")

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def _parse_list(text: str | None, cast: Callable[[str], T], flag: str) -> list[T] | None:
    if text is None:
        return None
    try:
        return [cast(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise InvalidParameterError(
            f"Invalid {flag}: '{text}'. Expected comma-separated values"
        ) from None


def _resolve(command: str, config_file: Path | None, **flags: Any) -> RunConfig:
    """Load the JSON config file, overlay explicit flags, and apply the lab settings."""
    base: dict[str, Any] = {}
    if config_file is not None:
        if not config_file.exists():
            raise FileNotFoundError(f"Config file not found: {config_file}")
        try:
            base = json.loads(config_file.read_text())
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"Malformed config file {config_file}: {e}") from e
        if not isinstance(base, dict):
            raise InvalidInputError(f"Config file {config_file} must hold a JSON object")
    base.update({key: value for key, value in flags.items() if value is not None})
    base["command"] = command
    try:
        cfg = RunConfig.model_validate(base)
    except ValidationError as e:
        raise InvalidParameterError(f"Invalid run configuration: {e}") from e

    reset_config()
    configure_grid(cfg.oversampling)
    configure_pruning(cp=cfg.cp)
    configure_verifiers(
        near_kappa=cfg.near_kappa,
        dichotomy_kappa=cfg.dichotomy_kappa,
        domination_kappa=cfg.domination_kappa,
    )
    return cfg


def _captured(fn: Callable[..., T], *args: Any, **kwargs: Any) -> tuple[T, list[str]]:
    """Call fn, echoing and returning the warnings it raised."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = fn(*args, **kwargs)
    notes = list(dict.fromkeys(str(w.message) for w in caught))
    for note in notes:
        typer.echo(f"⚠ {note}", err=True)
    return result, notes


def _emit(cfg: RunConfig, report: Any, notes: list[str] | None = None) -> None:
    """Print a report as JSON and append its run record to --out when given."""
    payload = report.model_dump() if isinstance(report, BaseModel) else report
    typer.echo(json.dumps(convert_numpy_types(payload)))
    if cfg.out is not None and cfg.format is OutputFormat.JSON:
        write_run_record(create_run_record(cfg.command, cfg.echo(), report, notes), cfg.out)


def _fail(e: Exception) -> NoReturn:
    typer.echo(f"Error: {e}", err=True)
    raise typer.Exit(1)


def _gate(passed: bool, what: str) -> None:
    if not passed:
        typer.echo(f"⚠ {what}: gate failed", err=True)
        raise typer.Exit(GATE_FAILURE)


@app.command()
def ladder(
    r: int = typer.Option(None, "--R", help="Frequency scale R (power of two, >= 256)"),  # noqa: B008
    out: Path = typer.Option(None, help="Append a JSONL run record here"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Print the scale ladder N, R_0..R_{N-1} and R_N."""
    try:
        cfg = _resolve("ladder", config, R=r, out=out)
        cfg.require("R")
        _emit(cfg, build_scale_ladder(cfg.R).to_dict())
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)


@app.command()
def caps(
    r: int = typer.Option(None, "--R", help="Frequency scale R (power of two, >= 256)"),  # noqa: B008
    beta: float = typer.Option(None, help="Small cap exponent in [1/2, 1]"),  # noqa: B008
    out: Path = typer.Option(None, help="Append a JSONL run record here"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Print cap endpoints per level, one plate per level and the small cap count."""
    try:
        cfg = _resolve("caps", config, R=r, beta=beta, out=out)
        cfg.require("R")
        scale_ladder = build_scale_ladder(cfg.R)
        tree = build_cap_tree(scale_ladder)
        dump = tree.to_dict()
        dump["plates"] = [
            plate_tiling(tree.cap(k, 0), scale_ladder).to_dict()
            for k in range(1, scale_ladder.N + 1)
        ]
        dump["small_caps"] = {
            "beta": cfg.beta,
            "count": len(small_cap_partition(scale_ladder, cfg.beta)),
        }
        _emit(cfg, dump)
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)


@app.command("cutoff-selftest")
def cutoff_selftest_command(
    r: int = typer.Option(None, "--R", help="Frequency scale R (power of two, >= 256)"),  # noqa: B008
    seed: int = typer.Option(None, help="Seed for the sampled test points"),  # noqa: B008
    oversampling: int = typer.Option(None, help="Samples per unit length (>= 4)"),  # noqa: B008
    out: Path = typer.Option(None, help="Append a JSONL run record here"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Check partition of unity, positivity and Gevrey decay of the cutoffs."""
    try:
        cfg = _resolve(
            "cutoff-selftest", config, R=r, seed=seed, oversampling=oversampling, out=out
        )
        cfg.require("R")
        report, notes = _captured(cutoff_selftest, cfg.R, cfg.seed, build_grid(cfg.R))
        _emit(cfg, report, notes)
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)
    _gate(report.passed, "cutoff self-test")


@app.command()
def synth(
    r: int = typer.Option(None, "--R", help="Frequency scale R (power of two, >= 256)"),  # noqa: B008
    family: str = typer.Option(  # noqa: B008
        None, help=f"Test family: {', '.join(family_names())}"
    ),
    beta: float = typer.Option(None, help="Small cap exponent (single_cap)"),  # noqa: B008
    seed: int = typer.Option(None, help="Seed for random families"),  # noqa: B008
    oversampling: int = typer.Option(None, help="Samples per unit length (>= 4)"),  # noqa: B008
    format: OutputFormat = typer.Option(  # noqa: B008
        None, help="binary-field writes sampled values, json writes lattice coefficients"
    ),
    out: Path = typer.Option(None, help="Output file"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Synthesize a test function and write it as a field dump or coefficient list."""
    try:
        cfg = _resolve(
            "synth",
            config,
            R=r,
            family=family,
            beta=beta,
            seed=seed,
            oversampling=oversampling,
            format=format,
            out=out,
        )
        cfg.require("R", "out")
        scale_ladder = build_scale_ladder(cfg.R)
        grid = build_grid(cfg.R)
        profile = make_family(
            cfg.family, scale_ladder, beta=cfg.beta, seed=cfg.seed, grid=grid
        )
        if cfg.format is OutputFormat.BINARY_FIELD:
            write_field(cfg.out, synthesize(profile, grid))
        elif cfg.format is OutputFormat.JSON:
            write_profile(cfg.out, profile)
        else:
            raise InvalidParameterError(
                f"Invalid format for synth: '{cfg.format.value}'. Valid options: json, binary-field"
            )
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)

    typer.echo(json.dumps(convert_numpy_types(describe_profile(profile))))
    typer.echo(f"✓ Wrote {cfg.family} (R={cfg.R}) to {cfg.out}", err=True)


@app.command()
def prune(
    r: int = typer.Option(None, "--R", help="Frequency scale R (power of two, >= 256)"),  # noqa: B008
    alpha: float = typer.Option(None, help="Amplitude alpha (default R^(1/4))"),  # noqa: B008
    cp: float = typer.Option(None, help="Pruning constant C_p"),  # noqa: B008
    family: str = typer.Option(None, help="Test family"),  # noqa: B008
    beta: float = typer.Option(None, help="Small cap exponent (single_cap)"),  # noqa: B008
    seed: int = typer.Option(None, help="Seed for random families"),  # noqa: B008
    out: Path = typer.Option(None, help="Append a JSONL run record here"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Run the pruning cascade and check its invariants."""
    try:
        cfg = _resolve(
            "prune",
            config,
            R=r,
            alpha=alpha,
            cp=cp,
            family=family,
            beta=beta,
            seed=seed,
            out=out,
        )
        cfg.require("R")
        amplitude = cfg.alpha if cfg.alpha is not None else cfg.R**0.25
        decomp, notes = _captured(
            build_decomposition, cfg.family, cfg.R, amplitude, cfg.seed, cfg.cp, cfg.beta
        )
        report = pruning_invariant_report(decomp)
        report.warnings.extend(notes)
        _emit(cfg, report, notes)
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)
    _gate(report.passed, "pruning invariants")


@app.command()
def verify(
    lemma: str = typer.Option(None, help=f"Verifier: {', '.join(LEMMA_NAMES)}"),  # noqa: B008
    r: int = typer.Option(None, "--R", help="Frequency scale R (power of two, >= 256)"),  # noqa: B008
    alpha: float = typer.Option(None, help="Amplitude alpha (default R^(1/4))"),  # noqa: B008
    cp: float = typer.Option(None, help="Pruning constant C_p"),  # noqa: B008
    family: str = typer.Option(None, help="Test family"),  # noqa: B008
    seed: int = typer.Option(None, help="Base seed"),  # noqa: B008
    draws: int = typer.Option(None, help="Independent draws, one report each"),  # noqa: B008
    m: int = typer.Option(None, help="Bad part level m"),  # noqa: B008
    k: int = typer.Option(None, help="Cap level k"),  # noqa: B008
    l: int = typer.Option(None, "--l", help="Level offset l (high-c)"),  # noqa: B008, E741
    s: int = typer.Option(None, help="Filter level s (low)"),  # noqa: B008
    radius: float = typer.Option(None, help="Filter radius r"),  # noqa: B008
    cap_index: int = typer.Option(None, help="Cap index within its level"),  # noqa: B008
    gate: str = typer.Option(None, help="Integrated constancy gate: loose or strict"),  # noqa: B008
    nodes: int = typer.Option(None, help="Sampled nodes (narrow)"),  # noqa: B008
    near_kappa: float = typer.Option(None, help="Near relation constant"),  # noqa: B008
    dichotomy_kappa: float = typer.Option(None, help="Broad/narrow near constant"),  # noqa: B008
    domination_kappa: float = typer.Option(None, help="Weak high-domination constant"),  # noqa: B008
    out: Path = typer.Option(None, help="Append JSONL run records here"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Measure both sides of one lemma; prints one JSON report per draw."""
    lemma_flags = {
        "m": m,
        "k": k,
        "l": l,
        "s": s,
        "r": radius,
        "cap_index": cap_index,
        "gate": gate,
        "nodes": nodes,
    }
    all_passed = True
    try:
        cfg = _resolve(
            "verify",
            config,
            lemma=lemma,
            R=r,
            alpha=alpha,
            cp=cp,
            family=family,
            seed=seed,
            draws=draws,
            near_kappa=near_kappa,
            dichotomy_kappa=dichotomy_kappa,
            domination_kappa=domination_kappa,
            out=out,
        )
        cfg.require("lemma", "R")
        if cfg.lemma not in LEMMA_NAMES:
            raise InvalidParameterError(
                f"Invalid lemma: '{cfg.lemma}'. Valid options: {', '.join(LEMMA_NAMES)}"
            )
        if cfg.draws < 1:
            raise InvalidParameterError(f"Invalid draws: '{cfg.draws}'. Must be >= 1")
        cfg.lemma_params.update({key: v for key, v in lemma_flags.items() if v is not None})
        amplitude = cfg.alpha if cfg.alpha is not None else cfg.R**0.25

        for draw in range(cfg.draws):
            draw_seed = derive_seed(cfg.seed, draw, f"{cfg.lemma}:{cfg.family}")
            decomp, notes = _captured(
                build_decomposition, cfg.family, cfg.R, amplitude, draw_seed, cfg.cp
            )
            report = run_lemma(cfg.lemma, decomp, seed=draw_seed, **cfg.lemma_params)
            _emit(cfg, report, notes)
            all_passed = all_passed and report.passed
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)
    _gate(all_passed, f"lemma {cfg.lemma}")


@app.command()
def envelope(
    families: str = typer.Option(None, help="Comma-separated families (default: all)"),  # noqa: B008
    r_list: str = typer.Option(None, "--R-list", help="Comma-separated values of R"),  # noqa: B008
    alphas: str = typer.Option(None, help="Comma-separated amplitudes (default 2^(j/2))"),  # noqa: B008
    cp: float = typer.Option(None, help="Pruning constant C_p"),  # noqa: B008
    seed: int = typer.Option(None, help="Base seed"),  # noqa: B008
    perturb: int = typer.Option(None, help="Random re-drawings per point; keeps the max"),  # noqa: B008
    format: OutputFormat = typer.Option(None, help="json (run records) or csv"),  # noqa: B008
    out: Path = typer.Option(None, help="Output file"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Scan both sides of the wave envelope estimate over families, R and alpha."""
    try:
        cfg = _resolve(
            "envelope",
            config,
            families=_parse_list(families, str, "--families"),
            radii=_parse_list(r_list, int, "--R-list"),
            alphas=_parse_list(alphas, float, "--alphas"),
            cp=cp,
            seed=seed,
            perturb=perturb,
            format=format,
            out=out,
        )
        cfg.require("radii")
        if cfg.format is OutputFormat.BINARY_FIELD:
            raise InvalidParameterError("Invalid format for envelope: 'binary-field'")
        if cfg.format is OutputFormat.CSV:
            cfg.require("out")
        typer.echo(f"Scanning envelope over R = {cfg.radii}", err=True)
        reports, notes = _captured(
            envelope_scan,
            cfg.families or family_names(),
            cfg.radii,
            cfg.alphas,
            cfg.cp,
            cfg.seed,
            cfg.perturb,
        )
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)

    if cfg.format is OutputFormat.CSV:
        rows = [convert_numpy_types(report.model_dump()) for report in reports]
        write_table(rows, cfg.out, columns=ENVELOPE_COLUMNS)
        typer.echo(f"✓ Wrote {len(rows)} rows to {cfg.out}", err=True)
    else:
        for report in reports:
            _emit(cfg, report, notes)
    for entry in scan_maxima(reports).values():
        typer.echo(
            f"  {entry['family']} R={entry['R']}: max log exponent {entry['max_log_exponent']}",
            err=True,
        )
    _gate(all(report.passed for report in reports), "wave envelope")


@app.command()
def decouple(
    p: float = typer.Option(None, help="Lebesgue exponent p >= 1"),  # noqa: B008
    q: float = typer.Option(None, help="Summation exponent q >= 1"),  # noqa: B008
    beta: float = typer.Option(None, help="Small cap exponent in [1/2, 1]"),  # noqa: B008
    family: str = typer.Option(None, help="Comma-separated families (default random_phase)"),  # noqa: B008
    r_list: str = typer.Option(None, "--R-list", help="Comma-separated values of R"),  # noqa: B008
    seed: int = typer.Option(None, help="Base seed"),  # noqa: B008
    format: OutputFormat = typer.Option(None, help="json (run records) or csv"),  # noqa: B008
    out: Path = typer.Option(None, help="Output file"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Measure d_emp for small cap decoupling; fits the slope with three or more R."""
    try:
        cfg = _resolve(
            "decouple",
            config,
            p=p,
            q=q,
            beta=beta,
            families=_parse_list(family, str, "--family"),
            radii=_parse_list(r_list, int, "--R-list"),
            seed=seed,
            format=format,
            out=out,
        )
        cfg.require("p", "q", "radii")
        if cfg.format is OutputFormat.BINARY_FIELD:
            raise InvalidParameterError("Invalid format for decouple: 'binary-field'")
        if cfg.format is OutputFormat.CSV:
            cfg.require("out")
        triple = ExponentTriple(cfg.p, cfg.q, cfg.beta)
        if not admissible_exponents(triple):
            raise InvalidParameterError(
                f"Invalid exponents (p={cfg.p:g}, q={cfg.q:g}): need 3/p + 1/q <= 1"
            )

        rows: list[dict[str, Any]] = []
        all_passed = True
        for name in cfg.families or [cfg.family]:
            radii = sorted(set(cfg.radii))
            if len(radii) >= MIN_FIT_POINTS:
                fit = exponent_fit(name, triple, radii, cfg.seed)
                reports, slope = fit.reports, fit.slope
                mark = "✓" if fit.attained else "·"
                typer.echo(
                    f"{mark} {name}: slope {fit.slope:.3f} (predicted {fit.predicted:g})",
                    err=True,
                )
            else:
                reports, slope = [], None
                for R in radii:
                    scale_ladder = build_scale_ladder(R)
                    run_seed = derive_seed(cfg.seed, R, name)
                    profile = make_family(
                        name, scale_ladder, beta=triple.beta, seed=run_seed, normalize=False
                    )
                    reports.append(
                        decoupling_ratio(profile, triple, scale_ladder, name, run_seed)
                    )
            for report in reports:
                all_passed = all_passed and report.passed
                if cfg.format is OutputFormat.CSV:
                    rows.append({**report.model_dump(), "slope": slope})
                else:
                    _emit(cfg, report)
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)

    if cfg.format is OutputFormat.CSV:
        write_table(convert_numpy_types(rows), cfg.out, columns=DECOUPLE_COLUMNS)
        typer.echo(f"✓ Wrote {len(rows)} rows to {cfg.out}", err=True)
    _gate(all_passed, "decoupling bound")


@app.command()
def suite(
    r_list: str = typer.Option(None, "--R-list", help="Comma-separated values of R"),  # noqa: B008
    r: int = typer.Option(None, "--R", help="Single value of R"),  # noqa: B008
    seed: int = typer.Option(None, help="Base seed"),  # noqa: B008
    workers: int = typer.Option(None, help="Worker processes (default DCPL_THREADS or CPUs)"),  # noqa: B008
    out: Path = typer.Option(  # noqa: B008
        None, help=f"Path to output JSON summary file (default {DEFAULT_SUITE_SUMMARY})"
    ),
    records: Path = typer.Option(None, help="Append per-job JSONL run records here"),  # noqa: B008
    config: Path = typer.Option(None, help="JSON config file; flags win"),  # noqa: B008
):
    """Run the acceptance battery and write a summary JSON; exit 2 if a gate fails."""
    try:
        radii = _parse_list(r_list, int, "--R-list") or ([r] if r is not None else None)
        cfg = _resolve("suite", config, radii=radii, seed=seed, workers=workers, out=out)
        cfg.require("radii")
        typer.echo(f"Running suite for R = {cfg.radii} (seed {cfg.seed})", err=True)
        (summary, results), notes = _captured(
            run_suite, cfg.radii, cfg.seed, cfg.workers, cfg.echo()
        )
    except (DecouplingLabError, FileNotFoundError) as e:
        _fail(e)
    except RuntimeError as e:
        typer.echo(f"Unexpected error: {e}", err=True)
        raise typer.Exit(1)

    if records is not None:
        for result in results:
            record = create_run_record(
                f"suite:{result['kind']}",
                {**cfg.echo(), "job": result["params"], "job_seed": result["seed"]},
                result.get("report", {}),
                result.get("errors", []) + notes,
            )
            write_run_record(record, records)

    summary_path = cfg.out or DEFAULT_SUITE_SUMMARY
    summary_path.parent.mkdir(parents=True, exist_ok=True)
    summary_path.write_text(
        json.dumps(convert_numpy_types(summary.model_dump()), indent=2, sort_keys=True) + "\n"
    )
    typer.echo(f"\n✓ Summary written to {summary_path}")
    for name, passed in summary.gates.items():
        typer.echo(f"  {'✓' if passed else '✗'} {name}")
    typer.echo(f"  Envelope max log exponent: {summary.envelope_max_log_exponent}")
    _gate(summary.passed, "suite")


@app.command()
def summary(
    audit: Path = typer.Option(..., help="Path to input JSONL run records"),  # noqa: B008
    out: Path = typer.Option(..., help="Path to output JSON summary file"),  # noqa: B008
    print_summary: bool = typer.Option(False, help="Print summary to stdout"),  # noqa: B008
):
    """Aggregate a JSONL run log into gate counts and metric ranges."""
    from decoupling_lab.audit.summary import generate_summary_report

    typer.echo(f"Reading run records: {audit}")
    try:
        summary_data = generate_summary_report(audit, out)
    except (FileNotFoundError, ValueError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(1)

    typer.echo(f"\n✓ Summary report written to {out}")
    typer.echo(f"  Total records: {summary_data.get('total_records', 0)}")
    for command, entry in summary_data.get("commands", {}).items():
        typer.echo(
            f"  {command}: {entry['passed']} passed, {entry['failed']} failed, "
            f"{entry['vacuous']} vacuous"
        )

    if print_summary:
        json.dump(summary_data, sys.stdout, indent=2)
        print()


@app.command()
def version():
    """Show version information."""
    from decoupling_lab import __version__
    from decoupling_lab.audit import get_git_sha

    typer.echo(f"Decoupling Lab v{__version__}")
    typer.echo(f"Git SHA: {get_git_sha()}")


def main():
    """Entry point for CLI; usage errors exit 1, gate failures 2."""
    try:
        code = app(standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        code = 1
    except click.exceptions.Abort:
        code = 1
    sys.exit(code or 0)


if __name__ == "__main__":
    main()
