"""
Command-line interface for tenuniq.

Usage:
    tenuniq bounds --dims 4x5x6               # generic uniqueness bounds
    tenuniq bounds --dims 8x20 --sfs          # symmetric-frontal-slice bounds
    tenuniq certify factors.json              # certify a concrete decomposition
    tenuniq generic-check --dims 4x5x6 --rank 6 --trials 5
    tenuniq empirical --dims 3x4x5 --rank 4 --inits 20 --seed 1
    tenuniq tensor --input factors.json       # tensor entries of a factor file

Exit codes: 0 ok, 1 usage or input error, 2 numerical failure. Verdicts never
change the exit code.
"""
import functools
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
from pydantic import ValidationError

from . import __version__
from .certify import CertParams, certify_cpd, certify_sfs
from .config import MAX_SEED, Settings, load_settings, log_level
from .empirical_lab import AlsOptions, GenericRoute, SampleSpec, monte_carlo_generic_check
from .empirical_protocol import empirical_uniqueness
from .exceptions import NumericalError, TenuniqError
from .factor_file import load_factor_file
from .field_linalg import RankTolerance, ScalarField, encode_entries
from .generic_bounds import FieldScope, ProblemDims, aggregate
from .reports import (
    OutputFormat,
    bound_table_frame,
    certificate_frame,
    empirical_frame,
    make_envelope,
    monte_carlo_frame,
    render,
    render_json,
)
from .tensor3 import from_factors, tensor_entries

__all__ = [
    "cli",
    "main",
    "parse_dims",
]

logger = logging.getLogger(__name__)

FORMATS = click.Choice([f.value for f in OutputFormat])
FIELDS = click.Choice([f.value for f in ScalarField])
SEED = click.IntRange(0, MAX_SEED)


class TenuniqGroup(click.Group):
    """Click group whose usage errors exit with code 1."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(
                args=args, prog_name=prog_name, complete_var=complete_var, standalone_mode=False, **extra
            )
        except click.UsageError as e:
            e.show()
            sys.exit(1)
        except click.ClickException as e:
            e.show()
            sys.exit(1)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        if standalone_mode:
            sys.exit(0)
        return rv


def _reported(fn: Callable) -> Callable:
    """Map package errors to exit codes: numerical failures 2, the rest 1."""

    name = fn.__name__.replace("_", "-")

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            result = fn(*args, **kwargs)
            logger.info(f"{name} finished")
            return result
        except NumericalError as e:
            click.echo(f"Numerical failure: {e}", err=True)
            sys.exit(2)
        except (TenuniqError, ValidationError) as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)

    return wrapper


def parse_dims(text: str, sfs: bool) -> ProblemDims:
    """'IxJxK', or 'IxK' for SFS problems."""
    parts = text.lower().split("x")
    expected = 2 if sfs else 3
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise click.BadParameter(f"{text!r} is not of the form {'IxK' if sfs else 'IxJxK'}", param_hint="--dims")
    if len(values) != expected:
        raise click.BadParameter(f"expected {expected} dimensions, got {len(values)}", param_hint="--dims")
    if min(values) < 1:
        raise click.BadParameter("dimensions must be positive", param_hint="--dims")
    if sfs:
        return ProblemDims.symmetric(values[0], values[1])
    return ProblemDims.unstructured(*values)


def _settings(ctx: click.Context) -> Settings:
    return ctx.obj["settings"]


def _emit(text: str, output: Optional[str] = None) -> None:
    if output:
        Path(output).write_text(text + "\n")
        logger.info(f"Wrote {output}")
    else:
        click.echo(text)


@click.group(cls=TenuniqGroup)
@click.version_option(version=__version__, prog_name="tenuniq")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="YAML file overriding the default settings")
@click.option("--log-level", "log_level_name", default=None, help="Logging level (default from TENUNIQ_LOG_LEVEL or INFO)")
@click.pass_context
@_reported
def cli(ctx: click.Context, config_path: Optional[str], log_level_name: Optional[str]):
    """
    tenuniq - uniqueness bounds and certificates for tensor decompositions.

    Generic rank bounds, certificates for concrete factor matrices, Monte
    Carlo generic checks and multi-start ALS experiments for the canonical
    polyadic decomposition and its symmetric-frontal-slice variant.
    """
    level = (log_level_name or log_level()).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    ctx.ensure_object(dict)
    ctx.obj["settings"] = load_settings(config_path)


@cli.command()
@click.option("--dims", required=True, help="IxJxK, or IxK with --sfs")
@click.option("--sfs", is_flag=True, help="Symmetric frontal slices (B = A)")
@click.option("--max-rank", type=click.IntRange(min=1), default=None, help="Largest R scanned (default 200)")
@click.option("--format", "fmt", type=FORMATS, default="table", show_default=True)
@click.option("--field", type=click.Choice([f.value for f in FieldScope]), default="both", show_default=True,
              help="Field used for the overall maximum")
@click.option("--probe-compound", is_flag=True, help="Add the compound Monte Carlo entry (one random example per R)")
@click.option("--seed", type=SEED, default=0, show_default=True)
@click.pass_context
@_reported
def bounds(ctx, dims, sfs, max_rank, fmt, field, probe_compound, seed):
    """Generic uniqueness bounds for the given dimensions."""
    settings = _settings(ctx)
    problem = parse_dims(dims, sfs)
    r_cap = max_rank or settings.r_cap
    table = aggregate(
        problem, r_cap=r_cap, field=FieldScope(field), compound_probe=probe_compound,
        seed=seed, tol=settings.rank_tol,
    )
    inputs = {
        "dims": problem.model_dump(),
        "max_rank": r_cap,
        "field": field,
        "probe_compound": probe_compound,
        "settings": settings.model_dump(),
    }
    envelope = make_envelope("bounds", inputs, table, seed=seed if probe_compound else None)
    summary = [f"dims {problem.label()}, overall max rank {table.overall_max} ({field})"]
    if table.co_nonunique_from is not None:
        summary.append(f"generically not unique over the complex field from R = {table.co_nonunique_from}")
    summary.extend(table.notes)
    click.echo(render(envelope, bound_table_frame(table), OutputFormat(fmt), summary))


@cli.command()
@click.argument("input_path", type=click.Path(dir_okay=False))
@click.option("--tol", type=float, default=None, help="Relative rank tolerance (default 1e-9)")
@click.option("--falsify-trials", type=int, default=None, help="Falsifier trial budget (default 256)")
@click.option("--seed", type=SEED, default=0, show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="table", show_default=True)
@click.pass_context
@_reported
def certify(ctx, input_path, tol, falsify_trials, seed, fmt):
    """Certify uniqueness of the decomposition in a factor file."""
    settings = _settings(ctx)
    params = CertParams.from_settings(
        settings,
        tol=None if tol is None else RankTolerance(rel_threshold=tol),
        falsify_trials=falsify_trials,
        seed=seed,
    )
    factors = load_factor_file(input_path)
    if factors.sfs:
        certificates = certify_sfs(factors.A, factors.C, params)
    else:
        certificates = [certify_cpd(factors, params)]
    inputs = {
        "input": str(input_path),
        "dims": list(factors.dims),
        "rank": factors.rank,
        "field": factors.field.value,
        "sfs": factors.sfs,
        "params": params.model_dump(mode="json"),
        "settings": settings.model_dump(),
    }
    envelope = make_envelope("certify", inputs, certificates, seed=seed)
    summary = [f"{c.route.value}: {c.verdict.value}" for c in certificates]
    click.echo(render(envelope, certificate_frame(certificates), OutputFormat(fmt), summary))


@cli.command("generic-check")
@click.option("--dims", required=True, help="IxJxK, or IxK with --sfs")
@click.option("--sfs", is_flag=True)
@click.option("--rank", type=click.IntRange(min=1), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@click.option("--field", type=FIELDS, default="real", show_default=True)
@click.option("--format", "fmt", type=FORMATS, default="table", show_default=True)
@click.pass_context
@_reported
def generic_check(ctx, dims, sfs, rank, trials, seed, field, fmt):
    """Compound-matrix conditions on random examples."""
    settings = _settings(ctx)
    problem = parse_dims(dims, sfs)
    spec = SampleSpec(dims=problem, rank=rank, field=ScalarField(field), seed=seed, trials=trials)
    route = GenericRoute.SFS_COMPOUND if sfs else GenericRoute.CPD_COMPOUND
    summary = monte_carlo_generic_check(spec, route, settings.rank_tol)
    inputs = {"spec": spec.model_dump(mode="json"), "route": route.value, "settings": settings.model_dump()}
    envelope = make_envelope("generic-check", inputs, summary, seed=seed)
    lines = [f"{route.value} at {problem.label()}, R={rank}: {summary.passing_trials}/{trials} trials pass"]
    click.echo(render(envelope, monte_carlo_frame(summary), OutputFormat(fmt), lines))


@cli.command()
@click.option("--dims", required=True, help="IxJxK, or IxK with --sfs")
@click.option("--sfs", is_flag=True)
@click.option("--rank", type=click.IntRange(min=1), required=True)
@click.option("--inits", type=click.IntRange(min=1), default=None, help="ALS initializations (default 20)")
@click.option("--seed", type=SEED, default=0, show_default=True)
@click.option("--field", type=FIELDS, default="real", show_default=True)
@click.option("--max-iters", type=click.IntRange(min=1), default=None)
@click.option("--fit-tol", type=float, default=None)
@click.option("--format", "fmt", type=FORMATS, default="table", show_default=True)
@click.pass_context
@_reported
def empirical(ctx, dims, sfs, rank, inits, seed, field, max_iters, fit_tol, fmt):
    """Multi-start ALS experiment on a random decomposition."""
    settings = _settings(ctx)
    problem = parse_dims(dims, sfs)
    spec = SampleSpec(dims=problem, rank=rank, field=ScalarField(field), seed=seed, trials=1)
    opts = AlsOptions.from_settings(settings, n_inits=inits, seed=seed, max_iters=max_iters, fit_tol=fit_tol)
    verdict = empirical_uniqueness(spec, opts, settings)
    inputs = {"spec": spec.model_dump(mode="json"), "opts": opts.model_dump(), "settings": settings.model_dump()}
    envelope = make_envelope("empirical", inputs, verdict, seed=seed)
    lines = [f"verdict {verdict.verdict.value}, kept {verdict.kept} of {opts.n_inits} runs"]
    if verdict.error_message:
        lines.append(f"error: {verdict.error_message}")
    click.echo(render(envelope, empirical_frame(verdict), OutputFormat(fmt), lines))


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Write the report here instead of stdout")
@_reported
def tensor(input_path, output):
    """Tensor entries (i fastest, then j, then k) of a factor file."""
    factors = load_factor_file(input_path)
    entries = tensor_entries(from_factors(factors))
    results: Dict[str, Any] = {
        "dims": list(factors.dims),
        "field": factors.field.value,
        "entries": encode_entries(entries),
    }
    envelope = make_envelope("tensor", {"input": str(input_path)}, results)
    _emit(render_json(envelope), output)


def main(argv: Optional[List[str]] = None) -> None:
    cli.main(args=argv, prog_name="tenuniq")


if __name__ == "__main__":
    main()
