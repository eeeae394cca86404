"""Command-line front end: check, configs, count, explain, fmt.

Exit codes: 0 success, 1 error diagnostics, 2 requirement unsatisfiable,
3 I/O or usage error. Diagnostics and status notices go to stderr, rendered
payloads (tables, CSV, JSON, formatted models) to stdout. `QFM_COLOR`
(auto|always|never) controls diagnostic coloring.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys

import click

from .analysis import influence_report, step_impact, validate
from .configurator import (
    PrunedProblem,
    RequirementUnsatisfiable,
    apply_requirement,
    count_configurations,
    enumerate_configurations,
)
from .diagnostics import Diagnostic, Severity, format_diagnostics, has_errors
from .model import Configuration, FeatureModel, Requirement
from .parser import parse_model, parse_requirement_block
from .printer import serialize_model

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_UNSATISFIABLE = 2
EXIT_USAGE = 3


def _color_enabled() -> bool:
    mode = os.environ.get("QFM_COLOR", "auto")
    if mode == "always":
        return True
    if mode == "never":
        return False
    return sys.stderr.isatty()


def _print_diagnostics(diags: list[Diagnostic], quiet: bool = False) -> None:
    if quiet:
        diags = [d for d in diags if d.severity is Severity.ERROR]
    if not diags:
        return
    text = format_diagnostics(diags)
    colored = _color_enabled()
    if colored:
        text = text.replace(": error[", ": \x1b[31merror\x1b[0m[")
        text = text.replace(": warning[", ": \x1b[33mwarning\x1b[0m[")
    click.echo(text, err=True, nl=False, color=colored)


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc.strerror or exc}", err=True)
        raise SystemExit(EXIT_USAGE) from None


def _load_model(path: str) -> FeatureModel:
    result = parse_model(_read_text(path), path)
    if isinstance(result, list):
        _print_diagnostics(result)
        raise SystemExit(EXIT_DIAGNOSTICS)
    return result


def _load_validated(path: str, quiet: bool = False) -> FeatureModel:
    model = _load_model(path)
    diags = validate(model)
    _print_diagnostics(diags, quiet=quiet)
    if has_errors(diags):
        raise SystemExit(EXIT_DIAGNOSTICS)
    return model


def _resolve_requirement(model: FeatureModel, requirement_path: str | None) -> Requirement | None:
    if requirement_path is None:
        return model.requirement
    text = _read_text(requirement_path)
    requirement, diags = parse_requirement_block(text, requirement_path, model)
    if requirement is None:
        _print_diagnostics(diags)
        raise SystemExit(EXIT_DIAGNOSTICS)
    return requirement


def _pruned_problem(model: FeatureModel, requirement: Requirement | None) -> PrunedProblem:
    if requirement is None:
        click.echo(
            "error: the model has no `requirement` block; add one or pass "
            "--requirement <file>",
            err=True)
        raise SystemExit(EXIT_USAGE)
    try:
        return apply_requirement(model, requirement)
    except RequirementUnsatisfiable as exc:
        click.echo(str(exc), err=True)
        raise SystemExit(EXIT_UNSATISFIABLE) from None


def _visible_features(model: FeatureModel) -> list[str]:
    return [f.name for f in model.features() if not (f.is_abstract or f.is_hidden)]


def _render_csv(model: FeatureModel, configs: list[Configuration]) -> str:
    visible = _visible_features(model)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(visible)
    for config in configs:
        chosen = set(config.selected)
        writer.writerow(["x" if name in chosen else "" for name in visible])
    return buffer.getvalue()


def _render_table(model: FeatureModel, configs: list[Configuration]) -> str:
    visible = _visible_features(model)
    index_width = max(len(str(len(configs))), 1)
    header = " ".join([" " * index_width] + [name for name in visible])
    widths = [len(name) for name in visible]
    lines = [header.rstrip()]
    for i, config in enumerate(configs, start=1):
        chosen = set(config.selected)
        cells = [("x" if name in chosen else "").ljust(width)
                 for name, width in zip(visible, widths)]
        lines.append(" ".join([str(i).rjust(index_width)] + cells).rstrip())
    return "\n".join(lines) + "\n"


def _render_json(model: FeatureModel, requirement: Requirement,
                 configs: list[Configuration]) -> str:
    payload = {
        "model": model.name,
        "task": requirement.task,
        "configurations": [
            {
                "features": list(config.selected),
                "bindings": [
                    {"attribute": b.attribute.path, "value": b.value.literal}
                    for b in config.bindings
                ],
            }
            for config in configs
        ],
        "thresholds": [
            {
                "property": qreq.property.name,
                "metric": threshold.metric.name,
                "comparator": threshold.comparator.value,
                "value": threshold.value,
            }
            for qreq in requirement.quality_reqs
            for threshold in qreq.thresholds
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


@click.group()
def cli() -> None:
    """Model ML pipeline families with quality attributes and derive every
    configuration that satisfies a requirement."""


@cli.command()
@click.argument("path", type=click.Path())
@click.option("--quiet", is_flag=True, help="Only report errors, not warnings.")
def check(path: str, quiet: bool) -> None:
    """Parse and validate a model file."""
    model = _load_model(path)
    diags = validate(model)
    _print_diagnostics(diags, quiet=quiet)
    if has_errors(diags):
        raise SystemExit(EXIT_DIAGNOSTICS)


def _configs_impl(path: str, fmt: str, limit: int | None, count_only: bool,
                  requirement_path: str | None, quiet: bool) -> None:
    model = _load_validated(path, quiet=quiet)
    requirement = _resolve_requirement(model, requirement_path)
    problem = _pruned_problem(model, requirement)
    if count_only:
        click.echo(str(count_configurations(problem)))
        return
    configs = enumerate_configurations(problem, limit)
    if limit is not None and not quiet:
        total = count_configurations(problem)
        if total > limit:
            click.echo(f"note: showing {limit} of {total} configurations", err=True)
    if fmt == "csv":
        click.echo(_render_csv(model, configs), nl=False)
    elif fmt == "json":
        click.echo(_render_json(model, problem.requirement, configs), nl=False)
    else:
        click.echo(_render_table(model, configs), nl=False)


@cli.command()
@click.argument("path", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["table", "csv", "json"]),
              default="table", help="Output format.")
@click.option("--limit", type=int, default=None, help="Emit at most N configurations.")
@click.option("--count-only", is_flag=True, help="Print only the number of configurations.")
@click.option("--requirement", "requirement_path", type=click.Path(), default=None,
              help="Requirement block to use instead of the one in the model.")
@click.option("--quiet", is_flag=True, help="Suppress warnings and notices.")
def configs(path: str, fmt: str, limit: int | None, count_only: bool,
            requirement_path: str | None, quiet: bool) -> None:
    """Derive all configurations satisfying the model's requirement."""
    _configs_impl(path, fmt, limit, count_only, requirement_path, quiet)


@cli.command()
@click.argument("path", type=click.Path())
@click.option("--requirement", "requirement_path", type=click.Path(), default=None,
              help="Requirement block to use instead of the one in the model.")
@click.option("--quiet", is_flag=True, help="Suppress warnings and notices.")
def count(path: str, requirement_path: str | None, quiet: bool) -> None:
    """Print the number of configurations (alias for configs --count-only)."""
    _configs_impl(path, "table", None, True, requirement_path, quiet)


@cli.command()
@click.argument("path", type=click.Path())
@click.option("--builtin", is_flag=True,
              help="Add the built-in influence knowledge between quality kinds.")
def explain(path: str, builtin: bool) -> None:
    """Report quality influence edges and affected pipeline steps."""
    model = _load_model(path)
    if not model.qualities:
        click.echo("no quality properties declared")
        return
    report = influence_report(model, model.requirement, include_builtin=builtin)
    click.echo("quality influence:")
    if report.edges:
        for edge in report.edges:
            click.echo(f"  {edge.source} -> {edge.target} [{edge.origin.value}]")
    else:
        click.echo("  (no influence edges)")
    if report.warnings:
        click.echo("warnings:")
        for note in report.warnings:
            click.echo(f"  - {note}")
    click.echo("step impact:")
    for quality in model.qualities:
        steps = ", ".join(step_impact(quality.kind))
        click.echo(f"  {quality.name} ({quality.kind.value}): {steps}")


@cli.command()
@click.argument("path", type=click.Path())
@click.option("--write", "write_back", is_flag=True, help="Rewrite the file in place.")
def fmt(path: str, write_back: bool) -> None:
    """Print (or rewrite with --write) the canonical form of a model file."""
    model = _load_model(path)
    text = serialize_model(model)
    if not write_back:
        click.echo(text, nl=False)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        click.echo(f"error: cannot write {path}: {exc.strerror or exc}", err=True)
        raise SystemExit(EXIT_USAGE) from None


def run(argv: list[str] | None = None) -> int:
    """Invoke the CLI and return its exit code instead of exiting."""
    no_args_help = getattr(click.exceptions, "NoArgsIsHelpError", ())
    try:
        cli.main(args=argv, prog_name="qfm", standalone_mode=False)
        return EXIT_OK
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        if no_args_help and isinstance(exc, no_args_help):
            click.echo(exc.format_message())
            return EXIT_OK
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
