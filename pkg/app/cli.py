# app/cli.py
"""
Command-line front end. Every command prints a RunReport as JSON (sorted
keys) on stdout; tables and grids go to the files named by their flags.

Exit codes: 2 usage and domain errors, 3 malformed input files, 4 numerical
failures.
"""
import functools
import logging
import typing

import click
from pydantic import ValidationError

from app.core.config import VERSION, configure_logging, load_yaml_config
from app.core.errors import DomainError, GridFormatError, GrushinError
from app.core.grid import load_grid, save_grid
from app.core.runs import (
    run_geometry,
    run_pohozaev,
    run_rearrange,
    run_sobolev,
    run_solve,
    run_transform_check,
)
from app.core.sobolev import write_constants_csv
from app.schemas.common import QuadratureConfig
from app.schemas.geometry import ShapeName, ShapeSpec
from app.schemas.report import RunReport
from app.schemas.sobolev import FamilyConfig
from app.schemas.solver import SolverConfig

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4


class CommandFailure(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def exit_code_for(exc: GrushinError) -> int:
    if isinstance(exc, DomainError):
        return EXIT_USAGE
    if isinstance(exc, GridFormatError):
        return EXIT_INPUT
    return EXIT_NUMERICAL


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GrushinError as e:
            logger.debug("command failed", exc_info=True)
            raise CommandFailure(str(e), exit_code_for(e))
        except ValidationError as e:
            raise CommandFailure(str(e), EXIT_USAGE)
    return wrapper


def emit(report: RunReport) -> None:
    click.echo(report.to_json())
    for check in report.checks:
        status = "ok" if check.passed else "FAIL"
        click.echo(
            f"{status} {check.name}: margin={check.margin:+.6e} tolerance={check.tolerance:.1e}",
            err=True,
        )


def shape_options(fn):
    """Options shared by the commands that take a corpus shape."""
    options = [
        click.option("--shape", type=click.Choice(typing.get_args(ShapeName)), help="Corpus shape name."),
        click.option("--radius", type=float, default=1.0, show_default=True),
        click.option("--halfheight", type=float, default=1.0, show_default=True),
        click.option("--semi-axes", type=float, nargs=3, default=(1.0, 1.0, 1.0), show_default=True),
        click.option("--half-widths", type=float, nargs=3, default=(1.0, 1.0, 1.0), show_default=True),
        click.option("--center", type=float, nargs=3, default=(0.0, 0.0, 0.0), show_default=True),
        click.option("--sector", type=int, default=1, show_default=True, help="Sector index (ball-sector)."),
        click.option("--scale", type=float, default=1.0, show_default=True, help="Anisotropic dilation."),
        click.option("--volume-resolution", type=int, default=QuadratureConfig().volume_resolution, show_default=True),
        click.option("--surface-resolution", type=int, default=QuadratureConfig().surface_resolution, show_default=True),
        click.option("--refine-depth", type=int, default=QuadratureConfig().refine_depth, show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def build_spec(options: dict) -> ShapeSpec:
    return ShapeSpec(
        name=options["shape"],
        radius=options["radius"],
        halfheight=options["halfheight"],
        semi_axes=options["semi_axes"],
        half_widths=options["half_widths"],
        center=options["center"],
        sector=options["sector"],
        scale=options["scale"],
    )


def build_quadrature(options: dict, threads: int) -> QuadratureConfig:
    return QuadratureConfig(
        volume_resolution=options["volume_resolution"],
        surface_resolution=options["surface_resolution"],
        refine_depth=options["refine_depth"],
        threads=threads,
    )


def load_solver_config(path, threads: int) -> SolverConfig:
    if path is None:
        return SolverConfig(threads=threads)
    data = load_yaml_config(path)
    data.setdefault("threads", threads)
    return SolverConfig.model_validate(data)


@click.group()
@click.version_option(VERSION)
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker threads for quadrature and stencil sweeps; 1 is the bit-exact reference mode.")
@click.option("--timing/--no-timing", default=True, show_default=True, help="Record wall-clock time in reports.")
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level.")
@click.pass_context
def cli(ctx, threads, timing, verbose):
    """Weighted isoperimetry, rearrangement and Grushin problem toolkit."""
    configure_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj.update(threads=threads, timing=timing)


@cli.command()
@shape_options
@click.option("--alpha", type=float, required=True, help="Degeneracy exponent, alpha > 0.")
@click.option("--sweep", is_flag=True, help="Run every shape of the built-in corpus.")
@click.pass_context
@handle_errors
def geometry(ctx, alpha, sweep, **options):
    """Weighted volume, perimeters and isoperimetric quotient of a shape."""
    if options["shape"] is None and not sweep:
        raise click.UsageError("either --shape or --sweep is required")
    spec = build_spec(options) if options["shape"] is not None else None
    cfg = build_quadrature(options, ctx.obj["threads"])
    emit(run_geometry(spec, alpha, cfg, sweep, ctx.obj["timing"]))


@cli.command()
@click.argument("grid_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", type=float, required=True)
@click.option("--levels", type=click.IntRange(min=2), default=256, show_default=True)
@click.option("--resolution", type=click.IntRange(min=2), default=64, show_default=True,
              help="Grid on which u* is resampled for the equimeasurability check.")
@click.option("--profile", "profile_path", type=click.Path(dir_okay=False, writable=True),
              help="Write the radial profile (r, phi) as CSV.")
@click.pass_context
@handle_errors
def rearrange(ctx, grid_file, alpha, levels, resolution, profile_path):
    """Rearrange a grid function and check Polya-Szego."""
    u = load_grid(grid_file)
    report, profile = run_rearrange(u, alpha, levels, resolution, ctx.obj["threads"], ctx.obj["timing"])
    if profile_path:
        with open(profile_path, "w", encoding="utf-8", newline="") as f:
            profile.write_csv(f)
    emit(report)


@cli.command()
@click.option("--alpha", "alphas", type=float, multiple=True, required=True, help="Repeat for several rows.")
@click.option("--rayleigh", is_flag=True, help="Also minimize the grid Rayleigh quotient (slow).")
@click.option("--resolution", type=int, default=FamilyConfig().resolution, show_default=True)
@click.option("--truncation", type=float, default=FamilyConfig().truncation, show_default=True)
@click.option("--perturbations", type=int, default=FamilyConfig().perturbations, show_default=True)
@click.option("--max-iterations", type=int, default=FamilyConfig().max_iterations, show_default=True)
@click.option("--extrapolate/--no-extrapolate", default=True, show_default=True,
              help="Combine resolutions N and N/2 to cancel the linear truncation error.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False, writable=True), help="Write the constants table.")
@click.pass_context
@handle_errors
def sobolev(ctx, alphas, rayleigh, resolution, truncation, perturbations, max_iterations, extrapolate, csv_path):
    """Sobolev lower bounds L(alpha) and, optionally, grid Rayleigh minima."""
    family = None
    if rayleigh:
        family = FamilyConfig(
            resolution=resolution,
            truncation=truncation,
            perturbations=perturbations,
            max_iterations=max_iterations,
            threads=ctx.obj["threads"],
            extrapolate=extrapolate,
        )
    report, rows = run_sobolev(alphas, family, ctx.obj["timing"])
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as f:
            write_constants_csv(rows, f)
    emit(report)


@cli.command()
@click.option("--alpha", type=float, required=True)
@click.option("--q", type=float, required=True, help="Power exponent, 2 < q < 6.")
@click.option("--grid", type=int, default=32, show_default=True, help="Unknowns per axis (even).")
@click.option("--half-width", type=float, default=1.0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Solver YAML.")
@click.option("--output", type=click.Path(dir_okay=False, writable=True), help="Write the solution grid.")
@click.pass_context
@handle_errors
def solve(ctx, alpha, q, grid, half_width, config_path, output):
    """Ground state of the power problem on a cube."""
    cfg = load_solver_config(config_path, ctx.obj["threads"])
    report, solution = run_solve(alpha, q, grid, half_width, cfg, ctx.obj["timing"])
    if output:
        save_grid(solution.u, output)
    emit(report)


@cli.command()
@click.option("--p", type=float, required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--grid", type=int, default=None, help="Also check the identity on a computed solution.")
@click.option("--half-width", type=float, default=1.0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Solver YAML.")
@click.pass_context
@handle_errors
def pohozaev(ctx, p, alpha, grid, half_width, config_path):
    """Pohozaev coefficient, exponent regime and identity residual."""
    cfg = load_solver_config(config_path, ctx.obj["threads"])
    emit(run_pohozaev(p, alpha, grid, half_width, cfg, ctx.obj["timing"]))


@cli.command("transform-check")
@shape_options
@click.option("--alpha", type=float, required=True)
@click.pass_context
@handle_errors
def transform_check(ctx, alpha, **options):
    """Pushforward checks of the sector flattening map."""
    if options["shape"] is None:
        raise click.UsageError("--shape is required")
    spec = build_spec(options)
    cfg = build_quadrature(options, ctx.obj["threads"])
    emit(run_transform_check(spec, alpha, cfg, ctx.obj["timing"]))


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP API."""
    import uvicorn

    uvicorn.run("app.main:app", host=host, port=port)


def main() -> None:
    cli(obj={})


if __name__ == "__main__":
    main()
