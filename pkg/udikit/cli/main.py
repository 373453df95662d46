"""
udikit command-line interface using Typer
"""

import functools
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import click
import typer
from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table
from typer.core import TyperGroup

from udikit import __version__
from udikit.core.layout import EPOCHS, DatasetLayout
from udikit.core.pipeline import STAGES, Pipeline
from udikit.core.raster import CombineMode
from udikit.core.raster_io import FORMATS
from udikit.core.synth import generate, load_scenario
from udikit.scenarios import scenario_path
from udikit.utils.config import Config
from udikit.utils.errors import USAGE_EXIT_CODE, UdiKitError
from udikit.utils.logging_config import error_handler, get_logger, setup_logging
from udikit.utils.performance import performance_monitor

console = Console()
err_console = Console(stderr=True, soft_wrap=True)
log = get_logger("cli")


class OneLineUsageError(click.UsageError):
    """Usage error reported as a single stderr line with exit code 1"""

    exit_code = USAGE_EXIT_CODE

    def show(self, file: Any = None) -> None:
        click.echo(f"error: {self.format_message()}", file=file or click.get_text_stream("stderr"))


class UdiKitGroup(TyperGroup):
    """Maps click usage errors (unknown flag, missing option, bad value) to exit code 1"""

    @staticmethod
    def _reraise(e: click.UsageError) -> None:
        if isinstance(e, OneLineUsageError) or type(e).__name__ == "NoArgsIsHelpError":
            raise e
        raise OneLineUsageError(e.format_message(), e.ctx) from e

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            self._reraise(e)

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            self._reraise(e)


app = typer.Typer(
    name="udikit",
    cls=UdiKitGroup,
    add_completion=False,
    rich_markup_mode=None,
)

# Options shared by every stage command
CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Run config file (key = value)", dir_okay=False)
DATA_DIR_OPTION = typer.Option(None, "--data-dir", "-d", help="Dataset directory", file_okay=False)
WORK_DIR_OPTION = typer.Option(None, "--work-dir", "-w", help="Output directory", file_okay=False)
FORMAT_OPTION = typer.Option(None, "--format", help=f"Raster format for outputs ({'|'.join(FORMATS)})")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Verbose output")


def _check_format(value: str | None) -> None:
    if value is not None and value not in FORMATS:
        msg = f"Invalid value for '--format': {value!r} is not one of {', '.join(FORMATS)}"
        raise UdiKitError(msg)


def load_config(
    config_file: Path | None,
    data_dir: Path | None,
    work_dir: Path | None,
    raster_format: str | None,
    verbose: bool,
) -> Config:
    """Config file (if any) with command-line overrides; invalid settings are usage errors"""
    _check_format(raster_format)
    overrides = {
        "data_dir": data_dir,
        "output_dir": work_dir,
        "raster_format": raster_format,
        "verbose": verbose or None,
    }
    try:
        if config_file is not None:
            if not config_file.is_file():
                msg = f"config file not found: {config_file}"
                raise UdiKitError(msg)
            config = Config.from_file(config_file, **overrides)
        else:
            config = Config(**{k: v for k, v in overrides.items() if v is not None})
    except ValueError as e:
        raise UdiKitError(str(e)) from e
    setup_logging(config)
    return config


def _print_error_summary(target: Console) -> None:
    summary = error_handler.get_error_summary()
    if not summary["total_errors"] and not summary["total_warnings"]:
        return
    table = Table(title="Errors and warnings")
    table.add_column("type")
    table.add_column("count", justify="right")
    for name, count in {**summary["error_counts"], **summary["warning_counts"]}.items():
        table.add_row(name, str(count))
    target.print(table)


def handle_errors(stage: str) -> Callable:
    """Turn udikit failures into a one-line diagnostic and the matching exit code"""

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return func(*args, **kwargs)
            except UdiKitError as e:
                code = error_handler.log_error(e, context=stage, level="DEBUG")
                err_console.print(f"[red]error:[/red] {escape(str(e))}", highlight=False)
                if kwargs.get("verbose"):
                    _print_error_summary(err_console)
                raise typer.Exit(code) from e

        return wrapper

    return decorator


@contextmanager
def stage_progress() -> Iterator[Callable[[str, int, int], None]]:
    """Pipeline progress callback drawing one rich bar per stage"""
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console,
        transient=True,
    ) as progress:
        tasks: dict[str, Any] = {}

        def update(stage: str, done: int, total: int) -> None:
            if stage not in tasks:
                tasks[stage] = progress.add_task(stage, total=total)
            progress.update(tasks[stage], completed=done, total=total)

        yield update


def _report(written: Path | list[Path], config: Config, layout: DatasetLayout) -> None:
    paths = written if isinstance(written, list) else [written]
    for path in paths:
        console.print(f"[green]✓[/green] {path}")
    if not config.verbose:
        return
    table = Table(title="Stages")
    table.add_column("stage")
    table.add_column("runs", justify="right")
    table.add_column("records", justify="right")
    table.add_column("seconds", justify="right")
    for name, stats in performance_monitor.get_summary()["stages"].items():
        table.add_row(name, str(stats["runs"]), str(stats["records"]), f"{stats['total_time']:.3f}")
    console.print(table)

    structure = Table(title=f"Work tree {layout.work_dir}")
    structure.add_column("item")
    structure.add_column("state", justify="right")
    for item, value in layout.get_structure().items():
        if item in ("data_dir", "work_dir"):
            continue
        if isinstance(value, dict):
            value = ", ".join(f"{k} {v}" for k, v in value.items())
        structure.add_row(item, str(value))
    console.print(structure)
    _print_error_summary(console)


def _run_stage(config: Config, call: Callable[[Pipeline], Path | list[Path]]) -> None:
    with stage_progress() as progress:
        pipeline = Pipeline(config, progress=progress)
        pipeline.layout.ensure()
        written = call(pipeline)
    _report(written, config, pipeline.layout)


def _print_version(value: bool) -> None:
    if value:
        console.print(f"udikit {__version__}")
        raise typer.Exit()


@app.callback()
def cli(
    version: bool = typer.Option(
        False, "--version", help="Show the version and exit", callback=_print_version, is_eager=True
    ),
):
    """Urban Development Index time series: power and infrastructure loss after a disaster."""
    setup_logging(Config())
    error_handler.reset_counts()
    performance_monitor.reset()


@app.command()
@handle_errors("synth")
def synth(
    out: Path = typer.Option(..., "--out", "-o", help="Dataset directory to create", file_okay=False),
    scenario: Path | None = typer.Option(
        None, "--config", "-c", help="Scenario file (defaults to the bundled demo)", dir_okay=False
    ),
    seed: int | None = typer.Option(None, "--seed", help="Override the scenario seed"),
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Generate a synthetic scenario with its ground-truth manifest."""
    _check_format(raster_format)
    setup_logging(Config(verbose=verbose))
    scenario_file = scenario or scenario_path("demo")
    config = load_scenario(scenario_file, seed=seed, raster_format=raster_format)
    truth = generate(config, out)
    console.print(
        f"[bold blue]udikit v{__version__}[/bold blue] scenario {scenario_file.name}: "
        f"{config.n_tracts} tracts, {len(config.months)} months, seed {config.seed}"
    )
    console.print(f"[green]✓[/green] {out} ({len(truth.manifest)} manifest rows)")


@app.command()
@handle_errors("reclass")
def reclass(
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Reclassify the percent impervious reference into classes 1..10."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.reclass())


@app.command()
@handle_errors("signatures")
def signatures(
    epoch: str = typer.Option("pre", "--epoch", help="Image epoch the signatures are drawn from", click_type=click.Choice(EPOCHS)),
    region: str | None = typer.Option(None, "--region", help="Region label stored with the table"),
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Extract per-class spectral signatures against the reference classes."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.signatures(epoch, region))


@app.command()
@handle_errors("classify")
def classify(
    region: str | None = typer.Option(None, "--region", help="Signature table region to classify with"),
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Classify every image of both epochs with the k-NN rule."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.classify(region=region))


@app.command()
@handle_errors("composite")
def composite(
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Average the classified maps of each epoch."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.composite())


@app.command()
@handle_errors("udi")
def udi(
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Compute monthly UDI rasters and the pre-storm baseline."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.udi())


@app.command()
@handle_errors("change")
def change(
    mode: CombineMode = typer.Option(CombineMode.PERCENT_CHANGE, "--mode", help="Change against the baseline"),
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Change rasters of the forecast months against the baseline UDI."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.change(mode))


@app.command()
@handle_errors("zonal")
def zonal(
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Per-tract brightness statistics for every month."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.zonal())


@app.command()
@handle_errors("forecast")
def forecast(
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Fit seasonal models per tract and tabulate the brightness shortfall."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.forecast())


@app.command()
@handle_errors("impact")
def impact(
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Island persons without power and buildings lost per forecast month."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.impact())


@app.command()
@handle_errors("sample")
def sample(
    seed: int = typer.Option(..., "--seed", help="Random seed (required)"),
    n: int = typer.Option(264, "--n", "-n", min=1, help="Number of sample points"),
    layer: str = typer.Option(
        "impervious", "--layer", help="Stratified layer", click_type=click.Choice(["impervious", "udi"])
    ),
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Draw a stratified random accuracy sample."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.sample(n, seed, layer))


@app.command()
@handle_errors("accuracy")
def accuracy(
    sample_file: Path | None = typer.Option(None, "--sample", help="Interpreted sample CSV", dir_okay=False),
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Confusion table and accuracies of an interpreted sample."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.accuracy(sample_file))


@app.command()
@handle_errors("report")
def report(
    tract: str | None = typer.Option(None, "--tract", help="Only chart this tract"),
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Render SVG charts per tract and for the island impact."""
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    _run_stage(config, lambda p: p.report(tract))


@app.command()
@handle_errors("run")
def run(
    stages: str = typer.Option(",".join(STAGES), "--stages", help="Comma-separated stages, run in pipeline order"),
    config_file: Path | None = CONFIG_OPTION,
    data_dir: Path | None = DATA_DIR_OPTION,
    work_dir: Path | None = WORK_DIR_OPTION,
    raster_format: str | None = FORMAT_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """Run several stages in dependency order."""
    wanted = [s.strip() for s in stages.split(",") if s.strip()]
    unknown = [s for s in wanted if s not in STAGES]
    if unknown:
        msg = f"unknown stage(s): {', '.join(unknown)}"
        raise UdiKitError(msg)
    config = load_config(config_file, data_dir, work_dir, raster_format, verbose)
    log.info(f"running {len(wanted)} stage(s) on {config.data_dir}")
    with stage_progress() as progress:
        pipeline = Pipeline(config, progress=progress)
        pipeline.run(wanted)
    console.print(f"[bold green]Completed: {', '.join(s for s in STAGES if s in wanted)}[/bold green]")
    _report([], config, pipeline.layout)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
