import logging
from pathlib import Path
from typing import Optional

import click

from .const import DEFAULT_JOBS, ENTROLAB_HOME

CONFIG_ERROR = 2
FAILURE = 1


def _setup_logging(verbose: int) -> None:
    from rich.console import Console
    from rich.logging import RichHandler

    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _load(config_path: str, seed: Optional[int]):
    from .config import load_config
    from .errors import ConfigError

    try:
        config = load_config(config_path)
        if seed is not None:
            config = config.model_copy(update={"seed": seed})
    except ConfigError as e:
        click.echo(f"Invalid config {config_path}:\n{e}", err=True)
        raise SystemExit(CONFIG_ERROR)
    return config


def _out_dir(out: Optional[str], config) -> Path:
    if out:
        return Path(out)
    if config.out:
        return Path(config.out)
    return ENTROLAB_HOME


def _common_options(func):
    func = click.option(
        "--verbose", "-v", count=True, help="Increase verbosity level"
    )(func)
    func = click.option(
        "--seed",
        type=click.IntRange(0, 2**64 - 1),
        default=None,
        help="Override the config seed",
    )(func)
    func = click.option(
        "--jobs",
        "-j",
        type=click.IntRange(min=1),
        default=DEFAULT_JOBS,
        show_default=True,
        help="Number of estimator jobs to run in parallel",
    )(func)
    func = click.option(
        "--out",
        "-o",
        type=click.Path(file_okay=False),
        default=None,
        help="Output directory (default: config 'out' or $ENTROLAB_HOME)",
    )(func)
    return func


@click.group()
@click.version_option()
def main():
    """entrolab CLI"""
    pass


@main.command(
    name="estimate",
    help="Run the estimators of a config and write report.json plus series CSVs",
)
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@_common_options
def estimate(config: str, out: Optional[str], jobs: int, seed: Optional[int], verbose: int):
    import rich

    from .run import ExperimentRunner

    _setup_logging(verbose)
    cfg = _load(config, seed)
    out_dir = _out_dir(out, cfg)
    runner = ExperimentRunner(cfg, out_dir, jobs=jobs)
    results = runner.run()
    for result in results:
        if result.headline is not None:
            click.echo(f"{result.job.name}: {result.headline:.6f}")
        if not result.ok:
            click.echo(f"{result.job.name}: FAILED ({result.error})", err=True)
    if runner.failed:
        rich.print(f"[red]Some estimators failed; partial outputs in {out_dir}[/red]")
        raise SystemExit(FAILURE)
    rich.print(f"[green]Report written to {out_dir}[/green]")


@main.command(name="verify", help="Run one of the invariant suites with fixed seeds")
@click.argument("suite")
@click.option("--verbose", "-v", count=True, help="Increase verbosity level")
def verify(suite: str, verbose: int):
    import rich

    from .suites import SUITES, run_suite

    _setup_logging(verbose)
    if suite not in SUITES:
        click.echo(
            f"Unknown suite {suite!r}; choose one of: {', '.join(SUITES)}", err=True
        )
        raise SystemExit(CONFIG_ERROR)
    result = run_suite(suite)
    click.echo(f"{suite}: {result.summary()}")
    for failure in result.failures:
        click.echo(f"  {failure}", err=True)
    if not result.ok:
        raise SystemExit(FAILURE)
    rich.print(f"[green]Suite {suite} passed[/green]")


@main.command(
    name="compare-metrics",
    help="Run the metric-dependent estimators under every metric of a config",
)
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@_common_options
def compare_metrics_command(
    config: str, out: Optional[str], jobs: int, seed: Optional[int], verbose: int
):
    import rich

    from .run import COMPARISON_FILE, ExperimentRunner, compare_metrics

    _setup_logging(verbose)
    cfg = _load(config, seed)
    if len(cfg.metrics) < 2:
        click.echo(
            f"Invalid config {config}:\n/metrics: compare-metrics needs at least 2 metrics",
            err=True,
        )
        raise SystemExit(CONFIG_ERROR)
    out_dir = _out_dir(out, cfg)
    runner = ExperimentRunner(cfg, out_dir, jobs=jobs)
    comparison = compare_metrics(runner)
    for row in comparison.rows:
        click.echo(f"{row['metric']}\t{row['estimator']}\t{row['headline']}")
    if comparison.compactified_minimal is not None:
        verdict = "attains" if comparison.compactified_minimal else "does not attain"
        click.echo(f"compactified metric {verdict} the minimum among those tested")
    if runner.failed:
        rich.print(f"[red]Some estimators failed; partial outputs in {out_dir}[/red]")
        raise SystemExit(FAILURE)
    rich.print(f"[green]Comparison written to {out_dir / COMPARISON_FILE}[/green]")
