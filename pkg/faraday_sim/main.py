import functools
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

import click
import structlog

from faraday_sim import tasks
from faraday_sim.analysis import EnvelopeMethod
from faraday_sim.constants import CONFIG_ENV_VAR, DEFAULT_PRESET_FILE
from faraday_sim.definition import RunConfig
from faraday_sim.exceptions import FaradaySimError
from faraday_sim.runner import SimulationRunner
from faraday_sim.tasks.base import collect_tasks
from faraday_sim.utils.logs import configure_logging, reset_logging
from faraday_sim.utils.version import get_version_info

log = structlog.get_logger(__name__)

EXIT_IO_ERROR = 3
EXIT_UNEXPECTED = 2


def construct_log_file_name(sub_command: str, out_dir: Path) -> Path:
    file_name = f"faraday-sim-{sub_command}_{datetime.now():%Y-%m-%dT%H:%M:%S}.log"
    return Path(out_dir).joinpath(file_name)


def configure_logging_for_subcommand(log_file_name: Path) -> None:
    click.secho(f"Writing log to {log_file_name}", fg="yellow", err=True)
    configure_logging(log_file_name)


def config_option(func):
    """Decorator for adding '--config' and '--preset' to subcommands."""

    @click.option(
        "--config",
        "config_file",
        envvar=CONFIG_ENV_VAR,
        default=None,
        type=click.Path(dir_okay=False),
        help=f"YAML run configuration. [default: ${CONFIG_ENV_VAR}, else built-in defaults]",
    )
    @click.option(
        "--preset",
        default=str(DEFAULT_PRESET_FILE),
        type=click.Path(dir_okay=False),
        help="JSON species preset.  [default: Cs D2]",
    )
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)

    return wrapper


def output_options(func):
    """Decorator for adding '--out', '--seed', '--workers' and '--emit-plot' to subcommands."""

    @click.option(
        "--out",
        "out_dir",
        default=".",
        show_default=True,
        type=click.Path(file_okay=False),
        help="Directory receiving the CSV files, plot scripts and the log file.",
    )
    @click.option("--seed", type=int, default=None, help="Overrides polarimeter.rng_seed.")
    @click.option(
        "--workers",
        type=click.IntRange(min=1),
        default=1,
        show_default=True,
        help="Scan points run in parallel.",
    )
    @click.option("--emit-plot", is_flag=True, help="Write a gnuplot script next to every CSV.")
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)

    return wrapper


@click.group(invoke_without_command=True, context_settings={"max_content_width": 120})
@click.pass_context
def main(ctx):
    """Simulate Faraday-probed alkali spins under the nonlinear light shift."""
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


def run_(
    command: str,
    config_file: Optional[str],
    preset: str,
    out_dir: str,
    seed: Optional[int],
    workers: int,
    emit_plot: bool,
    *task_args,
    **task_kwargs,
) -> None:
    """Run one subcommand's task and exit.

    Calls :func:`sys.exit` when done, with the following status codes:

        0  success
        1  the configuration file, preset or scan definition is invalid
        2  a numerical step failed (integration, envelope extraction, fitting)
        3  a file could not be read or written
    """
    out_path = Path(out_dir)
    try:
        out_path.mkdir(parents=True, exist_ok=True)
    except OSError as ex:
        click.secho(f"Cannot create output directory {out_path}: {ex}", fg="red", err=True)
        sys.exit(EXIT_IO_ERROR)

    configure_logging_for_subcommand(construct_log_file_name(command, out_path))
    log.info("Faraday simulator version:", version_info=get_version_info())

    # Dynamically import the task classes from the faraday_sim.tasks package.
    collect_tasks(tasks)

    try:
        config = RunConfig.from_file(
            Path(config_file) if config_file else None, preset_path=Path(preset), seed=seed
        )
        runner = SimulationRunner(
            config, out_path, command, workers=workers, emit_plot=emit_plot
        )
        output = runner.run_task(command, *task_args, **task_kwargs)
    except FaradaySimError as ex:
        log.error("Run finished", result="error", error_type=type(ex).__name__, message=str(ex))
        click.secho(str(ex), fg="red", err=True)
        exit_code = ex.exit_code
    except OSError as ex:
        log.error("Run finished", result="I/O error", message=str(ex))
        click.secho(str(ex), fg="red", err=True)
        exit_code = EXIT_IO_ERROR
    except Exception:  # pylint: disable=broad-except
        log.exception("Unexpected exception while running", command=command)
        exit_code = EXIT_UNEXPECTED
    else:
        log.info("Run finished", result="success", output=str(output))
        exit_code = 0
    finally:
        reset_logging()
    sys.exit(exit_code)


@main.command(name="simulate")
@config_option
@output_options
def simulate(**kwargs):
    """Simulate one configuration and write trace.csv."""
    run_("simulate", **kwargs)


@main.command(name="scan-tau")
@config_option
@output_options
def scan_tau(**kwargs):
    """Collapse and revival times against the scattering time."""
    run_("scan-tau", **kwargs)


@main.command(name="scan-angle")
@config_option
@output_options
def scan_angle(**kwargs):
    """1/e decay time and envelope shape against the polarization angle."""
    run_("scan-angle", **kwargs)


@main.command(name="scan-critical")
@config_option
@output_options
def scan_critical(**kwargs):
    """Decay at the critical angle, homogeneous and inhomogeneous."""
    run_("scan-critical", **kwargs)


@main.command(name="fit")
@click.argument("trace", type=click.Path(dir_okay=False))
@click.option(
    "--envelope-method",
    type=click.Choice([method.value for method in EnvelopeMethod]),
    default=None,
    help="Overrides the method recorded in the trace header.",
)
@config_option
@output_options
def fit(trace, envelope_method, **kwargs):
    """Re-analyse a stored trace.csv and write fit.csv."""
    run_("fit", **kwargs, trace_path=Path(trace), envelope_method=envelope_method)


@main.command(name="version")
@click.option(
    "--short",
    is_flag=True,
    help="Only display the faraday-sim version, without the numerical stack.",
)
def version(short):
    """Print version information and exit."""
    if short:
        click.echo(get_version_info()["faraday_sim"])
    else:
        click.echo(json.dumps(get_version_info(), indent=2))


if __name__ == "__main__":
    main()  # pylint: disable=no-value-for-parameter
