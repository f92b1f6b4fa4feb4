"""Command line front end.

Exit statuses: 0 when every check passes, 1 when a check fails, 2 for an invalid scenario
or an unwritable output path, 3 for a numerical abort.
"""
import logging
import sys

import click

from ..errors import ChartError, CheckFailure, NumericalAbort, ScenarioError
from ..options import get_options
from .report import emit_report
from .scenario import load_scenario, schema_json
from .tasks import convergence_result, execute

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_SCENARIO = 2
EXIT_NUMERICAL = 3


def _diagnose(kind, message):
    click.echo(f"ahflow: {kind}: {message}", err=True)


def run_scenario(path, levels=None, options=None):
    """Load, execute and report one scenario; returns the exit status."""
    options = get_options(options)
    try:
        scenario = load_scenario(path)
        if levels is not None:
            if not scenario.is_grid_based:
                raise ScenarioError(f"task {scenario.task} is not grid-based; convergence needs a flow-pde scenario")
            result = convergence_result(scenario, levels, options)
        else:
            result = execute(scenario, options)
        summary = emit_report(scenario, result)
    except (ScenarioError, ChartError) as e:
        _diagnose("invalid scenario", e)
        return EXIT_SCENARIO
    except NumericalAbort as e:
        _diagnose(f"numerical abort ({type(e).__name__})", e)
        return EXIT_NUMERICAL
    except CheckFailure as e:
        _diagnose("check failed", e.check_name)
        return EXIT_CHECK_FAILED
    except OSError as e:
        _diagnose("cannot write report", e)
        return EXIT_SCENARIO
    for failure in result.failures():
        _diagnose("check failed", f"{failure.name}: {failure.detail}" if failure.detail else failure.name)
    click.echo(str(summary))
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level.")
def main(verbose):
    """Verification and evolution runs for asymptotically hyperbolic Ricci flow."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
def run(config):
    """Run the scenario in CONFIG and write its report."""
    sys.exit(run_scenario(config))


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--levels", type=click.IntRange(min=2), default=3, show_default=True, help="Refinement levels.")
def converge(config, levels):
    """Rerun the grid-based scenario in CONFIG at successively halved spacings."""
    sys.exit(run_scenario(config, levels=levels))


@main.command()
def schema():
    """Print the scenario schema."""
    click.echo(schema_json())


__all__ = ["main", "run_scenario"]
