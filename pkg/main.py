"""
Command-line entry point: scaffold, validate, diagram, screen, analyze delays, report
"""

import logging
import sys
from pathlib import Path

import click

from src.config import configure_logging, load_settings
from src.database import get_screening_history, init_database, save_screening_run
from src.delay import bin_delays, load_delay_log, percent_text, summarize
from src.docio import load_document, render_report, save_document, skeleton_document
from src.errors import (
    BaselineFailed,
    DelayError,
    DocumentError,
    HtdError,
    ParseError,
    RunnerError,
    ScreeningError,
    UnknownId,
)
from src.htd import factors_for_poi, propagate_target_metric, validate_document
from src.models import HtdDocument
from src.runners import execute_design, make_runner
from src.sbd import coverage_check, to_dot
from src.screening import RULES, elementary_effects, generate_oat_design, rank_factors, writeback_ranking
from src.uncertainty import describe

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_RUNNER = 4

DOC_PATH = click.Path(dir_okay=False, path_type=Path)


class FindingsFound(HtdError):
    """Document has validation errors; the findings were already printed"""


def _load_valid(path: Path) -> HtdDocument:
    doc = load_document(path)
    report = validate_document(doc)
    if not report.ok:
        for finding in report.findings:
            click.echo(str(finding))
        click.echo(report.summary())
        raise FindingsFound(f"{path} has validation errors")
    return doc


def _fmt(value: float) -> str:
    return f"{value:.6g}"


@click.group()
@click.option("--log-level", default=None, help="Logging level for stderr (default HTD_LOG_LEVEL or WARNING)")
@click.pass_context
def cli(ctx, log_level):
    """Structured uncertainty annotation for holistic test descriptions."""
    settings = load_settings()
    configure_logging(log_level or settings.log_level)
    ctx.obj = settings


@cli.command()
@click.argument("path", type=DOC_PATH)
@click.option(
    "--setup-type",
    type=click.Choice(["software_based", "hardware_based", "mixed"]),
    default="software_based",
    show_default=True,
)
def init(path, setup_type):
    """Write a skeleton document to PATH."""
    if path.exists():
        click.echo(f"error: {path} already exists", err=True)
        return EXIT_IO
    save_document(skeleton_document(setup_type), path)
    click.echo(f"wrote {path}")
    return EXIT_OK


@cli.command()
@click.argument("doc", type=DOC_PATH)
def validate(doc):
    """Check a document and print its findings."""
    report = validate_document(load_document(doc))
    for finding in report.findings:
        click.echo(str(finding))
    click.echo(report.summary())
    return EXIT_OK if report.ok else EXIT_FINDINGS


@cli.command()
@click.argument("doc", type=DOC_PATH)
@click.option("--dot", "dot_path", required=True, type=DOC_PATH, help="DOT output file")
def sbd(doc, dot_path):
    """Export the system breakdown diagram as DOT."""
    document = _load_valid(doc)
    dot_path.write_text(to_dot(document.sbd), encoding="utf-8")
    click.echo(f"wrote {dot_path}")
    uncovered = coverage_check(document.sbd, document.parameters)
    click.echo(f"uncovered leaves: {', '.join(uncovered) if uncovered else 'none'}")
    return EXIT_OK


@cli.command()
@click.argument("doc", type=DOC_PATH)
@click.option("--poi", "poi_id", required=True, help="PoI id")
def factors(doc, poi_id):
    """List the factors assigned to a PoI."""
    document = _load_valid(doc)
    params = factors_for_poi(document, poi_id)
    for param in params:
        selected = "selected" if param.screening_selected else "-"
        click.echo(
            f"{param.id}\t{param.name}\t{param.framing}\t{describe(param.representation)}"
            f"\t[{_fmt(param.range.lo)}, {_fmt(param.range.hi)}] {param.range.unit}\t{selected}"
        )
    click.echo(f"{len(params)} factors assigned to {poi_id}")
    return EXIT_OK


@cli.command()
@click.argument("doc", type=DOC_PATH)
@click.option("--poi", "poi_id", required=True, help="PoI id")
@click.option("--runner", "runner_spec", required=True, help="Model command, or builtin:linear:<metric>=<expr>;...")
@click.option("--rule", type=click.Choice(RULES), default="midpoint_to_high", show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=int, default=None, help="Base seed passed to the runner as HTD_RUN_SEED")
@click.option("--metric", default=None, help="Metric whose ranking is written back (default: first target metric)")
@click.option("--write", is_flag=True, help="Store the ranking in the document")
@click.option("--history-db", default=None, help="SQLAlchemy URL of the screening history")
@click.pass_obj
def screen(settings, doc, poi_id, runner_spec, rule, jobs, seed, metric, write, history_db):
    """Run an OAT screening of a PoI's factors."""
    document = _load_valid(doc)
    poi = document.poi(poi_id)
    metrics = [target.name for target in poi.target_metrics]
    if not metrics:
        raise ScreeningError(f"{poi_id} has no target metrics")
    metric = metric or metrics[0]
    poi.metric(metric)

    runner = make_runner(runner_spec, timeout=settings.runner_timeout, seed=seed)
    design = generate_oat_design(factors_for_poi(document, poi_id), metrics, rule)
    design = execute_design(design, runner, parallelism=jobs)
    effects = elementary_effects(design)
    rankings = {name: rank_factors(effects, name) for name in metrics}
    failed = len(design.failed_runs())

    click.echo(f"{poi_id}: {len(design.runs)} runs ({failed} failed), rule {rule}")
    for name, ranking in rankings.items():
        click.echo("")
        click.echo(f"ranking on {name}")
        click.echo("rank\tfactor\tabs(EE)")
        for entry in ranking.entries:
            click.echo(f"{entry.rank}\t{entry.param}\t{_fmt(entry.magnitude)}")
    for param_id in effects.skipped:
        click.echo(f"skipped {param_id}: run failed")

    click.echo("")
    if write:
        save_document(writeback_ranking(document, poi_id, rankings[metric]), doc)
        click.echo(f"wrote ranking on {metric} to {doc}")
    else:
        click.echo("dry run: pass --write to store the ranking")

    database_url = history_db or settings.history_db
    if database_url:
        init_database(database_url)
        if not save_screening_run(
            document.id, poi_id, rankings[metric], rule, runner_spec, len(design.runs) - failed, failed
        ):
            logger.warning("screening run not recorded in %s", database_url)
    return EXIT_OK


@cli.command()
@click.argument("csv", type=DOC_PATH)
@click.option("--bins", type=click.IntRange(min=1), default=None, help="Number of bins (default HTD_DEFAULT_BINS)")
@click.option("--report", "full", is_flag=True, help="Also print every bin")
@click.pass_obj
def delay(settings, csv, bins, full):
    """Characterize a recorded delay log."""
    samples = load_delay_log(csv)
    histogram = bin_delays(samples, bins or settings.default_bins)
    summary = summarize(histogram, samples)
    lo, hi = summary.mode_bin.edges
    click.echo(f"samples: {summary.total}")
    click.echo(f"range: [{summary.min:.4f}, {summary.max:.4f}] ms in {summary.n_bins} bins")
    click.echo(f"mean: {summary.mean:.4f} ms  median: {summary.median:.4f} ms  std: {summary.std:.4f} ms")
    click.echo(f"p05: {summary.p05:.4f} ms  p95: {summary.p95:.4f} ms")
    click.echo(
        f"mode bin {summary.mode_bin.index} [{lo:.4f}, {hi:.4f}] ms: "
        f"ρ = {percent_text(summary.mode_bin.rel_prob)} %"
    )
    click.echo(
        f"first bin ρ = {percent_text(summary.first_bin_prob)} %, "
        f"last bin ρ = {percent_text(summary.last_bin_prob)} %"
    )
    if full:
        click.echo("bin\tlower\tupper\tcount\tρ (%)")
        for i, count in enumerate(histogram.counts):
            b_lo, b_hi = histogram.edges(i)
            click.echo(f"{i}\t{b_lo:.4f}\t{b_hi:.4f}\t{count}\t{percent_text(histogram.rel_prob_exact(i))}")
    return EXIT_OK


@cli.command()
@click.argument("doc", type=DOC_PATH)
@click.option("--delay", "delay_csv", type=DOC_PATH, default=None, help="Delay log to characterize")
@click.option("--bins", type=click.IntRange(min=1), default=None)
@click.option("-o", "--output", type=DOC_PATH, default=None, help="Markdown output file (default stdout)")
@click.pass_obj
def report(settings, doc, delay_csv, bins, output):
    """Render the consolidated uncertainty report."""
    document = _load_valid(doc)
    summary = histogram = None
    if delay_csv is not None:
        samples = load_delay_log(delay_csv)
        histogram = bin_delays(samples, bins or settings.default_bins)
        summary = summarize(histogram, samples)
    text = render_report(document, summary, histogram)
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    return EXIT_OK


@cli.command()
@click.argument("doc", type=DOC_PATH)
@click.option("--poi", "poi_id", required=True)
@click.option("--metric", required=True, help="Target metric with a formula")
@click.option("--samples", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
def propagate(settings, doc, poi_id, metric, samples, seed):
    """Propagate parameter uncertainty through a target-metric formula."""
    document = _load_valid(doc)
    result = propagate_target_metric(document, poi_id, metric, n=samples, seed=seed, k=settings.normal_k)
    mc = result.monte_carlo
    click.echo(f"{poi_id} {metric} = {result.formula}")
    click.echo(f"interval: [{_fmt(result.interval.lo)}, {_fmt(result.interval.hi)}]")
    click.echo(
        f"monte-carlo n={samples} seed={seed}: mean {_fmt(mc.mean())}, std {_fmt(mc.std())}, "
        f"p05 {_fmt(mc.quantile(0.05))}, p95 {_fmt(mc.quantile(0.95))}, "
        f"range [{_fmt(mc.min)}, {_fmt(mc.max)}]"
    )
    if mc.excluded:
        click.echo(f"excluded {mc.excluded} samples (division by zero)")
    return EXIT_OK


@cli.command()
@click.option("--db", "database_url", default=None, help="SQLAlchemy URL (default HTD_HISTORY_DB)")
@click.option("--limit", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--document", "document_id", default=None, help="Only runs of this document id")
@click.pass_obj
def history(settings, database_url, limit, document_id):
    """Show recorded screening runs, newest first."""
    database_url = database_url or settings.history_db
    if not database_url:
        raise click.UsageError("no history database: pass --db or set HTD_HISTORY_DB")
    init_database(database_url)
    records = get_screening_history(limit=limit, document_id=document_id)
    if not records:
        click.echo("no screening runs recorded")
    for record in records:
        click.echo(
            f"{record['created_on']}\t{record['document_id']}\t{record['poi_id']}\t{record['metric']}"
            f"\t{record['rule']}\t{record['runs_ok']} ok/{record['runs_failed']} failed"
            f"\ttop: {record['top_factor'] or '-'}"
        )
    return EXIT_OK


def _exit_code(err: Exception) -> int:
    if isinstance(err, (DocumentError, DelayError, OSError, UnicodeError)):
        return EXIT_IO
    if isinstance(err, (UnknownId, ParseError, ValueError)):
        return EXIT_USAGE
    if isinstance(err, (RunnerError, BaselineFailed)):
        return EXIT_RUNNER
    return EXIT_FINDINGS


def run_cli(argv: list[str] | None = None) -> int:
    """
    Run one command and translate its outcome into an exit code

    Args:
        argv: Arguments without the program name (default sys.argv[1:])

    Returns:
        int: 0 success, 1 findings or screening precondition, 2 usage,
        3 I/O or unreadable document, 4 runner failure
    """
    try:
        code = cli.main(args=argv, prog_name="htd", standalone_mode=False)
    except click.UsageError as err:
        err.show()
        return EXIT_USAGE
    except click.ClickException as err:
        err.show()
        return EXIT_IO if isinstance(err, click.FileError) else err.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_FINDINGS
    except FindingsFound as err:
        click.echo(f"error: {err}", err=True)
        return EXIT_FINDINGS
    except (HtdError, OSError, ValueError) as err:
        click.echo(f"error: {err}", err=True)
        return _exit_code(err)
    return code if isinstance(code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(run_cli())
