"""``restcov`` command line: ``analyze`` a traffic log, or record one with ``proxy``.

Exit codes: 0 success, 1 input error, 2 a ``--min`` threshold was missed.
"""

from __future__ import annotations

import logging
import os
import signal
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path

import click

from .errors import RestcovError
from .matcher import match_log
from .metrics import METRIC_NAMES, CoverageReport, compute_report
from .proxy import DEFAULT_MAX_BODY_BYTES, ProxyConfig, run_proxy
from .report import EXIT_BELOW_THRESHOLD, EXIT_INPUT_ERROR, EXIT_OK, FORMATS, render, threshold_failures
from .spec_model import ApiModel, load_spec
from .traffic_log import InteractionLog, load_log


class InputError(RestcovError):
    pass


@dataclass(frozen=True)
class RunConfig:
    spec_path: Path
    log_paths: tuple[Path, ...]
    output_format: str = "json"
    output_path: Path | None = None
    thresholds: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.log_paths:
            raise InputError("at least one --log is required")
        if self.output_format not in FORMATS:
            raise InputError(f"unknown format {self.output_format!r}")
        for name, minimum in self.thresholds.items():
            if name not in METRIC_NAMES:
                raise InputError(f"unknown metric {name!r} in threshold; expected one of {', '.join(METRIC_NAMES)}")
            if not 0.0 <= minimum <= 1.0:
                raise InputError(f"threshold for {name} must be within [0, 1], got {minimum}")


def parse_threshold(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise InputError(f"threshold {text!r} must look like METRIC=RATIO")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise InputError(f"threshold {text!r}: {value!r} is not a number") from None


def analyze(spec_path: Path, log_paths: tuple[Path, ...]) -> tuple[ApiModel, InteractionLog, CoverageReport]:
    for path in (spec_path, *log_paths):
        if not path.is_file():
            raise InputError(f"no such file: {path}")
    with open(spec_path, "rb") as fh:
        model = load_spec(fh)
    log = InteractionLog()
    for path in log_paths:
        log = log + load_log(path)
    report = compute_report(model, match_log(model, log))
    return model, log, report


def run_analyze(config: RunConfig, color: bool = False) -> int:
    try:
        model, log, report = analyze(config.spec_path, config.log_paths)
    except (RestcovError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT_ERROR
    for warning in model.warnings + log.warnings:
        click.echo(f"warning: {warning}", err=True)

    payload = render(report, config.output_format, color=color and config.output_path is None)
    if config.output_path is not None:
        config.output_path.write_bytes(payload)
    else:
        click.echo(payload.decode("utf-8"), nl=False)

    failures = threshold_failures(report, config.thresholds)
    for failure in failures:
        click.echo(f"threshold: {failure}", err=True)
    return EXIT_BELOW_THRESHOLD if failures else EXIT_OK


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose: bool) -> None:
    """Black-box coverage of a REST API from its OpenAPI document and recorded traffic."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@cli.command("analyze")
@click.option("--spec", "spec_path", required=True, type=click.Path(path_type=Path), help="OpenAPI 3 document (JSON or YAML).")
@click.option("--log", "log_paths", required=True, multiple=True, type=click.Path(path_type=Path),
              help="HAR or JSONL traffic log; repeat to concatenate.")
@click.option("--format", "output_format", type=click.Choice(FORMATS), default="json", show_default=True)
@click.option("--output", "output_path", type=click.Path(path_type=Path), default=None, help="Write the report here instead of stdout.")
@click.option("--min", "minimums", multiple=True, metavar="METRIC=RATIO", help="Fail with exit code 2 below this ratio.")
def analyze_command(spec_path, log_paths, output_format, output_path, minimums) -> int:
    """Compute the coverage report."""
    try:
        config = RunConfig(
            spec_path=spec_path,
            log_paths=tuple(log_paths),
            output_format=output_format,
            output_path=output_path,
            thresholds=dict(parse_threshold(m) for m in minimums),
        )
    except InputError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT_ERROR
    use_color = output_format == "table" and "RESTCOV_NO_COLOR" not in os.environ and sys.stdout.isatty()
    return run_analyze(config, color=use_color)


@cli.command("proxy")
@click.option("--listen", required=True, metavar="HOST:PORT")
@click.option("--upstream", required=True, metavar="URL", help="Base URL of the API under test.")
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path), help="JSONL file to append to.")
@click.option("--max-body-bytes", type=int, default=DEFAULT_MAX_BODY_BYTES, show_default=True)
def proxy_command(listen, upstream, log_path, max_body_bytes) -> int:
    """Run a recording reverse proxy until interrupted."""
    try:
        config = ProxyConfig(listen, upstream, log_path, max_body_bytes)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT_ERROR
    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    click.echo(f"recording {listen} -> {upstream} into {log_path}", err=True)
    try:
        summary = run_proxy(config, stop)
    except RestcovError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT_ERROR
    click.echo(f"forwarded {summary.requests_forwarded} requests, logged {summary.bytes_logged} bytes", err=True)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Console entry point; maps click usage errors to exit code 1 so 2 stays reserved for thresholds."""
    try:
        code = cli.main(args=argv, prog_name="restcov", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        code = EXIT_INPUT_ERROR
    except click.ClickException as exc:
        exc.show()
        code = EXIT_INPUT_ERROR
    return code if isinstance(code, int) else EXIT_OK
