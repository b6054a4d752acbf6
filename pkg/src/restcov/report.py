"""Serialize a :class:`CoverageReport` as JSON, CSV or a text table."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, fields
from fractions import Fraction
from typing import Any, Mapping

from .metrics import (
    METRIC_NAMES,
    CoverageReport,
    Diagnostics,
    MetricStatus,
    MetricValue,
    OperationDetail,
    UndocumentedStatus,
)

REPORT_VERSION = 1

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_BELOW_THRESHOLD = 2

FORMATS = ("json", "csv", "table")


def metric_to_dict(value: MetricValue) -> dict[str, Any]:
    return {
        "status": value.status.value,
        "numerator": value.numerator,
        "denominator": value.denominator,
        "ratio": float(value.ratio) if value.is_computed else None,
        "reason": value.reason,
    }


def report_to_dict(report: CoverageReport) -> dict[str, Any]:
    return {
        "restcov_report_version": REPORT_VERSION,
        "metrics": {name: metric_to_dict(report.metrics[name]) for name in METRIC_NAMES},
        "per_operation": [asdict(d) for d in report.per_operation],
        "diagnostics": asdict(report.diagnostics),
    }


def _tuples(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_tuples(v) for v in value)
    return value


def report_from_dict(data: Mapping[str, Any]) -> CoverageReport:
    version = data.get("restcov_report_version")
    if version != REPORT_VERSION:
        raise ValueError(f"unsupported report version {version!r}")
    metrics = {
        name: MetricValue(
            MetricStatus(raw["status"]),
            numerator=raw["numerator"],
            denominator=raw["denominator"],
            reason=raw["reason"],
        )
        for name, raw in data["metrics"].items()
    }
    details = tuple(
        OperationDetail(**{f.name: _tuples(raw[f.name]) for f in fields(OperationDetail)})
        for raw in data["per_operation"]
    )
    diag = dict(data["diagnostics"])
    diag["undocumented_status_codes"] = tuple(UndocumentedStatus(**u) for u in diag["undocumented_status_codes"])
    for key in ("undocumented_parameters", "excluded_status_keys",
                "wildcard_request_operations", "wildcard_response_operations"):
        diag[key] = _tuples(diag[key])
    return CoverageReport(metrics=metrics, per_operation=details, diagnostics=Diagnostics(**diag))


def _cell(value: MetricValue) -> str:
    if not value.is_computed:
        return f"n/a ({value.reason})"
    return f"{value.numerator}/{value.denominator} {float(value.ratio) * 100:.1f}%"


_GREEN, _YELLOW, _RED, _RESET = "\x1b[32m", "\x1b[33m", "\x1b[31m", "\x1b[0m"


def _colored(text: str, value: MetricValue) -> str:
    if not value.is_computed:
        color = _YELLOW
    elif value.numerator == value.denominator:
        color = _GREEN
    elif value.numerator == 0:
        color = _RED
    else:
        return text
    return f"{color}{text}{_RESET}"


def render_table(report: CoverageReport, color: bool = False) -> str:
    width = max(len(n) for n in METRIC_NAMES)
    lines = [f"{'metric':<{width}}  coverage", f"{'-' * width}  {'-' * 8}"]
    for name in METRIC_NAMES:
        value = report.metrics[name]
        cell = _cell(value)
        lines.append(f"{name:<{width}}  {_colored(cell, value) if color else cell}")
    diag = report.diagnostics
    lines.append("")
    lines.append(f"interactions: {diag.total_interactions} total, {diag.matched_interactions} matched")
    unmatched = ", ".join(f"{reason}={n}" for reason, n in diag.unmatched.items() if n)
    if unmatched:
        lines.append(f"unmatched: {unmatched}")
    for u in diag.undocumented_status_codes:
        note = f" (described by '{u.covered_by}')" if u.covered_by else ""
        lines.append(f"undocumented status {u.status} on {u.operation}{note}")
    return "\n".join(lines) + "\n"


def render_csv(report: CoverageReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "status", "numerator", "denominator", "ratio", "reason"])
    for name in METRIC_NAMES:
        value = report.metrics[name]
        ratio = f"{float(value.ratio):.6f}" if value.is_computed else ""
        writer.writerow([name, value.status.value, value.numerator, value.denominator, ratio, value.reason or ""])
    writer.writerow([])
    writer.writerow([
        "operation", "operation_id", "hits",
        "parameters_covered", "parameters_total",
        "values_covered", "values_total",
        "status_codes_documented", "status_codes_observed",
        "request_media_documented", "request_media_observed",
        "response_media_documented", "response_media_observed",
    ])
    for d in report.per_operation:
        writer.writerow([
            d.operation, d.operation_id or "", d.hits,
            len(d.parameters_covered), len(d.parameters_covered) + len(d.parameters_uncovered),
            len(d.values_covered), len(d.values_covered) + len(d.values_uncovered),
            " ".join(d.status_keys_documented), " ".join(map(str, d.status_codes_observed)),
            " ".join(d.request_media_documented), " ".join(d.request_media_observed),
            " ".join(d.response_media_documented), " ".join(d.response_media_observed),
        ])
    return buf.getvalue()


def render(report: CoverageReport, fmt: str = "json", color: bool = False) -> bytes:
    if fmt == "json":
        text = json.dumps(report_to_dict(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    elif fmt == "csv":
        text = render_csv(report)
    elif fmt == "table":
        text = render_table(report, color=color)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    return text.encode("utf-8")


def threshold_failures(report: CoverageReport, thresholds: Mapping[str, float]) -> list[str]:
    failures = []
    for name, minimum in sorted(thresholds.items()):
        value = report.metrics[name]
        if not value.is_computed:
            failures.append(f"{name}: not computable ({value.reason}), minimum {minimum}")
        elif value.ratio < Fraction(str(minimum)):
            failures.append(f"{name}: {float(value.ratio):.4f} below minimum {minimum}")
    return failures


def exit_code_for(report: CoverageReport, thresholds: Mapping[str, float]) -> int:
    return EXIT_BELOW_THRESHOLD if threshold_failures(report, thresholds) else EXIT_OK
