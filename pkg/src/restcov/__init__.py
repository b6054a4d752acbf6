"""Black-box interface coverage for REST APIs.

Typical use::

    from restcov import load_spec, load_log, match_log, compute_report

    model = load_spec(open("openapi.yaml", "rb"))
    report = compute_report(model, match_log(model, load_log("run.jsonl")))
    print(report.operation.ratio)
"""

from .errors import (
    BindError,
    ExternalRef,
    LogWriteError,
    NotHar,
    ParseError,
    RestcovError,
    SchemaError,
    UnresolvableRef,
    UnsupportedVersion,
    UpstreamUnreachable,
)
from .matcher import MatchOutcome, MatchedInteraction, StatusClass, UnmatchedReason, match_log, match_operation
from .metrics import METRIC_NAMES, CoverageReport, MetricValue, compute_report
from .proxy import ProxyConfig, RecordingProxy, run_proxy
from .report import render, report_from_dict, report_to_dict
from .spec_model import ApiModel, OperationSpec, ParameterSpec, list_domain_limited_parameters, load_spec
from .traffic_log import Interaction, InteractionLog, load_log, read_har, read_jsonl, write_jsonl

__version__ = "0.1.0"

__all__ = [
    "ApiModel", "BindError", "CoverageReport", "ExternalRef", "Interaction", "InteractionLog",
    "LogWriteError", "METRIC_NAMES", "MatchOutcome", "MatchedInteraction", "MetricValue", "NotHar",
    "OperationSpec", "ParameterSpec", "ParseError", "ProxyConfig", "RecordingProxy", "RestcovError",
    "SchemaError", "StatusClass", "UnmatchedReason", "UnresolvableRef", "UnsupportedVersion",
    "UpstreamUnreachable", "compute_report", "list_domain_limited_parameters", "load_log", "load_spec",
    "match_log", "match_operation", "read_har", "read_jsonl", "render", "report_from_dict",
    "report_to_dict", "run_proxy", "write_jsonl",
]
