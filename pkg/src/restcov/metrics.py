"""The eight interface-coverage metrics.

Every metric is a ratio of covered documented elements to all documented
elements, pooled across operations (micro-average).  A metric whose element
set is empty is reported as not computable rather than as 0 or 1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .matcher import MatchOutcome, StatusClass, UnmatchedReason
from .spec_model import ApiModel, DomainKind, OperationSpec, ParameterSpec

METRIC_NAMES = (
    "path",
    "operation",
    "parameter",
    "parameter_value",
    "request_content_type",
    "status_code_class",
    "status_code",
    "response_content_type",
)


class MetricStatus(str, Enum):
    COMPUTED = "computed"
    NOT_COMPUTABLE = "not_computable"


@dataclass(frozen=True)
class MetricValue:
    status: MetricStatus
    numerator: int = 0
    denominator: int = 0
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.status is MetricStatus.COMPUTED:
            if not 0 <= self.numerator <= self.denominator or self.denominator <= 0:
                raise ValueError(f"invalid ratio {self.numerator}/{self.denominator}")

    @classmethod
    def computed(cls, numerator: int, denominator: int) -> MetricValue:
        return cls(MetricStatus.COMPUTED, numerator, denominator)

    @classmethod
    def not_computable(cls, reason: str) -> MetricValue:
        return cls(MetricStatus.NOT_COMPUTABLE, reason=reason)

    @property
    def is_computed(self) -> bool:
        return self.status is MetricStatus.COMPUTED

    @property
    def ratio(self) -> Fraction | None:
        return Fraction(self.numerator, self.denominator) if self.is_computed else None


def _ratio(covered: int, total: int, reason: str) -> MetricValue:
    return MetricValue.computed(covered, total) if total else MetricValue.not_computable(reason)


@dataclass(frozen=True)
class OperationDetail:
    operation: str
    operation_id: str | None
    hits: int
    parameters_covered: tuple[str, ...]
    parameters_uncovered: tuple[str, ...]
    values_covered: tuple[str, ...]
    values_uncovered: tuple[str, ...]
    request_media_documented: tuple[str, ...]
    request_media_observed: tuple[str, ...]
    request_media_wildcard: bool
    response_media_documented: tuple[str, ...]
    response_media_observed: tuple[str, ...]
    response_media_wildcard: bool
    status_keys_documented: tuple[str, ...]
    status_codes_observed: tuple[int, ...]
    status_classes_observed: tuple[str, ...]


@dataclass(frozen=True)
class UndocumentedStatus:
    operation: str
    status: int
    # the non-numeric response key ("default", "4XX") that would describe it, if any
    covered_by: str | None = None


@dataclass(frozen=True)
class Diagnostics:
    total_interactions: int = 0
    matched_interactions: int = 0
    unmatched: dict[str, int] = field(default_factory=dict)
    undocumented_status_codes: tuple[UndocumentedStatus, ...] = ()
    undocumented_parameters: tuple[tuple[str, str], ...] = ()
    excluded_status_keys: tuple[tuple[str, str], ...] = ()
    wildcard_request_operations: tuple[str, ...] = ()
    wildcard_response_operations: tuple[str, ...] = ()


@dataclass(frozen=True)
class CoverageReport:
    metrics: dict[str, MetricValue]
    per_operation: tuple[OperationDetail, ...]
    diagnostics: Diagnostics

    @property
    def path(self) -> MetricValue:
        return self.metrics["path"]

    @property
    def operation(self) -> MetricValue:
        return self.metrics["operation"]

    @property
    def parameter(self) -> MetricValue:
        return self.metrics["parameter"]

    @property
    def parameter_value(self) -> MetricValue:
        return self.metrics["parameter_value"]

    @property
    def request_content_type(self) -> MetricValue:
        return self.metrics["request_content_type"]

    @property
    def status_code_class(self) -> MetricValue:
        return self.metrics["status_code_class"]

    @property
    def status_code(self) -> MetricValue:
        return self.metrics["status_code"]

    @property
    def response_content_type(self) -> MetricValue:
        return self.metrics["response_content_type"]


class _Observed:
    """Everything the matched traffic exercised for one operation."""

    def __init__(self) -> None:
        self.hits = 0
        self.params: set[tuple[str, str]] = set()
        self.values: dict[tuple[str, str], set[str]] = {}
        self.request_media: set[str] = set()
        self.response_media: set[str] = set()
        self.statuses: set[int] = set()
        self.classes: set[StatusClass] = set()
        self.undocumented: set[str] = set()


def _observe(outcome: MatchOutcome) -> dict[tuple[str, str], _Observed]:
    seen: dict[tuple[str, str], _Observed] = {}
    for m in outcome.matched:
        obs = seen.setdefault(m.operation.key, _Observed())
        obs.hits += 1
        for o in m.observed_params:
            obs.params.add(o.spec.key)
            obs.values.setdefault(o.spec.key, set()).add(o.raw_value)
        if m.request_media_type:
            obs.request_media.add(m.request_media_type)
        if m.response_media_type:
            obs.response_media.add(m.response_media_type)
        obs.statuses.add(m.interaction.status)
        obs.classes.add(m.status_class)
        obs.undocumented.update(m.undocumented_params)
    return seen


_EMPTY = _Observed()


def _value_seen(param: ParameterSpec, literal: str, observed: set[str]) -> bool:
    if param.domain.kind is DomainKind.BOOLEAN:
        return literal in {v.lower() for v in observed}
    return literal in observed


def _value_elements(op: OperationSpec, obs: _Observed) -> list[tuple[str, bool]]:
    elements = []
    for p in op.parameters:
        if not p.domain.is_limited:
            continue
        observed = obs.values.get(p.key, set())
        for literal in p.domain.literals:
            elements.append((f"{p.location}:{p.name}={literal}", _value_seen(p, literal, observed)))
    return elements


def path_coverage(model: ApiModel, outcome: MatchOutcome) -> MetricValue:
    templates = set(model.path_templates)
    hit = {m.operation.path_template for m in outcome.matched}
    return _ratio(len(templates & hit), len(templates), "no documented paths")


def operation_coverage(model: ApiModel, outcome: MatchOutcome) -> MetricValue:
    ops = {op.key for op in model.operations}
    hit = {m.operation.key for m in outcome.matched}
    return _ratio(len(ops & hit), len(ops), "no documented operations")


def parameter_coverage(model: ApiModel, outcome: MatchOutcome) -> MetricValue:
    seen = _observe(outcome)
    total = covered = 0
    for op in model.operations:
        obs = seen.get(op.key, _EMPTY)
        total += len(op.parameters)
        covered += sum(p.key in obs.params for p in op.parameters)
    return _ratio(covered, total, "no documented parameters")


def parameter_value_coverage(model: ApiModel, outcome: MatchOutcome) -> MetricValue:
    seen = _observe(outcome)
    total = covered = 0
    for op in model.operations:
        for _, hit in _value_elements(op, seen.get(op.key, _EMPTY)):
            total += 1
            covered += hit
    return _ratio(covered, total, "no domain-limited parameters")


def _content_type_coverage(model: ApiModel, outcome: MatchOutcome, side: str) -> MetricValue:
    seen = _observe(outcome)
    total = covered = 0
    wildcarded = False
    for op in model.operations:
        documented = op.request_media_types if side == "request" else op.response_media_types
        if not documented:
            continue
        if documented.has_wildcard:
            wildcarded = True
            continue
        obs = seen.get(op.key, _EMPTY)
        observed = obs.request_media if side == "request" else obs.response_media
        total += len(documented.media_types)
        covered += sum(mt in observed for mt in documented)
    if wildcarded:
        reason = f"every documented {side} content-type set contains a wildcard"
    else:
        reason = f"no documented {side} content-types"
    return _ratio(covered, total, reason)


def request_content_type_coverage(model: ApiModel, outcome: MatchOutcome) -> MetricValue:
    return _content_type_coverage(model, outcome, "request")


def response_content_type_coverage(model: ApiModel, outcome: MatchOutcome) -> MetricValue:
    return _content_type_coverage(model, outcome, "response")


def status_code_class_coverage(outcome: MatchOutcome) -> MetricValue:
    classes = {m.status_class for m in outcome.matched}
    return MetricValue.computed(len(classes & {StatusClass.CORRECT, StatusClass.ERRONEOUS}), 2)


def status_code_coverage(model: ApiModel, outcome: MatchOutcome) -> MetricValue:
    seen = _observe(outcome)
    total = covered = 0
    for op in model.operations:
        codes = op.documented_status_codes
        statuses = seen.get(op.key, _EMPTY).statuses
        total += len(codes)
        covered += sum(code in statuses for code in codes)
    return _ratio(covered, total, "no numeric status codes documented")


def _covering_key(op: OperationSpec, status: int) -> str | None:
    keys = {r.status_key for r in op.responses}
    range_key = f"{status // 100}XX"
    if range_key in keys:
        return range_key
    return "default" if "default" in keys else None


def compute_report(model: ApiModel, outcome: MatchOutcome) -> CoverageReport:
    metrics = {
        "path": path_coverage(model, outcome),
        "operation": operation_coverage(model, outcome),
        "parameter": parameter_coverage(model, outcome),
        "parameter_value": parameter_value_coverage(model, outcome),
        "request_content_type": request_content_type_coverage(model, outcome),
        "status_code_class": status_code_class_coverage(outcome),
        "status_code": status_code_coverage(model, outcome),
        "response_content_type": response_content_type_coverage(model, outcome),
    }

    seen = _observe(outcome)
    details = []
    undocumented_status = []
    undocumented_params = []
    excluded_keys = []
    wildcard_req = []
    wildcard_resp = []
    for op in model.operations:
        obs = seen.get(op.key, _EMPTY)
        values = _value_elements(op, obs)
        documented_codes = set(op.documented_status_codes)
        for status in sorted(obs.statuses - documented_codes):
            undocumented_status.append(UndocumentedStatus(op.label, status, _covering_key(op, status)))
        undocumented_params.extend((op.label, f"query:{k}") for k in sorted(obs.undocumented))
        excluded_keys.extend((op.label, r.status_key) for r in op.responses if not r.is_numeric)
        if op.request_media_types.has_wildcard:
            wildcard_req.append(op.label)
        if op.response_media_types.has_wildcard:
            wildcard_resp.append(op.label)
        details.append(OperationDetail(
            operation=op.label,
            operation_id=op.operation_id,
            hits=obs.hits,
            parameters_covered=tuple(f"{p.location}:{p.name}" for p in op.parameters if p.key in obs.params),
            parameters_uncovered=tuple(f"{p.location}:{p.name}" for p in op.parameters if p.key not in obs.params),
            values_covered=tuple(name for name, hit in values if hit),
            values_uncovered=tuple(name for name, hit in values if not hit),
            request_media_documented=op.request_media_types.media_types,
            request_media_observed=tuple(sorted(obs.request_media)),
            request_media_wildcard=op.request_media_types.has_wildcard,
            response_media_documented=op.response_media_types.media_types,
            response_media_observed=tuple(sorted(obs.response_media)),
            response_media_wildcard=op.response_media_types.has_wildcard,
            status_keys_documented=tuple(r.status_key for r in op.responses),
            status_codes_observed=tuple(sorted(obs.statuses)),
            status_classes_observed=tuple(sorted(c.value for c in obs.classes)),
        ))

    reasons = Counter(reason for _, reason in outcome.unmatched)
    diagnostics = Diagnostics(
        total_interactions=len(outcome.matched) + len(outcome.unmatched),
        matched_interactions=len(outcome.matched),
        unmatched={r.value: reasons.get(r, 0) for r in UnmatchedReason},
        undocumented_status_codes=tuple(undocumented_status),
        undocumented_parameters=tuple(undocumented_params),
        excluded_status_keys=tuple(excluded_keys),
        wildcard_request_operations=tuple(wildcard_req),
        wildcard_response_operations=tuple(wildcard_resp),
    )
    return CoverageReport(metrics=metrics, per_operation=tuple(details), diagnostics=diagnostics)
