"""Bind recorded interactions to documented operations.

Matching strips the longest server base path, then compares the remaining
path segment by segment against every operation template.  When several
templates accept the path for the request's method, the one with the most
concrete (variable-free) segments wins; remaining ties go to the
lexicographically smallest template.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable
from urllib.parse import parse_qsl, unquote, urlsplit

from .spec_model import ApiModel, OperationSpec, ParameterSpec, normalize_media_type
from .traffic_log import Headers, Interaction, InteractionLog

_TEMPLATE_VAR = re.compile(r"\{([^{}]+)\}")


class StatusClass(str, Enum):
    CORRECT = "correct"
    ERRONEOUS = "erroneous"
    OTHER = "other"

    @classmethod
    def of(cls, status: int) -> StatusClass:
        if 200 <= status <= 299:
            return cls.CORRECT
        if 400 <= status <= 599:
            return cls.ERRONEOUS
        return cls.OTHER


class UnmatchedReason(str, Enum):
    NO_SERVER_PREFIX = "no_server_prefix"
    NO_PATH = "no_path"
    NO_METHOD = "no_method"


@dataclass(frozen=True)
class ParameterObservation:
    spec: ParameterSpec
    raw_value: str


@dataclass(frozen=True)
class MatchedInteraction:
    interaction: Interaction
    operation: OperationSpec
    path_values: dict[str, str]
    observed_params: tuple[ParameterObservation, ...]
    request_media_type: str | None
    response_media_type: str | None
    status_class: StatusClass
    undocumented_params: tuple[str, ...] = ()


@dataclass(frozen=True)
class MatchOutcome:
    matched: tuple[MatchedInteraction, ...] = ()
    unmatched: tuple[tuple[Interaction, UnmatchedReason], ...] = ()
    total: int = field(default=0)


def normalize_path(path: str) -> str:
    if not path.startswith("/"):
        path = "/" + path
    if len(path) > 1:
        path = path.rstrip("/") or "/"
    return path


def _segments(path: str) -> list[str]:
    path = normalize_path(path)
    return [] if path == "/" else path[1:].split("/")


@lru_cache(maxsize=None)
def _server_base_paths(servers: tuple[str, ...]) -> tuple[str, ...]:
    bases = set()
    for url in servers:
        base = urlsplit(url).path
        bases.add("" if normalize_path(base) == "/" else normalize_path(base))
    # longest first, so the first hit is the longest prefix
    return tuple(sorted(bases, key=lambda b: (-len(b), b)))


def strip_server_prefix(servers: tuple[str, ...], path: str) -> str | None:
    path = normalize_path(path)
    for base in _server_base_paths(servers):
        if path == base:
            return "/"
        if path.startswith(base + "/"):
            return normalize_path(path[len(base):])
    return None


@dataclass(frozen=True)
class _CompiledTemplate:
    template: str
    segments: tuple  # each entry: str literal, or (regex, names)
    concrete: int


@lru_cache(maxsize=4096)
def _compile(template: str) -> _CompiledTemplate:
    parts = []
    concrete = 0
    for segment in _segments(template):
        names = _TEMPLATE_VAR.findall(segment)
        if not names:
            parts.append(segment)
            concrete += 1
            continue
        pattern = ""
        pos = 0
        for m in _TEMPLATE_VAR.finditer(segment):
            pattern += re.escape(segment[pos:m.start()]) + "([^/]+)"
            pos = m.end()
        pattern += re.escape(segment[pos:])
        parts.append((re.compile(pattern), tuple(names)))
    return _CompiledTemplate(template, tuple(parts), concrete)


def match_template(template: str, path: str) -> dict[str, str] | None:
    """Return the raw (still percent-encoded) variable captures, or None."""
    compiled = _compile(template)
    segments = _segments(path)
    if len(segments) != len(compiled.segments):
        return None
    values: dict[str, str] = {}
    for part, segment in zip(compiled.segments, segments):
        if isinstance(part, str):
            if unquote(segment) != part:
                return None
            continue
        regex, names = part
        m = regex.fullmatch(segment)
        if m is None:
            return None
        values.update(zip(names, m.groups()))
    return values


def match_operation(
    model: ApiModel, method: str, url: str
) -> tuple[OperationSpec, dict[str, str]] | UnmatchedReason:
    """Find the operation a request exercised, or the reason none fits."""
    path = strip_server_prefix(model.servers, urlsplit(url).path)
    if path is None:
        return UnmatchedReason.NO_SERVER_PREFIX
    method = method.upper()
    best = None
    path_hit = False
    for op in model.operations:
        values = match_template(op.path_template, path)
        if values is None:
            continue
        path_hit = True
        if op.method != method:
            continue
        rank = (-_compile(op.path_template).concrete, op.path_template)
        if best is None or rank < best[0]:
            best = (rank, op, values)
    if best is None:
        return UnmatchedReason.NO_METHOD if path_hit else UnmatchedReason.NO_PATH
    return best[1], best[2]


def header_values(headers: Headers, name: str) -> list[str]:
    name = name.lower()
    return [value for key, value in headers if key.lower() == name]


def media_type_of(headers: Headers) -> str | None:
    values = header_values(headers, "content-type")
    if not values:
        return None
    return normalize_media_type(values[0]) or None


def parse_cookies(headers: Headers) -> list[tuple[str, str]]:
    pairs = []
    for header in header_values(headers, "cookie"):
        for item in header.split(";"):
            name, sep, value = item.strip().partition("=")
            if sep and name:
                pairs.append((name.strip(), value.strip()))
    return pairs


def query_pairs(url: str) -> list[tuple[str, str]]:
    return parse_qsl(urlsplit(url).query, keep_blank_values=True)


def extract_parameters(
    op: OperationSpec, interaction: Interaction, path_values: dict[str, str]
) -> list[ParameterObservation]:
    observations = []
    query = cookies = None
    for spec in op.parameters:
        if spec.location == "path":
            values = [unquote(path_values[spec.name])] if spec.name in path_values else []
        elif spec.location == "query":
            query = query if query is not None else query_pairs(interaction.url)
            values = [v for k, v in query if k == spec.name]
        elif spec.location == "header":
            values = header_values(interaction.request_headers, spec.name)
        else:
            cookies = cookies if cookies is not None else parse_cookies(interaction.request_headers)
            values = [v for k, v in cookies if k == spec.name]
        observations.extend(ParameterObservation(spec, v) for v in values)
    return observations


def undocumented_query_keys(op: OperationSpec, interaction: Interaction) -> tuple[str, ...]:
    declared = {p.name for p in op.parameters if p.location == "query"}
    keys = dict.fromkeys(k for k, _ in query_pairs(interaction.url) if k not in declared)
    return tuple(keys)


def match_interaction(model: ApiModel, interaction: Interaction) -> MatchedInteraction | UnmatchedReason:
    found = match_operation(model, interaction.method, interaction.url)
    if isinstance(found, UnmatchedReason):
        return found
    op, path_values = found
    return MatchedInteraction(
        interaction=interaction,
        operation=op,
        path_values=path_values,
        observed_params=tuple(extract_parameters(op, interaction, path_values)),
        request_media_type=media_type_of(interaction.request_headers),
        response_media_type=media_type_of(interaction.response_headers),
        status_class=StatusClass.of(interaction.status),
        undocumented_params=undocumented_query_keys(op, interaction),
    )


def match_log(model: ApiModel, log: InteractionLog | Iterable[Interaction]) -> MatchOutcome:
    matched = []
    unmatched = []
    total = 0
    for interaction in log:
        total += 1
        result = match_interaction(model, interaction)
        if isinstance(result, UnmatchedReason):
            unmatched.append((interaction, result))
        else:
            matched.append(result)
    return MatchOutcome(tuple(matched), tuple(unmatched), total)
