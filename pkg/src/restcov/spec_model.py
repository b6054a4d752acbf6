"""Load an OpenAPI 3 document into an immutable, reference-free API model.

Only the parts of the document that coverage measurement needs are walked:
servers, path items, operations, parameters (and their top-level schema),
request bodies and responses.  Schemas nested inside media types are never
dereferenced, so a dangling reference there is reported as a warning instead
of aborting the load.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Any, Iterator
from urllib.parse import unquote

import yaml

from .errors import ExternalRef, ParseError, UnresolvableRef, UnsupportedVersion

HTTP_METHODS = ("get", "put", "post", "delete", "options", "head", "patch", "trace")
PARAMETER_LOCATIONS = ("path", "query", "header", "cookie")

_STATUS_KEY = re.compile(r"^(?:[1-5]\d\d|[1-5]XX|default)$")
_TEMPLATE_VAR = re.compile(r"\{([^{}]*)\}")


class DomainKind(str, Enum):
    BOOLEAN = "boolean"
    ENUM = "enum"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class ValueDomain:
    kind: DomainKind
    literals: tuple[str, ...] = ()

    @property
    def is_limited(self) -> bool:
        return self.kind is not DomainKind.UNBOUNDED


UNBOUNDED = ValueDomain(DomainKind.UNBOUNDED)
BOOLEAN = ValueDomain(DomainKind.BOOLEAN, ("true", "false"))


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    location: str
    required: bool = False
    domain: ValueDomain = UNBOUNDED

    @property
    def key(self) -> tuple[str, str]:
        return (self.location, self.name)


@dataclass(frozen=True)
class MediaTypeSet:
    media_types: tuple[str, ...] = ()

    @property
    def has_wildcard(self) -> bool:
        return any("*" in mt for mt in self.media_types)

    def __bool__(self) -> bool:
        return bool(self.media_types)

    def __iter__(self) -> Iterator[str]:
        return iter(self.media_types)


@dataclass(frozen=True)
class ResponseSpec:
    status_key: str
    media_types: MediaTypeSet = MediaTypeSet()

    @property
    def is_numeric(self) -> bool:
        return self.status_key.isdigit()


@dataclass(frozen=True)
class OperationSpec:
    path_template: str
    method: str
    operation_id: str | None = None
    parameters: tuple[ParameterSpec, ...] = ()
    request_media_types: MediaTypeSet = MediaTypeSet()
    responses: tuple[ResponseSpec, ...] = ()

    @property
    def key(self) -> tuple[str, str]:
        return (self.path_template, self.method)

    @property
    def label(self) -> str:
        return f"{self.method} {self.path_template}"

    @property
    def template_variables(self) -> tuple[str, ...]:
        return tuple(_TEMPLATE_VAR.findall(self.path_template))

    @property
    def documented_status_codes(self) -> tuple[int, ...]:
        return tuple(sorted({int(r.status_key) for r in self.responses if r.is_numeric}))

    @property
    def response_media_types(self) -> MediaTypeSet:
        seen: dict[str, None] = {}
        for response in self.responses:
            for mt in response.media_types:
                seen.setdefault(mt)
        return MediaTypeSet(tuple(seen))


@dataclass(frozen=True)
class ApiModel:
    servers: tuple[str, ...]
    operations: tuple[OperationSpec, ...]
    source_version: str
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def path_templates(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for op in self.operations:
            seen.setdefault(op.path_template)
        return tuple(seen)

    def operation(self, method: str, path_template: str) -> OperationSpec:
        for op in self.operations:
            if op.method == method.upper() and op.path_template == path_template:
                return op
        raise KeyError(f"{method.upper()} {path_template}")


def canonical_literal(value: Any) -> str:
    """Minimal JSON text of an enum literal, with strings left unquoted."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isfinite(value) and value.is_integer():
            return str(int(value))
        return repr(value)
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def normalize_media_type(raw: str) -> str:
    return raw.split(";", 1)[0].strip().lower()


def media_type_set(content: Any) -> MediaTypeSet:
    if not isinstance(content, dict):
        return MediaTypeSet()
    seen: dict[str, None] = {}
    for raw in content:
        mt = normalize_media_type(str(raw))
        if mt:
            seen.setdefault(mt)
    return MediaTypeSet(tuple(seen))


def validate_path_template(template: str) -> None:
    if not template.startswith("/"):
        raise ParseError(f"path template {template!r} must start with '/'")
    for segment in template.split("/"):
        names = _TEMPLATE_VAR.findall(segment)
        if any(not name.strip() for name in names):
            raise ParseError(f"path template {template!r} has an unnamed variable")
        if "{" in _TEMPLATE_VAR.sub("", segment) or "}" in _TEMPLATE_VAR.sub("", segment):
            raise ParseError(f"path template {template!r} has unbalanced braces")


class _Resolver:
    def __init__(self, document: dict):
        self.document = document

    def pointer(self, ref: str) -> Any:
        if not ref.startswith("#"):
            raise ExternalRef(f"external reference {ref!r} is not supported", ref)
        fragment = unquote(ref[1:])
        node: Any = self.document
        if fragment in ("", "/"):
            return node
        if not fragment.startswith("/"):
            raise UnresolvableRef(f"malformed reference {ref!r}", ref)
        for token in fragment[1:].split("/"):
            token = token.replace("~1", "/").replace("~0", "~")
            if isinstance(node, dict) and token in node:
                node = node[token]
            elif isinstance(node, list) and token.isdigit() and int(token) < len(node):
                node = node[int(token)]
            else:
                raise UnresolvableRef(f"dangling reference {ref!r}", ref)
        return node

    def deref(self, node: Any) -> Any:
        """Follow a chain of ``$ref`` objects until a concrete node is reached."""
        visited: list[str] = []
        while isinstance(node, dict) and "$ref" in node:
            ref = node["$ref"]
            if not isinstance(ref, str):
                raise UnresolvableRef(f"non-string $ref {ref!r}", str(ref))
            if ref in visited:
                chain = " -> ".join(visited + [ref])
                raise UnresolvableRef(f"cyclic reference {chain}", ref)
            visited.append(ref)
            node = self.pointer(ref)
        return node


def _iter_refs(node: Any, where: str = "#") -> Iterator[tuple[str, str]]:
    if isinstance(node, dict):
        ref = node.get("$ref")
        if isinstance(ref, str):
            yield where, ref
        for key, value in node.items():
            yield from _iter_refs(value, f"{where}/{key}")
    elif isinstance(node, list):
        for i, value in enumerate(node):
            yield from _iter_refs(value, f"{where}/{i}")


def parse_document(text: str, format_hint: str | None = None) -> dict:
    if format_hint is None:
        format_hint = "json" if text.lstrip().startswith("{") else "yaml"
    try:
        if format_hint == "json":
            data = json.loads(text)
        elif format_hint == "yaml":
            data = yaml.safe_load(text)
        else:
            raise ValueError(f"unknown format hint {format_hint!r}")
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ParseError(f"malformed {format_hint.upper()} document: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("document root must be a mapping")
    return data


def load_spec(document: IO[bytes] | bytes | str, format_hint: str | None = None) -> ApiModel:
    """Parse and normalize an OpenAPI 3.0/3.1 document.

    ``document`` may be a binary stream, raw bytes or already-decoded text.
    The format is sniffed from the first non-blank character unless
    ``format_hint`` ("json" or "yaml") is given.
    """
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not UTF-8: {exc}") from exc
    return build_model(parse_document(document, format_hint))


def build_model(doc: dict) -> ApiModel:
    if "swagger" in doc:
        raise UnsupportedVersion(f"Swagger {doc['swagger']} documents are not supported; convert to OpenAPI 3")
    version = doc.get("openapi")
    if version is None or not str(version).startswith("3."):
        raise UnsupportedVersion(f"expected an OpenAPI 3.x document, got openapi={version!r}")
    version = str(version)

    resolver = _Resolver(doc)
    warnings: list[str] = []
    servers = _servers(doc.get("servers"), warnings)

    paths = resolver.deref(doc.get("paths") or {})
    if not isinstance(paths, dict):
        raise ParseError("'paths' must be a mapping")

    operations: list[OperationSpec] = []
    checked_refs: set[str] = set()
    for template, raw_item in paths.items():
        template = str(template)
        if template.startswith("x-"):
            continue
        validate_path_template(template)
        item = resolver.deref(raw_item)
        if not isinstance(item, dict):
            raise ParseError(f"path item {template!r} must be a mapping")
        shared = _parameters(resolver, item.get("parameters"), template, warnings)
        for method in HTTP_METHODS:
            if method not in item:
                continue
            op = resolver.deref(item[method])
            if not isinstance(op, dict):
                raise ParseError(f"operation {method.upper()} {template} must be a mapping")
            if "servers" in op or "servers" in item:
                warnings.append(f"{method.upper()} {template}: path/operation-level servers are ignored")
            operations.append(_operation(resolver, template, method, op, shared, warnings))

    for where, ref in _iter_refs(doc):
        if ref in checked_refs:
            continue
        try:
            resolver.deref({"$ref": ref})
        except (UnresolvableRef, ExternalRef) as exc:
            warnings.append(f"{where}: {exc} (not needed for coverage, ignored)")
        checked_refs.add(ref)

    return ApiModel(
        servers=servers,
        operations=tuple(operations),
        source_version=version,
        warnings=tuple(dict.fromkeys(warnings)),
    )


def _servers(raw: Any, warnings: list[str]) -> tuple[str, ...]:
    if not raw:
        return ("/",)
    urls = []
    for server in raw:
        if not isinstance(server, dict) or "url" not in server:
            warnings.append(f"server entry {server!r} has no url; skipped")
            continue
        url = str(server["url"])
        for name, var in (server.get("variables") or {}).items():
            default = var.get("default", "") if isinstance(var, dict) else ""
            url = url.replace("{" + name + "}", str(default))
        urls.append(url)
    return tuple(urls) or ("/",)


def _parameters(resolver: _Resolver, raw: Any, context: str, warnings: list[str]) -> list[ParameterSpec]:
    params: list[ParameterSpec] = []
    seen: set[tuple[str, str]] = set()
    for entry in raw or ():
        entry = resolver.deref(entry)
        if not isinstance(entry, dict) or "name" not in entry or "in" not in entry:
            raise ParseError(f"{context}: parameter object needs 'name' and 'in'")
        name, location = str(entry["name"]), str(entry["in"])
        if location not in PARAMETER_LOCATIONS:
            raise ParseError(f"{context}: parameter {name!r} has unknown location {location!r}")
        required = bool(entry.get("required", False))
        if location == "path" and not required:
            warnings.append(f"{context}: path parameter {name!r} not marked required; treated as required")
            required = True
        if (location, name) in seen:
            warnings.append(f"{context}: duplicate parameter {location}:{name}; first kept")
            continue
        seen.add((location, name))
        domain = _domain(resolver, entry.get("schema"), f"{context} {location}:{name}", warnings)
        params.append(ParameterSpec(name=name, location=location, required=required, domain=domain))
    return params


def _domain(resolver: _Resolver, schema: Any, context: str, warnings: list[str]) -> ValueDomain:
    schema = resolver.deref(schema)
    if not isinstance(schema, dict):
        return UNBOUNDED
    if "enum" in schema:
        values = schema["enum"]
        if not isinstance(values, list) or not values:
            warnings.append(f"{context}: empty or malformed enum treated as unbounded")
            return UNBOUNDED
        literals = tuple(dict.fromkeys(canonical_literal(v) for v in values))
        if len(literals) != len(values):
            warnings.append(f"{context}: enum has duplicate literals after canonicalization")
        return ValueDomain(DomainKind.ENUM, literals)
    if any(key in schema for key in ("oneOf", "anyOf", "allOf", "not")):
        return UNBOUNDED
    kind = schema.get("type")
    if kind == "boolean" or kind == ["boolean"]:
        return BOOLEAN
    return UNBOUNDED


def _operation(
    resolver: _Resolver,
    template: str,
    method: str,
    op: dict,
    shared: list[ParameterSpec],
    warnings: list[str],
) -> OperationSpec:
    label = f"{method.upper()} {template}"
    own = _parameters(resolver, op.get("parameters"), label, warnings)
    own_keys = {p.key for p in own}
    # operation-level definitions override path-level ones with the same (in, name)
    params = [p for p in shared if p.key not in own_keys] + own

    variables = _TEMPLATE_VAR.findall(template)
    declared = {p.name for p in params if p.location == "path"}
    for name in variables:
        if name not in declared:
            warnings.append(f"{label}: template variable {{{name}}} has no path parameter")
    for name in sorted(declared - set(variables)):
        warnings.append(f"{label}: path parameter {name!r} does not appear in the template")

    request_types = MediaTypeSet()
    if "requestBody" in op:
        body = resolver.deref(op["requestBody"])
        if isinstance(body, dict):
            request_types = media_type_set(body.get("content"))

    responses = []
    for key, raw in (resolver.deref(op.get("responses")) or {}).items():
        key = str(key)
        if key.startswith("x-"):
            continue
        if re.fullmatch(r"[1-5]xx", key):
            warnings.append(f"{label}: response key {key!r} normalized to {key.upper()!r}")
            key = key.upper()
        if not _STATUS_KEY.match(key):
            warnings.append(f"{label}: response key {key!r} is not a status code; skipped")
            continue
        response = resolver.deref(raw)
        content = response.get("content") if isinstance(response, dict) else None
        responses.append(ResponseSpec(status_key=key, media_types=media_type_set(content)))

    op_id = op.get("operationId")
    return OperationSpec(
        path_template=template,
        method=method.upper(),
        operation_id=str(op_id) if op_id is not None else None,
        parameters=tuple(params),
        request_media_types=request_types,
        responses=tuple(responses),
    )


def list_domain_limited_parameters(model: ApiModel) -> list[tuple[OperationSpec, ParameterSpec]]:
    pairs = [(op, p) for op in model.operations for p in op.parameters if p.domain.is_limited]
    pairs.sort(key=lambda pair: (pair[0].path_template, pair[0].method, pair[1].name, pair[1].location))
    return pairs
