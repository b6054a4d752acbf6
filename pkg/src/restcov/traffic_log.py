"""Recorded HTTP exchanges and their on-disk formats (native JSONL and HAR 1.2)."""

from __future__ import annotations

import base64
import binascii
import io
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Any, Iterable
from urllib.parse import urlsplit

from .errors import NotHar, ParseError, SchemaError

logger = logging.getLogger(__name__)

Headers = tuple[tuple[str, str], ...]

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class InvalidInteraction(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _utc_ms(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=ts.microsecond // 1000 * 1000)


@dataclass(frozen=True)
class Interaction:
    """One request/response pair as seen on the wire."""

    timestamp: datetime
    method: str
    url: str
    status: int
    request_headers: Headers = ()
    request_body: bytes | None = None
    response_headers: Headers = ()
    response_body: bytes | None = None
    truncated: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", _utc_ms(self.timestamp))
        if not isinstance(self.method, str) or not self.method.strip():
            raise InvalidInteraction("method", "must be a non-empty string")
        object.__setattr__(self, "method", self.method.upper())
        try:
            parts = urlsplit(self.url)
        except (TypeError, ValueError) as exc:
            raise InvalidInteraction("url", str(exc)) from exc
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise InvalidInteraction("url", f"{self.url!r} is not an absolute http(s) URL")
        if isinstance(self.status, bool) or not isinstance(self.status, int) or not 100 <= self.status <= 599:
            raise InvalidInteraction("status", f"{self.status!r} is outside 100..599")
        object.__setattr__(self, "request_headers", _headers(self.request_headers, "req_headers"))
        object.__setattr__(self, "response_headers", _headers(self.response_headers, "resp_headers"))


def _headers(raw: Iterable, field_name: str) -> Headers:
    try:
        pairs = tuple((str(name), str(value)) for name, value in raw)
    except (TypeError, ValueError) as exc:
        raise InvalidInteraction(field_name, "expected a list of [name, value] pairs") from exc
    return pairs


@dataclass(frozen=True)
class InteractionLog:
    interactions: tuple[Interaction, ...] = ()
    source: str = field(default="", compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.interactions)

    def __iter__(self):
        return iter(self.interactions)

    def __add__(self, other: InteractionLog) -> InteractionLog:
        sources = "+".join(s for s in (self.source, other.source) if s)
        return InteractionLog(
            self.interactions + other.interactions,
            source=sources,
            warnings=self.warnings + other.warnings,
        )


def _read_all(document: IO[bytes] | bytes) -> tuple[bytes, str]:
    if isinstance(document, (bytes, bytearray)):
        return bytes(document), "<bytes>"
    return document.read(), getattr(document, "name", "<stream>")


# ---------------------------------------------------------------------------
# native JSONL

def format_timestamp(ts: datetime) -> str:
    ts = _utc_ms(ts)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


_ISO = re.compile(
    r"(\d{4}-\d\d-\d\d)[Tt ](\d\d:\d\d(?::\d\d)?)(?:[.,](\d+))?\s*(Z|z|[+-]\d\d:?\d\d)?"
)


def parse_timestamp(text: str) -> datetime:
    """ISO 8601 with any number of fractional digits; naive values are taken as UTC."""
    m = _ISO.fullmatch(text.strip())
    if m is None:
        raise ValueError(f"invalid ISO 8601 timestamp {text!r}")
    date, clock, fraction, offset = m.groups()
    fraction = (fraction or "0")[:6].ljust(6, "0")
    if offset in (None, "Z", "z"):
        offset = "+00:00"
    elif ":" not in offset:
        offset = offset[:3] + ":" + offset[3:]
    return datetime.fromisoformat(f"{date}T{clock}.{fraction}{offset}")


def interaction_to_record(ix: Interaction) -> dict[str, Any]:
    record: dict[str, Any] = {
        "ts": format_timestamp(ix.timestamp),
        "method": ix.method,
        "url": ix.url,
        "req_headers": [list(h) for h in ix.request_headers],
    }
    if ix.request_body is not None:
        record["req_body_b64"] = base64.b64encode(ix.request_body).decode("ascii")
    record["status"] = ix.status
    record["resp_headers"] = [list(h) for h in ix.response_headers]
    if ix.response_body is not None:
        record["resp_body_b64"] = base64.b64encode(ix.response_body).decode("ascii")
    if ix.truncated:
        record["truncated"] = True
    return record


def dumps_record(ix: Interaction) -> bytes:
    return json.dumps(interaction_to_record(ix), separators=(",", ":")).encode("utf-8") + b"\n"


def interaction_from_record(record: Any, line: int | None = None) -> Interaction:
    if not isinstance(record, dict):
        raise SchemaError("record must be a JSON object", line, None)
    for name in ("ts", "method", "url", "status"):
        if name not in record:
            raise SchemaError(f"missing field {name!r}", line, name)
    try:
        ts = parse_timestamp(record["ts"])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid ts {record['ts']!r}", line, "ts") from exc
    bodies = {}
    for name in ("req_body_b64", "resp_body_b64"):
        if name in record:
            try:
                bodies[name] = base64.b64decode(record[name], validate=True)
            except (TypeError, ValueError, binascii.Error) as exc:
                raise SchemaError(f"{name} is not valid base64", line, name) from exc
        else:
            bodies[name] = None
    try:
        return Interaction(
            timestamp=ts,
            method=record["method"],
            url=record["url"],
            status=record["status"],
            request_headers=record.get("req_headers", ()),
            request_body=bodies["req_body_b64"],
            response_headers=record.get("resp_headers", ()),
            response_body=bodies["resp_body_b64"],
            truncated=bool(record.get("truncated", False)),
        )
    except InvalidInteraction as exc:
        raise SchemaError(str(exc), line, exc.field) from exc


def read_jsonl(document: IO[bytes] | bytes) -> InteractionLog:
    data, source = _read_all(document)
    interactions = []
    for lineno, raw in enumerate(data.split(b"\n"), start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError(f"invalid JSON: {exc}", lineno) from exc
        interactions.append(interaction_from_record(record, lineno))
    return InteractionLog(tuple(interactions), source=source)


def write_jsonl(log: InteractionLog | Iterable[Interaction], sink: IO[bytes]) -> None:
    for ix in log:
        sink.write(dumps_record(ix))


# ---------------------------------------------------------------------------
# HAR 1.2

def _har_headers(raw: Any) -> Headers:
    if not isinstance(raw, list):
        return ()
    return tuple(
        (str(h.get("name", "")), str(h.get("value", "")))
        for h in raw
        if isinstance(h, dict)
    )


def _har_body(container: Any) -> bytes | None:
    if not isinstance(container, dict) or "text" not in container or container["text"] is None:
        return None
    text = container["text"]
    if container.get("encoding") == "base64":
        return base64.b64decode(text)
    return str(text).encode("utf-8")


def read_har(document: IO[bytes] | bytes) -> InteractionLog:
    """Convert every usable HAR entry to an :class:`Interaction`.

    Entries without a usable response status (HAR records aborted requests
    with status 0) are dropped and reported through ``InteractionLog.warnings``.
    """
    data, source = _read_all(document)
    try:
        har = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    entries = har.get("log", {}).get("entries") if isinstance(har, dict) and isinstance(har.get("log"), dict) else None
    if not isinstance(entries, list):
        raise NotHar("document has no log.entries array")

    interactions = []
    warnings = []
    for index, entry in enumerate(entries):
        request = entry.get("request") or {}
        response = entry.get("response") or {}
        status = response.get("status")
        if status is None or status == 0:
            warnings.append(f"entry {index}: no response status; dropped")
            continue
        try:
            started = entry.get("startedDateTime")
            ts = parse_timestamp(started) if started else _EPOCH
            interactions.append(Interaction(
                timestamp=ts,
                method=request.get("method", ""),
                url=request.get("url", ""),
                status=status,
                request_headers=_har_headers(request.get("headers")),
                request_body=_har_body(request.get("postData")),
                response_headers=_har_headers(response.get("headers")),
                response_body=_har_body(response.get("content")),
            ))
        except (InvalidInteraction, ValueError, binascii.Error) as exc:
            warnings.append(f"entry {index}: {exc}; dropped")
    for message in warnings:
        logger.debug("%s: %s", source, message)
    return InteractionLog(tuple(interactions), source=source, warnings=tuple(warnings))


# ---------------------------------------------------------------------------

def sniff_format(data: bytes, name: str = "") -> str:
    """Guess "har" or "jsonl" from the file extension, then the content."""
    suffix = Path(name).suffix.lower()
    if suffix == ".har":
        return "har"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return "jsonl"
    return "har" if isinstance(doc, dict) and "log" in doc else "jsonl"


def load_log(path: str | Path) -> InteractionLog:
    path = Path(path)
    data = path.read_bytes()
    reader = read_har if sniff_format(data, path.name) == "har" else read_jsonl
    stream = io.BytesIO(data)
    stream.name = str(path)
    return reader(stream)
