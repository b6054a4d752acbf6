"""Recording reverse proxy.

Point a testing tool at the proxy instead of the API; every exchange is
forwarded to the upstream base URL and appended to a native JSONL log once the
upstream response has been received.
"""

from __future__ import annotations

import http.client
import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import urlsplit

from .errors import BindError, LogWriteError
from .traffic_log import Interaction, dumps_record

logger = logging.getLogger(__name__)

HOP_BY_HOP = frozenset({
    "connection", "keep-alive", "proxy-authenticate", "proxy-authorization",
    "proxy-connection", "te", "trailer", "trailers", "transfer-encoding", "upgrade",
})

DEFAULT_MAX_BODY_BYTES = 10 * 1024 * 1024


def parse_listen_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"listen address {text!r} must be HOST:PORT")
    return host.strip("[]") or "127.0.0.1", int(port)


@dataclass(frozen=True)
class ProxyConfig:
    listen_address: str
    upstream_base: str
    log_path: Path
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES
    upstream_timeout: float = 30.0

    def __post_init__(self) -> None:
        parse_listen_address(self.listen_address)
        parts = urlsplit(self.upstream_base)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ValueError(f"upstream {self.upstream_base!r} must be an absolute http(s) URL")
        if parts.query or parts.fragment:
            raise ValueError("upstream base URL must not carry a query or fragment")
        if self.max_body_bytes <= 0:
            raise ValueError("max_body_bytes must be positive")
        object.__setattr__(self, "log_path", Path(self.log_path))


@dataclass(frozen=True)
class ProxySummary:
    requests_forwarded: int
    bytes_logged: int
    upstream_failures: int = 0


def _is_hop_by_hop(name: str, connection_tokens: set[str]) -> bool:
    name = name.lower()
    return name in HOP_BY_HOP or name.startswith("proxy-") or name in connection_tokens


def _connection_tokens(headers) -> set[str]:
    tokens = set()
    for value in headers:
        tokens.update(t.strip().lower() for t in value.split(",") if t.strip())
    return tokens


class _LogWriter:
    """Single append point; the lock keeps records whole under concurrency."""

    def __init__(self, path: Path):
        try:
            self._fh = open(path, "ab")
        except OSError as exc:
            raise LogWriteError(f"cannot open log {path}: {exc}") from exc
        self._lock = threading.Lock()
        self.records = 0
        self.bytes = 0

    def append(self, interaction: Interaction) -> None:
        line = dumps_record(interaction)
        with self._lock:
            try:
                self._fh.write(line)
                self._fh.flush()
            except (OSError, ValueError) as exc:
                raise LogWriteError(f"failed to append to log: {exc}") from exc
            self.records += 1
            self.bytes += len(line)

    def close(self) -> None:
        with self._lock:
            self._fh.close()


class _Server(ThreadingHTTPServer):
    daemon_threads = False
    block_on_close = True
    request_queue_size = 128  # testing tools open many connections at once
    proxy: RecordingProxy


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    timeout = 10
    server: _Server

    def log_message(self, format, *args):  # noqa: A002
        logger.debug("%s - %s", self.address_string(), format % args)

    def _read_body(self) -> bytes | None:
        if "chunked" in self.headers.get("Transfer-Encoding", "").lower():
            chunks = []
            while True:
                size = int(self.rfile.readline().split(b";", 1)[0].strip() or b"0", 16)
                if size == 0:
                    while self.rfile.readline() not in (b"\r\n", b"\n", b""):
                        pass
                    return b"".join(chunks)
                chunks.append(self.rfile.read(size))
                self.rfile.readline()
        length = self.headers.get("Content-Length")
        if length is None:
            return None
        return self.rfile.read(int(length))

    def _relay(self) -> None:
        proxy = self.server.proxy
        config = proxy.config
        started = datetime.now(timezone.utc)
        body = self._read_body()

        target = self.path
        if "://" in target.split("?", 1)[0]:
            parts = urlsplit(target)
            target = parts.path + (f"?{parts.query}" if parts.query else "")
        if not target.startswith("/"):
            target = "/" + target
        upstream = urlsplit(config.upstream_base)
        forward_target = upstream.path.rstrip("/") + target
        url = f"{upstream.scheme}://{upstream.netloc}{forward_target}"

        tokens = _connection_tokens(self.headers.get_all("Connection", []))
        headers = [("Host", upstream.netloc)]
        headers += [
            (k, v) for k, v in self.headers.items()
            if not _is_hop_by_hop(k, tokens) and k.lower() not in ("host", "content-length")
        ]
        if body is not None:
            headers.append(("Content-Length", str(len(body))))

        conn_cls = http.client.HTTPSConnection if upstream.scheme == "https" else http.client.HTTPConnection
        conn = conn_cls(upstream.hostname, upstream.port, timeout=config.upstream_timeout)
        try:
            conn.putrequest(self.command, forward_target, skip_host=True, skip_accept_encoding=True)
            for k, v in headers:
                conn.putheader(k, v)
            conn.endheaders(body)
            response = conn.getresponse()
            resp_body = response.read()
            status, reason = response.status, response.reason
            raw_resp_headers = response.getheaders()
        except (OSError, http.client.HTTPException) as exc:
            proxy._upstream_failed(exc)
            self._send_plain(502, f"upstream unreachable: {exc}\n".encode())
            return
        finally:
            conn.close()

        resp_tokens = _connection_tokens(v for k, v in raw_resp_headers if k.lower() == "connection")
        resp_headers = [(k, v) for k, v in raw_resp_headers if not _is_hop_by_hop(k, resp_tokens)]

        limit = config.max_body_bytes
        truncated = (body is not None and len(body) > limit) or len(resp_body) > limit
        try:
            proxy._record(Interaction(
                timestamp=started,
                method=self.command,
                url=url,
                status=status,
                request_headers=tuple(headers),
                request_body=body[:limit] if body is not None else None,
                response_headers=tuple(resp_headers),
                response_body=resp_body[:limit],
                truncated=truncated,
            ))
        except LogWriteError:
            self._send_plain(500, b"proxy log write failed\n")
            return

        self.send_response_only(status, reason)
        for k, v in resp_headers:
            if k.lower() == "content-length" and self.command != "HEAD":
                continue
            self.send_header(k, v)
        if self.command != "HEAD" and not (status in (204, 304) or status < 200):
            self.send_header("Content-Length", str(len(resp_body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(resp_body)

    def _send_plain(self, status: int, payload: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    do_GET = do_POST = do_PUT = do_DELETE = do_PATCH = do_HEAD = do_OPTIONS = do_TRACE = _relay


class RecordingProxy:
    """Reverse proxy bound to ``config.listen_address``.

    Use as a context manager or call :meth:`start` / :meth:`stop`.  Port 0
    binds an ephemeral port; read the actual one from :attr:`address`.
    """

    def __init__(self, config: ProxyConfig):
        self.config = config
        self.fatal: LogWriteError | None = None
        self._server: _Server | None = None
        self._thread: threading.Thread | None = None
        self._writer: _LogWriter | None = None
        self._failures = 0
        self._count_lock = threading.Lock()
        self._failed = threading.Event()

    @property
    def address(self) -> tuple[str, int]:
        assert self._server is not None, "proxy not started"
        host, port = self._server.server_address[:2]
        return host, port

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> RecordingProxy:
        host, port = parse_listen_address(self.config.listen_address)
        self._writer = _LogWriter(self.config.log_path)
        try:
            self._server = _Server((host, port), _Handler)
        except OSError as exc:
            self._writer.close()
            raise BindError(f"cannot bind {self.config.listen_address}: {exc}") from exc
        self._server.proxy = self
        self._thread = threading.Thread(target=self._server.serve_forever, args=(0.1,), name="restcov-proxy", daemon=True)
        self._thread.start()
        logger.info("proxy listening on %s -> %s", self.url, self.config.upstream_base)
        return self

    def stop(self) -> ProxySummary:
        """Stop accepting connections and wait for in-flight exchanges."""
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()  # joins handler threads
            self._thread.join()
            self._server = None
        if self._writer is not None:
            self._writer.close()
        return self.summary()

    def summary(self) -> ProxySummary:
        writer = self._writer
        return ProxySummary(
            requests_forwarded=writer.records if writer else 0,
            bytes_logged=writer.bytes if writer else 0,
            upstream_failures=self._failures,
        )

    def wait_for_failure(self, timeout: float | None = None) -> bool:
        return self._failed.wait(timeout)

    def _record(self, interaction: Interaction) -> None:
        try:
            self._writer.append(interaction)
        except LogWriteError as exc:
            logger.error("%s", exc)
            self.fatal = exc
            self._failed.set()
            raise

    def _upstream_failed(self, exc: Exception) -> None:
        logger.warning("upstream unreachable: %s", exc)
        with self._count_lock:
            self._failures += 1

    def __enter__(self) -> RecordingProxy:
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def run_proxy(config: ProxyConfig, shutdown: threading.Event) -> ProxySummary:
    """Serve until ``shutdown`` is set; raise :class:`LogWriteError` if logging failed."""
    proxy = RecordingProxy(config).start()
    try:
        while not shutdown.is_set():
            if proxy.wait_for_failure(0.2):
                break
    finally:
        summary = proxy.stop()
    if proxy.fatal is not None:
        raise proxy.fatal
    return summary
