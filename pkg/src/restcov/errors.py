"""Exception hierarchy shared by the loaders, the proxy and the CLI."""

from __future__ import annotations


class RestcovError(Exception):
    """Base class for every error raised by restcov."""


class ParseError(RestcovError):
    """Malformed input document; ``line`` is set for line-oriented formats."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    """A well-formed record with a missing or invalid field."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        super().__init__(message, line)
        self.field = field


class NotHar(ParseError):
    pass


class SpecError(RestcovError):
    """Problems specific to OpenAPI documents."""


class UnsupportedVersion(SpecError):
    pass


class UnresolvableRef(SpecError):
    """Dangling or cyclic local ``$ref``."""

    def __init__(self, message: str, ref: str):
        super().__init__(message)
        self.ref = ref


class ExternalRef(SpecError):
    def __init__(self, message: str, ref: str):
        super().__init__(message)
        self.ref = ref


class ProxyError(RestcovError):
    pass


class BindError(ProxyError):
    pass


class UpstreamUnreachable(ProxyError):
    pass


class LogWriteError(ProxyError):
    pass
