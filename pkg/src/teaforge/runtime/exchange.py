"""The abstract gateway record and the transport boundary."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Protocol


class Readable(io.BytesIO):
    """In-memory byte stream standing in for a request/response body."""

    def __init__(self, data: bytes | bytearray | str = b""):
        if isinstance(data, str):
            data = data.encode("utf-8")
        super().__init__(bytes(data))

    def __eq__(self, other) -> bool:
        if isinstance(other, Readable):
            return self.getvalue() == other.getvalue()
        return NotImplemented

    __hash__ = None

    def __repr__(self) -> str:
        return f"Readable({self.getvalue()!r})"

    def copy(self) -> Readable:
        return Readable(self.getvalue())


def as_readable(body) -> Readable:
    if body is None:
        return Readable()
    if isinstance(body, Readable):
        return body
    if isinstance(body, (bytes, bytearray, str)):
        return Readable(body)
    if hasattr(body, "read"):
        return Readable(body.read())
    raise TypeError(f"cannot use {type(body).__name__} as a body")


@dataclass
class Request:
    method: str = "GET"
    pathname: str = ""
    query: dict[str, str] = field(default_factory=dict)
    headers: dict[str, str] = field(default_factory=dict)
    body: Readable | None = None

    def copy(self) -> Request:
        return Request(
            self.method,
            self.pathname,
            dict(self.query),
            dict(self.headers),
            self.body.copy() if self.body is not None else None,
        )


@dataclass
class Response:
    status_code: int = 200
    status_message: str = "OK"
    headers: dict[str, str] = field(default_factory=dict)
    body: Readable = field(default_factory=Readable)

    def __post_init__(self):
        self.body = as_readable(self.body)
        if not 100 <= self.status_code <= 599:
            raise ValueError(f"status code out of range: {self.status_code}")


@dataclass
class HttpExchange:
    protocol: str = "https"
    port: int = 443
    host: str = ""
    request: Request = field(default_factory=Request)
    response: Response | None = None

    def copy(self) -> HttpExchange:
        return HttpExchange(self.protocol, self.port, self.host, self.request.copy(), self.response)

    def url(self) -> str:
        return f"{self.protocol}://{self.host}:{self.port}{self.request.pathname}"

    def summary(self) -> tuple:
        """Observable request fields, handy for comparisons in tests."""
        body = self.request.body.getvalue() if self.request.body is not None else b""
        return (
            self.protocol, self.port, self.host, self.request.method, self.request.pathname,
            tuple(sorted(self.request.query.items())), tuple(sorted(self.request.headers.items())), body,
        )


@dataclass(frozen=True)
class RuntimeConfig:
    retry_times: int = 0
    backoff_ms: int = 100
    timeout_ms: int = 30000
    default_protocol: str = "https"
    default_port: int = 443

    def __post_init__(self):
        if self.retry_times < 0:
            raise ValueError("retry_times must be >= 0")
        if self.backoff_ms < 0:
            raise ValueError("backoff_ms must be >= 0")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")
        if self.default_protocol not in ("http", "https"):
            raise ValueError("default_protocol must be http or https")
        if not 1 <= self.default_port <= 65535:
            raise ValueError("default_port must be within 1-65535")


class TransportError(ConnectionError):
    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class Transport(Protocol):
    def send(self, exchange: HttpExchange, timeout_ms: int) -> Response:
        """Deliver the request half of ``exchange`` and return the response.

        Must not mutate ``exchange``. Raises :class:`TransportError` (or any
        ``OSError``) when no response could be obtained.
        """
        ...
