"""Execution of api blocks against a pluggable transport."""

from .exchange import HttpExchange, Readable, Request, Response, RuntimeConfig, Transport, TransportError
from .http import UrllibTransport
from .interpreter import (
    BehaviorRegistry,
    Environment,
    EvalError,
    UnboundBehavior,
    UnknownApi,
    ValidationFailed,
    build_request,
    eval_expr,
    exec_block,
    invoke,
    send_with_retry,
)
from .mock import FailingTransport, MockRule, MockTransport

__all__ = [
    "BehaviorRegistry",
    "Environment",
    "EvalError",
    "FailingTransport",
    "HttpExchange",
    "MockRule",
    "MockTransport",
    "Readable",
    "Request",
    "Response",
    "RuntimeConfig",
    "Transport",
    "TransportError",
    "UnboundBehavior",
    "UnknownApi",
    "UrllibTransport",
    "ValidationFailed",
    "build_request",
    "eval_expr",
    "exec_block",
    "invoke",
    "send_with_retry",
]
