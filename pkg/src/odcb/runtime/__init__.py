"""Conversation runtime: sessions, query execution, chat service, mock API."""

from .engine import (
    BotResponse,
    ChatEngine,
    Session,
    TableData,
    create_session,
    handle_message,
    render,
)
from .mockapi import MockOpenDataServer
from .query import (
    Filter,
    HttpRequestSpec,
    QuerySpec,
    apply_post_ops,
    build_request,
    classify_scope,
)
from .service import ChatService
from .transport import RebasedTransport, TransportError, UrlTransport

__all__ = [
    "BotResponse",
    "ChatEngine",
    "ChatService",
    "Filter",
    "HttpRequestSpec",
    "MockOpenDataServer",
    "QuerySpec",
    "RebasedTransport",
    "Session",
    "TableData",
    "TransportError",
    "UrlTransport",
    "apply_post_ops",
    "build_request",
    "classify_scope",
    "create_session",
    "handle_message",
    "render",
]
