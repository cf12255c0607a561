"""Pluggable HTTP transport for query execution.

The engine only ever sees `fetch(request) -> parsed JSON document`, so tests
can swap in recorded fixtures or a local mock server without touching the
conversation logic.
"""

from __future__ import annotations

import json
import logging
import urllib.error
import urllib.request
from urllib.parse import urlsplit, urlunsplit

from ..errors import ChatbotError
from .query import HttpRequestSpec

logger = logging.getLogger(__name__)


class TransportError(ChatbotError):
    pass


class UrlTransport:
    """Production transport: GET over urllib with a timeout and one retry
    on transient failures."""

    def __init__(self, timeout: float = 10.0, retries: int = 1):
        self.timeout = timeout
        self.retries = retries

    def fetch(self, request: HttpRequestSpec):
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                req = urllib.request.Request(request.url, method=request.method)
                with urllib.request.urlopen(req, timeout=self.timeout) as response:
                    body = response.read().decode("utf-8")
                return json.loads(body)
            except urllib.error.HTTPError as exc:
                # client/server errors are not transient, do not retry
                raise TransportError(f"HTTP {exc.code} from {request.url}") from exc
            except (urllib.error.URLError, TimeoutError, json.JSONDecodeError) as exc:
                last_error = exc
                logger.warning("fetch attempt %d failed: %s", attempt + 1, exc)
        raise TransportError(f"request failed after retries: {last_error}") from last_error


class RebasedTransport:
    """Rewrites request URLs onto another base (scheme + host + port) while
    keeping path and query intact. Lets bots bound to a public API domain
    run against a local mock server."""

    def __init__(self, base_url: str, inner=None):
        self.base = urlsplit(base_url)
        self.inner = inner or UrlTransport(timeout=5.0)

    def fetch(self, request: HttpRequestSpec):
        parts = urlsplit(request.url)
        rebased = urlunsplit((self.base.scheme, self.base.netloc, parts.path, parts.query, ""))
        return self.inner.fetch(HttpRequestSpec(url=rebased, method=request.method))
