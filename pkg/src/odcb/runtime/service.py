"""Turn-based chat service over HTTP.

Endpoints (JSON, UTF-8, permissive CORS so a browser client can sit on any
origin):

    POST /api/sessions                  -> {"sessionId": str}
    POST /api/sessions/{id}/messages    -> {"messages", "buttons", "table", "state"}
    GET  /api/bot/meta                  -> exposed concept/field metadata
"""

from __future__ import annotations

import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..botgen import BotDefinition, filterable_properties, iter_exposed_leaves
from .engine import BotResponse, ChatEngine

logger = logging.getLogger(__name__)

_MESSAGES_RE = re.compile(r"^/api/sessions/([A-Za-z0-9_-]+)/messages$")


def response_payload(state: str, response: BotResponse) -> dict:
    table = None
    if response.table is not None:
        table = {"headers": response.table.headers, "rows": response.table.rows}
    return {
        "messages": response.messages,
        "buttons": response.buttons,
        "table": table,
        "state": state,
    }


def bot_meta(bot: BotDefinition) -> dict:
    model = bot.model_ref
    core = model.core_concept()
    filterable = {path for path, _ in filterable_properties(model)}
    return {
        "concept": {
            "name": core.name,
            "readableName": core.bot.readable_name,
            "synonyms": list(core.bot.synonyms),
        },
        "fields": [
            {
                "path": path,
                "readableName": prop.bot.readable_name,
                "synonyms": list(prop.bot.synonyms),
                "semanticType": prop.semantic_type.value,
                "filterable": path in filterable,
            }
            for path, prop in iter_exposed_leaves(model)
        ],
        "pageSize": bot.page_size,
    }


class ChatService:
    """HTTP facade over a ChatEngine; one instance serves many sessions."""

    def __init__(self, engine: ChatEngine, host: str = "127.0.0.1", port: int = 8080):
        self.engine = engine
        self.host = host
        self.port = port
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    def start(self) -> str:
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer((self.host, self.port), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.base_url

    def serve_forever(self) -> None:
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer((self.host, self.port), handler)
        logger.info("chat service listening on %s", self.base_url)
        self._server.serve_forever()

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def base_url(self) -> str:
        assert self._server is not None, "service not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    # --- routing ---

    def handle(self, method: str, path: str, body: bytes):
        if method == "POST" and path == "/api/sessions":
            session = self.engine.create_session()
            return 200, {"sessionId": session.id}
        if method == "GET" and path == "/api/bot/meta":
            return 200, bot_meta(self.engine.bot)
        messages = _MESSAGES_RE.match(path)
        if method == "POST" and messages:
            session_id = messages.group(1)
            try:
                document = json.loads(body.decode("utf-8")) if body else {}
            except (json.JSONDecodeError, UnicodeDecodeError):
                return 400, {"error": "body must be a JSON object"}
            text = document.get("text") if isinstance(document, dict) else None
            if not isinstance(text, str) or not text.strip():
                return 400, {"error": 'body must carry a non-empty "text" string'}
            try:
                session, response = self.engine.handle(session_id, text)
            except KeyError:
                return 404, {"error": f"unknown session {session_id!r}"}
            return 200, response_payload(session.state, response)
        return 404, {"error": f"no route for {method} {path}"}


def _make_handler(service: ChatService):
    class Handler(BaseHTTPRequestHandler):
        def _reply(self, status: int, body: dict) -> None:
            payload = json.dumps(body, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self._cors()
            self.end_headers()
            self.wfile.write(payload)

        def _cors(self) -> None:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.end_headers()

        def do_GET(self):
            status, body = service.handle("GET", self.path, b"")
            self._reply(status, body)

        def do_POST(self):
            length = int(self.headers.get("Content-Length", "0") or "0")
            body = self.rfile.read(length) if length else b""
            status, payload = service.handle("POST", self.path, body)
            self._reply(status, payload)

        def log_message(self, *args):
            pass

    return Handler
