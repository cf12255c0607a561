"""Local mock Open Data server replaying recorded row fixtures.

Implements just enough of the Socrata resource endpoint (a $select/$where/
$order/$limit/$offset subset) and of CKAN datastore_search to run bots
offline. Every request is captured for test assertions.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

_CONTAINS_RE = re.compile(r"^contains\(([A-Za-z0-9_]+),'(.*)'\)$")
_CLAUSE_RE = re.compile(r"^([A-Za-z0-9_]+)\s*(=|!=|<|>)\s*(.+)$")
_AGG_RE = re.compile(r"^(avg|min|max)\(([A-Za-z0-9_]+)\)$")


@dataclass
class CapturedRequest:
    method: str
    path: str
    query: dict[str, str]


class MockOpenDataServer:
    """Serves fixtures/socrata/<id>/rows.json and fixtures/ckan/<id>/rows.json."""

    def __init__(self, fixtures_dir: str | Path, port: int = 0):
        self.fixtures_dir = Path(fixtures_dir)
        self._requested_port = port
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None
        self._lock = threading.Lock()
        self.requests: list[CapturedRequest] = []

    # --- lifecycle ---

    def start(self) -> str:
        handler = _make_handler(self)
        self._server = ThreadingHTTPServer(("127.0.0.1", self._requested_port), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self.base_url

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def base_url(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    # --- request handling ---

    def record(self, method: str, path: str, query: dict[str, str]) -> None:
        with self._lock:
            self.requests.append(CapturedRequest(method, path, query))

    def data_requests(self) -> list[CapturedRequest]:
        with self._lock:
            return [r for r in self.requests
                    if r.path.startswith("/resource/") or "datastore_search" in r.path]

    def reset_requests(self) -> None:
        with self._lock:
            self.requests.clear()

    def handle(self, method: str, path: str, query: dict[str, str]):
        """Route a request; returns (status, json-serializable body)."""
        self.record(method, path, query)
        socrata = re.match(r"^/resource/([^/]+)\.json$", path)
        if socrata:
            return self._handle_socrata(socrata.group(1), query)
        if path == "/api/3/action/datastore_search":
            return self._handle_ckan(query)
        return 404, {"error": f"no route for {path}"}

    def _load_rows(self, kind: str, dataset_id: str) -> list[dict] | None:
        rows_file = self.fixtures_dir / kind / dataset_id / "rows.json"
        if not rows_file.exists():
            return None
        return json.loads(rows_file.read_text("utf-8"))

    def _handle_socrata(self, dataset_id: str, query: dict[str, str]):
        rows = self._load_rows("socrata", dataset_id)
        if rows is None:
            return 404, {"error": f"unknown dataset {dataset_id}"}
        try:
            rows = _apply_where(rows, query.get("$where", ""))
            order = query.get("$order")
            if order:
                rows = _apply_order(rows, order)
            select = query.get("$select")
            aggregated = _maybe_aggregate(rows, select)
            if aggregated is not None:
                rows = aggregated
            elif select:
                wanted = [f.strip() for f in select.split(",") if f.strip()]
                rows = [{k: row[k] for k in wanted if k in row} for row in rows]
            limit = int(query.get("$limit", "1000"))
            offset = int(query.get("$offset", "0"))
            return 200, rows[offset: offset + limit]
        except ValueError as exc:
            return 400, {"error": str(exc)}

    def _handle_ckan(self, query: dict[str, str]):
        resource_id = query.get("resource_id", "")
        rows = self._load_rows("ckan", resource_id)
        if rows is None:
            return 404, {"success": False, "error": f"unknown resource {resource_id}"}
        filters = query.get("filters")
        if filters:
            wanted = json.loads(filters)
            rows = [r for r in rows if all(str(r.get(k)) == str(v) for k, v in wanted.items())]
        total = len(rows)
        limit = int(query.get("limit", "100"))
        offset = int(query.get("offset", "0"))
        page = rows[offset: offset + limit]
        fields = sorted({k for r in rows for k in r})
        return 200, {
            "success": True,
            "result": {
                "resource_id": resource_id,
                "fields": [{"id": f} for f in fields],
                "records": page,
                "total": total,
            },
        }


# --- SoQL subset evaluation ---

def _coerce(text: str):
    """Literal/cell to a comparable: datetime, number, or string."""
    raw = text.strip()
    cleaned = raw.replace("Z", "")
    try:
        return datetime.fromisoformat(cleaned)
    except ValueError:
        pass
    try:
        return datetime.combine(date.fromisoformat(cleaned[:10]), datetime.min.time())
    except ValueError:
        pass
    try:
        return Decimal(raw)
    except InvalidOperation:
        return raw


def _compare(cell, op: str, literal) -> bool:
    if type(cell) is not type(literal):
        cell, literal = str(cell), str(literal)
    if op == "=":
        return cell == literal
    if op == "!=":
        return cell != literal
    if op == "<":
        return cell < literal
    if op == ">":
        return cell > literal
    raise ValueError(f"unsupported operator {op}")


def _cell_value(row: dict, field: str):
    if field not in row or row[field] is None:
        return None
    raw = row[field]
    if isinstance(raw, bool):
        return "true" if raw else "false"
    if isinstance(raw, (int, float)):
        return Decimal(str(raw))
    if isinstance(raw, str):
        return _coerce(raw)
    return json.dumps(raw, sort_keys=True)


def _parse_literal(text: str):
    raw = text.strip()
    if raw.startswith("'") and raw.endswith("'") and len(raw) >= 2:
        return _coerce(raw[1:-1].replace("''", "'"))
    if raw in ("true", "false"):
        return raw
    return _coerce(raw)


def _apply_where(rows: list[dict], where: str) -> list[dict]:
    # `where` arrives already percent-decoded by the query parser
    clauses = [c.strip() for c in where.split(" AND ") if c.strip()]
    for clause in clauses:
        contains = _CONTAINS_RE.match(clause)
        if contains:
            field, needle = contains.group(1), contains.group(2).replace("''", "'")
            rows = [r for r in rows if needle in str(r.get(field, ""))]
            continue
        plain = _CLAUSE_RE.match(clause)
        if not plain:
            raise ValueError(f"cannot parse where clause {clause!r}")
        field, op, literal_text = plain.groups()
        literal = _parse_literal(literal_text)
        kept = []
        for row in rows:
            cell = _cell_value(row, field)
            if cell is None:
                continue
            if _compare(cell, op, literal):
                kept.append(row)
        rows = kept
    return rows


def _apply_order(rows: list[dict], order: str) -> list[dict]:
    parts = order.strip().split()
    field = parts[0]
    descending = len(parts) > 1 and parts[1].upper() == "DESC"
    decorated = [(r, _cell_value(r, field)) for r in rows]
    decorated = [(r, c) for r, c in decorated if c is not None]
    decorated.sort(key=lambda pair: pair[1], reverse=descending)
    return [r for r, _ in decorated]


def _maybe_aggregate(rows: list[dict], select: str | None):
    if not select:
        return None
    agg = _AGG_RE.match(select.strip())
    if not agg:
        return None
    fn, field = agg.groups()
    values = []
    for row in rows:
        cell = _cell_value(row, field)
        if isinstance(cell, Decimal):
            values.append(cell)
    key = f"{fn}_{field}"
    if not values:
        return [{key: None}]
    if fn == "avg":
        result = sum(values) / Decimal(len(values))
    elif fn == "min":
        result = min(values)
    else:
        result = max(values)
    return [{key: float(result)}]


def _make_handler(server: MockOpenDataServer):
    class Handler(BaseHTTPRequestHandler):
        def do_GET(self):
            parts = urlsplit(self.path)
            query = {k: v[0] for k, v in parse_qs(parts.query, keep_blank_values=True).items()}
            status, body = server.handle("GET", parts.path, query)
            payload = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass  # keep test output quiet

    return Handler
