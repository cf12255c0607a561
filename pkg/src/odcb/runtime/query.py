"""Abstract queries and their compilation to Open Data API requests.

`build_request` is pure and byte-deterministic: parameter order, encoding
and literal quoting are fixed so generated URLs can be verified as goldens.
Post-scope filters never reach a URL; they are applied client-side by
`apply_post_ops`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from typing import Mapping
from urllib.parse import quote

from .. import vocab
from ..errors import UnsupportedDialect, UnsupportedFilter
from ..model import ApiBinding, ApiType, SemanticType
from ..nlu import BoolValue, DateValue, NumberValue, TextValue, Value

SERVER = "Server"
POST = "Post"

CLIENT_FETCH_CAP = 10_000  # rows fetched for client-side aggregation

_SOQL_OPS = {
    vocab.EQUALS: "=",
    vocab.NOT_EQUALS: "!=",
    vocab.LESS_THAN: "<",
    vocab.GREATER_THAN: ">",
}


@dataclass
class Filter:
    field: str  # property path
    op: str
    value: Value
    scope: str = SERVER


@dataclass
class QuerySpec:
    concept: str
    filters: list[Filter] = field(default_factory=list)
    select: list[str] = field(default_factory=list)
    sort: tuple[str, str] | None = None  # (property path, "asc"|"desc")
    aggregation: tuple[str, str] | None = None  # (fn, property path)
    page_size: int = 10


@dataclass
class HttpRequestSpec:
    url: str
    method: str = "GET"


def classify_scope(api_type: ApiType, op: str) -> str:
    """Where a filter runs: pushed down to the server when the dialect can
    express it, client-side otherwise."""
    if api_type is ApiType.SOCRATA:
        return SERVER
    if api_type is ApiType.CKAN:
        return SERVER if op == vocab.EQUALS else POST
    return POST


def server_handles_sort(api_type: ApiType) -> bool:
    return api_type is ApiType.SOCRATA


def server_handles_aggregation(api_type: ApiType) -> bool:
    return api_type is ApiType.SOCRATA


def build_request(
    binding: ApiBinding,
    spec: QuerySpec,
    page: int,
    field_name_of: Mapping[str, str],
) -> HttpRequestSpec:
    """Compile the server-side part of a query into a GET request."""
    if binding.api_type is ApiType.SOCRATA:
        return _build_socrata(binding, spec, page, field_name_of)
    if binding.api_type is ApiType.CKAN:
        return _build_ckan(binding, spec, page, field_name_of)
    raise UnsupportedDialect(f"no request builder for {binding.api_type.value}")


def _build_socrata(binding, spec, page, field_name_of) -> HttpRequestSpec:
    params: list[str] = []
    if spec.aggregation is not None:
        fn, path = spec.aggregation
        params.append("$select=" + quote(f"{fn}({field_name_of[path]})", safe=",()"))
    elif spec.select:
        params.append("$select=" + quote(",".join(field_name_of[p] for p in spec.select), safe=",()"))
    clauses = [_soql_clause(f, field_name_of) for f in spec.filters if f.scope == SERVER]
    if clauses:
        params.append("$where=" + quote(" AND ".join(clauses), safe="()"))
    if spec.sort is not None:
        path, direction = spec.sort
        params.append("$order=" + quote(f"{field_name_of[path]} {direction.upper()}", safe=""))
    params.append(f"$limit={spec.page_size}")
    params.append(f"$offset={page * spec.page_size}")
    url = f"https://{binding.domain}/resource/{binding.resource_path}.json?" + "&".join(params)
    return HttpRequestSpec(url=url)


def _soql_clause(filt: Filter, field_name_of) -> str:
    name = field_name_of[filt.field]
    if filt.op == vocab.CONTAINS:
        return f"contains({name},{_soql_literal(filt.value, force_text=True)})"
    symbol = _SOQL_OPS.get(filt.op)
    if symbol is None:
        raise UnsupportedFilter(f"operator {filt.op!r} has no SoQL form")
    return f"{name} {symbol} {_soql_literal(filt.value)}"


def _soql_literal(value: Value, force_text: bool = False) -> str:
    if isinstance(value, NumberValue) and not force_text:
        return str(value.value)
    if isinstance(value, BoolValue) and not force_text:
        return "true" if value.value else "false"
    if isinstance(value, DateValue):
        return f"'{value.value.isoformat()}'"
    text = value.text if isinstance(value, TextValue) else str(getattr(value, "value", value))
    escaped = text.replace("'", "''")
    return f"'{escaped}'"


def _build_ckan(binding, spec, page, field_name_of) -> HttpRequestSpec:
    filters_obj: dict[str, object] = {}
    for filt in spec.filters:
        if filt.scope != SERVER:
            continue
        if filt.op != vocab.EQUALS:
            raise UnsupportedFilter("CKAN datastore_search only pushes down equality")
        filters_obj[field_name_of[filt.field]] = _ckan_json_value(filt.value)
    params = [f"resource_id={quote(binding.resource_path, safe='')}"]
    if filters_obj:
        params.append("filters=" + quote(json.dumps(filters_obj, separators=(",", ":")), safe=""))
    params.append(f"limit={spec.page_size}")
    params.append(f"offset={page * spec.page_size}")
    url = f"https://{binding.domain}/api/3/action/datastore_search?" + "&".join(params)
    return HttpRequestSpec(url=url)


def _ckan_json_value(value: Value) -> object:
    if isinstance(value, NumberValue):
        number = value.value
        return int(number) if number == number.to_integral_value() else float(number)
    if isinstance(value, BoolValue):
        return value.value
    if isinstance(value, DateValue):
        return value.value.isoformat()
    return value.text if isinstance(value, TextValue) else str(value)


# --- client-side post-processing ---

def apply_post_ops(
    rows: list[dict],
    post_filters: list[Filter],
    sort: tuple[str, str] | None,
    aggregation: tuple[str, str] | None,
    fields: Mapping[str, tuple[str, SemanticType]],
):
    """Filter, sort and optionally aggregate fetched rows.

    `fields` maps property paths to (source field name, semantic type).
    Rows missing or failing to parse a referenced field are excluded, one
    warning per drop. Returns (rows or scalar, warnings)."""
    warnings: list[str] = []
    for filt in post_filters:
        if filt.scope != POST:
            raise UnsupportedFilter(f"server-scope filter {filt.field!r} must not run client-side")

    kept: list[dict] = []
    for row in rows:
        verdict = True
        for filt in post_filters:
            field_name, stype = fields[filt.field]
            cell = _typed_cell(row, field_name, stype, warnings)
            if cell is _MISSING:
                verdict = False
                break
            if not _satisfies(cell, filt.op, filt.value, stype):
                verdict = False
                break
        if verdict:
            kept.append(row)

    if sort is not None:
        path, direction = sort
        field_name, stype = fields[path]
        decorated = []
        for row in kept:
            cell = _typed_cell(row, field_name, stype, warnings)
            if cell is _MISSING:
                continue
            decorated.append((cell, row))
        decorated.sort(key=lambda pair: pair[0], reverse=(direction == "desc"))
        kept = [row for _, row in decorated]

    if aggregation is not None:
        fn, path = aggregation
        field_name, stype = fields[path]
        values: list[Decimal] = []
        for row in kept:
            cell = _typed_cell(row, field_name, SemanticType.NUMBER, warnings)
            if cell is _MISSING:
                continue
            values.append(cell)
        if not values:
            return None, warnings
        if fn == vocab.AVG:
            return sum(values) / Decimal(len(values)), warnings
        if fn == vocab.MIN:
            return min(values), warnings
        if fn == vocab.MAX:
            return max(values), warnings
        raise UnsupportedFilter(f"unknown aggregation {fn!r}")

    return kept, warnings


_MISSING = object()


def _typed_cell(row: dict, field_name: str, stype: SemanticType, warnings: list[str]):
    if field_name not in row or row[field_name] is None:
        warnings.append(f"row lacks field {field_name!r}, excluded")
        return _MISSING
    raw = row[field_name]
    try:
        if stype is SemanticType.NUMBER:
            return Decimal(str(raw))
        if stype is SemanticType.DATETIME:
            return _parse_timestamp(str(raw))
        if stype is SemanticType.BOOLEAN:
            if isinstance(raw, bool):
                return raw
            return str(raw).lower() in ("true", "yes", "1")
        return raw if isinstance(raw, str) else json.dumps(raw, sort_keys=True)
    except (InvalidOperation, ValueError):
        warnings.append(f"row value {raw!r} unusable as {stype.value} for {field_name!r}, excluded")
        return _MISSING


def _parse_timestamp(text: str) -> datetime:
    cleaned = text.strip().replace("Z", "")
    try:
        return datetime.fromisoformat(cleaned)
    except ValueError:
        return datetime.combine(date.fromisoformat(cleaned[:10]), datetime.min.time())


def _filter_operand(value: Value, stype: SemanticType):
    if isinstance(value, NumberValue):
        return value.value
    if isinstance(value, DateValue):
        return datetime.combine(value.value, datetime.min.time())
    if isinstance(value, BoolValue):
        return value.value
    text = value.text if isinstance(value, TextValue) else str(value)
    if stype is SemanticType.NUMBER:
        return Decimal(text)
    if stype is SemanticType.DATETIME:
        return _parse_timestamp(text)
    return text


def _satisfies(cell, op: str, value: Value, stype: SemanticType) -> bool:
    operand = _filter_operand(value, stype)
    if op == vocab.EQUALS:
        return cell == operand
    if op == vocab.NOT_EQUALS:
        return cell != operand
    if op == vocab.LESS_THAN:
        return cell < operand
    if op == vocab.GREATER_THAN:
        return cell > operand
    if op == vocab.CONTAINS:
        return str(operand) in str(cell)
    raise UnsupportedFilter(f"unknown operator {op!r}")
