"""Conversation engine: session state, query execution, response rendering.

`handle_message` is the single turn function: match the utterance, take the
state machine transition, run its action (mutate the query spec, execute the
query, render), and hand back a new session plus the bot's reply. Sessions
are value objects; the input session is never mutated, so a failed turn
simply returns the old one.
"""

from __future__ import annotations

import copy
import json
import logging
import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import date
from decimal import Decimal

from .. import vocab
from ..botgen import BotDefinition, filterable_properties, iter_exposed_leaves
from ..errors import NoMatch, UnparsableValue
from ..model import ApiType, DataModel, SemanticType
from ..nlu import (
    AggFnValue,
    BoolValue,
    DateValue,
    FieldRefValue,
    MatchedIntent,
    NumberValue,
    OperatorValue,
    SortDirValue,
    TextValue,
    match,
    parse_value,
)
from .query import (
    CLIENT_FETCH_CAP,
    POST,
    Filter,
    QuerySpec,
    apply_post_ops,
    build_request,
    classify_scope,
    server_handles_aggregation,
    server_handles_sort,
)
from .transport import TransportError, UrlTransport

logger = logging.getLogger(__name__)


@dataclass
class TableData:
    headers: list[str]
    rows: list[list[str]]


@dataclass
class BotResponse:
    messages: list[str]
    buttons: list[str] = field(default_factory=list)
    table: TableData | None = None


@dataclass
class Session:
    id: str
    state: str
    spec: QuerySpec
    page: int = 0
    last_rows: list = field(default_factory=list)
    pending_filter: tuple[str, str | None] | None = None


class _ActionFailed(Exception):
    """User-correctable problem; the turn replies but the state stays put."""


def create_session(bot: BotDefinition) -> Session:
    return Session(
        id=uuid.uuid4().hex,
        state=bot.state_machine.initial,
        spec=_fresh_spec(bot),
    )


def _fresh_spec(bot: BotDefinition) -> QuerySpec:
    model = bot.model_ref
    return QuerySpec(
        concept=model.core_concept().name,
        select=[path for path, _ in iter_exposed_leaves(model)],
        page_size=bot.page_size,
    )


def handle_message(
    bot: BotDefinition,
    session: Session,
    utterance: str,
    today: date | None = None,
    transport=None,
) -> tuple[Session, BotResponse]:
    try:
        intent = match(bot, session.state, utterance)
    except NoMatch:
        return session, _help_response(bot, session)

    transition = bot.state_machine.lookup(session.state, intent.kind)
    if transition is None:  # allowedStates mirror transitions, so unreachable
        return session, _help_response(bot, session)

    action = _ACTIONS[transition.action]
    try:
        new_session, response = action(bot, session, intent, today, transport)
    except _ActionFailed as exc:
        failed = BotResponse(messages=[str(exc)])
        failed.buttons = _buttons_for(bot, session.state, session)
        return session, failed
    except TransportError as exc:
        logger.error("query execution failed: %s", exc)
        message = "Sorry, I couldn't reach the data service. Please try again."
        return session, BotResponse(messages=[message],
                                    buttons=_buttons_for(bot, session.state, session))

    new_session = replace(new_session, state=transition.next_state)
    if not response.buttons:
        response.buttons = _buttons_for(bot, new_session.state, new_session)
    return new_session, response


# --- vocabulary helpers ---

def _label(model: DataModel, path: str) -> str:
    concept_name, _, prop_name = path.partition(".")
    concept = model.concept_named(concept_name)
    prop = concept.property_named(prop_name) if concept else None
    return prop.bot.readable_name if prop else path


def _prop(model: DataModel, path: str):
    concept_name, _, prop_name = path.partition(".")
    return model.concept_named(concept_name).property_named(prop_name)


def _field_map(model: DataModel) -> dict[str, tuple[str, SemanticType]]:
    return {
        path: (prop.binding.field_name, prop.semantic_type)
        for path, prop in model.leaf_properties()
        if prop.binding is not None
    }


def _guided_opener(bot: BotDefinition) -> str:
    concept = bot.model_ref.core_concept().bot.readable_name
    return f"show me the list of {concept}"


def _buttons_for(bot: BotDefinition, state: str, session: Session) -> list[str]:
    model = bot.model_ref
    if state == "Idle":
        return [_guided_opener(bot)]
    if state == "AwaitingFilterField":
        labels = [prop.bot.readable_name for _, prop in filterable_properties(model)]
        return labels + [vocab.END_FILTER_LABEL]
    if state == "AwaitingOperator":
        if session.pending_filter is None:
            return []
        prop = _prop(model, session.pending_filter[0])
        return [vocab.OPERATOR_LABELS[op] for op in vocab.OPERATORS_BY_TYPE[prop.semantic_type]]
    if state == "AwaitingValue":
        if session.pending_filter is None:
            return []
        prop = _prop(model, session.pending_filter[0])
        if prop.semantic_type is SemanticType.DATETIME:
            return ["yesterday", "today"]
        if prop.semantic_type is SemanticType.BOOLEAN:
            return ["true", "false"]
        return []
    if state == "AwaitingFieldSelection":
        labels = [prop.bot.readable_name for _, prop in iter_exposed_leaves(model)]
        return labels + [vocab.SHOW_RESULT_LABEL]
    if state == "ShowingResults":
        return [vocab.NEXT_PAGE_LABEL, _guided_opener(bot)]
    return []


def _help_response(bot: BotDefinition, session: Session) -> BotResponse:
    model = bot.model_ref
    state = session.state
    hints = {
        "Idle": f'Try "{_guided_opener(bot)}".',
        "AwaitingFilterField": f'Name a field to filter by, or say "{vocab.END_FILTER_LABEL}".',
        "AwaitingOperator": "Pick one of the operators below.",
        "AwaitingValue": "Give me a value for the filter.",
        "AwaitingFieldSelection": f'Name a field to show, or say "{vocab.SHOW_RESULT_LABEL}".',
        "ShowingResults": 'You can say "show me next page", "sort by <field> asc", '
                          '"add filter <field> <operator> <value>" or "calculate average of <field>".',
    }
    if state == "AwaitingValue" and session.pending_filter is not None:
        prop = _prop(model, session.pending_filter[0])
        hints[state] = f"Give me a {prop.semantic_type.value} value for {prop.bot.readable_name}."
    messages = ["Sorry, I didn't understand that.", hints.get(state, "")]
    return BotResponse(messages=[m for m in messages if m],
                       buttons=_buttons_for(bot, state, session))


# --- actions ---

def _act_prompt_filters(bot, session, intent, today, transport):
    concept = bot.model_ref.core_concept().bot.readable_name
    new = replace(session, spec=_fresh_spec(bot), page=0, last_rows=[], pending_filter=None)
    message = (f"Let's look at {concept}. Do you want to filter the results? "
               f'Pick a field, or say "{vocab.END_FILTER_LABEL}".')
    return new, BotResponse(messages=[message])


def _act_prompt_fields(bot, session, intent, today, transport):
    spec = copy.deepcopy(session.spec)
    spec.select = []
    new = replace(session, spec=spec, pending_filter=None)
    message = (f'Which fields should I show? Add them one at a time; '
               f'say "{vocab.SHOW_RESULT_LABEL}" when you are done.')
    return new, BotResponse(messages=[message])


def _act_begin_filter(bot, session, intent, today, transport):
    path = intent.slots["field"].path
    label = _label(bot.model_ref, path)
    new = replace(session, pending_filter=(path, None))
    return new, BotResponse(messages=[f"How should {label} compare?"])


def _act_set_operator(bot, session, intent, today, transport):
    if session.pending_filter is None:  # corrupt session, recoverable
        raise _ActionFailed("I lost track of the filter we were building; pick a field again.")
    op = intent.slots["operator"].op
    path = session.pending_filter[0]
    prop = _prop(bot.model_ref, path)
    label = prop.bot.readable_name
    if op not in vocab.OPERATORS_BY_TYPE[prop.semantic_type]:
        raise _ActionFailed(
            f"{vocab.OPERATOR_LABELS[op]} does not apply to {label}; pick one of the operators below.")
    new = replace(session, pending_filter=(path, op))
    return new, BotResponse(messages=[f"What value should {label} {vocab.OPERATOR_LABELS[op]}?"])


def _act_commit_filter(bot, session, intent, today, transport):
    if session.pending_filter is None or session.pending_filter[1] is None:
        raise _ActionFailed("I lost track of the filter we were building; pick a field again.")
    path, op = session.pending_filter
    new = _with_filter(bot, session, path, op, intent.slots["value"].text, today)
    label = _label(bot.model_ref, path)
    display = _display_value(new.spec.filters[-1].value)
    messages = [f"Filter added: {label} {vocab.OPERATOR_LABELS[op]} {display}.",
                "Do you want another filter?"]
    return replace(new, pending_filter=None), BotResponse(messages=messages)


def _act_direct_search(bot, session, intent, today, transport):
    path = intent.slots["field"].path
    op = intent.slots["operator"].op
    base = replace(session, spec=_fresh_spec(bot), page=0, last_rows=[], pending_filter=None)
    prop = _prop(bot.model_ref, path)
    if op not in vocab.OPERATORS_BY_TYPE[prop.semantic_type]:
        raise _ActionFailed(
            f"{vocab.OPERATOR_LABELS[op]} does not apply to {prop.bot.readable_name}.")
    new = _with_filter(bot, base, path, op, intent.slots["value"].text, today)
    spec = copy.deepcopy(new.spec)
    spec.select = []
    new = replace(new, spec=spec)
    display = _display_value(new.spec.filters[-1].value)
    messages = [f"Filter set: {prop.bot.readable_name} {vocab.OPERATOR_LABELS[op]} {display}.",
                f'Which fields should I show? Say "{vocab.SHOW_RESULT_LABEL}" when done.']
    return new, BotResponse(messages=messages)


def _with_filter(bot, session, path, op, raw_value, today) -> Session:
    prop = _prop(bot.model_ref, path)
    try:
        value = parse_value(prop.semantic_type, raw_value, today)
    except UnparsableValue:
        raise _ActionFailed(
            f"I couldn't read {raw_value!r} as a {prop.semantic_type.value} value "
            f"for {prop.bot.readable_name}. Try again.")
    scope = classify_scope(bot.model_ref.binding.api_type, op)
    spec = copy.deepcopy(session.spec)
    spec.filters.append(Filter(field=path, op=op, value=value, scope=scope))
    return replace(session, spec=spec)


def _act_add_field(bot, session, intent, today, transport):
    path = intent.slots["field"].path
    label = _label(bot.model_ref, path)
    if path in session.spec.select:
        return session, BotResponse(messages=[f"{label} is already on the list. Any other field?"])
    spec = copy.deepcopy(session.spec)
    spec.select.append(path)
    return replace(session, spec=spec), BotResponse(
        messages=[f"I'll show {label}. Any other field?"])


def _act_show_results(bot, session, intent, today, transport):
    spec = copy.deepcopy(session.spec)
    if not spec.select:
        spec.select = [path for path, _ in iter_exposed_leaves(bot.model_ref)]
    new = replace(session, spec=spec, page=0)
    return _execute_and_render(bot, new, transport)


def _act_post_filter(bot, session, intent, today, transport):
    path = intent.slots["field"].path
    op = intent.slots["operator"].op
    prop = _prop(bot.model_ref, path)
    if op not in vocab.OPERATORS_BY_TYPE[prop.semantic_type]:
        raise _ActionFailed(
            f"{vocab.OPERATOR_LABELS[op]} does not apply to {prop.bot.readable_name}.")
    new = _with_filter(bot, session, path, op, intent.slots["value"].text, today)
    new = replace(new, page=0)
    display = _display_value(new.spec.filters[-1].value)
    head = [f"Filter added: {prop.bot.readable_name} {vocab.OPERATOR_LABELS[op]} {display}."]
    new, response = _execute_and_render(bot, new, transport)
    response.messages = head + response.messages
    return new, response


def _act_sort_results(bot, session, intent, today, transport):
    path = intent.slots["field"].path
    direction = intent.slots["direction"].direction if "direction" in intent.slots else vocab.ASC
    spec = copy.deepcopy(session.spec)
    spec.sort = (path, direction)
    new = replace(session, spec=spec, page=0)
    label = _label(bot.model_ref, path)
    new, response = _execute_and_render(bot, new, transport)
    response.messages = [f"Sorted by {label} {direction}."] + response.messages
    return new, response


def _act_next_page(bot, session, intent, today, transport):
    new = replace(session, page=session.page + 1)
    return _execute_and_render(bot, new, transport)


def _act_aggregate(bot, session, intent, today, transport):
    fn = intent.slots["function"].fn
    path = intent.slots["field"].path
    scalar, warnings = _execute_aggregation(bot, session.spec, fn, path, transport)
    label = _label(bot.model_ref, path)
    if scalar is None:
        messages = [f"There is no data to compute the {vocab.AGG_LABELS[fn]} of {label}."]
    else:
        messages = [f"The {vocab.AGG_LABELS[fn]} of {label} is {_display_number(scalar)}."]
    messages.extend(warnings)
    return session, BotResponse(messages=messages)


_ACTIONS = {
    "prompt_filters": _act_prompt_filters,
    "prompt_fields": _act_prompt_fields,
    "begin_filter": _act_begin_filter,
    "set_operator": _act_set_operator,
    "commit_filter": _act_commit_filter,
    "direct_search": _act_direct_search,
    "add_field": _act_add_field,
    "show_results": _act_show_results,
    "post_filter": _act_post_filter,
    "sort_results": _act_sort_results,
    "next_page": _act_next_page,
    "aggregate": _act_aggregate,
}


# --- query execution ---

def _require_transport(transport):
    if transport is None:
        raise TransportError("no transport configured")
    return transport


def _execute_query(bot: BotDefinition, spec: QuerySpec, page: int, transport):
    """Run the server query and the client-side post pipeline.

    Returns (rows, total_known, warnings)."""
    transport = _require_transport(transport)
    model = bot.model_ref
    binding = model.binding
    fields = _field_map(model)
    field_name_of = {path: pair[0] for path, pair in fields.items()}

    server_spec = copy.deepcopy(spec)
    if not server_handles_sort(binding.api_type):
        server_spec.sort = None
    request = build_request(binding, server_spec, page, field_name_of)
    document = transport.fetch(request)
    rows, total = _extract_rows(binding.api_type, document)

    post_filters = [f for f in spec.filters if f.scope == POST]
    client_sort = spec.sort if not server_handles_sort(binding.api_type) else None
    rows, warnings = apply_post_ops(rows, post_filters, client_sort, None, fields)
    return rows, total, warnings


def _execute_aggregation(bot: BotDefinition, spec: QuerySpec, fn: str, path: str, transport):
    """Aggregate over everything the current filters match (not one page)."""
    transport = _require_transport(transport)
    model = bot.model_ref
    binding = model.binding
    fields = _field_map(model)
    field_name_of = {path_: pair[0] for path_, pair in fields.items()}

    if server_handles_aggregation(binding.api_type):
        agg_spec = copy.deepcopy(spec)
        agg_spec.aggregation = (fn, path)
        agg_spec.sort = None
        request = build_request(binding, agg_spec, 0, field_name_of)
        document = transport.fetch(request)
        rows, _ = _extract_rows(binding.api_type, document)
        if not rows or not rows[0] or next(iter(rows[0].values())) is None:
            return None, []
        return Decimal(str(next(iter(rows[0].values())))), []

    # client-side fold: fetch up to the cap, then filter + aggregate locally
    fetch_spec = copy.deepcopy(spec)
    fetch_spec.sort = None
    fetch_spec.page_size = CLIENT_FETCH_CAP
    request = build_request(binding, fetch_spec, 0, field_name_of)
    document = transport.fetch(request)
    rows, total = _extract_rows(binding.api_type, document)
    warnings = []
    if total is not None and total > CLIENT_FETCH_CAP:
        warnings.append(f"Result truncated to {CLIENT_FETCH_CAP} rows for the aggregation.")
    post_filters = [f for f in spec.filters if f.scope == POST]
    scalar, post_warnings = apply_post_ops(rows, post_filters, None, (fn, path), fields)
    return scalar, warnings + post_warnings


def _extract_rows(api_type: ApiType, document) -> tuple[list[dict], int | None]:
    if api_type is ApiType.SOCRATA:
        if not isinstance(document, list):
            raise TransportError(f"unexpected Socrata response: {type(document).__name__}")
        return document, None
    if api_type is ApiType.CKAN:
        try:
            result = document["result"]
            return list(result["records"]), result.get("total")
        except (KeyError, TypeError) as exc:
            raise TransportError(f"unexpected CKAN response: {exc}") from exc
    raise TransportError(f"no response reader for {api_type.value}")


def _execute_and_render(bot, session: Session, transport) -> tuple[Session, BotResponse]:
    rows, total, warnings = _execute_query(bot, session.spec, session.page, transport)
    new = replace(session, last_rows=rows)
    response = render(bot, rows, session.spec.select, session.page, total)
    response.messages.extend(warnings)
    return new, response


# --- rendering ---

def render(bot: BotDefinition, rows: list[dict], select: list[str], page: int,
           total_known: int | None = None) -> BotResponse:
    """Rows to a table plus a page footer; buttons cover the post-processing
    shortcuts valid while results are showing."""
    model = bot.model_ref
    fields = _field_map(model)
    headers = [_label(model, path) for path in select]
    body = []
    for row in rows:
        cells = []
        for path in select:
            field_name = fields[path][0] if path in fields else path
            cells.append(_display_cell(row.get(field_name)))
        body.append(cells)

    messages: list[str] = []
    if not rows:
        messages.append("No results for this query.")
    else:
        messages.append(f"Here are {len(rows)} result(s).")
    if total_known is not None:
        pages = max(1, -(-total_known // bot.page_size))
        messages.append(f"Page {page + 1} of {pages}.")
    else:
        messages.append(f"Page {page + 1}.")
        if len(rows) == bot.page_size:
            messages.append(f'Say "{vocab.NEXT_PAGE_LABEL}" for more.')

    table = TableData(headers=headers, rows=body)
    buttons = [vocab.NEXT_PAGE_LABEL, _guided_opener(bot)]
    return BotResponse(messages=messages, buttons=buttons, table=table)


def _display_cell(raw) -> str:
    if raw is None:
        return ""
    if isinstance(raw, bool):
        return "true" if raw else "false"
    if isinstance(raw, (dict, list)):
        return json.dumps(raw, sort_keys=True)
    return str(raw)


def _display_value(value) -> str:
    if isinstance(value, NumberValue):
        return _display_number(value.value)
    if isinstance(value, DateValue):
        return value.value.isoformat()
    if isinstance(value, BoolValue):
        return "true" if value.value else "false"
    if isinstance(value, TextValue):
        return value.text
    if isinstance(value, (FieldRefValue,)):
        return value.path
    if isinstance(value, OperatorValue):
        return vocab.OPERATOR_LABELS[value.op]
    if isinstance(value, SortDirValue):
        return value.direction
    if isinstance(value, AggFnValue):
        return vocab.AGG_LABELS[value.fn]
    return str(value)


def _display_number(value: Decimal) -> str:
    return f"{float(value):g}"


# --- session store ---

class ChatEngine:
    """Shares one bot across many sessions; each session's turns serialize
    on a per-session lock, the store itself is lock-protected."""

    def __init__(self, bot: BotDefinition, transport=None, today: date | None = None):
        self.bot = bot
        self.transport = transport or UrlTransport()
        self.today = today
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()

    def create_session(self) -> Session:
        session = create_session(self.bot)
        with self._store_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()
        return session

    def get_session(self, session_id: str) -> Session | None:
        with self._store_lock:
            return self._sessions.get(session_id)

    def handle(self, session_id: str, text: str) -> tuple[Session, BotResponse]:
        with self._store_lock:
            session = self._sessions.get(session_id)
            lock = self._locks.get(session_id)
        if session is None or lock is None:
            raise KeyError(session_id)
        with lock:
            session = self._sessions[session_id]
            new_session, response = handle_message(
                self.bot, session, text, today=self.today, transport=self.transport)
            with self._store_lock:
                self._sessions[session_id] = new_session
        return new_session, response
