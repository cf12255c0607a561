"""Deterministic recognition engine.

Utterances are matched against the bot's intent templates, restricted to the
intents reachable from the current conversation state. Templates anchor on
their literal segments; slots between anchors are filled either from closed
vocabularies (fields, operators, sort directions, aggregation functions) or
freely (values). No statistics, no training: same input, same answer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from decimal import Decimal, InvalidOperation
from typing import Union

from . import vocab
from .botgen import INTENT_KINDS, BotDefinition, field_domain
from .errors import AmbiguousVocabulary, NoMatch, UnknownVocabulary, UnparsableValue
from .model import DataModel, SemanticType

DEFAULT_THRESHOLD = 0.8

_TOKEN_RE = re.compile(r'"[^"]*"|\S+')
_TEMPLATE_SPLIT_RE = re.compile(r"(\{\w+\})")


@dataclass(frozen=True)
class TextValue:
    text: str  # original casing preserved for querying

    @property
    def match_text(self) -> str:
        return self.text.lower()


@dataclass(frozen=True)
class NumberValue:
    value: Decimal


@dataclass(frozen=True)
class BoolValue:
    value: bool


@dataclass(frozen=True)
class DateValue:
    value: date


@dataclass(frozen=True)
class FieldRefValue:
    path: str


@dataclass(frozen=True)
class OperatorValue:
    op: str


@dataclass(frozen=True)
class SortDirValue:
    direction: str


@dataclass(frozen=True)
class AggFnValue:
    fn: str


Value = Union[TextValue, NumberValue, BoolValue, DateValue,
              FieldRefValue, OperatorValue, SortDirValue, AggFnValue]


@dataclass
class MatchedIntent:
    kind: str
    slots: dict[str, Value]
    score: float


def normalize_utterance(text: str) -> str:
    """Trim, collapse whitespace, strip terminal punctuation. Case is kept;
    comparisons lowercase separately so values keep their casing."""
    text = " ".join(text.split())
    while text and text[-1] in ".!?":
        text = text[:-1].rstrip()
    return text


def tokenize(text: str) -> list[str]:
    """Whitespace tokens, except quoted spans stay single tokens."""
    return _TOKEN_RE.findall(text)


def _vocabulary_index(model: DataModel) -> dict[str, set[str]]:
    from .botgen import iter_exposed_leaves

    index: dict[str, set[str]] = {}
    for path, prop in iter_exposed_leaves(model):
        for token in [prop.bot.readable_name, *prop.bot.synonyms]:
            index.setdefault(token.lower(), set()).add(path)
    return index


def resolve_vocabulary(model: DataModel, token: str) -> str:
    """Readable name or synonym to the property path it names."""
    paths = _vocabulary_index(model).get(token.lower().strip(), set())
    if not paths:
        raise UnknownVocabulary(f"{token!r} names no exposed property")
    if len(paths) > 1:
        raise AmbiguousVocabulary(f"{token!r} names {len(paths)} properties: {sorted(paths)}")
    return next(iter(paths))


def parse_value(semantic_type: SemanticType, text: str, today: date | None = None) -> Value:
    """Parse a raw slot string into a typed value, locale-independent."""
    raw = text.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    if not raw:
        raise UnparsableValue("empty value")
    if semantic_type is SemanticType.NUMBER:
        try:
            return NumberValue(Decimal(raw))
        except InvalidOperation as exc:
            raise UnparsableValue(f"{raw!r} is not a number") from exc
    if semantic_type is SemanticType.BOOLEAN:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1"):
            return BoolValue(True)
        if lowered in ("false", "no", "0"):
            return BoolValue(False)
        raise UnparsableValue(f"{raw!r} is not a boolean")
    if semantic_type is SemanticType.DATETIME:
        lowered = raw.lower()
        anchor = today or date.today()
        if lowered == "today":
            return DateValue(anchor)
        if lowered == "yesterday":
            return DateValue(anchor - timedelta(days=1))
        try:
            return DateValue(date.fromisoformat(raw))
        except ValueError:
            pass
        try:
            return DateValue(datetime.fromisoformat(raw).date())
        except ValueError as exc:
            raise UnparsableValue(f"{raw!r} is not an ISO date") from exc
    return TextValue(raw)


# --- template matching ---

@dataclass
class _Candidate:
    kind: str
    kind_index: int
    template_index: int
    literal_chars: int
    score: float
    slots: dict[str, Value]


def match(bot: BotDefinition, state: str, utterance: str,
          threshold: float = DEFAULT_THRESHOLD) -> MatchedIntent:
    """Match an utterance against every intent in scope for `state`.

    Ranking among matches: longest literal character count first, then
    intent declaration order, then template order. Below-threshold partial
    matches are discarded; nothing left means NoMatch."""
    if state not in bot.state_machine.states:
        raise NoMatch(f"unknown state {state!r}")
    normalized = normalize_utterance(utterance)
    tokens = tokenize(normalized)
    if not tokens:
        raise NoMatch("empty utterance")
    lowered = [t.lower() for t in tokens]

    slot_vocabs = _slot_vocabularies(bot.model_ref)
    candidates: list[_Candidate] = []
    for intent in bot.intents:
        if state not in intent.allowed_states:
            continue
        fields = {token: paths for token, paths in slot_vocabs["field_by_kind"][intent.kind].items()}
        vocabs = dict(slot_vocabs["shared"], field=fields)
        for template_index, template in enumerate(intent.training_templates):
            outcome = _match_template(template, tokens, lowered, vocabs)
            if outcome is None:
                continue
            slots, literal_tokens, literal_chars, extras = outcome
            score = 1.0 if extras == 0 else literal_tokens / (literal_tokens + extras)
            if score < threshold:
                continue
            candidates.append(_Candidate(
                kind=intent.kind,
                kind_index=INTENT_KINDS.index(intent.kind),
                template_index=template_index,
                literal_chars=literal_chars,
                score=score,
                slots=slots,
            ))

    if not candidates:
        raise NoMatch(f"no intent in state {state!r} matches {utterance!r}")
    best = min(candidates, key=lambda c: (-c.literal_chars, c.kind_index, c.template_index))
    return MatchedIntent(kind=best.kind, slots=best.slots, score=best.score)


def _slot_vocabularies(model: DataModel) -> dict:
    field_by_kind: dict[str, dict[str, set[str]]] = {}
    for kind in INTENT_KINDS:
        index: dict[str, set[str]] = {}
        for token, path in field_domain(kind, model):
            index.setdefault(token, set()).add(path)
        field_by_kind[kind] = index
    return {
        "field_by_kind": field_by_kind,
        "shared": {
            "operator": dict(vocab.surface_index(vocab.OPERATOR_SURFACES)),
            "direction": dict(vocab.surface_index(vocab.SORT_SURFACES)),
            "function": dict(vocab.surface_index(vocab.AGG_SURFACES)),
        },
    }


def _parse_template(template: str) -> list[tuple[str, object]]:
    """Template text to a list of ("lit", [tokens]) / ("slot", name) parts."""
    elems: list[tuple[str, object]] = []
    for part in _TEMPLATE_SPLIT_RE.split(template):
        if not part.strip():
            continue
        if part.startswith("{") and part.endswith("}"):
            elems.append(("slot", part[1:-1]))
        else:
            elems.append(("lit", tokenize(part.lower())))
    return elems


def _match_template(template: str, tokens: list[str], lowered: list[str], vocabs: dict):
    """Try one template; on success return (slots, literal token count,
    literal char count, extra token count)."""
    elems = _parse_template(template)
    literal_tokens = sum(len(t) for kind, t in elems if kind == "lit")
    literal_chars = sum(len(" ".join(t)) for kind, t in elems if kind == "lit")

    result = _match_elems(elems, 0, tokens, lowered, 0, vocabs)
    if result is None:
        return None
    slots, extras = result
    return slots, literal_tokens, literal_chars, extras


def _match_elems(elems, pos, tokens, lowered, elem_index, vocabs):
    """Backtracking matcher. Extra tokens are tolerated only before a leading
    literal and after a trailing literal; everything between anchors must be
    consumed by slots. Deterministic: closed slots take the longest
    vocabulary phrase, leading skips are minimized."""
    if elem_index == len(elems):
        remaining = len(lowered) - pos
        if remaining == 0:
            return {}, 0
        if elems and elems[-1][0] == "lit":
            return {}, remaining
        return None

    kind, payload = elems[elem_index]
    if kind == "lit":
        lit: list[str] = payload
        if elem_index == 0:
            max_skip = len(lowered) - len(lit) - _min_tokens(elems[1:])
            for skip in range(0, max_skip + 1):
                if lowered[pos + skip: pos + skip + len(lit)] == lit:
                    rest = _match_elems(elems, pos + skip + len(lit), tokens, lowered,
                                        elem_index + 1, vocabs)
                    if rest is not None:
                        slots, extras = rest
                        return slots, extras + skip
            return None
        if lowered[pos: pos + len(lit)] == lit:
            return _match_elems(elems, pos + len(lit), tokens, lowered, elem_index + 1, vocabs)
        return None

    slot_name: str = payload
    if slot_name == "value":
        return _match_value_slot(elems, pos, tokens, lowered, elem_index, vocabs)
    return _match_closed_slot(slot_name, elems, pos, tokens, lowered, elem_index, vocabs)


def _match_closed_slot(slot_name, elems, pos, tokens, lowered, elem_index, vocabs):
    vocabulary = vocabs[slot_name]
    budget = len(lowered) - pos - _min_tokens(elems[elem_index + 1:])
    for span in range(budget, 0, -1):
        phrase = " ".join(lowered[pos: pos + span])
        resolved = vocabulary.get(phrase)
        if resolved is None:
            continue
        if isinstance(resolved, set):
            if len(resolved) != 1:
                continue  # ambiguous vocabulary token cannot fill a slot
            resolved = next(iter(resolved))
        rest = _match_elems(elems, pos + span, tokens, lowered, elem_index + 1, vocabs)
        if rest is not None:
            slots, extras = rest
            slots = dict(slots)
            slots[slot_name] = _closed_value(slot_name, resolved)
            return slots, extras
    return None


def _match_value_slot(elems, pos, tokens, lowered, elem_index, vocabs):
    last = elem_index == len(elems) - 1
    if last:
        if pos >= len(tokens):
            return None
        text = " ".join(tokens[pos:])
        return {"value": TextValue(text)}, 0
    # a later anchor exists: take the shortest span that lets the rest match
    budget = len(lowered) - pos - _min_tokens(elems[elem_index + 1:])
    for span in range(1, budget + 1):
        rest = _match_elems(elems, pos + span, tokens, lowered, elem_index + 1, vocabs)
        if rest is not None:
            slots, extras = rest
            slots = dict(slots)
            slots["value"] = TextValue(" ".join(tokens[pos: pos + span]))
            return slots, extras
    return None


def _closed_value(slot_name: str, resolved: str) -> Value:
    if slot_name == "field":
        return FieldRefValue(resolved)
    if slot_name == "operator":
        return OperatorValue(resolved)
    if slot_name == "direction":
        return SortDirValue(resolved)
    if slot_name == "function":
        return AggFnValue(resolved)
    raise ValueError(f"unknown closed slot {slot_name!r}")


def _min_tokens(elems) -> int:
    """Fewest tokens the remaining template elements can consume."""
    total = 0
    for kind, payload in elems:
        total += len(payload) if kind == "lit" else 1
    return total
