"""Generate a chatbot definition from an annotated data model.

The definition couples intent templates (wording shipped as a data pack,
instantiated over the model's vocabulary) with a guided-conversation state
machine. Generation is pure and deterministic: the same model and pack
always produce a deep-equal bot.
"""

from __future__ import annotations

import copy
import itertools
import json
import re
from dataclasses import dataclass, field
from importlib import resources

from . import vocab
from .errors import InvariantViolation, MalformedDocument, NoExposedConcept, NoExposedProperties, SchemaVersionMismatch
from .model import ConceptClass, DataModel, PropertyDef, SemanticType, persist, restore, validate

# Declaration order is normative: it breaks matching ties and fixes the
# serialized intent order.
INTENT_KINDS = (
    "DirectSearch",
    "GuidedSearch",
    "AddFilter",
    "ChooseOperator",
    "ProvideValue",
    "EndFilter",
    "SelectField",
    "ShowResult",
    "AddPostFilter",
    "SortOrderBy",
    "NextPage",
    "AddPostFunction",
)

STATES = (
    "Idle",
    "AwaitingFilterField",
    "AwaitingOperator",
    "AwaitingValue",
    "AwaitingFieldSelection",
    "ShowingResults",
)

SLOT_FILLS = {
    "field": "FieldRef",
    "operator": "Operator",
    "value": "Value",
    "direction": "SortDirection",
    "function": "AggFunction",
}

_SLOT_RE = re.compile(r"\{(\w+)\}")

BOT_SCHEMA_VERSION = "1"
DEFAULT_PAGE_SIZE = 10


@dataclass
class SlotSpec:
    name: str
    fills: str


@dataclass
class IntentTemplate:
    kind: str
    training_templates: list[str]
    slots: list[SlotSpec] = field(default_factory=list)
    allowed_states: set[str] = field(default_factory=set)


@dataclass
class Transition:
    state: str
    intent: str
    action: str
    next_state: str


@dataclass
class StateMachine:
    states: set[str]
    transitions: list[Transition]
    initial: str = "Idle"

    def lookup(self, state: str, intent: str) -> Transition | None:
        for t in self.transitions:
            if t.state == state and t.intent == intent:
                return t
        return None

    def intents_in(self, state: str) -> list[str]:
        kinds = [t.intent for t in self.transitions if t.state == state]
        return sorted(set(kinds), key=INTENT_KINDS.index)


@dataclass
class BotDefinition:
    model_ref: DataModel
    intents: list[IntentTemplate]
    state_machine: StateMachine
    page_size: int = DEFAULT_PAGE_SIZE

    def intent(self, kind: str) -> IntentTemplate:
        for intent in self.intents:
            if intent.kind == kind:
                return intent
        raise KeyError(kind)


def load_template_pack() -> dict[str, list[str]]:
    text = resources.files("odcb.data").joinpath("template_pack.json").read_text("utf-8")
    return json.loads(text)


# --- model vocabulary enumeration ---

def iter_exposed_leaves(model: DataModel) -> list[tuple[str, PropertyDef]]:
    """Exposed non-composite properties as (path, prop), tree order from the
    core; hiding a composite or a concept hides everything beneath it."""
    out: list[tuple[str, PropertyDef]] = []

    def walk(concept_name: str) -> None:
        concept = model.concept_named(concept_name)
        if concept is None or not concept.bot.to_expose:
            return
        for prop in concept.properties:
            if not prop.bot.to_expose:
                continue
            if prop.is_composite:
                walk(prop.component_ref)
            else:
                out.append((f"{concept.name}.{prop.name}", prop))

    walk(model.core_concept().name)
    return out


def filterable_properties(model: DataModel) -> list[tuple[str, PropertyDef]]:
    return [(p, prop) for p, prop in iter_exposed_leaves(model) if prop.to_filter_with]


def numeric_properties(model: DataModel) -> list[tuple[str, PropertyDef]]:
    return [(p, prop) for p, prop in iter_exposed_leaves(model)
            if prop.semantic_type is SemanticType.NUMBER]


def field_domain(kind: str, model: DataModel) -> list[tuple[str, str]]:
    """What the {field} slot may name for an intent kind, as ordered
    (token, property path) pairs over readable names and synonyms."""
    if kind in ("AddFilter", "DirectSearch", "AddPostFilter"):
        props = filterable_properties(model)
    elif kind == "AddPostFunction":
        props = numeric_properties(model)
    else:
        props = iter_exposed_leaves(model)
    pairs: list[tuple[str, str]] = []
    for path, prop in props:
        for token in [prop.bot.readable_name, *prop.bot.synonyms]:
            pairs.append((token.lower(), path))
    return pairs


def concept_vocabulary(model: DataModel) -> list[str]:
    core = model.core_concept()
    return [core.bot.readable_name.lower()] + [s.lower() for s in core.bot.synonyms]


def prune_hidden(model: DataModel) -> DataModel:
    """Copy of the model without hidden elements.

    The bot definition is a deployable artifact; embedding names or bindings
    of hidden properties would leak exactly what the designer chose to hide,
    so the generated bot carries only the exposed surface."""
    result = copy.deepcopy(model)
    kept: dict[str, ConceptClass] = {}

    def prune_concept(name: str) -> None:
        concept = result.concept_named(name)
        kept_props = []
        for prop in concept.properties:
            if not prop.bot.to_expose:
                continue
            if prop.is_composite:
                target = result.concept_named(prop.component_ref)
                if target is None or not target.bot.to_expose:
                    continue
                prune_concept(prop.component_ref)
            kept_props.append(prop)
        concept.properties = kept_props
        kept[name] = concept

    prune_concept(result.core_concept().name)
    result.concepts = [c for c in result.concepts if c.name in kept]
    return result


# --- generation ---

def build_state_machine(model: DataModel) -> StateMachine:
    """Transcribe the guided conversation path over this model.

    With no filterable properties the filter loop collapses and
    GuidedSearch leads straight to field selection; the aggregation
    self-loop exists only when a numeric property is exposed."""
    has_filters = bool(filterable_properties(model))
    has_numbers = bool(numeric_properties(model))

    transitions: list[Transition] = []
    if has_filters:
        transitions += [
            Transition("Idle", "GuidedSearch", "prompt_filters", "AwaitingFilterField"),
            Transition("Idle", "DirectSearch", "direct_search", "AwaitingFieldSelection"),
            Transition("AwaitingFilterField", "AddFilter", "begin_filter", "AwaitingOperator"),
            Transition("AwaitingFilterField", "EndFilter", "prompt_fields", "AwaitingFieldSelection"),
            Transition("AwaitingOperator", "ChooseOperator", "set_operator", "AwaitingValue"),
            Transition("AwaitingValue", "ProvideValue", "commit_filter", "AwaitingFilterField"),
        ]
    else:
        transitions.append(Transition("Idle", "GuidedSearch", "prompt_fields", "AwaitingFieldSelection"))
    transitions += [
        Transition("AwaitingFieldSelection", "SelectField", "add_field", "AwaitingFieldSelection"),
        Transition("AwaitingFieldSelection", "ShowResult", "show_results", "ShowingResults"),
        Transition("ShowingResults", "SortOrderBy", "sort_results", "ShowingResults"),
        Transition("ShowingResults", "NextPage", "next_page", "ShowingResults"),
    ]
    if has_filters:
        transitions.append(Transition("ShowingResults", "AddPostFilter", "post_filter", "ShowingResults"))
        transitions.append(Transition("ShowingResults", "DirectSearch", "direct_search", "AwaitingFieldSelection"))
    if has_numbers:
        transitions.append(Transition("ShowingResults", "AddPostFunction", "aggregate", "ShowingResults"))
    transitions.append(Transition(
        "ShowingResults", "GuidedSearch",
        "prompt_filters" if has_filters else "prompt_fields",
        "AwaitingFilterField" if has_filters else "AwaitingFieldSelection",
    ))

    states = {t.state for t in transitions} | {t.next_state for t in transitions}
    return StateMachine(states=states, transitions=transitions)


def generate_bot(
    model: DataModel,
    page_size: int = DEFAULT_PAGE_SIZE,
    template_pack: dict[str, list[str]] | None = None,
) -> BotDefinition:
    report = validate(model)
    if not report.empty():
        raise InvariantViolation(report.describe())
    core = model.core_concept()
    if not core.bot.to_expose:
        raise NoExposedConcept(f"core concept {core.name!r} is hidden")
    if not iter_exposed_leaves(model):
        raise NoExposedProperties("model exposes no leaf properties")
    if page_size < 1:
        raise InvariantViolation("pageSize must be positive")

    pack = template_pack or load_template_pack()
    machine = build_state_machine(model)
    concept_tokens = concept_vocabulary(model)

    intents: list[IntentTemplate] = []
    for kind in INTENT_KINDS:
        raw_templates = pack.get(kind, [])
        if not raw_templates:
            raise InvariantViolation(f"template pack has no templates for {kind}")
        templates = _inline_concept(raw_templates, concept_tokens)
        slot_names = _ordered_slot_names(templates)
        intents.append(IntentTemplate(
            kind=kind,
            training_templates=templates,
            slots=[SlotSpec(name, SLOT_FILLS[name]) for name in slot_names],
            allowed_states={t.state for t in machine.transitions if t.intent == kind},
        ))

    return BotDefinition(
        model_ref=prune_hidden(model),
        intents=intents,
        state_machine=machine,
        page_size=page_size,
    )


def _inline_concept(templates: list[str], concept_tokens: list[str]) -> list[str]:
    out: list[str] = []
    for template in templates:
        if "{concept}" in template:
            for token in concept_tokens:
                out.append(template.replace("{concept}", token).lower())
        else:
            out.append(template.lower())
    return _dedupe(out)


def _ordered_slot_names(templates: list[str]) -> list[str]:
    names: list[str] = []
    for template in templates:
        for name in _SLOT_RE.findall(template):
            if name not in SLOT_FILLS:
                raise InvariantViolation(f"unknown slot {{{name}}} in template {template!r}")
            if name not in names:
                names.append(name)
    return names


def expand_templates(
    kind: str,
    model: DataModel,
    training_templates: list[str] | None = None,
) -> list[str]:
    """Instantiate an intent's templates over the model vocabulary.

    Field, operator, direction and function slots expand over their closed
    vocabularies; free {value} slots stay as placeholders. Output is
    lowercase and deduplicated."""
    if training_templates is None:
        templates = _inline_concept(load_template_pack()[kind], concept_vocabulary(model))
    else:
        templates = training_templates

    domains = {
        "field": _dedupe([token for token, _ in field_domain(kind, model)]),
        "operator": [s for op in vocab.OPERATOR_SURFACES for s in vocab.OPERATOR_SURFACES[op]],
        "direction": [s for d in vocab.SORT_SURFACES for s in vocab.SORT_SURFACES[d]],
        "function": [s for f in vocab.AGG_SURFACES for s in vocab.AGG_SURFACES[f]],
        "value": ["{value}"],
    }

    sentences: list[str] = []
    for template in templates:
        slot_names = _SLOT_RE.findall(template)
        if not slot_names:
            sentences.append(template.lower())
            continue
        pools = [domains[name] for name in slot_names]
        for combo in itertools.product(*pools):
            sentence = template
            for name, token in zip(slot_names, combo):
                sentence = sentence.replace("{" + name + "}", token, 1)
            sentences.append(sentence.lower())
    return _dedupe(sentences)


def _dedupe(items: list[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


# --- persistence (bot.json) ---

def bot_doc(bot: BotDefinition) -> dict:
    return {
        "version": BOT_SCHEMA_VERSION,
        "pageSize": bot.page_size,
        "model": persist(bot.model_ref),
        "intents": [
            {
                "kind": intent.kind,
                "trainingTemplates": list(intent.training_templates),
                "slots": [{"name": s.name, "fills": s.fills} for s in intent.slots],
                "allowedStates": sorted(intent.allowed_states),
            }
            for intent in bot.intents
        ],
        "stateMachine": {
            "initial": bot.state_machine.initial,
            "states": sorted(bot.state_machine.states),
            "transitions": [
                [t.state, t.intent, t.action, t.next_state]
                for t in bot.state_machine.transitions
            ],
        },
    }


def bot_dumps(bot: BotDefinition) -> str:
    return json.dumps(bot_doc(bot), indent=2, ensure_ascii=False) + "\n"


def bot_from_doc(document: dict | str) -> BotDefinition:
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedDocument("bot document must be a JSON object")
    if document.get("version") != BOT_SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"expected bot schema version {BOT_SCHEMA_VERSION!r}, got {document.get('version')!r}")
    try:
        machine_doc = document["stateMachine"]
        machine = StateMachine(
            states=set(machine_doc["states"]),
            transitions=[Transition(*t) for t in machine_doc["transitions"]],
            initial=machine_doc["initial"],
        )
        intents = [
            IntentTemplate(
                kind=i["kind"],
                training_templates=list(i["trainingTemplates"]),
                slots=[SlotSpec(s["name"], s["fills"]) for s in i["slots"]],
                allowed_states=set(i["allowedStates"]),
            )
            for i in document["intents"]
        ]
        bot = BotDefinition(
            model_ref=restore(document["model"]),
            intents=intents,
            state_machine=machine,
            page_size=int(document["pageSize"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"bad bot document: {exc}") from exc
    if sorted(i.kind for i in bot.intents) != sorted(INTENT_KINDS):
        raise MalformedDocument("bot document must define exactly the twelve intent kinds")
    return bot
