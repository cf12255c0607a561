"""Annotated intermediate representation of an Open Data API.

A `DataModel` is a composition tree of concepts rooted at a single core
concept (the dataset's main record type). Every leaf property carries a
technical binding (source field name + raw type) and a conversational
annotation (visibility, readable name, synonyms). Models are treated as
immutable values: every operation returns a new model and never mutates
its input.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    MalformedDocument,
    NameCollision,
    SchemaVersionMismatch,
    UnknownProperty,
)

SCHEMA_VERSION = "1"

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_HOST_LABEL_RE = re.compile(r"^[a-z0-9]([a-z0-9-]{0,61}[a-z0-9])?$", re.IGNORECASE)


class SemanticType(str, Enum):
    TEXT = "Text"
    NUMBER = "Number"
    BOOLEAN = "Boolean"
    DATETIME = "DateTime"
    URL = "Url"
    GEOPOINT = "GeoPoint"
    COMPOSITE = "Composite"


class ApiType(str, Enum):
    SOCRATA = "Socrata"
    CKAN = "CKAN"
    ODATA = "OData"
    ADHOC = "Adhoc"


@dataclass
class BotAnnotation:
    """Conversation-facing annotation for a concept or property."""

    to_expose: bool = True
    readable_name: str = ""
    synonyms: list[str] = field(default_factory=list)


@dataclass
class FieldBinding:
    """How a leaf property maps onto the source API."""

    field_name: str
    source_type: str = ""


@dataclass
class PropertyDef:
    name: str
    semantic_type: SemanticType
    bot: BotAnnotation = field(default_factory=BotAnnotation)
    to_filter_with: bool = False
    binding: FieldBinding | None = None
    component_ref: str | None = None

    @property
    def is_composite(self) -> bool:
        return self.semantic_type is SemanticType.COMPOSITE


@dataclass
class ConceptClass:
    name: str
    core: bool = False
    properties: list[PropertyDef] = field(default_factory=list)
    bot: BotAnnotation = field(default_factory=BotAnnotation)

    def property_named(self, name: str) -> PropertyDef | None:
        for prop in self.properties:
            if prop.name == name:
                return prop
        return None


@dataclass
class ApiBinding:
    api_type: ApiType
    domain: str
    resource_path: str


@dataclass
class DataModel:
    name: str
    concepts: list[ConceptClass]
    binding: ApiBinding
    version: str = SCHEMA_VERSION

    def core_concept(self) -> ConceptClass:
        for concept in self.concepts:
            if concept.core:
                return concept
        raise ValueError(f"model {self.name!r} has no core concept")

    def concept_named(self, name: str) -> ConceptClass | None:
        for concept in self.concepts:
            if concept.name == name:
                return concept
        return None

    def leaf_properties(self) -> list[tuple[str, PropertyDef]]:
        """All non-composite properties as (path, property), in tree order."""
        return [
            (path, prop)
            for path, prop in self.walk_properties()
            if not prop.is_composite
        ]

    def walk_properties(self) -> list[tuple[str, PropertyDef]]:
        """All properties as ("Concept.prop", property), core concept first."""
        out: list[tuple[str, PropertyDef]] = []
        ordered = sorted(self.concepts, key=lambda c: not c.core)
        for concept in ordered:
            for prop in concept.properties:
                out.append((f"{concept.name}.{prop.name}", prop))
        return out


@dataclass
class Violation:
    path: str
    rule: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    def empty(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def describe(self) -> str:
        lines = [f"{v.rule} at {v.path or '<model>'}: {v.message}" for v in self.violations]
        lines += [f"(warning) {w.rule} at {w.path}: {w.message}" for w in self.warnings]
        return "\n".join(lines)


def humanize(name: str) -> str:
    """Identifier to a readable lowercase phrase: underscores and CamelCase
    boundaries become spaces."""
    s = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", name)
    s = re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1 \2", s)
    s = s.replace("_", " ").replace("-", " ")
    return " ".join(s.split()).lower()


def snake_case(name: str) -> str:
    return humanize(name).replace(" ", "_")


def identifierize(title: str) -> str:
    """Dataset title to a concept identifier: keep alphanumeric words,
    capitalize each, join without spaces."""
    words = re.findall(r"[A-Za-z0-9]+", title)
    ident = "".join(w[:1].upper() + w[1:] for w in words)
    if not ident:
        return "Dataset"
    if ident[0].isdigit():
        ident = "X" + ident
    return ident


def _valid_hostname(domain: str) -> bool:
    if not domain or len(domain) > 253:
        return False
    return all(_HOST_LABEL_RE.match(label) for label in domain.split("."))


def validate(model: DataModel) -> ValidationReport:
    """Check every structural invariant; violations are data, not errors."""
    report = ValidationReport()

    def vio(path: str, rule: str, message: str) -> None:
        report.violations.append(Violation(path, rule, message))

    def warn(path: str, rule: str, message: str) -> None:
        report.warnings.append(Violation(path, rule, message))

    if not _IDENT_RE.match(model.name):
        vio("", "invalid-identifier", f"model name {model.name!r} is not an identifier")
    if not _valid_hostname(model.binding.domain):
        vio("", "invalid-domain", f"{model.binding.domain!r} is not a valid hostname")
    if not model.binding.resource_path:
        vio("", "resource-path-required", "binding resourcePath is empty")

    seen_concepts: set[str] = set()
    for concept in model.concepts:
        if concept.name in seen_concepts:
            vio(concept.name, "concept-name-unique", f"duplicate concept {concept.name!r}")
        seen_concepts.add(concept.name)

    cores = [c for c in model.concepts if c.core]
    if len(cores) != 1:
        vio("", "exactly-one-core", f"expected exactly one core concept, found {len(cores)}")

    # composition tree: each non-core concept referenced by exactly one
    # composite property, and reachable from the core
    ref_counts: dict[str, int] = {c.name: 0 for c in model.concepts}
    for concept in model.concepts:
        seen_props: set[str] = set()
        for prop in concept.properties:
            path = f"{concept.name}.{prop.name}"
            if prop.name in seen_props:
                vio(path, "property-name-unique", f"duplicate property {prop.name!r}")
            seen_props.add(prop.name)
            if not _IDENT_RE.match(prop.name):
                vio(path, "invalid-identifier", f"property name {prop.name!r} is not an identifier")
            if prop.is_composite != (prop.component_ref is not None):
                vio(path, "componentref-composite",
                    "componentRef must be set exactly when semanticType is Composite")
            if prop.is_composite and prop.component_ref is not None:
                if prop.component_ref in ref_counts:
                    ref_counts[prop.component_ref] += 1
                else:
                    vio(path, "unknown-component", f"componentRef {prop.component_ref!r} names no concept")
            if not prop.is_composite:
                if prop.binding is None or not prop.binding.field_name:
                    vio(path, "field-binding-required", "non-composite property needs a fieldName")
            if prop.to_filter_with and not prop.bot.to_expose:
                vio(path, "filterable-implies-exposed", "toFilterWith requires toExpose")
            if prop.to_filter_with and prop.is_composite:
                warn(path, "filterable-composite", "composite properties are skipped as filters")
            _check_annotation(prop.bot, path, vio)
        if not _IDENT_RE.match(concept.name):
            vio(concept.name, "invalid-identifier", f"concept name {concept.name!r} is not an identifier")
        _check_annotation(concept.bot, concept.name, vio)

    for concept in model.concepts:
        if concept.core:
            continue
        count = ref_counts.get(concept.name, 0)
        if count != 1:
            vio(concept.name, "composition-tree",
                f"non-core concept referenced {count} times, expected exactly one")

    if len(cores) == 1 and not _has_cycle_free_reach(model, cores[0]):
        vio("", "composition-tree", "concepts unreachable from the core (cycle or orphan)")

    return report


def _check_annotation(bot: BotAnnotation, path: str, vio) -> None:
    if bot.to_expose and not bot.readable_name:
        vio(path, "readable-name-required", "exposed elements need a readableName")
    if len(set(bot.synonyms)) != len(bot.synonyms):
        vio(path, "synonym-duplicates", "synonyms contain duplicates")
    if bot.readable_name and bot.readable_name in bot.synonyms:
        vio(path, "synonym-duplicates", "synonyms must not repeat the readableName")


def _has_cycle_free_reach(model: DataModel, core: ConceptClass) -> bool:
    reached: set[str] = set()
    stack = [core.name]
    while stack:
        name = stack.pop()
        if name in reached:
            continue
        reached.add(name)
        concept = model.concept_named(name)
        if concept is None:
            continue
        for prop in concept.properties:
            if prop.component_ref:
                stack.append(prop.component_ref)
    return reached == {c.name for c in model.concepts}


def normalize(model: DataModel, groupings: list[tuple[str, list[str]]]) -> DataModel:
    """Split groups of core-concept properties into new non-core concepts.

    Each group (newConceptName, [property names]) moves those properties,
    bindings untouched, into a fresh concept; the core concept gains one
    composite property per group.
    """
    result = copy.deepcopy(model)
    if not groupings:
        return result
    core = result.core_concept()
    for new_name, prop_names in groupings:
        if result.concept_named(new_name) is not None:
            raise NameCollision(f"concept {new_name!r} already exists")
        moved: list[PropertyDef] = []
        for prop_name in prop_names:
            prop = core.property_named(prop_name)
            if prop is None:
                raise UnknownProperty(f"core concept has no property {prop_name!r}")
            moved.append(prop)
        composite_name = snake_case(new_name)
        if core.property_named(composite_name) is not None and composite_name not in prop_names:
            raise NameCollision(f"core already has a property {composite_name!r}")
        core.properties = [p for p in core.properties if p not in moved]
        result.concepts.append(
            ConceptClass(
                name=new_name,
                core=False,
                properties=moved,
                bot=BotAnnotation(to_expose=True, readable_name=humanize(new_name)),
            )
        )
        core.properties.append(
            PropertyDef(
                name=composite_name,
                semantic_type=SemanticType.COMPOSITE,
                bot=BotAnnotation(to_expose=True, readable_name=humanize(composite_name)),
                component_ref=new_name,
            )
        )
    return result


# --- persistence (versioned JSON document) ---

def persist(model: DataModel) -> dict:
    """Model to a plain JSON-ready document; inverse of `restore`."""
    return {
        "name": model.name,
        "version": model.version,
        "binding": {
            "apiType": model.binding.api_type.value,
            "domain": model.binding.domain,
            "resourcePath": model.binding.resource_path,
        },
        "concepts": [_concept_doc(c) for c in model.concepts],
    }


def _concept_doc(concept: ConceptClass) -> dict:
    return {
        "name": concept.name,
        "core": concept.core,
        "bot": _annotation_doc(concept.bot),
        "properties": [_property_doc(p) for p in concept.properties],
    }


def _property_doc(prop: PropertyDef) -> dict:
    doc = {
        "name": prop.name,
        "semanticType": prop.semantic_type.value,
        "bot": _annotation_doc(prop.bot),
        "toFilterWith": prop.to_filter_with,
        "binding": None,
        "componentRef": prop.component_ref,
    }
    if prop.binding is not None:
        doc["binding"] = {
            "fieldName": prop.binding.field_name,
            "sourceType": prop.binding.source_type,
        }
    return doc


def _annotation_doc(bot: BotAnnotation) -> dict:
    return {
        "toExpose": bot.to_expose,
        "readableName": bot.readable_name,
        "synonyms": list(bot.synonyms),
    }


def restore(document: dict | str) -> DataModel:
    """Rebuild a model from `persist` output (dict or JSON text)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedDocument("model document must be a JSON object")
    version = document.get("version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"expected schema version {SCHEMA_VERSION!r}, got {version!r}")
    try:
        binding_doc = document["binding"]
        binding = ApiBinding(
            api_type=ApiType(binding_doc["apiType"]),
            domain=binding_doc["domain"],
            resource_path=binding_doc["resourcePath"],
        )
        concepts = [_concept_from(c) for c in document["concepts"]]
        return DataModel(
            name=document["name"],
            concepts=concepts,
            binding=binding,
            version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDocument(f"bad model document: {exc}") from exc


def _concept_from(doc: dict) -> ConceptClass:
    return ConceptClass(
        name=doc["name"],
        core=bool(doc["core"]),
        bot=_annotation_from(doc["bot"]),
        properties=[_property_from(p) for p in doc["properties"]],
    )


def _property_from(doc: dict) -> PropertyDef:
    binding = None
    if doc.get("binding") is not None:
        binding = FieldBinding(
            field_name=doc["binding"]["fieldName"],
            source_type=doc["binding"].get("sourceType", ""),
        )
    return PropertyDef(
        name=doc["name"],
        semantic_type=SemanticType(doc["semanticType"]),
        bot=_annotation_from(doc["bot"]),
        to_filter_with=bool(doc["toFilterWith"]),
        binding=binding,
        component_ref=doc.get("componentRef"),
    )


def _annotation_from(doc: dict) -> BotAnnotation:
    return BotAnnotation(
        to_expose=bool(doc["toExpose"]),
        readable_name=doc["readableName"],
        synonyms=list(doc["synonyms"]),
    )


def dumps(model: DataModel) -> str:
    """Deterministic JSON text for a model document."""
    return json.dumps(persist(model), indent=2, ensure_ascii=False) + "\n"
