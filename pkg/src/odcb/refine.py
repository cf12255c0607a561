"""Designer-facing refinement of an imported model.

All operations are pure: they return a new model and leave the input
untouched. A refinement script (JSON list of {op, path, value} records)
replays an editing session headlessly, so refinements are versionable.
"""

from __future__ import annotations

import copy

from .errors import CompositeProperty, InvariantViolation, UnknownPath
from .model import (
    BotAnnotation,
    ConceptClass,
    DataModel,
    PropertyDef,
    humanize,
    normalize,
    validate,
)


def apply_default_annotations(model: DataModel) -> DataModel:
    """Fill in missing conversation annotations; idempotent."""
    result = copy.deepcopy(model)
    for concept in result.concepts:
        _default(concept.bot, concept.name)
        for prop in concept.properties:
            _default(prop.bot, prop.name)
    return result


def _default(bot: BotAnnotation, name: str) -> None:
    if not bot.readable_name:
        bot.readable_name = humanize(name)


def resolve_path(model: DataModel, path: str) -> ConceptClass | PropertyDef:
    """Element path "Concept" or "Concept.property" to the element itself."""
    concept_name, _, prop_name = path.partition(".")
    concept = model.concept_named(concept_name)
    if concept is None:
        raise UnknownPath(f"no concept {concept_name!r}")
    if not prop_name:
        return concept
    prop = concept.property_named(prop_name)
    if prop is None:
        raise UnknownPath(f"concept {concept_name!r} has no property {prop_name!r}")
    return prop


def set_annotation(model: DataModel, path: str, change: dict) -> DataModel:
    """Apply one annotation change; `change` holds exactly one of
    toExpose, readableName, addSynonym, removeSynonym, toFilterWith."""
    if len(change) != 1:
        raise InvariantViolation(f"expected exactly one change, got {sorted(change)}")
    result = copy.deepcopy(model)
    element = resolve_path(result, path)
    key, value = next(iter(change.items()))
    if key == "toExpose":
        element.bot.to_expose = bool(value)
    elif key == "readableName":
        element.bot.readable_name = str(value)
    elif key == "addSynonym":
        synonym = str(value).lower()
        if synonym == element.bot.readable_name:
            raise InvariantViolation(f"synonym {synonym!r} repeats the readableName")
        if synonym not in element.bot.synonyms:
            element.bot.synonyms.append(synonym)
    elif key == "removeSynonym":
        synonym = str(value).lower()
        element.bot.synonyms = [s for s in element.bot.synonyms if s != synonym]
    elif key == "toFilterWith":
        if not isinstance(element, PropertyDef):
            raise InvariantViolation(f"{path!r} is not a property, cannot set toFilterWith")
        element.to_filter_with = bool(value)
    else:
        raise InvariantViolation(f"unknown change {key!r}")
    report = validate(result)
    if not report.empty():
        raise InvariantViolation(report.describe())
    return result


def set_binding(model: DataModel, path: str, field_name: str) -> DataModel:
    """Replace a leaf property's source field name (API drift fix)."""
    result = copy.deepcopy(model)
    element = resolve_path(result, path)
    if not isinstance(element, PropertyDef):
        raise UnknownPath(f"{path!r} does not name a property")
    if element.is_composite or element.binding is None:
        raise CompositeProperty(f"{path!r} is composite, it has no field binding")
    if not field_name:
        raise InvariantViolation("fieldName must be non-empty")
    element.binding.field_name = field_name
    return result


def apply_script(model: DataModel, script: list[dict]) -> DataModel:
    """Replay a refinement script: records {op, path, value} applied in order.

    Ops: setAnnotation (value = single-key change object),
    setBinding (value = new fieldName), normalize (value = {name: [props]}).
    """
    current = model
    for index, record in enumerate(script):
        try:
            op = record["op"]
        except (KeyError, TypeError) as exc:
            raise InvariantViolation(f"script record {index} has no op") from exc
        if op == "setAnnotation":
            current = set_annotation(current, record["path"], record["value"])
        elif op == "setBinding":
            current = set_binding(current, record["path"], record["value"])
        elif op == "normalize":
            groupings = [(name, list(props)) for name, props in record["value"].items()]
            current = normalize(current, groupings)
        else:
            raise InvariantViolation(f"script record {index}: unknown op {op!r}")
    return current
