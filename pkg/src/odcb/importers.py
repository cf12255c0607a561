"""Turn Open Data API descriptions into annotated data models.

Importers consume pre-fetched JSON documents (never URLs) so they stay pure
and fixture-testable; the CLI owns the fetching. Socrata is fully supported,
CKAN minimally; OData/OpenAPI importers are registry extension points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from .errors import EmptyDataset, MalformedDescriptor
from .model import (
    ApiBinding,
    ApiType,
    ConceptClass,
    DataModel,
    FieldBinding,
    PropertyDef,
    SemanticType,
    identifierize,
)
from .refine import apply_default_annotations

logger = logging.getLogger(__name__)

# Raw-type mapping tables, derived from the recorded fixtures' type
# inventories. Anything absent maps to Text with a warning.
SOCRATA_TYPES = {
    "text": SemanticType.TEXT,
    "number": SemanticType.NUMBER,
    "money": SemanticType.NUMBER,
    "percent": SemanticType.NUMBER,
    "double": SemanticType.NUMBER,
    "checkbox": SemanticType.BOOLEAN,
    "calendar_date": SemanticType.DATETIME,
    "floating_timestamp": SemanticType.DATETIME,
    "fixed_timestamp": SemanticType.DATETIME,
    "date": SemanticType.DATETIME,
    "url": SemanticType.URL,
    "point": SemanticType.GEOPOINT,
    "location": SemanticType.GEOPOINT,
}

CKAN_TYPES = {
    "text": SemanticType.TEXT,
    "numeric": SemanticType.NUMBER,
    "int": SemanticType.NUMBER,
    "int4": SemanticType.NUMBER,
    "int8": SemanticType.NUMBER,
    "float4": SemanticType.NUMBER,
    "float8": SemanticType.NUMBER,
    "timestamp": SemanticType.DATETIME,
    "date": SemanticType.DATETIME,
    "bool": SemanticType.BOOLEAN,
}

_TYPE_TABLES = {
    ApiType.SOCRATA: SOCRATA_TYPES,
    ApiType.CKAN: CKAN_TYPES,
}


def map_source_type(api_type: ApiType, source_type: str, warnings: list[str] | None = None) -> SemanticType:
    """Raw API type name to a semantic type; unknown names fall back to Text."""
    table = _TYPE_TABLES.get(api_type, {})
    mapped = table.get(source_type.lower().strip())
    if mapped is None:
        message = f"unknown {api_type.value} type {source_type!r}, treating as Text"
        logger.warning(message)
        if warnings is not None:
            warnings.append(message)
        return SemanticType.TEXT
    return mapped


@dataclass
class SocrataDescriptor:
    """Pre-fetched Socrata description: dataset metadata + Views columns."""

    metadata_doc: dict
    views_doc: dict
    domain: str
    dataset_id: str


@dataclass
class CkanDescriptor:
    """Pre-fetched CKAN datastore_search response for one resource."""

    resource_doc: dict
    base_url: str
    resource_id: str


def import_socrata(descriptor: SocrataDescriptor) -> DataModel:
    """Build a model with one core concept per the dataset's columns."""
    if not isinstance(descriptor.metadata_doc, dict) or not isinstance(descriptor.views_doc, dict):
        raise MalformedDescriptor("Socrata descriptor documents must be JSON objects")
    title = descriptor.metadata_doc.get("name") or descriptor.views_doc.get("name")
    if not title:
        raise MalformedDescriptor("dataset metadata carries no name")
    columns = descriptor.views_doc.get("columns")
    if columns is None:
        raise MalformedDescriptor("views document carries no columns")
    if not columns:
        raise EmptyDataset(f"dataset {descriptor.dataset_id!r} lists zero columns")

    properties = []
    for column in columns:
        try:
            field_name = column["fieldName"]
            data_type = column["dataTypeName"]
        except (KeyError, TypeError) as exc:
            raise MalformedDescriptor(f"bad views column: {exc}") from exc
        properties.append(
            PropertyDef(
                name=field_name,
                semantic_type=map_source_type(ApiType.SOCRATA, data_type),
                binding=FieldBinding(field_name=field_name, source_type=data_type),
            )
        )

    model = DataModel(
        name=identifierize(title),
        concepts=[ConceptClass(name=identifierize(title), core=True, properties=properties)],
        binding=ApiBinding(
            api_type=ApiType.SOCRATA,
            domain=descriptor.domain,
            resource_path=descriptor.dataset_id,
        ),
    )
    return apply_default_annotations(model)


def import_ckan(descriptor: CkanDescriptor) -> DataModel:
    """Build a model from a CKAN datastore_search fields array."""
    if not isinstance(descriptor.resource_doc, dict):
        raise MalformedDescriptor("CKAN descriptor document must be a JSON object")
    result = descriptor.resource_doc.get("result", descriptor.resource_doc)
    fields = result.get("fields")
    if fields is None:
        raise MalformedDescriptor("datastore_search response carries no fields")
    # CKAN always injects an internal _id column; it is not dataset data
    fields = [f for f in fields if not str(f.get("id", "")).startswith("_")]
    if not fields:
        raise EmptyDataset(f"resource {descriptor.resource_id!r} lists zero fields")

    properties = []
    for spec in fields:
        try:
            field_id = spec["id"]
            field_type = spec.get("type", "text")
        except TypeError as exc:
            raise MalformedDescriptor(f"bad datastore field: {exc}") from exc
        properties.append(
            PropertyDef(
                name=field_id,
                semantic_type=map_source_type(ApiType.CKAN, field_type),
                binding=FieldBinding(field_name=field_id, source_type=field_type),
            )
        )

    name = identifierize(descriptor.resource_id)
    model = DataModel(
        name=name,
        concepts=[ConceptClass(name=name, core=True, properties=properties)],
        binding=ApiBinding(
            api_type=ApiType.CKAN,
            domain=descriptor.base_url,
            resource_path=descriptor.resource_id,
        ),
    )
    return apply_default_annotations(model)


IMPORTERS: dict[ApiType, Callable] = {
    ApiType.SOCRATA: import_socrata,
    ApiType.CKAN: import_ckan,
    # OData / Adhoc (OpenAPI) are extension points: register an importer here
}
