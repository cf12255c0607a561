"""Closed vocabularies shared by generation and matching.

Surface forms are lowercase. The matcher scans longer phrases first on its
own, so ordering here only fixes display and template-expansion order:
canonical form first.
"""

from __future__ import annotations

from .model import SemanticType

EQUALS = "equals"
NOT_EQUALS = "not_equals"
LESS_THAN = "less_than"
GREATER_THAN = "greater_than"
CONTAINS = "contains"

OPERATOR_LABELS = {
    EQUALS: "equals",
    NOT_EQUALS: "not equals",
    LESS_THAN: "less than",
    GREATER_THAN: "greater than",
    CONTAINS: "contains",
}

OPERATOR_SURFACES = {
    EQUALS: ["equals", "equals to", "equal to", "is equal to", "="],
    NOT_EQUALS: ["not equals", "not equal to", "is not equal to", "different from", "!="],
    LESS_THAN: ["less than", "lower than", "smaller than", "before", "<"],
    GREATER_THAN: ["greater than", "bigger than", "more than", "after", ">"],
    CONTAINS: ["contains", "includes", "like"],
}

# Which comparison operators make sense per property type. The source only
# demonstrates equality and less-than; the rest is a documented extension.
OPERATORS_BY_TYPE = {
    SemanticType.TEXT: [EQUALS, NOT_EQUALS, CONTAINS],
    SemanticType.URL: [EQUALS, NOT_EQUALS, CONTAINS],
    SemanticType.NUMBER: [EQUALS, NOT_EQUALS, LESS_THAN, GREATER_THAN],
    SemanticType.DATETIME: [EQUALS, NOT_EQUALS, LESS_THAN, GREATER_THAN],
    SemanticType.BOOLEAN: [EQUALS],
    SemanticType.GEOPOINT: [EQUALS],
}

AVG = "avg"
MIN = "min"
MAX = "max"

AGG_LABELS = {AVG: "average", MIN: "minimum", MAX: "maximum"}

AGG_SURFACES = {
    AVG: ["average", "avg", "mean"],
    MIN: ["minimum", "min", "lowest"],
    MAX: ["maximum", "max", "highest"],
}

ASC = "asc"
DESC = "desc"

SORT_SURFACES = {
    ASC: ["asc", "ascending"],
    DESC: ["desc", "descending"],
}

# Canonical quick-reply labels for the two loop-closing intents; these must
# match a training template verbatim so a button press always matches.
END_FILTER_LABEL = "I don't want to add filters"
SHOW_RESULT_LABEL = "I don't want to add fields"
NEXT_PAGE_LABEL = "show me next page"


def surface_index(table: dict[str, list[str]]) -> list[tuple[str, str]]:
    """Flatten a surfaces table to (surface, key) pairs, longest surface
    first so greedy matching prefers the most specific form."""
    pairs = [(surface, key) for key, surfaces in table.items() for surface in surfaces]
    pairs.sort(key=lambda p: (-len(p[0].split()), -len(p[0])))
    return pairs
