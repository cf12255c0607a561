"""Typed errors raised across the toolchain.

`ChatbotError` is the common base so callers (notably the CLI) can map any
domain failure to a diagnostic + exit code without enumerating subclasses.
"""


class ChatbotError(Exception):
    """Base class for all toolchain errors."""


# model
class UnknownProperty(ChatbotError):
    pass


class NameCollision(ChatbotError):
    pass


class MalformedDocument(ChatbotError):
    pass


class SchemaVersionMismatch(ChatbotError):
    pass


class UnknownPath(ChatbotError):
    pass


class CompositeProperty(ChatbotError):
    pass


class InvariantViolation(ChatbotError):
    pass


# importers
class MalformedDescriptor(ChatbotError):
    pass


class EmptyDataset(ChatbotError):
    pass


# botgen
class NoExposedConcept(ChatbotError):
    pass


class NoExposedProperties(ChatbotError):
    pass


# nlu
class NoMatch(ChatbotError):
    pass


class UnparsableValue(ChatbotError):
    pass


class UnknownVocabulary(ChatbotError):
    pass


class AmbiguousVocabulary(ChatbotError):
    pass


# runtime
class UnsupportedDialect(ChatbotError):
    pass


class UnsupportedFilter(ChatbotError):
    pass
