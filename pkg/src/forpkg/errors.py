"""Exception types shared across the toolkit.

Every error raised by forpkg code derives from :class:`ForpkgError` so callers
can catch toolkit failures without swallowing unrelated bugs.
"""

from __future__ import annotations


class ForpkgError(Exception):
    """Base class for all toolkit errors."""


# --- ontology ---------------------------------------------------------------

class UnknownEntityType(ForpkgError):
    def __init__(self, code: str):
        super().__init__(f"unknown entity type code: {code!r}")
        self.code = code


class UnknownRelationType(ForpkgError):
    def __init__(self, code: str):
        super().__init__(f"unknown relation type code: {code!r}")
        self.code = code


class UnknownRelationLabel(ForpkgError):
    def __init__(self, label: str):
        super().__init__(f"unknown relation label: {label!r}")
        self.label = label


class SignatureViolation(ForpkgError):
    """A (head type, relation, tail type) combination the schema forbids.

    ``side`` is ``"domain"`` when the head type is illegal, ``"range"`` when
    the tail type is, and ``"both"`` when neither end fits.
    """

    def __init__(self, head_type: str, relation: str, tail_type: str, side: str):
        super().__init__(
            f"signature violation on {side}: "
            f"({head_type}, {relation}, {tail_type}) is not allowed"
        )
        self.head_type = head_type
        self.relation = relation
        self.tail_type = tail_type
        self.side = side


class ConflictingDefinition(ForpkgError):
    def __init__(self, code: str):
        super().__init__(f"conflicting re-declaration of code {code!r}")
        self.code = code


class SchemaFormatError(ForpkgError):
    """A schema file does not parse into a valid schema."""


# --- graph store ------------------------------------------------------------

class EmptyMention(ForpkgError):
    pass


class MissingEntity(ForpkgError):
    def __init__(self, entity_id: str):
        super().__init__(f"no entity with id {entity_id!r}")
        self.entity_id = entity_id


class ParseError(ForpkgError):
    """An import stream record could not be parsed; carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ImportViolation(ForpkgError):
    """A parsed import record failed validation; carries the line number."""

    def __init__(self, line_no: int, cause: ForpkgError):
        super().__init__(f"line {line_no}: {cause}")
        self.line_no = line_no
        self.cause = cause


# --- corpus -----------------------------------------------------------------

class UnreadableFile(ForpkgError):
    def __init__(self, path: str, reason: str = ""):
        detail = f": {reason}" if reason else ""
        super().__init__(f"unreadable corpus file {path}{detail}")
        self.path = path


class DuplicateDocId(ForpkgError):
    def __init__(self, doc_id: str):
        super().__init__(f"duplicate doc_id {doc_id!r} in corpus")
        self.doc_id = doc_id


class CorpusWarning(ForpkgError, UserWarning):
    """Degraded-input notice: warned by default, raised in strict mode."""


# --- similarity -------------------------------------------------------------

class DimMismatch(ForpkgError):
    def __init__(self, dim_a: int, dim_b: int):
        super().__init__(f"vector dims differ: {dim_a} vs {dim_b}")


class ZeroVector(ForpkgError):
    pass


class ProviderError(ForpkgError):
    def __init__(self, doc_id: str, reason: str):
        super().__init__(f"embedding provider failed on {doc_id!r}: {reason}")
        self.doc_id = doc_id


# --- extraction -------------------------------------------------------------

class ClientError(ForpkgError):
    """A model client failed to produce a response."""


class ReplayMiss(ClientError):
    """The replay client has no recorded response for a prompt digest."""

    def __init__(self, digest: str):
        super().__init__(f"no recorded response for digest {digest}")
        self.digest = digest


class UnparseableResponse(ForpkgError):
    pass


class ClassifierUnavailable(ForpkgError):
    pass


class RelationWordNotFound(ForpkgError):
    pass


class EmptyTail(ForpkgError):
    pass


# --- cli --------------------------------------------------------------------

class ConfigError(ForpkgError):
    """Invalid run configuration; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"config field {field!r}: {message}")
        self.field = field
