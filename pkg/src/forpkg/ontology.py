"""Policy-domain ontology: entity types, relation types, and their constraints.

The builtin schema covers forestry policy and regulation text: 10 entity types
and 15 relation labels.  Twelve labels are stored forward relations; the other
three (``isPublished``, ``employ``, ``isCited``) only ever name the reverse
reading of a forward relation and are rewritten to it before storage.
``contain`` is special: it is a forward relation in its own right *and* the
reverse reading of ``locate``, ``belongTo``, and ``classifyTo``, so those three
materialize derived ``contain`` edges while a directly asserted ``contain``
implies nothing in return.

Schemas are plain frozen values.  They are never mutated after construction;
extension builds a new schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import yaml

from .errors import (
    ConflictingDefinition,
    SchemaFormatError,
    SignatureViolation,
    UnknownEntityType,
    UnknownRelationLabel,
    UnknownRelationType,
)

#: Forward relation codes in canonical declaration order.
FORWARD_RELATION_CODES = (
    "publish", "locate", "belongTo", "workFor", "duty", "isProhibited",
    "hasRight", "define", "relevant", "classifyTo", "cite", "contain",
)

#: Inverse-only labels and the forward code each rewrites to.
INVERSE_LABELS = {
    "isPublished": "publish",
    "employ": "workFor",
    "isCited": "cite",
}

#: All 15 labels a classifier or an annotator may emit.
ALL_RELATION_LABELS = FORWARD_RELATION_CODES + tuple(INVERSE_LABELS)


@dataclass(frozen=True)
class EntityTypeDef:
    code: str
    display_name: str
    description: str


@dataclass(frozen=True)
class RelationTypeDef:
    """A stored (forward) relation with its legal head/tail type sets.

    ``inverse_code`` names the label under which the reverse reading travels;
    for ``locate``/``belongTo``/``classifyTo`` that label is the forward
    relation ``contain``, for ``publish``/``workFor``/``cite`` it is an
    inverse-only label, and deontic relations plus ``define``/``contain``
    declare none.
    """

    code: str
    display_name: str
    domain: frozenset[str]
    range: frozenset[str]
    inverse_code: str | None = None
    is_symmetric: bool = False
    is_deontic: bool = False


@dataclass(frozen=True)
class Verdict:
    """Outcome of a signature check."""

    ok: bool
    reason: str = ""
    side: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class OntologySchema:
    entity_types: dict[str, EntityTypeDef]
    relation_types: dict[str, RelationTypeDef]
    version: str = "custom"

    def entity_type(self, code: str) -> EntityTypeDef:
        try:
            return self.entity_types[code]
        except KeyError:
            raise UnknownEntityType(code) from None

    def relation_type(self, code: str) -> RelationTypeDef:
        try:
            return self.relation_types[code]
        except KeyError:
            raise UnknownRelationType(code) from None

    def resolve_label(self, label: str) -> tuple[str, bool]:
        """Map any known relation label to ``(forward_code, swapped)``.

        ``swapped`` is True for the three inverse-only labels, whose head and
        tail must change places to be stored.  Forward codes, ``contain``
        included, pass through unswapped.
        """
        if label in self.relation_types:
            return label, False
        if label in INVERSE_LABELS and INVERSE_LABELS[label] in self.relation_types:
            return INVERSE_LABELS[label], True
        raise UnknownRelationLabel(label)

    def known_labels(self) -> tuple[str, ...]:
        forward = tuple(self.relation_types)
        inverse = tuple(
            lab for lab, code in INVERSE_LABELS.items() if code in self.relation_types
        )
        return forward + inverse


def validate_signature(
    schema: OntologySchema, head_type: str, relation: str, tail_type: str
) -> Verdict:
    """Check a (head type, relation, tail type) combination against the schema.

    Unknown codes raise; a known-but-illegal combination returns a violation
    verdict naming the failing side.
    """
    schema.entity_type(head_type)
    schema.entity_type(tail_type)
    rel = schema.relation_type(relation)
    head_ok = head_type in rel.domain
    tail_ok = tail_type in rel.range
    if head_ok and tail_ok:
        return Verdict(ok=True)
    if not head_ok and not tail_ok:
        side = "both"
    elif not head_ok:
        side = "domain"
    else:
        side = "range"
    return Verdict(
        ok=False,
        reason=f"{side} violation for ({head_type}, {relation}, {tail_type})",
        side=side,
    )


def normalize_relation(
    schema: OntologySchema, head_type: str, relation_label: str, tail_type: str
) -> tuple[str, str, str]:
    """Rewrite any of the 15 labels to storage form.

    Inverse-only labels come back as their forward code with head and tail
    types swapped; forward labels pass through.  The normalized signature must
    validate, otherwise :class:`SignatureViolation` is raised.
    """
    code, swapped = schema.resolve_label(relation_label)
    if swapped:
        head_type, tail_type = tail_type, head_type
    verdict = validate_signature(schema, head_type, code, tail_type)
    if not verdict:
        raise SignatureViolation(head_type, code, tail_type, verdict.side)
    return head_type, code, tail_type


def _check_schema(schema: OntologySchema) -> None:
    entity_codes = set(schema.entity_types)
    for code, et in schema.entity_types.items():
        if code != et.code:
            raise SchemaFormatError(f"entity type keyed {code!r} declares code {et.code!r}")
    for code, rel in schema.relation_types.items():
        if code != rel.code:
            raise SchemaFormatError(f"relation keyed {code!r} declares code {rel.code!r}")
        if not rel.domain or not rel.range:
            raise SchemaFormatError(f"relation {code!r} has an empty domain or range")
        dangling = (rel.domain | rel.range) - entity_codes
        if dangling:
            raise SchemaFormatError(
                f"relation {code!r} references undeclared entity types {sorted(dangling)}"
            )
        if rel.is_symmetric and rel.domain != rel.range:
            raise SchemaFormatError(f"symmetric relation {code!r} must have domain = range")
        if rel.inverse_code is not None:
            # Inverse closure: an inverse label that is itself a stored
            # relation must exist; inverse-only labels need no declaration.
            if rel.inverse_code not in INVERSE_LABELS and rel.inverse_code not in schema.relation_types:
                raise SchemaFormatError(
                    f"relation {code!r} names undeclared inverse {rel.inverse_code!r}"
                )


_BUILTIN_ENTITY_TYPES = [
    ("ORG", "Organizations",
     "Forestry-related companies, research institutions, government agencies, "
     "and non-profit organizations"),
    ("PER", "Person",
     "Individuals in the forestry field: officials, scientists, policymakers, "
     "environmental activists, forestry entrepreneurs"),
    ("LOC", "Geographical Locations",
     "General geographic locations or geographic entities related to forestry"),
    ("DOC", "Policy Documents", "The title of a policy document"),
    ("CLS", "Categories", "The policy category a document falls under"),
    ("CONC", "Abstract Concepts", "Terms, theories, and methods in forestry"),
    ("OBJ", "Concrete Objects", "Specific forestry-related tools, items, and other physical things"),
    ("EXP_DEF", "Explanations/Definitions",
     "An explanation or definition of a forestry concept"),
    ("ACT", "Action", "An action that a capable subject can perform"),
    ("STATE", "State", "The state presented by a subject that cannot act on its own"),
]

_DEONTIC_SIG = (frozenset({"PER", "ORG", "OBJ"}), frozenset({"ACT", "STATE"}))
_RELEVANT_TYPES = frozenset({"CONC", "OBJ", "EXP_DEF", "ACT", "STATE", "DOC"})

_BUILTIN_RELATION_TYPES = [
    RelationTypeDef("publish", "Publish", frozenset({"ORG"}), frozenset({"DOC"}),
                    inverse_code="isPublished"),
    RelationTypeDef("locate", "Locate", frozenset({"ORG", "LOC"}), frozenset({"LOC"}),
                    inverse_code="contain"),
    RelationTypeDef("belongTo", "Belong to", frozenset({"ORG"}), frozenset({"ORG"}),
                    inverse_code="contain"),
    RelationTypeDef("workFor", "Take office", frozenset({"PER"}), frozenset({"ORG"}),
                    inverse_code="employ"),
    RelationTypeDef("duty", "Have the duty", *_DEONTIC_SIG, is_deontic=True),
    RelationTypeDef("isProhibited", "Prohibit", *_DEONTIC_SIG, is_deontic=True),
    RelationTypeDef("hasRight", "Have the right", *_DEONTIC_SIG, is_deontic=True),
    RelationTypeDef("define", "Define", frozenset({"CONC", "OBJ"}), frozenset({"EXP_DEF"})),
    RelationTypeDef("relevant", "Be relevant to", _RELEVANT_TYPES, _RELEVANT_TYPES,
                    inverse_code="relevant", is_symmetric=True),
    RelationTypeDef("classifyTo", "Be classified into", frozenset({"DOC"}), frozenset({"CLS"}),
                    inverse_code="contain"),
    RelationTypeDef("cite", "Cite", frozenset({"DOC"}), frozenset({"DOC"}),
                    inverse_code="isCited"),
    RelationTypeDef("contain", "Contain",
                    frozenset({"DOC", "LOC", "ORG", "STATE", "ACT", "CLS"}),
                    frozenset({"DOC", "LOC", "ORG", "CONC", "OBJ"})),
]

#: Display names for the inverse-only labels, used when rendering derived edges.
INVERSE_DISPLAY_NAMES = {
    "isPublished": "Be published",
    "employ": "Employ",
    "isCited": "Be cited",
}


def label_display_name(schema: OntologySchema, label: str) -> str:
    """Human-readable name for any of the 15 labels, derived ones included."""
    code, swapped = schema.resolve_label(label)
    if swapped:
        return INVERSE_DISPLAY_NAMES[label]
    return schema.relation_type(code).display_name

_builtin_cache: OntologySchema | None = None


def builtin_schema() -> OntologySchema:
    """The builtin forestry-policy schema (10 entity types, 12 forward relations)."""
    global _builtin_cache
    if _builtin_cache is None:
        schema = OntologySchema(
            entity_types={c: EntityTypeDef(c, n, d) for c, n, d in _BUILTIN_ENTITY_TYPES},
            relation_types={r.code: r for r in _BUILTIN_RELATION_TYPES},
            version="forestry-policy-1",
        )
        _check_schema(schema)
        _builtin_cache = schema
    return _builtin_cache


def extend_schema(base: OntologySchema, extension: OntologySchema) -> OntologySchema:
    """Merge an extension into a base schema.

    New codes are added; byte-identical re-declarations are tolerated; anything
    else raises :class:`ConflictingDefinition`.  The merged schema is fully
    re-validated.
    """
    entity_types = dict(base.entity_types)
    for code, et in extension.entity_types.items():
        if code in entity_types and entity_types[code] != et:
            raise ConflictingDefinition(code)
        entity_types[code] = et
    relation_types = dict(base.relation_types)
    for code, rel in extension.relation_types.items():
        if code in relation_types and relation_types[code] != rel:
            raise ConflictingDefinition(code)
        relation_types[code] = rel
    version = base.version
    if extension.version not in ("", "custom", base.version):
        version = f"{base.version}+{extension.version}"
    merged = OntologySchema(entity_types, relation_types, version)
    _check_schema(merged)
    return merged


# --- schema files -----------------------------------------------------------
#
# Schemas round-trip through a small YAML dialect so deployments can extend
# the ontology by editing a file:
#
#   version: my-schema-1
#   entity_types:
#     SPECIES: {display_name: Species, description: A biological species}
#   relation_types:
#     habitatOf:
#       display_name: Habitat of
#       domain: [SPECIES]
#       range: [LOC]
#       inverse: null        # optional
#       symmetric: false     # optional
#       deontic: false       # optional


def schema_to_dict(schema: OntologySchema) -> dict:
    doc: dict = {"version": schema.version, "entity_types": {}, "relation_types": {}}
    for code in sorted(schema.entity_types):
        et = schema.entity_types[code]
        doc["entity_types"][code] = {
            "display_name": et.display_name,
            "description": et.description,
        }
    for code in sorted(schema.relation_types):
        rel = schema.relation_types[code]
        entry: dict = {
            "display_name": rel.display_name,
            "domain": sorted(rel.domain),
            "range": sorted(rel.range),
        }
        if rel.inverse_code is not None:
            entry["inverse"] = rel.inverse_code
        if rel.is_symmetric:
            entry["symmetric"] = True
        if rel.is_deontic:
            entry["deontic"] = True
        doc["relation_types"][code] = entry
    return doc


def schema_from_dict(doc: dict) -> OntologySchema:
    if not isinstance(doc, dict):
        raise SchemaFormatError("schema document must be a mapping")
    try:
        entity_types = {
            code: EntityTypeDef(code, spec["display_name"], spec.get("description", ""))
            for code, spec in (doc.get("entity_types") or {}).items()
        }
        relation_types = {
            code: RelationTypeDef(
                code=code,
                display_name=spec["display_name"],
                domain=frozenset(spec["domain"]),
                range=frozenset(spec["range"]),
                inverse_code=spec.get("inverse"),
                is_symmetric=bool(spec.get("symmetric", False)),
                is_deontic=bool(spec.get("deontic", False)),
            )
            for code, spec in (doc.get("relation_types") or {}).items()
        }
    except (KeyError, TypeError) as exc:
        raise SchemaFormatError(f"malformed schema entry: {exc}") from exc
    schema = OntologySchema(entity_types, relation_types, str(doc.get("version", "custom")))
    _check_schema(schema)
    return schema


def dump_schema(schema: OntologySchema) -> str:
    return yaml.safe_dump(schema_to_dict(schema), allow_unicode=True, sort_keys=False)


def load_schema(path: str) -> OntologySchema:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return schema_from_dict(doc)


def load_builtin_schema_file() -> OntologySchema:
    """Parse the schema file shipped inside the package.

    Equal to :func:`builtin_schema`; the file exists so deployments have a
    template to copy and extend.
    """
    text = resources.files("forpkg").joinpath("data/builtin_ontology.yaml").read_text("utf-8")
    return schema_from_dict(yaml.safe_load(text))
