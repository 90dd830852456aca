"""Validated, provenance-carrying triple store.

Every stored triple satisfies the schema's domain/range constraints.  Forward
relations that declare an inverse reading get that reading materialized as a
*derived* triple at insert time, so neighbor queries and exports never have to
recompute it; derived triples always point back at their origin.  The
symmetric ``relevant`` relation is stored once per pair with the endpoint ids
in sorted order, which makes duplicate detection direction-free.

Concurrency contract: many readers or one writer.  Mutations take the store's
write lock; readers go lockless (reads are snapshot-consistent enough for the
pipeline's needs).  ``bulk_load`` holds the lock across a whole batch and
re-verifies invariants before releasing it.
"""

from __future__ import annotations

import enum
import hashlib
import json
import threading
import unicodedata
from contextlib import contextmanager
from dataclasses import dataclass, field

from .errors import (
    EmptyMention,
    ForpkgError,
    ImportViolation,
    MissingEntity,
    ParseError,
    SignatureViolation,
)
from .ontology import INVERSE_LABELS, OntologySchema, validate_signature

_SEP = "\x1f"


class Stage(str, enum.Enum):
    """Pipeline stage that produced a fact."""

    document_level = "document_level"
    similarity = "similarity"
    head_entity = "head_entity"
    relation_classify = "relation_classify"
    tail_extract = "tail_extract"
    manual = "manual"


@dataclass(frozen=True)
class Provenance:
    doc_id: str
    segment_index: int = 0
    char_span: tuple[int, int] | None = None
    stage: Stage = Stage.manual
    confidence: float = 1.0
    #: free-text marker, e.g. which fallback produced the fact
    note: str = ""

    def __post_init__(self):
        if self.segment_index < 0:
            raise ValueError(f"segment_index must be >= 0, got {self.segment_index}")
        if self.char_span is not None:
            start, end = self.char_span
            if not (0 <= start < end):
                raise ValueError(f"char_span must satisfy 0 <= start < end, got {self.char_span}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")

    def sort_key(self):
        return (
            self.doc_id,
            self.segment_index,
            self.char_span if self.char_span is not None else (-1, -1),
            self.stage.value,
            self.confidence,
            self.note,
        )

    def to_dict(self) -> dict:
        return {
            "char_span": list(self.char_span) if self.char_span is not None else None,
            "confidence": self.confidence,
            "doc_id": self.doc_id,
            "note": self.note,
            "segment_index": self.segment_index,
            "stage": self.stage.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Provenance":
        span = doc.get("char_span")
        return cls(
            doc_id=doc["doc_id"],
            segment_index=doc["segment_index"],
            char_span=tuple(span) if span is not None else None,
            stage=Stage(doc["stage"]),
            confidence=doc["confidence"],
            note=doc.get("note", ""),
        )


@dataclass
class Entity:
    id: str
    type_code: str
    canonical_mention: str
    aliases: set[str] = field(default_factory=set)
    first_seen: Provenance | None = None
    #: Free-form side-channel for facts the schema has no relation for
    #: (document dates, keywords, timeliness).  Values must be JSON-safe.
    attributes: dict = field(default_factory=dict)


@dataclass
class Triple:
    id: str
    head_id: str
    relation_code: str
    tail_id: str
    derived: bool = False
    origin_id: str | None = None
    provenance: list[Provenance] = field(default_factory=list)


def normalize_mention(text: str) -> str:
    """Identity normalization: NFC, surrounding whitespace stripped, case kept.

    Chinese text is case-free and tails can be long clause spans, so anything
    stronger would merge mentions that should stay distinct.
    """
    return unicodedata.normalize("NFC", text).strip()


def entity_id(type_code: str, normalized_mention: str) -> str:
    digest = hashlib.sha256(
        (type_code + _SEP + normalized_mention).encode("utf-8")
    ).hexdigest()
    return f"{type_code}:{digest[:16]}"


def triple_id(head_id: str, relation_code: str, tail_id: str, derived: bool) -> str:
    marker = "d" if derived else "b"
    digest = hashlib.sha256(
        _SEP.join((head_id, relation_code, tail_id, marker)).encode("utf-8")
    ).hexdigest()
    return digest[:16]


class GraphStore:
    def __init__(self, schema: OntologySchema):
        self.schema = schema
        self._entities: dict[str, Entity] = {}
        self._triples: dict[str, Triple] = {}
        self._out: dict[str, set[str]] = {}
        self._in: dict[str, set[str]] = {}
        self._write_lock = threading.RLock()

    # --- introspection ------------------------------------------------------

    @property
    def entities(self) -> dict[str, Entity]:
        return self._entities

    def entity(self, eid: str) -> Entity:
        try:
            return self._entities[eid]
        except KeyError:
            raise MissingEntity(eid) from None

    def triple(self, tid: str) -> Triple:
        return self._triples[tid]

    def iter_triples(self, include_derived: bool = True):
        for t in self._triples.values():
            if include_derived or not t.derived:
                yield t

    def base_triple_count(self) -> int:
        return sum(1 for t in self._triples.values() if not t.derived)

    def derived_triple_count(self) -> int:
        return sum(1 for t in self._triples.values() if t.derived)

    # --- mutation -----------------------------------------------------------

    def upsert_entity(
        self, type_code: str, mention: str, provenance: Provenance | None = None
    ) -> str:
        self.schema.entity_type(type_code)
        norm = normalize_mention(mention)
        if not norm:
            raise EmptyMention(repr(mention))
        eid = entity_id(type_code, norm)
        with self._write_lock:
            existing = self._entities.get(eid)
            if existing is None:
                self._entities[eid] = Entity(
                    id=eid,
                    type_code=type_code,
                    canonical_mention=norm,
                    first_seen=provenance,
                )
            elif mention != existing.canonical_mention:
                existing.aliases.add(mention)
        return eid

    def insert_triple(
        self,
        head_id: str,
        relation_code: str,
        tail_id: str,
        provenance: Provenance | None = None,
    ) -> tuple[str, str | None]:
        """Insert a forward triple; returns (triple id, derived inverse id or None).

        Duplicate inserts merge provenance onto the existing triple (and its
        derived inverse) instead of creating a second edge.
        """
        rel = self.schema.relation_type(relation_code)
        head = self.entity(head_id)
        tail = self.entity(tail_id)
        verdict = validate_signature(self.schema, head.type_code, relation_code, tail.type_code)
        if not verdict:
            raise SignatureViolation(head.type_code, relation_code, tail.type_code, verdict.side)
        if rel.is_symmetric and tail_id < head_id:
            head_id, tail_id = tail_id, head_id
        provs = [provenance] if provenance is not None else []
        with self._write_lock:
            base_id = self._store(head_id, relation_code, tail_id, False, None, provs)
            derived_id = None
            if rel.inverse_code is not None and not rel.is_symmetric:
                derived_id = self._store(
                    tail_id, rel.inverse_code, head_id, True, base_id, provs
                )
        return base_id, derived_id

    def _store(
        self,
        head_id: str,
        relation_code: str,
        tail_id: str,
        derived: bool,
        origin_id: str | None,
        provenance: list[Provenance],
    ) -> str:
        tid = triple_id(head_id, relation_code, tail_id, derived)
        existing = self._triples.get(tid)
        if existing is not None:
            # merge, skipping records already present so re-runs stay idempotent
            for prov in provenance:
                if prov not in existing.provenance:
                    existing.provenance.append(prov)
            return tid
        self._triples[tid] = Triple(
            id=tid,
            head_id=head_id,
            relation_code=relation_code,
            tail_id=tail_id,
            derived=derived,
            origin_id=origin_id,
            provenance=list(provenance),
        )
        self._out.setdefault(head_id, set()).add(tid)
        self._in.setdefault(tail_id, set()).add(tid)
        return tid

    @contextmanager
    def bulk_load(self):
        """Hold the write lock across a batch; verify invariants on the way out."""
        with self._write_lock:
            yield self
            problems = verify(self)
            if problems:
                raise ForpkgError(
                    "bulk load left the store inconsistent: " + "; ".join(problems[:5])
                )

    # --- queries ------------------------------------------------------------

    def neighbors(
        self,
        eid: str,
        direction: str = "both",
        relation_filter: set[str] | None = None,
        max_results: int | None = None,
        include_derived: bool | None = None,
    ) -> list[tuple[Triple, Entity]]:
        """Edges touching an entity, as (triple, other endpoint) pairs.

        Ordering is deterministic: relation code, then the other endpoint's
        id.  Derived triples are skipped for outgoing queries and included for
        incoming ones unless ``include_derived`` overrides the default.
        """
        if direction not in ("out", "in", "both"):
            raise ValueError(f"direction must be out, in, or both, got {direction!r}")
        self.entity(eid)
        hits: dict[str, tuple[Triple, Entity]] = {}
        if direction in ("out", "both"):
            want_derived = include_derived if include_derived is not None else False
            for tid in self._out.get(eid, ()):
                t = self._triples[tid]
                if t.derived and not want_derived:
                    continue
                hits[tid] = (t, self._entities[t.tail_id])
        if direction in ("in", "both"):
            want_derived = include_derived if include_derived is not None else True
            for tid in self._in.get(eid, ()):
                t = self._triples[tid]
                if t.derived and not want_derived:
                    continue
                hits.setdefault(tid, (t, self._entities[t.head_id]))
        out = [
            pair for pair in hits.values()
            if relation_filter is None or pair[0].relation_code in relation_filter
        ]
        out.sort(key=lambda pair: (pair[0].relation_code, pair[1].id, pair[0].derived, pair[0].id))
        if max_results is not None:
            out = out[:max_results]
        return out


# --- serialization ----------------------------------------------------------
#
# jsonl dialect: UTF-8, one JSON object per line, keys sorted, compact
# separators, non-ASCII kept literal.  Entities come first (sorted by id),
# then non-derived triples (sorted by id).  Derived edges are never written;
# importers re-materialize them from the relation metadata.


def _dump_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"


def _entity_record(e: Entity) -> dict:
    return {
        "aliases": sorted(e.aliases),
        "attributes": e.attributes,
        "canonical_mention": e.canonical_mention,
        "first_seen": e.first_seen.to_dict() if e.first_seen is not None else None,
        "id": e.id,
        "kind": "entity",
        "type_code": e.type_code,
    }


def _triple_record(t: Triple) -> dict:
    return {
        "head_id": t.head_id,
        "id": t.id,
        "kind": "triple",
        "provenance": [p.to_dict() for p in sorted(t.provenance, key=Provenance.sort_key)],
        "relation_code": t.relation_code,
        "tail_id": t.tail_id,
    }


def _script_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph(store: GraphStore, format: str = "jsonl") -> bytes:
    if format == "jsonl":
        lines = []
        for eid in sorted(store.entities):
            lines.append(_dump_line(_entity_record(store.entities[eid])))
        base = sorted((t for t in store.iter_triples(include_derived=False)), key=lambda t: t.id)
        for t in base:
            lines.append(_dump_line(_triple_record(t)))
        return "".join(lines).encode("utf-8")
    if format == "graphdb_script":
        return _export_script(store)
    raise ValueError(f"unknown export format {format!r}")


def _export_script(store: GraphStore) -> bytes:
    lines = [
        "// property-graph import script (idempotent MERGE statements)",
        "// node label = entity type code, relationship type = relation code",
    ]
    if store.entities:
        lines.append("// nodes")
    for eid in sorted(store.entities):
        e = store.entities[eid]
        lines.append(
            f"MERGE (n:{e.type_code} {{id: {_script_quote(e.id)}}}) "
            f"SET n.mention = {_script_quote(e.canonical_mention)};"
        )
    base = sorted((t for t in store.iter_triples(include_derived=False)), key=lambda t: t.id)
    if base:
        lines.append("// relationships")
    for t in base:
        provs = sorted(t.provenance, key=Provenance.sort_key)
        doc_id = provs[0].doc_id if provs else ""
        confidence = max((p.confidence for p in provs), default=1.0)
        lines.append(
            f"MATCH (h {{id: {_script_quote(t.head_id)}}}), (t {{id: {_script_quote(t.tail_id)}}}) "
            f"MERGE (h)-[r:{t.relation_code}]->(t) "
            f"SET r.doc_id = {_script_quote(doc_id)}, r.confidence = {confidence!r};"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def import_graph(data: bytes | str, schema: OntologySchema) -> GraphStore:
    """Rebuild a store from the jsonl dialect, re-checking every invariant.

    Derived edges are re-materialized, never read.  Errors name the 1-based
    line they occurred on.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    store = GraphStore(schema)
    for line_no, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, str(exc)) from exc
        if not isinstance(record, dict) or "kind" not in record:
            raise ParseError(line_no, "record is not an object with a 'kind' field")
        try:
            if record["kind"] == "entity":
                _import_entity(store, record)
            elif record["kind"] == "triple":
                _import_triple(store, record)
            else:
                raise ParseError(line_no, f"unknown record kind {record['kind']!r}")
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(line_no, f"malformed {record.get('kind')} record: {exc}") from exc
        except ForpkgError as exc:
            raise ImportViolation(line_no, exc) from exc
    problems = verify(store)
    if problems:
        raise ImportViolation(0, ForpkgError("; ".join(problems[:5])))
    return store


def _import_entity(store: GraphStore, record: dict) -> None:
    first_seen = record["first_seen"]
    prov = Provenance.from_dict(first_seen) if first_seen is not None else None
    eid = store.upsert_entity(record["type_code"], record["canonical_mention"], prov)
    if eid != record["id"]:
        raise ForpkgError(
            f"entity id {record['id']!r} does not match its content (expected {eid!r})"
        )
    store.entities[eid].aliases.update(record["aliases"])
    store.entities[eid].attributes.update(record.get("attributes") or {})


def _import_triple(store: GraphStore, record: dict) -> None:
    provs = [Provenance.from_dict(p) for p in record["provenance"]]
    base_id, _ = store.insert_triple(record["head_id"], record["relation_code"], record["tail_id"])
    triple = store.triple(base_id)
    if base_id != record["id"]:
        raise ForpkgError(
            f"triple id {record['id']!r} does not match its content (expected {base_id!r})"
        )
    triple.provenance.extend(provs)
    rel = store.schema.relation_type(triple.relation_code)
    if rel.inverse_code is not None and not rel.is_symmetric:
        did = triple_id(triple.tail_id, rel.inverse_code, triple.head_id, True)
        store.triple(did).provenance.extend(provs)


def verify(store: GraphStore) -> list[str]:
    """Full-scan invariant check; returns a list of violations (empty = healthy)."""
    problems: list[str] = []
    for eid, e in store.entities.items():
        if eid != e.id:
            problems.append(f"entity keyed {eid} declares id {e.id}")
        if e.type_code not in store.schema.entity_types:
            problems.append(f"entity {eid} has unknown type {e.type_code}")
            continue
        expected = entity_id(e.type_code, normalize_mention(e.canonical_mention))
        if expected != eid:
            problems.append(f"entity {eid} id does not match its mention")
    expected_derived = 0
    for t in store.iter_triples():
        if t.head_id not in store.entities or t.tail_id not in store.entities:
            problems.append(f"triple {t.id} references a missing entity")
            continue
        head_type = store.entities[t.head_id].type_code
        tail_type = store.entities[t.tail_id].type_code
        if t.derived:
            if t.origin_id is None or t.origin_id not in store._triples:
                problems.append(f"derived triple {t.id} has no stored origin")
                continue
            origin = store.triple(t.origin_id)
            if origin.derived:
                problems.append(f"derived triple {t.id} chains to another derived triple")
            if (origin.head_id, origin.tail_id) != (t.tail_id, t.head_id):
                problems.append(f"derived triple {t.id} does not mirror its origin")
            code, swapped = store.schema.resolve_label(t.relation_code)
            h, tl = (tail_type, head_type) if swapped else (head_type, tail_type)
            if not validate_signature(store.schema, h, code, tl):
                problems.append(f"derived triple {t.id} violates the schema")
        else:
            rel = store.schema.relation_types.get(t.relation_code)
            if rel is None:
                problems.append(f"triple {t.id} has unknown relation {t.relation_code}")
                continue
            if not validate_signature(store.schema, head_type, t.relation_code, tail_type):
                problems.append(f"triple {t.id} violates the schema")
            if rel.is_symmetric and t.tail_id < t.head_id:
                problems.append(f"symmetric triple {t.id} is not in canonical endpoint order")
            if rel.inverse_code is not None and not rel.is_symmetric:
                expected_derived += 1
                did = triple_id(t.tail_id, rel.inverse_code, t.head_id, True)
                if did not in store._triples:
                    problems.append(f"triple {t.id} is missing its derived inverse")
    actual_derived = store.derived_triple_count()
    if actual_derived != expected_derived:
        problems.append(
            f"derived count {actual_derived} != inverse-bearing base count {expected_derived}"
        )
    return problems
