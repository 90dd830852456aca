"""Corpus loading and document-level fact emission.

A corpus directory holds one UTF-8 body file per document (``<doc_id>.txt``)
and a JSON metadata sidecar next to it (``<doc_id>.meta.json``).  Sidecars
are the offline stand-in for metadata a deployment would pull from a document
portal; a body without a sidecar still loads, with its metadata marked
unknown.

Degraded inputs (missing sidecar, malformed date, empty issuing org) warn via
:class:`CorpusWarning` by default; strict mode turns the same conditions into
errors.
"""

from __future__ import annotations

import datetime
import enum
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusWarning, DuplicateDocId, UnreadableFile
from .graph_store import GraphStore, Provenance, Stage


class Timeliness(str, enum.Enum):
    in_force = "in_force"
    repealed = "repealed"
    expired = "expired"
    unknown = "unknown"


@dataclass(frozen=True)
class PolicyMetadata:
    issuing_org: str = ""
    release_date: datetime.date | None = None
    implementation_date: datetime.date | None = None
    keywords: tuple[str, ...] = ()
    timeliness: Timeliness = Timeliness.unknown
    category: str | None = None


@dataclass(frozen=True)
class PolicyDocument:
    doc_id: str
    title: str
    body: str
    metadata: PolicyMetadata = field(default_factory=PolicyMetadata)


def _warn(message: str, strict: bool) -> None:
    w = CorpusWarning(message)
    if strict:
        raise w
    warnings.warn(w, stacklevel=3)


def _parse_date(raw, field_name: str, doc_id: str, strict: bool) -> datetime.date | None:
    if raw in (None, ""):
        return None
    try:
        return datetime.date.fromisoformat(str(raw))
    except ValueError:
        _warn(f"{doc_id}: malformed {field_name} {raw!r}, treating as unknown", strict)
        return None


def _parse_sidecar(raw: dict, doc_id: str, strict: bool) -> tuple[str | None, PolicyMetadata]:
    title = raw.get("title") or None
    release = _parse_date(raw.get("release_date"), "release_date", doc_id, strict)
    implementation = _parse_date(
        raw.get("implementation_date"), "implementation_date", doc_id, strict
    )
    if release is not None and implementation is not None and implementation < release:
        _warn(
            f"{doc_id}: implementation_date {implementation} precedes release_date "
            f"{release}, dropping it",
            strict,
        )
        implementation = None
    timeliness_raw = raw.get("timeliness", "unknown") or "unknown"
    try:
        timeliness = Timeliness(timeliness_raw)
    except ValueError:
        _warn(f"{doc_id}: unknown timeliness {timeliness_raw!r}", strict)
        timeliness = Timeliness.unknown
    keywords = tuple(str(k) for k in raw.get("keywords") or ())
    return title, PolicyMetadata(
        issuing_org=str(raw.get("issuing_org") or ""),
        release_date=release,
        implementation_date=implementation,
        keywords=keywords,
        timeliness=timeliness,
        category=raw.get("category") or None,
    )


def load_corpus(directory: str | Path, strict: bool = False) -> list[PolicyDocument]:
    """Load every ``*.txt`` body (with optional sidecar) under a directory.

    Result order is by doc_id, independent of filesystem listing order.  A
    sidecar may override the filename-derived doc_id via a ``doc_id`` field;
    two files resolving to the same id is an error.
    """
    directory = Path(directory)
    docs: dict[str, PolicyDocument] = {}
    for body_path in sorted(directory.glob("*.txt")):
        stem = body_path.stem
        try:
            body = body_path.read_text("utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise UnreadableFile(str(body_path), str(exc)) from exc
        if not body.strip():
            _warn(f"{stem}: empty body file, skipping", strict)
            continue
        sidecar_path = directory / f"{stem}.meta.json"
        title = None
        metadata = PolicyMetadata()
        doc_id = stem
        if sidecar_path.exists():
            try:
                raw = json.loads(sidecar_path.read_text("utf-8"))
            except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise UnreadableFile(str(sidecar_path), str(exc)) from exc
            doc_id = str(raw.get("doc_id") or stem)
            title, metadata = _parse_sidecar(raw, doc_id, strict)
        else:
            _warn(f"{stem}: no metadata sidecar, metadata marked unknown", strict)
        if title is None:
            # first line of the body doubles as the title for bare documents
            title = body.strip().splitlines()[0].strip()
        if doc_id in docs:
            raise DuplicateDocId(doc_id)
        docs[doc_id] = PolicyDocument(doc_id=doc_id, title=title, body=body, metadata=metadata)
    return [docs[k] for k in sorted(docs)]


def metadata_to_triples(
    doc: PolicyDocument, store: GraphStore, strict: bool = False
) -> list[str]:
    """Emit document-level facts: issuing org publishes, category classifies.

    Dates, keywords, and timeliness have no relation types in the schema, so
    they ride on the DOC entity as attributes instead of becoming triples.
    """
    triple_ids: list[str] = []
    prov = Provenance(doc.doc_id, 0, stage=Stage.document_level, confidence=1.0)
    doc_eid = store.upsert_entity("DOC", doc.title, prov)
    store.entities[doc_eid].attributes.update(
        {
            "doc_id": doc.doc_id,
            "release_date": doc.metadata.release_date.isoformat()
            if doc.metadata.release_date
            else None,
            "implementation_date": doc.metadata.implementation_date.isoformat()
            if doc.metadata.implementation_date
            else None,
            "keywords": list(doc.metadata.keywords),
            "timeliness": doc.metadata.timeliness.value,
        }
    )
    if doc.metadata.issuing_org.strip():
        org_eid = store.upsert_entity("ORG", doc.metadata.issuing_org, prov)
        tid, _ = store.insert_triple(org_eid, "publish", doc_eid, prov)
        triple_ids.append(tid)
    else:
        _warn(f"{doc.doc_id}: no issuing organization, publish edge skipped", strict)
    if doc.metadata.category:
        cls_eid = store.upsert_entity("CLS", doc.metadata.category, prov)
        tid, _ = store.insert_triple(doc_eid, "classifyTo", cls_eid, prov)
        triple_ids.append(tid)
    return triple_ids


#: Titles shorter than this are too generic to treat as citation evidence.
MIN_CITATION_TITLE_CHARS = 6


def detect_citations(corpus: list[PolicyDocument], store: GraphStore) -> list[str]:
    """Link ⟨A, cite, B⟩ wherever B's exact title appears verbatim in A's body.

    Exact substring match, titles under six characters skipped, never
    self-citing.  Deliberately precision-first; swap in a smarter matcher by
    replacing this function.
    """
    triple_ids: list[str] = []
    doc_eids = {
        doc.doc_id: store.upsert_entity(
            "DOC", doc.title, Provenance(doc.doc_id, 0, stage=Stage.document_level)
        )
        for doc in corpus
    }
    for citing in corpus:
        for cited in corpus:
            if citing.doc_id == cited.doc_id:
                continue
            title = cited.title.strip()
            if len(title) < MIN_CITATION_TITLE_CHARS:
                continue
            pos = citing.body.find(title)
            if pos < 0:
                continue
            prov = Provenance(
                citing.doc_id,
                0,
                char_span=(pos, pos + len(title)),
                stage=Stage.document_level,
                confidence=1.0,
            )
            tid, _ = store.insert_triple(
                doc_eids[citing.doc_id], "cite", doc_eids[cited.doc_id], prov
            )
            if tid not in triple_ids:
                triple_ids.append(tid)
    return triple_ids
