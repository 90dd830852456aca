"""Graph-backed context retrieval for language-model prompting.

Linking is purely lexical: an entity is linked when its canonical mention or
one of its aliases occurs verbatim in the query, longest match first, with
shorter matches inside an already-claimed span suppressed.  Retrieval is a
bounded breadth-first expansion from the linked seeds; serialization renders
one line per triple, grouped by source document.
"""
from __future__ import annotations

import dataclasses
from collections import deque

from .errors import MissingEntity
from .graph_store import GraphStore, Triple
from .ontology import label_display_name


@dataclasses.dataclass(frozen=True)
class RetrievalConfig:
    max_hops: int = 2
    max_triples: int = 40
    relation_filter: frozenset[str] | None = None

    def __post_init__(self):
        if self.max_hops < 1:
            raise ValueError(f"max_hops must be >= 1, got {self.max_hops}")
        if self.max_triples < 1:
            raise ValueError(f"max_triples must be >= 1, got {self.max_triples}")


def link_query(query: str, store: GraphStore) -> list[str]:
    """Entities whose mention or alias occurs in the query, longest first."""
    surface_to_entity: dict[str, str] = {}
    for eid in sorted(store.entities):
        entity = store.entities[eid]
        for surface in (entity.canonical_mention, *sorted(entity.aliases)):
            # first owner wins so the mapping is deterministic
            surface_to_entity.setdefault(surface, eid)
    candidates = []
    for surface, eid in surface_to_entity.items():
        start = query.find(surface)
        while start != -1:
            candidates.append((start, start + len(surface), surface, eid))
            start = query.find(surface, start + 1)
    # longest match first; ties resolve left to right, then by surface
    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[0], c[2]))
    claimed: list[tuple[int, int]] = []
    linked: list[str] = []
    for start, end, _, eid in candidates:
        if any(start < c_end and c_start < end for c_start, c_end in claimed):
            continue
        claimed.append((start, end))
        if eid not in linked:
            linked.append(eid)
    return linked


def retrieve_subgraph(
    seeds: list[str], store: GraphStore, config: RetrievalConfig | None = None
) -> list[Triple]:
    """Bounded BFS over base triples, treating every edge as undirected.

    Result order: hop distance ascending, then confidence descending, then
    triple id; truncated to max_triples.
    """
    config = config or RetrievalConfig()
    for eid in seeds:
        if eid not in store.entities:
            raise MissingEntity(eid)

    hop_of: dict[str, int] = {eid: 0 for eid in seeds}
    frontier = deque(seeds)
    collected: dict[str, tuple[int, float, str]] = {}
    while frontier:
        eid = frontier.popleft()
        hop = hop_of[eid]
        if hop >= config.max_hops:
            continue
        for triple in _incident(store, eid):
            if config.relation_filter and triple.relation_code not in config.relation_filter:
                continue
            if triple.id not in collected:
                collected[triple.id] = (hop + 1, _confidence(triple), triple.id)
            for other in (triple.head_id, triple.tail_id):
                if other not in hop_of:
                    hop_of[other] = hop + 1
                    frontier.append(other)

    ranked = sorted(collected.values(), key=lambda r: (r[0], -r[1], r[2]))
    return [store.triple(tid) for _, _, tid in ranked[: config.max_triples]]


def _incident(store: GraphStore, eid: str):
    # derived mirrors excluded: the forward form covers rendering
    for triple, _ in store.neighbors(eid, direction="both", include_derived=False):
        yield triple


def _confidence(triple: Triple) -> float:
    if not triple.provenance:
        return 0.0
    return max(p.confidence for p in triple.provenance)


def serialize_context(triples: list[Triple], store: GraphStore, max_chars: int = 4000) -> str:
    """Render triples as context lines grouped by source document."""
    by_doc: dict[str, list[str]] = {}
    for triple in triples:
        head = store.entities[triple.head_id].canonical_mention
        tail = store.entities[triple.tail_id].canonical_mention
        display = label_display_name(store.schema, triple.relation_code)
        line = f"⟨{head}⟩ —[{display}]→ ⟨{tail}⟩"
        doc_ids = sorted({p.doc_id for p in triple.provenance}) or ["(unattributed)"]
        group = by_doc.setdefault(doc_ids[0], [])
        if line not in group:
            group.append(line)

    blocks = []
    for doc_id in sorted(by_doc):
        blocks.append(f"## {doc_id}")
        blocks.extend(by_doc[doc_id])
    text = "\n".join(blocks)
    if len(text) > max_chars:
        notice = "\n…(truncated)"
        text = text[: max_chars - len(notice)] + notice
    return text
