"""Deterministic generators for store-level tests.

These build *valid* random graphs through the public API, so tests can focus
on invariants rather than setup.  Everything is seeded; the same seed yields
the same store.
"""

from __future__ import annotations

import random

from forpkg.graph_store import GraphStore, Provenance, Stage
from forpkg.ontology import FORWARD_RELATION_CODES, builtin_schema

# A few real-looking surfaces per type so unicode paths get exercised; the
# rest are synthetic ascii mentions.
_SEED_MENTIONS = {
    "ORG": ["国家林业局", "森林资源监督专员办事处", "国家林业和草原局"],
    "PER": ["王林", "李树人"],
    "LOC": ["北京市", "东北林区", "西南林区"],
    "DOC": ["退耕还林条例", "森林法实施条例"],
    "CLS": ["生态建设", "资源管理"],
    "CONC": ["退耕还林", "森林覆盖率"],
    "OBJ": ["油锯", "苗木"],
    "EXP_DEF": ["将耕地停止耕种并营造林草植被的活动"],
    "ACT": ["组织实施退耕还林工作"],
    "STATE": ["水土流失"],
}


def random_provenance(rng: random.Random, doc_pool: int = 20) -> Provenance:
    span = None
    if rng.random() < 0.5:
        start = rng.randrange(0, 200)
        span = (start, start + rng.randrange(1, 40))
    return Provenance(
        doc_id=f"doc-{rng.randrange(doc_pool):04d}",
        segment_index=rng.randrange(0, 30),
        char_span=span,
        stage=rng.choice(list(Stage)),
        confidence=round(rng.random(), 6),
    )


def random_store(
    seed: int, n_entities: int = 50, n_triples: int = 100
) -> GraphStore:
    rng = random.Random(seed)
    schema = builtin_schema()
    store = GraphStore(schema)
    by_type: dict[str, list[str]] = {code: [] for code in schema.entity_types}
    type_codes = list(schema.entity_types)
    for i in range(n_entities):
        tc = rng.choice(type_codes)
        seeds = _SEED_MENTIONS[tc]
        if i < len(seeds) * len(type_codes) and rng.random() < 0.3:
            mention = rng.choice(seeds)
        else:
            mention = f"{tc.lower()}-mention-{i}"
        prov = random_provenance(rng) if rng.random() < 0.5 else None
        by_type[tc].append(store.upsert_entity(tc, mention, prov))
    inserted = 0
    attempts = 0
    while inserted < n_triples and attempts < n_triples * 50:
        attempts += 1
        code = rng.choice(FORWARD_RELATION_CODES)
        rel = schema.relation_type(code)
        head_pool = [e for tc in rel.domain for e in by_type[tc]]
        tail_pool = [e for tc in rel.range for e in by_type[tc]]
        if not head_pool or not tail_pool:
            continue
        head = rng.choice(head_pool)
        tail = rng.choice(tail_pool)
        store.insert_triple(head, code, tail, random_provenance(rng))
        inserted += 1
    return store
