import pytest

from forpkg.errors import MissingEntity
from forpkg.graph_store import GraphStore, Provenance, Stage
from forpkg.ontology import builtin_schema
from forpkg.rag_retrieval import (
    RetrievalConfig,
    link_query,
    retrieve_subgraph,
    serialize_context,
)

from .helpers import random_store
from .oracles import bfs_reachable

SCHEMA = builtin_schema()


def prov(doc="doc-0001", confidence=1.0):
    return Provenance(doc, 0, None, Stage.manual, confidence)


def small_graph():
    store = GraphStore(SCHEMA)
    org = store.upsert_entity("ORG", "国家林业局")
    d1 = store.upsert_entity("DOC", "退耕还林条例")
    d2 = store.upsert_entity("DOC", "森林防火条例")
    loc = store.upsert_entity("LOC", "北京市")
    store.insert_triple(org, "publish", d1, prov(confidence=0.9))
    store.insert_triple(org, "publish", d2, prov(confidence=0.8))
    store.insert_triple(org, "locate", loc, prov(confidence=0.7))
    return store, org, d1, d2, loc


# --- query linking ----------------------------------------------------------


def test_link_unknown_query_is_empty():
    store, *_ = small_graph()
    assert link_query("和图谱无关的问题", store) == []


def test_link_canonical_mention():
    store, org, d1, *_ = small_graph()
    assert link_query("退耕还林条例的主要内容是什么？", store) == [d1]


def test_link_alias():
    store, org, *_ = small_graph()
    store.upsert_entity("ORG", "国家林业局 ")  # alias via raw surface
    entity = store.entities[org]
    entity.aliases.add("林业局官方")
    assert link_query("林业局官方怎么说？", store) == [org]


def test_link_longest_match_suppresses_substring():
    store, org, *_ = small_graph()
    short = store.upsert_entity("ORG", "林业局")
    linked = link_query("国家林业局的职责", store)
    assert org in linked
    assert short not in linked


def test_link_order_longest_first():
    store, org, d1, *_ = small_graph()
    linked = link_query("国家林业局与退耕还林条例", store)
    assert linked == [d1, org]  # 6 chars beats 5


def test_link_repeated_mention_listed_once():
    store, org, *_ = small_graph()
    assert link_query("国家林业局，还是国家林业局", store) == [org]


def test_link_disjoint_mentions_both_found():
    store, org, d1, d2, loc = small_graph()
    linked = link_query("北京市发布退耕还林条例", store)
    assert set(linked) == {loc, d1}


# --- subgraph retrieval -----------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        RetrievalConfig(max_hops=0)
    with pytest.raises(ValueError):
        RetrievalConfig(max_triples=0)


def test_isolated_seed_yields_nothing():
    store = GraphStore(SCHEMA)
    lonely = store.upsert_entity("CONC", "孤立概念")
    assert retrieve_subgraph([lonely], store) == []


def test_missing_seed_raises():
    store, *_ = small_graph()
    with pytest.raises(MissingEntity):
        retrieve_subgraph(["ORG:ffffffffffffffff"], store)


def test_one_hop_plus_best_two_hop():
    store, org, d1, d2, loc = small_graph()
    # five two-hop triples hanging off d1/d2, distinct confidences
    others = []
    for i, conf in enumerate((0.5, 0.95, 0.3, 0.6, 0.4)):
        other = store.upsert_entity("DOC", f"参考文件{i}")
        src = d1 if i % 2 == 0 else d2
        tid, _ = store.insert_triple(src, "cite", other, prov(confidence=conf))
        others.append((tid, conf))
    result = retrieve_subgraph([org], store, RetrievalConfig(max_hops=2, max_triples=4))
    assert len(result) == 4
    one_hop_codes = sorted(t.relation_code for t in result[:3])
    assert one_hop_codes == ["locate", "publish", "publish"]
    # the surviving two-hop triple is the highest-confidence cite
    best_tid = max(others, key=lambda o: o[1])[0]
    assert result[3].id == best_tid


def test_hop_budget_is_monotone():
    store, org, d1, d2, loc = small_graph()
    extra = store.upsert_entity("DOC", "参考文件")
    store.insert_triple(d1, "cite", extra, prov(confidence=0.5))
    narrow = {t.id for t in retrieve_subgraph([org], store, RetrievalConfig(max_hops=1))}
    wide = {t.id for t in retrieve_subgraph([org], store, RetrievalConfig(max_hops=2))}
    assert narrow <= wide
    assert len(wide) == len(narrow) + 1


def test_derived_triples_never_returned():
    store, org, d1, *_ = small_graph()
    result = retrieve_subgraph([d1], store, RetrievalConfig(max_hops=3, max_triples=100))
    assert result
    assert all(not t.derived for t in result)
    assert {t.relation_code for t in result} <= {"publish", "locate"}


def test_relation_filter_restricts_traversal():
    store, org, d1, d2, loc = small_graph()
    extra = store.upsert_entity("DOC", "参考文件")
    store.insert_triple(d1, "cite", extra, prov(confidence=0.5))
    config = RetrievalConfig(max_hops=3, relation_filter=frozenset({"publish"}))
    result = retrieve_subgraph([org], store, config)
    assert {t.relation_code for t in result} == {"publish"}
    # cite edge is invisible, so nothing beyond the publish fringe
    assert len(result) == 2


def test_retrieval_deterministic():
    store, org, *_ = small_graph()
    a = [t.id for t in retrieve_subgraph([org], store)]
    b = [t.id for t in retrieve_subgraph([org], store)]
    assert a == b


def _oracle_triples(store, seeds, max_hops):
    adjacency = {}
    for t in store.iter_triples(include_derived=False):
        adjacency.setdefault(t.head_id, set()).add(t.tail_id)
        adjacency.setdefault(t.tail_id, set()).add(t.head_id)
    hops = bfs_reachable(adjacency, seeds, max_hops)
    included = set()
    for t in store.iter_triples(include_derived=False):
        reach = min(hops.get(t.head_id, max_hops), hops.get(t.tail_id, max_hops))
        if reach < max_hops:
            included.add(t.id)
    return hops, included


@pytest.mark.parametrize("seed", [3, 11, 42, 99])
def test_retrieval_matches_bfs_oracle(seed):
    store = random_store(seed, n_entities=30, n_triples=60)
    seeds = sorted(store.entities)[:2]
    for max_hops in (1, 2, 3):
        config = RetrievalConfig(max_hops=max_hops, max_triples=10_000)
        result = retrieve_subgraph(seeds, store, config)
        hops, expected = _oracle_triples(store, seeds, max_hops)
        assert {t.id for t in result} == expected
        # returned order must be hop-ascending
        result_hops = [
            min(hops[t.head_id], hops[t.tail_id]) + 1 for t in result
        ]
        assert result_hops == sorted(result_hops)


def test_truncation_respects_budget():
    store = random_store(7, n_entities=40, n_triples=120)
    seeds = sorted(store.entities)[:3]
    config = RetrievalConfig(max_hops=3, max_triples=5)
    result = retrieve_subgraph(seeds, store, config)
    assert len(result) <= 5
    unbounded = retrieve_subgraph(seeds, store, RetrievalConfig(max_hops=3, max_triples=10_000))
    assert [t.id for t in result] == [t.id for t in unbounded[:5]]


# --- context serialization --------------------------------------------------


def test_empty_context():
    store, *_ = small_graph()
    assert serialize_context([], store) == ""


def test_single_triple_rendering():
    store, org, d1, *_ = small_graph()
    triples = [t for t, _ in store.neighbors(org, direction="out") if t.tail_id == d1]
    text = serialize_context(triples, store)
    assert text == "## doc-0001\n⟨国家林业局⟩ —[Publish]→ ⟨退耕还林条例⟩"


def test_context_grouped_by_document():
    store = GraphStore(SCHEMA)
    org = store.upsert_entity("ORG", "国家林业局")
    d1 = store.upsert_entity("DOC", "甲条例")
    d2 = store.upsert_entity("DOC", "乙条例")
    store.insert_triple(org, "publish", d1, prov(doc="doc-0002"))
    store.insert_triple(org, "publish", d2, prov(doc="doc-0001"))
    text = serialize_context(list(store.iter_triples(include_derived=False)), store)
    lines = text.splitlines()
    assert lines[0] == "## doc-0001"
    assert lines[2] == "## doc-0002"
    assert len(lines) == 4


def test_context_deterministic():
    store, org, *_ = small_graph()
    triples = retrieve_subgraph([org], store)
    assert serialize_context(triples, store) == serialize_context(triples, store)


def test_context_truncation_notice():
    store = random_store(5, n_entities=40, n_triples=150)
    seeds = sorted(store.entities)[:4]
    triples = retrieve_subgraph(seeds, store, RetrievalConfig(max_hops=3, max_triples=10_000))
    text = serialize_context(triples, store, max_chars=200)
    assert len(text) <= 200
    assert text.endswith("…(truncated)")


def test_context_full_text_has_no_notice():
    store, org, *_ = small_graph()
    triples = retrieve_subgraph([org], store)
    assert "truncated" not in serialize_context(triples, store)
