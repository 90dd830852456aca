import datetime
import json
import random

import pytest

from forpkg.corpus_ingest import (
    PolicyDocument,
    PolicyMetadata,
    Timeliness,
    detect_citations,
    load_corpus,
    metadata_to_triples,
)
from forpkg.errors import CorpusWarning, DuplicateDocId, UnreadableFile
from forpkg.graph_store import GraphStore, export_graph, import_graph, verify
from forpkg.ontology import builtin_schema

SCHEMA = builtin_schema()


def write_doc(directory, doc_id, body, meta=None):
    (directory / f"{doc_id}.txt").write_text(body, encoding="utf-8")
    if meta is not None:
        (directory / f"{doc_id}.meta.json").write_text(
            json.dumps(meta, ensure_ascii=False), encoding="utf-8"
        )


BASE_META = {
    "title": "退耕还林条例",
    "issuing_org": "国家林业局",
    "release_date": "2002-12-14",
    "implementation_date": "2003-01-20",
    "keywords": ["退耕还林", "生态"],
    "timeliness": "in_force",
    "category": "生态建设",
}


def test_empty_directory(tmp_path):
    assert load_corpus(tmp_path) == []


def test_three_pairs_in_doc_id_order(tmp_path):
    for doc_id in ("doc-0003", "doc-0001", "doc-0002"):
        write_doc(tmp_path, doc_id, f"{doc_id} 的正文。", dict(BASE_META, title=f"标题{doc_id}"))
    docs = load_corpus(tmp_path)
    assert [d.doc_id for d in docs] == ["doc-0001", "doc-0002", "doc-0003"]


def test_full_sidecar_parsed(tmp_path):
    write_doc(tmp_path, "doc-0001", "正文。", BASE_META)
    (doc,) = load_corpus(tmp_path)
    assert doc.title == "退耕还林条例"
    assert doc.metadata == PolicyMetadata(
        issuing_org="国家林业局",
        release_date=datetime.date(2002, 12, 14),
        implementation_date=datetime.date(2003, 1, 20),
        keywords=("退耕还林", "生态"),
        timeliness=Timeliness.in_force,
        category="生态建设",
    )


def test_missing_sidecar_warns_and_degrades(tmp_path):
    write_doc(tmp_path, "doc-0001", "退耕还林条例\n正文。")
    with pytest.warns(CorpusWarning):
        (doc,) = load_corpus(tmp_path)
    assert doc.title == "退耕还林条例"
    assert doc.metadata.timeliness is Timeliness.unknown
    assert doc.metadata.issuing_org == ""


def test_malformed_date_degrades(tmp_path):
    write_doc(tmp_path, "doc-0001", "正文。", dict(BASE_META, release_date="2002年12月"))
    with pytest.warns(CorpusWarning):
        (doc,) = load_corpus(tmp_path)
    assert doc.metadata.release_date is None


def test_implementation_before_release_dropped(tmp_path):
    write_doc(
        tmp_path, "doc-0001", "正文。",
        dict(BASE_META, release_date="2003-01-20", implementation_date="2002-12-14"),
    )
    with pytest.warns(CorpusWarning):
        (doc,) = load_corpus(tmp_path)
    assert doc.metadata.implementation_date is None
    assert doc.metadata.release_date == datetime.date(2003, 1, 20)


def test_strict_mode_raises(tmp_path):
    write_doc(tmp_path, "doc-0001", "正文。", dict(BASE_META, release_date="not-a-date"))
    with pytest.raises(CorpusWarning):
        load_corpus(tmp_path, strict=True)


def test_duplicate_doc_id_via_sidecar_override(tmp_path):
    write_doc(tmp_path, "doc-0001", "正文一。", BASE_META)
    write_doc(tmp_path, "doc-0002", "正文二。", dict(BASE_META, doc_id="doc-0001"))
    with pytest.raises(DuplicateDocId):
        load_corpus(tmp_path)


def test_unreadable_sidecar(tmp_path):
    write_doc(tmp_path, "doc-0001", "正文。")
    (tmp_path / "doc-0001.meta.json").write_text("{broken", encoding="utf-8")
    with pytest.raises(UnreadableFile):
        load_corpus(tmp_path)


def test_empty_body_skipped(tmp_path):
    write_doc(tmp_path, "doc-0001", "  \n ", BASE_META)
    write_doc(tmp_path, "doc-0002", "有内容。", dict(BASE_META, title="另一标题"))
    with pytest.warns(CorpusWarning):
        docs = load_corpus(tmp_path)
    assert [d.doc_id for d in docs] == ["doc-0002"]


def test_unknown_timeliness_degrades(tmp_path):
    write_doc(tmp_path, "doc-0001", "正文。", dict(BASE_META, timeliness="forever"))
    with pytest.warns(CorpusWarning):
        (doc,) = load_corpus(tmp_path)
    assert doc.metadata.timeliness is Timeliness.unknown


# --- metadata_to_triples ----------------------------------------------------


def make_doc(**meta_overrides):
    meta = PolicyMetadata(
        issuing_org="国家林业局",
        release_date=datetime.date(2002, 12, 14),
        keywords=("退耕还林",),
        timeliness=Timeliness.in_force,
        category="生态建设",
    )
    for k, v in meta_overrides.items():
        meta = PolicyMetadata(**{**meta.__dict__, k: v})
    return PolicyDocument("doc-0001", "退耕还林条例", "正文。", meta)


def test_metadata_emits_publish_and_classify():
    store = GraphStore(SCHEMA)
    ids = metadata_to_triples(make_doc(), store)
    assert len(ids) == 2
    codes = sorted(store.triple(t).relation_code for t in ids)
    assert codes == ["classifyTo", "publish"]
    # derived inverses came along
    assert store.derived_triple_count() == 2
    assert verify(store) == []


def test_metadata_without_category():
    store = GraphStore(SCHEMA)
    ids = metadata_to_triples(make_doc(category=None), store)
    assert [store.triple(t).relation_code for t in ids] == ["publish"]


def test_metadata_empty_org_warns():
    store = GraphStore(SCHEMA)
    with pytest.warns(CorpusWarning):
        ids = metadata_to_triples(make_doc(issuing_org="  "), store)
    assert [store.triple(t).relation_code for t in ids] == ["classifyTo"]


def test_metadata_attributes_on_doc_entity():
    store = GraphStore(SCHEMA)
    metadata_to_triples(make_doc(), store)
    (doc_entity,) = [e for e in store.entities.values() if e.type_code == "DOC"]
    assert doc_entity.attributes["release_date"] == "2002-12-14"
    assert doc_entity.attributes["keywords"] == ["退耕还林"]
    assert doc_entity.attributes["timeliness"] == "in_force"
    assert doc_entity.attributes["doc_id"] == "doc-0001"


def test_attributes_survive_round_trip():
    store = GraphStore(SCHEMA)
    metadata_to_triples(make_doc(), store)
    blob = export_graph(store, "jsonl")
    loaded = import_graph(blob, SCHEMA)
    assert export_graph(loaded, "jsonl") == blob
    (doc_entity,) = [e for e in loaded.entities.values() if e.type_code == "DOC"]
    assert doc_entity.attributes["timeliness"] == "in_force"


# --- detect_citations -------------------------------------------------------


def corpus_of(*pairs):
    return [
        PolicyDocument(f"doc-{i:04d}", title, body)
        for i, (title, body) in enumerate(pairs)
    ]


def test_no_overlap_no_citations():
    corpus = corpus_of(("退耕还林条例", "正文甲。"), ("森林法实施条例", "正文乙。"))
    store = GraphStore(SCHEMA)
    assert detect_citations(corpus, store) == []


def test_verbatim_title_cited():
    corpus = corpus_of(
        ("退耕还林条例", "正文甲。"),
        ("森林法实施条例", "依据《退耕还林条例》执行。"),
    )
    store = GraphStore(SCHEMA)
    ids = detect_citations(corpus, store)
    assert len(ids) == 1
    t = store.triple(ids[0])
    assert t.relation_code == "cite"
    assert store.entities[t.head_id].canonical_mention == "森林法实施条例"
    assert store.entities[t.tail_id].canonical_mention == "退耕还林条例"
    assert store.derived_triple_count() == 1  # isCited came along
    assert t.provenance[0].char_span is not None


def test_no_self_citation():
    corpus = corpus_of(("退耕还林条例", "本退耕还林条例自发布之日起施行。"),)
    store = GraphStore(SCHEMA)
    assert detect_citations(corpus, store) == []


def test_short_titles_ignored():
    corpus = corpus_of(("森林法", "正文甲。"), ("森林法实施条例", "依据森林法制定。"))
    store = GraphStore(SCHEMA)
    assert detect_citations(corpus, store) == []


def test_citations_match_bruteforce_oracle():
    rng = random.Random(42)
    titles = [f"林业政策文件第{i:02d}号管理办法" for i in range(12)]
    docs = []
    for i, title in enumerate(titles):
        parts = [f"{title}。正文如下。"]
        for j, other in enumerate(titles):
            if j != i and rng.random() < 0.25:
                parts.append(f"依照{other}的规定。")
        rng.shuffle(parts)
        docs.append(PolicyDocument(f"doc-{i:04d}", title, "".join(parts)))
    store = GraphStore(SCHEMA)
    detect_citations(docs, store)
    got = {
        (store.entities[t.head_id].canonical_mention, store.entities[t.tail_id].canonical_mention)
        for t in store.iter_triples(include_derived=False)
        if t.relation_code == "cite"
    }
    expected = {
        (a.title, b.title)
        for a in docs
        for b in docs
        if a.doc_id != b.doc_id and len(b.title) >= 6 and b.title in a.body
    }
    assert got == expected
    assert verify(store) == []
