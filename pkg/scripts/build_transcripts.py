"""Regenerate the recorded LLM transcript for the demo corpus.

The demo corpus under tests/fixtures/corpus is extracted offline by replaying
these canned responses.  Responses live here as an explicit plan keyed by
(document, segment index, head); the script renders the exact prompts the
pipeline will issue, writes tests/fixtures/transcripts.jsonl, then replays the
whole pipeline against the fresh transcript as a self-check.

Run with --freeze to also rewrite tests/fixtures/golden_export.jsonl from the
replayed graph.
"""
import argparse
import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from forpkg.corpus_ingest import load_corpus
from forpkg.extraction.clients import ReplayLlmClient, RuleClassifier
from forpkg.extraction.pipeline import PipelineConfig, run_pipeline, segment_document
from forpkg.extraction.prompts import load_template, type_catalog
from forpkg.graph_store import GraphStore, export_graph, verify
from forpkg.ontology import builtin_schema, label_display_name

FIXTURES = REPO / "tests" / "fixtures"

# Head recognition responses, one block per document.
HEAD_RESPONSES = {
    "doc-0001": "退耕还林|CONC\n县级以上林业主管部门|ORG\n耕地|OBJ\n国家森林局|ORG",
    "doc-0002": (
        "国家林业局|ORG\n北京市|LOC\n森林资源监督专员办事处|ORG\n"
        "王林|PER\n监督机构|ORG\n监督司|ORG"
    ),
    "doc-0003": (
        "退耕还林|CONC\n县级以上林业主管部门|ORG\n耕地|OBJ\n采伐单位|ORG\n"
        "森林经营者|PER\n重点林区|LOC\n地方政府|ORG\n神秘实体|XYZ"
    ),
}

# (doc, segment index, head) -> (relation label, relation-word answer)
RELATION_WORDS = {
    ("doc-0001", 0, "退耕还林"): ("define", "是指"),
    ("doc-0001", 0, "耕地"): ("define", "是指"),
    ("doc-0001", 1, "退耕还林"): ("duty", "应当"),
    ("doc-0001", 1, "县级以上林业主管部门"): ("duty", "应当"),
    ("doc-0001", 2, "县级以上林业主管部门"): ("duty", "负责"),
    ("doc-0002", 0, "森林资源监督专员办事处"): ("locate", "位于"),
    ("doc-0002", 0, "北京市"): ("locate", "位于"),
    ("doc-0002", 1, "森林资源监督专员办事处"): ("belongTo", "属于"),
    ("doc-0002", 1, "国家林业局"): ("belongTo", "属于"),
    ("doc-0002", 2, "王林"): ("workFor", "任职于"),
    ("doc-0002", 2, "森林资源监督专员办事处"): ("workFor", "任职于"),
    ("doc-0002", 3, "国家林业局"): ("cite", "引用"),
    ("doc-0002", 4, "监督机构"): ("duty", "负责"),
    ("doc-0003", 0, "退耕还林"): ("define", "是指"),
    ("doc-0003", 0, "耕地"): ("define", "是指"),
    ("doc-0003", 1, "退耕还林"): ("duty", "应当"),
    ("doc-0003", 1, "县级以上林业主管部门"): ("duty", "应当"),
    ("doc-0003", 2, "县级以上林业主管部门"): ("duty", "负责"),
    ("doc-0003", 4, "采伐单位"): ("isProhibited", "禁止"),
    ("doc-0003", 5, "森林经营者"): ("hasRight", "有权"),
    ("doc-0003", 6, "重点林区"): ("contain", "包括"),
    ("doc-0003", 7, "地方政府"): ("duty", "负责"),
    ("doc-0003", 7, "退耕还林"): ("duty", "负责"),
}

# (doc, segment index, head) -> (tail surface, allowed codes, answer)
TAIL_TYPES = {
    ("doc-0001", 1, "退耕还林"): ("组织实施检查验收工作", "ACT, STATE", "ACT"),
    ("doc-0001", 1, "县级以上林业主管部门"): ("组织实施检查验收工作", "ACT, STATE", "ACT"),
    ("doc-0001", 2, "县级以上林业主管部门"): ("检查验收的具体组织", "ACT, STATE", "ACT"),
    ("doc-0003", 1, "退耕还林"): ("组织实施检查验收工作", "ACT, STATE", "ACT"),
    ("doc-0003", 1, "县级以上林业主管部门"): ("组织实施检查验收工作", "ACT, STATE", "ACT"),
    ("doc-0003", 2, "县级以上林业主管部门"): ("检查验收的具体组织", "ACT, STATE", "ACT"),
    ("doc-0003", 4, "采伐单位"): ("实施皆伐作业", "ACT, STATE", "ACT"),
    ("doc-0003", 5, "森林经营者"): ("获得生态效益补偿", "ACT, STATE", "ACT"),
    ("doc-0003", 6, "重点林区"): (
        "东北国有林区和西南高山林区", "CONC, DOC, LOC, OBJ, ORG", "LOC"
    ),
    ("doc-0003", 7, "地方政府"): ("本行政区域内的退耕还林工作", "ACT, STATE", "ACT"),
}


def build_records():
    schema = builtin_schema()
    corpus = load_corpus(FIXTURES / "corpus")
    segments = {doc.doc_id: segment_document(doc) for doc in corpus}
    catalog = type_catalog(schema)
    records = {}

    def add(template_name, response, **slots):
        template = load_template(template_name)
        digest = template.digest(**slots)
        record = {
            "digest": digest,
            "prompt": template.render(**slots),
            "response": response,
            "template_version": template.version,
        }
        if digest in records and records[digest]["response"] != response:
            raise SystemExit(f"conflicting responses for digest {digest}")
        records[digest] = record

    for doc in corpus:
        add(
            "head_entities",
            HEAD_RESPONSES[doc.doc_id],
            type_catalog=catalog,
            document=doc.body,
        )
    for (doc_id, seg_idx, head), (label, word) in RELATION_WORDS.items():
        add(
            "relation_word",
            word,
            segment=segments[doc_id][seg_idx].text,
            head=head,
            relation_display=label_display_name(schema, label),
        )
    for (doc_id, seg_idx, head), (tail, allowed, answer) in TAIL_TYPES.items():
        add(
            "tail_type",
            answer,
            segment=segments[doc_id][seg_idx].text,
            head=head,
            tail=tail,
            allowed=allowed,
        )
    return records


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--freeze",
        action="store_true",
        help="also rewrite golden_export.jsonl from the replayed run",
    )
    args = parser.parse_args()

    records = build_records()
    transcript_path = FIXTURES / "transcripts.jsonl"
    with open(transcript_path, "w", encoding="utf-8") as fh:
        for digest in sorted(records):
            fh.write(json.dumps(records[digest], ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(records)} records to {transcript_path}")

    # self-check: the pipeline must replay without a single miss
    schema = builtin_schema()
    corpus = load_corpus(FIXTURES / "corpus")
    store = GraphStore(schema)
    report = run_pipeline(
        corpus,
        ReplayLlmClient(transcript_path),
        RuleClassifier(schema),
        PipelineConfig(),
        store,
    )
    problems = verify(store)
    if problems:
        raise SystemExit("store verification failed:\n" + "\n".join(problems))
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))
    print(f"entities={len(store.entities)} base={store.base_triple_count()} "
          f"derived={store.derived_triple_count()}")

    export = export_graph(store, "jsonl")
    golden_path = FIXTURES / "golden_export.jsonl"
    if args.freeze:
        golden_path.write_bytes(export)
        print(f"froze {golden_path}")
    elif golden_path.exists():
        status = "matches" if golden_path.read_bytes() == export else "DIFFERS FROM"
        print(f"replayed export {status} {golden_path}")


if __name__ == "__main__":
    main()
