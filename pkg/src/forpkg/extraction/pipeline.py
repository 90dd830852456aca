"""Segmentation, the three extraction stages, and end-to-end assembly.

Stage 1 reads the whole document once and names short head entities.  Stage 2
scores each (segment, co-occurring head) pair over the 15 relation labels and
abstains below the threshold.  Stage 3 asks only for the relation word; the
tail is everything after it up to the segment end, cleaned of trailing
punctuation and enclosing brackets.  Assembly normalizes the label, validates
the signature, and only then touches the store — an invalid candidate is
counted and dropped, never stored.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Sequence

from ..corpus_ingest import PolicyDocument, detect_citations, metadata_to_triples
from ..doc_similarity import (
    EmbeddingProvider,
    HashNgramProvider,
    SimilarityConfig,
    build_relevance_edges,
)
from ..errors import (
    ClassifierUnavailable,
    ClientError,
    EmptyTail,
    RelationWordNotFound,
    ReplayMiss,
    SignatureViolation,
    UnparseableResponse,
)
from ..graph_store import GraphStore, Provenance, Stage
from ..ontology import (
    ALL_RELATION_LABELS,
    OntologySchema,
    label_display_name,
    normalize_relation,
)
from .clients import ClassifierClient, LlmClient, LlmRequest, RuleClassifier
from .prompts import load_template, type_catalog

#: Default abstention threshold: below this top score, no relation is asserted.
DEFAULT_TAU = 0.35


@dataclass(frozen=True)
class Segment:
    doc_id: str
    segment_index: int
    text: str
    char_span: tuple[int, int]


@dataclass(frozen=True)
class HeadEntityMention:
    doc_id: str
    surface: str
    type_code: str
    occurrences: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RelationCandidate:
    segment: Segment
    head: HeadEntityMention
    label: str
    scores: dict[str, float]
    abstained: bool
    fallback_used: bool = False


@dataclass(frozen=True)
class TailExtraction:
    candidate: RelationCandidate
    relation_word: str
    relation_word_span: tuple[int, int]
    tail_surface: str
    tail_span: tuple[int, int]
    tail_type_code: str


@dataclass
class PipelineConfig:
    tau: float = DEFAULT_TAU
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    embedding_provider: EmbeddingProvider | None = None
    embed_cache: str | None = None
    max_workers: int = 1
    link_similar: bool = True

    def provider(self):
        return self.embedding_provider or HashNgramProvider()


@dataclass
class PipelineReport:
    """Per-stage tallies; merging two reports is plain field-wise addition."""

    documents: int = 0
    documents_skipped: int = 0
    document_level_triples: int = 0
    citation_triples: int = 0
    relevance_edges: int = 0
    head_mentions: int = 0
    heads_dropped_hallucinated: int = 0
    heads_dropped_unknown_type: int = 0
    candidates: int = 0
    abstained: int = 0
    classifier_unavailable: int = 0
    relation_word_not_found: int = 0
    empty_tail: int = 0
    unparseable_responses: int = 0
    schema_violations_dropped: int = 0
    content_triples: int = 0
    skipped_documents: list[str] = field(default_factory=list)

    def merge(self, other: "PipelineReport") -> None:
        for f in fields(self):
            if f.type == "int":
                setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        self.skipped_documents.extend(other.skipped_documents)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.type == "int"}
        out["skipped_documents"] = sorted(self.skipped_documents)
        return out


# --- stage 0: segmentation --------------------------------------------------

_SPLIT_RE = re.compile(r"([。；！？]+|\n+)")


def segment_document(doc: PolicyDocument) -> list[Segment]:
    """Split the body on sentence-final punctuation and newline runs.

    Each segment keeps its trailing terminators, so the segment texts tile
    the body exactly; fragments that are only separators glue onto their
    neighbor instead of becoming segments.
    """
    pieces = _SPLIT_RE.split(doc.body)
    chunks: list[str] = []
    pending = ""  # separator-only run waiting for a segment to own it
    for i in range(0, len(pieces), 2):
        text = pieces[i]
        sep = pieces[i + 1] if i + 1 < len(pieces) else ""
        chunk = text + sep
        if not chunk:
            continue
        if not text.strip():
            if chunks:
                chunks[-1] += chunk
            else:
                pending += chunk
        else:
            chunks.append(pending + chunk)
            pending = ""
    # leftover pending means the body was separators only: no segments
    segments = []
    offset = 0
    for chunk in chunks:
        segments.append(
            Segment(
                doc_id=doc.doc_id,
                segment_index=len(segments),
                text=chunk,
                char_span=(offset, offset + len(chunk)),
            )
        )
        offset += len(chunk)
    return segments


# --- stage 1: head recognition ----------------------------------------------

_ENUM_PREFIX_RE = re.compile(r"^\s*(?:[-*•·]|\(?\d+[.)、]?|[一二三四五六七八九十]+[、.])\s*")
_QUOTE_CHARS = "\"'“”‘’「」『』"


def _clean_surface(raw: str) -> str:
    return raw.strip().strip(_QUOTE_CHARS).strip()


def parse_head_response(response: str) -> list[tuple[str, str]]:
    """Lenient parse of the stage-1 response: one ``surface|TYPE`` per line.

    Tolerates numbering, bullets, blank lines, fullwidth pipes, tabs, and
    commas as separators.  Returns [] for an empty response; raises
    UnparseableResponse when text is present but nothing parses.
    """
    items: list[tuple[str, str]] = []
    seen = set()
    stripped_all = response.strip()
    if not stripped_all:
        return []
    for line in response.splitlines():
        line = _ENUM_PREFIX_RE.sub("", line).strip()
        if not line:
            continue
        for sep in ("|", "｜", "\t", "，", ","):
            if sep in line:
                surface, _, type_raw = line.partition(sep)
                surface = _clean_surface(surface)
                type_code = type_raw.strip().upper()
                if surface and type_code and (surface, type_code) not in seen:
                    seen.add((surface, type_code))
                    items.append((surface, type_code))
                break
    if not items:
        raise UnparseableResponse(f"no (surface, type) items in response: {stripped_all[:80]!r}")
    return items


def _find_occurrences(body: str, surface: str) -> tuple[tuple[int, int], ...]:
    spans = []
    pos = body.find(surface)
    while pos >= 0:
        spans.append((pos, pos + len(surface)))
        pos = body.find(surface, pos + len(surface))
    return tuple(spans)


def recognize_head_entities(
    doc: PolicyDocument,
    client: LlmClient,
    schema: OntologySchema,
    report: PipelineReport | None = None,
) -> list[HeadEntityMention]:
    """Whole-document head recognition with a hallucination filter.

    Items whose surface is absent from the body or whose type code is not in
    the schema are dropped (and counted on the report when one is given).
    """
    template = load_template("head_entities")
    slots = {"document": doc.body, "type_catalog": type_catalog(schema)}
    request = LlmRequest(
        digest=template.digest(**slots),
        template_version=template.version,
        prompt=template.render(**slots),
    )
    response = client.complete(request)
    mentions: list[HeadEntityMention] = []
    for surface, type_code in parse_head_response(response):
        if type_code not in schema.entity_types:
            if report:
                report.heads_dropped_unknown_type += 1
            continue
        occurrences = _find_occurrences(doc.body, surface)
        if not occurrences:
            if report:
                report.heads_dropped_hallucinated += 1
            continue
        mentions.append(
            HeadEntityMention(
                doc_id=doc.doc_id,
                surface=surface,
                type_code=type_code,
                occurrences=occurrences,
            )
        )
    return mentions


# --- stage 2: relation classification ---------------------------------------


def _normalize_scores(raw: dict[str, float]) -> dict[str, float]:
    scores = {label: max(0.0, float(raw.get(label, 0.0))) for label in ALL_RELATION_LABELS}
    total = sum(scores.values())
    if total <= 0.0:
        uniform = 1.0 / len(ALL_RELATION_LABELS)
        return {label: uniform for label in ALL_RELATION_LABELS}
    if abs(total - 1.0) > 1e-6:
        scores = {label: v / total for label, v in scores.items()}
    return scores


def classify_relation(
    segment: Segment,
    head: HeadEntityMention,
    classifier: ClassifierClient,
    tau: float = DEFAULT_TAU,
    fallback: ClassifierClient | None = None,
    report: PipelineReport | None = None,
) -> RelationCandidate:
    """Score the 15 labels for one (segment, head) pair; abstain under tau.

    An unavailable classifier degrades to the rule fallback; the degradation
    is counted per candidate and marked on the result.
    """
    if head.surface not in segment.text:
        raise ValueError(f"head {head.surface!r} does not occur in segment {segment.segment_index}")
    fallback_used = False
    try:
        raw = classifier.classify(segment.text, head.surface)
    except ClassifierUnavailable:
        if report:
            report.classifier_unavailable += 1
        fallback_used = True
        raw = (fallback or RuleClassifier()).classify(segment.text, head.surface)
    scores = _normalize_scores(raw)
    label, top = min(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return RelationCandidate(
        segment=segment,
        head=head,
        label=label,
        scores=scores,
        abstained=top < tau,
        fallback_used=fallback_used,
    )


# --- stage 3: tail extraction -----------------------------------------------

_TAIL_TRAILING = "。；！？，、：,;:!?…．"
_BRACKET_PAIRS = {
    "《": "》", "「": "」", "『": "』", "“": "”", "‘": "’",
    "(": ")", "（": "）", "[": "]", "【": "】", '"': '"', "'": "'",
}


def _clean_tail(raw: str) -> str:
    text = raw.strip().rstrip(_TAIL_TRAILING).strip()
    while len(text) >= 2 and _BRACKET_PAIRS.get(text[0]) == text[-1]:
        text = text[1:-1].strip().rstrip(_TAIL_TRAILING).strip()
    return text


def extract_tail(
    candidate: RelationCandidate,
    client: LlmClient,
    schema: OntologySchema,
) -> TailExtraction:
    """Locate the relation word, take everything after it as the tail.

    The relation word must occur after the head's first occurrence in the
    segment.  The tail type is forced when the relation's legal tail set is a
    singleton; otherwise a second prompt chooses among the legal codes.
    """
    segment, head = candidate.segment, candidate.head
    code, swapped = schema.resolve_label(candidate.label)
    rel = schema.relation_type(code)
    legal_tail_types = sorted(rel.domain if swapped else rel.range)

    template = load_template("relation_word")
    slots = {
        "segment": segment.text,
        "head": head.surface,
        "relation_display": label_display_name(schema, candidate.label),
    }
    response = client.complete(
        LlmRequest(template.digest(**slots), template.version, template.render(**slots))
    )
    lines = response.strip().splitlines()
    word = lines[0].strip().strip(_QUOTE_CHARS).strip() if lines else ""
    if not word:
        raise RelationWordNotFound("empty relation-word response")
    head_pos = segment.text.find(head.surface)
    word_pos = segment.text.find(word, head_pos + len(head.surface))
    if word_pos < 0:
        raise RelationWordNotFound(word)
    tail_start = word_pos + len(word)
    tail_surface = _clean_tail(segment.text[tail_start:])
    if not tail_surface:
        raise EmptyTail(f"nothing after relation word {word!r}")
    tail_pos = segment.text.find(tail_surface, tail_start)
    if len(legal_tail_types) == 1:
        tail_type = legal_tail_types[0]
    else:
        type_template = load_template("tail_type")
        type_slots = {
            "segment": segment.text,
            "head": head.surface,
            "tail": tail_surface,
            "allowed": ", ".join(legal_tail_types),
        }
        answer = client.complete(
            LlmRequest(
                type_template.digest(**type_slots),
                type_template.version,
                type_template.render(**type_slots),
            )
        ).strip().upper()
        if answer not in legal_tail_types:
            raise UnparseableResponse(
                f"tail type {answer!r} is not among legal codes {legal_tail_types}"
            )
        tail_type = answer
    return TailExtraction(
        candidate=candidate,
        relation_word=word,
        relation_word_span=(word_pos, word_pos + len(word)),
        tail_surface=tail_surface,
        tail_span=(tail_pos, tail_pos + len(tail_surface)),
        tail_type_code=tail_type,
    )


# --- assembly ---------------------------------------------------------------


def assemble_triple(
    extraction: TailExtraction, store: GraphStore, report: PipelineReport
) -> str | None:
    """Normalize, validate, and store one extracted triple.

    Returns the stored triple id, or None when the candidate violates the
    schema (counted, never stored).
    """
    candidate = extraction.candidate
    segment, head = candidate.segment, candidate.head
    schema = store.schema
    try:
        normalize_relation(schema, head.type_code, candidate.label, extraction.tail_type_code)
    except SignatureViolation:
        report.schema_violations_dropped += 1
        return None
    code, swapped = schema.resolve_label(candidate.label)
    note = "rule_fallback" if candidate.fallback_used else ""
    confidence = candidate.scores[candidate.label]
    head_prov = Provenance(
        segment.doc_id,
        segment.segment_index,
        char_span=head.occurrences[0],
        stage=Stage.head_entity,
        confidence=1.0,
        note=note,
    )
    seg_start = segment.char_span[0]
    tail_prov = Provenance(
        segment.doc_id,
        segment.segment_index,
        char_span=(seg_start + extraction.tail_span[0], seg_start + extraction.tail_span[1]),
        stage=Stage.tail_extract,
        confidence=confidence,
        note=note,
    )
    head_eid = store.upsert_entity(head.type_code, head.surface, head_prov)
    tail_eid = store.upsert_entity(extraction.tail_type_code, extraction.tail_surface, tail_prov)
    h, t = (tail_eid, head_eid) if swapped else (head_eid, tail_eid)
    tid, _ = store.insert_triple(h, code, t, tail_prov)
    report.content_triples += 1
    return tid


# --- end-to-end -------------------------------------------------------------


def _extract_document(
    doc: PolicyDocument,
    llm: LlmClient,
    classifier: ClassifierClient,
    config: PipelineConfig,
    schema: OntologySchema,
) -> tuple[PipelineReport, list[TailExtraction]]:
    """Content extraction for one document; pure, no store writes."""
    report = PipelineReport()
    extractions: list[TailExtraction] = []
    try:
        heads = recognize_head_entities(doc, llm, schema, report)
    except ReplayMiss:
        raise
    except (ClientError, UnparseableResponse) as exc:
        report.documents_skipped += 1
        report.skipped_documents.append(f"{doc.doc_id}: {exc}")
        return report, extractions
    report.head_mentions += len(heads)
    fallback = RuleClassifier(schema)
    for segment in segment_document(doc):
        for head in heads:
            if head.surface not in segment.text:
                continue
            report.candidates += 1
            candidate = classify_relation(
                segment, head, classifier, config.tau, fallback, report
            )
            if candidate.abstained:
                report.abstained += 1
                continue
            try:
                extractions.append(extract_tail(candidate, llm, schema))
            except ReplayMiss:
                raise
            except RelationWordNotFound:
                report.relation_word_not_found += 1
            except EmptyTail:
                report.empty_tail += 1
            except UnparseableResponse:
                report.unparseable_responses += 1
            except ClientError as exc:
                report.skipped_documents.append(
                    f"{doc.doc_id}: segment {segment.segment_index}: {exc}"
                )
    return report, extractions


def run_pipeline(
    corpus: Sequence[PolicyDocument],
    llm: LlmClient,
    classifier: ClassifierClient,
    config: PipelineConfig,
    store: GraphStore,
) -> PipelineReport:
    """Document-level facts, similarity links, then staged content extraction.

    Documents are extracted concurrently up to ``config.max_workers``; store
    writes happen on the calling thread in document order, so results do not
    depend on completion order.
    """
    report = PipelineReport()
    docs = sorted(corpus, key=lambda d: d.doc_id)
    report.documents = len(docs)
    for doc in docs:
        ids = metadata_to_triples(doc, store)
        report.document_level_triples += len(ids)
    report.citation_triples += len(detect_citations(docs, store))
    if config.link_similar and len(docs) > 1:
        edge_ids = build_relevance_edges(
            docs, config.provider(), config.similarity, store, config.embed_cache
        )
        report.relevance_edges += len(edge_ids)

    def work(doc: PolicyDocument):
        return _extract_document(doc, llm, classifier, config, store.schema)

    if config.max_workers > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            results = list(pool.map(work, docs))
    else:
        results = [work(doc) for doc in docs]
    for doc_report, extractions in results:
        report.merge(doc_report)
        for extraction in extractions:
            assemble_triple(extraction, store, report)
    return report
