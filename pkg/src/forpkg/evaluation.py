"""Scoring of extracted triples against gold surface annotations.

Matching is greedy, one-to-one and tiered: pairs that agree exactly are
consumed first, then (depending on the policy) pairs whose surfaces agree
after punctuation/space stripping, then pairs passing a character Jaccard
threshold.  Because each tier only ever adds pairs on top of the previous
tier's matching, the matched sets nest across policies: exact subset of
normalized subset of overlap.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import unicodedata
from collections import Counter
from collections.abc import Sequence
from pathlib import Path

from .errors import ConfigError, ForpkgError, ParseError
from .graph_store import GraphStore
from .ontology import OntologySchema, validate_signature


class MatchMode(str, enum.Enum):
    exact = "exact"
    normalized = "normalized"
    overlap = "overlap"


@dataclasses.dataclass(frozen=True)
class MatchPolicy:
    mode: MatchMode = MatchMode.normalized
    # character-level Jaccard floor, consulted by overlap mode only
    jaccard_min: float = 0.5

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", MatchMode(self.mode))
        except ValueError:
            raise ConfigError("mode", f"unknown match mode {self.mode!r}") from None
        if not 0.0 < self.jaccard_min <= 1.0:
            raise ConfigError("jaccard_min", f"must be in (0, 1], got {self.jaccard_min}")

    def label(self) -> str:
        if self.mode is MatchMode.overlap:
            return f"overlap(jaccard>={self.jaccard_min:g})"
        return self.mode.value


@dataclasses.dataclass(frozen=True)
class GoldTriple:
    """One surface-level annotation; predictions reuse the same record shape."""

    doc_id: str
    head_surface: str
    head_type: str
    relation: str
    tail_surface: str
    tail_type: str


@dataclasses.dataclass
class EvalReport:
    policy: str
    predicted: int
    gold: int
    matched: int
    precision: float
    recall: float
    f1: float
    per_entity_type_accuracy: dict[str, float]
    per_relation_type_accuracy: dict[str, float]

    @property
    def counts(self) -> tuple[int, int, int]:
        return (self.predicted, self.gold, self.matched)


def normalize_surface(surface: str) -> str:
    """Strip punctuation, separators and whitespace.  Case is preserved."""
    out = []
    for ch in unicodedata.normalize("NFC", surface):
        if ch.isspace():
            continue
        if unicodedata.category(ch)[0] in ("P", "Z"):
            continue
        out.append(ch)
    return "".join(out)


def char_jaccard(a: str, b: str) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    union = sa | sb
    return len(sa & sb) / len(union)


def _surfaces_agree(p: GoldTriple, g: GoldTriple, tier: MatchMode, jaccard_min: float) -> bool:
    if tier is MatchMode.exact:
        return p.head_surface == g.head_surface and p.tail_surface == g.tail_surface
    if tier is MatchMode.normalized:
        return (
            normalize_surface(p.head_surface) == normalize_surface(g.head_surface)
            and normalize_surface(p.tail_surface) == normalize_surface(g.tail_surface)
        )
    return (
        char_jaccard(p.head_surface, g.head_surface) >= jaccard_min
        and char_jaccard(p.tail_surface, g.tail_surface) >= jaccard_min
    )


def _hard_fields_agree(p: GoldTriple, g: GoldTriple) -> bool:
    return (
        p.doc_id == g.doc_id
        and p.relation == g.relation
        and p.head_type == g.head_type
        and p.tail_type == g.tail_type
    )


_TIER_LADDER = {
    MatchMode.exact: (MatchMode.exact,),
    MatchMode.normalized: (MatchMode.exact, MatchMode.normalized),
    MatchMode.overlap: (MatchMode.exact, MatchMode.normalized, MatchMode.overlap),
}


def match_pairs(
    predicted: Sequence[GoldTriple],
    gold: Sequence[GoldTriple],
    policy: MatchPolicy,
) -> list[tuple[int, int]]:
    """Greedy one-to-one matching; returns (predicted index, gold index) pairs.

    Deterministic: within each tier, gold entries are consumed in list order
    and each takes the first still-unmatched prediction that fits.
    """
    pred_taken = [False] * len(predicted)
    gold_taken = [False] * len(gold)
    pairs: list[tuple[int, int]] = []
    for tier in _TIER_LADDER[policy.mode]:
        for gi, g in enumerate(gold):
            if gold_taken[gi]:
                continue
            for pi, p in enumerate(predicted):
                if pred_taken[pi]:
                    continue
                if _hard_fields_agree(p, g) and _surfaces_agree(p, g, tier, policy.jaccard_min):
                    pred_taken[pi] = True
                    gold_taken[gi] = True
                    pairs.append((pi, gi))
                    break
    return pairs


def score(
    predicted: Sequence[GoldTriple],
    gold: Sequence[GoldTriple],
    policy: MatchPolicy | None = None,
) -> EvalReport:
    policy = policy or MatchPolicy()
    pairs = match_pairs(predicted, gold, policy)
    matched_gold = {gi for _, gi in pairs}
    n_matched = len(pairs)
    # 0-prediction and 0-gold denominators score 0 by convention
    precision = n_matched / len(predicted) if predicted else 0.0
    recall = n_matched / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    entity_total: Counter[str] = Counter()
    entity_hit: Counter[str] = Counter()
    relation_total: Counter[str] = Counter()
    relation_hit: Counter[str] = Counter()
    for gi, g in enumerate(gold):
        hit = gi in matched_gold
        for code in (g.head_type, g.tail_type):
            entity_total[code] += 1
            if hit:
                entity_hit[code] += 1
        relation_total[g.relation] += 1
        if hit:
            relation_hit[g.relation] += 1

    return EvalReport(
        policy=policy.label(),
        predicted=len(predicted),
        gold=len(gold),
        matched=n_matched,
        precision=precision,
        recall=recall,
        f1=f1,
        per_entity_type_accuracy={c: entity_hit[c] / entity_total[c] for c in sorted(entity_total)},
        per_relation_type_accuracy={
            c: relation_hit[c] / relation_total[c] for c in sorted(relation_total)
        },
    )


def per_type_breakdown(
    predicted: Sequence[GoldTriple],
    gold: Sequence[GoldTriple],
    policy: MatchPolicy | None = None,
) -> tuple[dict[str, float], dict[str, float]]:
    report = score(predicted, gold, policy)
    return report.per_entity_type_accuracy, report.per_relation_type_accuracy


def render_report(report: EvalReport, format: str = "text") -> bytes:
    if format == "text":
        return _render_text(report)
    if format == "csv":
        return _render_csv(report)
    if format == "radar_data":
        return _render_radar(report)
    raise ValueError(f"unknown report format {format!r}")


def _render_text(report: EvalReport) -> bytes:
    lines = [
        f"{'match policy':<16}{report.policy}",
        f"{'predicted':<16}{report.predicted}",
        f"{'gold':<16}{report.gold}",
        f"{'matched':<16}{report.matched}",
        f"{'precision':<16}{report.precision:.4f}",
        f"{'recall':<16}{report.recall:.4f}",
        f"{'f1':<16}{report.f1:.4f}",
        "",
        "entity type accuracy",
    ]
    for code, value in report.per_entity_type_accuracy.items():
        lines.append(f"  {code:<14}{value:.4f}")
    lines.append("relation type accuracy")
    for code, value in report.per_relation_type_accuracy.items():
        lines.append(f"  {code:<14}{value:.4f}")
    lines.append("")
    return "\n".join(lines).encode("utf-8")


def _render_csv(report: EvalReport) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["metric", "value"])
    writer.writerow(["policy", report.policy])
    writer.writerow(["predicted", report.predicted])
    writer.writerow(["gold", report.gold])
    writer.writerow(["matched", report.matched])
    writer.writerow(["precision", repr(report.precision)])
    writer.writerow(["recall", repr(report.recall)])
    writer.writerow(["f1", repr(report.f1)])
    for code, value in report.per_entity_type_accuracy.items():
        writer.writerow([f"entity_accuracy:{code}", repr(value)])
    for code, value in report.per_relation_type_accuracy.items():
        writer.writerow([f"relation_accuracy:{code}", repr(value)])
    return buffer.getvalue().encode("utf-8")


def _render_radar(report: EvalReport) -> bytes:
    payload = {
        "policy": report.policy,
        "entity_types": [[c, v] for c, v in report.per_entity_type_accuracy.items()],
        "relation_types": [[c, v] for c, v in report.per_relation_type_accuracy.items()],
    }
    return json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")


_GOLD_FIELDS = ("doc_id", "head_surface", "head_type", "relation", "tail_surface", "tail_type")


def load_gold(path: str | Path, schema: OntologySchema) -> list[GoldTriple]:
    """Read line-delimited gold records, checking each signature."""
    triples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"bad JSON: {exc}") from None
            if not isinstance(record, dict) or set(record) != set(_GOLD_FIELDS):
                raise ParseError(line_no, f"expected fields {list(_GOLD_FIELDS)}")
            triple = GoldTriple(**{k: record[k] for k in _GOLD_FIELDS})
            try:
                verdict = validate_signature(
                    schema, triple.head_type, triple.relation, triple.tail_type
                )
            except ForpkgError as exc:
                raise ParseError(line_no, str(exc)) from None
            if not verdict:
                raise ParseError(line_no, f"invalid gold signature: {verdict.reason}")
            triples.append(triple)
    return triples


def save_gold(path: str | Path, triples: Sequence[GoldTriple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for triple in triples:
            record = {field: getattr(triple, field) for field in _GOLD_FIELDS}
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def predictions_from_store(store: GraphStore) -> list[GoldTriple]:
    """Flatten base triples to surface records, one per provenance document."""
    rows = []
    for triple in store.iter_triples(include_derived=False):
        head = store.entities[triple.head_id]
        tail = store.entities[triple.tail_id]
        for doc_id in sorted({p.doc_id for p in triple.provenance}):
            rows.append(
                GoldTriple(
                    doc_id=doc_id,
                    head_surface=head.canonical_mention,
                    head_type=head.type_code,
                    relation=triple.relation_code,
                    tail_surface=tail.canonical_mention,
                    tail_type=tail.type_code,
                )
            )
    rows.sort(key=dataclasses.astuple)
    return rows
