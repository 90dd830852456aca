"""Command-line workflow driver: corpus directory in, graph snapshot out.

Subcommands mirror the pipeline stages (ingest, link-similar, extract) plus
snapshot plumbing (export, import), scoring (eval), retrieval (query) and the
whole chain (run-all).  Every value is settable three ways with fixed
precedence: command-line flag, then YAML config file, then built-in default.
Exit status: 0 success, 1 partial per-document failures under --strict,
2 configuration errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import yaml

from .corpus_ingest import detect_citations, load_corpus, metadata_to_triples
from .doc_similarity import (
    HashNgramProvider,
    HttpEmbeddingProvider,
    SimilarityConfig,
    build_relevance_edges,
)
from .errors import ConfigError, ForpkgError
from .evaluation import (
    MatchPolicy,
    load_gold,
    predictions_from_store,
    render_report,
    score,
)
from .extraction.clients import (
    HttpClassifierClient,
    HttpLlmClient,
    ReplayLlmClient,
    RuleClassifier,
)
from .extraction.pipeline import DEFAULT_TAU, PipelineConfig, PipelineReport, run_pipeline
from .graph_store import GraphStore, export_graph, import_graph
from .ontology import builtin_schema, load_schema
from .rag_retrieval import RetrievalConfig, link_query, retrieve_subgraph, serialize_context

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

DEFAULTS = {
    "corpus": None,
    "graph": "graph.jsonl",
    "output": None,
    "ontology": None,
    "lambda": 0.85,
    "tau": DEFAULT_TAU,
    "llm": "replay",
    "classifier": "rule",
    "embedder": "hash",
    "embed_dim": 256,
    "transcripts": "transcripts.jsonl",
    "embed_cache": None,
    "strict": False,
    "parallelism": 1,
    "gold": None,
    "policy": "normalized",
    "jaccard_min": 0.5,
    "format": None,
    "text": None,
    "hops": 2,
    "max": 40,
}

ENV_LLM_ENDPOINT = "FORPKG_LLM_ENDPOINT"
ENV_LLM_KEY = "FORPKG_LLM_KEY"
ENV_LLM_MODEL = "FORPKG_LLM_MODEL"
ENV_CLASSIFIER_ENDPOINT = "FORPKG_CLASSIFIER_ENDPOINT"
ENV_EMBED_ENDPOINT = "FORPKG_EMBED_ENDPOINT"


class Settings:
    """Flag-over-file-over-default view of one subcommand invocation."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file: dict = {}
        config_path = self._args.get("config")
        if config_path:
            try:
                with open(config_path, encoding="utf-8") as fh:
                    loaded = yaml.safe_load(fh) or {}
            except OSError as exc:
                raise ConfigError("config", f"cannot read {config_path}: {exc.strerror}")
            except yaml.YAMLError as exc:
                raise ConfigError("config", f"invalid YAML in {config_path}: {exc}")
            if not isinstance(loaded, dict):
                raise ConfigError("config", f"{config_path} must hold a mapping")
            unknown = set(loaded) - set(DEFAULTS)
            if unknown:
                raise ConfigError("config", f"unknown keys: {sorted(unknown)}")
            self._file = loaded

    def get(self, key: str):
        # `lambda` is a reserved word, so its argparse dest carries a suffix
        flag = self._args.get("lambda_" if key == "lambda" else key.replace("-", "_"))
        if flag is not None:
            return flag
        if key in self._file and self._file[key] is not None:
            return self._file[key]
        return DEFAULTS[key]


def entrypoint() -> None:
    raise SystemExit(main(sys.argv[1:]))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        return args.handler(settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ForpkgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forpkg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, corpus=False, graph=False, writes=False):
        p.add_argument("--config", help="YAML file with defaults for any flag")
        p.add_argument("--ontology", help="schema YAML overriding the built-in ontology")
        if corpus:
            p.add_argument("--corpus", help="directory of policy .txt files")
        if graph:
            p.add_argument("--graph", help="graph snapshot file (default graph.jsonl)")
        if writes:
            p.add_argument(
                "--strict",
                action=argparse.BooleanOptionalAction,
                default=None,
                help="treat corpus degradations as errors; exit 1 on skipped documents",
            )

    p = sub.add_parser("ingest", help="load corpus metadata facts into the snapshot")
    common(p, corpus=True, graph=True, writes=True)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("link-similar", help="add document similarity edges")
    common(p, corpus=True, graph=True, writes=True)
    p.add_argument("--lambda", dest="lambda_", type=float, help="cosine threshold in (0,1)")
    p.add_argument("--embedder", choices=("hash", "http"))
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-cache", help="embedding cache file")
    p.set_defaults(handler=cmd_link_similar)

    p = sub.add_parser("extract", help="run staged relation extraction over the corpus")
    common(p, corpus=True, graph=True, writes=True)
    p.add_argument("--llm", choices=("replay", "http"))
    p.add_argument("--classifier", choices=("rule", "http"))
    p.add_argument("--tau", type=float, help="abstention threshold on classifier scores")
    p.add_argument("--transcripts", help="recorded transcript file for replay mode")
    p.add_argument("--parallelism", type=int)
    p.set_defaults(handler=cmd_extract)

    p = sub.add_parser("export", help="write the snapshot in an exchange format")
    common(p, graph=True)
    p.add_argument("--format", choices=("jsonl", "graphdb_script"))
    p.add_argument("--output", help="destination file (stdout when omitted)")
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("import", help="validate an exported file into a fresh snapshot")
    common(p)
    p.add_argument("--input", required=True, help="jsonl export to read")
    p.add_argument("--graph", help="snapshot file to write")
    p.set_defaults(handler=cmd_import)

    p = sub.add_parser("eval", help="score the snapshot against gold annotations")
    common(p, graph=True)
    p.add_argument("--gold", help="line-delimited gold triple file")
    p.add_argument("--policy", choices=("exact", "normalized", "overlap"))
    p.add_argument("--jaccard-min", type=float)
    p.add_argument("--format", choices=("text", "csv", "radar_data"))
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("query", help="print graph context for a question")
    common(p, graph=True)
    p.add_argument("--text", help="the question to link against the graph")
    p.add_argument("--hops", type=int)
    p.add_argument("--max", type=int, help="triple budget for the context block")
    p.set_defaults(handler=cmd_query)

    p = sub.add_parser("run-all", help="ingest, link, extract and export in one go")
    common(p, corpus=True, graph=True, writes=True)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--embedder", choices=("hash", "http"))
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-cache")
    p.add_argument("--llm", choices=("replay", "http"))
    p.add_argument("--classifier", choices=("rule", "http"))
    p.add_argument("--tau", type=float)
    p.add_argument("--transcripts")
    p.add_argument("--parallelism", type=int)
    p.set_defaults(handler=cmd_run_all)

    return parser


# --- shared plumbing --------------------------------------------------------


def _schema(settings: Settings):
    path = settings.get("ontology")
    if path is None:
        return builtin_schema()
    if not Path(path).is_file():
        raise ConfigError("ontology", f"no such file: {path}")
    return load_schema(path)


def _corpus(settings: Settings):
    directory = settings.get("corpus")
    if directory is None:
        raise ConfigError("corpus", "a corpus directory is required")
    if not Path(directory).is_dir():
        raise ConfigError("corpus", f"no such directory: {directory}")
    return load_corpus(directory, strict=bool(settings.get("strict")))


def _load_snapshot(settings: Settings, schema, must_exist=False) -> GraphStore:
    path = Path(settings.get("graph"))
    if path.is_file():
        return import_graph(path.read_bytes(), schema)
    if must_exist:
        raise ConfigError("graph", f"no such file: {path}")
    return GraphStore(schema)


def _write_snapshot(settings: Settings, store: GraphStore) -> Path:
    path = Path(settings.get("graph"))
    path.write_bytes(export_graph(store, "jsonl"))
    return path


def _write_report(snapshot_path: Path, stage: str, report: PipelineReport, store: GraphStore):
    payload = {
        "stage": stage,
        "entities": len(store.entities),
        "base_triples": store.base_triple_count(),
        "derived_triples": store.derived_triple_count(),
        **report.to_dict(),
    }
    report_path = snapshot_path.with_name(snapshot_path.name + ".report.json")
    report_path.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def _similarity_config(settings: Settings, provider) -> SimilarityConfig:
    threshold = float(settings.get("lambda"))
    if not 0.0 < threshold < 1.0:
        raise ConfigError("lambda", f"threshold must be in (0, 1), got {threshold}")
    return SimilarityConfig(threshold=threshold, provider_id=provider.provider_id)


def _embedding_provider(settings: Settings):
    kind = settings.get("embedder")
    dim = int(settings.get("embed_dim"))
    if kind == "hash":
        return HashNgramProvider(dim=dim)
    endpoint = os.environ.get(ENV_EMBED_ENDPOINT)
    if not endpoint:
        raise ConfigError("embedder", f"http mode needs {ENV_EMBED_ENDPOINT}")
    return HttpEmbeddingProvider(endpoint, dim=dim, provider_id="http-remote-v1")


def _llm_client(settings: Settings):
    mode = settings.get("llm")
    if mode == "replay":
        path = Path(settings.get("transcripts"))
        if not path.is_file():
            raise ConfigError("transcripts", f"no such file: {path}")
        return ReplayLlmClient(path)
    endpoint = os.environ.get(ENV_LLM_ENDPOINT)
    if not endpoint:
        raise ConfigError("llm", f"http mode needs {ENV_LLM_ENDPOINT}")
    return HttpLlmClient(
        endpoint,
        api_key=os.environ.get(ENV_LLM_KEY, ""),
        model=os.environ.get(ENV_LLM_MODEL, ""),
    )


def _classifier_client(settings: Settings):
    if settings.get("classifier") == "rule":
        return RuleClassifier()
    endpoint = os.environ.get(ENV_CLASSIFIER_ENDPOINT)
    if not endpoint:
        raise ConfigError("classifier", f"http mode needs {ENV_CLASSIFIER_ENDPOINT}")
    return HttpClassifierClient(endpoint)


def _tau(settings: Settings) -> float:
    tau = float(settings.get("tau"))
    if not 0.0 <= tau <= 1.0:
        raise ConfigError("tau", f"must be in [0, 1], got {tau}")
    return tau


def _parallelism(settings: Settings) -> int:
    workers = int(settings.get("parallelism"))
    if workers < 1:
        raise ConfigError("parallelism", f"must be >= 1, got {workers}")
    return workers


def _finish(settings: Settings, report: PipelineReport) -> int:
    if settings.get("strict") and report.documents_skipped:
        for entry in report.skipped_documents:
            print(f"skipped: {entry}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# --- subcommands ------------------------------------------------------------


def cmd_ingest(settings: Settings) -> int:
    schema = _schema(settings)
    corpus = _corpus(settings)
    store = _load_snapshot(settings, schema)
    strict = bool(settings.get("strict"))
    report = PipelineReport(documents=len(corpus))
    for doc in corpus:
        report.document_level_triples += len(metadata_to_triples(doc, store, strict))
    report.citation_triples = len(detect_citations(corpus, store))
    path = _write_snapshot(settings, store)
    _write_report(path, "ingest", report, store)
    return _finish(settings, report)


def cmd_link_similar(settings: Settings) -> int:
    schema = _schema(settings)
    corpus = _corpus(settings)
    store = _load_snapshot(settings, schema)
    provider = _embedding_provider(settings)
    config = _similarity_config(settings, provider)
    edges = build_relevance_edges(
        corpus, provider, config, store, cache_path=settings.get("embed_cache")
    )
    report = PipelineReport(documents=len(corpus), relevance_edges=len(edges))
    path = _write_snapshot(settings, store)
    _write_report(path, "link-similar", report, store)
    return _finish(settings, report)


def cmd_extract(settings: Settings) -> int:
    schema = _schema(settings)
    corpus = _corpus(settings)
    store = _load_snapshot(settings, schema)
    config = PipelineConfig(
        tau=_tau(settings),
        max_workers=_parallelism(settings),
        link_similar=False,
    )
    report = run_pipeline(corpus, _llm_client(settings), _classifier_client(settings), config, store)
    path = _write_snapshot(settings, store)
    _write_report(path, "extract", report, store)
    return _finish(settings, report)


def cmd_export(settings: Settings) -> int:
    schema = _schema(settings)
    store = _load_snapshot(settings, schema, must_exist=True)
    format = settings.get("format") or "jsonl"
    if format not in ("jsonl", "graphdb_script"):
        raise ConfigError("format", f"unknown export format {format!r}")
    data = export_graph(store, format)
    output = settings.get("output")
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def cmd_import(settings: Settings) -> int:
    schema = _schema(settings)
    input_path = Path(settings.get("input") or "")
    if not input_path.is_file():
        raise ConfigError("input", f"no such file: {input_path}")
    store = import_graph(input_path.read_bytes(), schema)
    _write_snapshot(settings, store)
    return EXIT_OK


def cmd_eval(settings: Settings) -> int:
    schema = _schema(settings)
    store = _load_snapshot(settings, schema, must_exist=True)
    gold_path = settings.get("gold")
    if gold_path is None:
        raise ConfigError("gold", "a gold annotation file is required")
    if not Path(gold_path).is_file():
        raise ConfigError("gold", f"no such file: {gold_path}")
    policy = MatchPolicy(settings.get("policy"), jaccard_min=float(settings.get("jaccard_min")))
    report = score(predictions_from_store(store), load_gold(gold_path, schema), policy)
    format = settings.get("format") or "text"
    sys.stdout.buffer.write(render_report(report, format))
    sys.stdout.buffer.write(b"\n")
    return EXIT_OK


def cmd_query(settings: Settings) -> int:
    schema = _schema(settings)
    store = _load_snapshot(settings, schema, must_exist=True)
    text = settings.get("text")
    if not text:
        raise ConfigError("text", "a query text is required")
    config = RetrievalConfig(
        max_hops=int(settings.get("hops")), max_triples=int(settings.get("max"))
    )
    seeds = link_query(text, store)
    triples = retrieve_subgraph(seeds, store, config) if seeds else []
    print(serialize_context(triples, store))
    return EXIT_OK


def cmd_run_all(settings: Settings) -> int:
    schema = _schema(settings)
    corpus = _corpus(settings)
    store = GraphStore(schema)
    provider = _embedding_provider(settings)
    config = PipelineConfig(
        tau=_tau(settings),
        similarity=_similarity_config(settings, provider),
        embedding_provider=provider,
        embed_cache=settings.get("embed_cache"),
        max_workers=_parallelism(settings),
        link_similar=True,
    )
    report = run_pipeline(corpus, _llm_client(settings), _classifier_client(settings), config, store)
    path = _write_snapshot(settings, store)
    _write_report(path, "run-all", report, store)
    return _finish(settings, report)
