"""forpkg: a knowledge-graph toolkit for policy and regulation text.

Builds ontology-constrained knowledge graphs from policy documents: corpus
ingestion, staged triple extraction with record/replay LLM transcripts,
document similarity linking, evaluation against gold annotations, export to
graph-database scripts, and subgraph retrieval for downstream QA.
"""

__version__ = "0.1.0"

from .ontology import builtin_schema  # noqa: F401
