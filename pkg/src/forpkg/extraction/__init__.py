"""Three-stage content extraction: head entities, relation, tail span."""

from .clients import (  # noqa: F401
    HttpClassifierClient,
    HttpLlmClient,
    LlmRequest,
    RecordingLlmClient,
    ReplayLlmClient,
    RuleClassifier,
)
from .pipeline import (  # noqa: F401
    PipelineConfig,
    PipelineReport,
    classify_relation,
    extract_tail,
    recognize_head_entities,
    run_pipeline,
    segment_document,
)
from .prompts import PromptTemplate, load_template  # noqa: F401
