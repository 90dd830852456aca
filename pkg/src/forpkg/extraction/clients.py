"""LLM and classifier clients.

The pipeline only ever talks to two small interfaces: an LLM client that
completes a prompt, and a classifier that scores a (segment, head) pair over
the 15 relation labels.  Each has an offline implementation (replay
transcripts, keyword rules) and an HTTP one; tests use only the offline pair.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from ..errors import ClassifierUnavailable, ClientError, ReplayMiss
from ..ontology import ALL_RELATION_LABELS, OntologySchema


@dataclass(frozen=True)
class LlmRequest:
    digest: str
    template_version: str
    prompt: str


class LlmClient(Protocol):
    def complete(self, request: LlmRequest) -> str: ...


class ClassifierClient(Protocol):
    def classify(self, segment_text: str, head_surface: str) -> dict[str, float]: ...


# --- replay / record --------------------------------------------------------


class ReplayLlmClient:
    """Answers from a recorded transcript; unrecorded digests fail loudly.

    Transcript format: one JSON object per line with keys ``digest``,
    ``template_version``, ``prompt``, ``response``.
    """

    def __init__(self, transcript_path: str | Path):
        self._responses: dict[str, str] = {}
        path = Path(transcript_path)
        for line_no, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                self._responses[record["digest"]] = record["response"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise ClientError(f"{path}:{line_no}: bad transcript record: {exc}") from exc

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, request: LlmRequest) -> str:
        try:
            return self._responses[request.digest]
        except KeyError:
            raise ReplayMiss(request.digest) from None


class RecordingLlmClient:
    """Wraps a live client and captures its transcript for later replay.

    Repeated digests are served from the captured record instead of re-asking,
    which both saves calls and guarantees the transcript stays one-record-per-
    digest.
    """

    def __init__(self, inner, transcript_path: str | Path):
        self._inner = inner
        self._path = Path(transcript_path)
        self._records: dict[str, dict] = {}

    def complete(self, request: LlmRequest) -> str:
        if request.digest in self._records:
            return self._records[request.digest]["response"]
        response = self._inner.complete(request)
        self._records[request.digest] = {
            "digest": request.digest,
            "prompt": request.prompt,
            "response": response,
            "template_version": request.template_version,
        }
        return response

    def flush(self) -> None:
        lines = [
            json.dumps(self._records[d], ensure_ascii=False, sort_keys=True)
            for d in sorted(self._records)
        ]
        self._path.write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.flush()
        return False


# --- HTTP -------------------------------------------------------------------


class HttpLlmClient:
    """Chat-completions client with bounded exponential backoff.

    Speaks the common ``messages`` wire shape; endpoint, key, and model come
    from configuration so any compatible provider works.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        model: str = "",
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        min_interval: float = 0.0,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.min_interval = min_interval
        self._last_call = 0.0

    def complete(self, request: LlmRequest) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": 0,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if self.min_interval > 0:
                wait = self._last_call + self.min_interval - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
            try:
                self._last_call = time.monotonic()
                resp = requests.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
                if resp.status_code in (429, 500, 502, 503, 504):
                    raise requests.HTTPError(f"status {resp.status_code}")
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, OSError, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff_base * (2**attempt))
        raise ClientError(f"LLM endpoint failed after {self.max_retries + 1} attempts: {last_error}")


class HttpClassifierClient:
    """Client for the relation classifier service's ``POST /classify``."""

    def __init__(self, endpoint: str, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def classify(self, segment_text: str, head_surface: str) -> dict[str, float]:
        import requests

        try:
            resp = requests.post(
                f"{self.endpoint}/classify",
                json={"text": segment_text, "head": head_surface},
                timeout=self.timeout,
            )
            if resp.status_code != 200:
                raise ClassifierUnavailable(
                    f"classifier endpoint returned status {resp.status_code}"
                )
            scores = resp.json()["scores"]
            return {str(k): float(v) for k, v in scores.items()}
        except ClassifierUnavailable:
            raise
        except (requests.RequestException, OSError, KeyError, TypeError, ValueError) as exc:
            raise ClassifierUnavailable(str(exc)) from exc


# --- rule fallback ----------------------------------------------------------

#: Cue word → relation label.  First occurrence in the segment wins; ties go
#: to the longer cue, then the lexicographically smaller label.
RULE_TRIGGERS: tuple[tuple[str, str], ...] = (
    ("发布", "publish"),
    ("位于", "locate"),
    ("禁止", "isProhibited"),
    ("有权", "hasRight"),
    ("应当", "duty"),
    ("负责", "duty"),
    ("是指", "define"),
    ("系指", "define"),
    ("引用", "cite"),
    ("任职", "workFor"),
    ("属于", "belongTo"),
    ("包括", "contain"),
    ("包含", "contain"),
    ("分类", "classifyTo"),
)

_HIT_SCORE = 0.875
_MISS_SCORE = 0.2


class RuleClassifier:
    """Deterministic keyword-trigger classifier over the 15 labels.

    A matched cue puts most of the mass on its label; a segment with no cue
    scores ``relevant`` below any sensible abstention threshold, so the
    pipeline abstains rather than invent a relation.
    """

    def __init__(self, schema: OntologySchema | None = None):
        self.labels = ALL_RELATION_LABELS

    def classify(self, segment_text: str, head_surface: str) -> dict[str, float]:
        hits = []
        for cue, label in RULE_TRIGGERS:
            pos = segment_text.find(cue)
            if pos >= 0:
                hits.append((pos, -len(cue), label, cue))
        if hits:
            winner = min(hits)[2]
            top = _HIT_SCORE
        else:
            winner = "relevant"
            top = _MISS_SCORE
        rest = (1.0 - top) / (len(self.labels) - 1)
        return {label: (top if label == winner else rest) for label in self.labels}
