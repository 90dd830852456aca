"""Versioned prompt templates and replay digests.

Templates live in text files so wording can change without touching code.
The replay digest covers the template name, its declared version, and the
slot values — not the rendered text — so cosmetic prompt edits keep existing
transcripts valid, while a version bump deliberately invalidates them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

from ..ontology import OntologySchema

_SEP = "\x1f"


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    version: str
    body: str

    def render(self, **slots: str) -> str:
        return self.body.format(**slots)

    def digest(self, **slots: str) -> str:
        parts = [self.name, self.version]
        for key in sorted(slots):
            parts.append(f"{key}={slots[key]}")
        return hashlib.sha256(_SEP.join(parts).encode("utf-8")).hexdigest()[:24]


def load_template(name: str) -> PromptTemplate:
    text = resources.files("forpkg").joinpath(f"prompt_templates/{name}.txt").read_text("utf-8")
    first, _, body = text.partition("\n")
    prefix = "# version:"
    if not first.startswith(prefix):
        raise ValueError(f"template {name} is missing its version header")
    return PromptTemplate(name=name, version=first[len(prefix):].strip(), body=body)


def type_catalog(schema: OntologySchema) -> str:
    """The entity-type menu inserted into the head-recognition prompt."""
    lines = [
        f"{code}: {et.display_name}: {et.description}"
        for code, et in schema.entity_types.items()
    ]
    return "\n".join(lines)
