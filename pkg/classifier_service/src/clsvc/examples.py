"""Labeled (segment, head, label) records and their line format.

One JSON object per line with keys ``s``, ``h``, ``y``; the head surface must
occur in the segment and the label must be one of the 15 known relation
labels.  The extraction pipeline reads and writes the same shape, so training
files can be shared between the two codebases.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

#: The 15 relation labels, forward codes first, reverse-reading labels last.
LABELS = (
    "publish", "locate", "belongTo", "workFor", "duty", "isProhibited",
    "hasRight", "define", "relevant", "classifyTo", "cite", "contain",
    "isPublished", "employ", "isCited",
)


class ExampleFormatError(Exception):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


@dataclass(frozen=True)
class ClassifierExample:
    s: str
    h: str
    y: str


def load_examples(path: str | Path) -> list[ClassifierExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExampleFormatError(line_no, f"invalid JSON: {exc}") from None
            if not isinstance(record, dict) or set(record) != {"s", "h", "y"}:
                raise ExampleFormatError(line_no, "record must have exactly the keys s, h, y")
            s, h, y = record["s"], record["h"], record["y"]
            if not (isinstance(s, str) and isinstance(h, str) and isinstance(y, str)):
                raise ExampleFormatError(line_no, "s, h and y must all be strings")
            if not h or h not in s:
                raise ExampleFormatError(line_no, f"head {h!r} does not occur in the segment")
            if y not in LABELS:
                raise ExampleFormatError(line_no, f"unknown label {y!r}")
            examples.append(ClassifierExample(s, h, y))
    return examples


def dump_examples(examples: list[ClassifierExample], path: str | Path) -> None:
    lines = [
        json.dumps({"s": e.s, "h": e.h, "y": e.y}, ensure_ascii=False)
        for e in examples
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
