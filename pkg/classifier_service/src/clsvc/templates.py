"""Cloze templates: segment and head slots around exactly one mask position."""

from __future__ import annotations

from dataclasses import dataclass

MASK = "[MASK]"


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    version: str
    text: str

    def __post_init__(self):
        if self.text.count(MASK) != 1:
            raise ValueError(
                f"template {self.name!r} must contain exactly one {MASK}, "
                f"found {self.text.count(MASK)}"
            )
        for slot in ("{s}", "{h}"):
            if slot not in self.text:
                raise ValueError(f"template {self.name!r} is missing the {slot} slot")

    def fill(self, s: str, h: str) -> tuple[list[str], int]:
        """Character tokens of the filled template, plus the mask index."""
        if MASK in s or MASK in h:
            raise ValueError("input text may not contain the mask marker")
        filled = self.text.replace("{s}", s).replace("{h}", h)
        prefix, suffix = filled.split(MASK)
        tokens = list(prefix) + [MASK] + list(suffix)
        return tokens, len(prefix)


DEFAULT_TEMPLATE = PromptTemplate(
    name="cloze-zh",
    version="1",
    text="{s} 其中，'{h}'涉及的关系类型是[MASK]。",
)

#: Registered alternatives, selectable by name.
TEMPLATES = {
    DEFAULT_TEMPLATE.name: DEFAULT_TEMPLATE,
    "cloze-zh-short": PromptTemplate(
        name="cloze-zh-short",
        version="1",
        text="{s}'{h}'的关系是[MASK]。",
    ),
}


def get_template(name: str) -> PromptTemplate:
    try:
        return TEMPLATES[name]
    except KeyError:
        raise KeyError(f"no template named {name!r}; known: {sorted(TEMPLATES)}") from None
