"""Label-to-word mapping filled into the mask slot."""

from __future__ import annotations

from dataclasses import dataclass

from .examples import LABELS


class UntokenizableLabelWord(Exception):
    def __init__(self, label: str, word: str, bad_chars: set[str]):
        self.label = label
        self.word = word
        self.bad_chars = bad_chars
        super().__init__(
            f"label word {word!r} for {label!r} contains characters "
            f"outside the model vocabulary: {sorted(bad_chars)}"
        )


@dataclass(frozen=True)
class Verbalizer:
    word_of: dict[str, str]

    def __post_init__(self):
        missing = set(LABELS) - set(self.word_of)
        if missing:
            raise ValueError(f"verbalizer is missing labels: {sorted(missing)}")
        if any(not w for w in self.word_of.values()):
            raise ValueError("label words must be non-empty")
        words = list(self.word_of.values())
        if len(set(words)) != len(words):
            raise ValueError("verbalizer must be injective: duplicate label words")

    def word(self, label: str) -> str:
        return self.word_of[label]


def default_verbalizer() -> Verbalizer:
    # the label word is the relation category name itself
    return Verbalizer({label: label for label in LABELS})
