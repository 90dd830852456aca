"""Cloze fine-tuning loop.

Each example is rendered through the prompt template, the mask position is
scored against the verbalizer word of the true label, and parameters are
updated per example by SGD on that negative log-likelihood.  The per-epoch
mean of the per-example losses is recorded as the loss trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .examples import LABELS, ClassifierExample
from .model import CharCbowModel, CharVocab, check_verbalizer
from .templates import DEFAULT_TEMPLATE, PromptTemplate
from .verbalizer import Verbalizer, default_verbalizer


class MissingLabel(ValueError):
    """A relation category has no training examples at all."""

    def __init__(self, labels: list[str]):
        self.labels = labels
        super().__init__(f"no training examples for: {', '.join(labels)}")


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 5
    learning_rate: float = 2.5
    seed: int = 0
    base_model_id: str = CharCbowModel.base_model_id

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.base_model_id != CharCbowModel.base_model_id:
            raise ValueError(f"unknown base model {self.base_model_id!r}")


@dataclass
class TrainedClassifier:
    model: CharCbowModel
    template: PromptTemplate
    verbalizer: Verbalizer
    loss_per_epoch: list[float]

    def scores(self, s: str, h: str) -> dict[str, float]:
        tokens, mask_index = self.template.fill(s, h)
        return self.model.score_labels(tokens, mask_index, self.verbalizer)

    def distribution(self, s: str, h: str) -> dict[str, float]:
        """Normalized probability over labels: softmax of the word scores."""
        scores = self.scores(s, h)
        values = np.array([scores[label] for label in LABELS])
        values = np.exp(values - values.max())
        values /= values.sum()
        return {label: float(p) for label, p in zip(LABELS, values)}

    def predict(self, s: str, h: str) -> str:
        scores = self.scores(s, h)
        return max(LABELS, key=lambda label: scores[label])


def train(
    examples: list[ClassifierExample],
    config: TrainingConfig = TrainingConfig(),
    template: PromptTemplate = DEFAULT_TEMPLATE,
    verbalizer: Verbalizer | None = None,
) -> TrainedClassifier:
    if not examples:
        raise ValueError("no training examples")
    missing = [label for label in LABELS if not any(ex.y == label for ex in examples)]
    if missing:
        raise MissingLabel(missing)
    verbalizer = verbalizer or default_verbalizer()

    # the vocabulary is fixed by the training text plus the ASCII baseline;
    # a label word that needs characters outside it cannot be a target
    vocab = CharVocab.from_texts([ex.s for ex in examples] + [template.text])
    check_verbalizer(vocab, verbalizer)
    model = CharCbowModel(vocab, seed=config.seed)

    rendered = []
    for ex in examples:
        tokens, mask_index = template.fill(ex.s, ex.h)
        rendered.append((tokens, mask_index, vocab.encode_word(verbalizer.word(ex.y))))

    rng = np.random.default_rng(config.seed)
    order = np.arange(len(rendered))
    losses = []
    for _ in range(config.epochs):
        rng.shuffle(order)
        total = 0.0
        for i in order:
            tokens, mask_index, target_ids = rendered[i]
            nll, grads = model.loss_and_grads(tokens, mask_index, target_ids)
            model.apply_grads(grads, config.learning_rate)
            total += nll
        losses.append(total / len(rendered))
    return TrainedClassifier(model, template, verbalizer, losses)


def save_classifier(classifier: TrainedClassifier, path, model_version: str) -> None:
    classifier.model.save(
        path,
        meta={
            "model_version": model_version,
            "template": {
                "name": classifier.template.name,
                "version": classifier.template.version,
                "text": classifier.template.text,
            },
            "verbalizer": dict(classifier.verbalizer.word_of),
            "loss_per_epoch": classifier.loss_per_epoch,
        },
    )


def load_classifier(path) -> tuple[TrainedClassifier, str]:
    model, meta = CharCbowModel.load(path)
    template = PromptTemplate(**meta["template"])
    verbalizer = Verbalizer(meta["verbalizer"])
    classifier = TrainedClassifier(model, template, verbalizer, list(meta["loss_per_epoch"]))
    return classifier, meta["model_version"]
