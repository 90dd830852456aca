"""Character-level CBOW masked language model, trained from scratch.

The serving contract is agnostic about the underlying checkpoint, so the
default base model is a small self-contained one: context characters around
the mask are mean-pooled through an embedding table and projected onto the
character vocabulary.  That keeps the whole train/classify cycle offline and
fast while behaving like any masked LM for the purposes of the contract:
it fills one mask, scores multi-token label words by mean log-probability,
and is exactly reproducible from a seed.

Vocabulary = a fixed ASCII baseline plus every character of the training
text.  A label word using characters outside that set cannot be scored and
is rejected up front.
"""

from __future__ import annotations

import json
import string
from pathlib import Path

import numpy as np

from .templates import MASK
from .verbalizer import UntokenizableLabelWord, Verbalizer

UNK = "[UNK]"

#: characters every model knows regardless of the training corpus
_BASE_CHARS = string.ascii_letters + string.digits + " _"


class CharVocab:
    def __init__(self, tokens: tuple[str, ...]):
        if tokens[0] != UNK:
            raise ValueError(f"vocabulary must start with {UNK}")
        self.tokens = tokens
        self.index = {tok: i for i, tok in enumerate(tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_texts(cls, texts: list[str]) -> "CharVocab":
        chars = set(_BASE_CHARS)
        for text in texts:
            chars.update(text)
        chars.discard(UNK)
        # codepoint order keeps the id assignment reproducible
        return cls((UNK,) + tuple(sorted(chars)))

    def encode(self, chars: list[str]) -> np.ndarray:
        return np.array([self.index.get(c, 0) for c in chars], dtype=np.int64)

    def encode_word(self, word: str) -> np.ndarray:
        """ids for a label word; every character must be in-vocabulary."""
        bad = {c for c in word if c not in self.index}
        if bad:
            raise KeyError(f"characters not in vocabulary: {sorted(bad)}")
        return np.array([self.index[c] for c in word], dtype=np.int64)


def check_verbalizer(vocab: CharVocab, verbalizer: Verbalizer) -> None:
    for label, word in verbalizer.word_of.items():
        bad = {c for c in word if c not in vocab.index}
        if bad:
            raise UntokenizableLabelWord(label, word, bad)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


class CharCbowModel:
    """Mean-pooled context embeddings -> vocabulary logits at the mask."""

    base_model_id = "char-cbow-v1"

    # the default window is wide enough to span a whole rendered prompt, so
    # the pooled context reaches the segment text on the far side of the mask
    def __init__(self, vocab: CharVocab, dim: int = 96, window: int = 48, seed: int = 0):
        if dim < 4:
            raise ValueError(f"dim must be >= 4, got {dim}")
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.vocab = vocab
        self.dim = dim
        self.window = window
        rng = np.random.default_rng(seed)
        # unit-scale embeddings keep the mean-pooled context at O(1) norm, so
        # projection updates move the logits at a usable rate from epoch one
        self.emb = rng.normal(0.0, 1.0, size=(len(vocab), dim))
        self.proj = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, len(vocab)))
        self.bias = np.zeros(len(vocab))

    # --- forward ------------------------------------------------------------

    def _context_ids(self, tokens: list[str], mask_index: int) -> np.ndarray:
        if tokens[mask_index] != MASK:
            raise ValueError(f"token {mask_index} is {tokens[mask_index]!r}, not the mask")
        left = tokens[max(0, mask_index - self.window) : mask_index]
        right = tokens[mask_index + 1 : mask_index + 1 + self.window]
        context = [t for t in left + right if t != MASK]
        if not context:
            context = [UNK]
        return self.vocab.encode(context)

    def mask_log_probs(self, tokens: list[str], mask_index: int) -> np.ndarray:
        ctx = self._context_ids(tokens, mask_index)
        hidden = self.emb[ctx].mean(axis=0)
        return _log_softmax(hidden @ self.proj + self.bias)

    def score_labels(
        self, tokens: list[str], mask_index: int, verbalizer: Verbalizer
    ) -> dict[str, float]:
        """Mean log-probability of each label word's characters at the mask."""
        log_probs = self.mask_log_probs(tokens, mask_index)
        scores = {}
        for label, word in verbalizer.word_of.items():
            bad = {c for c in word if c not in self.vocab.index}
            if bad:
                raise UntokenizableLabelWord(label, word, bad)
            scores[label] = float(log_probs[self.vocab.encode_word(word)].mean())
        return scores

    # --- training -----------------------------------------------------------

    def loss_and_grads(self, tokens: list[str], mask_index: int, target_ids: np.ndarray):
        """NLL of the mean target log-probability, with parameter gradients.

        Returns (nll, grads) where grads maps parameter name to either a dense
        array (proj, bias) or a (row ids, row grads) pair for the embedding.
        """
        ctx = self._context_ids(tokens, mask_index)
        hidden = self.emb[ctx].mean(axis=0)
        logits = hidden @ self.proj + self.bias
        log_probs = _log_softmax(logits)
        nll = float(-log_probs[target_ids].mean())

        probs = np.exp(log_probs)
        d_logits = probs.copy()
        np.add.at(d_logits, target_ids, -1.0 / len(target_ids))
        d_proj = np.outer(hidden, d_logits)
        d_hidden = self.proj @ d_logits
        rows, counts = np.unique(ctx, return_counts=True)
        d_rows = np.outer(counts / len(ctx), d_hidden)
        return nll, {"proj": d_proj, "bias": d_logits, "emb": (rows, d_rows)}

    def apply_grads(self, grads: dict, lr: float) -> None:
        self.proj -= lr * grads["proj"]
        self.bias -= lr * grads["bias"]
        rows, d_rows = grads["emb"]
        self.emb[rows] -= lr * d_rows

    # --- persistence --------------------------------------------------------

    def save(self, path: str | Path, meta: dict | None = None) -> None:
        payload = {
            "tokens": list(self.vocab.tokens),
            "dim": self.dim,
            "window": self.window,
            "base_model_id": self.base_model_id,
            **(meta or {}),
        }
        # write through a handle so the name is taken literally (np.savez
        # appends .npz to bare paths, which breaks tmp-file renames)
        with open(path, "wb") as fh:
            np.savez(
                fh,
                emb=self.emb,
                proj=self.proj,
                bias=self.bias,
                meta=np.array(json.dumps(payload, ensure_ascii=False)),
            )

    @classmethod
    def load(cls, path: str | Path) -> tuple["CharCbowModel", dict]:
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data["meta"]))
        model = cls.__new__(cls)
        model.vocab = CharVocab(tuple(meta["tokens"]))
        model.dim = meta["dim"]
        model.window = meta["window"]
        model.emb = data["emb"]
        model.proj = data["proj"]
        model.bias = data["bias"]
        return model, meta
