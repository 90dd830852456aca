import pytest

from clsvc.examples import LABELS
from clsvc.verbalizer import Verbalizer, default_verbalizer


def test_default_maps_each_label_to_its_own_name():
    v = default_verbalizer()
    assert all(v.word(label) == label for label in LABELS)


def test_missing_label_rejected():
    words = {label: label for label in LABELS if label != "cite"}
    with pytest.raises(ValueError, match="cite"):
        Verbalizer(words)


def test_duplicate_words_rejected():
    words = {label: label for label in LABELS}
    words["cite"] = "publish"
    with pytest.raises(ValueError, match="injective"):
        Verbalizer(words)


def test_empty_word_rejected():
    words = {label: label for label in LABELS}
    words["duty"] = ""
    with pytest.raises(ValueError, match="non-empty"):
        Verbalizer(words)
