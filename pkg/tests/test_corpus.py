import logging
from collections import Counter

import numpy as np
import pytest

from qcsc.corpus import (CorpusConfig, CorpusError, UnknownWordError, build_basis, build_relational_tensor,
                         build_word_vector, context_counts, ingest, tokenize)
from qcsc.pregroup import parse_lexicon
from qcsc.tensor import MeaningTensor

TEXT = """Kids play football in the park. Kids play games at school!
Adults play football on Sunday; the kids watch. Children play chess,
while adults read books. John read a book. Mary read the paper."""


def brute_counts(tokens, word, basis_words, window):
    c = Counter()
    for p, t in enumerate(tokens):
        if t != word:
            continue
        for q in range(max(0, p - window), min(len(tokens), p + window + 1)):
            if q != p and tokens[q] in basis_words:
                c[tokens[q]] += 1
    return np.array([c[b] for b in basis_words], dtype=float)


def test_tokenize():
    assert tokenize("Kids' play-football, 2 times!") == ["kids", "play", "football", "2", "times"]
    assert tokenize("snake_case") == ["snake", "case"]


def test_basis_is_frequency_then_alphabetical():
    b = build_basis("b a c a b d".split(), 3)
    assert b.words == ("a", "b", "c")
    with pytest.raises(CorpusError):
        build_basis(["a"], 2)


@pytest.mark.parametrize("window", [1, 2, 5])
def test_counts_match_brute_force(window):
    tokens = tokenize(TEXT)
    basis = build_basis(tokens, 10)
    got = context_counts(tokens, ["kids", "play", "read"], basis, window)
    for w in ("kids", "play", "read"):
        np.testing.assert_array_equal(got[w], brute_counts(tokens, w, basis.words, window))


def test_word_vector_is_normalized_count():
    tokens = tokenize(TEXT)
    cfg = CorpusConfig(window=2, K=10)
    basis = build_basis(tokens, 10)
    v = build_word_vector(tokens, "football", basis, cfg)
    want = brute_counts(tokens, "football", basis.words, 2)
    np.testing.assert_allclose(v.to_dense(), want / np.linalg.norm(want), atol=1e-15)
    with pytest.raises(UnknownWordError):
        build_word_vector(tokens, "cricket", basis, cfg)


def test_relational_tensor_formula():
    s = MeaningTensor.from_dense([1.0, 0.0])
    o = MeaningTensor.from_dense([0.0, 1.0])
    t = build_relational_tensor("likes", [(s, o)])
    mid = np.array([1.0, 1.0]) / np.sqrt(2)
    want = np.einsum("i,j,k->ijk", [1.0, 0.0], mid, [0.0, 1.0])
    np.testing.assert_allclose(t.to_dense(), want / np.linalg.norm(want), atol=1e-15)
    assert t.label == "likes"
    with pytest.raises(CorpusError):
        build_relational_tensor("x", [])


def test_ingest_with_lexicon(caplog):
    lex = parse_lexicon("kids\tn\nfootball\tn\nchess\tn\ngames\tn\nadults\tn\nchildren\tn\n"
                        "play\tn^r s n^l\nwatch\tn^r s\nred\tn n^l\n")
    with caplog.at_level(logging.WARNING):
        store = ingest(TEXT, CorpusConfig(window=3, K=12), lex)
    assert store["kids"].wires == (12,)
    assert store["play"].wires == (12, 12, 12) and store["play"].is_normalized()
    assert store["watch"].wires == (12, 12)
    assert "red" not in store and "red" in caplog.text
    assert all(t.is_normalized() for t in store.values())


def test_ingest_is_deterministic():
    a = ingest(TEXT, CorpusConfig(window=2, K=8))
    b = ingest(TEXT, CorpusConfig(window=2, K=8))
    assert list(a) == list(b) and all(a[k].equals(b[k]) for k in a)
