"""Distributional word vectors from raw text, plus relational tensors.

Vectors count how often each context (basis) word falls within a symmetric
token window of the target word, then normalize.
"""
from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .pregroup import Lexicon, parse_type
from .tensor import MeaningTensor, NormalizationError, ShapeError, normalize, tensor_product

log = logging.getLogger(__name__)

_WORD = re.compile(r"[^\W_]+")

NOUN = parse_type("n")
ADJECTIVE = parse_type("n n^l")
INTRANSITIVE = parse_type("n^r s")
TRANSITIVE = parse_type("n^r s n^l")


class CorpusError(ValueError):
    pass


class UnknownWordError(CorpusError, KeyError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _WORD.findall(text.lower())


@dataclass(frozen=True)
class CorpusConfig:
    window: int = 5
    K: int = 2000
    min_count: int = 1

    def __post_init__(self):
        if self.window < 1:
            raise CorpusError("window must be >= 1")
        if self.K < 2:
            raise CorpusError("basis size must be >= 2")


@dataclass(frozen=True)
class ContextBasis:
    words: tuple[str, ...]
    index: dict[str, int] = field(compare=False, repr=False)

    @classmethod
    def of(cls, words: Sequence[str]) -> "ContextBasis":
        words = tuple(words)
        if len(set(words)) != len(words):
            raise CorpusError("basis tokens must be unique")
        return cls(words, {w: i for i, w in enumerate(words)})

    def __len__(self):
        return len(self.words)


def build_basis(tokens: Iterable[str], K: int) -> ContextBasis:
    """The ``K`` most frequent tokens, ties broken alphabetically."""
    counts = Counter(tokens)
    if len(counts) < K:
        raise CorpusError(f"corpus has {len(counts)} distinct tokens, basis needs {K}")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ContextBasis.of([w for w, _ in ranked[:K]])


def context_counts(tokens: Sequence[str], targets: Iterable[str], basis: ContextBasis,
                   window: int) -> dict[str, np.ndarray]:
    """Raw window counts for each target word (no normalization)."""
    targets = set(targets)
    out = {w: np.zeros(len(basis), dtype=np.float64) for w in targets}
    n = len(tokens)
    b_ids = np.array([basis.index.get(t, -1) for t in tokens], dtype=np.int64)
    for p, tok in enumerate(tokens):
        if tok not in targets:
            continue
        lo, hi = max(0, p - window), min(n, p + window + 1)
        ids = np.concatenate([b_ids[lo:p], b_ids[p + 1:hi]])
        ids = ids[ids >= 0]
        np.add.at(out[tok], ids, 1.0)
    return out


def build_word_vector(tokens: Sequence[str], word: str, basis: ContextBasis,
                      cfg: CorpusConfig) -> MeaningTensor:
    if word not in tokens:
        raise UnknownWordError(word)
    counts = context_counts(tokens, [word], basis, cfg.window)[word]
    try:
        return normalize(MeaningTensor.from_dense(counts, label=word))
    except NormalizationError:
        raise NormalizationError(f"no context words near {word!r}") from None


def build_relational_tensor(verb: str, pairs: Sequence[tuple[MeaningTensor, MeaningTensor]]) -> MeaningTensor:
    """Sum of ``subj (x) mid (x) obj`` over argument pairs, normalized.

    ``mid`` is the normalized sum of subject and object and fills the
    sentence wire.
    """
    if not pairs:
        raise CorpusError(f"no argument pairs for {verb!r}")
    n = pairs[0][0].wires
    acc = None
    for subj, obj in pairs:
        if subj.wires != n or obj.wires != n or len(n) != 1:
            raise ShapeError("subject and object vectors must share one dimension")
        mid = normalize(MeaningTensor.from_dense(subj.to_dense() + obj.to_dense()))
        term = tensor_product([subj, mid, obj])
        acc = term if acc is None else MeaningTensor(
            term.wires, np.concatenate([acc.idx, term.idx]), np.concatenate([acc.vals, term.vals]))
    return normalize(acc).relabel(verb)


def _self_outer(vectors: Sequence[MeaningTensor], label: str) -> MeaningTensor:
    acc = None
    for v in vectors:
        term = tensor_product([v, v])
        acc = term if acc is None else MeaningTensor(
            term.wires, np.concatenate([acc.idx, term.idx]), np.concatenate([acc.vals, term.vals]))
    return normalize(acc).relabel(label)


def _nearest(tokens, p, step, window, nouns):
    for k in range(1, window + 1):
        q = p + step * k
        if not 0 <= q < len(tokens):
            return None
        if tokens[q] in nouns:
            return tokens[q]
    return None


def ingest(text: str, cfg: CorpusConfig, lexicon: Lexicon | None = None) -> dict[str, MeaningTensor]:
    """Build a store's worth of tensors from one corpus.

    Every word with at least ``min_count`` occurrences gets a vector.  With a
    lexicon, words typed ``n^r s n^l`` also get a relational tensor from the
    nearest lexicon nouns on either side; ``n n^l`` words get the sum of
    ``o (x) o`` over following nouns and ``n^r s`` words the sum of
    ``s (x) s`` over preceding nouns.
    """
    tokens = tokenize(text)
    basis = build_basis(tokens, cfg.K)
    freq = Counter(tokens)
    vocab = sorted(w for w, c in freq.items() if c >= cfg.min_count)
    counts = context_counts(tokens, vocab, basis, cfg.window)
    vectors = {}
    for w in vocab:
        if counts[w].any():
            vectors[w] = normalize(MeaningTensor.from_dense(counts[w], label=w))
    if lexicon is None:
        return vectors

    nouns = {w for w, t in lexicon.entries.items() if t == NOUN and w in vectors}
    out = dict(vectors)
    for word, ty in sorted(lexicon.entries.items()):
        if ty == NOUN:
            continue
        positions = [p for p, t in enumerate(tokens) if t == word]
        if ty == TRANSITIVE:
            pairs = []
            for p in positions:
                s = _nearest(tokens, p, -1, cfg.window, nouns)
                o = _nearest(tokens, p, +1, cfg.window, nouns)
                if s and o:
                    pairs.append((vectors[s], vectors[o]))
            if pairs:
                out[word] = build_relational_tensor(word, pairs)
                continue
        elif ty in (ADJECTIVE, INTRANSITIVE):
            step = 1 if ty == ADJECTIVE else -1
            args = [_nearest(tokens, p, step, cfg.window, nouns) for p in positions]
            args = [vectors[a] for a in args if a]
            if args:
                out[word] = _self_outer(args, word)
                continue
        out.pop(word, None)
        log.warning("no tensor built for %r (type %s)", word, ty)
    return out
