"""Deferred sentence classification.

Instead of computing the sentence vector ``phi`` and then comparing it with
each class vector ``v``, split the derivation tree into two layers.  The
query is the tensor product of the top-layer words; each candidate is the
tensor product of the bottom-layer words and ``v``, with wires permuted so
that a flat inner product performs exactly the cups of the derivation plus
the cup joining the head's sentence wire to ``v``.  Then
``<query|candidate_v> = <phi|v>`` and classification becomes a single
closest-vector search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .closest_vector import TIE_TOL, ClosestVectorInstance, NNResult, nn_direct, run_backend
from .pregroup import (CupMatching, DerivationTree, Layer, Layering, Lexicon, StructureError,
                       build_tree, reduce, two_coloring)
from .tensor import MeaningTensor, ProductVector, ShapeError, evaluate_sentence, normalize


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    tensors: tuple[MeaningTensor, ...]
    matching: CupMatching
    tree: DerivationTree | None = None

    def __post_init__(self):
        if len(self.tokens) != len(self.tensors) or len(self.tensors) != self.matching.n_words:
            raise ShapeError("tokens, tensors and matching disagree on the word count")

    def derivation(self) -> DerivationTree:
        return self.tree if self.tree is not None else build_tree(len(self.tokens), self.matching)

    @classmethod
    def parse(cls, text: str, lexicon: Lexicon, store: Mapping[str, MeaningTensor]) -> "Sentence":
        tokens = tuple(text.split())
        matching = reduce(lexicon.types_of(tokens))
        missing = [t for t in tokens if t not in store]
        if missing:
            raise KeyError(f"no tensor stored for {', '.join(missing)}")
        return cls(tokens, tuple(store[t] for t in tokens), matching)


@dataclass(frozen=True)
class ClassSet:
    label: str
    members: tuple[MeaningTensor, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"class {self.label!r} has no members")
        object.__setattr__(self, "members", tuple(self.members))
        for v in self.members:
            if v.order != 1 or not v.is_normalized():
                raise ValueError(f"class {self.label!r}: members must be normalized vectors")


@dataclass
class DeferredInstance:
    base: ClosestVectorInstance
    wire_permutation: tuple[int, ...]
    top: tuple[int, ...]
    bottom: tuple[int, ...]
    tokens: tuple[str, ...] = ()
    layering: Layering | None = None
    labels: tuple = ()

    def inner(self, i: int) -> float:
        """``<query|candidate_i>`` by contracting the two products."""
        return self.base.s.dot(self.base.U[i])

    def flat_inner(self, i: int) -> float:
        """Same value, summed entry by entry over the flattened query support."""
        idx, vals = self.base.s.support()
        return float(np.dot(vals, self.base.U[i].entries(idx)))


def build_deferred(words: Sequence[MeaningTensor], matching: CupMatching, layering: Layering,
                   classifiers: Sequence[MeaningTensor], *, tokens: Sequence[str] = (),
                   labels: Sequence = (), check_normalized: bool = True) -> DeferredInstance:
    if len(words) != matching.n_words:
        raise ShapeError(f"{len(words)} tensors for {matching.n_words} words")
    for k, (w, n) in enumerate(zip(words, matching.word_lengths)):
        if w.order != n:
            raise ShapeError(f"word {k}: tensor has {w.order} wires, type has {n}")
    if len(matching.residual) != 1:
        raise StructureError("deferral needs exactly one open wire")
    where = matching.wire_of_index()
    partner = {}
    for i, j in matching.pairs:
        partner[i] = j
        partner[j] = i
    residual = matching.residual[0]
    head, head_wire = where[residual]
    if layering.layer.get(head) is not Layer.TOP:
        raise StructureError("head word must be on the top layer")
    s_dim = words[head].wires[head_wire]
    for v in classifiers:
        if v.wires != (s_dim,):
            raise ShapeError(f"classifier has wires {v.wires}, sentence wire is ({s_dim},)")

    top = tuple(layering.top)
    bottom = tuple(layering.bottom)
    starts = np.concatenate([[0], np.cumsum(matching.word_lengths)]).astype(int)
    # bottom factors in sentence order; the classifier sits where the head's S wire is
    slots = sorted([(int(starts[w]), w) for w in bottom] + [(residual, None)])
    factor_of = {w: f for f, (_, w) in enumerate(slots)}
    offsets, pos = {}, 0
    for _, w in slots:
        offsets[w] = pos
        pos += 1 if w is None else words[w].order

    order, perm = [], []
    for w in top:
        for k in range(words[w].order):
            g = int(starts[w]) + k
            if g == residual:
                order.append((factor_of[None], 0))
                perm.append(offsets[None])
                continue
            pw, pk = where[partner[g]]
            if layering.layer[pw] is not Layer.BOTTOM:
                raise StructureError(f"cup between words {w} and {pw} stays on the top layer")
            order.append((factor_of[pw], pk))
            perm.append(offsets[pw] + pk)

    s = ProductVector([words[w] for w in top], label="query")
    U = [ProductVector([v if w is None else words[w] for _, w in slots], order, label=v.label)
         for v in classifiers]
    base = ClosestVectorInstance(s, U, check_normalized=check_normalized)
    return DeferredInstance(base, tuple(perm), top, bottom, tuple(tokens), layering, tuple(labels))


def _candidates(class_sets: Sequence[ClassSet]):
    vecs, owner = [], []
    for c, cs in enumerate(class_sets):
        for v in cs.members:
            vecs.append(v)
            owner.append(c)
    return vecs, owner


def classify_direct(sentence: Sentence, class_sets: Sequence[ClassSet],
                    tie_tol: float = TIE_TOL) -> tuple[str, float]:
    """Evaluate the sentence vector, then scan every class member for the closest."""
    phi = normalize(evaluate_sentence(sentence.tensors, sentence.matching))
    vecs, owner = _candidates(class_sets)
    res = nn_direct(ClosestVectorInstance(phi, vecs), tie_tol)
    return class_sets[owner[res.argmax_index]].label, float(res.estimates[res.argmax_index])


def classify_deferred(sentence: Sentence, class_sets: Sequence[ClassSet], backend: str = "direct",
                      eps: float = 0.05, delta: float = 0.1, seed=None, **backend_kw) -> tuple[str, NNResult]:
    tree = sentence.derivation()
    layering = two_coloring(tree)
    vecs, owner = _candidates(class_sets)
    inst = build_deferred(sentence.tensors, sentence.matching, layering, vecs,
                          tokens=sentence.tokens, labels=[class_sets[o].label for o in owner],
                          check_normalized=backend != "direct")
    res = run_backend(backend, inst.base, eps, delta, seed, **backend_kw)
    res.params["deferred_d"] = inst.base.stats.d
    res.params["deferred_r_max"] = inst.base.stats.r_max
    return class_sets[owner[res.argmax_index]].label, res


def noise_perturb(v: MeaningTensor, eps: float, seed=None) -> MeaningTensor:
    """Add a random perturbation of norm ``eps`` and renormalize.

    The perturbation lives on the stored support plus ``round(eps * d)``
    fresh coordinates, ``d`` being the support size.
    """
    if eps == 0:
        return v
    rng = np.random.default_rng(seed)
    fresh_n = min(int(round(eps * v.nnz)), v.size - v.nnz)
    fresh = np.zeros(0, dtype=np.int64)
    if fresh_n > 0:
        mask = np.ones(v.size, dtype=bool) if v.size <= 1 << 24 else None
        if mask is not None:
            mask[v.idx] = False
            fresh = rng.choice(np.flatnonzero(mask), size=fresh_n, replace=False)
        else:
            picked = set()
            stored = set(v.idx.tolist())
            while len(picked) < fresh_n:
                c = int(rng.integers(v.size))
                if c not in stored:
                    picked.add(c)
            fresh = np.array(sorted(picked), dtype=np.int64)
    support = np.concatenate([v.idx, fresh])
    direction = rng.normal(size=support.size)
    direction *= eps / math.sqrt(float(direction @ direction))
    base = np.concatenate([v.vals, np.zeros(fresh.size)])
    return normalize(MeaningTensor(v.wires, support, base + direction, v.label))
