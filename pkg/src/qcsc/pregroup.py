"""Pregroup types, planar cup reduction, derivation trees and layering.

A simple type is a base (``n`` or ``s``) with an adjoint order ``z``:
``z < 0`` for left adjoints, ``z > 0`` for right adjoints.  Two adjacent
simple types ``(b, z)`` and ``(b, z + 1)`` contract to the unit, which
covers both ``x^l . x`` and ``x . x^r``.

>>> types = [parse_type(t) for t in ("n", "n^r s n^l", "n")]
>>> m = reduce(types)
>>> m.pairs, m.residual
(((0, 1), (3, 4)), (2,))
>>> tree = build_tree(3, m)
>>> tree.head, tree.edge_list()
(1, [(0, 1), (1, 2)])
"""
from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

MAX_ADJOINT = 2

_TOKEN = re.compile(r"^([ns])(?:\^([lr]+))?$")


class GrammarError(ValueError):
    """Base class for pregroup errors."""


class TypeParseError(GrammarError):
    pass


class UngrammaticalError(GrammarError):
    """No reduction to a single ``s`` exists; ``residual`` holds what was left."""

    def __init__(self, message, residual=()):
        super().__init__(message)
        self.residual = tuple(residual)


class StructureError(GrammarError):
    """Derivation graph is not a tree, or a layering is not proper."""


class Base(enum.Enum):
    N = "n"
    S = "s"


@dataclass(frozen=True, order=True)
class SimpleType:
    base: Base
    adjoint: int = 0

    def __post_init__(self):
        if abs(self.adjoint) > MAX_ADJOINT:
            raise TypeParseError(f"adjoint order {self.adjoint} exceeds {MAX_ADJOINT}")

    def contracts_with(self, right: "SimpleType") -> bool:
        return self.base == right.base and right.adjoint == self.adjoint + 1

    def __str__(self):
        if self.adjoint == 0:
            return self.base.value
        mark = "l" if self.adjoint < 0 else "r"
        return f"{self.base.value}^{mark * abs(self.adjoint)}"


@dataclass(frozen=True)
class PregroupType:
    simples: tuple[SimpleType, ...]

    def __post_init__(self):
        if not self.simples:
            raise TypeParseError("empty pregroup type")

    def __len__(self):
        return len(self.simples)

    def __iter__(self):
        return iter(self.simples)

    def __str__(self):
        return " ".join(str(t) for t in self.simples)


def parse_type(text: str) -> PregroupType:
    """Parse ``"n^r s n^l"`` style syntax.

    ``l``/``r`` mark left/right adjoints; a doubled letter is order 2.
    """
    simples = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if m is None:
            raise TypeParseError(f"malformed type token {tok!r}")
        base, marks = Base(m.group(1)), m.group(2) or ""
        if len(set(marks)) > 1:
            raise TypeParseError(f"mixed adjoint marks in token {tok!r}")
        if len(marks) > MAX_ADJOINT:
            raise TypeParseError(f"adjoint order > {MAX_ADJOINT} in token {tok!r}")
        z = -len(marks) if marks.startswith("l") else len(marks)
        simples.append(SimpleType(base, z))
    if not simples:
        raise TypeParseError("empty type string")
    return PregroupType(tuple(simples))


@dataclass(frozen=True)
class CupMatching:
    """Cups over the flattened simple-type sequence of a sentence.

    ``word_lengths[k]`` is the number of simple types (wires) of word ``k``;
    global index ``i`` belongs to the word whose span covers it.
    """

    pairs: tuple[tuple[int, int], ...]
    residual: tuple[int, ...]
    word_lengths: tuple[int, ...]
    simples: tuple[SimpleType, ...] | None = None

    @property
    def n_wires(self) -> int:
        return sum(self.word_lengths)

    @property
    def n_words(self) -> int:
        return len(self.word_lengths)

    def word_of_index(self) -> dict[int, int]:
        out, pos = {}, 0
        for w, n in enumerate(self.word_lengths):
            for _ in range(n):
                out[pos] = w
                pos += 1
        return out

    def wire_of_index(self) -> dict[int, tuple[int, int]]:
        """Global index -> (word, wire position within that word)."""
        out, pos = {}, 0
        for w, n in enumerate(self.word_lengths):
            for k in range(n):
                out[pos] = (w, k)
                pos += 1
        return out

    def is_planar(self) -> bool:
        for a, (i, j) in enumerate(self.pairs):
            for k, l in self.pairs[a + 1:]:
                if i < k < j < l or k < i < l < j:
                    return False
        return True

    def validate(self, planar: bool = True):
        """Check the pairs/residual partition every wire exactly once."""
        seen = []
        for i, j in self.pairs:
            if not i < j:
                raise StructureError(f"cup ({i}, {j}) is not ordered")
            seen += [i, j]
        seen += list(self.residual)
        if sorted(seen) != list(range(self.n_wires)):
            raise StructureError("cups and residual do not cover each wire exactly once")
        if planar and not self.is_planar():
            raise StructureError("cups cross")
        if self.simples is not None:
            for i, j in self.pairs:
                if not self.simples[i].contracts_with(self.simples[j]):
                    raise StructureError(f"cup ({i}, {j}) joins {self.simples[i]} and {self.simples[j]}")


def reduce(sentence_types: Sequence[PregroupType]) -> CupMatching:
    """Leftmost stack reduction of a typed sentence.

    Simple types are pushed in order; whenever the stack top contracts with
    the incoming type both are removed and the pair is recorded.  The
    sentence is grammatical iff the leftover is a single plain ``s``.
    """
    if not sentence_types:
        raise UngrammaticalError("empty sentence")
    flat = [t for ty in sentence_types for t in ty]
    stack: list[int] = []
    pairs = []
    for i, t in enumerate(flat):
        if stack and flat[stack[-1]].contracts_with(t):
            pairs.append((stack.pop(), i))
        else:
            stack.append(i)
    residual = tuple(stack)
    if len(residual) != 1 or flat[residual[0]] != SimpleType(Base.S, 0):
        left = " ".join(str(flat[i]) for i in residual) or "1"
        raise UngrammaticalError(f"ungrammatical: reduces to {left}", [flat[i] for i in residual])
    return CupMatching(
        pairs=tuple(sorted(pairs)),
        residual=residual,
        word_lengths=tuple(len(ty) for ty in sentence_types),
        simples=tuple(flat),
    )


@dataclass(frozen=True)
class DerivationTree:
    n_words: int
    edges: Mapping[tuple[int, int], tuple[tuple[int, int], ...]]
    head: int

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbours(self, w: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == w:
                out.append(b)
            elif b == w:
                out.append(a)
        return sorted(out)

    def depths(self) -> dict[int, int]:
        """Breadth-first distance of every word from the head."""
        depth = {self.head: 0}
        queue = deque([self.head])
        while queue:
            w = queue.popleft()
            for u in self.neighbours(w):
                if u not in depth:
                    depth[u] = depth[w] + 1
                    queue.append(u)
        return depth


def build_tree(n_words: int, matching: CupMatching,
               word_of_index: Mapping[int, int] | None = None) -> DerivationTree:
    """Words as nodes, cups as edges; the head owns the residual wire.

    Several cups between the same two words collapse onto one labelled edge.
    """
    if word_of_index is None:
        word_of_index = matching.word_of_index()
    if len(matching.residual) != 1:
        raise StructureError("derivation needs exactly one open wire")
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for i, j in matching.pairs:
        a, b = word_of_index[i], word_of_index[j]
        if a == b:
            raise StructureError(f"word {a} is cupped to itself")
        edges.setdefault((min(a, b), max(a, b)), []).append((i, j))
    head = word_of_index[matching.residual[0]]
    tree = DerivationTree(n_words, {k: tuple(v) for k, v in edges.items()}, head)
    if len(edges) != n_words - 1 or len(tree.depths()) != n_words:
        raise StructureError("derivation graph is not a tree")
    return tree


class Layer(enum.Enum):
    TOP = "top"
    BOTTOM = "bottom"


@dataclass(frozen=True)
class Layering:
    layer: Mapping[int, Layer]

    @property
    def top(self) -> list[int]:
        return sorted(w for w, l in self.layer.items() if l is Layer.TOP)

    @property
    def bottom(self) -> list[int]:
        return sorted(w for w, l in self.layer.items() if l is Layer.BOTTOM)

    def check(self, tree: DerivationTree):
        if self.layer.get(tree.head) is not Layer.TOP:
            raise StructureError("head word must be on the top layer")
        for a, b in tree.edges:
            if self.layer[a] is self.layer[b]:
                raise StructureError(f"edge ({a}, {b}) is monochromatic")


def two_coloring(tree: DerivationTree) -> Layering:
    """Alternate layers breadth-first from the head (head on top)."""
    layer = {tree.head: Layer.TOP}
    frontier = [tree.head]
    current = Layer.TOP
    while frontier:
        current = Layer.BOTTOM if current is Layer.TOP else Layer.TOP
        nxt = []
        for w in frontier:
            for u in tree.neighbours(w):
                if u not in layer:
                    layer[u] = current
                    nxt.append(u)
        frontier = nxt
    return Layering(layer)


@dataclass
class Lexicon:
    entries: dict[str, PregroupType] = field(default_factory=dict)

    def __getitem__(self, word: str) -> PregroupType:
        try:
            return self.entries[word]
        except KeyError:
            raise GrammarError(f"word {word!r} not in lexicon") from None

    def __contains__(self, word):
        return word in self.entries

    def types_of(self, words: Iterable[str]) -> list[PregroupType]:
        return [self[w] for w in words]


def parse_lexicon(text: str) -> Lexicon:
    """``word<TAB>type`` per line; ``#`` starts a comment line."""
    lex = Lexicon()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise GrammarError(f"lexicon line {lineno}: expected 'word<TAB>type'")
        word, ty = parts[0].strip(), parts[1].strip()
        try:
            lex.entries[word] = parse_type(ty)
        except TypeParseError as exc:
            raise TypeParseError(f"lexicon line {lineno}: {exc}") from None
    return lex


def load_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon(fh.read())


def format_tree(tree: DerivationTree, words: Sequence[str]) -> str:
    lines = [f"{words[a]} -- {words[b]}" for a, b in tree.edge_list()]
    depth = tree.depths()
    lines.append("# depth " + " ".join(f"{words[w]}={depth[w]}" for w in range(tree.n_words)))
    return "\n".join(lines)
