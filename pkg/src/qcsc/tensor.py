"""Sparse real tensors over N-dimensional wires.

Entries are stored as a sorted array of row-major flat indices plus the
matching values.  Zeros (``|v| <= PRUNE_TOL``) are never stored.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels

PRUNE_TOL = 1e-15
NORM_TOL = 1e-12
_MAX_FLAT = 2 ** 62

_wire_tracker: contextvars.ContextVar[list | None] = contextvars.ContextVar("wire_tracker", default=None)


class TensorError(ValueError):
    pass


class ShapeError(TensorError):
    pass


class NormalizationError(TensorError):
    pass


@contextlib.contextmanager
def track_wires():
    """Record the wire count of every tensor built inside the block.

    Yields a list; after the block its maximum is the widest tensor created.
    """
    seen: list[int] = []
    token = _wire_tracker.set(seen)
    try:
        yield seen
    finally:
        _wire_tracker.reset(token)


def _size(wires) -> int:
    size = 1
    for w in wires:
        size *= int(w)
    if size >= _MAX_FLAT:
        raise ShapeError(f"tensor with wires {tuple(wires)} is too large to index")
    return size


class MeaningTensor:
    """Immutable sparse tensor.

    >>> t = MeaningTensor.from_dense([3.0, 0.0, 4.0])
    >>> t.nnz, t[(2,)]
    (2, 4.0)
    """

    __slots__ = ("wires", "idx", "vals", "label", "size")

    def __init__(self, wires, idx=(), vals=(), label=None, *, canonical=False):
        wires = tuple(int(w) for w in wires)
        if any(w < 1 for w in wires):
            raise ShapeError(f"bad wire dimensions {wires}")
        size = _size(wires)
        idx = np.asarray(idx, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if idx.shape != vals.shape:
            raise ShapeError("index/value length mismatch")
        if not canonical:
            idx, vals = kernels.sum_duplicates(idx, vals, PRUNE_TOL)
        if idx.size and (idx[0] < 0 or idx[-1] >= size):
            raise ShapeError(f"entry index out of bounds for wires {wires}")
        idx.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "wires", wires)
        object.__setattr__(self, "idx", idx)
        object.__setattr__(self, "vals", vals)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "size", size)
        seen = _wire_tracker.get()
        if seen is not None:
            seen.append(len(wires))

    def __setattr__(self, name, value):
        raise AttributeError("MeaningTensor is immutable")

    @classmethod
    def from_dense(cls, array, label=None) -> "MeaningTensor":
        arr = np.asarray(array, dtype=np.float64)
        wires = arr.shape if arr.ndim else ()
        flat = arr.ravel()
        nz = np.flatnonzero(np.abs(flat) > PRUNE_TOL)
        return cls(wires, nz, flat[nz], label, canonical=True)

    @classmethod
    def from_entries(cls, wires, entries: Mapping[tuple, float], label=None) -> "MeaningTensor":
        wires = tuple(wires)
        if entries:
            coords = np.array(list(entries.keys()), dtype=np.int64).reshape(len(entries), len(wires))
            if np.any(coords < 0) or np.any(coords >= np.array(wires, dtype=np.int64)):
                raise ShapeError("entry coordinate out of bounds")
            idx = np.ravel_multi_index(coords.T, wires) if wires else np.zeros(len(entries), np.int64)
            vals = np.fromiter(entries.values(), dtype=np.float64, count=len(entries))
        else:
            idx, vals = (), ()
        return cls(wires, idx, vals, label)

    @classmethod
    def basis(cls, n: int, i: int, label=None) -> "MeaningTensor":
        return cls((n,), [i], [1.0], label)

    @classmethod
    def scalar(cls, value: float) -> "MeaningTensor":
        return cls((), [0], [value])

    @property
    def order(self) -> int:
        return len(self.wires)

    @property
    def nnz(self) -> int:
        return int(self.idx.size)

    def coords(self) -> np.ndarray:
        """``(nnz, order)`` array of multi-indices."""
        if not self.wires:
            return np.zeros((self.nnz, 0), dtype=np.int64)
        return np.stack(np.unravel_index(self.idx, self.wires), axis=1).astype(np.int64)

    def __getitem__(self, key) -> float:
        key = tuple(key) if isinstance(key, (tuple, list)) else (key,)
        if len(key) != self.order:
            raise ShapeError(f"expected {self.order} indices, got {len(key)}")
        flat = int(np.ravel_multi_index(key, self.wires)) if self.wires else 0
        return float(kernels.gather(self.idx, self.vals, np.array([flat]))[0])

    def entries(self) -> dict[tuple, float]:
        return {tuple(int(c) for c in row): float(v) for row, v in zip(self.coords(), self.vals)}

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size, dtype=np.float64)
        out[self.idx] = self.vals
        return out.reshape(self.wires)

    def value(self) -> float:
        """The number held by a wireless (scalar) tensor."""
        if self.wires:
            raise ShapeError("not a scalar")
        return float(self.vals[0]) if self.nnz else 0.0

    def norm_sq(self) -> float:
        return float(np.dot(self.vals, self.vals))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_sq() - 1.0) <= tol

    def scaled(self, c: float) -> "MeaningTensor":
        return MeaningTensor(self.wires, self.idx, self.vals * c, self.label)

    def relabel(self, label) -> "MeaningTensor":
        return MeaningTensor(self.wires, self.idx, self.vals, label, canonical=True)

    def equals(self, other: "MeaningTensor") -> bool:
        return (self.wires == other.wires and np.array_equal(self.idx, other.idx)
                and np.array_equal(self.vals, other.vals))

    def __repr__(self):
        return f"MeaningTensor(wires={self.wires}, nnz={self.nnz}, label={self.label!r})"


def random_tensor(rng: np.random.Generator, wires, density: float = 1.0, label=None) -> MeaningTensor:
    """Random normalized tensor with about ``density * size`` stored entries (at least one)."""
    size = _size(wires)
    k = max(1, int(round(density * size)))
    idx = rng.choice(size, size=k, replace=False)
    t = MeaningTensor(wires, idx, rng.normal(size=k), label)
    return normalize(t)


def transpose(t: MeaningTensor, perm: Sequence[int]) -> MeaningTensor:
    """Reorder wires: output wire ``k`` is input wire ``perm[k]``."""
    perm = list(perm)
    if sorted(perm) != list(range(t.order)):
        raise ShapeError(f"{perm} is not a permutation of {t.order} wires")
    if perm == list(range(t.order)):
        return t
    wires = tuple(t.wires[p] for p in perm)
    coords = t.coords()[:, perm]
    return MeaningTensor(wires, np.ravel_multi_index(coords.T, wires), t.vals, t.label)


def tensor_product(factors: Sequence[MeaningTensor]) -> MeaningTensor:
    if not factors:
        raise TensorError("tensor product of nothing")
    acc = factors[0]
    for f in factors[1:]:
        idx, vals = kernels.outer(acc.idx, acc.vals, f.idx, f.vals, f.size)
        keep = np.abs(vals) > PRUNE_TOL
        acc = MeaningTensor(acc.wires + f.wires, idx[keep], vals[keep], canonical=True)
    return acc


def _ravel(coords: np.ndarray, cols: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    out = np.zeros(coords.shape[0], dtype=np.int64)
    for c, d in zip(cols, dims):
        out = out * d + coords[:, c]
    return out


def cap_contract(t: MeaningTensor, wire_i: int, wire_j: int) -> MeaningTensor:
    """Apply the cap ``sum_k <kk|`` to two wires of one tensor."""
    if wire_i == wire_j:
        raise TensorError("cap needs two distinct wires")
    if not (0 <= wire_i < t.order and 0 <= wire_j < t.order):
        raise TensorError(f"wire out of range for order-{t.order} tensor")
    if t.wires[wire_i] != t.wires[wire_j]:
        raise TensorError(f"cap joins wires of dimension {t.wires[wire_i]} and {t.wires[wire_j]}")
    rest = [k for k in range(t.order) if k not in (wire_i, wire_j)]
    coords = t.coords()
    keep = coords[:, wire_i] == coords[:, wire_j]
    dims = [t.wires[k] for k in rest]
    return MeaningTensor(dims, _ravel(coords[keep], rest, dims), t.vals[keep])


def contract_pair(a: MeaningTensor, b: MeaningTensor,
                  pairs: Sequence[tuple[int, int]]) -> MeaningTensor:
    """Contract wire ``pairs[k][0]`` of ``a`` with ``pairs[k][1]`` of ``b``.

    Result wires: remaining wires of ``a`` then remaining wires of ``b``.
    """
    for wa, wb in pairs:
        if a.wires[wa] != b.wires[wb]:
            raise TensorError(f"contracting wires of dimension {a.wires[wa]} and {b.wires[wb]}")
    ka = [p[0] for p in pairs]
    kb = [p[1] for p in pairs]
    key_dims = [a.wires[w] for w in ka]
    ra = [w for w in range(a.order) if w not in ka]
    rb = [w for w in range(b.order) if w not in kb]
    da = [a.wires[w] for w in ra]
    db = [b.wires[w] for w in rb]
    ca, cb = a.coords(), b.coords()
    size_rb = _size(db)
    _size(da + db)
    idx, vals = kernels.join_contract(
        _ravel(ca, ka, key_dims), _ravel(ca, ra, da), a.vals,
        _ravel(cb, kb, key_dims), _ravel(cb, rb, db), b.vals,
        size_rb, PRUNE_TOL,
    )
    return MeaningTensor(da + db, idx, vals, canonical=True)


Wire = tuple[int, int]  # (tensor index, wire position)


def contract_network(tensors: Sequence[MeaningTensor], cups: Iterable[tuple[Wire, Wire]],
                     open_wires: Sequence[Wire] = ()) -> MeaningTensor:
    """Contract a wiring of tensors down to the listed open wires.

    Every wire must appear in exactly one cup or in ``open_wires``.  The
    order is greedy: at each step the connected pair whose contraction
    leaves the fewest wires goes first, which on a tree absorbs leaves into
    their neighbours and never widens a tensor past its own arity plus the
    open wires it carries.
    """
    cups = [tuple(c) for c in cups]
    open_wires = [tuple(w) for w in open_wires]
    all_wires = [w for c in cups for w in c] + open_wires
    expected = [(t, k) for t, ten in enumerate(tensors) for k in range(ten.order)]
    if sorted(all_wires) != sorted(expected):
        raise ShapeError("wiring does not use every wire exactly once")
    partner = {}
    for x, y in cups:
        partner[x] = y
        partner[y] = x

    # live node -> (tensor, list of original wire ids in wire order)
    live: dict[int, tuple[MeaningTensor, list[Wire]]] = {}
    for t, ten in enumerate(tensors):
        ids = [(t, k) for k in range(ten.order)]
        # cups inside one tensor go first
        while True:
            inner = [(p, q) for p, w in enumerate(ids) for q, u in enumerate(ids)
                     if p < q and partner.get(w) == u]
            if not inner:
                break
            p, q = inner[0]
            ten = cap_contract(ten, p, q)
            ids = [w for k, w in enumerate(ids) if k not in (p, q)]
        live[t] = (ten, ids)

    def links(u, v):
        iu = live[u][1]
        iv = {w: k for k, w in enumerate(live[v][1])}
        return [(p, iv[partner[w]]) for p, w in enumerate(iu) if w in partner and partner[w] in iv]

    while len(live) > 1:
        best = None
        keys = sorted(live)
        for a_pos, u in enumerate(keys):
            for v in keys[a_pos + 1:]:
                pairs = links(u, v)
                if not pairs:
                    continue
                width = live[u][0].order + live[v][0].order - 2 * len(pairs)
                cost = (width, live[u][0].nnz * live[v][0].nnz, u, v)
                if best is None or cost < best[0]:
                    best = (cost, u, v, pairs)
        if best is None:
            # disconnected pieces: plain tensor product
            u, v = sorted(live)[:2]
            pairs = []
        else:
            _, u, v, pairs = best
        (ta, ia), (tb, ib) = live.pop(u), live.pop(v)
        res = contract_pair(ta, tb, pairs)
        used_a = {p for p, _ in pairs}
        used_b = {q for _, q in pairs}
        ids = [w for k, w in enumerate(ia) if k not in used_a] + [w for k, w in enumerate(ib) if k not in used_b]
        live[u] = (res, ids)

    (result, ids), = live.values()
    pos = {w: k for k, w in enumerate(ids)}
    return transpose(result, [pos[w] for w in open_wires])


def evaluate_sentence(words: Sequence[MeaningTensor], matching) -> MeaningTensor:
    """Sentence meaning: contract the words along the reduction's cups.

    Equivalent to forming the full tensor product of the words and applying
    the caps, but contracts pairwise so the product is never built.
    """
    if len(words) != matching.n_words:
        raise ShapeError(f"{len(words)} tensors for {matching.n_words} words")
    for k, (w, n) in enumerate(zip(words, matching.word_lengths)):
        if w.order != n:
            raise ShapeError(f"word {k}: tensor has {w.order} wires, type has {n}")
    where = matching.wire_of_index()
    cups = [(where[i], where[j]) for i, j in matching.pairs]
    open_wires = [where[i] for i in matching.residual]
    return contract_network(words, cups, open_wires)


def inner_product(a: MeaningTensor, b: MeaningTensor) -> float:
    if a.wires != b.wires:
        raise ShapeError(f"inner product of wires {a.wires} and {b.wires}")
    return kernels.sparse_dot(a.idx, a.vals, b.idx, b.vals)


def normalize(t: MeaningTensor) -> MeaningTensor:
    n2 = t.norm_sq()
    if n2 <= 0.0:
        raise NormalizationError("cannot normalize a zero tensor")
    return MeaningTensor(t.wires, t.idx, t.vals / math.sqrt(n2), t.label, canonical=True)


@dataclass(frozen=True)
class SparsityStats:
    d: int
    r_max: float


def sparsity_stats(vs: Iterable) -> SparsityStats:
    """Largest support size and largest squared entry over a set of vectors."""
    d, r = 0, 0.0
    empty = True
    for v in vs:
        empty = False
        d = max(d, v.nnz)
        r = max(r, v.max_sq() if hasattr(v, "max_sq") else float(np.max(v.vals ** 2, initial=0.0)))
    if empty:
        raise TensorError("sparsity stats of an empty set")
    return SparsityStats(d, r)


def storage_estimate(n: int, num_verbs: int) -> tuple[int, int]:
    """Bits to store transitive verbs classically vs qubits to hold them.

    One unit per tensor entry (``num_verbs * n**3``); the qubit count is the
    base-2 logarithm of that, rounded up.
    """
    if n < 2 or num_verbs < 1:
        raise ValueError("need n >= 2 and at least one verb")
    bits = num_verbs * n ** 3
    return bits, (bits - 1).bit_length()


class ProductVector:
    """A flattened vector that is a wire-permuted tensor product of factors.

    ``order[p] = (f, w)`` says output wire ``p`` is wire ``w`` of factor
    ``f``.  The flat coordinate is row-major over the output wires.  Nothing
    wider than a single factor is built unless :meth:`materialize` (or
    :meth:`support`) is called.
    """

    def __init__(self, factors: Sequence[MeaningTensor], order: Sequence[Wire] | None = None, label=None):
        self.factors = tuple(factors)
        if not self.factors:
            raise TensorError("product vector needs a factor")
        if order is None:
            order = [(f, w) for f, t in enumerate(self.factors) for w in range(t.order)]
        self.order = tuple(tuple(o) for o in order)
        expected = sorted((f, w) for f, t in enumerate(self.factors) for w in range(t.order))
        if sorted(self.order) != expected:
            raise ShapeError("order must list every factor wire once")
        self.dims = tuple(self.factors[f].wires[w] for f, w in self.order)
        self.dim = _size(self.dims)
        self.label = label
        strides = [1] * len(self.dims)
        for p in range(len(self.dims) - 2, -1, -1):
            strides[p] = strides[p + 1] * self.dims[p + 1]
        self._strides = strides
        self._pos = {o: p for p, o in enumerate(self.order)}

    @classmethod
    def of(cls, t: MeaningTensor) -> "ProductVector":
        return cls([t], label=t.label)

    @property
    def is_plain(self) -> bool:
        return len(self.factors) == 1 and self.order == tuple((0, w) for w in range(self.factors[0].order))

    @property
    def nnz(self) -> int:
        n = 1
        for f in self.factors:
            n *= f.nnz
        return n

    def max_sq(self) -> float:
        out = 1.0
        for f in self.factors:
            out *= float(np.max(f.vals ** 2, initial=0.0))
        return out

    def norm_sq(self) -> float:
        out = 1.0
        for f in self.factors:
            out *= f.norm_sq()
        return out

    def _contrib(self, f: int, coords: np.ndarray) -> np.ndarray:
        out = np.zeros(coords.shape[0], dtype=np.int64)
        for w in range(self.factors[f].order):
            out += coords[:, w] * self._strides[self._pos[(f, w)]]
        return out

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted flat support and the values there."""
        if self.is_plain:
            return self.factors[0].idx, self.factors[0].vals
        idx = np.zeros(1, dtype=np.int64)
        vals = np.ones(1, dtype=np.float64)
        for f, t in enumerate(self.factors):
            idx = np.add.outer(idx, self._contrib(f, t.coords())).ravel()
            vals = np.multiply.outer(vals, t.vals).ravel()
        order = np.argsort(idx)
        return idx[order], vals[order]

    def materialize(self) -> MeaningTensor:
        idx, vals = self.support()
        return MeaningTensor(self.dims, idx, vals, self.label, canonical=True)

    def entries(self, flat) -> np.ndarray:
        flat = np.asarray(flat, dtype=np.int64)
        if self.is_plain:
            return kernels.gather(self.factors[0].idx, self.factors[0].vals, flat)
        coords = np.stack(np.unravel_index(flat, self.dims), axis=1) if self.dims else np.zeros((flat.size, 0), np.int64)
        out = np.ones(flat.size, dtype=np.float64)
        for f, t in enumerate(self.factors):
            cols = [self._pos[(f, w)] for w in range(t.order)]
            local = _ravel(coords, cols, t.wires)
            out *= kernels.gather(t.idx, t.vals, local)
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Flat coordinates drawn with probability proportional to entry squared."""
        out = np.zeros(size, dtype=np.int64)
        for f, t in enumerate(self.factors):
            p = t.vals ** 2
            pick = rng.choice(t.nnz, size=size, p=p / p.sum())
            out += self._contrib(f, t.coords()[pick])
        return out

    def dot(self, other: "ProductVector") -> float:
        if self.dims != other.dims:
            raise ShapeError(f"inner product of dims {self.dims} and {other.dims}")
        if self.is_plain and other.is_plain:
            a, b = self.factors[0], other.factors[0]
            return kernels.sparse_dot(a.idx, a.vals, b.idx, b.vals)
        shift = len(self.factors)
        tensors = list(self.factors) + list(other.factors)
        cups = [((fa, wa), (fb + shift, wb)) for (fa, wa), (fb, wb) in zip(self.order, other.order)]
        return contract_network(tensors, cups).value()

    def __repr__(self):
        return f"ProductVector(dims={self.dims}, factors={len(self.factors)}, label={self.label!r})"
