"""Plain-text vector store.

A tensor file starts with ``dims d1 d2 ...`` followed by one stored entry per
line, ``i1 i2 ... value``.  A store directory holds ``manifest.tsv`` with
``token<TAB>wire-count<TAB>relative-path`` lines and one file per tensor.
Values are written with 17 significant digits so a round trip is exact.
"""
from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Mapping

import numpy as np

from .tensor import MeaningTensor

MANIFEST = "manifest.tsv"


class StoreError(ValueError):
    pass


def format_tensor(t: MeaningTensor) -> str:
    lines = ["dims" + "".join(f" {d}" for d in t.wires)]
    for row, v in zip(t.coords(), t.vals):
        lines.append(" ".join([*(str(int(c)) for c in row), f"{v:.17g}"]))
    return "\n".join(lines) + "\n"


def parse_tensor(text: str, label=None, source="<string>") -> MeaningTensor:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("dims"):
        raise StoreError(f"{source}:1: missing 'dims' header")
    try:
        wires = tuple(int(x) for x in lines[0].split()[1:])
    except ValueError:
        raise StoreError(f"{source}:1: bad dimension in header") from None
    entries: dict[tuple, float] = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != len(wires) + 1:
            raise StoreError(f"{source}:{lineno}: expected {len(wires)} indices and a value")
        try:
            key = tuple(int(x) for x in parts[:-1])
            val = float(parts[-1])
        except ValueError:
            raise StoreError(f"{source}:{lineno}: unparsable entry {line!r}") from None
        if any(not 0 <= c < d for c, d in zip(key, wires)):
            raise StoreError(f"{source}:{lineno}: index out of range")
        if key in entries:
            raise StoreError(f"{source}:{lineno}: duplicate entry")
        entries[key] = val
    if not entries:
        return MeaningTensor(wires, label=label)
    coords = np.array(list(entries), dtype=np.int64).reshape(len(entries), len(wires))
    idx = np.ravel_multi_index(coords.T, wires) if wires else np.zeros(len(entries), np.int64)
    vals = np.fromiter(entries.values(), dtype=np.float64, count=len(entries))
    order = np.argsort(idx)
    # stored values are kept verbatim so a round trip is exact
    return MeaningTensor(wires, idx[order], vals[order], label, canonical=True)


def save_tensor(t: MeaningTensor, path) -> None:
    Path(path).write_text(format_tensor(t), encoding="utf-8")


def load_tensor(path, label=None) -> MeaningTensor:
    path = Path(path)
    return parse_tensor(path.read_text(encoding="utf-8"), label, str(path))


def _filename(i: int, token: str) -> str:
    safe = re.sub(r"[^\w.-]", "_", token)[:40]
    return f"{i:05d}_{safe}.tensor"


def save_store(path, tensors: Mapping[str, MeaningTensor]) -> None:
    root = Path(path)
    (root / "tensors").mkdir(parents=True, exist_ok=True)
    rows = []
    for i, (token, t) in enumerate(tensors.items()):
        if "\t" in token or "\n" in token:
            raise StoreError(f"token {token!r} contains a tab or newline")
        rel = os.path.join("tensors", _filename(i, token))
        save_tensor(t, root / rel)
        rows.append(f"{token}\t{t.order}\t{rel}")
    (root / MANIFEST).write_text("".join(r + "\n" for r in rows), encoding="utf-8")


def load_store(path) -> dict[str, MeaningTensor]:
    root = Path(path)
    manifest = root / MANIFEST
    if not manifest.exists():
        raise StoreError(f"{manifest}: no manifest")
    out = {}
    for lineno, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise StoreError(f"{manifest}:{lineno}: expected token, wire-count, path")
        token, count, rel = parts
        t = load_tensor(root / rel, label=token)
        if str(t.order) != count.strip():
            raise StoreError(f"{manifest}:{lineno}: manifest says {count} wires, file has {t.order}")
        out[token] = t
    return out


def resolve(name: str, store: Mapping[str, MeaningTensor] | None) -> MeaningTensor:
    """A token in ``store`` or else a path to a tensor file."""
    if store is not None and name in store:
        return store[name]
    if Path(name).is_file():
        return load_tensor(name, label=name)
    raise StoreError(f"{name!r} is neither a stored token nor a tensor file")

