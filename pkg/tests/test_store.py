import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcsc.store import (StoreError, format_tensor, load_store, load_tensor, parse_tensor, resolve,
                        save_store, save_tensor)
from qcsc.tensor import MeaningTensor, random_tensor


def test_format_is_plain_text():
    t = MeaningTensor.from_entries((2, 3), {(1, 2): 0.5, (0, 0): -1.0})
    assert format_tensor(t) == "dims 2 3\n0 0 -1\n1 2 0.5\n"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.lists(st.integers(1, 5), min_size=0, max_size=3),
       st.floats(0.05, 1.0))
def test_roundtrip_is_bit_exact(seed, wires, density):
    t = random_tensor(np.random.default_rng(seed), tuple(wires), density) if wires else MeaningTensor.scalar(0.3)
    back = parse_tensor(format_tensor(t))
    assert back.wires == t.wires
    np.testing.assert_array_equal(back.idx, t.idx)
    np.testing.assert_array_equal(back.vals, t.vals)


def test_tiny_values_survive_roundtrip():
    t = MeaningTensor((3,), [0, 2], [1e-300, 0.5])
    back = parse_tensor(format_tensor(t))
    assert back.vals.tolist() == t.vals.tolist()


@pytest.mark.parametrize("text, msg", [
    ("", "dims"),
    ("dims 2 x\n", "bad dimension"),
    ("dims 2\n0 1 1.0\n", "expected 1 indices"),
    ("dims 2\n5 1.0\n", "out of range"),
    ("dims 2\n0 1.0\n0 2.0\n", "duplicate"),
    ("dims 2\n0 abc\n", "unparsable"),
])
def test_parse_errors_name_the_line(text, msg):
    with pytest.raises(StoreError, match=msg):
        parse_tensor(text)


def test_store_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {"kids": random_tensor(rng, (4,)), "play": random_tensor(rng, (4, 2, 4), 0.3),
               "odd/name": random_tensor(rng, (4,))}
    save_store(tmp_path / "s", tensors)
    back = load_store(tmp_path / "s")
    assert list(back) == list(tensors)
    for k in tensors:
        assert back[k].equals(tensors[k]) and back[k].label == k
    manifest = (tmp_path / "s" / "manifest.tsv").read_text().splitlines()
    assert manifest[1].split("\t")[:2] == ["play", "3"]


def test_manifest_mismatch_detected(tmp_path):
    save_store(tmp_path, {"a": MeaningTensor.from_dense([1.0])})
    (tmp_path / "manifest.tsv").write_text("a\t2\ttensors/00000_a.tensor\n")
    with pytest.raises(StoreError, match="wires"):
        load_store(tmp_path)
    with pytest.raises(StoreError, match="manifest"):
        load_store(tmp_path / "nowhere")


def test_resolve_token_or_file(tmp_path):
    v = MeaningTensor.from_dense([0.0, 1.0])
    save_tensor(v, tmp_path / "v.tensor")
    assert resolve("x", {"x": v}) is v
    assert resolve(str(tmp_path / "v.tensor"), {}).equals(load_tensor(tmp_path / "v.tensor"))
    with pytest.raises(StoreError):
        resolve("missing", {})
