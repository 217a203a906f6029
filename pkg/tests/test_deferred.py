import numpy as np
import pytest

from qcsc.closest_vector import nn_direct
from qcsc.deferred import (ClassSet, Sentence, build_deferred, classify_deferred, classify_direct,
                           noise_perturb)
from qcsc.pregroup import (CupMatching, DerivationTree, Layer, Layering, StructureError, build_tree, parse_lexicon,
                           parse_type, reduce, two_coloring)
from qcsc.tensor import MeaningTensor, ShapeError, evaluate_sentence, normalize, random_tensor, track_wires

from sentences import JOHN_SAW_TYPES, TYPES, dense_meaning, random_sentence

SVO = reduce([TYPES["noun"], TYPES["tverb"], TYPES["noun"]])


def svo_words(rng, n=3, s=2):
    return [random_tensor(rng, (n,)), random_tensor(rng, (n, s, n)), random_tensor(rng, (n,))]


def test_kids_play_football_layout():
    rng = np.random.default_rng(0)
    kids, play, football = svo_words(rng)
    v, w = random_tensor(rng, (2,)), random_tensor(rng, (2,))
    inst = build_deferred([kids, play, football], SVO, two_coloring(build_tree(3, SVO)), [v, w])
    assert inst.top == (1,) and inst.bottom == (0, 2)
    assert inst.wire_permutation == (0, 1, 2)
    assert inst.base.s.factors == (play,)
    assert inst.base.U[0].factors == (kids, v, football)
    phi = np.einsum("i,isj,j->s", kids.to_dense(), play.to_dense(), football.to_dense())
    for i, c in enumerate([v, w]):
        assert inst.inner(i) == pytest.approx(float(phi @ c.to_dense()), abs=1e-14)
        assert inst.flat_inner(i) == pytest.approx(float(phi @ c.to_dense()), abs=1e-14)


def test_single_word_sentence():
    word = normalize(MeaningTensor.from_dense([1.0, 2.0, 2.0]))
    v = normalize(MeaningTensor.from_dense([0.0, 1.0, 0.0]))
    m = reduce([parse_type("s")])
    inst = build_deferred([word], m, two_coloring(build_tree(1, m)), [v])
    assert inst.inner(0) == pytest.approx(2 / 3)
    assert inst.bottom == () and inst.base.U[0].factors == (v,)


def test_john_saw_mary_read_a_book():
    rng = np.random.default_rng(1)
    words = [random_tensor(rng, (2,) * len(t)) for t in JOHN_SAW_TYPES]
    m = reduce(JOHN_SAW_TYPES)
    classifiers = [random_tensor(rng, (2,)) for _ in range(3)]
    inst = build_deferred(words, m, two_coloring(build_tree(6, m)), classifiers)
    phi = dense_meaning(words, m)
    for i, v in enumerate(classifiers):
        assert abs(inst.inner(i) - float(phi @ v.to_dense())) <= 1e-12
        assert abs(inst.flat_inner(i) - float(phi @ v.to_dense())) <= 1e-12
    # bottom flattening: John, classifier (at saw's S wire), read, book
    assert [f.order for f in inst.base.U[0].factors] == [1, 1, 3, 1]
    assert sorted(inst.wire_permutation) == list(range(6))


@pytest.mark.parametrize("seed", range(25))
def test_deferred_equivalence_random(seed):
    rng = np.random.default_rng(100 + seed)
    cats, words, m, s_dim = random_sentence(rng)
    classifiers = [random_tensor(rng, (s_dim,)) for _ in range(3)]
    with track_wires() as seen:
        inst = build_deferred(words, m, two_coloring(build_tree(len(words), m)), classifiers)
        values = [inst.inner(i) for i in range(3)]
    assert max(seen) <= max(w.order for w in words) + 1
    phi = dense_meaning(words, m)
    for v, got in zip(classifiers, values):
        assert abs(got - float(phi @ v.to_dense())) <= 1e-10


def test_errors():
    rng = np.random.default_rng(2)
    words = svo_words(rng)
    tree = build_tree(3, SVO)
    lay = two_coloring(tree)
    with pytest.raises(ShapeError):
        build_deferred(words, SVO, lay, [random_tensor(rng, (3,))])
    flat = Layering({0: Layer.TOP, 1: Layer.TOP, 2: Layer.BOTTOM})
    with pytest.raises(StructureError):
        build_deferred(words, SVO, flat, [random_tensor(rng, (2,))])
    flipped = Layering({0: Layer.TOP, 1: Layer.BOTTOM, 2: Layer.TOP})
    with pytest.raises(StructureError):
        build_deferred(words, SVO, flipped, [random_tensor(rng, (2,))])
    with pytest.raises(ShapeError):
        build_deferred(words[:2], SVO, lay, [random_tensor(rng, (2,))])


def test_scale_covariance():
    rng = np.random.default_rng(3)
    words = svo_words(rng, 4, 5)
    lay = two_coloring(build_tree(3, SVO))
    cls = [random_tensor(rng, (5,)) for _ in range(6)]
    base = nn_direct(build_deferred(words, SVO, lay, cls).base).argmax_index
    for c in (0.01, 3.0, 1e4):
        scaled = [v.scaled(c) for v in cls]
        inst = build_deferred(words, SVO, lay, scaled, check_normalized=False)
        assert nn_direct(inst.base).argmax_index == base


def _sentence(rng, n=4, s=3):
    words = svo_words(rng, n, s)
    return Sentence(("kids", "play", "football"), tuple(words), SVO)


def test_classify_direct_trivial_cases():
    rng = np.random.default_rng(4)
    sent = _sentence(rng)
    phi = normalize(evaluate_sentence(sent.tensors, sent.matching))
    ortho = np.linalg.svd(phi.to_dense()[None, :])[2][1]
    classes = [ClassSet("other", (MeaningTensor.from_dense(ortho),)), ClassSet("self", (phi,))]
    label, sim = classify_direct(sent, classes)
    assert label == "self" and sim == pytest.approx(1.0)
    twin = [ClassSet("a", (phi,)), ClassSet("b", (phi,))]
    assert classify_direct(sent, twin)[0] == "a"
    assert classify_deferred(sent, twin)[0] == "a"


def test_classify_direct_matches_dense_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(30):
        sent = _sentence(rng, 8, 8)
        classes = [ClassSet(f"c{k}", (random_tensor(rng, (8,)),)) for k in range(4)]
        phi = dense_meaning(sent.tensors, sent.matching)
        want = int(np.argmax([float(phi @ c.members[0].to_dense()) ** 2 for c in classes]))
        assert classify_direct(sent, classes)[0] == f"c{want}"


def test_deferred_direct_label_equals_direct_label():
    rng = np.random.default_rng(6)
    for _ in range(100):
        sent = _sentence(rng)
        classes = [ClassSet("v", (random_tensor(rng, (3,)),)), ClassSet("w", (random_tensor(rng, (3,)),))]
        assert classify_deferred(sent, classes)[0] == classify_direct(sent, classes)[0]


def test_union_of_members_and_single_class():
    rng = np.random.default_rng(7)
    sent = _sentence(rng)
    only = [ClassSet("only", tuple(random_tensor(rng, (3,)) for _ in range(3)))]
    for backend in ("direct", "mc", "quantum"):
        label, res = classify_deferred(sent, only, backend, seed=0)
        assert label == "only" and len(res.estimates) == 3
        assert res.params["deferred_d"] >= 1


def test_class_set_validation():
    with pytest.raises(ValueError):
        ClassSet("empty", ())
    with pytest.raises(ValueError):
        ClassSet("loose", (MeaningTensor.from_dense([2.0, 0.0]),))


def test_hand_built_tree_bypassing_reduce():
    # word 0 has wires (3, 2, 4); its first two cross-cup to words 1 and 2,
    # a wiring no pregroup reduction produces
    rng = np.random.default_rng(8)
    words = (random_tensor(rng, (3, 2, 4)), random_tensor(rng, (3,)), random_tensor(rng, (2,)))
    matching = CupMatching(((0, 3), (1, 4)), (2,), (3, 1, 1))
    assert not matching.is_planar()
    tree = DerivationTree(3, {(0, 1): ((0, 3),), (0, 2): ((1, 4),)}, 0)
    sent = Sentence(("x", "y", "z"), words, matching, tree)
    classes = [ClassSet("p", (random_tensor(rng, (4,)),)), ClassSet("q", (random_tensor(rng, (4,)),))]
    assert classify_deferred(sent, classes)[0] == classify_direct(sent, classes)[0]
    inst = build_deferred(words, matching, two_coloring(tree), [c.members[0] for c in classes])
    phi = np.einsum("abs,a,b->s", *[w.to_dense() for w in words])
    for i, c in enumerate(classes):
        assert inst.inner(i) == pytest.approx(float(phi @ c.members[0].to_dense()), abs=1e-12)


def test_sentence_parse_from_store():
    rng = np.random.default_rng(9)
    lex = parse_lexicon("kids\tn\nfootball\tn\nplay\tn^r s n^l\n")
    words = svo_words(rng)
    store = dict(zip(["kids", "play", "football"], words))
    sent = Sentence.parse("kids play football", lex, store)
    assert sent.tensors[1] is words[1]
    with pytest.raises(KeyError):
        Sentence.parse("kids play football", lex, {"kids": words[0]})


def test_noise_perturb():
    rng = np.random.default_rng(10)
    v = random_tensor(rng, (64,), 0.25)
    assert noise_perturb(v, 0.0, seed=1) is v
    u = noise_perturb(v, 0.125, seed=1)
    assert abs(u.norm_sq() - 1.0) <= 1e-12
    assert u.nnz == v.nnz + round(0.125 * v.nnz)
    assert set(v.idx.tolist()) <= set(u.idx.tolist())
    # distance before renormalization is exactly eps; afterwards it is close to it
    assert np.linalg.norm(u.to_dense() - v.to_dense()) == pytest.approx(0.125, abs=0.02)
    assert noise_perturb(v, 0.125, seed=1).equals(u)
