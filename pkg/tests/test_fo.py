import random

import pytest

from shapecontent import fo
from shapecontent.errors import PreconditionError
from shapecontent.memstruct import Vocabulary, add_reserve, make_structure
from shapecontent.structgen import all_structures, random_structure
from shapecontent.syntax import parse_sl
from shapecontent.translate import alpha, beta, tr

from conftest import chain

x, y = fo.X, fo.Y


def test_func_translation_true_on_fields():
    voc = Vocabulary.build(["next"])
    phi = fo.Forall(x, fo.Count("<=", 1, y, fo.Atom2("next", x, y)))
    rng = random.Random(3)
    for _ in range(30):
        assert fo.eval_fo2(phi, random_structure(rng, voc, rng.randint(1, 4)))


def test_count_at_least_zero_is_true(minimal):
    assert fo.eval_fo2(fo.Count(">=", 0, y, fo.Truth(False)), minimal)


def test_exact_count():
    phi = fo.Count("=", 2, y, fo.Atom1("L", y))
    assert fo.eval_fo2(phi, chain(3, unary={"L": {3, 4}}))
    assert not fo.eval_fo2(phi, chain(3, unary={"L": {3, 4, 5}}))


def test_count_rejects_bad_arguments():
    with pytest.raises(ValueError):
        fo.Count("<", 1, y, fo.TRUE_F)
    with pytest.raises(ValueError):
        fo.Count(">=", -1, y, fo.TRUE_F)


def test_two_variable_check():
    fo.check_two_variable(fo.Forall(x, fo.Exists(y, fo.Atom2("r", x, y))))
    with pytest.raises(ValueError):
        fo.check_two_variable(fo.Forall("z", fo.Atom1("A", "z")))


def test_is_forest():
    assert fo.is_forest(set(), range(3))
    assert fo.is_forest({(0, 1), (1, 2)}, range(3))
    assert not fo.is_forest({(0, 1), (1, 2), (2, 0)}, range(3))
    assert not fo.is_forest({(0, 2), (1, 2)}, range(3))
    assert not fo.is_forest({(0, 0)}, range(1))


def test_list_segments_are_forests():
    # next restricted to the cells of any acyclic segment of length <= 4
    for n in range(0, 5):
        cells = list(range(3, 3 + n))
        seg = {(cells[i], cells[i + 1]) for i in range(n - 1)}
        assert fo.is_forest(seg, range(3 + n))


def test_forest_rows_matches_is_forest():
    rng = random.Random(5)
    for _ in range(200):
        n = rng.randint(1, 5)
        pairs = {(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, n + 1))}
        rows = [0] * n
        for a, b in pairs:
            rows[a] |= 1 << b
        from shapecontent.bits import SCALAR
        assert fo.forest_rows(tuple(rows), n, SCALAR) == fo.is_forest(pairs, range(n))


def _list_with_cycle():
    """a -> m4 -> m5 -> null plus a separate 2-cycle m6 <-> m7, all allocated."""
    vals = {3: 4, 4: 5, 5: 0, 6: 7, 7: 6}
    return make_structure(5, ["next"], alloc=range(3, 8), consts={"a": 3}, field_values={"next": vals})


def test_beta_list_versus_disjoint_cycle():
    phi = parse_sl("ls(a, null)")
    b = beta(phi, fields=["next"])
    a, names = alpha(phi, fields=["next"])
    good = chain(3, consts={"a": 3})
    assert fo.eval_ct2(b, good)
    bad = _list_with_cycle()
    assert not fo.eval_ct2(b, bad)
    # alpha holds once its partition concept covers the cycle too
    assert fo.eval_fo2(tr(a), bad.replace(unary={names[0]: range(3, 8)}))


def test_beta_cyclic_two_segments():
    phi = parse_sl("ls(a, b) * ls(b, a)")
    m = make_structure(2, ["next"], alloc=[3, 4], consts={"a": 3, "b": 4}, field_values={"next": {3: 4, 4: 3}})
    b = beta(phi, fields=["next"])
    assert fo.eval_ct2(b, m)
    # the canonical forest drops both closing edges
    parts = m.replace(unary={"P1": {3}, "P2": {4}})
    assert all(r == 0 for r in fo.canonical_forest(b, parts))


def test_forest_free_body_equals_fo2():
    body = fo.Forall(x, fo.Implies(fo.Atom1("Alloc", x), fo.Exists(y, fo.Atom2("next", x, y))))
    for m in [chain(2), make_structure(2, ["next"])]:
        assert fo.eval_ct2(fo.CT2Formula(body), m) == fo.eval_fo2(body, m)


def test_exhaustive_cap():
    b = beta(parse_sl("ls(a, null)"), fields=["next"])
    big = add_reserve(chain(3, consts={"a": 3}), Vocabulary.build(["next"]), 3)
    with pytest.raises(PreconditionError):
        fo.eval_ct2(b, big, fo.EXHAUSTIVE)


SL_SMALL = ["emp", "ls(a, null)", "ls(a, b) * ls(b, null)", "a |-> [next: b]", "ls(a, b) * ls(b, a)"]


def test_canonical_agrees_with_exhaustive():
    phis = [beta(parse_sl(t), fields=["next"]) for t in SL_SMALL]
    two = list(all_structures(2, ["next"], [], ["a", "b"]))
    sample = list(all_structures(1, ["next"], [], ["a", "b"])) + random.Random(11).sample(two, 150)
    checked = 0
    for m in sample:
        for b in phis:
            assert fo.eval_ct2(b, m, fo.CANONICAL) == fo.eval_ct2(b, m, fo.EXHAUSTIVE)
            checked += 1
    assert checked > 500


def test_relations_and_free_vars():
    phi = fo.Forall(x, fo.Implies(fo.Atom1("A", x), fo.Atom2("r", x, fo.Const("c"))))
    assert fo.relations(phi) == ({"c"}, {"A"}, {"r"})
    assert fo.free_vars(phi) == frozenset()
    assert fo.free_vars(phi.body) == {x}
