import random

import pytest

from shapecontent import dl, fo
from shapecontent.errors import VocabularyError
from shapecontent.examples import load_corpus
from shapecontent.memstruct import ALLOC
from shapecontent.sl import eval_sl, sl_partition
from shapecontent.structgen import random_structure
from shapecontent.syntax import parse_formula, parse_sl
from shapecontent.translate import alpha, alpha_pure, beta, beta5, partition_names, tr

from conftest import chain

x, y = fo.X, fo.Y


def test_tr_concept_inclusion():
    assert tr(parse_formula("C <= D")) == fo.Forall(x, fo.Implies(fo.Atom1("C", x), fo.Atom1("D", x)))


def test_tr_func():
    assert tr(parse_formula("func(r)")) == fo.Forall(x, fo.Count("<=", 1, y, fo.Atom2("r", x, y)))


def test_tr_empty_role():
    m = chain(2, unary={"C": {3}}).replace(binary={"r": set()})
    assert fo.eval_fo2(tr(parse_formula("ex r . C <= bot")), m)


def test_tr_alternates_two_variables():
    phi = parse_formula("ex r . ex s^- . ex r . C <= D")
    out = tr(phi)
    fo.check_two_variable(out)
    assert "forall x. C(x)" not in str(out)


def test_tr_agrees_with_dl_on_corpus():
    g = load_corpus("formulas.dl")
    voc = g.vocab
    rng = random.Random(7)
    for _ in range(150):
        m = random_structure(rng, voc, rng.randint(1, 3))
        for phi in g.formulas.values():
            assert dl.eval_formula(phi, m) == fo.eval_fo2(tr(phi), m)


def test_alpha_emp_and_true():
    a, names = alpha(parse_sl("emp"))
    assert a == dl.Equiv(dl.Atomic(ALLOC), dl.BOTTOM) and names == []
    assert alpha_pure(parse_sl("true | emp")) == dl.ConceptIncl(dl.TOP, dl.TOP)


def test_alpha_running_example():
    a, names = alpha(parse_sl("true | ls(eHd, e) * ls(e, null) * ls(pHd, null)"))
    assert names == ["P1", "P2", "P3"]
    parts = dl.flatten_and(a)
    assert parts[0] == parse_formula("P1 | P2 | P3 == Alloc")
    assert parse_formula("P1 & P3 == bot") in parts
    ls_parts = [p for p in parts if isinstance(p, dl.Or)]
    assert len(ls_parts) == 3


def test_alpha_ls_chunk():
    a, _ = alpha(parse_sl("ls(a, b)"))
    expected = parse_formula(
        "P1 == Alloc && ((o:a <= P1 && o:b <= ex next^- . P1 && o:b <= !P1 && P1 <= o:a | ex next^- . P1)"
        " || (P1 <= bot && o:a == o:b))")
    assert dl.normalize(a) == dl.normalize(expected)


def test_alpha_points_to():
    a, _ = alpha(parse_sl("a |-> [next: b]"), fields=["next", "g"])
    parts = dl.flatten_and(a)
    assert parse_formula("P1 == o:a") in parts
    assert parse_formula("(o:a, o:b) <= next") in parts
    assert parse_formula("(o:a, o:null) <= g") in parts


def test_partition_names():
    phi = parse_sl("ls(a, b) * ls(b, null)")
    assert partition_names(phi) == ["P1", "P2"]
    assert partition_names(phi, "ll") == ["Pll_1", "Pll_2"]
    with pytest.raises(VocabularyError):
        partition_names(phi, avoid={"P2"})


def test_beta_without_lists_is_tr_alpha():
    phi = parse_sl("a |-> [next: null]")
    a, _ = alpha(phi)
    b = beta(phi)
    assert b.body == tr(a)


def test_beta5_root_clause():
    clause = beta5("P1", "eHd")
    root = fo.Forall(x, fo.Implies(
        fo.conj(fo.Atom1("P1", x), fo.Forall(y, fo.Implies(fo.Atom1("P1", y), fo.Not(fo.Atom2("F1", y, x))))),
        fo.Eq(x, fo.Const("eHd"))))
    assert clause.args[1] == root


def test_beta_running_example_has_three_forest_clauses():
    b = beta(parse_sl("true | ls(eHd, e) * ls(e, null) * ls(pHd, null)"))
    assert [c.head for c in b.chunks] == ["eHd", "e", "pHd"]
    roots = [p for p in b.body.args if "F1" in str(p) and "forall y" in str(p)]
    assert len(roots) == 6  # inside-coincidence and root clause per list


def test_alpha_implied_by_sl_on_random_structures():
    from shapecontent.memstruct import Vocabulary
    voc = Vocabulary.build(["next"], ["a", "b"])
    rng = random.Random(2)
    phi = parse_sl("ls(a, b) * ls(b, null)")
    a, names = alpha(phi, fields=["next"])
    hits = 0
    for _ in range(3000):
        m = random_structure(rng, voc, rng.randint(1, 3))
        parts = sl_partition(phi, m, ["next"])
        if parts is not None:
            hits += 1
            assert dl.eval_formula(a, m.replace(unary=dict(zip(names, parts))))
    assert hits > 0
