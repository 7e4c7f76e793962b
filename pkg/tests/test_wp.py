import random

import pytest

from shapecontent import dl
from shapecontent import prog as P
from shapecontent import wp
from shapecontent.errors import ProgramError
from shapecontent.examples import load_corpus
from shapecontent.memstruct import Vocabulary
from shapecontent.syntax import parse_formula, parse_loopless

import gen


def test_instrument_dispose():
    bar = wp.instrument(parse_loopless("dispose(x);"))
    expected = P.seq(P.Assign("abo", P.BoolLit(False)),
                     P.IfThenElse(P.Allocated("x"), P.Dispose("x"), P.Assign("abo", P.BoolLit(True))))
    assert bar.body == expected


def test_instrument_skip():
    assert wp.instrument(P.Skip()).body == P.seq(P.Assign("abo", P.BoolLit(False)), P.Skip())


def test_instrument_assume_and_guarded_if():
    bar = wp.instrument(parse_loopless("assume(x.next = null);"))
    inner = P.IfThenElse(P.Eq(P.FieldRead("x", "next"), P.Null()), P.Skip(), P.Assign("abo", P.BoolLit(True)))
    assert bar.body.cmds[1] == P.IfThenElse(P.Allocated("x"), inner, P.Assign("abo", P.BoolLit(True)))


def test_instrument_rejects_sugar():
    with pytest.raises(ProgramError):
        wp.instrument(parse_loopless("if x = null then { skip; }"))
    with pytest.raises(ProgramError):
        wp.instrument(parse_loopless("abo := x;"))


def test_instrumented_runs_never_abort():
    rng = random.Random(21)
    aborts = 0
    for _ in range(500):
        s = P.desugar(gen.program(rng), gen.VOCAB.symbols())
        m = gen.with_temps(gen.structure(rng), s)
        plain = P.run(s, m, fields=gen.VOCAB.fields)
        bar = P.run(wp.instrument(s).body, m, fields=gen.VOCAB.fields)
        # the instrumented run keeps going after abo := T and may need more reserve
        if isinstance(plain, P.OutOfReserve) or isinstance(bar, P.OutOfReserve):
            continue
        assert not isinstance(bar, P.Abort)
        flagged = bar.structure.const("abo") == bar.structure.const("T")
        assert flagged == isinstance(plain, P.Abort)
        aborts += flagged
    assert aborts > 50


def test_psi_skip():
    phi = parse_formula("C <= D")
    assert wp.psi(P.Skip(), phi) == phi


def _company():
    g = load_corpus("company.sv")
    return g, g.formulas["p_as_ll"]


def test_psi_field_assign_matches_running_example():
    g, phi = _company()
    out = wp.psi(parse_loopless("e.wrkFor := proj;"), phi, g.vocab.fields)
    expected = parse_formula(
        r"P1 & ex wrkFor_gho . o:null == P1 & ex ((wrkFor \ (o:e x top)) | (o:e, o:proj)) . o:proj", g.vocab)
    assert out == expected


def test_psi_loop_body_disjunction():
    g, phi = _company()
    body = P.assign_labels(P.desugar(parse_loopless(
        "if e.wrkFor = null then { e.wrkFor := proj; } else { skip; }")))
    out = wp.psi(body, phi, g.vocab.fields)
    guard = parse_formula("ex wrkFor^- . o:e == o:null", g.vocab)
    assert isinstance(out, dl.Or)
    assert out.left.left == guard and out.right.left == dl.Not(guard)
    assert out.right.right == phi


def test_psi_new_and_labels():
    voc = Vocabulary.build(["next"], ["x"], ["C"])
    s = P.assign_labels(parse_loopless("x := new;"))
    out = wp.psi(s, parse_formula("o:x <= C", voc), voc.fields)
    parts = dl.flatten_and(out)
    assert parse_formula("o:y_0 <= C", voc) in parts
    assert parse_formula("o:y_0 <= !Alloc", voc) in parts
    with pytest.raises(ProgramError):
        wp.psi(parse_loopless("x := new;"), parse_formula("o:x <= C", voc))


def test_psi_field_read():
    voc = Vocabulary.build(["next"], ["x", "z"], ["C"])
    s = P.assign_labels(parse_loopless("x := z.next;"))
    out = wp.psi(s, parse_formula("o:x <= C", voc), voc.fields)
    assert out == dl.And(parse_formula("o:y_0 <= C", voc), parse_formula("ex next^- . o:z == o:y_0", voc))


def test_phi_renames_remaining_symbols_only():
    g, phi = _company()
    voc = g.vocab.with_concepts(["P1"]).with_ext()
    out = wp.theta(parse_loopless("skip;"), phi, voc)
    names = dl.symbols(out).concepts
    assert "P1_ext" in names and "P1" not in names
    assert "wrkFor_gho" in dl.symbols(out).roles


def test_phi_without_remaining_symbols_is_psi():
    voc = Vocabulary.build(["next"], ["x"]).with_ext()
    phi = parse_formula("o:x <= Alloc", voc)
    s = P.assign_labels(parse_loopless("x := x.next;"))
    assert wp.phi_transform(s, phi, voc) == wp.psi(s, phi, voc.fields)


def test_theta_skip():
    voc = Vocabulary.build(["next"], ["x"], ["C"]).with_ext()
    phi = parse_formula("o:x <= C", voc)
    out = wp.theta(P.Skip(), phi, voc)
    assert out == dl.And(parse_formula("o:x <= C_ext", voc), parse_formula("o:F == o:F", voc))


def test_theta_oracle_small():
    rng = random.Random(8)
    forms = gen.formulas()
    voc = gen.VOCAB.with_ext()
    checked = 0
    for _ in range(150):
        m = gen.structure(rng, 6)
        s = gen.program(rng, 4)
        phi = rng.choice(forms)
        bar = wp.prepare(s, gen.VOCAB.symbols())
        th = wp.theta(bar, phi, gen.VOCAB)
        code = P.assign_labels(P.desugar(s, gen.VOCAB.symbols()), gen.VOCAB.symbols())
        m = gen.with_temps(m, code)
        for _ in range(3):
            choices = {y: rng.randrange(m.size) for y in bar.labels}
            post = gen.random_post(rng, m)
            out = P.run(code, m, choices, fields=gen.VOCAB.fields, post=post)
            pre = gen.oracle_pre(m, out, post, choices)
            expected = isinstance(out, P.ResultStructure) and dl.eval_formula(phi, out.structure)
            assert dl.eval_formula(th, pre) == expected
            checked += 1
    assert voc.ext_of
    assert checked == 450
