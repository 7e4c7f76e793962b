import pytest

from shapecontent import prog as P
from shapecontent.errors import ParseError, ProgramError
from shapecontent.examples import company_init, company_vocab, load_corpus
from shapecontent.memstruct import ALLOC, Vocabulary, make_structure, validate
from shapecontent.syntax import parse_loopless, show_program

from conftest import chain

HEADER = "fields next; vars a, b;\n"
LOC = "loc {name}{init} {{ shp: true | emp; cnt: top <= top; }}\n"


def graph(edges, locs=("s", "t"), init="s"):
    text = HEADER + "".join(LOC.format(name=l, init=" init" if l == init else "") for l in locs)
    text += "".join(f"edge {a} -> {b} {{ {body} }}\n" for a, b, body in edges)
    return P.parse_program(text)


def test_desugar_one_armed_if():
    s = parse_loopless("if a = null then { skip; }")
    assert P.desugar(s) == P.IfThenElse(P.Eq(P.Var("a"), P.Null()), P.Skip(), P.Skip())


def test_desugar_idempotent_on_desugared():
    s = parse_loopless("a := b; if a = b then { skip; } else { a := null; }")
    assert P.desugar(s) is s


def test_desugar_field_copy():
    s = P.desugar(parse_loopless("a.f := b.g;"))
    assert s == P.Seq((P.Assign("tmp_0", P.FieldRead("b", "g")), P.FieldAssign("a", "f", P.Var("tmp_0"))))
    s = P.desugar(parse_loopless("a.f := b.g;"), avoid={"tmp_0"})
    assert list(P.commands(s))[1].var == "tmp_1"


def test_run_skip(minimal):
    assert P.run(P.Skip(), minimal).structure == minimal


def test_dispose_unallocated_aborts(minimal):
    m = minimal.replace(consts={"x": 0})
    assert isinstance(P.run(parse_loopless("dispose(x);"), m), P.Abort)


def test_new_then_link(minimal):
    m = minimal.replace(consts={"x": 0, "y": 0})
    out = P.run(parse_loopless("x := new; x.next := y;"), m)
    s = out.structure
    assert 3 in s.concept(ALLOC) and s.const("x") == 3 and s.field_value("next", 3) == 0
    assert s.reserve == 0
    voc = Vocabulary.build(["next"], ["x", "y"])
    assert [v.condition for v in validate(s, voc)] == [10]


def test_new_without_reserve():
    m = chain(1).replace(consts={"x": 0})
    assert isinstance(P.run(parse_loopless("x := new;"), m), P.OutOfReserve)


def test_new_choice_and_field_read_witness():
    m = make_structure(3, ["next"], alloc=[3], consts={"x": 3, "y": 0}, field_values={"next": {3: 0}})
    s = P.assign_labels(parse_loopless("y := new; x := x.next;"))
    labels = P.labels_of(s)
    out = P.run(s, m, {labels[0]: 5})
    assert out.structure.const("y") == 5 and out.choices == {labels[0]: 5, labels[1]: 0}
    assert isinstance(P.run(s, m, {labels[1]: 3}), P.Abort)
    assert isinstance(P.run(s, m, {labels[0]: 3}), P.Abort)


def test_dereference_of_unallocated_aborts():
    m = chain(1).replace(consts={"x": 0, "y": 3})
    assert isinstance(P.run(parse_loopless("y := x.next;"), m), P.Abort)
    assert isinstance(P.run(parse_loopless("x.next := y;"), m), P.Abort)
    # plain variable reads are total
    assert isinstance(P.run(parse_loopless("y := x;"), m), P.ResultStructure)


def test_assume():
    m = chain(1).replace(consts={"x": 3})
    assert isinstance(P.run(parse_loopless("assume(x = null);"), m), P.Abort)
    assert P.run(parse_loopless("assume(x != null);"), m).structure == m
    assert isinstance(P.run(parse_loopless("assume(y.next = null);"), m.replace(consts={"y": 0})), P.Abort)


def test_dispose_nulls_fields_keeps_ghosts():
    voc = Vocabulary.build(["next"], ["x"], [], [], ["next"])
    m = chain(2).replace(consts={"x": 3})
    m = m.replace(binary={"next_gho": m.role("next")})
    out = P.run(parse_loopless("dispose(x);"), m, fields=voc.fields).structure
    assert out.field_value("next", 3) == 0 and 3 not in out.concept(ALLOC)
    assert out.role("next_gho") == m.role("next_gho")
    # without an explicit field list the ghost twin is still left alone
    out = P.run(parse_loopless("dispose(x);"), m).structure
    assert out.role("next_gho") == m.role("next_gho")


def test_run_path_empty_and_single():
    g = graph([("s", "t", "a := b;")])
    m = chain(1).replace(consts={"a": 0, "b": 3})
    assert P.run_path(g, [], m).structure == m
    assert P.run_path(g, [("s", "t")], m) == P.run(g.code[("s", "t")], m, fields=g.vocab.fields)


def test_run_path_rejects_gaps():
    g = graph([("s", "t", "skip;"), ("t", "t", "skip;")])
    with pytest.raises(ProgramError):
        P.run_path(g, [("s", "t"), ("s", "t")], chain(1).replace(consts={"a": 0, "b": 0}))


def test_running_example_assigns_every_unassigned_employee():
    g = load_corpus("company.sv")
    m = company_init(2, 1)
    out = P.run_path(g, [("lb", "ll"), ("ll", "ll"), ("ll", "ll"), ("ll", "le")], m)
    s = out.structure
    proj = s.const("proj")
    assert [s.field_value("wrkFor", e) for e in (3, 4)] == [proj, proj]
    assert validate(s, company_vocab()) == []


def test_ghosts_frozen_along_paths():
    g = load_corpus("company.sv")
    m = company_init(3, 1, works={1: 0})
    out = P.run_path(g, [("lb", "ll"), ("ll", "ll"), ("ll", "ll")], m)
    for k in ("ELst_gho", "PLst_gho"):
        assert out.structure.unary[k] == m.unary[k]
    assert out.structure.binary["wrkFor_gho"] == m.binary["wrkFor_gho"]


def test_parse_running_example_graph():
    g = load_corpus("company.sv")
    assert set(g.locations) == {"lb", "ll", "le"}
    assert set(g.edges) == {("lb", "ll"), ("ll", "ll"), ("ll", "le")}
    assert g.init == "lb"


def test_edge_into_init_rejected():
    # semantic errors found while reading a file carry their position
    with pytest.raises(ParseError, match="enters the init location"):
        graph([("t", "s", "skip;")])


def test_duplicate_location_rejected():
    with pytest.raises(ParseError, match="duplicate location"):
        graph([], locs=("s", "s"))


def test_empty_edge_block_is_skip():
    g = graph([("s", "t", "")])
    assert g.code[("s", "t")] == P.Skip()


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as exc:
        P.parse_program(HEADER + "loc s init { shp: emp; cnt: top <= ; }")
    assert exc.value.line == 2 and exc.value.col > 0


def test_labels_unique_and_fresh():
    s = P.assign_labels(parse_loopless("a := new; b := a.next; a := new;"), avoid={"y_0"})
    assert P.labels_of(s) == ["y_1", "y_2", "y_3"]


def test_show_program_round_trip():
    s = parse_loopless("a := new; if a = null then { a.next := b; } else { dispose(a); } assume(~(a = b));")
    assert parse_loopless(show_program(s)) == s
