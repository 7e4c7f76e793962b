import pytest

from shapecontent import dl
from shapecontent import verify as V
from shapecontent.errors import PreconditionError
from shapecontent.examples import company_init, company_inits, load_corpus
from shapecontent.memstruct import MEMPOOL, Vocabulary, make_structure, validate
from shapecontent.annotations import parse_annotated
from shapecontent.sl import eval_sl
from shapecontent.syntax import parse_formula, parse_sl
from shapecontent.translate import alpha



@pytest.fixture(scope="module")
def company():
    return load_corpus("company.sv")


@pytest.fixture(scope="module")
def mutated():
    return load_corpus("company_mutated.sv")


def test_axiom_count():
    voc = Vocabulary.build(["f", "g"], ["x", "y"], ["C", "D", "E"])
    # the constants include null, T and F
    assert len(voc.constants) == 5
    assert len(V.psi_m_axioms(voc)) == 3 + 4 + 5 + 2 * 2 + 2 + 3


def test_axioms_hold_on_minimal(minimal):
    assert V.axioms_hold(minimal, Vocabulary.build(["next"]))


def test_axioms_detect_dirty_pool_cell():
    voc = Vocabulary.build(["next"])
    m = make_structure(2, ["next"], alloc=[3], field_values={"next": {4: 3}})
    assert not V.axioms_hold(m, voc)
    assert [v.condition for v in validate(m, voc)] == [8]


def test_unsatisfiable_body_has_no_model():
    voc = Vocabulary.build(["next"])
    for b in (4, 5, 6):
        assert V.find_model(None, voc, b, [parse_formula("top <= bot")]) == V.NoCounterexampleUpTo(b)


def test_bound_below_four_rejected():
    with pytest.raises(PreconditionError):
        V.find_model(None, Vocabulary.build(), 3)


def test_alpha_only_cycle_found():
    shp = parse_sl("ls(a, null)")
    a, _ = alpha(shp, fields=["next"])
    voc = Vocabulary.build(["next"], ["a"], ["C"]).with_concepts(["P1"])
    # C is a nonempty next-closed set of cells avoiding a: a cycle off the list
    extra = [a, parse_formula("C <= Alloc & !o:a && C <= ex next . C && !(C <= bot)")]
    r = V.find_model(None, voc, 6, extra)
    assert isinstance(r, V.Counterexample) and r.size <= 6
    assert not eval_sl(shp, r.structure, ["next"])


def test_find_model_deterministic():
    voc = Vocabulary.build(["next"], ["a"], ["C"])
    extra = [parse_formula("!(C <= bot)"), parse_formula("o:a <= C")]
    assert V.find_model(None, voc, 6, extra) == V.find_model(None, voc, 6, extra)


def test_vfs_checks():
    g = load_corpus("vfs.sv")
    res = [V.find_model(None, g.vocab, 7, [phi]) for phi in g.checks]
    assert [isinstance(r, V.Counterexample) for r in res] == [True, False, True]


def test_company_vcs_hold(company):
    rep = V.check_program(company, 6)
    assert rep.status == "VERIFIED"
    assert sorted(r.edge for r in rep.edges) == [("lb", "ll"), ("ll", "le"), ("ll", "ll")]
    assert all(r.verdict == V.NoCounterexampleUpTo(6) for r in rep.edges)


def test_company_vcs_not_vacuous(company):
    # each pre-state annotation admits a state with a reserve cell
    nonempty = dl.Not(dl.ConceptIncl(dl.Atomic(MEMPOOL), dl.BOTTOM))
    for e in company.code:
        vc = V.gen_vc(company, e)
        r = V.find_model(vc.beta, vc.vocab, 6, [vc.pre, nonempty], pad=False)
        assert isinstance(r, V.Counterexample), e


def test_mutated_refuted_on_loop_edge(mutated):
    rep = V.check_program(mutated, 6)
    assert rep.status == "REFUTED"
    bad = [r for r in rep.edges if isinstance(r.verdict, V.Counterexample)]
    assert [r.edge for r in bad] == [("ll", "ll")]
    r = bad[0]
    assert r.problems == []
    assert r.classification == V.CONCRETE
    vc = V.gen_vc(mutated, ("ll", "ll"))
    assert V.revalidate(vc, r.verdict) == []
    assert vc.holds_in(r.verdict.structure)


def test_report_json_schema(mutated):
    doc = V.report_json(V.check_program(mutated, 6))
    assert doc["status"] == "REFUTED"
    for e in doc["edges"]:
        assert {"edge", "verdict", "bound", "timeMs"} <= set(e)
    assert any("witness" in e for e in doc["edges"])


def test_no_edge_program_is_verified():
    g = parse_annotated("fields next; vars a; loc l0 init { shp: emp; cnt: top <= top; }")
    assert V.check_program(g, 5).status == "VERIFIED"


def test_simulate_reach(company, mutated):
    inits = company_inits()
    ok = V.simulate_reach(company, inits, 6)
    assert ok.runs == 5 and ok.visited > 0 and ok.violations == []
    bad = V.simulate_reach(mutated, inits, 6)
    assert bad.violations
    assert min(len(v.path) for v in bad.violations) <= 4
    assert V.simulate_reach(company, [], 6).runs == 0


def test_simulate_reach_rejects_bad_init(company):
    m = company_init(2, 1, {0: 0})
    with pytest.raises(PreconditionError):
        V.simulate_reach(company, [m.replace(consts={"pHd": 0})], 2)


def test_annotation_violation(company):
    m = company_init(2, 1, {0: 0})
    assert V.annotation_violation(company, "lb", m) is None
    assert V.annotation_violation(company, "lb", m.replace(consts={"eHd": 4})) is not None
