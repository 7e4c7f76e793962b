import itertools

from shapecontent import dl, fo
from shapecontent.memstruct import ALLOC, Vocabulary, add_reserve, make_structure
from shapecontent.sl import StackHeap, eval_sl, from_stack_heap, show_sl, sl_partition, to_stack_heap
from shapecontent.structgen import all_structures
from shapecontent.syntax import parse_sl
from shapecontent.translate import alpha, beta

from conftest import chain

LOOP = "true | ls(eHd, e) * ls(e, null) * ls(pHd, null)"


def loop_structure(e=4):
    """Employees 3 -> 4 -> 5 -> null, one project 6, one reserve cell; 8 elements."""
    vals = {3: 4, 4: 5, 5: 0, 6: 0}
    m = make_structure(5, ["next"], alloc=[3, 4, 5, 6], consts={"eHd": 3, "e": e, "pHd": 6},
                       field_values={"next": vals})
    assert m.size == 8
    return m


def test_emp():
    phi = parse_sl("emp")
    assert eval_sl(phi, make_structure(1, ["next"]))
    assert not eval_sl(phi, chain(1))


def test_empty_segment():
    m = make_structure(1, ["next"], consts={"a": 0})
    assert eval_sl(parse_sl("ls(a, a)"), m)


def test_running_example_loop_shape():
    phi = parse_sl(LOOP)
    m = loop_structure()
    assert eval_sl(phi, m)
    assert sl_partition(phi, m) == [{3}, {4, 5}, {6}]
    # e at the list head: the visited part is empty
    assert sl_partition(phi, loop_structure(e=3)) == [set(), {3, 4, 5}, {6}]
    # an allocated cell on no list breaks coverage
    assert not eval_sl(phi, m.replace(unary={ALLOC: {3, 4, 5, 6, 7}, "MemPool": set()}))


def test_segment_end_outside_chunk():
    m = make_structure(2, ["next"], alloc=[3, 4], consts={"a": 3, "b": 4}, field_values={"next": {3: 4, 4: 3}})
    assert not eval_sl(parse_sl("ls(a, null) * ls(b, null)"), m)
    assert eval_sl(parse_sl("ls(a, b) * ls(b, a)"), m)
    assert not eval_sl(parse_sl("ls(a, a)"), m)


def test_points_to_unlisted_fields_null():
    m = make_structure(2, ["next", "g"], alloc=[3], consts={"a": 3, "b": 0},
                       field_values={"next": {3: 0}, "g": {3: 1}})
    phi = parse_sl("a |-> [next: b]")
    assert eval_sl(phi, m, fields=["next"])
    assert not eval_sl(phi, m, fields=["next", "g"])
    assert eval_sl(parse_sl("a |-> [next: null, g: T]"), m, fields=["next", "g"])


def test_pure_part():
    m = chain(2, consts={"a": 3, "b": 3})
    assert eval_sl(parse_sl("a = b | ls(a, null)"), m)
    assert not eval_sl(parse_sl("a != b | ls(a, null)"), m)


def test_chunks_disjoint_and_cover_alloc():
    phi = parse_sl("ls(a, b) * ls(b, null)")
    for m in all_structures(2, ["next"], [], ["a", "b"]):
        parts = sl_partition(phi, m)
        if parts is not None:
            assert not (parts[0] & parts[1])
            assert parts[0] | parts[1] == m.concept(ALLOC)


def test_stack_heap_round_trip():
    sh = StackHeap({"a": "c1", "b": "nil"}, {"c1": {"next": "c2"}, "c2": {"next": "nil"}})
    m = from_stack_heap(sh, reserve=2)
    voc = Vocabulary.build(["next"], ["a", "b"])
    assert to_stack_heap(m, voc) == sh
    assert m.reserve == 2


def test_empty_heap_means_empty_alloc():
    m = from_stack_heap(StackHeap({"a": "nil"}), reserve=1, fields=["next"])
    assert m.concept(ALLOC) == frozenset()
    assert to_stack_heap(m, Vocabulary.build(["next"], ["a"])).heap == {}


def test_round_trip_preserves_sl_truth():
    voc = Vocabulary.build(["next"], ["a", "b"])
    corpus = [parse_sl(t) for t in ["emp", "ls(a, null)", "ls(a, b) * ls(b, null)", "a |-> [next: b]",
                                    "ls(a, b) * ls(b, a)"]]
    for m in all_structures(2, ["next"], [], ["a", "b"]):
        back = from_stack_heap(to_stack_heap(m, voc), reserve=1, fields=["next"])
        for phi in corpus:
            assert eval_sl(phi, m, ["next"]) == eval_sl(phi, back, ["next"])


def test_show_round_trip():
    for t in ["emp", LOOP, "a = b & c != null | a |-> [next: c, g: T] * ls(c, null)"]:
        phi = parse_sl(t)
        assert parse_sl(show_sl(phi)) == phi


def test_alpha_and_beta_follow_sl_on_loop_structure():
    phi = parse_sl(LOOP)
    m = loop_structure()
    a, names = alpha(phi, fields=["next"])
    parts = sl_partition(phi, m)
    assert dl.eval_formula(a, m.replace(unary=dict(zip(names, parts))))
    assert fo.eval_ct2(beta(phi, fields=["next"]), m)
