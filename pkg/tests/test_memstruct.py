import json

import pytest

from shapecontent.errors import PreconditionError, StructureFileError, VocabularyError
from shapecontent.memstruct import (ALLOC, MEMPOOL, Vocabulary, add_reserve, allocate, extend_with_ext,
                                    load_structure, dump_structure, make_structure, structure_from_json,
                                    structure_to_json, validate)

from conftest import chain


def conditions(struct, vocab):
    return sorted({v.condition for v in validate(struct, vocab)})


def test_minimal_structure_is_valid(minimal):
    voc = Vocabulary.build(["next"])
    assert validate(minimal, voc) == []


def test_constant_in_mempool_violates_6(minimal):
    voc = Vocabulary.build(["next"], ["x"])
    bad = minimal.replace(consts={"x": 3})
    assert conditions(bad, voc) == [6]
    assert validate(bad, voc)[0].elements == (3,)


def test_field_into_mempool_violates_7():
    voc = Vocabulary.build(["next"])
    m = make_structure(2, ["next"], alloc=[3], field_values={"next": {3: 4}})
    assert 7 in conditions(m, voc)


def test_non_function_field_violates_7(list_vocab):
    m = chain(2).replace(binary={"next": {(3, 4), (3, 0), (4, 0)}})
    assert 7 in conditions(add_reserve(m.replace(consts={"x": 0, "y": 0}, unary={"C": ()}), list_vocab), list_vocab)


def test_dirty_pool_cell_violates_8():
    voc = Vocabulary.build(["next"])
    m = make_structure(2, ["next"], alloc=[3], field_values={"next": {4: 3}})
    assert 8 in conditions(m, voc)


def test_concept_touching_pool_violates_9():
    voc = Vocabulary.build(["next"], [], ["C"])
    m = make_structure(1, ["next"], unary={"C": {3}})
    assert conditions(m, voc) == [9]


def test_empty_pool_reported_as_10():
    voc = Vocabulary.build(["next"])
    assert conditions(chain(1), voc) == [10]


def test_partition_and_aux_conditions():
    voc = Vocabulary.build()
    m = make_structure(2, alloc=[3], targets=[3])
    assert 5 in conditions(m, voc)
    m = make_structure(1).replace(unary={"Aux": {0, 1}})
    assert {3, 4} <= set(conditions(m, voc))


def test_missing_interpretation_is_reported():
    voc = Vocabulary.build(["next"], ["x"])
    assert 0 in conditions(make_structure(1, ["next"]), voc)


def test_validate_is_idempotent(list_vocab):
    m = chain(2).replace(consts={"x": 3}, unary={"C": {3, 9}})
    assert validate(m, list_vocab) == validate(m, list_vocab)


def test_allocate(minimal):
    out = allocate(minimal, 3)
    assert 3 in out.concept(ALLOC) and out.mempool == frozenset()
    with pytest.raises(PreconditionError):
        allocate(out, 3)


def test_allocate_keeps_validity():
    voc = Vocabulary.build(["next"])
    m = make_structure(2, ["next"])
    assert validate(m, voc) == []
    assert validate(allocate(m, 3), voc) == []


def test_extend_with_ext():
    voc = Vocabulary.build(["next"], [], ["ELst"], [], ["ELst"])
    pre = make_structure(3, ["next"], alloc=[3, 4], unary={"ELst": {3}, "ELst_gho": {3}})
    post = pre.replace(unary={"ELst": {3, 4}})
    out = extend_with_ext(pre, post, voc)
    assert out.concept("ELst") == {3} and out.concept("ELst_ext") == {3, 4}
    assert "next_ext" not in out.binary and "ELst_gho_ext" not in out.unary
    for k, v in pre.unary.items():
        assert out.unary[k] == v


def test_extend_with_empty_rem_is_identity(minimal):
    voc = Vocabulary.build(["next"])
    assert extend_with_ext(minimal, minimal, voc) == minimal


def test_extend_universe_mismatch(minimal):
    with pytest.raises(PreconditionError):
        extend_with_ext(minimal, make_structure(2, ["next"]), Vocabulary.build(["next"]))


def test_rem_excludes_required_fields_and_ghosts():
    voc = Vocabulary.build(["next"], ["x"], ["C"], ["r"], ["C"])
    assert voc.rem() == {"C", "r"}
    assert voc.with_ext().ext_of == {"C": "C_ext", "r": "r_ext"}


def test_ghost_twins_are_fresh():
    with pytest.raises(VocabularyError):
        Vocabulary.build([], [], ["C", "C_gho"], [], ["C"])
    with pytest.raises(VocabularyError):
        Vocabulary.build([], [], [], [], ["Alloc"])


def test_ghost_field_follows_field_conditions():
    voc = Vocabulary.build(["next"], [], [], [], ["next"])
    m = add_reserve(chain(2), voc, 1)
    m = m.replace(binary={"next_gho": m.role("next")})
    assert validate(m, voc) == []
    assert 7 in conditions(m.replace(binary={"next_gho": {(3, 4)}}), voc)


def test_json_round_trip(tmp_path, list_vocab):
    m = add_reserve(chain(2).replace(consts={"x": 3, "y": 0}, unary={"C": {4}}), list_vocab, 2)
    doc = structure_to_json(m, list_vocab)
    assert doc["fields"] == ["next"]
    back = structure_from_json(json.loads(json.dumps(doc)))
    assert back == m
    p = tmp_path / "s.json"
    dump_structure(m, p, list_vocab)
    assert load_structure(p) == m


def test_json_partitions_derived():
    doc = {"universe": ["null", "T", "F", "a", "b"], "constants": {"null": "null", "T": "T", "F": "F"},
           "unary": {"Alloc": ["a"], "MemPool": ["b"]}, "binary": {}}
    m = structure_from_json(doc)
    assert m.concept("Aux") == {0, 1, 2} and m.concept("PossibleTargets") == frozenset()
    assert m.concept("Addresses") == {3, 4}


def test_json_loader_rejects_invalid():
    doc = {"universe": ["null", "T", "F", "a"], "constants": {"null": "null", "T": "T", "F": "F", "x": "a"},
           "unary": {"MemPool": ["a"]}, "binary": {}}
    with pytest.raises(StructureFileError) as exc:
        structure_from_json(doc)
    assert [v.condition for v in exc.value.violations] == [6]
    with pytest.raises(StructureFileError):
        structure_from_json({"universe": ["a", "a"]})
    with pytest.raises(StructureFileError):
        structure_from_json({"universe": ["a"], "constants": {"null": "zz"}})


def test_add_reserve_cells_are_clean(list_vocab):
    m = add_reserve(chain(1).replace(consts={"x": 3, "y": 3}, unary={"C": set()}), list_vocab, 3)
    assert m.reserve == 3 and validate(m, list_vocab) == []
    assert all(m.field_value("next", e) == 0 for e in m.mempool)
    assert m.concept(MEMPOOL) == {4, 5, 6}
