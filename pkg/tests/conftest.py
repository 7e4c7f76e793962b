import sys

import pytest

from shapecontent.memstruct import Vocabulary, make_structure


@pytest.fixture
def list_vocab():
    return Vocabulary.build(["next"], ["x", "y"], ["C"])


@pytest.fixture
def minimal():
    """Universe {null, T, F, m3}; the single address sits in MemPool."""
    return make_structure(1, ["next"])


def chain(n: int, fields=("next",), **kw):
    """n allocated cells 3..n+2 linked by next, the last one pointing to null."""
    vals = {a: (a + 1 if a + 1 < 3 + n else 0) for a in range(3, 3 + n)}
    return make_structure(n, fields, alloc=range(3, 3 + n), field_values={"next": vals}, **kw)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
