"""Bundled corpus files and concrete states of the company example."""
from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Mapping

from .annotations import parse_annotated
from .memstruct import MemoryStructure, Vocabulary, add_reserve, make_structure
from .prog import ProgramGraph


def corpus_path(name: str) -> Path:
    """Path of a bundled corpus file."""
    return Path(str(resources.files("shapecontent") / "corpus" / name))


def load_corpus(name: str) -> ProgramGraph:
    """Parse a bundled annotation file (``company.sv``, ``formulas.dl``, ...)."""
    return parse_annotated(corpus_path(name).read_text(encoding="utf-8"))


def company_vocab() -> Vocabulary:
    return Vocabulary.build(["next", "wrkFor", "mngBy", "isMngr"], ["eHd", "pHd", "e", "proj"],
                            ["ELst", "PLst", "Boolean"], [], ["ELst", "PLst", "wrkFor"])


def company_init(employees: int, projects: int, works: Mapping[int, int] | None = None,
                 managers: Mapping[int, int] | None = None, *, reserve: int = 4) -> MemoryStructure:
    """Initial state with the given lists, ghosts equal to the current values.

    ``works`` maps employee index to project index; ``managers`` maps project
    index to the employee that manages it (who must work for it).
    """
    works = dict(works or {})
    managers = dict(managers or {})
    for p, m in managers.items():
        if works.get(m) != p:
            raise ValueError(f"manager {m} of project {p} does not work for it")
    emp = [3 + i for i in range(employees)]
    prj = [3 + employees + j for j in range(projects)]
    cells = emp + prj
    chain = lambda xs: {a: (xs[i + 1] if i + 1 < len(xs) else 0) for i, a in enumerate(xs)}
    fields = {
        "next": {**chain(emp), **chain(prj)},
        "wrkFor": {a: (prj[works[i]] if i in works else 0) for i, a in enumerate(emp)},
        "mngBy": {a: (emp[managers[j]] if j in managers else 0) for j, a in enumerate(prj)},
        "isMngr": {a: (1 if i in managers.values() else 2) for i, a in enumerate(emp)},
    }
    consts = {"eHd": emp[0] if emp else 0, "pHd": prj[0] if prj else 0, "e": 0, "proj": 0}
    m = make_structure(len(cells), fields.keys(), alloc=cells, consts=consts, field_values=fields,
                       unary={"ELst": emp, "PLst": prj, "Boolean": {1, 2},
                              "ELst_gho": emp, "PLst_gho": prj})
    m = m.replace(binary={"wrkFor_gho": m.role("wrkFor")})
    return add_reserve(m, company_vocab(), reserve)


# five initial states: 1-3 employees, 0-2 projects
COMPANY_INITS = (
    dict(employees=1, projects=0),
    dict(employees=2, projects=1, works={0: 0}),
    dict(employees=2, projects=2, works={0: 1, 1: 0}, managers={1: 0}),
    dict(employees=3, projects=1, works={1: 0}, managers={0: 1}),
    dict(employees=3, projects=2, works={0: 0, 2: 1}, managers={0: 0}),
)


def company_inits(reserve: int = 4) -> list[MemoryStructure]:
    return [company_init(**kw, reserve=reserve) for kw in COMPANY_INITS]
