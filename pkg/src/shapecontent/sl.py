"""SLls assertions: list segments and points-to cells under separating conjunction."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import VocabularyError
from .memstruct import (ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE,
                        MemoryStructure, Vocabulary)

NEXT = "next"


@dataclass(frozen=True)
class PureEq:
    left: str
    right: str


@dataclass(frozen=True)
class PureNeq:
    left: str
    right: str


@dataclass(frozen=True)
class PureTrue:
    pass


@dataclass(frozen=True)
class PointsTo:
    var: str
    bindings: tuple  # ((field, expr), ...)


@dataclass(frozen=True)
class Ls:
    start: str
    end: str


@dataclass(frozen=True)
class SLFormula:
    """``pure | spatial``; an empty ``spatial`` tuple is emp."""

    pure: tuple = ()
    spatial: tuple = ()

    @property
    def is_emp(self) -> bool:
        return not self.spatial

    def variables(self) -> set:
        out = set()
        for a in self.pure:
            if not isinstance(a, PureTrue):
                out |= {a.left, a.right}
        for c in self.spatial:
            if isinstance(c, Ls):
                out |= {c.start, c.end}
            else:
                out.add(c.var)
                out |= {e for _, e in c.bindings}
        out.discard(NULL)
        return out

    def fields(self) -> set:
        out = set()
        for c in self.spatial:
            if isinstance(c, Ls):
                out.add(NEXT)
            else:
                out |= {f for f, _ in c.bindings}
        return out

    def __str__(self):
        return show_sl(self)


def show_sl(phi: SLFormula) -> str:
    def atom(a):
        if isinstance(a, PureTrue):
            return "true"
        op = "=" if isinstance(a, PureEq) else "!="
        return f"{a.left} {op} {a.right}"

    def chunk(c):
        if isinstance(c, Ls):
            return f"ls({c.start}, {c.end})"
        inner = ", ".join(f"{f}: {e}" for f, e in c.bindings)
        return f"{c.var} |-> [{inner}]"

    spatial = " * ".join(chunk(c) for c in phi.spatial) if phi.spatial else "emp"
    if not phi.pure:
        return spatial
    return " & ".join(atom(a) for a in phi.pure) + " | " + spatial


# ----------------------------------------------------------------------
# direct semantics over memory structures


def _value(struct: MemoryStructure, e: str) -> int:
    return struct.const(e)


def chunk_cells(phi: SLFormula, struct: MemoryStructure, fields: Iterable[str] | None = None,
                next_field: str = NEXT) -> list[frozenset] | None:
    """The cell set of every chunk, or None when some chunk cannot be matched.

    Every chunk's cells are forced by the structure: a points-to chunk owns the
    cell of its variable, a list segment owns the next-chain from its start up
    to (excluding) its end.  Disjointness and coverage are checked by the caller.
    """
    alloc = struct.concept(ALLOC)
    limit = len(alloc)
    fields = set(fields) if fields is not None else None
    out = []
    for c in phi.spatial:
        if isinstance(c, PointsTo):
            v = _value(struct, c.var)
            if v not in alloc:
                return None
            listed = dict(c.bindings)
            check = set(listed) | (fields or set())
            for f in check:
                want = _value(struct, listed.get(f, NULL))
                if struct.field_value(f, v) != want:
                    return None
            out.append(frozenset({v}))
        else:
            start, end = _value(struct, c.start), _value(struct, c.end)
            cells = []
            cur = start
            while cur != end:
                if cur not in alloc or cur in cells or len(cells) > limit:
                    return None
                cells.append(cur)
                nxt = struct.field_value(next_field, cur)
                if nxt is None:
                    return None
                cur = nxt
            out.append(frozenset(cells))
    return out


def eval_sl(phi: SLFormula, struct: MemoryStructure, fields: Iterable[str] | None = None,
            next_field: str = NEXT) -> bool:
    """Truth of an SLls formula; ``fields`` lists the fields that default to null in points-to."""
    return sl_partition(phi, struct, fields, next_field) is not None


def sl_partition(phi: SLFormula, struct: MemoryStructure, fields: Iterable[str] | None = None,
                 next_field: str = NEXT) -> list[frozenset] | None:
    """Chunk cell sets when ``struct`` satisfies ``phi``, else None."""
    for a in phi.pure:
        if isinstance(a, PureTrue):
            continue
        same = _value(struct, a.left) == _value(struct, a.right)
        if same != isinstance(a, PureEq):
            return None
    parts = chunk_cells(phi, struct, fields, next_field)
    if parts is None:
        return None
    seen = set()
    for p in parts:
        if seen & p:
            return None
        seen |= p
    if seen != set(struct.concept(ALLOC)):
        return None
    return parts


# ----------------------------------------------------------------------
# stack/heap view

NIL, TRUE_V, FALSE_V = "nil", "true", "false"


@dataclass(frozen=True)
class StackHeap:
    stack: Mapping[str, object]
    heap: Mapping[object, Mapping[str, object]] = field(default_factory=dict)


def to_stack_heap(struct: MemoryStructure, vocab: Vocabulary) -> StackHeap:
    aux = {struct.const(NULL): NIL, struct.const(TRUE): TRUE_V, struct.const(FALSE): FALSE_V}

    def val(e):
        return aux.get(e, struct.element_name(e))

    stack = {v: val(struct.const(v)) for v in sorted(vocab.var_consts)}
    heap = {}
    for a in sorted(struct.concept(ALLOC)):
        heap[struct.element_name(a)] = {f: val(struct.field_value(f, a)) for f in sorted(vocab.fields)}
    return StackHeap(stack, heap)


def from_stack_heap(sh: StackHeap, reserve: int = 1, fields: Iterable[str] = ()) -> MemoryStructure:
    """Build the memory structure of a stack and heap; addresses keep their names."""
    fields = sorted(set(fields) | {f for cell in sh.heap.values() for f in cell})
    special = {NIL: 0, TRUE_V: 1, FALSE_V: 2}
    addresses = list(sh.heap)
    for v in list(sh.stack.values()) + [x for cell in sh.heap.values() for x in cell.values()]:
        if v not in special and v not in addresses:
            addresses.append(v)
    names = [NULL, TRUE, FALSE] + [str(a) for a in addresses]
    idx = {a: 3 + i for i, a in enumerate(addresses)}
    idx.update(special)
    n_real = len(names)
    pool = list(range(n_real, n_real + reserve))
    names += [f"pool{i}" for i in range(reserve)]
    size = len(names)
    alloc = frozenset(idx[a] for a in sh.heap)
    addr = frozenset(range(3, size))
    consts = {NULL: 0, TRUE: 1, FALSE: 2}
    for v, x in sh.stack.items():
        if v in consts:
            raise VocabularyError(f"stack variable {v!r} clashes with a required constant")
        consts[v] = idx[x]
    binary = {}
    for f in fields:
        pairs = set()
        for a in addresses:
            target = sh.heap.get(a, {}).get(f, NIL)
            pairs.add((idx[a], idx[target]))
        pairs |= {(p, 0) for p in pool}
        binary[f] = frozenset(pairs)
    unary = {AUX: frozenset({0, 1, 2}), ADDRESSES: addr, ALLOC: alloc,
             MEMPOOL: frozenset(pool), POSSIBLE_TARGETS: addr - alloc - frozenset(pool)}
    return MemoryStructure(size, consts, unary, binary, tuple(names))
