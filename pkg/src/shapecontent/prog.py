"""Loopless programs, their operational semantics, and annotated program graphs."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import ProgramError
from .memstruct import (ALLOC, FALSE, GHOST_SUFFIX, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE, MemoryStructure,
                        Vocabulary)

# ----------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class FieldRead:
    var: str
    field: str

    def __str__(self):
        return f"{self.var}.{self.field}"


@dataclass(frozen=True)
class Null:
    def __str__(self):
        return "null"


@dataclass(frozen=True)
class BoolLit:
    """T or F; only used for the abort flag of instrumented programs."""

    value: bool

    def __str__(self):
        return "T" if self.value else "F"


Expr = Var | FieldRead | Null | BoolLit


# boolean conditions

@dataclass(frozen=True)
class Eq:
    left: Expr
    right: Expr

    def __str__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class BNot:
    arg: object

    def __str__(self):
        return f"~({self.arg})"


@dataclass(frozen=True)
class BAnd:
    left: object
    right: object

    def __str__(self):
        return f"({self.left}) and ({self.right})"


@dataclass(frozen=True)
class BOr:
    left: object
    right: object

    def __str__(self):
        return f"({self.left}) or ({self.right})"


@dataclass(frozen=True)
class BConst:
    value: bool

    def __str__(self):
        return "T" if self.value else "F"


@dataclass(frozen=True)
class Allocated:
    """Instrumentation guard: the variable points to an allocated cell."""

    var: str

    def __str__(self):
        return f"allocated({self.var})"


# commands

@dataclass(frozen=True)
class Skip:
    def __str__(self):
        return "skip"


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    label: str | None = None

    def __str__(self):
        return f"{self.var} := {self.expr}"


@dataclass(frozen=True)
class FieldAssign:
    var: str
    field: str
    expr: Expr

    def __str__(self):
        return f"{self.var}.{self.field} := {self.expr}"


@dataclass(frozen=True)
class New:
    var: str
    label: str | None = None

    def __str__(self):
        return f"{self.var} := new"


@dataclass(frozen=True)
class Dispose:
    var: str

    def __str__(self):
        return f"dispose({self.var})"


@dataclass(frozen=True)
class Seq:
    cmds: tuple

    def __str__(self):
        return "; ".join(str(c) for c in self.cmds)


@dataclass(frozen=True)
class IfThen:
    cond: object
    then: object

    def __str__(self):
        return f"if ({self.cond}) then {{{self.then}}}"


@dataclass(frozen=True)
class IfThenElse:
    cond: object
    then: object
    orelse: object

    def __str__(self):
        return f"if ({self.cond}) then {{{self.then}}} else {{{self.orelse}}}"


@dataclass(frozen=True)
class Assume:
    cond: object

    def __str__(self):
        return f"assume({self.cond})"


def seq(*cmds) -> object:
    flat = []
    for c in cmds:
        if isinstance(c, Seq):
            flat.extend(c.cmds)
        elif not isinstance(c, Skip):
            flat.append(c)
    if not flat:
        return Skip()
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


def commands(s) -> Iterable:
    """All commands of ``s`` in program order, nested ones included."""
    yield s
    if isinstance(s, Seq):
        for c in s.cmds:
            yield from commands(c)
    elif isinstance(s, IfThen):
        yield from commands(s.then)
    elif isinstance(s, IfThenElse):
        yield from commands(s.then)
        yield from commands(s.orelse)


def reads_in(x) -> list[FieldRead]:
    """Field dereferences of an expression or condition."""
    if isinstance(x, FieldRead):
        return [x]
    if isinstance(x, Eq):
        return reads_in(x.left) + reads_in(x.right)
    if isinstance(x, BNot):
        return reads_in(x.arg)
    if isinstance(x, (BAnd, BOr)):
        return reads_in(x.left) + reads_in(x.right)
    return []


def program_vars(s) -> set:
    out = set()

    def expr(e):
        if isinstance(e, Var):
            out.add(e.name)
        elif isinstance(e, FieldRead):
            out.add(e.var)

    def cond(b):
        if isinstance(b, Eq):
            expr(b.left)
            expr(b.right)
        elif isinstance(b, BNot):
            cond(b.arg)
        elif isinstance(b, (BAnd, BOr)):
            cond(b.left)
            cond(b.right)
        elif isinstance(b, Allocated):
            out.add(b.var)

    for c in commands(s):
        if isinstance(c, (Assign, New, Dispose, FieldAssign)):
            out.add(c.var)
        if isinstance(c, (Assign, FieldAssign)):
            expr(c.expr)
        if isinstance(c, (IfThen, IfThenElse, Assume)):
            cond(c.cond)
    return out


def program_fields(s) -> set:
    out = set()
    for c in commands(s):
        if isinstance(c, FieldAssign):
            out.add(c.field)
        if isinstance(c, (Assign, FieldAssign)) and isinstance(c.expr, FieldRead):
            out.add(c.expr.field)
        if isinstance(c, (IfThen, IfThenElse, Assume)):
            out |= {r.field for r in reads_in(c.cond)}
    return out


# ----------------------------------------------------------------------
# desugaring and labels


def is_desugared(s) -> bool:
    for c in commands(s):
        if isinstance(c, IfThen):
            return False
        if isinstance(c, FieldAssign) and isinstance(c.expr, FieldRead):
            return False
    return True


def desugar(s, avoid: Iterable[str] = ()):
    """Remove one-armed ifs and field-to-field copies (fresh ``tmp_k`` temporaries)."""
    taken = set(avoid) | program_vars(s)
    counter = itertools.count()

    def fresh():
        while True:
            name = f"tmp_{next(counter)}"
            if name not in taken:
                taken.add(name)
                return name

    def go(c):
        if isinstance(c, Seq):
            return Seq(tuple(go(x) for x in c.cmds))
        if isinstance(c, IfThen):
            return IfThenElse(c.cond, go(c.then), Skip())
        if isinstance(c, IfThenElse):
            return IfThenElse(c.cond, go(c.then), go(c.orelse))
        if isinstance(c, FieldAssign) and isinstance(c.expr, FieldRead):
            t = fresh()
            return Seq((Assign(t, c.expr), FieldAssign(c.var, c.field, Var(t))))
        return c

    if is_desugared(s):
        return s
    return go(s)


def labels_of(s) -> list[str]:
    return [c.label for c in commands(s)
            if isinstance(c, New) or (isinstance(c, Assign) and isinstance(c.expr, FieldRead))
            if c.label is not None]


def needs_label(c) -> bool:
    return isinstance(c, New) or (isinstance(c, Assign) and isinstance(c.expr, FieldRead))


def assign_labels(s, avoid: Iterable[str] = (), prefix: str = "y_", start: int = 0):
    """Give every unlabeled new / field-read command a fresh label ``y_k``."""
    taken = set(avoid) | set(labels_of(s))
    counter = itertools.count(start)

    def fresh():
        while True:
            name = f"{prefix}{next(counter)}"
            if name not in taken:
                taken.add(name)
                return name

    def go(c):
        if isinstance(c, Seq):
            return Seq(tuple(go(x) for x in c.cmds))
        if isinstance(c, IfThen):
            return IfThen(c.cond, go(c.then))
        if isinstance(c, IfThenElse):
            return IfThenElse(c.cond, go(c.then), go(c.orelse))
        if needs_label(c) and c.label is None:
            return replace(c, label=fresh())
        return c

    out = go(s)
    seen = labels_of(out)
    if len(seen) != len(set(seen)):
        raise ProgramError(f"duplicate command labels in {out}")
    return out


# ----------------------------------------------------------------------
# operational semantics


@dataclass(frozen=True)
class ResultStructure:
    structure: MemoryStructure
    choices: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Abort:
    reason: str = ""
    choices: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class OutOfReserve:
    reason: str = "MemPool reserve exhausted"


RunOutcome = ResultStructure | Abort | OutOfReserve


class _Err(Exception):
    pass


class _Abort(Exception):
    pass


class _NoReserve(Exception):
    pass


class _State:
    def __init__(self, struct: MemoryStructure, fields: Iterable[str], choices):
        self.size = struct.size
        self.consts = dict(struct.consts)
        self.alloc = set(struct.concept(ALLOC))
        self.pool = set(struct.concept(MEMPOOL))
        self.targets = set(struct.concept(POSSIBLE_TARGETS))
        self.fields = {}
        for f in fields:
            fn = {}
            for a, b in struct.role(f):
                fn[a] = b
            self.fields[f] = fn
        self.base = struct
        self.choices = dict(choices) if choices is not None else None
        self.trace: dict[str, int] = {}

    def var(self, v: str) -> int:
        try:
            return self.consts[v]
        except KeyError:
            raise ProgramError(f"variable {v!r} is not interpreted") from None

    def expr(self, e) -> int:
        if isinstance(e, Var):
            return self.var(e.name)
        if isinstance(e, Null):
            return self.consts[NULL]
        if isinstance(e, BoolLit):
            return self.consts[TRUE if e.value else FALSE]
        if isinstance(e, FieldRead):
            a = self.var(e.var)
            if a not in self.alloc:
                raise _Err(f"dereference of unallocated {e.var}")
            try:
                return self.fields[e.field][a]
            except KeyError:
                raise ProgramError(f"field {e.field!r} is not interpreted") from None
        raise TypeError(e)

    def cond(self, b) -> bool:
        # strict evaluation: an err anywhere makes the whole condition err
        if isinstance(b, Eq):
            left, right = self.expr(b.left), self.expr(b.right)
            return left == right
        if isinstance(b, BNot):
            return not self.cond(b.arg)
        if isinstance(b, BAnd):
            left, right = self.cond(b.left), self.cond(b.right)
            return left and right
        if isinstance(b, BOr):
            left, right = self.cond(b.left), self.cond(b.right)
            return left or right
        if isinstance(b, BConst):
            return b.value
        if isinstance(b, Allocated):
            return self.var(b.var) in self.alloc
        raise TypeError(b)

    def exec(self, c) -> None:
        if isinstance(c, Skip):
            return
        if isinstance(c, Seq):
            for x in c.cmds:
                self.exec(x)
            return
        if isinstance(c, Assign):
            v = self.expr(c.expr)
            if c.label is not None and isinstance(c.expr, FieldRead):
                self.trace[c.label] = v
                if self.choices is not None and c.label in self.choices and self.choices[c.label] != v:
                    raise _Abort(f"field read {c.label} does not match its witness")
            self.consts[c.var] = v
            return
        if isinstance(c, FieldAssign):
            a = self.var(c.var)
            if a not in self.alloc:
                raise _Err(f"field write through unallocated {c.var}")
            v = self.expr(c.expr)
            self.fields.setdefault(c.field, {})[a] = v
            return
        if isinstance(c, New):
            if self.choices is not None and c.label in self.choices:
                t = self.choices[c.label]
                if t not in self.pool:
                    raise _Abort(f"witness for {c.label} is not in MemPool")
            else:
                if not self.pool:
                    raise _NoReserve()
                t = min(self.pool)
            if c.label is not None:
                self.trace[c.label] = t
            self.pool.discard(t)
            self.alloc.add(t)
            self.consts[c.var] = t
            return
        if isinstance(c, Dispose):
            a = self.var(c.var)
            if a not in self.alloc:
                raise _Abort(f"dispose of unallocated {c.var}")
            self.alloc.discard(a)
            self.targets.add(a)
            null = self.consts[NULL]
            for fn in self.fields.values():
                fn[a] = null
            return
        if isinstance(c, IfThenElse):
            self.exec(c.then if self.cond(c.cond) else c.orelse)
            return
        if isinstance(c, IfThen):
            if self.cond(c.cond):
                self.exec(c.then)
            return
        if isinstance(c, Assume):
            if not self.cond(c.cond):
                raise _Abort("assumption failed")
            return
        raise TypeError(c)

    def result(self) -> MemoryStructure:
        binary = {f: frozenset(fn.items()) for f, fn in self.fields.items()}
        return MemoryStructure(
            self.size, self.consts,
            {**self.base.unary, ALLOC: frozenset(self.alloc), MEMPOOL: frozenset(self.pool),
             POSSIBLE_TARGETS: frozenset(self.targets)},
            {**self.base.binary, **binary}, self.base.names)


def run(s, struct: MemoryStructure, choices: Mapping[str, int] | None = None, *,
        fields: Iterable[str] | None = None,
        post: Mapping[str, Iterable] | None = None) -> RunOutcome:
    """Execute a loopless program.

    ``choices`` plays the role of the witness tuple of the labeled relation:
    a field read labeled ``y`` must produce ``choices[y]`` and a ``new``
    labeled ``y`` must pick ``choices[y]``.  Without choices, ``new`` takes
    the lowest-numbered MemPool cell.  ``fields`` defaults to the fields the
    program mentions.  ``post`` overrides relations of the result (the
    semantics lets relations outside the program's reach take any value).
    """
    if fields is None:
        fields = program_fields(s) & set(struct.binary)
        if any(isinstance(c, Dispose) for c in commands(s)):
            fields |= _field_like(struct)
    fields = set(fields)
    st = _State(struct, fields, choices)
    try:
        st.exec(s)
    except _Err as exc:
        return Abort(str(exc), st.trace)
    except _Abort as exc:
        return Abort(str(exc), st.trace)
    except _NoReserve:
        return OutOfReserve()
    out = st.result()
    if post:
        out = out.replace(unary={k: v for k, v in post.items() if k in out.unary},
                          binary={k: v for k, v in post.items() if k in out.binary})
    return ResultStructure(out, st.trace)


def _field_like(struct: MemoryStructure) -> set:
    # non-ghost binary relations that are total functions on Addresses; used
    # by dispose when the caller does not say which relations are fields
    fields = getattr(struct, "field_names", None)
    if fields is not None:
        return set(fields)
    addresses = struct.concept("Addresses")
    out = set()
    for name, rel in struct.binary.items():
        if name.endswith(GHOST_SUFFIX):
            continue
        srcs = [a for a, _ in rel]
        if len(srcs) == len(set(srcs)) and set(srcs) == set(addresses):
            out.add(name)
    return out


# ----------------------------------------------------------------------
# program graphs


@dataclass
class ProgramGraph:
    locations: tuple
    edges: tuple
    init: str
    shp: dict
    cnt: dict
    code: dict
    vocab: Vocabulary
    defs: dict = field(default_factory=dict)
    formulas: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    decls: dict = field(default_factory=dict)

    def __post_init__(self):
        self.check()

    def check(self) -> None:
        locs = list(self.locations)
        if len(locs) != len(set(locs)):
            raise ProgramError("duplicate location")
        if locs and self.init not in locs:
            raise ProgramError(f"init location {self.init!r} is not declared")
        if len(self.edges) != len(set(self.edges)):
            raise ProgramError("multiple edges between the same locations")
        for a, b in self.edges:
            if a not in locs or b not in locs:
                raise ProgramError(f"edge {a} -> {b} mentions an undeclared location")
            if b == self.init:
                raise ProgramError(f"edge {a} -> {b} enters the init location")
            if (a, b) not in self.code:
                raise ProgramError(f"edge {a} -> {b} has no code")
        for loc in locs:
            if loc not in self.shp or loc not in self.cnt:
                raise ProgramError(f"location {loc} lacks a shp or cnt annotation")

    def full_cnt(self, loc):
        from .dl import conj

        return conj(list(self.defs.get(loc, ())) + [self.cnt[loc]])

    def successors(self, loc) -> list:
        return [e for e in self.edges if e[0] == loc]


def run_path(g: ProgramGraph, path: Sequence[tuple], struct: MemoryStructure,
             choices: Mapping[str, int] | None = None) -> RunOutcome:
    for i in range(1, len(path)):
        if path[i - 1][1] != path[i][0]:
            raise ProgramError(f"path edges {path[i - 1]} and {path[i]} are not consecutive")
    cur = struct
    trace = {}
    for e in path:
        if e not in g.code:
            raise ProgramError(f"{e} is not an edge of the program")
        out = run(g.code[e], cur, choices, fields=g.vocab.fields & set(cur.binary))
        if not isinstance(out, ResultStructure):
            return out
        trace.update(out.choices)
        cur = out.structure
    return ResultStructure(cur, trace)


def parse_program(text: str) -> ProgramGraph:
    from .annotations import parse_annotated

    return parse_annotated(text)
