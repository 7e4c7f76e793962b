"""Two-variable first-order logic with counting (C2) and its forest extension (CT2)."""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .bits import numpy_ops, select_row, transpose
from .errors import PreconditionError, VocabularyError
from .memstruct import ALLOC

X, Y = "x", "y"


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return f"o:{self.name}"


Term = str | Const  # "x", "y" or a constant


class FO2Formula:
    __slots__ = ()

    def __str__(self):
        return show_fo2(self)

    def __repr__(self):
        return f"<{type(self).__name__} {show_fo2(self)}>"


@dataclass(frozen=True, repr=False)
class Atom1(FO2Formula):
    rel: str
    term: Term


@dataclass(frozen=True, repr=False)
class Atom2(FO2Formula):
    rel: str
    left: Term
    right: Term


@dataclass(frozen=True, repr=False)
class Eq(FO2Formula):
    left: Term
    right: Term


@dataclass(frozen=True, repr=False)
class Truth(FO2Formula):
    value: bool


@dataclass(frozen=True, repr=False)
class Not(FO2Formula):
    arg: FO2Formula


@dataclass(frozen=True, repr=False)
class And(FO2Formula):
    args: tuple


@dataclass(frozen=True, repr=False)
class Or(FO2Formula):
    args: tuple


@dataclass(frozen=True, repr=False)
class Implies(FO2Formula):
    left: FO2Formula
    right: FO2Formula


@dataclass(frozen=True, repr=False)
class Iff(FO2Formula):
    left: FO2Formula
    right: FO2Formula


@dataclass(frozen=True, repr=False)
class Forall(FO2Formula):
    var: str
    body: FO2Formula


@dataclass(frozen=True, repr=False)
class Exists(FO2Formula):
    var: str
    body: FO2Formula


@dataclass(frozen=True, repr=False)
class Count(FO2Formula):
    """Counting quantifier; ``op`` is one of ``>=``, ``<=``, ``=``."""

    op: str
    k: int
    var: str
    body: FO2Formula

    def __post_init__(self):
        if self.op not in (">=", "<=", "="):
            raise ValueError(f"bad counting operator {self.op!r}")
        if self.k < 0:
            raise ValueError("counting bound must be non-negative")


TRUE_F, FALSE_F = Truth(True), Truth(False)


def conj(*parts) -> FO2Formula:
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        elif p != TRUE_F:
            flat.append(p)
    if not flat:
        return TRUE_F
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts) -> FO2Formula:
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.args)
        elif p != FALSE_F:
            flat.append(p)
    if not flat:
        return FALSE_F
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def free_vars(phi: FO2Formula) -> frozenset:
    if isinstance(phi, Atom1):
        return frozenset({phi.term}) if isinstance(phi.term, str) else frozenset()
    if isinstance(phi, (Atom2, Eq)):
        return frozenset(t for t in (phi.left, phi.right) if isinstance(t, str))
    if isinstance(phi, Truth):
        return frozenset()
    if isinstance(phi, Not):
        return free_vars(phi.arg)
    if isinstance(phi, (And, Or)):
        return frozenset().union(*(free_vars(a) for a in phi.args))
    if isinstance(phi, (Implies, Iff)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Forall, Exists, Count)):
        return free_vars(phi.body) - {phi.var}
    raise TypeError(phi)


def relations(phi: FO2Formula) -> tuple[set, set, set]:
    """(constants, unary relation names, binary relation names) used by ``phi``."""
    consts, unary, binary = set(), set(), set()

    def term(t):
        if isinstance(t, Const):
            consts.add(t.name)

    def go(p):
        if isinstance(p, Atom1):
            unary.add(p.rel)
            term(p.term)
        elif isinstance(p, Atom2):
            binary.add(p.rel)
            term(p.left)
            term(p.right)
        elif isinstance(p, Eq):
            term(p.left)
            term(p.right)
        elif isinstance(p, Not):
            go(p.arg)
        elif isinstance(p, (And, Or)):
            for a in p.args:
                go(a)
        elif isinstance(p, (Implies, Iff)):
            go(p.left)
            go(p.right)
        elif isinstance(p, (Forall, Exists, Count)):
            go(p.body)

    go(phi)
    return consts, unary, binary


def check_two_variable(phi: FO2Formula) -> None:
    """Raise ValueError if a variable other than x, y occurs."""
    def term(t):
        if isinstance(t, str) and t not in (X, Y):
            raise ValueError(f"variable {t!r} outside the two-variable fragment")

    def go(p):
        if isinstance(p, Atom1):
            term(p.term)
        elif isinstance(p, (Atom2, Eq)):
            term(p.left)
            term(p.right)
        elif isinstance(p, Not):
            go(p.arg)
        elif isinstance(p, (And, Or)):
            for a in p.args:
                go(a)
        elif isinstance(p, (Implies, Iff)):
            go(p.left)
            go(p.right)
        elif isinstance(p, (Forall, Exists, Count)):
            term(p.var)
            go(p.body)

    go(phi)


# ----------------------------------------------------------------------
# evaluation
#
# A subformula evaluates to a value shaped by its free variables:
#   ""   -> truth value
#   "x"  -> mask of elements a with phi[x:=a]
#   "y"  -> mask over y
#   "xy" -> rows, rows[a] = mask of b with phi[x:=a, y:=b]


class _Ctx:
    __slots__ = ("s", "ops", "n", "full")

    def __init__(self, s):
        self.s = s
        self.ops = s.ops
        self.n = s.size
        self.full = s.full


def _lift(ctx, shape, val, target):
    if shape == target:
        return val
    ops, n, full = ctx.ops, ctx.n, ctx.full
    if target in (X, Y):  # from ""
        return ops.if_b(val, full)
    # target == "xy"
    if shape == "":
        row = ops.if_b(val, full)
        return (row,) * n
    if shape == X:
        return tuple(ops.if_b(ops.has(val, a), full) for a in range(n))
    return (val,) * n  # shape y: independent of x


def _union_shape(a: str, b: str) -> str:
    vs = set(a) | set(b)
    return "".join(v for v in (X, Y) if v in vs)


def _const(ctx, t: Const):
    return ctx.s.const(t.name)


def _bit(ctx, e):
    if isinstance(e, int):
        return 1 << e
    return ctx.ops.np.left_shift(1, e)


def _ev(ctx, phi):
    """Return (shape, value)."""
    ops, n, full = ctx.ops, ctx.n, ctx.full
    if isinstance(phi, Truth):
        return "", phi.value
    if isinstance(phi, Atom1):
        m = ctx.s.mask(phi.rel)
        if isinstance(phi.term, Const):
            return "", ops.has(m, _const(ctx, phi.term))
        return phi.term, m
    if isinstance(phi, Atom2):
        rows = ctx.s.rows(phi.rel)
        l, r = phi.left, phi.right
        if isinstance(l, Const) and isinstance(r, Const):
            return "", ops.has(select_row(rows, _const(ctx, l), n, ops), _const(ctx, r))
        if isinstance(l, Const):
            return r, select_row(rows, _const(ctx, l), n, ops)
        if isinstance(r, Const):
            c = _const(ctx, r)
            m = 0
            for a in range(n):
                m = m | ops.bit_if(ops.has(rows[a], c), a)
            return l, m
        if l == r:
            m = 0
            for a in range(n):
                m = m | ops.bit_if(ops.has(rows[a], a), a)
            return l, m
        if l == X:
            return "xy", tuple(rows)
        return "xy", transpose(rows, n, ops)
    if isinstance(phi, Eq):
        l, r = phi.left, phi.right
        if isinstance(l, Const) and isinstance(r, Const):
            return "", _const(ctx, l) == _const(ctx, r)
        if isinstance(l, Const):
            l, r = r, l
        if isinstance(r, Const):
            return l, _bit(ctx, _const(ctx, r))
        if l == r:
            return l, full
        return "xy", tuple(1 << a for a in range(n))
    if isinstance(phi, Not):
        shape, v = _ev(ctx, phi.arg)
        if shape == "":
            return "", ops.not_(v)
        if shape == "xy":
            return "xy", tuple(full & ~r for r in v)
        return shape, full & ~v
    if isinstance(phi, (And, Or)):
        parts = [_ev(ctx, a) for a in phi.args]
        return _combine(ctx, parts, isinstance(phi, And))
    if isinstance(phi, Implies):
        return _combine(ctx, [_ev(ctx, Not(phi.left)), _ev(ctx, phi.right)], False)
    if isinstance(phi, Iff):
        a, b = _ev(ctx, phi.left), _ev(ctx, phi.right)
        shape = _union_shape(a[0], b[0])
        va, vb = _lift(ctx, a[0], a[1], shape), _lift(ctx, b[0], b[1], shape)
        if shape == "":
            return "", va == vb
        if shape == "xy":
            return "xy", tuple(full & ~(p ^ q) for p, q in zip(va, vb))
        return shape, full & ~(va ^ vb)
    if isinstance(phi, (Forall, Exists, Count)):
        shape, v = _ev(ctx, phi.body)
        var = phi.var
        if var not in shape:
            return shape, _vacuous(ctx, phi, shape, v)
        if shape == var:
            return "", _test(ctx, phi, v)
        # shape "xy": quantify one variable, keep the other
        rows = v if var == Y else transpose(v, n, ops)
        keep = X if var == Y else Y
        m = 0
        for a in range(n):
            m = m | ops.bit_if(_test(ctx, phi, rows[a]), a)
        return keep, m
    raise TypeError(f"not an FO2 formula: {phi!r}")


def _combine(ctx, parts, is_and):
    shape = ""
    for s, _ in parts:
        shape = _union_shape(shape, s)
    vals = [_lift(ctx, s, v, shape) for s, v in parts]
    out = vals[0]
    for v in vals[1:]:
        if shape == "xy":
            out = tuple((a & b) if is_and else (a | b) for a, b in zip(out, v))
        else:
            out = (out & v) if is_and else (out | v)
    return shape, out


def _cmp(op, count, k):
    if op == ">=":
        return count >= k
    if op == "<=":
        return count <= k
    return count == k


def _test(ctx, q, m):
    """Quantifier test on a witness mask."""
    ops = ctx.ops
    if isinstance(q, Exists):
        return ops.nz(m)
    if isinstance(q, Forall):
        return m == ctx.full
    return _cmp(q.op, ops.popcount(m), q.k)


def _vacuous(ctx, q, shape, v):
    # the body does not mention the variable: all or none of the n elements witness it
    if isinstance(q, (Exists, Forall)):
        return v
    when_true = _cmp(q.op, ctx.n, q.k)
    when_false = _cmp(q.op, 0, q.k)
    if when_true == when_false:
        return _lift(ctx, "", when_true, shape) if shape else when_true
    if shape == "":
        return v if when_true else ctx.ops.not_(v)
    if shape == "xy":
        return v if when_true else tuple(ctx.full & ~r for r in v)
    return v if when_true else ctx.full & ~v


def compile_fo2(phi: FO2Formula):
    def run(s):
        shape, v = _ev(_Ctx(s), phi)
        if shape:
            raise ValueError(f"formula has free variables: {phi}")
        return v
    return run


def eval_fo2(phi: FO2Formula, struct) -> bool:
    """Truth of a closed C2 formula (a lane array for batch views)."""
    v = compile_fo2(phi)(struct)
    return v if struct.ops.batched else bool(v)


def eval_open(phi: FO2Formula, struct):
    """Extension of a formula with free variables: frozenset of elements or pairs."""
    shape, v = _ev(_Ctx(struct), phi)
    n = struct.size
    if shape == "":
        return bool(v)
    if shape in (X, Y):
        return frozenset(a for a in range(n) if (v >> a) & 1)
    return frozenset((a, b) for a in range(n) for b in range(n) if (v[a] >> b) & 1)


# ----------------------------------------------------------------------
# forests


def is_forest(rel: Iterable[tuple], universe: Iterable) -> bool:
    """In-degree at most one and no cycles (edges point parent to child)."""
    universe = set(universe)
    parent = {}
    for a, b in rel:
        if a not in universe or b not in universe:
            raise ValueError(f"pair {(a, b)} outside the universe")
        if b in parent:
            return False
        parent[b] = a
    # with in-degree <= 1 every cycle is found by walking up from some node
    done = set()
    for start in parent:
        path = set()
        cur = start
        while cur in parent and cur not in done:
            if cur in path:
                return False
            path.add(cur)
            cur = parent[cur]
        done |= path
    return True


def forest_rows(rows, n: int, ops):
    """Truth (per lane) of forest-ness for a row-encoded relation."""
    cols = transpose(rows, n, ops)
    ok = ops.all_(ops.zero(c & (c - 1)) for c in cols)
    # transitive closure by repeated composition; n rounds suffice
    reach = tuple(rows)
    for _ in range(max(1, n.bit_length())):
        nxt = []
        for a in range(n):
            m = reach[a]
            for b in range(n):
                m = m | ops.if_b(ops.has(reach[a], b), reach[b])
            nxt.append(m)
        reach = tuple(nxt)
    acyclic = ops.all_(ops.not_(ops.has(reach[a], a)) for a in range(n))
    return ok & acyclic if ops.batched else (ok and acyclic)


# ----------------------------------------------------------------------
# CT2


CANONICAL, EXHAUSTIVE = "canonical", "exhaustive"
EXHAUSTIVE_CAP = 7


@dataclass(frozen=True)
class Chunk:
    """Partition concept of one spatial chunk; ``head`` is set for list segments."""

    concept: str
    head: str | None = None


@dataclass(frozen=True)
class CT2Formula:
    """``exists F1 . body and forest(F1)``.

    The partition concepts in ``chunks`` are fresh symbols; when a structure
    does not interpret them, evaluation treats them as existentially
    quantified over the partitions of Alloc.
    """

    body: FO2Formula
    forest: str = "F1"
    chunks: tuple = ()
    next_field: str = "next"

    def __str__(self):
        return f"exists {self.forest} . forest({self.forest}) & {show_fo2(self.body)}"


class _Overlay:
    """A structure with some extra (or replaced) interpretations."""

    def __init__(self, base, masks=None, rows=None):
        self.base = base
        self.size = base.size
        self.full = base.full
        self.ops = base.ops
        self._masks = masks or {}
        self._rows = rows or {}

    def const(self, name):
        return self.base.const(name)

    def mask(self, name):
        if name in self._masks:
            return self._masks[name]
        return self.base.mask(name)

    def rows(self, name):
        if name in self._rows:
            return self._rows[name]
        return self.base.rows(name)


def _interprets(struct, name) -> bool:
    try:
        struct.mask(name)
        return True
    except VocabularyError:
        return False


def partition_choices(phi: CT2Formula, struct):
    """Interpretations of the chunk concepts to try on ``struct``."""
    names = [c.concept for c in phi.chunks]
    missing = [p for p in names if not _interprets(struct, p)]
    if not missing:
        yield {}
        return
    if struct.ops.batched:
        raise PreconditionError("batch evaluation needs interpreted partition concepts")
    alloc = sorted(struct.concept(ALLOC)) if hasattr(struct, "concept") else sorted(
        a for a in range(struct.size) if (struct.mask(ALLOC) >> a) & 1)
    fixed = {p: struct.mask(p) for p in names if p not in missing}
    free_cells = [a for a in alloc if not any((m >> a) & 1 for m in fixed.values())]
    for assign in itertools.product(range(len(missing)), repeat=len(free_cells)):
        masks = dict.fromkeys(missing, 0)
        for a, i in zip(free_cells, assign):
            masks[missing[i]] |= 1 << a
        yield masks


def canonical_forest(phi: CT2Formula, struct):
    """Union over list chunks P of next restricted to P x P, as rows."""
    ops, n = struct.ops, struct.size
    nxt = struct.rows(phi.next_field)
    inside = [0] * n
    for c in phi.chunks:
        if c.head is None:
            continue
        p = struct.mask(c.concept)
        for a in range(n):
            inside[a] = inside[a] | ops.if_b(ops.has(p, a), p)
    return tuple(nxt[a] & inside[a] for a in range(n))


def eval_ct2(phi: CT2Formula, struct, strategy: str = CANONICAL, cap: int = EXHAUSTIVE_CAP):
    body = compile_fo2(phi.body)
    if strategy == EXHAUSTIVE and struct.size > cap:
        raise PreconditionError(f"exhaustive forest search refused above {cap} elements")
    batched = struct.ops.batched
    result = False
    for masks in partition_choices(phi, struct):
        view = _Overlay(struct, masks)
        if strategy == CANONICAL:
            if not phi.chunks or not any(c.head for c in phi.chunks):
                f1 = (0,) * struct.size
            else:
                f1 = canonical_forest(phi, view)
            ok = forest_rows(f1, struct.size, struct.ops)
            v = body(_Overlay(view, masks, {phi.forest: f1}))
            v = (ok & v) if batched else (ok and v)
            if batched:
                result = result | v
            elif v:
                return True
        elif strategy == EXHAUSTIVE:
            if batched:
                raise PreconditionError("exhaustive forest search works on single structures")
            # every forest is one numpy lane; the body is evaluated once for all of them
            lanes = _Overlay(view, masks, {phi.forest: _forest_lanes(struct.size)})
            lanes.ops = numpy_ops()
            if bool(np.any(body(lanes))):
                return True
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    return result if batched else False


@functools.lru_cache(maxsize=None)
def _forest_lanes(n: int) -> tuple:
    forests = list(_forests(n))
    return tuple(np.array([f[a] for f in forests], dtype=np.int64) for a in range(n))


def _forests(n: int):
    """All forests over ``range(n)`` as row tuples, via parent functions."""
    parent = [None] * n

    def ancestors_ok(child, p):
        cur = p
        while cur is not None:
            if cur == child:
                return False
            cur = parent[cur]
        return True

    def go(i):
        if i == n:
            rows = [0] * n
            for c, p in enumerate(parent):
                if p is not None:
                    rows[p] |= 1 << c
            yield tuple(rows)
            return
        for p in [None] + list(range(n)):
            if p is not None and (p == i or not ancestors_ok(i, p)):
                continue
            parent[i] = p
            yield from go(i + 1)
        parent[i] = None

    # ancestors_ok only sees parents already fixed; recheck cycles at the leaves
    for rows in go(0):
        pairs = [(a, b) for a in range(n) for b in range(n) if (rows[a] >> b) & 1]
        if is_forest(pairs, range(n)):
            yield rows


# ----------------------------------------------------------------------
# printing


def show_term(t) -> str:
    return str(t)


def show_fo2(phi: FO2Formula) -> str:
    if isinstance(phi, Truth):
        return "true" if phi.value else "false"
    if isinstance(phi, Atom1):
        return f"{phi.rel}({show_term(phi.term)})"
    if isinstance(phi, Atom2):
        return f"{phi.rel}({show_term(phi.left)}, {show_term(phi.right)})"
    if isinstance(phi, Eq):
        return f"{show_term(phi.left)} = {show_term(phi.right)}"
    if isinstance(phi, Not):
        return "~" + _wrap(phi.arg)
    if isinstance(phi, And):
        return " & ".join(_wrap(a) for a in phi.args)
    if isinstance(phi, Or):
        return " | ".join(_wrap(a) for a in phi.args)
    if isinstance(phi, Implies):
        return f"{_wrap(phi.left)} -> {_wrap(phi.right)}"
    if isinstance(phi, Iff):
        return f"{_wrap(phi.left)} <-> {_wrap(phi.right)}"
    if isinstance(phi, Forall):
        return f"forall {phi.var}. {show_fo2(phi.body)}"
    if isinstance(phi, Exists):
        return f"exists {phi.var}. {show_fo2(phi.body)}"
    if isinstance(phi, Count):
        return f"exists{phi.op}{phi.k} {phi.var}. {show_fo2(phi.body)}"
    raise TypeError(phi)


def _wrap(phi) -> str:
    s = show_fo2(phi)
    return s if isinstance(phi, (Atom1, Atom2, Truth, Not)) else f"({s})"
