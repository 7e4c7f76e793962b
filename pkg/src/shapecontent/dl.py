"""The description logic L: concepts, roles, formulas, evaluation and substitution."""
from __future__ import annotations

from dataclasses import dataclass
import typing
from typing import Callable, Iterable, Mapping

from .bits import transpose
from .errors import KindError


# ----------------------------------------------------------------------
# concepts


class Concept:
    __slots__ = ()

    def __str__(self):
        return show_concept(self)


@dataclass(frozen=True, repr=False)
class Atomic(Concept):
    name: str


@dataclass(frozen=True, repr=False)
class Nominal(Concept):
    const: str


@dataclass(frozen=True, repr=False)
class Top(Concept):
    pass


@dataclass(frozen=True, repr=False)
class Bottom(Concept):
    pass


@dataclass(frozen=True, repr=False)
class CAnd(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True, repr=False)
class COr(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True, repr=False)
class CNot(Concept):
    arg: Concept


@dataclass(frozen=True, repr=False)
class Exists(Concept):
    role: "Role"
    filler: Concept


# ----------------------------------------------------------------------
# roles


class Role:
    __slots__ = ()

    def __str__(self):
        return show_role(self)


@dataclass(frozen=True, repr=False)
class RoleName(Role):
    name: str


@dataclass(frozen=True, repr=False)
class Union(Role):
    left: Role
    right: Role


@dataclass(frozen=True, repr=False)
class Intersect(Role):
    left: Role
    right: Role


@dataclass(frozen=True, repr=False)
class Diff(Role):
    left: Role
    right: Role


@dataclass(frozen=True, repr=False)
class Inverse(Role):
    arg: Role


@dataclass(frozen=True, repr=False)
class Product(Role):
    left: Concept
    right: Concept


# ----------------------------------------------------------------------
# formulas


class LFormula:
    __slots__ = ()

    def __str__(self):
        return show_formula(self)


@dataclass(frozen=True, repr=False)
class ConceptIncl(LFormula):
    sub: Concept
    sup: Concept


@dataclass(frozen=True, repr=False)
class RoleIncl(LFormula):
    sub: Role
    sup: Role


@dataclass(frozen=True, repr=False)
class Func(LFormula):
    role: Role


@dataclass(frozen=True, repr=False)
class Equiv(LFormula):
    """Mutual inclusion of two concepts or two roles."""

    left: "Concept | Role"
    right: "Concept | Role"


@dataclass(frozen=True, repr=False)
class And(LFormula):
    left: LFormula
    right: LFormula


@dataclass(frozen=True, repr=False)
class Or(LFormula):
    left: LFormula
    right: LFormula


@dataclass(frozen=True, repr=False)
class Not(LFormula):
    arg: LFormula


@dataclass(frozen=True, repr=False)
class Implies(LFormula):
    left: LFormula
    right: LFormula


for _cls in (Atomic, Nominal, Top, Bottom, CAnd, COr, CNot, Exists, RoleName, Union, Intersect,
             Diff, Inverse, Product, ConceptIncl, RoleIncl, Func, Equiv, And, Or, Not, Implies):
    _cls.__repr__ = lambda self: f"<{type(self).__name__} {self}>"

TOP, BOTTOM = Top(), Bottom()
TRUE = ConceptIncl(TOP, TOP)
FALSE = ConceptIncl(TOP, BOTTOM)


def conj(parts: Iterable[LFormula]) -> LFormula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: Iterable[LFormula]) -> LFormula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def cunion(parts: Iterable[Concept]) -> Concept:
    parts = list(parts)
    if not parts:
        return BOTTOM
    out = parts[0]
    for p in parts[1:]:
        out = COr(out, p)
    return out


def pair(a: str, b: str) -> Product:
    return Product(Nominal(a), Nominal(b))


def flatten_and(phi: LFormula) -> list[LFormula]:
    if isinstance(phi, And):
        return flatten_and(phi.left) + flatten_and(phi.right)
    return [phi]


# ----------------------------------------------------------------------
# evaluation


def _compile_concept(c: Concept) -> Callable:
    if isinstance(c, Atomic):
        name = c.name
        return lambda s: s.mask(name)
    if isinstance(c, Nominal):
        name = c.const
        return lambda s: 1 << s.const(name)
    if isinstance(c, Top):
        return lambda s: s.full
    if isinstance(c, Bottom):
        return lambda s: 0
    if isinstance(c, CAnd):
        f, g = _compile_concept(c.left), _compile_concept(c.right)
        return lambda s: f(s) & g(s)
    if isinstance(c, COr):
        f, g = _compile_concept(c.left), _compile_concept(c.right)
        return lambda s: f(s) | g(s)
    if isinstance(c, CNot):
        f = _compile_concept(c.arg)
        return lambda s: s.full & ~f(s)
    if isinstance(c, Exists):
        r, f = _compile_role(c.role), _compile_concept(c.filler)

        def ex(s):
            rows, m, ops = r(s), f(s), s.ops
            out = 0
            for a in range(s.size):
                out = out | ops.bit_if(ops.nz(rows[a] & m), a)
            return out
        return ex
    raise TypeError(f"not a concept: {c!r}")


def _compile_role(r: Role) -> Callable:
    if isinstance(r, RoleName):
        name = r.name
        return lambda s: s.rows(name)
    if isinstance(r, (Union, Intersect, Diff)):
        f, g = _compile_role(r.left), _compile_role(r.right)
        if isinstance(r, Union):
            return lambda s: tuple(a | b for a, b in zip(f(s), g(s)))
        if isinstance(r, Intersect):
            return lambda s: tuple(a & b for a, b in zip(f(s), g(s)))
        return lambda s: tuple(a & ~b for a, b in zip(f(s), g(s)))
    if isinstance(r, Inverse):
        f = _compile_role(r.arg)
        return lambda s: transpose(f(s), s.size, s.ops)
    if isinstance(r, Product):
        f, g = _compile_concept(r.left), _compile_concept(r.right)

        def prod(s):
            cm, dm, ops = f(s), g(s), s.ops
            return tuple(ops.if_b(ops.has(cm, a), dm) for a in range(s.size))
        return prod
    raise TypeError(f"not a role: {r!r}")


def _compile_formula(phi: LFormula) -> Callable:
    if isinstance(phi, ConceptIncl):
        f, g = _compile_concept(phi.sub), _compile_concept(phi.sup)
        return lambda s: s.ops.zero(f(s) & ~g(s))
    if isinstance(phi, RoleIncl):
        f, g = _compile_role(phi.sub), _compile_role(phi.sup)
        return lambda s: s.ops.all_(s.ops.zero(a & ~b) for a, b in zip(f(s), g(s)))
    if isinstance(phi, Func):
        f = _compile_role(phi.role)
        return lambda s: s.ops.all_(s.ops.zero(m & (m - 1)) for m in f(s))
    if isinstance(phi, Equiv):
        if isinstance(phi.left, Concept) and isinstance(phi.right, Concept):
            f, g = _compile_concept(phi.left), _compile_concept(phi.right)
            return lambda s: f(s) == g(s)
        if isinstance(phi.left, Role) and isinstance(phi.right, Role):
            f, g = _compile_role(phi.left), _compile_role(phi.right)
            return lambda s: s.ops.all_(a == b for a, b in zip(f(s), g(s)))
        raise KindError(f"Equiv between a concept and a role: {phi}")
    if isinstance(phi, And):
        f, g = _compile_formula(phi.left), _compile_formula(phi.right)
        return lambda s: f(s) & g(s)
    if isinstance(phi, Or):
        f, g = _compile_formula(phi.left), _compile_formula(phi.right)
        return lambda s: f(s) | g(s)
    if isinstance(phi, Not):
        f = _compile_formula(phi.arg)
        return lambda s: s.ops.not_(f(s))
    if isinstance(phi, Implies):
        f, g = _compile_formula(phi.left), _compile_formula(phi.right)
        return lambda s: s.ops.not_(f(s)) | g(s)
    raise TypeError(f"not an L formula: {phi!r}")


def compile_formula(phi: LFormula) -> Callable:
    """Return ``fn(struct) -> bool`` (or a lane array for batch views)."""
    return _compile_formula(phi)


def eval_concept(c: Concept, struct) -> frozenset:
    m = _compile_concept(c)(struct)
    return frozenset(e for e in range(struct.size) if (m >> e) & 1)


def eval_role(r: Role, struct) -> frozenset:
    rows = _compile_role(r)(struct)
    return frozenset((a, b) for a in range(struct.size) for b in range(struct.size) if (rows[a] >> b) & 1)


def eval_formula(phi: LFormula, struct) -> bool:
    v = _compile_formula(phi)(struct)
    return v if struct.ops.batched else bool(v)


# ----------------------------------------------------------------------
# structural utilities


def normalize(x):
    """Expand Equiv into two inclusions, recursively."""
    if isinstance(x, Equiv):
        if isinstance(x.left, Concept):
            return And(ConceptIncl(x.left, x.right), ConceptIncl(x.right, x.left))
        return And(RoleIncl(x.left, x.right), RoleIncl(x.right, x.left))
    if isinstance(x, (And, Or, Implies)):
        return type(x)(normalize(x.left), normalize(x.right))
    if isinstance(x, Not):
        return Not(normalize(x.arg))
    return x


@dataclass
class Symbols:
    constants: set
    concepts: set
    roles: set

    def all(self) -> set:
        return self.constants | self.concepts | self.roles


def symbols(x) -> Symbols:
    out = Symbols(set(), set(), set())
    _collect(x, out)
    return out


def _collect(x, out: Symbols) -> None:
    if isinstance(x, Atomic):
        out.concepts.add(x.name)
    elif isinstance(x, Nominal):
        out.constants.add(x.const)
    elif isinstance(x, RoleName):
        out.roles.add(x.name)
    elif isinstance(x, (Top, Bottom)):
        pass
    elif isinstance(x, (CNot, Inverse, Not)):
        _collect(x.arg, out)
    elif isinstance(x, Exists):
        _collect(x.role, out)
        _collect(x.filler, out)
    elif isinstance(x, Func):
        _collect(x.role, out)
    elif isinstance(x, (ConceptIncl, RoleIncl)):
        _collect(x.sub, out)
        _collect(x.sup, out)
    else:
        _collect(x.left, out)
        _collect(x.right, out)


def size(x) -> int:
    if isinstance(x, (Atomic, Nominal, RoleName, Top, Bottom)):
        return 1
    if isinstance(x, (CNot, Inverse, Not)):
        return 1 + size(x.arg)
    if isinstance(x, Exists):
        return 1 + size(x.role) + size(x.filler)
    if isinstance(x, Func):
        return 1 + size(x.role)
    if isinstance(x, (ConceptIncl, RoleIncl)):
        return 1 + size(x.sub) + size(x.sup)
    return 1 + size(x.left) + size(x.right)


# ----------------------------------------------------------------------
# substitution

Replacement = typing.Union[str, Concept, Role]


def substitute(x, subst: Mapping[str, Replacement]):
    """Simultaneous syntactic replacement of constants, atomic concepts and atomic roles.

    A key mapped to a string (or a Nominal) replaces a constant, a key mapped
    to a Concept replaces an atomic concept, a key mapped to a Role replaces an
    atomic role.  Using a replacement of the wrong kind at an occurrence site
    raises KindError.
    """
    if not subst:
        return x
    return _subst(x, subst)


def _const_target(key: str, value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, Nominal):
        return value.const
    raise KindError(f"constant {key} replaced by non-constant {value}")


def _subst(x, s):
    if isinstance(x, Atomic):
        if x.name in s:
            v = s[x.name]
            if isinstance(v, Concept):
                return v
            raise KindError(f"concept {x.name} replaced by {v!r}")
        return x
    if isinstance(x, Nominal):
        if x.const in s:
            return Nominal(_const_target(x.const, s[x.const]))
        return x
    if isinstance(x, RoleName):
        if x.name in s:
            v = s[x.name]
            if isinstance(v, Role):
                return v
            raise KindError(f"role {x.name} replaced by {v!r}")
        return x
    if isinstance(x, (Top, Bottom)):
        return x
    if isinstance(x, (CNot, Inverse, Not)):
        arg = _subst(x.arg, s)
        return x if arg is x.arg else type(x)(arg)
    if isinstance(x, Exists):
        return Exists(_subst(x.role, s), _subst(x.filler, s))
    if isinstance(x, Func):
        return Func(_subst(x.role, s))
    if isinstance(x, (ConceptIncl, RoleIncl)):
        return type(x)(_subst(x.sub, s), _subst(x.sup, s))
    return type(x)(_subst(x.left, s), _subst(x.right, s))


# ----------------------------------------------------------------------
# printing (the annotation-file syntax)

def _atomic_concept(c) -> bool:
    return isinstance(c, (Atomic, Nominal, Top, Bottom, CNot, Exists))


def show_concept(c: Concept) -> str:
    if isinstance(c, Atomic):
        return c.name
    if isinstance(c, Nominal):
        return f"o:{c.const}"
    if isinstance(c, Top):
        return "top"
    if isinstance(c, Bottom):
        return "bot"
    if isinstance(c, CNot):
        return "!" + _wrap_c(c.arg)
    if isinstance(c, Exists):
        return f"ex {_wrap_r(c.role)} . {_wrap_c(c.filler)}"
    op = " & " if isinstance(c, CAnd) else " | "
    return _wrap_c(c.left) + op + _wrap_c(c.right)


def _wrap_c(c: Concept) -> str:
    s = show_concept(c)
    return s if _atomic_concept(c) else f"({s})"


def show_role(r: Role) -> str:
    if isinstance(r, RoleName):
        return r.name
    if isinstance(r, Inverse):
        return _wrap_r(r.arg) + "^-"
    if isinstance(r, Product):
        if isinstance(r.left, Nominal) and isinstance(r.right, Nominal):
            return f"(o:{r.left.const}, o:{r.right.const})"
        return f"{_wrap_c(r.left)} x {_wrap_c(r.right)}"
    op = {Union: " | ", Intersect: " & ", Diff: " \\ "}[type(r)]
    return _wrap_r(r.left) + op + _wrap_r(r.right)


def _wrap_r(r: Role) -> str:
    s = show_role(r)
    if isinstance(r, (RoleName, Inverse)):
        return s
    if isinstance(r, Product) and isinstance(r.left, Nominal) and isinstance(r.right, Nominal):
        return s
    return f"({s})"


def show_term(t) -> str:
    return show_concept(t) if isinstance(t, Concept) else show_role(t)


def show_formula(phi: LFormula) -> str:
    if isinstance(phi, ConceptIncl):
        return f"{show_concept(phi.sub)} <= {show_concept(phi.sup)}"
    if isinstance(phi, RoleIncl):
        return f"{show_role(phi.sub)} <= {show_role(phi.sup)}"
    if isinstance(phi, Func):
        return f"func({show_role(phi.role)})"
    if isinstance(phi, Equiv):
        return f"{show_term(phi.left)} == {show_term(phi.right)}"
    if isinstance(phi, Not):
        return "!" + _wrap_f(phi.arg)
    op = {And: " && ", Or: " || ", Implies: " -> "}[type(phi)]
    return _wrap_f(phi.left) + op + _wrap_f(phi.right)


def _wrap_f(phi: LFormula) -> str:
    s = show_formula(phi)
    return s if isinstance(phi, (Func, Not)) else f"({s})"
