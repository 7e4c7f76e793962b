"""Abort instrumentation and the backwards-propagation transformers Psi, Phi, Theta."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from . import dl
from . import prog as P
from .errors import ProgramError
from .memstruct import (ALLOC, EXT_SUFFIX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS,
                        REQUIRED_UNARY, TRUE, Vocabulary)

ABO = "abo"


@dataclass(frozen=True)
class InstrumentedProgram:
    body: object
    labels: tuple

    def __str__(self):
        return str(self.body)


def _guarded(vars_, inner):
    """``if allocated(v1) and ... then inner else abo := T``."""
    vs = list(dict.fromkeys(vars_))
    if not vs:
        return inner
    cond = P.Allocated(vs[0])
    for v in vs[1:]:
        cond = P.BAnd(cond, P.Allocated(v))
    return P.IfThenElse(cond, inner, P.Assign(ABO, P.BoolLit(True)))


def _bar(c):
    if isinstance(c, P.Seq):
        return P.Seq(tuple(_bar(x) for x in c.cmds))
    if isinstance(c, P.Assign) and isinstance(c.expr, P.FieldRead):
        return _guarded([c.expr.var], c)
    if isinstance(c, P.FieldAssign):
        return _guarded([c.var] + [r.var for r in P.reads_in(c.expr)], c)
    if isinstance(c, P.Dispose):
        return _guarded([c.var], c)
    if isinstance(c, P.IfThenElse):
        inner = P.IfThenElse(c.cond, _bar(c.then), _bar(c.orelse))
        return _guarded([r.var for r in P.reads_in(c.cond)], inner)
    if isinstance(c, P.Assume):
        inner = P.IfThenElse(c.cond, P.Skip(), P.Assign(ABO, P.BoolLit(True)))
        return _guarded([r.var for r in P.reads_in(c.cond)], inner)
    if isinstance(c, P.IfThen):
        raise ProgramError("instrument expects a desugared program")
    return c


def instrument(s) -> InstrumentedProgram:
    """Prepend ``abo := F`` and turn every possible abort into ``abo := T``."""
    if not P.is_desugared(s):
        raise ProgramError("instrument expects a desugared program")
    if ABO in P.program_vars(s):
        raise ProgramError(f"program already uses the reserved variable {ABO!r}")
    body = P.seq(P.Assign(ABO, P.BoolLit(False)), _bar(s))
    return InstrumentedProgram(body, tuple(P.labels_of(body)))


def prepare(s, avoid: Iterable[str] = ()) -> InstrumentedProgram:
    """Desugar, label, then instrument."""
    d = P.desugar(s, avoid)
    d = P.assign_labels(d, avoid)
    return instrument(d)


# ----------------------------------------------------------------------
# Psi


def _const_of(e) -> str:
    if isinstance(e, P.Var):
        return e.name
    if isinstance(e, P.Null):
        return NULL
    if isinstance(e, P.BoolLit):
        return TRUE if e.value else FALSE
    raise ProgramError(f"expression {e} is not a variable or a constant")


def _term(e) -> dl.Concept:
    if isinstance(e, P.FieldRead):
        return dl.Exists(dl.Inverse(dl.RoleName(e.field)), dl.Nominal(e.var))
    return dl.Nominal(_const_of(e))


def epsilon(b) -> dl.LFormula:
    """The L formula expressing a condition on the pre-state."""
    if isinstance(b, P.Eq):
        return dl.Equiv(_term(b.left), _term(b.right))
    if isinstance(b, P.BNot):
        return dl.Not(epsilon(b.arg))
    if isinstance(b, P.BAnd):
        return dl.And(epsilon(b.left), epsilon(b.right))
    if isinstance(b, P.BOr):
        return dl.Or(epsilon(b.left), epsilon(b.right))
    if isinstance(b, P.BConst):
        return dl.TRUE if b.value else dl.FALSE
    if isinstance(b, P.Allocated):
        return dl.ConceptIncl(dl.Nominal(b.var), dl.Atomic(ALLOC))
    raise TypeError(b)


def field_correction(f: str, var: str, value: str) -> dl.Role:
    """``(f \\ (o_var x top)) | (o_var, o_value)``."""
    return dl.Union(dl.Diff(dl.RoleName(f), dl.Product(dl.Nominal(var), dl.TOP)), dl.pair(var, value))


def psi(s, phi: dl.LFormula, fields: Iterable[str] = ()) -> dl.LFormula:
    """Syntactic backwards propagation of ``phi`` over a desugared, labeled program.

    ``fields`` lists the field symbols; dispose nulls those of them that
    occur in the propagated formula.
    """
    fields = frozenset(fields)
    if isinstance(s, P.Skip):
        return phi
    if isinstance(s, P.Seq):
        for c in reversed(s.cmds):
            phi = psi(c, phi, fields)
        return phi
    if isinstance(s, P.Assign):
        if isinstance(s.expr, P.FieldRead):
            if s.label is None:
                raise ProgramError(f"field read {s} has no label")
            read = dl.Equiv(dl.Exists(dl.Inverse(dl.RoleName(s.expr.field)), dl.Nominal(s.expr.var)),
                            dl.Nominal(s.label))
            return dl.And(dl.substitute(phi, {s.var: s.label}), read)
        return dl.substitute(phi, {s.var: _const_of(s.expr)})
    if isinstance(s, P.FieldAssign):
        if isinstance(s.expr, P.FieldRead):
            raise ProgramError("psi expects a desugared program")
        return dl.substitute(phi, {s.field: field_correction(s.field, s.var, _const_of(s.expr))})
    if isinstance(s, P.IfThenElse):
        eps = epsilon(s.cond)
        return dl.Or(dl.And(eps, psi(s.then, phi, fields)), dl.And(dl.Not(eps), psi(s.orelse, phi, fields)))
    if isinstance(s, P.New):
        if s.label is None:
            raise ProgramError(f"{s} has no label")
        y = dl.Nominal(s.label)
        body = dl.substitute(phi, {s.var: s.label})
        body = dl.substitute(body, {ALLOC: dl.COr(dl.Atomic(ALLOC), y),
                                    MEMPOOL: dl.CAnd(dl.Atomic(MEMPOOL), dl.CNot(y))})
        fresh = dl.And(dl.ConceptIncl(y, dl.CNot(dl.Atomic(ALLOC))), dl.ConceptIncl(y, dl.Atomic(MEMPOOL)))
        return dl.And(body, fresh)
    if isinstance(s, P.Dispose):
        v = dl.Nominal(s.var)
        body = dl.substitute(phi, {ALLOC: dl.CAnd(dl.Atomic(ALLOC), dl.CNot(v)),
                                   POSSIBLE_TARGETS: dl.COr(dl.Atomic(POSSIBLE_TARGETS), v)})
        occurring = sorted(dl.symbols(body).roles & fields)
        disp = P.seq(*[P.FieldAssign(s.var, f, P.Null()) for f in occurring])
        return psi(disp, body, fields)
    if isinstance(s, P.Assume):
        raise ProgramError("psi has no case for assume; instrument the program first")
    if isinstance(s, P.IfThen):
        raise ProgramError("psi expects a desugared program")
    raise TypeError(s)


# ----------------------------------------------------------------------
# Phi and Theta


def ext_map(phi: dl.LFormula, vocab: Vocabulary) -> dict:
    """Relation symbols of ``phi`` that get a post-state copy (the remaining symbols)."""
    syms = dl.symbols(phi)
    ghosts = vocab.ghost_symbols
    keep = set(REQUIRED_UNARY) | set(vocab.fields) | set(ghosts) | set(vocab.free_binary)
    keep |= set(vocab.ext_symbols)
    out = {}
    for c in sorted(syms.concepts):
        if c not in keep and not c.endswith(EXT_SUFFIX):
            out[c] = dl.Atomic(c + EXT_SUFFIX)
    for r in sorted(syms.roles):
        if r not in keep and not r.endswith(EXT_SUFFIX):
            out[r] = dl.RoleName(r + EXT_SUFFIX)
    return out


def phi_transform(s, phi: dl.LFormula, vocab: Vocabulary) -> dl.LFormula:
    """Psi applied after renaming the remaining symbols of ``phi`` to their ext copies."""
    return psi(s, dl.substitute(phi, ext_map(phi, vocab)), vocab.fields)


def theta(s, phi: dl.LFormula, vocab: Vocabulary) -> dl.LFormula:
    """``Phi`` of the instrumented program on ``phi and (o_abo == o_F)``."""
    bar = s if isinstance(s, InstrumentedProgram) else prepare(s, vocab.symbols())
    strengthened = dl.And(phi, dl.Equiv(dl.Nominal(ABO), dl.Nominal(FALSE)))
    return phi_transform(bar.body, strengthened, vocab)
