"""Embeddings: tr from L into C2, alpha from SLls into L, beta from SLls into CT2."""
from __future__ import annotations

from typing import Iterable

from . import dl
from . import fo
from .errors import VocabularyError
from .memstruct import ALLOC, NULL
from .sl import NEXT, Ls, PointsTo, PureEq, PureNeq, PureTrue, SLFormula

# ----------------------------------------------------------------------
# tr


def _other(z: str) -> str:
    return fo.Y if z == fo.X else fo.X


def tr_concept(c: dl.Concept, z: str = fo.X) -> fo.FO2Formula:
    if isinstance(c, dl.Atomic):
        return fo.Atom1(c.name, z)
    if isinstance(c, dl.Nominal):
        return fo.Eq(z, fo.Const(c.const))
    if isinstance(c, dl.Top):
        return fo.TRUE_F
    if isinstance(c, dl.Bottom):
        return fo.FALSE_F
    if isinstance(c, dl.CAnd):
        return fo.conj(tr_concept(c.left, z), tr_concept(c.right, z))
    if isinstance(c, dl.COr):
        return fo.disj(tr_concept(c.left, z), tr_concept(c.right, z))
    if isinstance(c, dl.CNot):
        return fo.Not(tr_concept(c.arg, z))
    if isinstance(c, dl.Exists):
        zb = _other(z)
        return fo.Exists(zb, fo.conj(tr_role(c.role, z, zb), tr_concept(c.filler, zb)))
    raise TypeError(f"not a concept: {c!r}")


def tr_role(r: dl.Role, z: str = fo.X, zb: str = fo.Y) -> fo.FO2Formula:
    if isinstance(r, dl.RoleName):
        return fo.Atom2(r.name, z, zb)
    if isinstance(r, dl.Intersect):
        return fo.conj(tr_role(r.left, z, zb), tr_role(r.right, z, zb))
    if isinstance(r, dl.Union):
        return fo.disj(tr_role(r.left, z, zb), tr_role(r.right, z, zb))
    if isinstance(r, dl.Diff):
        return fo.conj(tr_role(r.left, z, zb), fo.Not(tr_role(r.right, z, zb)))
    if isinstance(r, dl.Inverse):
        return tr_role(r.arg, zb, z)
    if isinstance(r, dl.Product):
        return fo.conj(tr_concept(r.left, z), tr_concept(r.right, zb))
    raise TypeError(f"not a role: {r!r}")


def tr(phi: dl.LFormula) -> fo.FO2Formula:
    """Translate an L formula into two-variable logic with counting."""
    x, y = fo.X, fo.Y
    if isinstance(phi, dl.ConceptIncl):
        return fo.Forall(x, fo.Implies(tr_concept(phi.sub, x), tr_concept(phi.sup, x)))
    if isinstance(phi, dl.RoleIncl):
        return fo.Forall(x, fo.Forall(y, fo.Implies(tr_role(phi.sub, x, y), tr_role(phi.sup, x, y))))
    if isinstance(phi, dl.Func):
        return fo.Forall(x, fo.Count("<=", 1, y, tr_role(phi.role, x, y)))
    if isinstance(phi, dl.Equiv):
        return tr(dl.normalize(phi))
    if isinstance(phi, dl.And):
        return fo.conj(tr(phi.left), tr(phi.right))
    if isinstance(phi, dl.Or):
        return fo.disj(tr(phi.left), tr(phi.right))
    if isinstance(phi, dl.Not):
        return fo.Not(tr(phi.arg))
    if isinstance(phi, dl.Implies):
        return fo.Implies(tr(phi.left), tr(phi.right))
    raise TypeError(f"not an L formula: {phi!r}")


# ----------------------------------------------------------------------
# alpha


def partition_names(phi: SLFormula, tag: str | None = None, avoid: Iterable[str] = ()) -> list[str]:
    names = [f"P{tag}_{i}" if tag else f"P{i}" for i in range(1, len(phi.spatial) + 1)]
    clash = set(names) & set(avoid)
    if clash:
        raise VocabularyError(f"partition concept names collide with {sorted(clash)}")
    return names


def _nom(e: str) -> dl.Nominal:
    return dl.Nominal(e)


def alpha_pure(phi: SLFormula) -> dl.LFormula:
    parts = []
    for a in phi.pure:
        if isinstance(a, PureTrue):
            parts.append(dl.TRUE)
        elif isinstance(a, PureEq):
            parts.append(dl.Equiv(_nom(a.left), _nom(a.right)))
        elif isinstance(a, PureNeq):
            parts.append(dl.Not(dl.Equiv(_nom(a.left), _nom(a.right))))
        else:
            raise TypeError(a)
    return dl.conj(parts)


def alpha_ls(p: str, start: str, end: str, next_field: str = NEXT) -> dl.LFormula:
    P = dl.Atomic(p)
    back = dl.Exists(dl.Inverse(dl.RoleName(next_field)), P)
    a1 = dl.ConceptIncl(_nom(start), P)
    a2 = dl.ConceptIncl(_nom(end), back)
    a3 = dl.ConceptIncl(_nom(end), dl.CNot(P))
    a4 = dl.ConceptIncl(P, dl.COr(_nom(start), back))
    empty = dl.And(dl.ConceptIncl(P, dl.BOTTOM), dl.Equiv(_nom(start), _nom(end)))
    return dl.Or(dl.conj([a1, a2, a3, a4]), empty)


def alpha_points_to(p: str, chunk: PointsTo, fields: Iterable[str] | None = None) -> dl.LFormula:
    """Cell chunk; fields given in ``fields`` but not listed are constrained to null."""
    parts = [dl.Equiv(dl.Atomic(p), _nom(chunk.var))]
    listed = dict(chunk.bindings)
    for f, e in chunk.bindings:
        parts.append(dl.RoleIncl(dl.pair(chunk.var, e), dl.RoleName(f)))
    for f in sorted(set(fields or ()) - set(listed)):
        parts.append(dl.RoleIncl(dl.pair(chunk.var, NULL), dl.RoleName(f)))
    return dl.conj(parts)


def alpha(phi: SLFormula, tag: str | None = None, fields: Iterable[str] | None = None,
          next_field: str = NEXT, avoid: Iterable[str] = ()) -> tuple[dl.LFormula, list[str]]:
    """L approximation of an SLls formula, with the generated partition concept names."""
    pure = [alpha_pure(phi)] if phi.pure else []
    if phi.is_emp:
        return dl.conj(pure + [dl.Equiv(dl.Atomic(ALLOC), dl.BOTTOM)]), []
    names = partition_names(phi, tag, avoid)
    cover = dl.Equiv(dl.cunion([dl.Atomic(p) for p in names]), dl.Atomic(ALLOC))
    chunks = []
    for p, c in zip(names, phi.spatial):
        if isinstance(c, Ls):
            chunks.append(alpha_ls(p, c.start, c.end, next_field))
        else:
            chunks.append(alpha_points_to(p, c, fields))
    disjoint = [dl.Equiv(dl.CAnd(dl.Atomic(names[i]), dl.Atomic(names[j])), dl.BOTTOM)
                for i in range(len(names)) for j in range(i + 1, len(names))]
    return dl.conj([cover] + pure + chunks + disjoint), names


# ----------------------------------------------------------------------
# beta


def beta5(p: str, head: str, forest: str = "F1", next_field: str = NEXT) -> fo.FO2Formula:
    x, y = fo.X, fo.Y
    inside = fo.Forall(x, fo.Forall(y, fo.Implies(
        fo.conj(fo.Atom1(p, x), fo.Atom1(p, y)),
        fo.Iff(fo.Atom2(forest, x, y), fo.Atom2(next_field, x, y)))))
    root = fo.Forall(x, fo.Implies(
        fo.conj(fo.Atom1(p, x),
                fo.Forall(y, fo.Implies(fo.Atom1(p, y), fo.Not(fo.Atom2(forest, y, x))))),
        fo.Eq(x, fo.Const(head))))
    return fo.conj(inside, root)


def beta(phi: SLFormula, tag: str | None = None, fields: Iterable[str] | None = None,
         next_field: str = NEXT, forest: str = "F1", avoid: Iterable[str] = ()) -> fo.CT2Formula:
    a, names = alpha(phi, tag, fields, next_field, avoid)
    chunks, clauses = [], []
    for p, c in zip(names, phi.spatial):
        if isinstance(c, Ls):
            chunks.append(fo.Chunk(p, c.start))
            clauses.append(beta5(p, c.start, forest, next_field))
        else:
            chunks.append(fo.Chunk(p))
    body = fo.conj(tr(a), *clauses)
    return fo.CT2Formula(body, forest, tuple(chunks), next_field)
