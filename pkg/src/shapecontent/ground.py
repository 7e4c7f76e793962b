"""Propositional grounding of L and CT2 formulas over a fixed finite universe.

Universe layout: ``0, 1, 2`` are ``null, T, F`` (the Aux elements) and
``3 .. size-1`` are Addresses.  Everything else (constants, concepts, roles,
fields) is a free propositional encoding solved by a SAT solver.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from pysat.formula import IDPool
from pysat.solvers import Solver

from . import dl, fo
from .errors import SearchBudgetExceeded, VocabularyError
from .memstruct import (ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE,
                        MemoryStructure, Vocabulary)

FIXED_CONSTS = {NULL: 0, TRUE: 1, FALSE: 2}
SOLVER = "glucose4"


@dataclass
class Signature:
    constants: tuple
    unary: tuple
    binary: tuple
    fields: tuple = ()

    @classmethod
    def of(cls, vocab: Vocabulary, extra_unary: Iterable[str] = (), extra_binary: Iterable[str] = (),
           extra_consts: Iterable[str] = ()) -> "Signature":
        consts = sorted(vocab.constants | vocab.free_consts | set(extra_consts))
        unary = sorted(vocab.unary | set(extra_unary))
        binary = sorted(vocab.binary | set(extra_binary))
        return cls(tuple(consts), tuple(unary), tuple(binary), tuple(sorted(vocab.field_like)))


@dataclass
class Stats:
    size: int = 0
    variables: int = 0
    clauses: int = 0


class Grounder:
    """Tseitin-style grounding with constant folding and structural hashing."""

    def __init__(self, size: int, sig: Signature, *, max_clauses: int | None = None):
        if size < 4:
            raise ValueError("universe needs the three Aux elements and at least one address")
        self.size = size
        self.sig = sig
        self.universe = range(size)
        self.addresses = range(3, size)
        self.pool = IDPool()
        self.clauses: list[list[int]] = []
        self.max_clauses = max_clauses
        self.t = self.pool.id(("true",))
        self.clauses.append([self.t])
        self._gates: dict = {}
        self._memo: dict = {}
        self._keep: list = []  # pins memo keys that use id()
        self._forest: fo.CT2Formula | None = None
        self._unary = set(sig.unary)
        self._binary = set(sig.binary)
        self._consts = set(sig.constants)
        self._fields = set(sig.fields)
        self._structure_clauses()

    # -- basic literals --------------------------------------------------
    @property
    def T(self) -> int:
        return self.t

    @property
    def F(self) -> int:
        return -self.t

    def add(self, clause: list[int]) -> None:
        if self.t in clause:
            return
        clause = [l for l in clause if l != -self.t]
        self.clauses.append(clause)
        if self.max_clauses is not None and len(self.clauses) > self.max_clauses:
            raise SearchBudgetExceeded(f"grounding exceeded {self.max_clauses} clauses at size {self.size}")

    def const(self, name: str, e: int) -> int:
        if name in FIXED_CONSTS:
            return self.T if FIXED_CONSTS[name] == e else self.F
        if name not in self._consts:
            raise VocabularyError(f"constant {name!r} is not in the search signature")
        return self.pool.id(("c", name, e))

    def unary(self, name: str, e: int) -> int:
        if name == AUX:
            return self.T if e < 3 else self.F
        if name == ADDRESSES:
            return self.T if e >= 3 else self.F
        if name not in self._unary:
            raise VocabularyError(f"concept {name!r} is not in the search signature")
        if e < 3 and name in (ALLOC, POSSIBLE_TARGETS, MEMPOOL):
            return self.F
        return self.pool.id(("u", name, e))

    def binary(self, name: str, a: int, b: int) -> int:
        if self._forest is not None and name == self._forest.forest:
            return self._forest_edge(a, b)
        if name not in self._binary:
            raise VocabularyError(f"role {name!r} is not in the search signature")
        if name in self._fields and a < 3:
            return self.F
        return self.pool.id(("b", name, a, b))

    # -- gates -------------------------------------------------------------
    def and_(self, lits: Iterable[int]) -> int:
        out = set()
        for l in lits:
            if l == self.F:
                return self.F
            if l != self.T:
                out.add(l)
        if not out:
            return self.T
        if any(-l in out for l in out):
            return self.F
        if len(out) == 1:
            return next(iter(out))
        key = ("and", frozenset(out))
        g = self._gates.get(key)
        if g is None:
            g = self.pool.id(key)
            self._gates[key] = g
            for l in out:
                self.add([-g, l])
            self.add([g] + [-l for l in out])
        return g

    def or_(self, lits: Iterable[int]) -> int:
        return -self.and_(-l for l in lits)

    def iff(self, a: int, b: int) -> int:
        return self.and_([self.or_([-a, b]), self.or_([a, -b])])

    def implies(self, a: int, b: int) -> int:
        return self.or_([-a, b])

    def at_least(self, lits: list[int], k: int) -> int:
        """Literal for "at least ``k`` of ``lits`` hold" (a unary counter)."""
        lits = [l for l in lits if l != self.F]
        if k <= 0:
            return self.T
        if k > len(lits):
            return self.F
        # row[j] = at least j among the literals seen so far
        row = [self.T] + [self.F] * k
        for l in lits:
            new = [self.T]
            for j in range(1, k + 1):
                new.append(self.or_([row[j], self.and_([l, row[j - 1]])]))
            row = new
        return row[k]

    def at_most_one_clauses(self, lits: list[int]) -> None:
        for a, b in itertools.combinations(lits, 2):
            self.add([-a, -b])

    def assert_(self, lit: int) -> None:
        self.add([lit])

    # -- structure axioms that are cheaper as clauses ------------------------
    def _structure_clauses(self) -> None:
        parts = [p for p in (ALLOC, POSSIBLE_TARGETS, MEMPOOL) if p in self._unary]
        if len(parts) == 3:
            for e in self.addresses:
                lits = [self.unary(p, e) for p in parts]
                self.add(lits)
                self.at_most_one_clauses(lits)
        # constants are one-hot over the universe
        for c in self.sig.constants:
            if c in FIXED_CONSTS:
                continue
            lits = [self.const(c, e) for e in self.universe]
            self.add(lits)
            self.at_most_one_clauses(lits)
        # fields are one-hot on Addresses (the functional encoding)
        for f in self.sig.fields:
            for a in self.addresses:
                lits = [self.binary(f, a, b) for b in self.universe]
                self.add(lits)
                self.at_most_one_clauses(lits)

    def symmetry_breaking(self) -> None:
        """Order addresses by (Alloc, PossibleTargets, MemPool) class, then by first constant.

        Any permutation of Addresses maps models to models, so every model has
        an image satisfying these clauses.
        """
        if not all(p in self._unary for p in (ALLOC, POSSIBLE_TARGETS, MEMPOOL)):
            return
        consts = [c for c in self.sig.constants if c not in FIXED_CONSTS]
        for e in range(3, self.size - 1):
            a0, a1 = self.unary(ALLOC, e), self.unary(ALLOC, e + 1)
            m0, m1 = self.unary(MEMPOOL, e), self.unary(MEMPOOL, e + 1)
            self.add([-a1, a0])
            self.add([-m0, m1])
            for cls in (ALLOC, POSSIBLE_TARGETS, MEMPOOL):
                x0, x1 = self.unary(cls, e), self.unary(cls, e + 1)
                for k, c in enumerate(consts):
                    earlier = [self.const(consts[j], e) for j in range(k + 1)]
                    self.add([-x0, -x1, -self.const(c, e + 1)] + earlier)

    # -- L -------------------------------------------------------------------
    def _pin(self, x) -> int:
        self._keep.append(x)
        return id(x)

    def concept(self, c: dl.Concept, e: int) -> int:
        key = ("C", self._pin(c), e)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if isinstance(c, dl.Atomic):
            r = self.unary(c.name, e)
        elif isinstance(c, dl.Nominal):
            r = self.const(c.const, e)
        elif isinstance(c, dl.Top):
            r = self.T
        elif isinstance(c, dl.Bottom):
            r = self.F
        elif isinstance(c, dl.CAnd):
            r = self.and_([self.concept(c.left, e), self.concept(c.right, e)])
        elif isinstance(c, dl.COr):
            r = self.or_([self.concept(c.left, e), self.concept(c.right, e)])
        elif isinstance(c, dl.CNot):
            r = -self.concept(c.arg, e)
        elif isinstance(c, dl.Exists):
            r = self.or_(self.and_([self.role(c.role, e, b), self.concept(c.filler, b)])
                         for b in self.universe)
        else:
            raise TypeError(f"not a concept: {c!r}")
        self._memo[key] = r
        return r

    def role(self, r: dl.Role, a: int, b: int) -> int:
        key = ("R", self._pin(r), a, b)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if isinstance(r, dl.RoleName):
            out = self.binary(r.name, a, b)
        elif isinstance(r, dl.Intersect):
            out = self.and_([self.role(r.left, a, b), self.role(r.right, a, b)])
        elif isinstance(r, dl.Union):
            out = self.or_([self.role(r.left, a, b), self.role(r.right, a, b)])
        elif isinstance(r, dl.Diff):
            out = self.and_([self.role(r.left, a, b), -self.role(r.right, a, b)])
        elif isinstance(r, dl.Inverse):
            out = self.role(r.arg, b, a)
        elif isinstance(r, dl.Product):
            out = self.and_([self.concept(r.left, a), self.concept(r.right, b)])
        else:
            raise TypeError(f"not a role: {r!r}")
        self._memo[key] = out
        return out

    def formula(self, phi: dl.LFormula) -> int:
        key = ("L", self._pin(phi))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        U = self.universe
        if isinstance(phi, dl.ConceptIncl):
            out = self.and_(self.implies(self.concept(phi.sub, e), self.concept(phi.sup, e)) for e in U)
        elif isinstance(phi, dl.RoleIncl):
            out = self.and_(self.implies(self.role(phi.sub, a, b), self.role(phi.sup, a, b))
                            for a in U for b in U)
        elif isinstance(phi, dl.Func):
            out = self.and_(-self.at_least([self.role(phi.role, a, b) for b in U], 2) for a in U)
        elif isinstance(phi, dl.Equiv):
            if isinstance(phi.left, dl.Concept):
                out = self.and_(self.iff(self.concept(phi.left, e), self.concept(phi.right, e)) for e in U)
            else:
                out = self.and_(self.iff(self.role(phi.left, a, b), self.role(phi.right, a, b))
                                for a in U for b in U)
        elif isinstance(phi, dl.And):
            out = self.and_([self.formula(phi.left), self.formula(phi.right)])
        elif isinstance(phi, dl.Or):
            out = self.or_([self.formula(phi.left), self.formula(phi.right)])
        elif isinstance(phi, dl.Not):
            out = -self.formula(phi.arg)
        elif isinstance(phi, dl.Implies):
            out = self.implies(self.formula(phi.left), self.formula(phi.right))
        else:
            raise TypeError(f"not an L formula: {phi!r}")
        self._memo[key] = out
        return out

    # -- FO2 / CT2 --------------------------------------------------------------
    def _term(self, t, env) -> list[tuple[int, int]]:
        if isinstance(t, fo.Const):
            return [(e, self.const(t.name, e)) for e in self.universe]
        v = env.get(t)
        if v is None:
            raise ValueError(f"free variable {t!r}")
        return [(v, self.T)]

    def fo(self, phi: fo.FO2Formula, env: dict | None = None) -> int:
        env = env or {}
        fv = fo.free_vars(phi)
        key = ("F", self._pin(phi), tuple(sorted((k, v) for k, v in env.items() if k in fv)))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if isinstance(phi, fo.Truth):
            out = self.T if phi.value else self.F
        elif isinstance(phi, fo.Atom1):
            out = self.or_(self.and_([l, self.unary(phi.rel, e)]) for e, l in self._term(phi.term, env))
        elif isinstance(phi, fo.Atom2):
            out = self.or_(self.and_([l1, l2, self.binary(phi.rel, a, b)])
                           for a, l1 in self._term(phi.left, env) for b, l2 in self._term(phi.right, env))
        elif isinstance(phi, fo.Eq):
            out = self.or_(self.and_([l1, l2])
                           for a, l1 in self._term(phi.left, env) for b, l2 in self._term(phi.right, env)
                           if a == b)
        elif isinstance(phi, fo.Not):
            out = -self.fo(phi.arg, env)
        elif isinstance(phi, fo.And):
            out = self.and_([self.fo(a, env) for a in phi.args])
        elif isinstance(phi, fo.Or):
            out = self.or_([self.fo(a, env) for a in phi.args])
        elif isinstance(phi, fo.Implies):
            out = self.implies(self.fo(phi.left, env), self.fo(phi.right, env))
        elif isinstance(phi, fo.Iff):
            out = self.iff(self.fo(phi.left, env), self.fo(phi.right, env))
        elif isinstance(phi, (fo.Forall, fo.Exists, fo.Count)):
            lits = [self.fo(phi.body, {**env, phi.var: e}) for e in self.universe]
            if isinstance(phi, fo.Forall):
                out = self.and_(lits)
            elif isinstance(phi, fo.Exists):
                out = self.or_(lits)
            elif phi.op == ">=":
                out = self.at_least(lits, phi.k)
            elif phi.op == "<=":
                out = -self.at_least(lits, phi.k + 1)
            else:
                out = self.and_([self.at_least(lits, phi.k), -self.at_least(lits, phi.k + 1)])
        else:
            raise TypeError(f"not an FO2 formula: {phi!r}")
        self._memo[key] = out
        return out

    def _forest_edge(self, a: int, b: int) -> int:
        phi = self._forest
        lits = []
        for c in phi.chunks:
            if c.head is None:
                continue
            lits.append(self.and_([self.unary(c.concept, a), self.unary(c.concept, b),
                                   self.binary(phi.next_field, a, b)]))
        return self.or_(lits)

    def ct2(self, phi: fo.CT2Formula) -> int:
        """Ground ``phi`` with its forest fixed to the canonical one; asserts the forest axioms."""
        if self._forest is not None and self._forest != phi:
            raise ValueError("one CT2 formula per grounding")
        self._forest = phi
        U = self.universe
        edge = {(a, b): self._forest_edge(a, b) for a in U for b in U}
        for b in U:
            self.at_most_one_clauses([edge[a, b] for a in U if edge[a, b] != self.F])
        reach = {(a, b): self.pool.id(("reach", a, b)) for a in U for b in U}
        for (a, b), l in edge.items():
            self.add([-l, reach[a, b]])
            for c in U:
                self.add([-reach[a, b], -edge[b, c], reach[a, c]])
        for a in U:
            self.add([-reach[a, a]])
        return self.fo(phi.body)

    # -- solving ------------------------------------------------------------------
    def stats(self) -> Stats:
        return Stats(self.size, self.pool.top, len(self.clauses))

    def solve(self, conflict_budget: int | None = None):
        with Solver(name=SOLVER, bootstrap_with=self.clauses) as s:
            if conflict_budget is None:
                ok = s.solve()
            else:
                s.conf_budget(conflict_budget)
                ok = s.solve_limited()
                if ok is None:
                    raise SearchBudgetExceeded(
                        f"SAT search exceeded {conflict_budget} conflicts at size {self.size}")
            if not ok:
                return None
            return set(l for l in s.get_model() if l > 0)

    def decode(self, model: set) -> MemoryStructure:
        def val(l):
            if l == self.T:
                return True
            if l == self.F:
                return False
            return (l in model) if l > 0 else (-l not in model)

        consts = dict(FIXED_CONSTS)
        for c in self.sig.constants:
            if c in FIXED_CONSTS:
                continue
            consts[c] = next(e for e in self.universe if val(self.const(c, e)))
        unary = {AUX: frozenset({0, 1, 2}), ADDRESSES: frozenset(self.addresses)}
        for u in self.sig.unary:
            if u in (AUX, ADDRESSES):
                continue
            unary[u] = frozenset(e for e in self.universe if val(self.unary(u, e)))
        binary = {}
        for r in self.sig.binary:
            binary[r] = frozenset((a, b) for a in self.universe for b in self.universe
                                  if val(self.binary(r, a, b)))
        return MemoryStructure(self.size, consts, unary, binary)
