"""Concrete syntax: tokenizer and parsers for L formulas, SLls assertions and loopless programs."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from . import dl
from . import prog as P
from . import sl
from .errors import ParseError
from .memstruct import EXT_SUFFIX, GHOST_SUFFIX, NULL, REQUIRED_UNARY, Vocabulary

# longest symbols first so that "|->" wins over "||" and "|"
SYMBOLS = ("|->", "<->", ":=", "<=", "==", "!=", "&&", "||", "->", "^-",
           "|", "&", "!", "\\", "(", ")", "[", "]", "{", "}", ",", ";", ".", "*", "=", "~", ":", "@")

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>(#|//)[^\n]*)"
    r"|(?P<nom>o:[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<num>[0-9]+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>" + "|".join(re.escape(s) for s in SYMBOLS) + ")")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, nom, num, sym, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        col = pos - start + 1
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


CONCEPT, ROLE, CONSTANT = "concept", "role", "constant"
_PARTITION = re.compile(r"P([A-Za-z0-9]*_)?[0-9]+$")
KEYWORDS = {"ex", "top", "bot", "func", "true", "false", "x"}


def default_kind(name: str) -> str | None:
    """Kind guess used without a vocabulary: capitalized names are concepts."""
    return CONCEPT if name[:1].isupper() else ROLE


def vocab_resolver(vocab: Vocabulary, extra_concepts=(), extra_roles=()) -> Callable[[str], str | None]:
    concepts = set(vocab.unary) | set(REQUIRED_UNARY) | set(extra_concepts)
    roles = set(vocab.binary) | set(vocab.free_binary) | set(extra_roles)

    def kind(name: str) -> str | None:
        bases = [name] + [name[: -len(sfx)] for sfx in (EXT_SUFFIX, GHOST_SUFFIX) if name.endswith(sfx)]
        for base in bases:
            if base in concepts:
                return CONCEPT
            if base in roles:
                return ROLE
            if _PARTITION.match(base):
                return CONCEPT
        return None
    return kind


class _Fail(Exception):
    pass


class Parser:
    def __init__(self, text: str, kind: Callable[[str], str | None] = default_kind,
                 formulas: dict | None = None):
        self.toks = tokenize(text) if isinstance(text, str) else text
        self.pos = 0
        self.kind = kind
        self.formulas = formulas if formulas is not None else {}
        self.memo: dict = {}
        self.furthest = (0, "")

    # -- token helpers --------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("sym", "ident")

    def fail(self, what: str):
        if self.pos >= self.furthest[0]:
            self.furthest = (self.pos, what)
        raise _Fail(what)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.pos += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected a name, found {t.text or 'end of input'!r}")
        self.pos += 1
        return t.text

    def error(self) -> ParseError:
        pos, what = self.furthest
        if pos < self.pos:
            pos, what = self.pos, what or "unexpected input"
        t = self.toks[min(pos, len(self.toks) - 1)]
        return ParseError(what or f"unexpected {t.text!r}", t.line, t.col)

    def attempt(self, fn, *args):
        save = self.pos
        try:
            return fn(*args)
        except _Fail:
            self.pos = save
            return None

    def memoized(self, key, fn):
        k = (key, self.pos)
        if k in self.memo:
            res, end = self.memo[k]
            if res is None:
                raise _Fail(key)
            self.pos = end
            return res
        start = self.pos
        try:
            res = fn()
        except _Fail:
            self.memo[k] = (None, start)
            self.pos = start
            raise
        self.memo[k] = (res, self.pos)
        return res

    # -- concepts -------------------------------------------------------
    def concept(self) -> dl.Concept:
        return self.memoized("concept", self._concept_or)

    def _concept_or(self):
        c = self._concept_and()
        while self.at("|") :
            save = self.pos
            self.pos += 1
            try:
                rhs = self._concept_and()
            except _Fail:
                self.pos = save
                break
            c = dl.COr(c, rhs)
        return c

    def _concept_and(self):
        c = self.concept_unary()
        while self.at("&"):
            save = self.pos
            self.pos += 1
            try:
                rhs = self.concept_unary()
            except _Fail:
                self.pos = save
                break
            c = dl.CAnd(c, rhs)
        return c

    def concept_unary(self) -> dl.Concept:
        return self.memoized("cunary", self._concept_unary)

    def _concept_unary(self):
        if self.accept("!"):
            return dl.CNot(self.concept_unary())
        if self.at("ex") and self.tok.kind == "ident":
            self.pos += 1
            r = self.role_postfix()
            self.expect(".")
            return dl.Exists(r, self.concept_unary())
        t = self.tok
        if t.kind == "nom":
            self.pos += 1
            return dl.Nominal(t.text[2:])
        if t.kind == "ident":
            if t.text == "top":
                self.pos += 1
                return dl.TOP
            if t.text == "bot":
                self.pos += 1
                return dl.BOTTOM
            if t.text not in KEYWORDS and self.kind(t.text) == CONCEPT:
                self.pos += 1
                return dl.Atomic(t.text)
            self.fail(f"{t.text!r} is not a concept")
        if self.at("("):
            self.pos += 1
            c = self.concept()
            self.expect(")")
            return c
        self.fail(f"expected a concept, found {t.text or 'end of input'!r}")

    # -- roles ----------------------------------------------------------
    def role(self) -> dl.Role:
        return self.memoized("role", self._role_or)

    def _role_or(self):
        r = self._role_and()
        while self.at("|"):
            save = self.pos
            self.pos += 1
            try:
                rhs = self._role_and()
            except _Fail:
                self.pos = save
                break
            r = dl.Union(r, rhs)
        return r

    def _role_and(self):
        r = self.role_postfix()
        while self.at("&") or self.at("\\"):
            save = self.pos
            op = self.tok.text
            self.pos += 1
            try:
                rhs = self.role_postfix()
            except _Fail:
                self.pos = save
                break
            r = dl.Intersect(r, rhs) if op == "&" else dl.Diff(r, rhs)
        return r

    def role_postfix(self) -> dl.Role:
        return self.memoized("rpost", self._role_postfix)

    def _role_postfix(self):
        r = self._role_primary()
        while self.accept("^-"):
            r = dl.Inverse(r)
        return r

    def _role_primary(self):
        # product first: a concept followed by the keyword x
        prod = self.attempt(self._product)
        if prod is not None:
            return prod
        t = self.tok
        if t.kind == "ident" and t.text not in KEYWORDS and self.kind(t.text) == ROLE:
            self.pos += 1
            return dl.RoleName(t.text)
        if self.at("("):
            pair = self.attempt(self._pair)
            if pair is not None:
                return pair
            self.pos += 1
            r = self.role()
            self.expect(")")
            return r
        self.fail(f"expected a role, found {t.text or 'end of input'!r}")

    def _product(self):
        left = self.concept_unary()
        if not (self.tok.kind == "ident" and self.tok.text == "x"):
            self.fail("expected 'x'")
        self.pos += 1
        return dl.Product(left, self.concept_unary())

    def _pair(self):
        self.expect("(")
        a = self.tok
        if a.kind != "nom":
            self.fail("expected a nominal")
        self.pos += 1
        self.expect(",")
        b = self.tok
        if b.kind != "nom":
            self.fail("expected a nominal")
        self.pos += 1
        self.expect(")")
        return dl.pair(a.text[2:], b.text[2:])

    # -- formulas -------------------------------------------------------
    def formula(self) -> dl.LFormula:
        return self.memoized("formula", self._implies)

    def _implies(self):
        left = self._or()
        if self.accept("->"):
            return dl.Implies(left, self._implies())
        return left

    def _or(self):
        f = self._and()
        while self.accept("||"):
            f = dl.Or(f, self._and())
        return f

    def _and(self):
        f = self._not()
        while self.accept("&&"):
            f = dl.And(f, self._not())
        return f

    def _not(self):
        if self.at("!"):
            # a negated concept on the left of an inclusion binds tighter
            rel = self.attempt(self._relation)
            if rel is not None:
                return rel
            self.pos += 1
            return dl.Not(self._not())
        return self._atom()

    def _atom(self):
        t = self.tok
        if t.kind == "ident" and t.text in ("true", "false") and not self.peek().text in ("<=", "=="):
            self.pos += 1
            return dl.TRUE if t.text == "true" else dl.FALSE
        if t.kind == "ident" and t.text == "func" and self.peek().text == "(":
            self.pos += 2
            r = self.role()
            self.expect(")")
            return dl.Func(r)
        if self.accept("@"):
            name = self.ident()
            if name not in self.formulas:
                self.pos -= 1
                self.fail(f"unknown formula @{name}")
            return self.formulas[name]
        if self.at("("):
            inner = self.attempt(self._paren_formula)
            if inner is not None:
                return inner
        return self._relation()

    def _paren_formula(self):
        self.expect("(")
        f = self.formula()
        self.expect(")")
        if self.at("<=") or self.at("==") or self.at("x") or self.at("^-") or self.at("|") or self.at("&"):
            self.fail("parenthesized term, not formula")
        return f

    def _relation(self):
        save = self.pos
        for side in (self.concept, self.role):
            self.pos = save
            try:
                left = side()
            except _Fail:
                continue
            if self.at("<=") or self.at("=="):
                op = self.tok.text
                self.pos += 1
                try:
                    right = side()
                except _Fail:
                    continue
                if op == "<=":
                    return dl.ConceptIncl(left, right) if side == self.concept else dl.RoleIncl(left, right)
                return dl.Equiv(left, right)
        self.pos = save
        self.fail(f"expected an L formula, found {self.tok.text or 'end of input'!r}")

    # -- separation logic -----------------------------------------------
    def sl_formula(self) -> sl.SLFormula:
        pure = self.attempt(self._pure_then_bar)
        spatial = self._spatial()
        return sl.SLFormula(tuple(pure or ()), tuple(spatial))

    def _value(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in ("emp", "ls", "true"):
            self.fail(f"expected a variable or null, found {t.text or 'end of input'!r}")
        self.pos += 1
        return t.text

    def _pure_then_bar(self):
        atoms = [self._pure_atom()]
        while self.accept("&") or self.accept("&&"):
            atoms.append(self._pure_atom())
        self.expect("|")
        return atoms

    def _pure_atom(self):
        if self.at("true") and self.tok.kind == "ident":
            self.pos += 1
            return sl.PureTrue()
        a = self._value()
        if self.accept("="):
            return sl.PureEq(a, self._value())
        self.expect("!=")
        return sl.PureNeq(a, self._value())

    def _spatial(self):
        if self.at("emp"):
            self.pos += 1
            return []
        chunks = [self._chunk()]
        while self.accept("*"):
            chunks.append(self._chunk())
        return chunks

    def _chunk(self):
        if self.at("ls") and self.peek().text == "(":
            self.pos += 2
            a = self._value()
            self.expect(",")
            b = self._value()
            self.expect(")")
            return sl.Ls(a, b)
        var = self._value()
        self.expect("|->")
        self.expect("[")
        bindings = []
        if not self.at("]"):
            while True:
                f = self.ident()
                self.expect(":")
                bindings.append((f, self._value()))
                if not self.accept(","):
                    break
        self.expect("]")
        return sl.PointsTo(var, tuple(bindings))

    # -- programs -------------------------------------------------------
    def program(self, closing: str | None = None):
        cmds = []
        while not (self.tok.kind == "eof" or (closing and self.at(closing))):
            if self.accept(";"):
                continue
            cmds.append(self.command())
            # a command ending in a block needs no separator
            braced = self.toks[self.pos - 1].text == "}"
            if not (braced or self.tok.kind == "eof" or (closing and self.at(closing))):
                self.expect(";")
        if not cmds:
            return P.Skip()
        return cmds[0] if len(cmds) == 1 else P.Seq(tuple(cmds))

    def block(self):
        self.expect("{")
        body = self.program("}")
        self.expect("}")
        return body

    def command(self):
        label = None
        if self.tok.kind == "ident" and self.peek().text == ":" and self.peek(2).kind == "ident":
            label = self.tok.text
            self.pos += 2
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected a command, found {t.text or 'end of input'!r}")
        if t.text == "skip":
            self.pos += 1
            return P.Skip()
        if t.text == "if" and self.peek().text != ":=":
            self.pos += 1
            cond = self.cond()
            self.expect("then")
            then = self.block()
            if self.accept("else"):
                return P.IfThenElse(cond, then, self.block())
            return P.IfThen(cond, then)
        if t.text in ("dispose", "assume") and self.peek().text == "(":
            self.pos += 2
            if t.text == "dispose":
                v = self.ident()
                self.expect(")")
                return P.Dispose(v)
            b = self.cond()
            self.expect(")")
            return P.Assume(b)
        var = self.ident()
        if self.accept("."):
            f = self.ident()
            self.expect(":=")
            return P.FieldAssign(var, f, self.expr())
        self.expect(":=")
        if self.at("new"):
            self.pos += 1
            return P.New(var, label)
        return P.Assign(var, self.expr(), label)

    def expr(self):
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected an expression, found {t.text or 'end of input'!r}")
        self.pos += 1
        if t.text == "null":
            return P.Null()
        if t.text in ("T", "F"):
            return P.BoolLit(t.text == "T")
        if self.at(".") and self.peek().kind == "ident":
            self.pos += 1
            return P.FieldRead(t.text, self.ident())
        return P.Var(t.text)

    def cond(self):
        b = self._cond_and()
        while self.accept("or"):
            b = P.BOr(b, self._cond_and())
        return b

    def _cond_and(self):
        b = self._cond_not()
        while self.accept("and"):
            b = P.BAnd(b, self._cond_not())
        return b

    def _cond_not(self):
        if self.accept("~"):
            return P.BNot(self._cond_not())
        return self._cond_atom()

    def _cond_atom(self):
        if self.at("("):
            self.pos += 1
            b = self.cond()
            self.expect(")")
            return b
        if self.at("allocated") and self.peek().text == "(":
            self.pos += 2
            v = self.ident()
            self.expect(")")
            return P.Allocated(v)
        e = self.expr()
        if self.accept("="):
            return P.Eq(e, self.expr())
        if self.accept("!="):
            return P.BNot(P.Eq(e, self.expr()))
        if isinstance(e, P.BoolLit):
            return P.BConst(e.value)
        self.fail("expected '=' or '!=' in a condition")

    # -- entry helper ---------------------------------------------------
    def finish(self, result):
        if self.tok.kind != "eof":
            if self.pos >= self.furthest[0]:
                self.furthest = (self.pos, f"unexpected {self.tok.text!r}")
            raise self.error()
        return result


def _run(text, method, kind=default_kind, formulas=None):
    p = Parser(text, kind, formulas)
    try:
        return p.finish(getattr(p, method)())
    except _Fail:
        raise p.error() from None


def parse_formula(text: str, vocab: Vocabulary | None = None, formulas: dict | None = None) -> dl.LFormula:
    return _run(text, "formula", vocab_resolver(vocab) if vocab else default_kind, formulas)


def parse_concept(text: str, vocab: Vocabulary | None = None) -> dl.Concept:
    return _run(text, "concept", vocab_resolver(vocab) if vocab else default_kind)


def parse_role(text: str, vocab: Vocabulary | None = None) -> dl.Role:
    return _run(text, "role", vocab_resolver(vocab) if vocab else default_kind)


def parse_sl(text: str) -> sl.SLFormula:
    return _run(text, "sl_formula")


def parse_loopless(text: str):
    return _run(text, "program")


def parse_condition(text: str):
    return _run(text, "cond")


# ----------------------------------------------------------------------
# printing programs in the surface syntax


def show_program(s, indent: str = "") -> str:
    """Multi-line rendering; one command per line, nested blocks indented."""
    pad = indent
    if isinstance(s, P.Seq):
        return ";\n".join(show_program(c, indent) for c in s.cmds)
    if isinstance(s, P.IfThenElse):
        return (f"{pad}if {show_cond(s.cond)} then {{\n{show_program(s.then, indent + '  ')}\n{pad}}}"
                f" else {{\n{show_program(s.orelse, indent + '  ')}\n{pad}}}")
    if isinstance(s, P.IfThen):
        return f"{pad}if {show_cond(s.cond)} then {{\n{show_program(s.then, indent + '  ')}\n{pad}}}"
    if isinstance(s, P.Assume):
        return f"{pad}assume({show_cond(s.cond)})"
    return pad + str(s)


def show_cond(b) -> str:
    if isinstance(b, P.BNot):
        return f"~{_wrap_cond(b.arg)}"
    if isinstance(b, P.BAnd):
        return f"{_wrap_cond(b.left)} and {_wrap_cond(b.right)}"
    if isinstance(b, P.BOr):
        return f"{_wrap_cond(b.left)} or {_wrap_cond(b.right)}"
    return f"({b})" if isinstance(b, P.Eq) else str(b)


def _wrap_cond(b) -> str:
    s = show_cond(b)
    return s if s.startswith("(") or isinstance(b, (P.BConst, P.Allocated)) else f"({s})"
