"""Annotated program files: declarations, location annotations, edge code, checks."""
from __future__ import annotations

from . import dl
from . import prog as P
from .errors import ParseError, ProgramError, VocabularyError
from .memstruct import Vocabulary
from .syntax import Parser, _Fail, show_program, vocab_resolver
from .sl import show_sl

DECL_KEYWORDS = ("fields", "vars", "concepts", "roles", "ghost")


class _FileParser(Parser):
    def __init__(self, text: str):
        super().__init__(text)
        self.decls = {k: [] for k in DECL_KEYWORDS}
        self.vocab = Vocabulary.build()
        self.kind = vocab_resolver(self.vocab)

    def _refresh(self):
        d = self.decls
        try:
            self.vocab = Vocabulary.build(d["fields"], d["vars"], d["concepts"], d["roles"], d["ghost"])
        except VocabularyError as exc:
            t = self.toks[max(self.pos - 1, 0)]
            raise ParseError(str(exc), t.line, t.col) from None
        self.kind = vocab_resolver(self.vocab)
        self.memo.clear()

    def _names(self) -> list[str]:
        names = [self.ident()]
        while self.accept(","):
            names.append(self.ident())
        self.expect(";")
        return names

    def _semantic(self, msg: str, tok):
        raise ParseError(msg, tok.line, tok.col)

    def parse_file(self) -> P.ProgramGraph:
        locations, init = [], None
        shp, cnt, defs, code, edges = {}, {}, {}, {}, []
        checks, options = [], {}
        while self.tok.kind != "eof":
            t = self.tok
            word = self.ident()
            if word in DECL_KEYWORDS:
                self.decls[word].extend(self._names())
                self._refresh()
            elif word == "formula":
                name = self.ident()
                self.expect("=")
                phi = self.formula()
                self.expect(";")
                self.formulas[name] = phi
            elif word == "option":
                name = self.ident()
                self.expect("=")
                num = self.tok
                if num.kind != "num":
                    self.fail("expected a number")
                self.pos += 1
                self.expect(";")
                options[name] = int(num.text)
            elif word == "check":
                self.expect("sat")
                phi = self.formula()
                self.expect(";")
                checks.append(phi)
            elif word == "loc":
                name_tok = self.tok
                name = self.ident()
                if name in locations:
                    self._semantic(f"duplicate location {name}", name_tok)
                locations.append(name)
                if self.accept("init"):
                    if init is not None:
                        self._semantic("more than one init location", name_tok)
                    init = name
                self.expect("{")
                defs[name] = []
                while not self.accept("}"):
                    key = self.ident()
                    self.expect(":")
                    if key == "shp":
                        shp[name] = self.sl_formula()
                    elif key == "cnt":
                        cnt[name] = self.formula()
                    elif key == "def":
                        defs[name].append(self.formula())
                    else:
                        self.pos -= 2
                        self.fail(f"unknown annotation {key!r}")
                    self.expect(";")
                if name not in shp or name not in cnt:
                    self._semantic(f"location {name} needs both shp and cnt", name_tok)
            elif word == "edge":
                a_tok = self.tok
                a = self.ident()
                self.expect("->")
                b = self.ident()
                if (a, b) in code:
                    self._semantic(f"duplicate edge {a} -> {b}", a_tok)
                body = self.block()
                edges.append((a, b))
                code[(a, b)] = body
            else:
                self.pos -= 1
                self.fail(f"unexpected {word!r} at top level")
        for a, b in edges:
            for x in (a, b):
                if x not in locations:
                    raise ParseError(f"edge {a} -> {b} mentions unknown location {x}")
            if b == init:
                raise ParseError(f"edge {a} -> {b} enters the init location {init}")
        if locations and init is None:
            raise ParseError("no init location")
        # every program variable is declared; labels are assigned per edge
        labeled = {}
        for e, body in code.items():
            unknown = P.program_vars(body) - set(self.vocab.var_consts)
            if unknown:
                raise ParseError(f"edge {e[0]} -> {e[1]} uses undeclared variables {sorted(unknown)}")
            labeled[e] = P.assign_labels(body)
        try:
            return P.ProgramGraph(tuple(locations), tuple(edges), init, shp, cnt, labeled, self.vocab,
                                  defs=defs, formulas=dict(self.formulas), checks=checks,
                                  options=options, decls={k: list(v) for k, v in self.decls.items()})
        except ProgramError as exc:
            raise ParseError(str(exc)) from None


def parse_annotated(text: str) -> P.ProgramGraph:
    p = _FileParser(text)
    try:
        return p.parse_file()
    except _Fail:
        raise p.error() from None


def show_annotated(g: P.ProgramGraph) -> str:
    """Render a program graph back into the file format."""
    out = []
    for k in DECL_KEYWORDS:
        names = g.decls.get(k)
        if names:
            out.append(f"{k} {', '.join(names)};")
    for k, v in g.options.items():
        out.append(f"option {k} = {v};")
    for name, phi in g.formulas.items():
        out.append(f"formula {name} = {dl.show_formula(phi)};")
    for loc in g.locations:
        head = f"loc {loc} init {{" if loc == g.init else f"loc {loc} {{"
        out.append(head)
        out.append(f"  shp: {show_sl(g.shp[loc])};")
        for d in g.defs.get(loc, ()):
            out.append(f"  def: {dl.show_formula(d)};")
        out.append(f"  cnt: {dl.show_formula(g.cnt[loc])};")
        out.append("}")
    for a, b in g.edges:
        body = show_program(g.code[(a, b)], "  ")
        out.append(f"edge {a} -> {b} {{\n{body}\n}}")
    for phi in g.checks:
        out.append(f"check sat {dl.show_formula(phi)};")
    return "\n".join(out) + "\n"
