"""Command-line front end: verify, interpret, translate, wp, validate."""
from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import dl, fo
from . import prog as P
from . import verify as V
from . import wp
from .annotations import parse_annotated
from .errors import SearchBudgetExceeded, ShapeContentError, StructureFileError
from .examples import corpus_path
from .memstruct import (MemoryStructure, add_reserve, describe, structure_from_json, structure_to_json,
                        validate)
from .sl import show_sl
from .syntax import parse_formula, parse_sl
from .translate import alpha, beta, tr

EXIT_OK, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = corpus_path(p.name)
    if bundled.exists():
        return bundled
    raise UsageError(f"no such file: {path}")


def load_program(path: str) -> P.ProgramGraph:
    return parse_annotated(_resolve(path).read_text(encoding="utf-8"))


def _edge(g: P.ProgramGraph, text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"edge must be written src:dst, got {text!r}")
    e = tuple(parts)
    if e not in g.code:
        raise UsageError(f"{text} is not an edge of the program")
    return e


def _formula(g: P.ProgramGraph | None, text: str) -> dl.LFormula:
    if g is None:
        return parse_formula(text)
    if text.startswith("@") and text[1:] in g.formulas:
        return g.formulas[text[1:]]
    return parse_formula(text, g.vocab, g.formulas)


def _emit(out, text: str) -> None:
    out.write(text)
    if not text.endswith("\n"):
        out.write("\n")


# ----------------------------------------------------------------------
# modes


def cmd_verify(args, out) -> int:
    g = load_program(args.file)
    bound = args.bound if args.bound is not None else g.options.get("bound", V.DEFAULT_BOUND)
    edges = [_edge(g, e) for e in args.edge] if args.edge else None
    rep = V.check_program(g, bound, jobs=args.jobs, edges=edges)
    checks = []
    for phi in g.checks:
        r = V.find_model(None, g.vocab, bound, [phi])
        checks.append((phi, r))
    if args.format == "json":
        doc = V.report_json(rep)
        doc["checks"] = [{"formula": dl.show_formula(phi),
                          "result": "SAT" if isinstance(r, V.Counterexample) else f"UNSAT-UP-TO({bound})",
                          **({"model": structure_to_json(r.structure, g.vocab)} if isinstance(r, V.Counterexample) else {})}
                         for phi, r in checks]
        _emit(out, json.dumps(doc, indent=2, sort_keys=True))
    else:
        for r in rep.edges:
            line = f"edge {r.edge[0]} -> {r.edge[1]}: {r.status}"
            if isinstance(r.verdict, V.NoCounterexampleUpTo):
                line += f" (no counterexample up to {r.bound} elements)"
            elif isinstance(r.verdict, V.Counterexample):
                line += f" ({r.classification}, witness found at {r.verdict.size} elements)"
            elif r.error:
                line += f" ({r.error})"
            _emit(out, f"{line}  [{r.time_ms:.0f} ms]")
            if isinstance(r.verdict, V.Counterexample):
                _emit(out, "  witness: " + describe(r.verdict.structure))
                if r.verdict.witness:
                    _emit(out, "  free constants: " + ", ".join(f"{k}={v}" for k, v in r.verdict.witness.items()))
                for p in r.problems:
                    _emit(out, "  revalidation: " + p)
        for phi, r in checks:
            if isinstance(r, V.Counterexample):
                _emit(out, f"check sat: SAT, model of {r.size} elements: {describe(r.structure)}")
            else:
                _emit(out, f"check sat: UNSAT up to {bound} elements")
        if g.edges:
            _emit(out, f"status: {rep.status} (bound {bound})")
    return {"VERIFIED": EXIT_OK, "REFUTED": EXIT_REFUTED}.get(rep.status, EXIT_INCONCLUSIVE)


def _load_structure(path: str, g: P.ProgramGraph | None, check: bool = True) -> MemoryStructure:
    try:
        doc = json.loads(_resolve(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StructureFileError(f"{path}: not valid JSON: {exc}") from None
    return structure_from_json(doc, g.vocab if g else None, check=check)


def cmd_interpret(args, out) -> int:
    g = load_program(args.file)
    m = _load_structure(args.structure, g)
    if args.reserve and m.reserve < args.reserve:
        m = add_reserve(m, g.vocab, args.reserve - m.reserve)
    path = [_edge(g, e) for e in args.path.split(",")] if args.path else []
    choices = {}
    for item in args.choice or ():
        k, _, v = item.partition("=")
        names = [m.element_name(e) for e in m.universe]
        if v not in names:
            raise UsageError(f"unknown element {v!r} in choice {item!r}")
        choices[k] = names.index(v)
    if args.seed is not None:
        rng = random.Random(args.seed)
        for e in path:
            for c in P.commands(g.code[e]):
                if isinstance(c, P.New) and c.label not in choices:
                    choices[c.label] = rng.choice(sorted(m.mempool)) if m.mempool else None
        choices = {k: v for k, v in choices.items() if v is not None}
    res = P.run_path(g, path, m, choices or None)
    if isinstance(res, P.ResultStructure):
        if args.format == "json":
            _emit(out, json.dumps({"result": "ok", "structure": structure_to_json(res.structure, g.vocab),
                                   "choices": {k: res.structure.element_name(v) for k, v in res.choices.items()}},
                                  indent=2, sort_keys=True))
        else:
            _emit(out, describe(res.structure))
            loc = path[-1][1] if path else g.init
            why = V.annotation_violation(g, loc, res.structure)
            _emit(out, f"annotations of {loc}: " + (why or "hold"))
        return EXIT_OK
    kind = "abort" if isinstance(res, P.Abort) else "out-of-reserve"
    if args.format == "json":
        _emit(out, json.dumps({"result": kind, "reason": res.reason}, sort_keys=True))
    else:
        _emit(out, f"{kind}: {res.reason}")
    return EXIT_REFUTED if isinstance(res, P.Abort) else EXIT_INCONCLUSIVE


def cmd_translate(args, out) -> int:
    g = load_program(args.file) if args.file else None
    if args.formula:
        phi = _formula(g, args.formula)
        _emit(out, fo.show_fo2(tr(phi)))
        return EXIT_OK
    if args.sl:
        shp = parse_sl(args.sl)
        fields = sorted(g.vocab.fields) if g else None
        a, _ = alpha(shp, fields=fields)
        _emit(out, "alpha: " + dl.show_formula(a))
        _emit(out, "beta: " + str(beta(shp, fields=fields)))
        return EXIT_OK
    if g is None:
        raise UsageError("translate needs a program file, --formula or --sl")
    fields = sorted(g.vocab.fields)
    for loc in g.locations:
        a, _ = alpha(g.shp[loc], fields=fields, avoid=g.vocab.symbols())
        _emit(out, f"loc {loc}")
        _emit(out, f"  shp: {show_sl(g.shp[loc])}")
        _emit(out, f"  alpha: {dl.show_formula(a)}")
        _emit(out, f"  beta: {beta(g.shp[loc], fields=fields, avoid=g.vocab.symbols())}")
        _emit(out, f"  tr(cnt): {fo.show_fo2(tr(g.full_cnt(loc)))}")
    return EXIT_OK


def cmd_wp(args, out) -> int:
    g = load_program(args.file)
    e = _edge(g, args.edge)
    phi = _formula(g, args.formula)
    if args.raw:
        bar = wp.prepare(g.code[e], g.vocab.symbols())
        res = wp.psi(bar.body, phi, g.vocab.fields)
    else:
        res = wp.theta(g.code[e], phi, g.vocab)
    _emit(out, dl.show_formula(res))
    return EXIT_OK


def cmd_validate(args, out) -> int:
    g = load_program(args.program) if args.program else None
    m = _load_structure(args.file, g, check=False)
    if g is not None:
        vocab = g.vocab
    else:
        from .memstruct import vocabulary_of

        doc = json.loads(_resolve(args.file).read_text(encoding="utf-8"))
        vocab = vocabulary_of(m, doc.get("fields", ()), doc.get("ghosts", {}))
    bad = validate(m, vocab)
    if args.format == "json":
        _emit(out, json.dumps({"valid": not bad, "violations": [
            {"condition": v.condition, "message": v.message} for v in bad]}, indent=2, sort_keys=True))
    else:
        _emit(out, "valid" if not bad else "\n".join(map(str, bad)))
    return EXIT_OK if not bad else EXIT_REFUTED


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shapecontent", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--text", dest="format", action="store_const", const="text")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized choices")
    common.add_argument("--reserve", type=int, default=4, help="MemPool reserve size (default 4)")
    sub = ap.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("verify", parents=[common], help="discharge every edge's verification condition")
    p.add_argument("file")
    p.add_argument("--bound", type=int, default=None, help="largest universe searched (default 6)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--edge", action="append", help="only this edge, written src:dst")
    p.set_defaults(func=cmd_verify, default_format="json")

    p = sub.add_parser("interpret", parents=[common], help="run a path of edges on a structure file")
    p.add_argument("file")
    p.add_argument("--structure", required=True)
    p.add_argument("--path", default="", help="comma-separated edges src:dst")
    p.add_argument("--choice", action="append", help="label=element witness for a new or a field read")
    p.set_defaults(func=cmd_interpret, default_format="text")

    p = sub.add_parser("translate", parents=[common], help="print tr, alpha and beta images")
    p.add_argument("file", nargs="?")
    p.add_argument("--formula")
    p.add_argument("--sl")
    p.set_defaults(func=cmd_translate, default_format="text")

    p = sub.add_parser("wp", parents=[common], help="print the backwards propagation of a formula")
    p.add_argument("file")
    p.add_argument("--edge", required=True)
    p.add_argument("--formula", required=True, help="L formula or @name of a declared formula")
    p.add_argument("--raw", action="store_true", help="Psi of the instrumented code, without ext renaming")
    p.set_defaults(func=cmd_wp, default_format="text")

    p = sub.add_parser("validate", parents=[common], help="check a structure file")
    p.add_argument("file")
    p.add_argument("--program", help="annotated program supplying the vocabulary")
    p.set_defaults(func=cmd_validate, default_format="text")
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args, out)
    except SearchBudgetExceeded as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (UsageError, ShapeContentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
