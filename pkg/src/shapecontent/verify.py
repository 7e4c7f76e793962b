"""Verification conditions, memory-structure axioms, bounded counterexample search."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import dl, fo
from . import prog as P
from . import wp
from .errors import PreconditionError, SearchBudgetExceeded
from .ground import Grounder, Signature
from .memstruct import (ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, REQUIRED_UNARY,
                        TRUE, MemoryStructure, Vocabulary, add_reserve, structure_to_json, validate)
from .sl import eval_sl, sl_partition
from .translate import alpha, beta, tr

DEFAULT_BOUND = 6

# ----------------------------------------------------------------------
# axioms


def _A(name):
    return dl.Atomic(name)


def _nom(name):
    return dl.Nominal(name)


def psi_m_axioms(vocab: Vocabulary) -> list[dl.LFormula]:
    """The memory-structure axioms, one formula per bullet item.

    The per-concept item ranges over the declared (non-required, non-exempt)
    concepts: applied to Addresses or Alloc it would be unsatisfiable.
    """
    aux, addr = _A(AUX), _A(ADDRESSES)
    alloc, targets, pool = _A(ALLOC), _A(POSSIBLE_TARGETS), _A(MEMPOOL)
    out = [
        dl.Equiv(aux, dl.cunion([_nom(NULL), _nom(TRUE), _nom(FALSE)])),
        dl.ConceptIncl(addr, dl.CNot(aux)),
        dl.Equiv(dl.COr(addr, aux), dl.TOP),
        dl.ConceptIncl(alloc, dl.CNot(pool)),
        dl.ConceptIncl(alloc, dl.CNot(targets)),
        dl.ConceptIncl(pool, dl.CNot(targets)),
        dl.Equiv(dl.cunion([alloc, targets, pool]), addr),
    ]
    for c in sorted(vocab.constants):
        out.append(dl.ConceptIncl(_nom(c), dl.CNot(pool)))
    for f in sorted(vocab.fields):
        out.append(dl.Func(dl.RoleName(f)))
        out.append(dl.ConceptIncl(addr, dl.Exists(dl.RoleName(f), dl.CNot(pool))))
    for f in sorted(vocab.fields):
        out.append(dl.ConceptIncl(pool, dl.Exists(dl.RoleName(f), dl.COr(_nom(NULL), _nom(FALSE)))))
    for c in sorted(declared_concepts(vocab)):
        out.append(dl.ConceptIncl(_A(c), dl.CNot(pool)))
    return out


def declared_concepts(vocab: Vocabulary) -> set:
    return {c for c in vocab.unary if c not in REQUIRED_UNARY and not vocab.is_exempt(c)}


def supplementary_axioms(vocab: Vocabulary) -> list[dl.LFormula]:
    """Requirements the bullet list leaves implicit.

    Distinct Aux constants, fields defined on Addresses only, the field items
    repeated for ghost twins of fields, and the remaining roles avoiding MemPool.
    """
    addr, pool = _A(ADDRESSES), _A(MEMPOOL)
    out = [dl.ConceptIncl(dl.CAnd(_nom(a), _nom(b)), dl.BOTTOM)
           for a, b in ((NULL, TRUE), (NULL, FALSE), (TRUE, FALSE))]
    for f in sorted(vocab.fields):
        out.append(dl.ConceptIncl(dl.Exists(dl.RoleName(f), dl.TOP), addr))
    for g in sorted(vocab.ghost_fields):
        r = dl.RoleName(g)
        out += [dl.Func(r), dl.ConceptIncl(addr, dl.Exists(r, dl.CNot(pool))),
                dl.ConceptIncl(pool, dl.Exists(r, dl.COr(_nom(NULL), _nom(FALSE)))),
                dl.ConceptIncl(dl.Exists(r, dl.TOP), addr)]
    for r in sorted(vocab.binary - vocab.field_like):
        if vocab.is_exempt(r):
            continue
        touching = dl.COr(dl.Exists(dl.RoleName(r), dl.TOP), dl.Exists(dl.Inverse(dl.RoleName(r)), dl.TOP))
        out.append(dl.ConceptIncl(touching, dl.CNot(pool)))
    return out


def structure_axioms(vocab: Vocabulary) -> list[dl.LFormula]:
    return psi_m_axioms(vocab) + supplementary_axioms(vocab)


def axioms_hold(struct: MemoryStructure, vocab: Vocabulary) -> bool:
    return all(dl.eval_formula(a, struct) for a in structure_axioms(vocab))


# ----------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class NoCounterexampleUpTo:
    bound: int

    def __str__(self):
        return f"NoCounterexampleUpTo({self.bound})"


@dataclass(frozen=True)
class Counterexample:
    structure: MemoryStructure
    witness: Mapping[str, object] = field(default_factory=dict)
    size: int = 0

    def __str__(self):
        return f"Counterexample(size={self.size})"


Verdict = NoCounterexampleUpTo | Counterexample


def find_model(body: fo.CT2Formula | None, vocab: Vocabulary, bound: int = DEFAULT_BOUND,
               extra: Sequence[dl.LFormula] = (), *, min_size: int = 4, symmetry: bool = True,
               conflict_budget: int | None = None, max_clauses: int | None = None,
               pad: bool = True) -> Verdict:
    """Smallest model of the axioms, ``body`` and ``extra`` with at most ``bound`` elements.

    Sizes are tried in increasing order; the first SAT answer is decoded.
    With ``pad`` the model gets one extra MemPool cell so it is a memory
    structure with a nonempty reserve.
    """
    if bound < 4:
        raise PreconditionError("bound must be at least 4 (Aux plus one address)")
    extra_unary, extra_binary, extra_consts = set(), set(), set()
    for phi in extra:
        s = dl.symbols(phi)
        extra_unary |= s.concepts
        extra_binary |= s.roles
        extra_consts |= s.constants
    if body is not None:
        c, u, b = fo.relations(body.body)
        extra_unary |= u
        extra_binary |= b - {body.forest}
        extra_consts |= c
    unknown = (extra_unary - vocab.unary) | (extra_binary - vocab.binary - vocab.free_binary) | (
        extra_consts - vocab.constants - vocab.free_consts)
    if unknown:
        raise PreconditionError(f"symbols outside the vocabulary: {sorted(unknown)}")
    sig = Signature.of(vocab)
    axioms = structure_axioms(vocab)
    for n in range(min_size, bound + 1):
        g = Grounder(n, sig, max_clauses=max_clauses)
        for a in axioms:
            g.assert_(g.formula(a))
        if body is not None:
            g.assert_(g.ct2(body))
        for phi in extra:
            g.assert_(g.formula(phi))
        if symmetry:
            g.symmetry_breaking()
        model = g.solve(conflict_budget)
        if model is not None:
            m = g.decode(model)
            witness = {c: m.element_name(m.consts[c]) for c in sorted(vocab.free_consts) if c in m.consts}
            if pad:
                m = add_reserve(m, vocab, 1)
            return Counterexample(m, witness, n)
    return NoCounterexampleUpTo(bound)


# ----------------------------------------------------------------------
# verification conditions


@dataclass(frozen=True)
class VerificationCondition:
    edge: tuple
    beta: fo.CT2Formula  # shape of the source location
    pre: dl.LFormula  # defs and cnt of the source location
    post: dl.LFormula  # Theta of (alpha(target shape), defs, not cnt)
    vocab: Vocabulary
    program: object  # the instrumented edge code
    free_constants: tuple = ()

    @property
    def conjunction(self) -> fo.CT2Formula:
        return fo.CT2Formula(fo.conj(self.beta.body, tr(self.pre), tr(self.post)),
                             self.beta.forest, self.beta.chunks, self.beta.next_field)

    def holds_in(self, struct: MemoryStructure) -> bool:
        """The conjunction, evaluated directly on ``struct``."""
        return (dl.eval_formula(self.pre, struct) and dl.eval_formula(self.post, struct)
                and fo.eval_ct2(self.beta, struct))


def _consts_of(phi) -> set:
    return set(dl.symbols(phi).constants)


def gen_vc(g: P.ProgramGraph, e: tuple) -> VerificationCondition:
    """The verification condition of edge ``e``: satisfiable iff the edge is not inductive."""
    src, dst = e
    base = g.vocab
    fields = sorted(base.fields)
    avoid = base.symbols()
    b = beta(g.shp[src], fields=fields, avoid=avoid)
    a_post, post_names = alpha(g.shp[dst], fields=fields, avoid=avoid)
    names = [c.concept for c in b.chunks] + post_names
    bar = wp.prepare(g.code[e], avoid)
    vocab = base.with_concepts(names).with_ext()
    target = dl.conj([a_post] + list(g.defs.get(dst, ())) + [dl.Not(g.cnt[dst])])
    post = wp.theta(bar, target, vocab)
    pre = g.full_cnt(src)
    free = sorted(((_consts_of(post) | _consts_of(pre)) - vocab.constants) | set(bar.labels) | {wp.ABO})
    vocab = vocab.with_free_consts(free)
    return VerificationCondition(e, b, pre, post, vocab, bar, tuple(free))


def discharge(vc: VerificationCondition, bound: int = DEFAULT_BOUND, **kw) -> Verdict:
    return find_model(vc.beta, vc.vocab, bound, [vc.pre, vc.post], **kw)


def revalidate(vc: VerificationCondition, cex: Counterexample) -> list[str]:
    """Problems with a counterexample; empty when it is a genuine model of the VC."""
    out = [str(v) for v in validate(cex.structure, vc.vocab)]
    if not axioms_hold(cex.structure, vc.vocab):
        out.append("structure axioms fail")
    if not fo.eval_ct2(vc.conjunction, cex.structure):
        out.append("conjunction is false")
    return out


# ----------------------------------------------------------------------
# concrete replay of a counterexample


CONCRETE = "CONCRETE"
SPURIOUS = "SPURIOUS-UNDER-FREE-SYMBOLS"


def _post_overrides(vc: VerificationCondition, m: MemoryStructure) -> dict:
    """Post-state values of the remaining relations, read off their ext copies."""
    out = {}
    for r, twin in vc.vocab.ext_of.items():
        if twin in m.unary:
            out[r] = m.unary[twin]
        elif twin in m.binary:
            out[r] = m.binary[twin]
    return out


def classify(g: P.ProgramGraph, vc: VerificationCondition, cex: Counterexample) -> str:
    """Replay the edge on the witness; CONCRETE when the run visibly breaks the target annotation."""
    m = cex.structure
    src, dst = vc.edge
    fields = sorted(g.vocab.fields)
    if not eval_sl(g.shp[src], m, fields) or not dl.eval_formula(g.full_cnt(src), m):
        return SPURIOUS
    choices = {y: m.consts[y] for y in vc.program.labels if y in m.consts}
    code = P.assign_labels(P.desugar(g.code[vc.edge], g.vocab.symbols()), g.vocab.symbols())
    out = P.run(code, m, choices, fields=g.vocab.fields & set(m.binary), post=_post_overrides(vc, m))
    if isinstance(out, P.Abort):
        return CONCRETE
    if not isinstance(out, P.ResultStructure):
        return SPURIOUS
    return CONCRETE if annotation_violation(g, dst, out.structure) else SPURIOUS


# ----------------------------------------------------------------------
# whole programs


@dataclass
class EdgeResult:
    edge: tuple
    verdict: Verdict | None
    bound: int
    time_ms: float
    classification: str | None = None
    problems: list = field(default_factory=list)
    error: str | None = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return "INCONCLUSIVE"
        return "VERIFIED" if isinstance(self.verdict, NoCounterexampleUpTo) else "REFUTED"


@dataclass
class ProgramReport:
    bound: int
    edges: list

    @property
    def status(self) -> str:
        st = [e.status for e in self.edges]
        if "REFUTED" in st:
            return "REFUTED"
        if "INCONCLUSIVE" in st:
            return "INCONCLUSIVE"
        return "VERIFIED"

    def to_json(self) -> dict:
        return report_json(self)


def check_edge(g: P.ProgramGraph, e: tuple, bound: int = DEFAULT_BOUND, **kw) -> EdgeResult:
    t0 = time.perf_counter()
    try:
        vc = gen_vc(g, e)
        verdict = discharge(vc, bound, **kw)
    except SearchBudgetExceeded as exc:
        return EdgeResult(e, None, bound, (time.perf_counter() - t0) * 1000, error=str(exc))
    res = EdgeResult(e, verdict, bound, (time.perf_counter() - t0) * 1000)
    if isinstance(verdict, Counterexample):
        res.problems = revalidate(vc, verdict)
        res.classification = classify(g, vc, verdict)
    return res


def check_program(g: P.ProgramGraph, bound: int = DEFAULT_BOUND, *, jobs: int = 1,
                  edges: Iterable[tuple] | None = None, **kw) -> ProgramReport:
    """Discharge every edge's VC; VERIFIED means no counterexample up to ``bound``."""
    todo = list(edges) if edges is not None else list(g.edges)
    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(lambda e: check_edge(g, e, bound, **kw), todo))
    else:
        results = [check_edge(g, e, bound, **kw) for e in todo]
    return ProgramReport(bound, results)


def report_json(rep: ProgramReport) -> dict:
    edges = []
    for r in rep.edges:
        d = {"edge": list(r.edge), "verdict": r.status, "bound": r.bound, "timeMs": round(r.time_ms, 1)}
        if isinstance(r.verdict, NoCounterexampleUpTo):
            d["result"] = str(r.verdict)
        if isinstance(r.verdict, Counterexample):
            d["result"] = str(r.verdict)
            d["witness"] = {"structure": structure_to_json(r.verdict.structure),
                            "freeConstants": dict(r.verdict.witness),
                            "searchSize": r.verdict.size}
            d["classification"] = r.classification
            d["revalidation"] = r.problems
        if r.error is not None:
            d["error"] = r.error
        edges.append(d)
    return {"status": rep.status, "bound": rep.bound, "edges": edges}


def dumps_report(rep: ProgramReport) -> str:
    return json.dumps(report_json(rep), indent=2, sort_keys=True)


# ----------------------------------------------------------------------
# reachability simulation


def define_concepts(g: P.ProgramGraph, loc, struct: MemoryStructure) -> MemoryStructure | None:
    """Interpret the partition concepts and the def-defined concepts at ``loc``.

    Returns None when ``struct`` does not satisfy the shape annotation.  Each
    def conjunct must be an equation with an atomic concept or role on one side.
    """
    fields = sorted(g.vocab.fields)
    parts = sl_partition(g.shp[loc], struct, fields)
    if parts is None:
        return None
    names = [f"P{i}" for i in range(1, len(parts) + 1)]
    m = struct.replace(unary=dict(zip(names, parts)))
    for d in g.defs.get(loc, ()):
        for eq in dl.flatten_and(d):
            m = _apply_definition(eq, m)
    return m


def _apply_definition(eq, m: MemoryStructure) -> MemoryStructure:
    if not isinstance(eq, dl.Equiv):
        raise PreconditionError(f"def clause {dl.show_formula(eq)} is not an equation")
    for lhs, rhs in ((eq.right, eq.left), (eq.left, eq.right)):
        if isinstance(lhs, dl.Atomic) and not _mentions(rhs, lhs.name):
            return m.replace(unary={lhs.name: dl.eval_concept(rhs, m)})
        if isinstance(lhs, dl.RoleName) and not _mentions(rhs, lhs.name):
            return m.replace(binary={lhs.name: dl.eval_role(rhs, m)})
    raise PreconditionError(f"def clause {dl.show_formula(eq)} has no atomic side to define")


def _mentions(x, name: str) -> bool:
    s = dl.symbols(x)
    return name in s.concepts or name in s.roles


def annotation_violation(g: P.ProgramGraph, loc, struct: MemoryStructure) -> str | None:
    """Why ``struct`` (with remaining relations re-defined) breaks loc's annotation, or None."""
    m = define_concepts(g, loc, struct)
    if m is None:
        return f"shape annotation of {loc} fails"
    if not dl.eval_formula(g.cnt[loc], m):
        return f"content annotation of {loc} fails"
    return None


@dataclass(frozen=True)
class Violation:
    path: tuple
    location: str
    reason: str


@dataclass
class ReachReport:
    runs: int = 0
    visited: int = 0
    aborts: int = 0
    out_of_reserve: int = 0
    violations: list = field(default_factory=list)


def simulate_reach(g: P.ProgramGraph, inits: Iterable[MemoryStructure], max_path_len: int = 6) -> ReachReport:
    """Execute every path from the init location of length at most ``max_path_len``.

    At each visited location the reached structure gets its partition and
    defined concepts re-computed and both annotations are checked.
    """
    rep = ReachReport()
    code = {e: P.assign_labels(P.desugar(c, g.vocab.symbols()), g.vocab.symbols()) for e, c in g.code.items()}
    for m0 in inits:
        rep.runs += 1
        start = define_concepts(g, g.init, m0)
        if start is None or not dl.eval_formula(g.cnt[g.init], start):
            raise PreconditionError("init structure does not satisfy the init annotations")
        frontier = [((), g.init, start)]
        for _ in range(max_path_len):
            nxt = []
            for path, loc, m in frontier:
                for e in g.successors(loc):
                    out = P.run(code[e], m, fields=g.vocab.fields & set(m.binary))
                    if isinstance(out, P.OutOfReserve):
                        rep.out_of_reserve += 1
                        continue
                    if isinstance(out, P.Abort):  # includes failed assumes
                        rep.aborts += 1
                        continue
                    p = path + (e,)
                    rep.visited += 1
                    why = annotation_violation(g, e[1], out.structure)
                    if why is not None:
                        rep.violations.append(Violation(p, e[1], why))
                        continue
                    nxt.append((p, e[1], define_concepts(g, e[1], out.structure)))
            frontier = nxt
    return rep
