"""Random programs, structures and formulas for the differential checks."""
from __future__ import annotations

import random

from shapecontent import prog as P
from shapecontent.memstruct import MEMPOOL, Vocabulary, extend_with_ext
from shapecontent.structgen import random_structure
from shapecontent.syntax import parse_formula

VOCAB = Vocabulary.build(["next", "f"], ["a", "b"], ["C"], ["r"])
VARS = ("a", "b")
FIELDS = ("next", "f")

# twenty formulas over the small vocabulary; C and r are the remaining symbols
FORMULAS = [
    "C <= Alloc",
    "ex next . o:a <= C",
    "Alloc <= ex next^- . top",
    "r <= next | f",
    "o:a <= Alloc & !C",
    "ex next . Alloc <= MemPool | PossibleTargets",
    "o:b == o:a",
    "func(next | r)",
    "Alloc & !C <= bot",
    "o:a <= ex next . o:b",
    "ex f . o:T <= C | o:null",
    "next & (Alloc x Alloc) <= r",
    "PossibleTargets <= ex next^- . Alloc",
    "!(o:a <= Alloc) || o:a <= ex next . Alloc",
    "func(next^- & (top x Alloc))",
    "ex r . C <= ex f^- . top",
    "Alloc <= ex next . (o:null | Alloc)",
    "C & ex next . C <= bot",
    "(o:a, o:b) <= next -> o:b <= C",
    "MemPool <= ex next . o:null",
]


def formulas(vocab: Vocabulary = VOCAB):
    return [parse_formula(t, vocab) for t in FORMULAS]


def expr(rng: random.Random, reads: bool = True):
    k = rng.random()
    if k < 0.45:
        return P.Var(rng.choice(VARS))
    if k < 0.7 or not reads:
        return P.Null()
    return P.FieldRead(rng.choice(VARS), rng.choice(FIELDS))


def cond(rng: random.Random, depth: int = 0):
    k = rng.random()
    if depth < 1 and k < 0.15:
        return P.BNot(cond(rng, depth + 1))
    if depth < 1 and k < 0.25:
        return (P.BAnd if rng.random() < 0.5 else P.BOr)(cond(rng, depth + 1), cond(rng, depth + 1))
    return P.Eq(expr(rng), expr(rng))


def command(rng: random.Random, budget: list, depth: int = 0):
    budget[0] -= 1
    v = rng.choice(VARS)
    k = rng.random()
    if k < 0.16:
        return P.Assign(v, expr(rng))
    if k < 0.32:
        return P.FieldAssign(v, rng.choice(FIELDS), expr(rng))
    if k < 0.44:
        return P.New(v)
    if k < 0.52:
        return P.Dispose(v)
    if k < 0.6:
        return P.Assume(cond(rng))
    if k < 0.64:
        return P.Skip()
    if depth < 2 and budget[0] > 1:
        then = block(rng, budget, depth + 1)
        if rng.random() < 0.3:
            return P.IfThen(cond(rng), then)
        return P.IfThenElse(cond(rng), then, block(rng, budget, depth + 1))
    return P.Assign(v, expr(rng))


def block(rng: random.Random, budget: list, depth: int):
    n = rng.randint(1, max(1, min(2, budget[0])))
    return P.seq(*[command(rng, budget, depth) for _ in range(n) if budget[0] > 0] or [P.Skip()])


def program(rng: random.Random, max_commands: int = 6):
    budget = [rng.randint(1, max_commands)]
    cmds = []
    while budget[0] > 0:
        cmds.append(command(rng, budget))
    return P.seq(*cmds)


def structure(rng: random.Random, max_size: int = 7, vocab: Vocabulary = VOCAB):
    """A valid structure of at most ``max_size`` elements with one reserve cell."""
    return random_structure(rng, vocab, rng.randint(1, max_size - 3), reserve=1)


def random_post(rng: random.Random, m, vocab: Vocabulary = VOCAB) -> dict:
    """Arbitrary post-state values for the remaining relations, avoiding MemPool."""
    live = [e for e in m.universe if e not in m.concept(MEMPOOL)]
    out = {}
    for r in sorted(vocab.rem()):
        if r in vocab.unary:
            out[r] = {e for e in live if rng.random() < 0.4}
        else:
            out[r] = {(a, b) for a in live for b in live if rng.random() < 0.15}
    return out


def oracle_pre(m1, out, post, choices, vocab: Vocabulary = VOCAB):
    """Pre-state with ext copies of the post-state and the witness constants."""
    m2 = out.structure if isinstance(out, P.ResultStructure) else m1.replace(
        unary={k: v for k, v in post.items() if k in vocab.unary},
        binary={k: v for k, v in post.items() if k in vocab.binary})
    return extend_with_ext(m1, m2, vocab).replace(consts=choices)


def with_temps(m, s):
    """Interpret the desugaring temporaries (and the abort flag) as null."""
    extra = {v: 0 for v in P.program_vars(s) | {"abo"} if v not in m.consts}
    return m.replace(consts=extra)
