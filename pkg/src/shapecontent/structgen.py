"""Structure generators: exhaustive (scalar or numpy-batched) and random.

Generated structures satisfy conditions (1)-(9).  The nonempty-reserve
condition is not imposed because a finite model extends to one with a
reserve by adding fresh MemPool cells.
"""
from __future__ import annotations

import itertools
import random
from typing import Iterable, Iterator

import numpy as np

from .bits import BatchView
from .memstruct import (ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE,
                        MemoryStructure, Vocabulary)

CLASSES = (ALLOC, POSSIBLE_TARGETS, MEMPOOL)
_AUX = (0, 1, 2)


def _layout(n_addresses: int, classes: tuple) -> dict:
    size = 3 + n_addresses
    addr = range(3, size)
    pool = frozenset(a for a, c in zip(addr, classes) if c == MEMPOOL)
    return {
        "size": size,
        "addresses": addr,
        "pool": pool,
        "live": [e for e in range(size) if e not in pool],
        "unary": {AUX: frozenset(_AUX), ADDRESSES: frozenset(addr),
                  **{k: frozenset(a for a, c in zip(addr, classes) if c == k) for k in CLASSES}},
    }


def class_assignments(n_addresses: int) -> Iterator[tuple]:
    return itertools.product(CLASSES, repeat=n_addresses)


def _subsets(elems: list) -> list[frozenset]:
    return [frozenset(c) for r in range(len(elems) + 1) for c in itertools.combinations(elems, r)]


def all_structures(n_addresses: int, fields: Iterable[str] = (), concepts: Iterable[str] = (),
                   variables: Iterable[str] = ()) -> Iterator[MemoryStructure]:
    """Every structure over the vocabulary with exactly ``n_addresses`` addresses."""
    fields, concepts, variables = sorted(fields), sorted(concepts), sorted(variables)
    for classes in class_assignments(n_addresses):
        lay = _layout(n_addresses, classes)
        live, pool = lay["live"], lay["pool"]
        cells = [(f, a) for f in fields for a in lay["addresses"]]
        cell_choices = [(0, 2) if a in pool else live for f, a in cells]
        subsets = _subsets(live)
        for vals in itertools.product(*cell_choices):
            binary = {f: set() for f in fields}
            for (f, a), v in zip(cells, vals):
                binary[f].add((a, v))
            binary = {f: frozenset(p) for f, p in binary.items()}
            for cs in itertools.product(subsets, repeat=len(concepts)):
                unary = dict(lay["unary"])
                unary.update(zip(concepts, cs))
                for vs in itertools.product(live, repeat=len(variables)):
                    consts = {NULL: 0, TRUE: 1, FALSE: 2, **dict(zip(variables, vs))}
                    yield MemoryStructure(lay["size"], consts, unary, binary)


def structures_up_to(max_size: int, fields=(), concepts=(), variables=()) -> Iterator[MemoryStructure]:
    for n in range(1, max_size - 2):
        yield from all_structures(n, fields, concepts, variables)


def _mask(elems) -> int:
    m = 0
    for e in elems:
        m |= 1 << e
    return m


def batch_spaces(n_addresses: int, fields: Iterable[str] = (), concepts: Iterable[str] = (),
                 variables: Iterable[str] = ()) -> Iterator[BatchView]:
    """The same space as :func:`all_structures`, one numpy batch per class assignment."""
    fields, concepts, variables = sorted(fields), sorted(concepts), sorted(variables)
    for classes in class_assignments(n_addresses):
        lay = _layout(n_addresses, classes)
        size, live, pool = lay["size"], lay["live"], lay["pool"]
        cells = [(f, a) for f in fields for a in lay["addresses"]]
        dims = [np.array((0, 2) if a in pool else live) for f, a in cells]
        subset_masks = np.array([_mask(s) for s in _subsets(live)], dtype=np.int64)
        dims += [subset_masks] * len(concepts)
        dims += [np.array(live)] * len(variables)
        grids = np.meshgrid(*dims, indexing="ij") if dims else []
        flat = [g.ravel() for g in grids]
        lanes = flat[0].size if flat else 1
        it = iter(flat)
        rows = {}
        for f in fields:
            r = [0] * size
            for a in lay["addresses"]:
                r[a] = np.left_shift(np.int64(1), next(it).astype(np.int64))
            rows[f] = tuple(r)
        masks = {k: _mask(v) for k, v in lay["unary"].items()}
        for c in concepts:
            masks[c] = next(it)
        consts = {NULL: 0, TRUE: 1, FALSE: 2}
        for v in variables:
            consts[v] = next(it).astype(np.int64)
        yield BatchView(size, consts, masks, rows, lanes)


def space_size(n_addresses: int, n_fields: int, n_concepts: int, n_vars: int) -> int:
    total = 0
    for classes in class_assignments(n_addresses):
        p = sum(c == MEMPOOL for c in classes)
        live = 3 + n_addresses - p
        total += (live ** (n_addresses - p) * 2 ** p) ** n_fields * (2 ** live) ** n_concepts * live ** n_vars
    return total


def lane(view: BatchView, i: int) -> MemoryStructure:
    """Materialize lane ``i`` of a batch as a scalar structure."""
    def pick(v):
        return int(v[i]) if isinstance(v, np.ndarray) else int(v)

    n = view.size
    consts = {k: pick(v) for k, v in view._consts.items()}
    unary = {k: frozenset(e for e in range(n) if (pick(m) >> e) & 1) for k, m in view._masks.items()}
    binary = {k: frozenset((a, b) for a in range(n) for b in range(n) if (pick(r[a]) >> b) & 1)
              for k, r in view._rows.items()}
    return MemoryStructure(n, consts, unary, binary)


# ----------------------------------------------------------------------
# random structures


def random_structure(rng: random.Random, vocab: Vocabulary, n_addresses: int, *,
                     reserve: int = 1, density: float = 0.3) -> MemoryStructure:
    """A valid structure for ``vocab`` with ``reserve`` MemPool cells among the addresses."""
    size = 3 + n_addresses
    addr = list(range(3, size))
    pool = set(addr[len(addr) - reserve:]) if reserve else set()
    alloc, targets = set(), set()
    for a in addr:
        if a not in pool:
            (alloc if rng.random() < 0.75 else targets).add(a)
    live = [e for e in range(size) if e not in pool]
    consts = {NULL: 0, TRUE: 1, FALSE: 2}
    for c in sorted(vocab.constants | vocab.free_consts):
        if c not in consts:
            consts[c] = rng.choice([0] + sorted(alloc)) if rng.random() < 0.8 else rng.choice(live)
    unary = {AUX: frozenset(_AUX), ADDRESSES: frozenset(addr), ALLOC: frozenset(alloc),
             POSSIBLE_TARGETS: frozenset(targets), MEMPOOL: frozenset(pool)}
    for u in sorted(vocab.unary - set(unary)):
        unary[u] = frozenset(e for e in live if rng.random() < density)
    binary = {}
    for f in sorted(vocab.field_like):
        targets_f = [0] + sorted(alloc)
        pairs = {(a, rng.choice(targets_f) if rng.random() < 0.85 else rng.choice(live)) for a in addr
                 if a not in pool}
        pairs |= {(a, 0) for a in pool}
        binary[f] = frozenset(pairs)
    for r in sorted(vocab.binary - vocab.field_like):
        binary[r] = frozenset((a, b) for a in live for b in live if rng.random() < density / 2)
    return MemoryStructure(size, consts, unary, binary)
