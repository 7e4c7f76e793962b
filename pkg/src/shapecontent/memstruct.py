"""Memory structures: finite first-order models of a heap plus program variables.

Elements are the integers ``0 .. size-1``.  Structures are immutable; every
operation returns a fresh value.  The infinite free pool of the logical model
is represented by a finite set of ``MemPool`` elements (the reserve).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

from .bits import SCALAR
from .errors import PreconditionError, StructureFileError, VocabularyError

NULL, TRUE, FALSE = "null", "T", "F"
REQUIRED_CONSTS = (NULL, TRUE, FALSE)
ADDRESSES, ALLOC, POSSIBLE_TARGETS, MEMPOOL, AUX = (
    "Addresses", "Alloc", "PossibleTargets", "MemPool", "Aux")
REQUIRED_UNARY = (ADDRESSES, ALLOC, POSSIBLE_TARGETS, MEMPOOL, AUX)

GHOST_SUFFIX = "_gho"
EXT_SUFFIX = "_ext"


@dataclass(frozen=True)
class Vocabulary:
    constants: frozenset = frozenset()
    unary: frozenset = frozenset()
    binary: frozenset = frozenset()
    fields: frozenset = frozenset()
    var_consts: frozenset = frozenset()
    ghost_of: Mapping[str, str] = field(default_factory=dict)
    ext_of: Mapping[str, str] = field(default_factory=dict)
    # constants that are not part of the memory structure proper: labels of
    # new/field-read commands and the abort flag.  Exempt from condition (6).
    free_consts: frozenset = frozenset()
    # second-order witnesses (the CT2 forest); exempt from everything
    free_binary: frozenset = frozenset()

    @classmethod
    def build(cls, fields: Iterable[str] = (), variables: Iterable[str] = (),
              concepts: Iterable[str] = (), roles: Iterable[str] = (),
              ghosts: Iterable[str] = ()) -> "Vocabulary":
        fields = frozenset(fields)
        variables = frozenset(variables)
        concepts = frozenset(concepts)
        roles = frozenset(roles)
        clash = (set(variables) | concepts | roles | fields) & (set(REQUIRED_CONSTS) | set(REQUIRED_UNARY))
        if clash:
            raise VocabularyError(f"reserved names redeclared: {sorted(clash)}")
        voc = cls(constants=frozenset(REQUIRED_CONSTS) | variables,
                  unary=frozenset(REQUIRED_UNARY) | concepts,
                  binary=fields | roles,
                  fields=fields,
                  var_consts=variables)
        return voc.with_ghosts(ghosts)

    # -- symbol classes -------------------------------------------------
    def symbols(self) -> frozenset:
        return self.constants | self.unary | self.binary | self.free_consts | self.free_binary

    def kind(self, name: str) -> str:
        if name in self.constants or name in self.free_consts:
            return "constant"
        if name in self.unary:
            return "concept"
        if name in self.binary or name in self.free_binary:
            return "role"
        raise VocabularyError(f"unknown symbol {name!r}")

    @property
    def ghost_symbols(self) -> frozenset:
        return frozenset(self.ghost_of.values())

    @property
    def ghost_fields(self) -> frozenset:
        """Ghost twins of fields: fields of the snapshot, bound by the field conditions."""
        return frozenset(self.ghost_of[f] for f in self.fields if f in self.ghost_of)

    @property
    def field_like(self) -> frozenset:
        return self.fields | self.ghost_fields

    @property
    def ext_symbols(self) -> frozenset:
        return frozenset(self.ext_of.values())

    def rem(self) -> frozenset:
        """Relation symbols the program does not update but annotations may relate.

        Everything except required symbols, fields, ghosts and ext copies.
        Constants are excluded: program variables are rewritten by the
        backwards transformer itself.
        """
        excluded = (set(REQUIRED_UNARY) | self.fields | self.ghost_symbols
                    | self.ext_symbols | self.free_binary)
        return frozenset((self.unary | self.binary) - excluded)

    def is_exempt(self, name: str) -> bool:
        return (name in self.free_consts or name in self.free_binary
                or name in self.ext_symbols)

    # -- extensions -----------------------------------------------------
    def _fresh(self, name: str) -> None:
        if name in self.symbols():
            raise VocabularyError(f"generated name {name!r} collides with an existing symbol")

    def with_ghosts(self, symbols: Iterable[str]) -> "Vocabulary":
        ghost_of = dict(self.ghost_of)
        unary, binary = set(self.unary), set(self.binary)
        for s in symbols:
            if s in ghost_of:
                continue
            if s in REQUIRED_UNARY or s in REQUIRED_CONSTS:
                raise VocabularyError(f"required symbol {s!r} cannot have a ghost twin")
            twin = s + GHOST_SUFFIX
            self._fresh(twin)
            if s in self.unary:
                unary.add(twin)
            elif s in self.binary:
                binary.add(twin)
            else:
                raise VocabularyError(f"ghost declared for unknown relation {s!r}")
            ghost_of[s] = twin
        return Vocabulary(self.constants, frozenset(unary), frozenset(binary), self.fields,
                          self.var_consts, ghost_of, dict(self.ext_of), self.free_consts,
                          self.free_binary)

    def with_concepts(self, names: Iterable[str]) -> "Vocabulary":
        names = frozenset(names) - self.unary
        for n in names:
            self._fresh(n)
        return _replace(self, unary=self.unary | names)

    def with_variables(self, names: Iterable[str]) -> "Vocabulary":
        names = frozenset(names) - self.var_consts
        for n in names:
            self._fresh(n)
        return _replace(self, constants=self.constants | names, var_consts=self.var_consts | names)

    def with_free_consts(self, names: Iterable[str]) -> "Vocabulary":
        names = frozenset(names) - self.free_consts - self.constants
        for n in names:
            self._fresh(n)
        return _replace(self, free_consts=self.free_consts | names)

    def with_free_binary(self, names: Iterable[str]) -> "Vocabulary":
        names = frozenset(names) - self.free_binary
        for n in names:
            self._fresh(n)
        return _replace(self, free_binary=self.free_binary | names)

    def with_ext(self) -> "Vocabulary":
        ext_of = dict(self.ext_of)
        unary, binary = set(self.unary), set(self.binary)
        for r in sorted(self.rem()):
            if r in ext_of:
                continue
            twin = r + EXT_SUFFIX
            self._fresh(twin)
            (unary if r in self.unary else binary).add(twin)
            ext_of[r] = twin
        return _replace(self, unary=frozenset(unary), binary=frozenset(binary), ext_of=ext_of)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        return Vocabulary(self.constants | other.constants, self.unary | other.unary,
                          self.binary | other.binary, self.fields | other.fields,
                          self.var_consts | other.var_consts,
                          {**self.ghost_of, **other.ghost_of}, {**self.ext_of, **other.ext_of},
                          self.free_consts | other.free_consts, self.free_binary | other.free_binary)


def _replace(voc: Vocabulary, **kw) -> Vocabulary:
    d = dict(constants=voc.constants, unary=voc.unary, binary=voc.binary, fields=voc.fields,
             var_consts=voc.var_consts, ghost_of=dict(voc.ghost_of), ext_of=dict(voc.ext_of),
             free_consts=voc.free_consts, free_binary=voc.free_binary)
    d.update(kw)
    return Vocabulary(**d)


@dataclass(frozen=True, eq=False)
class MemoryStructure:
    size: int
    consts: Mapping[str, int]
    unary: Mapping[str, frozenset]
    binary: Mapping[str, frozenset]
    names: tuple | None = None

    @property
    def universe(self) -> range:
        return range(self.size)

    def __eq__(self, other):
        if not isinstance(other, MemoryStructure):
            return NotImplemented
        return (self.size == other.size and dict(self.consts) == dict(other.consts)
                and _nonempty(self.unary) == _nonempty(other.unary)
                and _nonempty(self.binary) == _nonempty(other.binary))

    def __hash__(self):
        return hash((self.size, frozenset(self.consts.items()),
                     frozenset(_nonempty(self.unary).items()),
                     frozenset(_nonempty(self.binary).items())))

    def __repr__(self):
        return f"MemoryStructure({describe(self)})"

    # -- lookups --------------------------------------------------------
    def const(self, name: str) -> int:
        try:
            return self.consts[name]
        except KeyError:
            raise VocabularyError(f"constant {name!r} is not interpreted") from None

    def concept(self, name: str) -> frozenset:
        try:
            return self.unary[name]
        except KeyError:
            raise VocabularyError(f"concept {name!r} is not interpreted") from None

    def role(self, name: str) -> frozenset:
        try:
            return self.binary[name]
        except KeyError:
            raise VocabularyError(f"role {name!r} is not interpreted") from None

    def field_value(self, f: str, e: int) -> int | None:
        row = self.rows(f)[e]
        if row == 0 or row & (row - 1):
            return None
        return row.bit_length() - 1

    @property
    def mempool(self) -> frozenset:
        return self.unary.get(MEMPOOL, frozenset())

    @property
    def reserve(self) -> int:
        return len(self.mempool)

    # -- bitmask views, used by the evaluators ---------------------------
    @cached_property
    def _row_cache(self) -> dict:
        return {}

    @property
    def ops(self):
        return SCALAR

    def mask(self, name: str) -> int:
        cache = self._row_cache
        key = ("mask", name)
        if key not in cache:
            m = 0
            for e in self.concept(name):
                m |= 1 << e
            cache[key] = m
        return cache[key]

    def rows(self, name: str) -> tuple:
        cache = self._row_cache
        if name not in cache:
            rows = [0] * self.size
            for a, b in self.role(name):
                rows[a] |= 1 << b
            cache[name] = tuple(rows)
        return cache[name]

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    # -- functional updates ----------------------------------------------
    def replace(self, consts=None, unary=None, binary=None) -> "MemoryStructure":
        c = dict(self.consts)
        u = dict(self.unary)
        b = dict(self.binary)
        if consts:
            c.update(consts)
        if unary:
            u.update({k: frozenset(v) for k, v in unary.items()})
        if binary:
            b.update({k: frozenset(v) for k, v in binary.items()})
        return MemoryStructure(self.size, c, u, b, self.names)

    def set_field(self, f: str, src: int, dst: int) -> "MemoryStructure":
        rel = {p for p in self.role(f) if p[0] != src}
        rel.add((src, dst))
        return self.replace(binary={f: rel})

    def drop(self, symbols: Iterable[str]) -> "MemoryStructure":
        symbols = set(symbols)
        return MemoryStructure(
            self.size,
            {k: v for k, v in self.consts.items() if k not in symbols},
            {k: v for k, v in self.unary.items() if k not in symbols},
            {k: v for k, v in self.binary.items() if k not in symbols},
            self.names)

    def element_name(self, e: int) -> str:
        if self.names:
            return self.names[e]
        for c in REQUIRED_CONSTS:
            if self.consts.get(c) == e:
                return c
        return f"m{e}"


def _nonempty(d: Mapping) -> dict:
    return {k: frozenset(v) for k, v in d.items() if v}


# ----------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    condition: int
    message: str
    elements: tuple = ()

    def __str__(self):
        return f"condition ({self.condition}): {self.message}"


def validate(struct: MemoryStructure, vocab: Vocabulary) -> list[Violation]:
    """Check memory-structure conditions (1)-(10); an empty list means valid.

    Condition (10) is checked in its finite form: MemPool must be nonempty.
    Symbols the vocabulary marks as exempt (ext copies, label constants,
    forest witnesses) are not subject to conditions (6) and (9).
    """
    out: list[Violation] = []
    universe = set(struct.universe)

    missing_c = [c for c in REQUIRED_CONSTS if c not in struct.consts]
    if missing_c:
        out.append(Violation(1, f"missing constants {missing_c}"))
    missing_u = [u for u in REQUIRED_UNARY if u not in struct.unary]
    if missing_u:
        out.append(Violation(2, f"missing unary relations {missing_u}"))
    if missing_c or missing_u:
        return out

    for name in sorted(vocab.symbols()):
        if name in vocab.constants or name in vocab.free_consts:
            if name not in struct.consts:
                out.append(Violation(0, f"constant {name} is not interpreted"))
        elif name in vocab.unary:
            if name not in struct.unary:
                out.append(Violation(0, f"concept {name} is not interpreted"))
        elif name not in struct.binary:
            out.append(Violation(0, f"role {name} is not interpreted"))

    aux = struct.unary[AUX]
    expected_aux = {struct.consts[c] for c in REQUIRED_CONSTS}
    if set(aux) != expected_aux or len(aux) != 3:
        out.append(Violation(3, "Aux must be exactly {null, T, F} with three distinct elements",
                             tuple(sorted(set(aux) ^ expected_aux))))

    addresses = struct.unary[ADDRESSES]
    if addresses & aux:
        out.append(Violation(4, "Addresses and Aux overlap", tuple(sorted(addresses & aux))))
    if set(addresses | aux) != universe:
        out.append(Violation(4, "Addresses and Aux do not cover the universe",
                             tuple(sorted(universe - (addresses | aux)))))

    alloc = struct.unary[ALLOC]
    targets = struct.unary[POSSIBLE_TARGETS]
    pool = struct.unary[MEMPOOL]
    overlap = (alloc & targets) | (alloc & pool) | (targets & pool)
    if overlap:
        out.append(Violation(5, "Alloc, PossibleTargets and MemPool overlap", tuple(sorted(overlap))))
    if alloc | targets | pool != addresses:
        out.append(Violation(5, "Alloc, PossibleTargets and MemPool do not partition Addresses",
                             tuple(sorted((alloc | targets | pool) ^ addresses))))

    for c, e in sorted(struct.consts.items()):
        if vocab.is_exempt(c) or c not in vocab.constants:
            continue
        if e not in universe:
            out.append(Violation(0, f"constant {c} interpreted outside the universe", (e,)))
        elif e in pool:
            out.append(Violation(6, f"constant {c} is interpreted in MemPool", (e,)))

    null, false = struct.consts[NULL], struct.consts[FALSE]
    for f in sorted(vocab.field_like):
        rel = struct.binary.get(f)
        if rel is None:
            continue
        bad = sorted(p for p in rel if p[0] not in addresses or p[1] in pool or p[1] not in universe)
        if bad:
            out.append(Violation(7, f"field {f} has pairs outside Addresses x (M \\ MemPool)",
                                 tuple(bad)))
        succ: dict[int, set] = {}
        for a, b in rel:
            succ.setdefault(a, set()).add(b)
        not_function = sorted(a for a in addresses if len(succ.get(a, ())) != 1)
        if not_function:
            out.append(Violation(7, f"field {f} is not a total function on Addresses",
                                 tuple(not_function)))
        dirty = sorted(e for e in pool if succ.get(e, set()) - {null, false})
        if dirty:
            out.append(Violation(8, f"MemPool cells with {f} outside {{null, F}}", tuple(dirty)))

    for name in sorted(vocab.unary | vocab.binary):
        if name in (MEMPOOL, ADDRESSES) or name in vocab.field_like or vocab.is_exempt(name):
            continue
        if name in vocab.unary:
            touched = struct.unary.get(name, frozenset()) & pool
        else:
            touched = {e for p in struct.binary.get(name, ()) for e in p} & pool
        if touched:
            out.append(Violation(9, f"relation {name} mentions MemPool elements", tuple(sorted(touched))))

    if not pool:
        out.append(Violation(10, "MemPool is empty (no reserve left)"))
    return out


def allocate(struct: MemoryStructure, target: int) -> MemoryStructure:
    if target not in struct.mempool:
        raise PreconditionError(f"element {target} is not in MemPool")
    return struct.replace(unary={MEMPOOL: struct.mempool - {target},
                                 ALLOC: struct.concept(ALLOC) | {target}})


def extend_with_ext(pre: MemoryStructure, post: MemoryStructure, vocab: Vocabulary) -> MemoryStructure:
    """Attach, to the pre-state, copies ``R_ext`` of the post-state's remaining relations."""
    if pre.size != post.size:
        raise PreconditionError("pre and post structures have different universes")
    ext = vocab.with_ext()
    unary, binary = {}, {}
    for r, twin in ext.ext_of.items():
        if r in vocab.unary:
            unary[twin] = post.unary.get(r, frozenset())
        else:
            binary[twin] = post.binary.get(r, frozenset())
    return pre.replace(unary=unary, binary=binary)


# ----------------------------------------------------------------------
# construction helpers


def make_structure(n_addresses: int, fields: Iterable[str] = (), *, alloc=(), targets=(),
                   consts: Mapping[str, int] | None = None, unary=None, binary=None,
                   field_values: Mapping[str, Mapping[int, int]] | None = None) -> MemoryStructure:
    """Build a structure with Aux = {0: null, 1: T, 2: F} and addresses 3..n+2.

    Addresses not listed in ``alloc``/``targets`` go to MemPool; unset field
    values default to null.
    """
    size = 3 + n_addresses
    addresses = frozenset(range(3, size))
    alloc = frozenset(alloc)
    targets = frozenset(targets)
    c = {NULL: 0, TRUE: 1, FALSE: 2}
    c.update(consts or {})
    u = {AUX: frozenset({0, 1, 2}), ADDRESSES: addresses, ALLOC: alloc,
         POSSIBLE_TARGETS: targets, MEMPOOL: addresses - alloc - targets}
    u.update({k: frozenset(v) for k, v in (unary or {}).items()})
    b = {}
    for f in fields:
        vals = (field_values or {}).get(f, {})
        b[f] = frozenset((a, vals.get(a, 0)) for a in addresses)
    b.update({k: frozenset(v) for k, v in (binary or {}).items()})
    return MemoryStructure(size, c, u, b)


def add_reserve(struct: MemoryStructure, vocab: Vocabulary, count: int = 1) -> MemoryStructure:
    """Append ``count`` fresh MemPool elements whose fields are all null."""
    n = struct.size
    new = range(n, n + count)
    null = struct.const(NULL)
    binary = {f: struct.role(f) | {(e, null) for e in new} for f in vocab.field_like if f in struct.binary}
    unary = {ADDRESSES: struct.concept(ADDRESSES) | set(new), MEMPOOL: struct.mempool | set(new)}
    grown = MemoryStructure(n + count, dict(struct.consts), dict(struct.unary), dict(struct.binary),
                            struct.names + tuple(f"pool{e}" for e in new) if struct.names else None)
    return grown.replace(unary=unary, binary=binary)


def describe(struct: MemoryStructure) -> str:
    nm = struct.element_name
    parts = [f"|M|={struct.size}"]
    parts.append("consts{" + ", ".join(f"{k}={nm(v)}" for k, v in sorted(struct.consts.items())) + "}")
    for k, v in sorted(struct.unary.items()):
        if v and k not in (AUX, ADDRESSES):
            parts.append(f"{k}={{{', '.join(nm(e) for e in sorted(v))}}}")
    for k, v in sorted(struct.binary.items()):
        if v:
            parts.append(f"{k}={{{', '.join(f'{nm(a)}->{nm(b)}' for a, b in sorted(v))}}}")
    return " ".join(parts)


# ----------------------------------------------------------------------
# JSON structure files


def structure_to_json(struct: MemoryStructure, vocab: Vocabulary | None = None) -> dict:
    """JSON document for ``struct``; with ``vocab`` its fields and ghost pairs are recorded too."""
    nm = [struct.element_name(e) for e in struct.universe]
    if len(set(nm)) != len(nm):
        nm = [f"e{e}" for e in struct.universe]
    head = {}
    if vocab is not None:
        head["fields"] = sorted(vocab.fields)
        if vocab.ghost_of:
            head["ghosts"] = dict(sorted(vocab.ghost_of.items()))
    return {
        **head,
        "universe": nm,
        "constants": {k: nm[v] for k, v in sorted(struct.consts.items())},
        "unary": {k: [nm[e] for e in sorted(v)] for k, v in sorted(struct.unary.items())},
        "binary": {k: [[nm[a], nm[b]] for a, b in sorted(v)] for k, v in sorted(struct.binary.items())},
    }


def structure_from_json(doc: Mapping, vocab: Vocabulary | None = None, *, check: bool = True) -> MemoryStructure:
    """Read a structure document; missing partition relations are derived.

    ``Aux`` defaults to the interpretations of null/T/F, ``Addresses`` to the
    rest of the universe, ``PossibleTargets`` to the addresses that are in
    neither ``Alloc`` nor ``MemPool``.  With ``check`` the result is validated
    against ``vocab`` (or the vocabulary implied by the file) and rejected
    with the violation list if invalid.
    """
    try:
        names = list(doc["universe"])
    except (KeyError, TypeError):
        raise StructureFileError("structure file needs a 'universe' array") from None
    if len(set(names)) != len(names):
        raise StructureFileError("duplicate element names in universe")
    idx = {n: i for i, n in enumerate(names)}

    def el(n):
        try:
            return idx[n]
        except KeyError:
            raise StructureFileError(f"unknown element {n!r}") from None

    consts = {k: el(v) for k, v in doc.get("constants", {}).items()}
    unary = {k: frozenset(el(x) for x in v) for k, v in doc.get("unary", {}).items()}
    binary = {k: frozenset((el(a), el(b)) for a, b in v) for k, v in doc.get("binary", {}).items()}
    if AUX not in unary and all(c in consts for c in REQUIRED_CONSTS):
        unary[AUX] = frozenset(consts[c] for c in REQUIRED_CONSTS)
    aux = unary.get(AUX, frozenset())
    if ADDRESSES not in unary:
        unary[ADDRESSES] = frozenset(range(len(names))) - aux
    unary.setdefault(ALLOC, frozenset())
    unary.setdefault(MEMPOOL, frozenset())
    if POSSIBLE_TARGETS not in unary:
        unary[POSSIBLE_TARGETS] = unary[ADDRESSES] - unary[ALLOC] - unary[MEMPOOL]
    struct = MemoryStructure(len(names), consts, unary, binary, tuple(names))
    if check:
        if vocab is None:
            vocab = vocabulary_of(struct, doc.get("fields", ()), doc.get("ghosts", {}))
        bad = validate(struct, vocab)
        if bad:
            raise StructureFileError("invalid memory structure:\n  " + "\n  ".join(map(str, bad)), bad)
    return struct


def vocabulary_of(struct: MemoryStructure, fields: Iterable[str] = (),
                  ghosts: Mapping[str, str] | None = None) -> Vocabulary:
    """The vocabulary a structure file implies, given which roles are fields."""
    return Vocabulary(
        constants=frozenset(struct.consts),
        unary=frozenset(struct.unary) | frozenset(REQUIRED_UNARY),
        binary=frozenset(struct.binary),
        fields=frozenset(fields),
        var_consts=frozenset(struct.consts) - frozenset(REQUIRED_CONSTS),
        ghost_of=dict(ghosts or {}))


def load_structure(path, vocab: Vocabulary | None = None) -> MemoryStructure:
    with open(Path(path), encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructureFileError(f"{path}: not valid JSON: {exc}") from None
    return structure_from_json(doc, vocab)


def dump_structure(struct: MemoryStructure, path, vocab: Vocabulary | None = None) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(structure_to_json(struct, vocab), fh, indent=2)
        fh.write("\n")
