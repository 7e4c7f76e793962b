"""Bitset backends shared by the DL and FO evaluators.

A set of elements is an int mask; a binary relation is a tuple of row masks
(row ``a`` holds the successors of ``a``).  The scalar backend works on plain
ints and bools.  The batch backend works on numpy arrays, one lane per
structure, so that the very same evaluator code can sweep millions of small
structures at once.
"""
from __future__ import annotations


class ScalarOps:
    batched = False

    @staticmethod
    def nz(v):
        return v != 0

    @staticmethod
    def zero(v):
        return v == 0

    @staticmethod
    def bit_if(cond, a: int):
        return (1 << a) if cond else 0

    @staticmethod
    def if_b(cond, m):
        return m if cond else 0

    @staticmethod
    def not_(b):
        return not b

    @staticmethod
    def popcount(v):
        return bin(v).count("1")

    @staticmethod
    def has(mask, e):
        return (mask >> e) & 1 == 1

    @staticmethod
    def all_(bs):
        return all(bs)

    @staticmethod
    def any_(bs):
        return any(bs)


class NumpyOps:
    batched = True

    def __init__(self):
        import numpy as np

        self.np = np
        self._pop = np.array([bin(i).count("1") for i in range(1 << 10)], dtype=np.int64)

    def nz(self, v):
        return self.np.not_equal(v, 0)

    def zero(self, v):
        return self.np.equal(v, 0)

    def bit_if(self, cond, a: int):
        return self.np.where(cond, 1 << a, 0)

    def if_b(self, cond, m):
        return self.np.where(cond, m, 0)

    def not_(self, b):
        return self.np.logical_not(b)

    def popcount(self, v):
        return self._pop[self.np.asarray(v, dtype=self.np.int64)]

    def has(self, mask, e):
        return self.np.equal(self.np.right_shift(mask, e) & 1, 1)

    def all_(self, bs):
        out = True
        for b in bs:
            out = self.np.logical_and(out, b)
        return out

    def any_(self, bs):
        out = False
        for b in bs:
            out = self.np.logical_or(out, b)
        return out


SCALAR = ScalarOps()
_numpy_ops = None


def numpy_ops() -> NumpyOps:
    global _numpy_ops
    if _numpy_ops is None:
        _numpy_ops = NumpyOps()
    return _numpy_ops


def transpose(rows, n: int, ops):
    out = []
    for b in range(n):
        m = 0
        for a in range(n):
            m = m | ops.bit_if(ops.has(rows[a], b), a)
        out.append(m)
    return tuple(out)


def select_row(rows, c, n: int, ops):
    """Row of a constant; ``c`` may be a per-lane array in batch mode."""
    if not ops.batched or isinstance(c, int):
        return rows[int(c)]
    m = 0
    for a in range(n):
        m = m | ops.if_b(c == a, rows[a])
    return m


class BatchView:
    """Structure-like view whose interpretations are numpy lanes (or shared ints)."""

    def __init__(self, size: int, consts: dict, masks: dict, rows: dict, lanes: int):
        self.size = size
        self.full = (1 << size) - 1
        self.ops = numpy_ops()
        self.lanes = lanes
        self._consts = consts
        self._masks = masks
        self._rows = rows

    def const(self, name):
        from .errors import VocabularyError

        try:
            return self._consts[name]
        except KeyError:
            raise VocabularyError(f"constant {name!r} is not interpreted") from None

    def mask(self, name):
        from .errors import VocabularyError

        try:
            return self._masks[name]
        except KeyError:
            raise VocabularyError(f"concept {name!r} is not interpreted") from None

    def rows(self, name):
        from .errors import VocabularyError

        try:
            return self._rows[name]
        except KeyError:
            raise VocabularyError(f"role {name!r} is not interpreted") from None
