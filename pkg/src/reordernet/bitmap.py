"""Reorder-tracking structures and compiled-kernel selection.

``HdBitmap`` resolves to the compiled extension when it imported cleanly,
otherwise to the pure-Python twin.  Set ``REORDERNET_PURE=1`` in the
environment to force the pure implementation (used by the benchmark and the
twin-equivalence tests).
"""

from __future__ import annotations

import os

from ._tracker_py import UNCAPPED, Track
from ._tracker_py import HdBitmap as PyHdBitmap

COMPILED = False
if not os.environ.get("REORDERNET_PURE"):
    try:
        from ._tracker_cy import HdBitmap as _CyHdBitmap

        COMPILED = True
    except ImportError:
        pass

HdBitmap = _CyHdBitmap if COMPILED else PyHdBitmap

__all__ = [
    "COMPILED",
    "UNCAPPED",
    "HdBitmap",
    "PyHdBitmap",
    "StaticBitmap",
    "MinMissingSet",
    "Track",
]


class StaticBitmap:
    """Fixed-size circular reorder bitmap, the naive comparator.

    A 256-bit instance needs 9 auxiliary bytes (4 head + 4 last sequence +
    1 head index), 41 bytes per connection in total.  Capacity never grows:
    sequences beyond head + size_bits - 1 are untrackable.
    """

    AUX_BYTES = 9

    __slots__ = ("size_bits", "_bm")

    def __init__(self, head_seq: int, size_bits: int = 256):
        self.size_bits = size_bits
        self._bm = HdBitmap(head_seq, size_bits, 1)

    @property
    def head(self) -> int:
        return self._bm.head

    @property
    def last_seq(self) -> int | None:
        return self._bm.last_seq

    def note_last(self, seq: int) -> None:
        self._bm.note_last(seq)

    def is_complete(self) -> bool:
        return self._bm.is_complete()

    def track(self, seq: int) -> Track:
        return self._bm.track(seq)

    def memory_bytes(self) -> int:
        return self.size_bits // 8

    def total_bytes(self) -> int:
        return self.size_bits // 8 + self.AUX_BYTES


class MinMissingSet:
    """Unbounded received-set tracker: the ideal ordering layer.

    Buffers below the NIC, so it consumes no NIC memory and never refuses a
    sequence.
    """

    __slots__ = ("head", "last_seq", "_pending")

    def __init__(self, head_seq: int):
        self.head = head_seq
        self.last_seq: int | None = None
        self._pending: set[int] = set()

    def note_last(self, seq: int) -> None:
        self.last_seq = seq

    def is_complete(self) -> bool:
        return self.last_seq is not None and self.head > self.last_seq

    def track(self, seq: int) -> Track:
        if seq < self.head or seq in self._pending:
            return Track.DUPLICATE
        if seq != self.head:
            self._pending.add(seq)
            return Track.TRACKED
        pending = self._pending
        head = self.head + 1
        while head in pending:
            pending.remove(head)
            head += 1
        self.head = head
        return Track.IN_ORDER

    def memory_bytes(self) -> int:
        return 0
