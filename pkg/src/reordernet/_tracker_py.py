"""Pure-Python hybrid-dynamic reorder bitmap kernel.

One bit per sequence number at or beyond the head (first missing sequence).
Storage is a table of fixed-size blocks: a circular portion covering
[head, tail], plus a temporary linear portion appended when a sequence
beyond the tail arrives.  The linear portion keeps a fixed mapping (its
first bit is tail + 1) so growth never remaps already-stored bits; it is
absorbed into the circular portion once every circular bit is clear.

A compiled twin of this module lives in ``_tracker_cy.pyx``; both must
behave identically (see tests).
"""

from __future__ import annotations

import enum


class Track(enum.IntEnum):
    """Outcome of tracking one sequence number."""

    IN_ORDER = 0      # seq equalled head; head advanced past received run
    TRACKED = 1       # marked out-of-order in circular or linear portion
    GREW = 2          # one or more blocks appended, then marked
    DUPLICATE = 3     # seq below head, or bit already set
    UNTRACKABLE = 4   # beyond capacity at cap; caller drops and NACKs

UNCAPPED = 0


class HdBitmap:
    """Hybrid-dynamic bitmap for one connection.

    ``cap_blocks=0`` means uncapped.  ``tail`` always names the highest
    sequence the circular portion can accommodate; it slides with the head
    while no linear portion exists and freezes while one does.
    """

    __slots__ = (
        "head",
        "tail",
        "last_seq",
        "head_bm_id",
        "head_bm_index",
        "circular_size",
        "dynamic_size",
        "block_size_bits",
        "cap_blocks",
        "blocks",
        "grow_events",
        "merge_events",
    )

    def __init__(self, head_seq: int, block_size_bits: int = 16, cap_blocks: int = 16):
        if block_size_bits <= 0:
            raise ValueError("block_size_bits must be positive")
        if cap_blocks < 0:
            raise ValueError("cap_blocks must be >= 1, or 0 for uncapped")
        self.head = head_seq
        self.tail = head_seq + block_size_bits - 1
        self.last_seq: int | None = None
        self.head_bm_id = 0
        self.head_bm_index = 0
        self.circular_size = 1
        self.dynamic_size = 1
        self.block_size_bits = block_size_bits
        self.cap_blocks = cap_blocks
        self.blocks = [0]
        self.grow_events = 0
        self.merge_events = 0

    # -- queries ----------------------------------------------------------

    def note_last(self, seq: int) -> None:
        """Record the sequence of the last packet, whatever order it arrives in."""
        self.last_seq = seq

    def is_complete(self) -> bool:
        return self.last_seq is not None and self.head > self.last_seq

    def memory_bytes(self) -> int:
        return self.dynamic_size * self.block_size_bits // 8

    def max_trackable(self) -> int | None:
        """Highest sequence that can ever be stored at the current head, or None."""
        if self.cap_blocks == UNCAPPED:
            return None
        return self.head + self.cap_blocks * self.block_size_bits - 1

    def _linear_high(self) -> int:
        """Highest sequence currently representable (circular + linear)."""
        return self.tail + (self.dynamic_size - self.circular_size) * self.block_size_bits

    def _test(self, pos: int) -> int:
        bs = self.block_size_bits
        return (self.blocks[pos // bs] >> (pos % bs)) & 1

    def set_bits(self) -> list[int]:
        """Sequence numbers of all set bits (diagnostics and tests only)."""
        out = []
        bs = self.block_size_bits
        circ_bits = self.circular_size * bs
        hp = self.head_bm_id * bs + self.head_bm_index
        for seq in range(self.head, self.tail + 1):
            if self._test((hp + seq - self.head) % circ_bits):
                out.append(seq)
        for seq in range(self.tail + 1, self._linear_high() + 1):
            if self._test(circ_bits + seq - self.tail - 1):
                out.append(seq)
        return out

    # -- tracking ---------------------------------------------------------

    def track(self, seq: int) -> Track:
        bs = self.block_size_bits
        blocks = self.blocks
        if seq < self.head:
            return Track.DUPLICATE
        circ_bits = self.circular_size * bs
        grew = False
        if seq <= self.tail:
            hp = self.head_bm_id * bs + self.head_bm_index
            pos = (hp + seq - self.head) % circ_bits
        else:
            lin_high = self._linear_high()
            if seq > lin_high:
                need = -(-(seq - lin_high) // bs)
                if self.cap_blocks and self.dynamic_size + need > self.cap_blocks:
                    return Track.UNTRACKABLE
                blocks.extend([0] * need)
                self.dynamic_size += need
                self.grow_events += 1
                grew = True
            pos = circ_bits + seq - self.tail - 1
        if (blocks[pos // bs] >> (pos % bs)) & 1:
            return Track.DUPLICATE
        blocks[pos // bs] |= 1 << (pos % bs)
        if grew:
            return Track.GREW
        if seq != self.head:
            return Track.TRACKED
        self._flush()
        return Track.IN_ORDER

    def _flush(self) -> None:
        """Clear the run of set bits starting at head; advance head past it.

        Afterwards, merge the linear portion into the circular portion if the
        circular portion is entirely clear.
        """
        bs = self.block_size_bits
        blocks = self.blocks
        circ_bits = self.circular_size * bs
        linear = self.dynamic_size > self.circular_size
        head = self.head
        tail = self.tail
        hp = self.head_bm_id * bs + self.head_bm_index
        while True:
            if head <= tail:
                pos = hp
            else:
                li = head - tail - 1
                if not linear or li >= (self.dynamic_size - self.circular_size) * bs:
                    break
                pos = circ_bits + li
            if not (blocks[pos // bs] >> (pos % bs)) & 1:
                break
            blocks[pos // bs] &= ~(1 << (pos % bs))
            head += 1
            if head <= tail or not linear:
                hp = (hp + 1) % circ_bits
                if not linear:
                    tail += 1
        self.head = head
        self.tail = tail
        if linear and (head > tail or not any(blocks[: self.circular_size])):
            # Absorb the linear portion: anchor the merged mapping so that the
            # first linear bit (sequence tail + 1) keeps global position
            # circ_bits, preserving every stored bit.
            total_bits = self.dynamic_size * bs
            hp = (circ_bits + head - tail - 1) % total_bits
            self.circular_size = self.dynamic_size
            self.tail = head + total_bits - 1
            self.merge_events += 1
        self.head_bm_id = hp // bs
        self.head_bm_index = hp % bs
