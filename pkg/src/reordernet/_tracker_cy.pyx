# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled hybrid-dynamic reorder bitmap kernel.

Twin of ``_tracker_py.HdBitmap``: same state fields, same outcomes, same
observable behaviour (the twin-equivalence test drives both step by step).
The bitmap table lives in one flat C bit buffer indexed by global bit
position; blocks are logical slices of it.
"""

from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memset

# Outcome codes, numerically identical to _tracker_py.Track.
DEF IN_ORDER = 0
DEF TRACKED = 1
DEF GREW = 2
DEF DUPLICATE = 3
DEF UNTRACKABLE = 4


cdef class HdBitmap:
    cdef public unsigned long long head
    cdef public unsigned long long tail
    cdef public object last_seq
    cdef public int head_bm_id
    cdef public int head_bm_index
    cdef public int circular_size
    cdef public int dynamic_size
    cdef public int block_size_bits
    cdef public int cap_blocks
    cdef public int grow_events
    cdef public int merge_events
    cdef unsigned char *_buf
    cdef size_t _buf_bytes

    def __cinit__(self, unsigned long long head_seq, int block_size_bits=16,
                  int cap_blocks=16):
        if block_size_bits <= 0:
            raise ValueError("block_size_bits must be positive")
        if cap_blocks < 0:
            raise ValueError("cap_blocks must be >= 1, or 0 for uncapped")
        self.head = head_seq
        self.tail = head_seq + block_size_bits - 1
        self.last_seq = None
        self.head_bm_id = 0
        self.head_bm_index = 0
        self.circular_size = 1
        self.dynamic_size = 1
        self.block_size_bits = block_size_bits
        self.cap_blocks = cap_blocks
        self.grow_events = 0
        self.merge_events = 0
        self._buf_bytes = (block_size_bits + 7) // 8
        self._buf = <unsigned char *> malloc(self._buf_bytes)
        if self._buf == NULL:
            raise MemoryError()
        memset(self._buf, 0, self._buf_bytes)

    def __dealloc__(self):
        if self._buf != NULL:
            free(self._buf)

    # -- queries ----------------------------------------------------------

    def note_last(self, seq):
        self.last_seq = seq

    def is_complete(self):
        return self.last_seq is not None and self.head > <unsigned long long> self.last_seq

    def memory_bytes(self):
        return self.dynamic_size * self.block_size_bits // 8

    def max_trackable(self):
        if self.cap_blocks == 0:
            return None
        return self.head + self.cap_blocks * self.block_size_bits - 1

    cdef inline unsigned long long _linear_high(self):
        return self.tail + <unsigned long long> (
            (self.dynamic_size - self.circular_size) * self.block_size_bits)

    cdef inline int _test(self, unsigned long long pos):
        return (self._buf[pos >> 3] >> (pos & 7)) & 1

    def set_bits(self):
        """Sequence numbers of all set bits (diagnostics and tests only)."""
        out = []
        cdef unsigned long long circ_bits = self.circular_size * self.block_size_bits
        cdef unsigned long long hp = (
            self.head_bm_id * self.block_size_bits + self.head_bm_index)
        cdef unsigned long long seq
        for seq in range(self.head, self.tail + 1):
            if self._test((hp + seq - self.head) % circ_bits):
                out.append(seq)
        for seq in range(self.tail + 1, self._linear_high() + 1):
            if self._test(circ_bits + seq - self.tail - 1):
                out.append(seq)
        return out

    # -- tracking ---------------------------------------------------------

    cpdef int track(self, unsigned long long seq):
        cdef int bs = self.block_size_bits
        cdef unsigned long long circ_bits, lin_high, pos
        cdef unsigned long long need
        cdef size_t new_bytes
        cdef unsigned char *grown
        cdef bint grew = False
        if seq < self.head:
            return DUPLICATE
        circ_bits = <unsigned long long> self.circular_size * bs
        if seq <= self.tail:
            pos = (<unsigned long long> self.head_bm_id * bs + self.head_bm_index
                   + seq - self.head) % circ_bits
        else:
            lin_high = self._linear_high()
            if seq > lin_high:
                need = (seq - lin_high + bs - 1) // bs
                if self.cap_blocks and self.dynamic_size + need > <unsigned long long> self.cap_blocks:
                    return UNTRACKABLE
                self.dynamic_size += need
                self.grow_events += 1
                grew = True
                new_bytes = (<size_t> self.dynamic_size * bs + 7) // 8
                grown = <unsigned char *> realloc(self._buf, new_bytes)
                if grown == NULL:
                    raise MemoryError()
                self._buf = grown
                memset(self._buf + self._buf_bytes, 0, new_bytes - self._buf_bytes)
                self._buf_bytes = new_bytes
            pos = circ_bits + seq - self.tail - 1
        if (self._buf[pos >> 3] >> (pos & 7)) & 1:
            return DUPLICATE
        self._buf[pos >> 3] |= <unsigned char> (1 << (pos & 7))
        if grew:
            return GREW
        if seq != self.head:
            return TRACKED
        self._flush()
        return IN_ORDER

    cdef void _flush(self):
        cdef int bs = self.block_size_bits
        cdef unsigned long long circ_bits = <unsigned long long> self.circular_size * bs
        cdef bint linear = self.dynamic_size > self.circular_size
        cdef unsigned long long head = self.head
        cdef unsigned long long tail = self.tail
        cdef unsigned long long hp = (
            <unsigned long long> self.head_bm_id * bs + self.head_bm_index)
        cdef unsigned long long pos, li, lin_bits, total_bits
        cdef size_t i, full
        cdef int rem
        cdef bint circ_clear
        lin_bits = <unsigned long long> (self.dynamic_size - self.circular_size) * bs
        while True:
            if head <= tail:
                pos = hp
            else:
                li = head - tail - 1
                if (not linear) or li >= lin_bits:
                    break
                pos = circ_bits + li
            if not (self._buf[pos >> 3] >> (pos & 7)) & 1:
                break
            self._buf[pos >> 3] &= <unsigned char> (~(1 << (pos & 7)))
            head += 1
            if head <= tail or not linear:
                hp = (hp + 1) % circ_bits
                if not linear:
                    tail += 1
        self.head = head
        self.tail = tail
        if linear:
            if head > tail:
                circ_clear = True
            else:
                circ_clear = True
                full = circ_bits >> 3
                for i in range(full):
                    if self._buf[i]:
                        circ_clear = False
                        break
                rem = circ_bits & 7
                if circ_clear and rem and (self._buf[full] & ((1 << rem) - 1)):
                    circ_clear = False
            if circ_clear:
                # Absorb the linear portion: the first linear bit (sequence
                # tail + 1) keeps global position circ_bits.
                total_bits = <unsigned long long> self.dynamic_size * bs
                hp = (circ_bits + head - tail - 1) % total_bits
                self.circular_size = self.dynamic_size
                self.tail = head + total_bits - 1
                self.merge_events += 1
        self.head_bm_id = <int> (hp // bs)
        self.head_bm_index = <int> (hp % bs)
