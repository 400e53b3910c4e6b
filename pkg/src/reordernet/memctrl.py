"""Block-granular NIC memory controller model.

One controller per simulated NIC.  State is a master array of fixed-size
blocks, a one-bit-per-block allocation bitmap, and a directory mapping
connection ids to the start of their metadata region.  A connection's
metadata region holds its tracking-state variables followed by the bitmap
block addressing table: the absolute master-array index of the first bitmap
block, then one signed 2-byte relative offset per further block
(offset = (block - base) * block_bytes).

Metadata must occupy consecutive blocks; regions are found by scanning the
allocation bitmap backward from the tail, bitmap blocks forward from the
head.  Released blocks are only unmarked, never erased.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class MemError(Exception):
    pass


class OutOfMemory(MemError):
    pass


class DuplicateConnection(MemError):
    pass


class UnknownConnection(MemError):
    pass


class CapReached(MemError):
    """Relative-address table full: no room to record another bitmap block."""


class UnallocatedBlock(MemError):
    pass


class IndexOutOfRange(MemError):
    pass


class UnknownField(MemError):
    pass


# Fixed-state variables, serialized byte-packed in this order at the start of
# the metadata region (little-endian).
STATE_FIELDS: dict[str, tuple[int, int]] = {  # name -> (offset, width)
    "head": (0, 4),
    "tail": (4, 4),
    "last_seq": (8, 4),
    "head_bm_id": (12, 1),
    "head_bm_index": (13, 1),
    "circular_bm_size": (14, 1),
    "dynamic_size": (15, 1),
}
STATE_BYTES = 16
BASE_ADDR_BYTES = 2  # absolute master-array block index of bitmap block 0
RELATIVE_ENTRY_BYTES = 2


@dataclass
class ControllerConfig:
    total_blocks: int = 1024
    block_bytes: int = 2
    metadata_blocks: int = 24
    max_connections: int = 64

    def __post_init__(self) -> None:
        if min(self.total_blocks, self.block_bytes, self.metadata_blocks,
               self.max_connections) <= 0:
            raise ValueError("controller config values must be positive")
        if self.metadata_bytes < STATE_BYTES + BASE_ADDR_BYTES:
            raise ValueError("metadata region too small for fixed state")

    @property
    def metadata_bytes(self) -> int:
        return self.metadata_blocks * self.block_bytes

    @property
    def relative_slots(self) -> int:
        """Entries in the relative-address table (bitmap blocks beyond the first)."""
        return (self.metadata_bytes - STATE_BYTES - BASE_ADDR_BYTES) // RELATIVE_ENTRY_BYTES

    @property
    def max_bitmap_blocks(self) -> int:
        return 1 + self.relative_slots


@dataclass
class _DirEntry:
    conn: int
    start_index: int
    bitmap_blocks: list[int] = field(default_factory=list)


class MemController:
    """Allocator and accessor for one NIC's tracking memory."""

    def __init__(self, config: ControllerConfig | None = None):
        self.config = config or ControllerConfig()
        cfg = self.config
        self.master = bytearray(cfg.total_blocks * cfg.block_bytes)
        self.alloc_bitmap = bytearray(cfg.total_blocks)
        self.directory: list[_DirEntry] = []

    # -- directory --------------------------------------------------------

    def _lookup(self, conn: int) -> _DirEntry:
        for entry in self.directory:
            if entry.conn == conn:
                return entry
        raise UnknownConnection(f"connection {conn} not in directory")

    def has_connection(self, conn: int) -> bool:
        return any(e.conn == conn for e in self.directory)

    # -- allocation -------------------------------------------------------

    def init_connection(self, conn: int) -> int:
        """Allocate a metadata region for a new connection.

        Scans the master array backward from the tail for the first run of
        consecutive free blocks; returns the region's start index.
        """
        if self.has_connection(conn):
            raise DuplicateConnection(f"connection {conn} already initialised")
        if len(self.directory) >= self.config.max_connections:
            raise OutOfMemory("metadata directory full")
        need = self.config.metadata_blocks
        start = self._find_backward_run(need)
        if start is None:
            raise OutOfMemory(f"no run of {need} consecutive free blocks")
        for b in range(start, start + need):
            self.alloc_bitmap[b] = 1
        bb = self.config.block_bytes
        self.master[start * bb : start * bb + self.config.metadata_bytes] = bytes(
            self.config.metadata_bytes
        )
        self.directory.append(_DirEntry(conn, start))
        return start

    def _find_backward_run(self, need: int) -> int | None:
        alloc = self.alloc_bitmap
        run = 0
        for b in range(self.config.total_blocks - 1, -1, -1):
            if alloc[b]:
                run = 0
            else:
                run += 1
                if run == need:
                    return b
        return None

    def alloc_bitmap_block(self, conn: int) -> int:
        """Allocate one bitmap block, forward first-fit from the head.

        Records the block in the connection's addressing table and returns
        the connection-local block number (0-based).
        """
        entry = self._lookup(conn)
        if len(entry.bitmap_blocks) >= self.config.max_bitmap_blocks:
            raise CapReached("relative-address table full")
        alloc = self.alloc_bitmap
        block = None
        for b in range(self.config.total_blocks):
            if not alloc[b]:
                block = b
                break
        if block is None:
            raise OutOfMemory("no free block")
        alloc[block] = 1
        bb = self.config.block_bytes
        self.master[block * bb : (block + 1) * bb] = bytes(bb)
        number = len(entry.bitmap_blocks)
        region = entry.start_index * bb
        if number == 0:
            self.master[region + STATE_BYTES : region + STATE_BYTES + BASE_ADDR_BYTES] = (
                block.to_bytes(BASE_ADDR_BYTES, "little")
            )
        else:
            offset = (block - entry.bitmap_blocks[0]) * bb
            slot = region + STATE_BYTES + BASE_ADDR_BYTES + (number - 1) * RELATIVE_ENTRY_BYTES
            self.master[slot : slot + RELATIVE_ENTRY_BYTES] = offset.to_bytes(
                RELATIVE_ENTRY_BYTES, "little", signed=True
            )
        entry.bitmap_blocks.append(block)
        return number

    # -- access -----------------------------------------------------------

    def _resolve_block(self, entry: _DirEntry, bitmap_no: int) -> int:
        if bitmap_no < 0 or bitmap_no >= len(entry.bitmap_blocks):
            raise UnallocatedBlock(f"bitmap block {bitmap_no} not allocated")
        bb = self.config.block_bytes
        region = entry.start_index * bb
        base = int.from_bytes(
            self.master[region + STATE_BYTES : region + STATE_BYTES + BASE_ADDR_BYTES],
            "little",
        )
        if bitmap_no == 0:
            return base
        slot = region + STATE_BYTES + BASE_ADDR_BYTES + (bitmap_no - 1) * RELATIVE_ENTRY_BYTES
        offset = int.from_bytes(
            self.master[slot : slot + RELATIVE_ENTRY_BYTES], "little", signed=True
        )
        return base + offset // bb

    def bit_access(self, conn: int, bitmap_no: int, bit_index: int,
                   write: bool | None = None) -> bool:
        """Read or write one bit of a connection's bitmap block."""
        entry = self._lookup(conn)
        bits_per_block = self.config.block_bytes * 8
        if bit_index < 0 or bit_index >= bits_per_block:
            raise IndexOutOfRange(f"bit {bit_index} outside {bits_per_block}-bit block")
        block = self._resolve_block(entry, bitmap_no)
        byte_addr = block * self.config.block_bytes + bit_index // 8
        mask = 1 << (bit_index % 8)
        if write is not None:
            if write:
                self.master[byte_addr] |= mask
            else:
                self.master[byte_addr] &= ~mask
        return bool(self.master[byte_addr] & mask)

    def state_access(self, conn: int, name: str, write: int | None = None) -> int:
        """Read or write one fixed-state field of a connection."""
        entry = self._lookup(conn)
        try:
            offset, width = STATE_FIELDS[name]
        except KeyError:
            raise UnknownField(name) from None
        addr = entry.start_index * self.config.block_bytes + offset
        if write is not None:
            if write < 0 or write >= 1 << (8 * width):
                raise ValueError(f"{name}={write} does not fit {width} bytes")
            self.master[addr : addr + width] = write.to_bytes(width, "little")
        return int.from_bytes(self.master[addr : addr + width], "little")

    # -- release / accounting ---------------------------------------------

    def release(self, conn: int) -> int:
        """Free all blocks of a connection; master bytes are left as-is."""
        entry = self._lookup(conn)
        released = 0
        for b in range(entry.start_index, entry.start_index + self.config.metadata_blocks):
            self.alloc_bitmap[b] = 0
            released += 1
        for b in entry.bitmap_blocks:
            self.alloc_bitmap[b] = 0
            released += 1
        self.directory.remove(entry)
        return released

    def utilization(self) -> dict:
        bb = self.config.block_bytes
        per_conn = {}
        bitmap_bytes = 0
        for entry in self.directory:
            conn_bitmap = len(entry.bitmap_blocks) * bb
            bitmap_bytes += conn_bitmap
            per_conn[entry.conn] = {
                "metadata_bytes": self.config.metadata_bytes,
                "bitmap_bytes": conn_bitmap,
            }
        metadata_bytes = len(self.directory) * self.config.metadata_bytes
        return {
            "bitmap_bytes_in_use": bitmap_bytes,
            "metadata_bytes_in_use": metadata_bytes,
            "total_bytes_in_use": bitmap_bytes + metadata_bytes,
            "per_connection": per_conn,
        }

    def allocated_bytes(self) -> int:
        return sum(self.alloc_bitmap) * self.config.block_bytes
