"""Shared wire-level vocabulary: data packets, control packets, header sizes.

Sequence numbers and connection ids are plain ints.  Within one connection
sequence numbers are consecutive starting at the connection's first sequence
number; no wraparound is modelled (flows stay far below 2**32 packets).
Connection ids are one byte, matching the width of a metadata directory entry.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

SEQ_MAX = 2**32 - 1
CONN_ID_MAX = 255

# Ordering metadata appended to every data packet: a 32-bit first-sequence
# field plus a last-packet flag bit, byte-aligned on the wire to 5 bytes.
ORDERING_METADATA_BYTES = 5

# Baseline header model for a data packet (Ethernet + IP/UDP + RDMA transport
# header), before any ordering metadata.
BASE_HEADER_BYTES = 48

# Size of an ACK/SACK/NACK frame on the wire.
CONTROL_PACKET_BYTES = 60


class Verb(enum.Enum):
    SEND_RECV = "send_recv"
    WRITE = "write"


class ControlKind(enum.Enum):
    ACK = "ack"
    SACK = "sack"
    NACK = "nack"


@dataclass(slots=True)
class WirePacket:
    """One data packet with ordering metadata.

    ``head`` is the first sequence number of the connection, carried
    redundantly in every packet so a receiver can initialise tracking even
    when the first arrival is out of order.  ``flow_remaining_bytes`` is the
    sender's remaining flow size at emission time; switches running
    shortest-remaining-first scheduling order packets by it.
    """

    conn: int
    seq: int
    head: int
    is_last: bool
    size_bytes: int
    flow_remaining_bytes: int = 0
    verb: Verb = Verb.SEND_RECV

    def __post_init__(self) -> None:
        if not 0 <= self.seq <= SEQ_MAX:
            raise ValueError(f"seq {self.seq} outside 32-bit range")
        if self.head > self.seq:
            raise ValueError(f"head {self.head} > seq {self.seq}")

    def wire_bytes(self, with_metadata: bool = True) -> int:
        extra = ORDERING_METADATA_BYTES if with_metadata else 0
        return self.size_bytes + BASE_HEADER_BYTES + extra


@dataclass(slots=True)
class ControlPacket:
    """ACK / SACK / NACK.

    ``cumulative`` is the receiver's expected in-order sequence number.  A
    SACK additionally names the out-of-order sequence just accepted; a NACK
    signals a packet the receiver could not track (and dropped).
    """

    conn: int
    kind: ControlKind
    cumulative: int
    sacked: int | None = None

    def __post_init__(self) -> None:
        if self.kind is ControlKind.SACK:
            if self.sacked is None:
                raise ValueError("SACK requires a sacked sequence")
            if self.sacked <= self.cumulative:
                raise ValueError(
                    f"SACK sacked={self.sacked} must exceed cumulative={self.cumulative}"
                )
        elif self.sacked is not None:
            raise ValueError(f"{self.kind.value} carries no sacked sequence")

    def wire_bytes(self) -> int:
        return CONTROL_PACKET_BYTES
