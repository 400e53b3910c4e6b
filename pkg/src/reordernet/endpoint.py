"""Sender- and receiver-side ordering agents over a minimal RDMA-like transport.

The sender runs a fixed window (congestion control is out of scope here),
appends ordering metadata to every data packet, reacts to ACK/SACK/NACK, and
recovers by go-back-N or selective repeat.  The receiver classifies arrivals
through a pluggable reorder tracker, generates per-packet acknowledgments,
holds off the completion notification until the in-order prefix covers the
last sequence, and garbage-collects tracking memory on completion.

Tracker kinds:

* ``hd``     hybrid-dynamic bitmap, created on the first out-of-order arrival,
             backed by the NIC memory controller when one is supplied;
* ``static`` fixed-size circular bitmap, allocated for every connection;
* ``ideal``  unbounded below-NIC reorder buffer, never refuses a sequence;
* ``none``   no ordering support: every out-of-order arrival is NACKed and its
             payload dropped, which is what triggers recovery in plain RDMA.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .bitmap import UNCAPPED, HdBitmap, MinMissingSet, StaticBitmap, Track
from .core import ControlKind, ControlPacket, Verb, WirePacket
from .memctrl import MemController, MemError


class RecoveryMode(enum.Enum):
    GBN = "gbn"
    SR = "sr"


class TrackerKind(enum.Enum):
    HD = "hd"
    STATIC = "static"
    IDEAL = "ideal"
    NONE = "none"


class WindowFull(Exception):
    """No window space; caller retries after the next acknowledgment."""


class LastHeld(Exception):
    """Write-hold: the last packet stays back until everything else is acked."""


# ---------------------------------------------------------------------------
# Sender
# ---------------------------------------------------------------------------


class Sender:
    """Per-connection sending agent with a fixed window."""

    def __init__(
        self,
        conn: int,
        first_seq: int,
        total_bytes: int,
        payload_bytes: int,
        window_packets: int,
        recovery: RecoveryMode = RecoveryMode.GBN,
        timeout_ns: int = 0,
        verb: Verb = Verb.SEND_RECV,
        write_hold: bool = False,
    ):
        if total_bytes <= 0 or payload_bytes <= 0 or window_packets <= 0:
            raise ValueError("sizes and window must be positive")
        self.conn = conn
        self.first_seq = first_seq
        self.total_bytes = total_bytes
        self.payload_bytes = payload_bytes
        self.n_packets = -(-total_bytes // payload_bytes)
        self.last_seq = first_seq + self.n_packets - 1
        self.window_packets = window_packets
        self.recovery = recovery
        self.timeout_ns = timeout_ns
        self.verb = verb
        self.write_hold = write_hold and verb is Verb.WRITE
        self.next_seq = first_seq
        self.snd_una = first_seq
        self.sacked: set[int] = set()
        self.last_heard_ns = 0
        self.last_packet_released = False
        self.retransmissions = 0
        self.recovery_triggers = 0

    # -- emission ----------------------------------------------------------

    @property
    def done(self) -> bool:
        return self.snd_una > self.last_seq

    def _payload(self, seq: int) -> int:
        if seq == self.last_seq:
            return self.total_bytes - (self.n_packets - 1) * self.payload_bytes
        return self.payload_bytes

    def _make_packet(self, seq: int) -> WirePacket:
        sent_before = (seq - self.first_seq) * self.payload_bytes
        return WirePacket(
            conn=self.conn,
            seq=seq,
            head=self.first_seq,
            is_last=seq == self.last_seq,
            size_bytes=self._payload(seq),
            flow_remaining_bytes=self.total_bytes - sent_before,
            verb=self.verb,
        )

    def emit_next(self) -> WirePacket:
        """Emit the next new packet, or raise WindowFull / LastHeld."""
        if self.next_seq > self.last_seq:
            raise WindowFull("nothing left to send")
        if self.next_seq >= self.snd_una + self.window_packets:
            raise WindowFull(f"window of {self.window_packets} is full")
        if (
            self.write_hold
            and self.next_seq == self.last_seq
            and self.snd_una < self.last_seq
        ):
            raise LastHeld("last packet withheld until prior data is acked")
        pkt = self._make_packet(self.next_seq)
        self.next_seq += 1
        if pkt.is_last:
            self.last_packet_released = True
        return pkt

    def pump(self) -> list[WirePacket]:
        """Emit every packet the window and write-hold rule currently allow."""
        out = []
        while True:
            if self.next_seq > self.last_seq:
                break
            if self.next_seq >= self.snd_una + self.window_packets:
                break
            if (
                self.write_hold
                and self.next_seq == self.last_seq
                and self.snd_una < self.last_seq
            ):
                break
            out.append(self._make_packet(self.next_seq))
            self.next_seq += 1
        if out and out[-1].is_last:
            self.last_packet_released = True
        return out

    # -- control reaction ----------------------------------------------------

    def on_control(self, ctrl: ControlPacket, now_ns: int = 0) -> list[WirePacket]:
        """React to an acknowledgment; returns packets to retransmit."""
        if ctrl.conn != self.conn:
            raise ValueError("control packet for a different connection")
        stale = ctrl.cumulative < self.snd_una
        if stale and (ctrl.kind is not ControlKind.SACK or ctrl.sacked is None):
            return []
        self.last_heard_ns = now_ns
        if ctrl.cumulative > self.snd_una:
            self.snd_una = ctrl.cumulative
            self.sacked = {s for s in self.sacked if s >= self.snd_una}
        if ctrl.kind is ControlKind.SACK:
            if self.recovery is RecoveryMode.SR and ctrl.sacked >= self.snd_una:
                self.sacked.add(ctrl.sacked)
            return []
        if ctrl.kind is ControlKind.NACK:
            return self._recover()
        return []

    def _recover(self) -> list[WirePacket]:
        self.recovery_triggers += 1
        out = []
        for seq in range(self.snd_una, self.next_seq):
            if self.recovery is RecoveryMode.SR and seq in self.sacked:
                continue
            out.append(self._make_packet(seq))
        self.retransmissions += len(out)
        return out

    def timeout_due(self, now_ns: int) -> bool:
        return (
            self.timeout_ns > 0
            and self.snd_una < self.next_seq
            and now_ns - self.last_heard_ns >= self.timeout_ns
        )

    def on_timeout(self, now_ns: int) -> list[WirePacket]:
        """Recover exactly as a NACK would; resets the timer."""
        if not self.timeout_due(now_ns):
            return []
        self.last_heard_ns = now_ns
        return self._recover()


# ---------------------------------------------------------------------------
# Receiver
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class RxEvent:
    """What one arrival produced."""

    control: ControlPacket
    delivered: tuple[int, int] | None = None  # newly in-order [lo, hi)
    created_tracker: bool = False
    payload_dropped: bool = False


class Receiver:
    """Per-connection receiving agent: tracker binding plus acknowledgments."""

    def __init__(
        self,
        conn: int,
        tracker_kind: TrackerKind = TrackerKind.HD,
        controller: MemController | None = None,
        block_size_bits: int = 16,
        cap_blocks: int = 16,
        static_bits: int = 256,
    ):
        self.conn = conn
        self.wire_conn = conn  # id stamped on packets; conn indexes the controller
        self.kind = tracker_kind
        self.controller = controller
        self.block_size_bits = block_size_bits
        self.cap_blocks = cap_blocks
        self.static_bits = static_bits
        self.expected_seq: int | None = None
        self.delivered_prefix: int | None = None
        self.last_seq: int | None = None
        self.tracker = None
        self.conn_module_valid = False
        self.completion_notified = False
        self._ctrl_blocks = 0
        self.data_arrivals = 0
        self.reordered_arrivals = 0
        self.sack_sent = 0
        self.nack_sent = 0
        self.nic_dropped = 0
        self.max_bitmap_bytes = 0

    # -- tracker lifecycle --------------------------------------------------

    def _create_tracker(self, head: int) -> bool:
        """Instantiate the tracker for this connection; False if NIC memory
        could not be allocated (the packet is then untrackable)."""
        if self.kind is TrackerKind.IDEAL:
            self.tracker = MinMissingSet(head)
        elif self.kind is TrackerKind.STATIC:
            self.tracker = StaticBitmap(head, self.static_bits)
        else:
            if self.controller is not None:
                try:
                    self.controller.init_connection(self.conn)
                    self.controller.alloc_bitmap_block(self.conn)
                    self._ctrl_blocks = 1
                except MemError:
                    if self.controller.has_connection(self.conn):
                        self.controller.release(self.conn)
                    return False
            self.tracker = HdBitmap(head, self.block_size_bits, self.cap_blocks)
            if self.controller is not None:
                self._sync_state()
        self.conn_module_valid = True
        if self.last_seq is not None:
            self.tracker.note_last(self.last_seq)
        return True

    def _sync_state(self) -> None:
        ctrl = self.controller
        bm = self.tracker
        ctrl.state_access(self.conn, "head", write=bm.head)
        ctrl.state_access(self.conn, "tail", write=bm.tail)
        ctrl.state_access(self.conn, "head_bm_id", write=bm.head_bm_id)
        ctrl.state_access(self.conn, "head_bm_index", write=bm.head_bm_index)
        ctrl.state_access(self.conn, "circular_bm_size", write=bm.circular_size)
        ctrl.state_access(self.conn, "dynamic_size", write=bm.dynamic_size)

    def _grow_blocks(self) -> bool:
        """Mirror bitmap growth into controller block allocations."""
        if self.controller is None:
            return True
        try:
            while self._ctrl_blocks < self.tracker.dynamic_size:
                self.controller.alloc_bitmap_block(self.conn)
                self._ctrl_blocks += 1
        except MemError:
            return False
        self._sync_state()
        return True

    def bitmap_bytes(self) -> int:
        if self.kind is TrackerKind.STATIC:
            return self.static_bits // 8 if not self.completion_notified else 0
        if self.tracker is None or self.kind is TrackerKind.IDEAL:
            return 0
        return self.tracker.memory_bytes()

    # -- arrival processing ---------------------------------------------------

    def on_packet(self, pkt: WirePacket) -> RxEvent:
        self.data_arrivals += 1
        self.wire_conn = pkt.conn
        if self.expected_seq is None:
            # First arrival of the connection: the transport cursor starts at
            # the packet-carried first sequence number.
            self.expected_seq = pkt.head
            self.delivered_prefix = pkt.head
            if self.kind is TrackerKind.STATIC:
                self._create_tracker(pkt.head)
        if pkt.seq != self.expected_seq:
            self.reordered_arrivals += 1
        if pkt.is_last:
            self.last_seq = pkt.seq
            if self.tracker is not None:
                self.tracker.note_last(pkt.seq)

        if self.kind is TrackerKind.NONE:
            return self._on_packet_without_tracker(pkt)
        if self.tracker is None:
            if pkt.seq == self.expected_seq:
                return self._deliver_one()
            if pkt.seq < self.expected_seq:
                return RxEvent(self._ack())
            created = self._create_tracker(self.expected_seq)
            if not created:
                return self._nack()
            outcome = self.tracker.track(pkt.seq)
            if outcome == Track.GREW and not self._grow_blocks():
                return self._nack()
            self._note_memory()
            return RxEvent(self._sack(pkt.seq), created_tracker=True)
        return self._on_tracked_packet(pkt)

    def _on_packet_without_tracker(self, pkt: WirePacket) -> RxEvent:
        if pkt.seq == self.expected_seq:
            return self._deliver_one()
        if pkt.seq < self.expected_seq:
            return RxEvent(self._ack())
        return self._nack()

    def _on_tracked_packet(self, pkt: WirePacket) -> RxEvent:
        outcome = self.tracker.track(pkt.seq)
        if outcome == Track.IN_ORDER:
            lo = self.expected_seq
            self.expected_seq = self.tracker.head
            self.delivered_prefix = self.expected_seq
            return RxEvent(self._ack(), delivered=(lo, self.expected_seq))
        if outcome == Track.DUPLICATE:
            return RxEvent(self._ack())
        if outcome == Track.UNTRACKABLE:
            return self._nack()
        if outcome == Track.GREW and not self._grow_blocks():
            return self._nack()
        self._note_memory()
        return RxEvent(self._sack(pkt.seq))

    def _deliver_one(self) -> RxEvent:
        lo = self.expected_seq
        self.expected_seq += 1
        self.delivered_prefix = self.expected_seq
        return RxEvent(self._ack(), delivered=(lo, self.expected_seq))

    def _ack(self) -> ControlPacket:
        return ControlPacket(self.wire_conn, ControlKind.ACK, self.expected_seq)

    def _sack(self, sacked: int) -> ControlPacket:
        self.sack_sent += 1
        return ControlPacket(
            self.wire_conn, ControlKind.SACK, self.expected_seq, sacked=sacked
        )

    def _nack(self) -> RxEvent:
        self.nack_sent += 1
        self.nic_dropped += 1
        return RxEvent(
            ControlPacket(self.wire_conn, ControlKind.NACK, self.expected_seq),
            payload_dropped=True,
        )

    def _note_memory(self) -> None:
        b = self.bitmap_bytes()
        if b > self.max_bitmap_bytes:
            self.max_bitmap_bytes = b

    # -- completion -----------------------------------------------------------

    def completion(self) -> bool:
        """True exactly once, when the delivered prefix passes the last
        sequence; releases tracking memory on that transition."""
        if self.completion_notified:
            return False
        if self.last_seq is None or self.delivered_prefix is None:
            return False
        if self.delivered_prefix <= self.last_seq:
            return False
        self.completion_notified = True
        if (
            self.kind is TrackerKind.HD
            and self.conn_module_valid
            and self.controller is not None
        ):
            self.controller.release(self.conn)
        self.tracker = None
        self.conn_module_valid = False
        return True
