import pytest

from reordernet.core import (
    BASE_HEADER_BYTES,
    ORDERING_METADATA_BYTES,
    ControlKind,
    ControlPacket,
    Verb,
    WirePacket,
)


def _pkt(**kw):
    args = dict(conn=1, seq=5, head=0, is_last=False, size_bytes=1000)
    args.update(kw)
    return WirePacket(**args)


def test_metadata_overhead_is_five_bytes():
    pkt = _pkt()
    assert pkt.wire_bytes() - pkt.wire_bytes(with_metadata=False) == 5
    assert ORDERING_METADATA_BYTES == 5
    assert pkt.wire_bytes() == 1000 + BASE_HEADER_BYTES + 5


def test_head_must_not_exceed_seq():
    with pytest.raises(ValueError):
        _pkt(seq=3, head=4)
    assert _pkt(seq=3, head=3).seq == 3


def test_seq_range():
    with pytest.raises(ValueError):
        _pkt(seq=2**32)


def test_control_packet_invariants():
    ControlPacket(1, ControlKind.ACK, 10)
    ControlPacket(1, ControlKind.SACK, 10, sacked=12)
    with pytest.raises(ValueError):
        ControlPacket(1, ControlKind.SACK, 10, sacked=10)
    with pytest.raises(ValueError):
        ControlPacket(1, ControlKind.SACK, 10)
    with pytest.raises(ValueError):
        ControlPacket(1, ControlKind.ACK, 10, sacked=12)


def test_verbs():
    assert _pkt(verb=Verb.WRITE).verb is Verb.WRITE
    assert _pkt().verb is Verb.SEND_RECV
