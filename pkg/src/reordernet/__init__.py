"""Packet-reordering layer for RDMA NICs plus a deterministic network simulator."""

__version__ = "0.1.0"

from .bitmap import COMPILED, UNCAPPED, HdBitmap, MinMissingSet, StaticBitmap, Track
from .core import ControlKind, ControlPacket, Verb, WirePacket

__all__ = [
    "COMPILED",
    "UNCAPPED",
    "HdBitmap",
    "MinMissingSet",
    "StaticBitmap",
    "Track",
    "ControlKind",
    "ControlPacket",
    "Verb",
    "WirePacket",
    "__version__",
]
