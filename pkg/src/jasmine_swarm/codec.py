"""Jasmine 31-bit packet frame, duplicate-suppression ledger and the
routing-memory budget model.

Frame layout, most significant bit first within each field::

    pkg_id(10) | sender(6) | receiver(6) | parity(1) | payload(8)

Parity is even parity over the 22 header bits only; payload corruption is
not detected.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

PKG_ID_BITS = 10
ADDR_BITS = 6
PAYLOAD_BITS = 8
HEADER_BITS = PKG_ID_BITS + 2 * ADDR_BITS
FRAME_BITS = HEADER_BITS + 1 + PAYLOAD_BITS
PARITY_INDEX = HEADER_BITS

DEFAULT_RECORD_BYTES = 3
DEFAULT_RAM_BUDGET = 1024


class FrameError(ValueError):
    """Base class for frame decoding failures."""


class ParityError(FrameError):
    pass


class LengthError(FrameError):
    pass


@dataclass(frozen=True)
class Packet:
    pkg_id: int
    sender: int
    receiver: int
    payload: int

    def __post_init__(self) -> None:
        for name, width in (("pkg_id", PKG_ID_BITS), ("sender", ADDR_BITS),
                            ("receiver", ADDR_BITS), ("payload", PAYLOAD_BITS)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < (1 << width):
                raise ValueError(f"{name}={value!r} does not fit in {width} bits")


def _bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def _value(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | b
    return out


def encode(packet: Packet) -> tuple[int, ...]:
    """Return the 31-bit frame of ``packet`` as a tuple of 0/1 ints."""
    header = (_bits(packet.pkg_id, PKG_ID_BITS)
              + _bits(packet.sender, ADDR_BITS)
              + _bits(packet.receiver, ADDR_BITS))
    parity = sum(header) & 1
    return tuple(header + [parity] + _bits(packet.payload, PAYLOAD_BITS))


def decode(frame: Sequence[int]) -> Packet:
    if len(frame) != FRAME_BITS:
        raise LengthError(f"frame has {len(frame)} bits, expected {FRAME_BITS}")
    if any(b not in (0, 1) for b in frame):
        raise FrameError("frame bits must be 0 or 1")
    header = frame[:HEADER_BITS]
    if sum(header) & 1 != frame[PARITY_INDEX]:
        raise ParityError("header parity mismatch")
    return Packet(
        pkg_id=_value(header[:PKG_ID_BITS]),
        sender=_value(header[PKG_ID_BITS:PKG_ID_BITS + ADDR_BITS]),
        receiver=_value(header[PKG_ID_BITS + ADDR_BITS:]),
        payload=_value(frame[PARITY_INDEX + 1:]),
    )


def frame_to_hex(frame: Sequence[int]) -> str:
    """8 hex digits; the 31 frame bits are left-padded with a single 0."""
    if len(frame) != FRAME_BITS:
        raise LengthError(f"frame has {len(frame)} bits, expected {FRAME_BITS}")
    return f"{_value(frame):08x}"


def frame_from_hex(text: str) -> tuple[int, ...]:
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    if len(text) != 8:
        raise LengthError(f"expected 8 hex digits, got {len(text)}")
    try:
        word = int(text, 16)
    except ValueError as exc:
        raise FrameError(f"not a hex frame: {text!r}") from exc
    if word >> FRAME_BITS:
        raise LengthError("padding bit set: frame wider than 31 bits")
    return tuple(_bits(word, FRAME_BITS))


@dataclass
class RoutingLedger:
    """Bounded FIFO history of ``(pkg_id, sender)`` pairs."""

    capacity: int
    record_bytes: int = DEFAULT_RECORD_BYTES
    records: deque = field(default_factory=deque)
    _index: set = field(default_factory=set, repr=False)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("ledger capacity must be positive")

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, key: tuple[int, int]) -> bool:
        return key in self._index

    @property
    def memory_bytes(self) -> int:
        return len(self.records) * self.record_bytes


def ledger_insert(ledger: RoutingLedger, pkg_id: int, sender: int) -> tuple[RoutingLedger, bool]:
    """Record ``(pkg_id, sender)``; returns ``(ledger, was_new)``.

    The ledger is mutated in place and returned for chaining.
    """
    key = (pkg_id, sender)
    if key in ledger._index:
        return ledger, False
    if len(ledger.records) >= ledger.capacity:
        ledger._index.discard(ledger.records.popleft())
    ledger.records.append(key)
    ledger._index.add(key)
    return ledger, True


@dataclass(frozen=True)
class MemoryModel:
    packages: int
    record_bytes: int = DEFAULT_RECORD_BYTES
    ram_budget: int = DEFAULT_RAM_BUDGET

    def __post_init__(self) -> None:
        if self.packages < 0 or self.record_bytes <= 0 or self.ram_budget <= 0:
            raise ValueError("memory model fields must be positive")


def routing_memory_bytes(packages: int, record_bytes: int = DEFAULT_RECORD_BYTES) -> int:
    if packages < 0 or record_bytes <= 0:
        raise ValueError("packages must be >= 0 and record_bytes > 0")
    return packages * record_bytes


def routing_feasible(model: MemoryModel) -> bool:
    return routing_memory_bytes(model.packages, model.record_bytes) <= model.ram_budget
