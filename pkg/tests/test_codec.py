import random

import pytest
from hypothesis import given, strategies as st

from jasmine_swarm.codec import (FRAME_BITS, HEADER_BITS, LengthError, MemoryModel, Packet,
                                 ParityError, RoutingLedger, decode, encode, frame_from_hex,
                                 frame_to_hex, ledger_insert, routing_feasible,
                                 routing_memory_bytes)

packets = st.builds(Packet, st.integers(0, 1023), st.integers(0, 63), st.integers(0, 63),
                    st.integers(0, 255))


def oracle_fields(frame):
    word = int("".join(map(str, frame)), 2)
    return ((word >> 21) & 0x3FF, (word >> 15) & 0x3F, (word >> 9) & 0x3F,
            (word >> 8) & 1, word & 0xFF)


def test_all_zero_packet():
    assert encode(Packet(0, 0, 0, 0)) == (0,) * 31
    assert decode((0,) * 31) == Packet(0, 0, 0, 0)


def test_single_header_bit_sets_parity():
    frame = encode(Packet(1, 0, 0, 0))
    assert sum(frame[:HEADER_BITS]) == 1
    assert frame[HEADER_BITS] == 1


@given(packets)
def test_field_layout_matches_oracle(p):
    frame = encode(p)
    assert len(frame) == FRAME_BITS
    pkg, snd, rcv, parity, payload = oracle_fields(frame)
    assert (pkg, snd, rcv, payload) == (p.pkg_id, p.sender, p.receiver, p.payload)
    assert parity == (bin(pkg).count("1") + bin(snd).count("1") + bin(rcv).count("1")) % 2


@given(packets)
def test_roundtrip(p):
    assert decode(encode(p)) == p
    assert decode(frame_from_hex(frame_to_hex(encode(p)))) == p


@given(packets, st.integers(0, HEADER_BITS))
def test_header_or_parity_flip_detected(p, i):
    frame = list(encode(p))
    frame[i] ^= 1
    with pytest.raises(ParityError):
        decode(frame)


@given(packets, st.integers(HEADER_BITS + 1, FRAME_BITS - 1))
def test_payload_flip_goes_unnoticed(p, i):
    frame = list(encode(p))
    frame[i] ^= 1
    q = decode(frame)
    assert q.payload != p.payload
    assert (q.pkg_id, q.sender, q.receiver) == (p.pkg_id, p.sender, p.receiver)


@pytest.mark.parametrize("length", [0, 30, 32])
def test_wrong_length(length):
    with pytest.raises(LengthError):
        decode((0,) * length)


def test_non_binary_rejected():
    with pytest.raises(ValueError):
        decode((2,) + (0,) * 30)


@pytest.mark.parametrize("field,value", [("pkg_id", 1024), ("sender", 64), ("receiver", -1),
                                         ("payload", 256)])
def test_out_of_range_fields(field, value):
    kw = dict(pkg_id=0, sender=0, receiver=0, payload=0)
    kw[field] = value
    with pytest.raises(ValueError):
        Packet(**kw)


def test_hex_form():
    assert frame_to_hex(encode(Packet(0, 0, 0, 0))) == "00000000"
    rng = random.Random(3)
    for _ in range(200):
        p = Packet(rng.randrange(1024), rng.randrange(64), rng.randrange(64), rng.randrange(256))
        h = frame_to_hex(encode(p))
        assert len(h) == 8 and int(h, 16) < 2 ** 31
    with pytest.raises(LengthError):
        frame_from_hex("80000000")
    with pytest.raises(LengthError):
        frame_from_hex("123")


def test_ledger_dedup_and_fifo():
    led = RoutingLedger(2)
    led, new = ledger_insert(led, 1, 2)
    assert new and len(led) == 1
    led, new = ledger_insert(led, 1, 2)
    assert not new and len(led) == 1

    led = RoutingLedger(2)
    for k in (1, 2, 3):
        ledger_insert(led, k, 0)
    assert (1, 0) not in led
    assert (2, 0) in led and (3, 0) in led
    assert led.memory_bytes == 2 * led.record_bytes


def test_ledger_capacity_validated():
    with pytest.raises(ValueError):
        RoutingLedger(0)


def test_memory_model():
    assert routing_memory_bytes(300, 3) == 900
    assert routing_memory_bytes(0, 3) == 0
    assert routing_memory_bytes(600, 3) == 1800
    assert routing_feasible(MemoryModel(300, 3, 1024))
    assert not routing_feasible(MemoryModel(600, 3, 1024))
    assert routing_feasible(MemoryModel(0))
    with pytest.raises(ValueError):
        routing_memory_bytes(-1)
