"""
Tests for the payload codec and message frames.
"""
import numpy as np
import pytest

from bidprice.config import PAYLOAD_BLOCKS, WIRE_MAGIC
from bidprice.exceptions import WireFormatError
from bidprice.masking import KeyPolicy, LocalVerdict, generate_keys, mask
from bidprice.seeding import make_rng
from bidprice.wire import decode_payload, decode_verdict, encode_payload, encode_verdict, frame, read_header, unframe

pytestmark = pytest.mark.unit


@pytest.fixture
def payload(demo_blocks):
    keys = generate_keys(demo_blocks, "2", make_rng(12, "wire"), KeyPolicy(extra_rows_d=2, permute=True))
    return mask(demo_blocks, "2", keys)


def test_decode_restores_every_block(payload):
    decoded = decode_payload(encode_payload(payload))
    for name in PAYLOAD_BLOCKS:
        assert np.array_equal(np.atleast_1d(getattr(decoded, name)), np.atleast_1d(getattr(payload, name))), name
    assert decoded.party == "2"
    assert decoded.permuted
    assert decoded.advisories == payload.advisories


def test_encoding_is_deterministic(payload):
    assert encode_payload(payload) == encode_payload(payload)


def test_header_dimensions(payload):
    header, offset = read_header(encode_payload(payload))
    assert (header.n, header.s, header.m, header.m_k, header.t) == (payload.n, payload.n + 2, 1, 2, 2)
    assert [b.name for b in header.blocks] == list(PAYLOAD_BLOCKS)
    assert offset > len(WIRE_MAGIC)


def test_bad_magic(payload):
    data = encode_payload(payload)
    with pytest.raises(WireFormatError, match="magic bytes"):
        decode_payload(b"X" * len(WIRE_MAGIC) + data[len(WIRE_MAGIC):])


def test_truncated(payload):
    data = encode_payload(payload)
    with pytest.raises(WireFormatError, match="truncated"):
        decode_payload(data[:-5])


def test_frame_digest(payload):
    data = encode_payload(payload)
    framed = frame(data)
    assert unframe(framed) == data

    tampered = bytearray(framed)
    tampered[len(WIRE_MAGIC) + 10] ^= 0xFF
    with pytest.raises(WireFormatError, match="digest"):
        unframe(bytes(tampered))
    with pytest.raises(WireFormatError, match="shorter"):
        unframe(b"short")


def test_verdict_message():
    verdict = LocalVerdict("1", False, {"primal": 1e-3})
    decoded, round_index = decode_verdict(encode_verdict(verdict, 2))
    assert decoded == verdict
    assert round_index == 2
    with pytest.raises(WireFormatError, match="Malformed verdict"):
        decode_verdict(b"{}")
