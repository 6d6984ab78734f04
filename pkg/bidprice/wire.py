# bidprice/wire.py
"""
Binary codec for masked payloads and the framed messages carrying them.

Payload layout::

    MAGIC | u32 header length | header JSON | blocks...

with each block written as ``u16 name length | name | u8 ndim | u32 dims... |
u64 byte length | float64 little-endian row-major data``. A frame is the
payload followed by its 32-byte SHA-256 digest.
"""
import hashlib
import json
import logging
import struct
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from .config import DIGEST_SIZE, PAYLOAD_BLOCKS, WIRE_MAGIC, WIRE_SCHEMA_VERSION
from .exceptions import WireFormatError
from .masking import LocalVerdict, MaskedPartyData

logger = logging.getLogger(__name__)

_FLOAT = np.dtype("<f8")


class BlockInfo(BaseModel):
    name: str
    shape: List[int]


class PayloadHeader(BaseModel):
    """Text header preceding the numeric blocks."""
    schema_version: int = Field(WIRE_SCHEMA_VERSION, description="Wire schema version")
    party: str = Field(..., min_length=1)
    n: int = Field(..., ge=0, description="Original variable count n_k")
    s: int = Field(..., ge=0, description="Masked variable count s_k")
    m: int = Field(..., ge=0, description="Shared row count")
    m_k: int = Field(..., ge=0, description="Private row count")
    t: int = Field(..., ge=0, description="Masked slack count t_k")
    permuted: bool = False
    advisories: List[str] = Field(default_factory=list)
    blocks: List[BlockInfo]


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _block_value(data: MaskedPartyData, name: str) -> np.ndarray:
    value = getattr(data, name)
    return np.atleast_1d(np.asarray(value, dtype=float))


def encode_payload(data: MaskedPartyData) -> bytes:
    """Serialize a payload. Deterministic: identical payloads give identical bytes."""
    arrays = {name: _block_value(data, name) for name in PAYLOAD_BLOCKS}
    header = PayloadHeader(
        party=data.party,
        n=data.n,
        s=data.s,
        m=data.m,
        m_k=data.m_k,
        t=data.t,
        permuted=data.permuted,
        advisories=list(data.advisories),
        blocks=[BlockInfo(name=name, shape=list(array.shape)) for name, array in arrays.items()],
    )
    header_bytes = json.dumps(header.model_dump(), sort_keys=True).encode("utf-8")

    parts = [WIRE_MAGIC, struct.pack("<I", len(header_bytes)), header_bytes]
    for name, array in arrays.items():
        name_bytes = name.encode("ascii")
        body = np.ascontiguousarray(array, dtype=_FLOAT).tobytes(order="C")
        parts.append(struct.pack("<H", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<B", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(struct.pack("<Q", len(body)))
        parts.append(body)
    return b"".join(parts)


def _read(buffer: bytes, offset: int, size: int) -> Tuple[bytes, int]:
    if offset + size > len(buffer):
        raise WireFormatError(f"Payload truncated at byte {offset}")
    return buffer[offset:offset + size], offset + size


def read_header(buffer: bytes) -> Tuple[PayloadHeader, int]:
    """Parse the text header and return it with the offset of the first block."""
    magic, offset = _read(buffer, 0, len(WIRE_MAGIC))
    if magic != WIRE_MAGIC:
        raise WireFormatError("Payload does not start with the expected magic bytes")
    raw_length, offset = _read(buffer, offset, 4)
    (length,) = struct.unpack("<I", raw_length)
    raw_header, offset = _read(buffer, offset, length)
    try:
        header = PayloadHeader.model_validate_json(raw_header)
    except ValidationError as e:
        raise WireFormatError(f"Malformed payload header: {e}") from e
    if header.schema_version != WIRE_SCHEMA_VERSION:
        raise WireFormatError(
            f"Unsupported schema version {header.schema_version}, expected {WIRE_SCHEMA_VERSION}"
        )
    return header, offset


def decode_payload(buffer: bytes) -> MaskedPartyData:
    """Parse payload bytes back into a MaskedPartyData."""
    header, offset = read_header(buffer)
    blocks: Dict[str, np.ndarray] = {}
    while offset < len(buffer):
        raw, offset = _read(buffer, offset, 2)
        (name_length,) = struct.unpack("<H", raw)
        raw_name, offset = _read(buffer, offset, name_length)
        name = raw_name.decode("ascii")
        raw, offset = _read(buffer, offset, 1)
        (ndim,) = struct.unpack("<B", raw)
        raw, offset = _read(buffer, offset, 4 * ndim)
        shape = struct.unpack(f"<{ndim}I", raw)
        raw, offset = _read(buffer, offset, 8)
        (size,) = struct.unpack("<Q", raw)
        body, offset = _read(buffer, offset, size)
        if size != 8 * int(np.prod(shape, dtype=np.int64)):
            raise WireFormatError(f"Block '{name}' has {size} bytes for shape {shape}")
        blocks[name] = np.frombuffer(body, dtype=_FLOAT).reshape(shape).copy()

    missing = [name for name in PAYLOAD_BLOCKS if name not in blocks]
    unknown = [name for name in blocks if name not in PAYLOAD_BLOCKS]
    if missing or unknown:
        raise WireFormatError(f"Payload blocks do not match the schema: missing {missing}, unknown {unknown}")

    return MaskedPartyData(
        party=header.party,
        **{name: blocks[name] for name in PAYLOAD_BLOCKS if name != "offset"},
        offset=float(blocks["offset"][0]),
        permuted=header.permuted,
        advisories=tuple(header.advisories),
    )


def frame(payload: bytes) -> bytes:
    """Append the payload's SHA-256 digest."""
    return payload + digest(payload)


def unframe(message: bytes) -> bytes:
    """Split a frame and verify its digest."""
    if len(message) < DIGEST_SIZE:
        raise WireFormatError("Frame shorter than its digest")
    payload, received = message[:-DIGEST_SIZE], message[-DIGEST_SIZE:]
    if digest(payload) != received:
        logger.error("Frame digest mismatch")
        raise WireFormatError("Frame digest does not match its payload")
    return payload


def encode_verdict(verdict: LocalVerdict, round_index: int) -> bytes:
    body = {"party": verdict.party, "passed": verdict.passed, "round": round_index,
            "residuals": verdict.residuals}
    return json.dumps(body, sort_keys=True).encode("utf-8")


def decode_verdict(buffer: bytes) -> Tuple[LocalVerdict, int]:
    try:
        body = json.loads(buffer.decode("utf-8"))
        return LocalVerdict(body["party"], bool(body["passed"]), dict(body["residuals"])), int(body["round"])
    except (ValueError, KeyError) as e:
        raise WireFormatError(f"Malformed verdict message: {e}") from e
