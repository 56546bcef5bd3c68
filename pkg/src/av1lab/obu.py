"""OBU-style container: typed, length-prefixed records behind a private magic prefix.

Not bitstream-conformant AV1; the magic keeps real decoders from mistaking it for one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

MAGIC = b"AV1LAB\x00\x01"


class ObuType(enum.IntEnum):
    SEQUENCE_HEADER = 1
    TEMPORAL_DELIMITER = 2
    FRAME_HEADER = 3
    TILE_GROUP = 4
    METADATA = 5
    FRAME = 6


@dataclass(frozen=True)
class ObuRecord:
    type: ObuType
    payload: bytes = b""

    @property
    def payload_size(self) -> int:
        return len(self.payload)


def leb128_encode(n: int) -> bytes:
    if n < 0:
        raise ValueError("negative length")
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        out.append(b | (0x80 if n else 0))
        if not n:
            return bytes(out)


def leb128_decode(data: bytes, pos: int) -> tuple[int, int]:
    v = shift = 0
    for i in range(8):
        if pos + i >= len(data):
            raise ValueError("truncated length field")
        b = data[pos + i]
        v |= (b & 0x7F) << shift
        shift += 7
        if not b & 0x80:
            return v, pos + i + 1
    raise ValueError("length field too long")


def obu_pack(records: list[ObuRecord]) -> bytes:
    if not records or records[0].type != ObuType.SEQUENCE_HEADER:
        raise ValueError("stream must start with a sequence header")
    out = bytearray(MAGIC)
    for r in records:
        out.append(int(ObuType(r.type)))
        out += leb128_encode(len(r.payload))
        out += r.payload
    return bytes(out)


def obu_parse(data: bytes) -> list[ObuRecord]:
    if not data.startswith(MAGIC):
        raise ValueError("missing container magic")
    pos, out = len(MAGIC), []
    while pos < len(data):
        t = data[pos]
        try:
            kind = ObuType(t)
        except ValueError:
            raise ValueError(f"unknown OBU type {t}") from None
        size, pos = leb128_decode(data, pos + 1)
        if pos + size > len(data):
            raise ValueError("OBU size exceeds remaining data")
        out.append(ObuRecord(kind, bytes(data[pos:pos + size])))
        pos += size
    if not out or out[0].type != ObuType.SEQUENCE_HEADER:
        raise ValueError("stream must start with a sequence header")
    return out
