"""Canonical byte encodings ("CDK/v1").

Every value that is hashed or signed anywhere in the toolkit goes through
these helpers, so the bytes are bit-stable across runs and platforms:

  field   = u32 big-endian length prefix || field bytes
  integer = 8-byte big-endian payload (then framed like any field)
  list    = u32 big-endian count || framed items

Composite values concatenate their framed fields in declared field order.
"""

from __future__ import annotations

import struct

WIRE_VERSION = "CDK/v1"


def enc_bytes(b: bytes) -> bytes:
    return struct.pack(">I", len(b)) + b


def enc_u64(n: int) -> bytes:
    if n < 0:
        raise ValueError("negative integer not encodable")
    return enc_bytes(struct.pack(">Q", n))


def enc_str(s: str) -> bytes:
    return enc_bytes(s.encode("utf-8"))


def enc_list(items: list[bytes]) -> bytes:
    out = [struct.pack(">I", len(items))]
    out.extend(enc_bytes(item) for item in items)
    return b"".join(out)


class WireError(ValueError):
    """Raised when a byte stream does not parse as a CDK/v1 structure."""


class Reader:
    """Sequential decoder for the framing produced by the enc_* helpers."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def bytes_(self) -> bytes:
        if self._pos + 4 > len(self._data):
            raise WireError("truncated length prefix")
        (n,) = struct.unpack_from(">I", self._data, self._pos)
        self._pos += 4
        if self._pos + n > len(self._data):
            raise WireError("truncated field")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u64(self) -> int:
        raw = self.bytes_()
        if len(raw) != 8:
            raise WireError("integer field must be 8 bytes")
        return struct.unpack(">Q", raw)[0]

    def str_(self) -> str:
        try:
            return self.bytes_().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireError("invalid utf-8") from exc

    def list_(self) -> list[bytes]:
        if self._pos + 4 > len(self._data):
            raise WireError("truncated list count")
        (n,) = struct.unpack_from(">I", self._data, self._pos)
        self._pos += 4
        return [self.bytes_() for _ in range(n)]

    def byte(self) -> int:
        if self._pos >= len(self._data):
            raise WireError("truncated tag byte")
        out = self._data[self._pos]
        self._pos += 1
        return out

    def expect_end(self) -> None:
        if self._pos != len(self._data):
            raise WireError("trailing bytes")

    @property
    def exhausted(self) -> bool:
        return self._pos == len(self._data)
