"""Canonical binary encoding used for hashing and ledger dumps.

Fixed field order, little-endian unsigned integers, length-prefixed byte
strings. Decoding is strict: every byte string has exactly one decoding and
re-encoding it gives back the same bytes.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Optional

from .errors import LedgerFormatError

HASH_LEN = 32
ZERO_HASH = bytes(HASH_LEN)

_U8 = struct.Struct("<B")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_F64 = struct.Struct("<d")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def check_hash(value: bytes, name: str = "hash") -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != HASH_LEN:
        raise ValueError(f"{name} must be {HASH_LEN} bytes")
    return bytes(value)


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, value: int) -> "Writer":
        self._parts.append(_U8.pack(value))
        return self

    def u32(self, value: int) -> "Writer":
        self._parts.append(_U32.pack(value))
        return self

    def u64(self, value: int) -> "Writer":
        self._parts.append(_U64.pack(value))
        return self

    def f64(self, value: float) -> "Writer":
        self._parts.append(_F64.pack(value))
        return self

    def hash(self, value: bytes) -> "Writer":
        self._parts.append(check_hash(value))
        return self

    def blob(self, value: bytes) -> "Writer":
        self.u32(len(value))
        self._parts.append(bytes(value))
        return self

    def text(self, value: str) -> "Writer":
        return self.blob(value.encode("utf-8"))

    def opt_u64(self, value: Optional[int]) -> "Writer":
        if value is None:
            return self.u8(0)
        return self.u8(1).u64(value)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = bytes(data)
        self._pos = 0

    def _take(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._data):
            raise LedgerFormatError("truncated input")
        chunk = self._data[self._pos:end]
        self._pos = end
        return chunk

    def u8(self) -> int:
        return _U8.unpack(self._take(1))[0]

    def u32(self) -> int:
        return _U32.unpack(self._take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self._take(8))[0]

    def f64(self) -> float:
        return _F64.unpack(self._take(8))[0]

    def hash(self) -> bytes:
        return self._take(HASH_LEN)

    def blob(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LedgerFormatError("invalid UTF-8") from exc

    def flag(self) -> bool:
        value = self.u8()
        if value > 1:
            raise LedgerFormatError(f"invalid boolean byte {value}")
        return bool(value)

    def opt_u64(self) -> Optional[int]:
        return self.u64() if self.flag() else None

    def finish(self) -> None:
        if self._pos != len(self._data):
            raise LedgerFormatError("trailing bytes")
