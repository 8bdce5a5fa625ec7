"""Low-level helpers for the fixed binary container formats.

All container formats share the same skeleton: a 5-byte ASCII magic,
little-endian 32-bit unsigned header fields, then a flat payload of
little-endian floats or packed bits. Parsing failures raise
:class:`FormatError` carrying the byte offset of the offending field.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np


class FormatError(ValueError):
    """Malformed container file; ``offset`` is the failing byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class _Reader:
    """Tracks the byte offset while pulling typed fields from a stream."""

    def __init__(self, fh: BinaryIO):
        self._fh = fh
        self.offset = 0

    def _take(self, n: int, what: str) -> bytes:
        buf = self._fh.read(n)
        if len(buf) != n:
            raise FormatError(
                f"truncated file while reading {what}: wanted {n} bytes, "
                f"got {len(buf)}",
                self.offset,
            )
        start = self.offset
        self.offset += n
        del start
        return buf

    def magic(self, expected: bytes) -> None:
        got = self._take(len(expected), "magic")
        if got != expected:
            raise FormatError(
                f"bad magic {got!r}, expected {expected!r}", 0
            )

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self._take(4, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self._take(8, what))[0]

    def f32_array(self, count: int, what: str) -> np.ndarray:
        buf = self._take(4 * count, what)
        return np.frombuffer(buf, dtype="<f4").copy()

    def bytes_array(self, count: int, what: str) -> np.ndarray:
        buf = self._take(count, what)
        return np.frombuffer(buf, dtype=np.uint8).copy()


def write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def write_f64(fh: BinaryIO, value: float) -> None:
    fh.write(struct.pack("<d", value))


def write_f32_array(fh: BinaryIO, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
