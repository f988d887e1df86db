"""MSB-first bit-level writer and reader over byte buffers."""

from __future__ import annotations


class EndOfStream(Exception):
    """Raised when reading past the end of a bit stream."""


class BitWriter:
    """Accumulates bits MSB-first; the final byte is zero-padded."""

    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bit_count = 0

    def write_bit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | (bit & 1)
        self._nacc += 1
        self.bit_count += 1
        if self._nacc == 8:
            self._bytes.append(self._acc)
            self._acc = 0
            self._nacc = 0

    def write_bits(self, value: int, count: int) -> None:
        """Write the low `count` bits of value, most significant first."""
        for shift in range(count - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def write_unary(self, count: int) -> None:
        """Write `count` one-bits followed by a terminating zero."""
        for _ in range(count):
            self.write_bit(1)
        self.write_bit(0)

    def to_bytes(self) -> bytes:
        out = bytes(self._bytes)
        if self._nacc:
            out += bytes([self._acc << (8 - self._nacc)])
        return out


class BitReader:
    """Reads bits MSB-first from a byte buffer; exact inverse of BitWriter."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # bit cursor

    def read_bit(self) -> int:
        byte_index = self._pos >> 3
        if byte_index >= len(self._data):
            raise EndOfStream("bit stream exhausted")
        bit = (self._data[byte_index] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, count: int) -> int:
        value = 0
        for _ in range(count):
            value = (value << 1) | self.read_bit()
        return value

    @property
    def bits_read(self) -> int:
        return self._pos
