"""Context-adaptive Golomb-Rice coding of signed prediction residuals.

Residuals are zigzag-mapped to non-negative integers and Rice-coded with a
parameter k derived from running magnitude statistics.  A fixed-length
escape after 24 unary bits bounds worst-case expansion.  Encoder and decoder
update contexts identically, so rate measurement can simulate coding exactly.
"""

from __future__ import annotations

import numpy as np

from .bitio import BitReader, BitWriter

MAX_RICE_K = 15
ESCAPE_UNARY_LIMIT = 24
ESCAPE_VALUE_BITS = 16
ESCAPE_CODE_BITS = ESCAPE_UNARY_LIMIT + ESCAPE_VALUE_BITS


def zigzag_map(value: int) -> int:
    """Map 0, -1, 1, -2, 2, ... onto 0, 1, 2, 3, 4, ..."""
    return 2 * value if value >= 0 else -2 * value - 1


def zigzag_unmap(code: int) -> int:
    return code // 2 if code % 2 == 0 else -(code + 1) // 2


class RiceContext:
    """Adaptive Rice parameter state: running magnitude sum and count.

    k is the smallest integer with (count << k) >= sum, capped to
    [0, MAX_RICE_K].  A fresh context codes with k = 0.
    """

    __slots__ = ("magnitude_sum", "count")

    def __init__(self, magnitude_sum: int = 0, count: int = 0):
        self.magnitude_sum = magnitude_sum
        self.count = count

    @property
    def k(self) -> int:
        k = 0
        while k < MAX_RICE_K and (self.count << k) < self.magnitude_sum:
            k += 1
        return k

    def update(self, value: int) -> None:
        self.magnitude_sum += abs(value)
        self.count += 1

    def copy(self) -> "RiceContext":
        return RiceContext(self.magnitude_sum, self.count)

    def __repr__(self):
        return f"RiceContext(sum={self.magnitude_sum}, count={self.count})"


def encode_residual(value: int, ctx: RiceContext, sink: BitWriter) -> None:
    """Golomb-Rice encode one signed residual and update the context."""
    code = zigzag_map(value)
    k = ctx.k
    quotient = code >> k
    if quotient < ESCAPE_UNARY_LIMIT:
        sink.write_unary(quotient)
        if k:
            sink.write_bits(code & ((1 << k) - 1), k)
    else:
        # Escape: ESCAPE_UNARY_LIMIT one-bits (no terminator), then the
        # zigzag code as a fixed-length field.
        for _ in range(ESCAPE_UNARY_LIMIT):
            sink.write_bit(1)
        if code >= (1 << ESCAPE_VALUE_BITS):
            raise ValueError(f"residual {value} exceeds escape range")
        sink.write_bits(code, ESCAPE_VALUE_BITS)
    ctx.update(value)


def decode_residual(ctx: RiceContext, src: BitReader) -> int:
    """Exact inverse of encode_residual, with identical context update."""
    k = ctx.k
    quotient = 0
    while quotient < ESCAPE_UNARY_LIMIT and src.read_bit():
        quotient += 1
    if quotient < ESCAPE_UNARY_LIMIT:
        code = quotient << k
        if k:
            code |= src.read_bits(k)
    else:
        code = src.read_bits(ESCAPE_VALUE_BITS)
    value = zigzag_unmap(code)
    ctx.update(value)
    return value


def residual_code_length(value: int, k: int) -> int:
    """Bits encode_residual would emit for one value at parameter k."""
    quotient = zigzag_map(value) >> k
    if quotient < ESCAPE_UNARY_LIMIT:
        return quotient + 1 + k
    return ESCAPE_CODE_BITS


def measure_bits(block, ctx: RiceContext) -> int:
    """Exact bit count for coding `block` from a snapshot of `ctx`.

    The persistent context is not mutated; the computation simulates the
    sequential k adaptation in closed form.
    """
    values = np.asarray(block, dtype=np.int64).ravel()
    bits, _, _ = cost_with_adaptation(
        values[np.newaxis, :], ctx.magnitude_sum, ctx.count
    )
    return int(bits[0])


def cost_with_adaptation(rows: np.ndarray, magnitude_sum: int, count: int):
    """Vectorized rate simulation for independent residual sequences.

    Each row of `rows` is coded from the same starting context state
    (magnitude_sum, count); returns (total bits per row, final sums, final
    count).  Matches encode_residual bit-for-bit.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.ndim == 1:
        rows = rows[np.newaxis, :]
    n = rows.shape[1]
    if n == 0:
        zeros = np.zeros(rows.shape[0], dtype=np.int64)
        return zeros, zeros + magnitude_sum, count
    magnitudes = np.abs(rows)
    codes = np.where(rows >= 0, 2 * rows, -2 * rows - 1)

    csum = np.cumsum(magnitudes, axis=1)
    sums_before = magnitude_sum + csum - magnitudes
    counts_before = count + np.arange(n, dtype=np.int64)

    # k = clip(ceil(log2(ceil(sum / count))), 0, MAX_RICE_K); frexp keeps the
    # log exact for the int64-scale values representable in float64.
    safe_counts = np.maximum(counts_before, 1)
    ratio = -(-sums_before // safe_counts)
    mantissa, exponent = np.frexp(ratio.astype(np.float64))
    k = np.where(mantissa == 0.5, exponent - 1, exponent)
    k = np.clip(k, 0, MAX_RICE_K).astype(np.int64)
    if count == 0:
        # Empty context: k loop yields 0 when sum == 0, the cap otherwise.
        k[:, 0] = 0 if magnitude_sum == 0 else MAX_RICE_K

    quotients = codes >> k
    lengths = np.where(
        quotients < ESCAPE_UNARY_LIMIT, quotients + 1 + k, ESCAPE_CODE_BITS
    )
    return lengths.sum(axis=1), magnitude_sum + csum[:, -1], count + n
