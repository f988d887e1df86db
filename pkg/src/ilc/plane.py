"""Single-plane integer images: the unit of encoding, prediction and training.

Planes are immutable value objects holding a row-major grid of unsigned
samples plus a bit depth.  Supported sources are binary PGM (P5) files and
raw planar YUV 4:2:0 luma extraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FormatError(ValueError):
    """Raised for malformed or unsupported image files."""


@dataclass(frozen=True)
class Plane:
    """A 2-D grid of unsigned integer samples with a bit depth.

    samples is a row-major (height, width) array; every value must lie in
    [0, 2**bit_depth - 1].  8-bit is the primary path, 10-bit is accepted.
    """

    samples: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("samples must be a non-empty 2-D array")
        if self.bit_depth not in (8, 10):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        if arr.min() < 0 or arr.max() > self.max_value:
            raise ValueError("sample out of range for bit depth")
        arr = np.ascontiguousarray(arr.astype(np.uint16))
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, Plane):
            return NotImplemented
        return self.bit_depth == other.bit_depth and np.array_equal(
            self.samples, other.samples
        )


@dataclass
class Corpus:
    """An ordered set of planes sharing one bit depth, with per-plane labels."""

    planes: list[Plane]
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.labels:
            self.labels = [f"plane{i}" for i in range(len(self.planes))]
        if len(self.labels) != len(self.planes):
            raise ValueError("labels and planes must have equal length")
        depths = {p.bit_depth for p in self.planes}
        if len(depths) > 1:
            raise ValueError("corpus planes must share one bit depth")

    def __len__(self) -> int:
        return len(self.planes)

    @property
    def bit_depth(self) -> int:
        return self.planes[0].bit_depth


def _read_pgm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # Skip whitespace and '#' comments, then return one header token.
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return buf[start:pos], pos


def load_pgm(path) -> Plane:
    """Load a binary PGM (P5) file with maxval 255 or 1023.

    Samples with maxval above 255 are stored as 2-byte big-endian values per
    the Netpbm definition.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] != b"P5":
        if buf[:1] == b"P":
            raise FormatError(f"unsupported format {buf[:2].decode('ascii', 'replace')!r}")
        raise FormatError("not a PGM file")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_pgm_token(buf, pos)
        if not tok.isdigit():
            raise FormatError(f"malformed PGM header token {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FormatError("non-positive PGM dimensions")
    if maxval == 255:
        bit_depth = 8
    elif maxval == 1023:
        bit_depth = 10
    else:
        raise FormatError(f"unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    nbytes = width * height * (1 if maxval <= 255 else 2)
    payload = buf[pos : pos + nbytes]
    if len(payload) < nbytes:
        raise FormatError("truncated PGM payload")
    dtype = np.uint8 if maxval <= 255 else np.dtype(">u2")
    samples = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    if maxval > 255 and samples.max() > maxval:
        raise FormatError("PGM sample exceeds maxval")
    return Plane(samples.astype(np.uint16), bit_depth)


def save_pgm(plane: Plane, path) -> None:
    """Write a plane as binary PGM; load_pgm round-trips it exactly."""
    maxval = plane.max_value
    header = f"P5\n{plane.width} {plane.height}\n{maxval}\n".encode("ascii")
    if plane.bit_depth == 8:
        payload = plane.samples.astype(np.uint8).tobytes()
    else:
        payload = plane.samples.astype(">u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def extract_luma_from_yuv(path, width: int, height: int, frame_index: int = 0) -> Plane:
    """Extract the Y plane of one frame from a raw 8-bit planar 4:2:0 file."""
    if width <= 0 or height <= 0:
        raise ValueError("geometry must be positive")
    frame_size = width * height * 3 // 2
    offset = frame_index * frame_size
    with open(path, "rb") as fh:
        fh.seek(offset)
        data = fh.read(width * height)
    if len(data) < width * height:
        raise FormatError(
            f"file too short for frame {frame_index} at {width}x{height}"
        )
    samples = np.frombuffer(data, dtype=np.uint8).reshape(height, width)
    return Plane(samples.astype(np.uint16), 8)
