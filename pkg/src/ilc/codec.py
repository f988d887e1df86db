"""Lossless encoder/decoder: quadtree partitioning, rate-only mode decision,
and bitstream assembly.

Coding order is raster over 32x32 coding tree units, depth-first z-order
within each unit.  Every leaf signals a 6-bit mode and Rice-coded residuals;
split flags are one bit, omitted where geometry forces the choice (size-4
leaves, units overlapping the padded frame edge).  Mode decision measures
exact coded bits for every candidate and keeps the cheapest, so distortion
never enters: reconstruction is bit-exact by construction.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .bitio import BitReader, BitWriter, EndOfStream
from .modes import (
    DEFAULT_NEIGHBORS,
    DEFAULT_WEIGHTS,
    NUM_MODES,
    NeighborConfig,
    WeightTable,
    mode_group,
    scan_coordinates,
    size_class,
)
from .plane import Plane
from .predict import (
    build_reference_array,
    predict_block,
    predict_block_all_modes,
    predict_leaf_3tap,
    predict_leaf_3tap_all_modes,
    predict_leaf_sap,
    predict_leaf_sap_all_modes,
    predict_pixel_3tap,
    predict_pixel_sap,
    rdpcm_forward,
    rdpcm_inverse,
)
from .rice import RiceContext, cost_with_adaptation, decode_residual, \
    encode_residual

MAGIC = b"ILC1"
VERSION = 1
HEADER_STRUCT = struct.Struct(">4sBHHBBB")
HEADER_BITS = HEADER_STRUCT.size * 8
MODE_BITS = 6
MIN_LEAF = 4
PAD_MULTIPLE = 4
NUM_CONTEXTS = 16

FAMILY_IDS = {"block": 0, "sap": 1, "three_tap": 2, "block_rdpcm": 3}
FAMILY_NAMES = {v: k for k, v in FAMILY_IDS.items()}
RDPCM_MODES = (10, 26)

_GROUP_MODES = tuple(
    tuple(m for m in range(NUM_MODES) if mode_group(m) == g) for g in range(4)
)


class DecodeError(Exception):
    """Raised for malformed, truncated, or inconsistent bitstreams."""


@dataclass
class CodecConfig:
    family: str = "block"
    ctu_size: int = 32
    weights: WeightTable = field(default_factory=lambda: DEFAULT_WEIGHTS)
    neighbors: NeighborConfig = field(default_factory=lambda: DEFAULT_NEIGHBORS)
    forced_mode: int | None = None

    def __post_init__(self):
        if self.family not in FAMILY_IDS:
            raise ValueError(f"unknown predictor family {self.family!r}")
        if self.ctu_size not in (8, 16, 32):
            raise ValueError(f"unsupported CTU size {self.ctu_size}")
        if self.forced_mode is not None and not 0 <= self.forced_mode < NUM_MODES:
            raise ValueError(f"forced mode {self.forced_mode} out of range")

    @property
    def ctu_log2(self) -> int:
        return self.ctu_size.bit_length() - 1


@dataclass
class QuadTreeNode:
    y0: int
    x0: int
    size: int
    split: bool
    mode: int = -1
    children: tuple = ()


@dataclass
class EncodeStats:
    width: int
    height: int
    bit_depth: int
    family: str
    total_bits: int = 0
    mode_counts: np.ndarray = field(
        default_factory=lambda: np.zeros(NUM_MODES, dtype=np.int64)
    )
    size_counts: dict = field(default_factory=lambda: {4: 0, 8: 0, 16: 0, 32: 0})
    leaves: list = field(default_factory=list)
    encode_seconds: float = 0.0
    decode_seconds: float = 0.0

    @property
    def bits_per_pixel(self) -> float:
        return self.total_bits / (self.width * self.height)

    @property
    def leaf_count(self) -> int:
        return int(self.mode_counts.sum())


# ---------------------------------------------------------------------------
# Coding-order availability
# ---------------------------------------------------------------------------

def _interleave_bits(y: int, x: int) -> int:
    m = 0
    for b in range(5):
        m |= ((x >> b) & 1) << (2 * b)
        m |= ((y >> b) & 1) << (2 * b + 1)
    return m


_MORTON = np.array(
    [[_interleave_bits(y, x) for x in range(32)] for y in range(32)],
    dtype=np.int64,
)


class Availability:
    """O(1) test for whether a sample is reconstructed before a given leaf.

    A position counts as available if it lies inside the padded frame and
    either belongs to an earlier coding tree unit (raster order), precedes
    the leaf inside the same unit (z-order comparison of interleaved local
    coordinates), or is inside the leaf itself — intra-leaf causality is
    guaranteed by the scan order, so leaf-internal taps are always valid.
    """

    __slots__ = ("height", "width", "ctu_log2", "ly", "lx", "ls", "lmorton")

    def __init__(self, height: int, width: int, ctu_log2: int):
        self.height = height
        self.width = width
        self.ctu_log2 = ctu_log2
        self.set_leaf(0, 0, 0)

    def set_leaf(self, y0: int, x0: int, size: int) -> None:
        self.ly, self.lx, self.ls = y0, x0, size
        mask = (1 << self.ctu_log2) - 1
        self.lmorton = int(_MORTON[y0 & mask, x0 & mask])

    def mask(self, ys, xs):
        inside = (ys >= 0) & (ys < self.height) & (xs >= 0) & (xs < self.width)
        in_leaf = (
            (ys >= self.ly) & (ys < self.ly + self.ls)
            & (xs >= self.lx) & (xs < self.lx + self.ls)
        )
        shift = self.ctu_log2
        cty, ctx = ys >> shift, xs >> shift
        lcty, lctx = self.ly >> shift, self.lx >> shift
        earlier = (cty < lcty) | ((cty == lcty) & (ctx < lctx))
        local = (1 << shift) - 1
        same = (cty == lcty) & (ctx == lctx)
        zorder = _MORTON[ys & local, xs & local]
        return inside & (in_leaf | earlier | (same & (zorder < self.lmorton)))

    def single(self, y: int, x: int) -> bool:
        if not (0 <= y < self.height and 0 <= x < self.width):
            return False
        if (self.ly <= y < self.ly + self.ls
                and self.lx <= x < self.lx + self.ls):
            return True
        shift = self.ctu_log2
        cty, ctx = y >> shift, x >> shift
        lcty, lctx = self.ly >> shift, self.lx >> shift
        if (cty, ctx) != (lcty, lctx):
            return cty < lcty or (cty == lcty and ctx < lctx)
        local = (1 << shift) - 1
        return int(_MORTON[y & local, x & local]) < self.lmorton


# ---------------------------------------------------------------------------
# Residual contexts
# ---------------------------------------------------------------------------

def context_index(mode: int, size: int) -> int:
    """16 contexts: directional mode group x block-size class."""
    return mode_group(mode) * 4 + size_class(size)


class ContextBank:
    """Integer (sum, count) state of all 16 Rice contexts, cheap to snapshot
    during the partition search."""

    __slots__ = ("sums", "counts")

    def __init__(self):
        self.sums = [0] * NUM_CONTEXTS
        self.counts = [0] * NUM_CONTEXTS

    def copy(self) -> "ContextBank":
        other = ContextBank.__new__(ContextBank)
        other.sums = self.sums[:]
        other.counts = self.counts[:]
        return other

    def restore(self, other: "ContextBank") -> None:
        self.sums = other.sums[:]
        self.counts = other.counts[:]


# ---------------------------------------------------------------------------
# Encoder
# ---------------------------------------------------------------------------

def _pad_samples(plane: Plane):
    arr = plane.samples.astype(np.int64)
    ph = -(-plane.height // PAD_MULTIPLE) * PAD_MULTIPLE
    pw = -(-plane.width // PAD_MULTIPLE) * PAD_MULTIPLE
    if (ph, pw) != arr.shape:
        arr = np.pad(arr, ((0, ph - plane.height), (0, pw - plane.width)),
                     mode="edge")
    return arr, ph, pw


def _leaf_prediction(src, avail, y0, x0, size, mode, cfg: CodecConfig,
                     bit_depth: int):
    fam = cfg.family
    if fam in ("block", "block_rdpcm") or (fam == "sap" and mode < 2):
        refs = build_reference_array(src, avail, y0, x0, size,
                                     1 << (bit_depth - 1))
        return predict_block(refs, mode)
    if fam == "sap":
        return predict_leaf_sap(src, avail, y0, x0, size, mode, bit_depth)
    return predict_leaf_3tap(src, avail, y0, x0, size, mode, cfg.weights,
                             cfg.neighbors, bit_depth)


def _leaf_residual(src, y0, x0, size, mode, cfg: CodecConfig, ph, pw,
                   bit_depth):
    avail = Availability(ph, pw, cfg.ctu_log2)
    avail.set_leaf(y0, x0, size)
    pred = _leaf_prediction(src, avail, y0, x0, size, mode, cfg, bit_depth)
    resid = src[y0:y0 + size, x0:x0 + size] - pred
    if cfg.family == "block_rdpcm" and mode in RDPCM_MODES:
        resid = rdpcm_forward(resid, mode)
    return resid


def _choose_leaf(src, y0, x0, size, cfg: CodecConfig, bank: ContextBank,
                 ph, pw, bit_depth):
    """Exhaustive rate measurement over candidate modes; returns the argmin
    (ties to the smaller index) and its residual bit cost, updating the
    chosen mode's context."""
    block = src[y0:y0 + size, x0:x0 + size]
    ctx_of_size = size_class(size)

    if cfg.forced_mode is not None:
        mode = cfg.forced_mode
        resid = _leaf_residual(src, y0, x0, size, mode, cfg, ph, pw, bit_depth)
        ys, xs = scan_coordinates(mode, size, size)
        ctx = mode_group(mode) * 4 + ctx_of_size
        bits, fsums, fcount = cost_with_adaptation(
            resid[ys, xs], bank.sums[ctx], bank.counts[ctx]
        )
        bank.sums[ctx] = int(fsums[0])
        bank.counts[ctx] = int(fcount)
        return mode, int(bits[0])

    avail = Availability(ph, pw, cfg.ctu_log2)
    avail.set_leaf(y0, x0, size)
    if cfg.family in ("block", "block_rdpcm"):
        refs = build_reference_array(src, avail, y0, x0, size,
                                     1 << (bit_depth - 1))
        preds = predict_block_all_modes(refs)
    elif cfg.family == "sap":
        preds = predict_leaf_sap_all_modes(src, avail, y0, x0, size, bit_depth)
    else:
        preds = predict_leaf_3tap_all_modes(src, avail, y0, x0, size,
                                            cfg.weights, cfg.neighbors,
                                            bit_depth)
    resids = block[None, :, :] - preds
    if cfg.family == "block_rdpcm":
        for mode in RDPCM_MODES:
            resids[mode] = rdpcm_forward(resids[mode], mode)

    costs = np.empty(NUM_MODES, dtype=np.int64)
    finals = np.empty(NUM_MODES, dtype=np.int64)
    for group in range(4):
        gmodes = list(_GROUP_MODES[group])
        ys, xs = scan_coordinates(gmodes[0], size, size)
        ctx = group * 4 + ctx_of_size
        bits, fsums, _ = cost_with_adaptation(
            resids[gmodes][:, ys, xs], bank.sums[ctx], bank.counts[ctx]
        )
        costs[gmodes] = bits
        finals[gmodes] = fsums
    mode = int(np.argmin(costs))
    ctx = mode_group(mode) * 4 + ctx_of_size
    bank.sums[ctx] = int(finals[mode])
    bank.counts[ctx] += size * size
    return mode, int(costs[mode])


def _search_node(src, y0, x0, size, cfg: CodecConfig, bank: ContextBank,
                 ph, pw, bit_depth):
    """Bottom-up cost comparison of coding this node as one leaf versus
    splitting; returns (bits, tree).  The context bank is left in the state
    produced by the chosen alternative."""
    if y0 >= ph or x0 >= pw:
        return 0, None
    if y0 + size > ph or x0 + size > pw:
        # Overlaps the frame edge: split is forced and needs no flag.
        half = size // 2
        bits = 0
        children = []
        for cy, cx in ((y0, x0), (y0, x0 + half), (y0 + half, x0),
                       (y0 + half, x0 + half)):
            cbits, cnode = _search_node(src, cy, cx, half, cfg, bank, ph, pw,
                                        bit_depth)
            bits += cbits
            children.append(cnode)
        return bits, QuadTreeNode(y0, x0, size, True, children=tuple(children))

    if size == MIN_LEAF:
        mode, rbits = _choose_leaf(src, y0, x0, size, cfg, bank, ph, pw,
                                   bit_depth)
        return MODE_BITS + rbits, QuadTreeNode(y0, x0, size, False, mode)

    before = bank.copy()
    mode, rbits = _choose_leaf(src, y0, x0, size, cfg, bank, ph, pw, bit_depth)
    leaf_bits = MODE_BITS + rbits
    after_leaf = bank.copy()

    bank.restore(before)
    half = size // 2
    split_bits = 0
    children = []
    for cy, cx in ((y0, x0), (y0, x0 + half), (y0 + half, x0),
                   (y0 + half, x0 + half)):
        cbits, cnode = _search_node(src, cy, cx, half, cfg, bank, ph, pw,
                                    bit_depth)
        split_bits += cbits
        children.append(cnode)

    # Both alternatives pay the same split flag; ties keep the leaf.
    if leaf_bits <= split_bits:
        bank.restore(after_leaf)
        return 1 + leaf_bits, QuadTreeNode(y0, x0, size, False, mode)
    return 1 + split_bits, QuadTreeNode(y0, x0, size, True,
                                        children=tuple(children))


def _emit_node(node, writer: BitWriter, src, cfg: CodecConfig, ctxs,
               ph, pw, bit_depth, stats: EncodeStats):
    if node is None:
        return
    partial = node.y0 + node.size > ph or node.x0 + node.size > pw
    if node.split:
        if not partial:
            writer.write_bit(1)
        for child in node.children:
            _emit_node(child, writer, src, cfg, ctxs, ph, pw, bit_depth, stats)
        return
    if node.size > MIN_LEAF:
        writer.write_bit(0)
    writer.write_bits(node.mode, MODE_BITS)
    resid = _leaf_residual(src, node.y0, node.x0, node.size, node.mode, cfg,
                           ph, pw, bit_depth)
    ys, xs = scan_coordinates(node.mode, node.size, node.size)
    ctx = ctxs[context_index(node.mode, node.size)]
    for value in resid[ys, xs]:
        encode_residual(int(value), ctx, writer)
    stats.mode_counts[node.mode] += 1
    stats.size_counts[node.size] += 1
    stats.leaves.append((node.y0, node.x0, node.size, node.mode))


def encode_plane(plane: Plane, config: CodecConfig | None = None):
    """Encode one plane losslessly; returns (bitstream bytes, EncodeStats)."""
    cfg = config or CodecConfig()
    if plane.width > 0xFFFF or plane.height > 0xFFFF:
        raise ValueError("plane dimensions exceed the 16-bit header fields")
    start = time.perf_counter()
    src, ph, pw = _pad_samples(plane)
    ctu = cfg.ctu_size

    bank = ContextBank()
    trees = []
    search_bits = 0
    for cty in range(0, ph, ctu):
        for ctx0 in range(0, pw, ctu):
            bits, node = _search_node(src, cty, ctx0, ctu, cfg, bank, ph, pw,
                                      plane.bit_depth)
            search_bits += bits
            trees.append(node)

    stats = EncodeStats(plane.width, plane.height, plane.bit_depth, cfg.family)
    writer = BitWriter()
    ctxs = [RiceContext() for _ in range(NUM_CONTEXTS)]
    for node in trees:
        _emit_node(node, writer, src, cfg, ctxs, ph, pw, plane.bit_depth,
                   stats)
    if writer.bit_count != search_bits:
        raise AssertionError(
            f"rate accounting mismatch: searched {search_bits} bits, "
            f"emitted {writer.bit_count}"
        )
    header = HEADER_STRUCT.pack(MAGIC, VERSION, plane.width, plane.height,
                                plane.bit_depth, FAMILY_IDS[cfg.family],
                                cfg.ctu_log2)
    stats.total_bits = HEADER_BITS + writer.bit_count
    stats.encode_seconds = time.perf_counter() - start
    return header + writer.to_bytes(), stats


def choose_leaf_mode(plane: Plane, origin, size: int,
                     config: CodecConfig | None = None,
                     bank: ContextBank | None = None):
    """Best mode and total leaf bits (mode signaling + residuals) for one
    prediction unit, evaluated against a fresh or supplied context bank."""
    cfg = config or CodecConfig()
    src, ph, pw = _pad_samples(plane)
    mode, rbits = _choose_leaf(src, origin[0], origin[1], size, cfg,
                               bank or ContextBank(), ph, pw, plane.bit_depth)
    return mode, MODE_BITS + rbits


def choose_partition(plane: Plane, origin, size: int,
                     config: CodecConfig | None = None,
                     bank: ContextBank | None = None):
    """Quadtree for one node chosen by exhaustive rate comparison."""
    cfg = config or CodecConfig()
    src, ph, pw = _pad_samples(plane)
    _, node = _search_node(src, origin[0], origin[1], size, cfg,
                           bank or ContextBank(), ph, pw, plane.bit_depth)
    return node


# ---------------------------------------------------------------------------
# Decoder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    bit_depth: int
    family: str
    ctu_size: int


def parse_header(data: bytes) -> StreamHeader:
    if len(data) < HEADER_STRUCT.size:
        raise DecodeError("stream shorter than header")
    magic, version, width, height, bit_depth, family_id, ctu_log2 = \
        HEADER_STRUCT.unpack_from(data)
    if magic != MAGIC:
        raise DecodeError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}")
    if family_id not in FAMILY_NAMES:
        raise DecodeError(f"unsupported predictor family id {family_id}")
    if bit_depth not in (8, 10):
        raise DecodeError(f"unsupported bit depth {bit_depth}")
    if ctu_log2 not in (3, 4, 5):
        raise DecodeError(f"unsupported CTU size log2 {ctu_log2}")
    if width == 0 or height == 0:
        raise DecodeError("zero image dimension")
    return StreamHeader(width, height, bit_depth, FAMILY_NAMES[family_id],
                        1 << ctu_log2)


def _decode_leaf(reader, recon, y0, x0, size, cfg: CodecConfig, ctxs,
                 ph, pw, bit_depth):
    mode = reader.read_bits(MODE_BITS)
    if mode >= NUM_MODES:
        raise DecodeError(f"invalid mode {mode}")
    avail = Availability(ph, pw, cfg.ctu_log2)
    avail.set_leaf(y0, x0, size)
    ys, xs = scan_coordinates(mode, size, size)
    ctx = ctxs[context_index(mode, size)]
    fam = cfg.family
    if fam in ("block", "block_rdpcm") or (fam == "sap" and mode < 2):
        refs = build_reference_array(recon, avail, y0, x0, size,
                                     1 << (bit_depth - 1))
        pred = predict_block(refs, mode)
        resid = np.zeros((size, size), dtype=np.int64)
        resid[ys, xs] = [decode_residual(ctx, reader)
                         for _ in range(size * size)]
        if fam == "block_rdpcm" and mode in RDPCM_MODES:
            resid = rdpcm_inverse(resid, mode)
        recon[y0:y0 + size, x0:x0 + size] = pred + resid
        return
    cls = size_class(size)
    for yy, xx in zip(ys, xs):
        y, x = y0 + int(yy), x0 + int(xx)
        if fam == "sap":
            pred = predict_pixel_sap(recon, avail, y, x, mode, bit_depth)
        else:
            pred = predict_pixel_3tap(recon, avail, y, x, mode, cfg.weights,
                                      cls, cfg.neighbors, bit_depth)
        recon[y, x] = pred + decode_residual(ctx, reader)


def _decode_node(reader, recon, y0, x0, size, cfg, ctxs, ph, pw, bit_depth):
    if y0 >= ph or x0 >= pw:
        return
    half = size // 2
    if y0 + size > ph or x0 + size > pw:
        for cy, cx in ((y0, x0), (y0, x0 + half), (y0 + half, x0),
                       (y0 + half, x0 + half)):
            _decode_node(reader, recon, cy, cx, half, cfg, ctxs, ph, pw,
                         bit_depth)
        return
    if size > MIN_LEAF and reader.read_bit():
        for cy, cx in ((y0, x0), (y0, x0 + half), (y0 + half, x0),
                       (y0 + half, x0 + half)):
            _decode_node(reader, recon, cy, cx, half, cfg, ctxs, ph, pw,
                         bit_depth)
        return
    _decode_leaf(reader, recon, y0, x0, size, cfg, ctxs, ph, pw, bit_depth)


def decode_plane(data: bytes, weights: WeightTable | None = None,
                 neighbors: NeighborConfig | None = None) -> Plane:
    """Reconstruct the plane a bitstream encodes.

    The header carries everything needed for the shipped configuration;
    streams produced with custom weight or neighbor tables need the same
    tables passed here.
    """
    header = parse_header(data)
    cfg = CodecConfig(
        family=header.family,
        ctu_size=header.ctu_size,
        weights=weights or DEFAULT_WEIGHTS,
        neighbors=neighbors or DEFAULT_NEIGHBORS,
    )
    ph = -(-header.height // PAD_MULTIPLE) * PAD_MULTIPLE
    pw = -(-header.width // PAD_MULTIPLE) * PAD_MULTIPLE
    recon = np.zeros((ph, pw), dtype=np.int64)
    ctxs = [RiceContext() for _ in range(NUM_CONTEXTS)]
    reader = BitReader(data[HEADER_STRUCT.size:])
    try:
        for cty in range(0, ph, header.ctu_size):
            for ctx0 in range(0, pw, header.ctu_size):
                _decode_node(reader, recon, cty, ctx0, header.ctu_size, cfg,
                             ctxs, ph, pw, header.bit_depth)
    except EndOfStream as exc:
        raise DecodeError("truncated payload") from exc
    out = recon[:header.height, :header.width]
    if out.min() < 0 or out.max() > (1 << header.bit_depth) - 1:
        raise DecodeError("decoded sample out of range")
    return Plane(out.astype(np.uint16), header.bit_depth)


# ---------------------------------------------------------------------------
# Statistics aggregation
# ---------------------------------------------------------------------------

@dataclass
class AggregateStats:
    mode_percent: np.ndarray          # 35 bins, leaf-count weighted
    size_percent: dict                # leaf-count weighted, by PU size
    size_pixel_percent: dict          # pixel-count weighted, by PU size


def collect_stats(stats_list) -> AggregateStats:
    """Pool per-encode statistics into percentage histograms."""
    modes = np.zeros(NUM_MODES, dtype=np.float64)
    sizes = {4: 0, 8: 0, 16: 0, 32: 0}
    for st in stats_list:
        modes += st.mode_counts
        for s, n in st.size_counts.items():
            sizes[s] += n
    leaf_total = modes.sum()
    pixel_total = sum(n * s * s for s, n in sizes.items())
    mode_percent = 100.0 * modes / max(leaf_total, 1)
    size_percent = {s: 100.0 * n / max(leaf_total, 1) for s, n in sizes.items()}
    size_pixel_percent = {
        s: 100.0 * n * s * s / max(pixel_total, 1) for s, n in sizes.items()
    }
    return AggregateStats(mode_percent, size_percent, size_pixel_percent)
