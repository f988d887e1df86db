"""The three spatial predictor families.

Block-based prediction builds a substituted reference array per block and
applies the planar, DC, or angular formula to all pixels at once.  The
pixel-by-pixel families (sample-based angular and the 3-tap filter) predict
each pixel from immediate reconstructed neighbors; their leaf-level entry
points evaluate a whole leaf vectorized, which is valid because lossless
reconstruction equals the source, so intra-leaf dependencies never change
the referenced values.

Availability is supplied by the codec as an object with `mask(ys, xs)` (bool
array) and `single(y, x)` methods; positions inside the current leaf count
as available because tap causality is enforced by the scan order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modes import (
    DC,
    DIAGONAL,
    HORIZONTAL,
    INVERSE_DISPLACEMENT,
    NUM_MODES,
    PLANAR,
    VERTICAL,
    NeighborConfig,
    WeightTable,
    displacement,
    size_class,
)

__all__ = [
    "ReferenceArray",
    "build_reference_array",
    "predict_block",
    "predict_block_all_modes",
    "predict_block_planar",
    "predict_block_dc",
    "predict_block_angular",
    "sap_tap_offsets",
    "predict_leaf_sap",
    "predict_leaf_sap_all_modes",
    "predict_pixel_sap",
    "effective_tap_values",
    "predict_leaf_3tap",
    "predict_leaf_3tap_all_modes",
    "predict_pixel_3tap",
    "rdpcm_forward",
    "rdpcm_inverse",
]


# ---------------------------------------------------------------------------
# Block-based prediction
# ---------------------------------------------------------------------------

@dataclass
class ReferenceArray:
    """Substituted neighbor samples of an N x N block.

    above holds 2N+1 entries: the top-left corner sample followed by the row
    above the block extended to the top-right.  left holds 2N entries: the
    column left of the block extended downward.
    """

    above: np.ndarray
    left: np.ndarray
    size: int


def build_reference_array(samples, avail, y0: int, x0: int, size: int,
                          mid: int) -> ReferenceArray:
    """Gather block neighbors, filling gaps by propagation.

    Scans from the bottom-most left sample up through the corner and across
    the top; the first gap borrows the first available sample, later gaps
    repeat their predecessor.  A block with no neighbors at all gets `mid`
    everywhere.
    """
    n2 = 2 * size
    h, w = samples.shape
    ys = np.concatenate((
        np.arange(y0 + n2 - 1, y0 - 2, -1), np.full(n2, y0 - 1),
    ))
    xs = np.concatenate((
        np.full(n2 + 1, x0 - 1), np.arange(x0, x0 + n2),
    ))
    m = avail.mask(ys, xs)
    v = np.where(
        m, samples[np.clip(ys, 0, h - 1), np.clip(xs, 0, w - 1)], 0
    ).astype(np.int64)
    if not m.any():
        v[:] = mid
    else:
        if not m[0]:
            v[0] = v[np.argmax(m)]
            m = m.copy()
            m[0] = True
        v = v[np.maximum.accumulate(np.where(m, np.arange(v.size), 0))]
    return ReferenceArray(above=v[n2:].copy(), left=v[:n2][::-1].copy(),
                          size=size)


def predict_block_planar(refs: ReferenceArray) -> np.ndarray:
    n = refs.size
    shift = n.bit_length()  # log2(n) + 1 for power-of-two n
    top = refs.above[1:n + 1]
    top_right = refs.above[n + 1]
    left = refs.left[:n]
    bottom_left = refs.left[n]
    x = np.arange(n, dtype=np.int64)
    y = np.arange(n, dtype=np.int64)
    horiz = (n - 1 - x)[None, :] * left[:, None] + (x + 1)[None, :] * top_right
    vert = (n - 1 - y)[:, None] * top[None, :] + (y + 1)[:, None] * bottom_left
    return (horiz + vert + n) >> shift


def predict_block_dc(refs: ReferenceArray) -> np.ndarray:
    n = refs.size
    total = int(refs.above[1:n + 1].sum() + refs.left[:n].sum())
    dc = (total + n) >> n.bit_length()
    return np.full((n, n), dc, dtype=np.int64)


def predict_block_angular(refs: ReferenceArray, mode: int) -> np.ndarray:
    """Project each pixel onto the reference row/column along the mode's
    displacement and interpolate at 1/32 accuracy:
    p = ((32 - w) * a + w * b + 16) >> 5."""
    size = refs.size
    d = displacement(mode)
    vertical = mode >= DIAGONAL
    corner = refs.above[:1]
    if vertical:
        main = refs.above
        side = np.concatenate((corner, refs.left))
    else:
        main = np.concatenate((corner, refs.left))
        side = refs.above
    if d >= 0:
        ref = np.concatenate((main, main[-1:]))
        base = 0
    else:
        # Extend the main reference below index 0 by projecting side
        # samples across with the inverse displacement.
        base = max(0, -((size * d) >> 5) - 1)
        inv = -INVERSE_DISPLACEMENT[d]
        acc = 128 + inv * np.arange(base, 0, -1, dtype=np.int64)
        ref = np.concatenate((side[acc >> 8], main, main[-1:]))
    steps = np.arange(1, size + 1, dtype=np.int64) * d
    delta = steps >> 5
    fract = steps & 31
    idx = base + 1 + np.arange(size, dtype=np.int64)[None, :] + delta[:, None]
    out = ((32 - fract)[:, None] * ref[idx]
           + fract[:, None] * ref[idx + 1] + 16) >> 5
    return out if vertical else out.T


def predict_block(refs: ReferenceArray, mode: int) -> np.ndarray:
    if mode == PLANAR:
        return predict_block_planar(refs)
    if mode == DC:
        return predict_block_dc(refs)
    return predict_block_angular(refs, mode)


def predict_block_all_modes(refs: ReferenceArray) -> np.ndarray:
    """(35, N, N) stack of every mode's block prediction."""
    n = refs.size
    out = np.empty((NUM_MODES, n, n), dtype=np.int64)
    out[PLANAR] = predict_block_planar(refs)
    out[DC] = predict_block_dc(refs)
    for mode in range(2, NUM_MODES):
        out[mode] = predict_block_angular(refs, mode)
    return out


# ---------------------------------------------------------------------------
# Shared pixel-tap gathering with availability substitution
# ---------------------------------------------------------------------------

def _substitution_order(offsets):
    """For each tap, the other taps ordered by offset distance (ties by
    tap index) — the order in which an unavailable tap borrows a value."""
    orders = []
    for i, (dy, dx) in enumerate(offsets):
        others = [j for j in range(len(offsets)) if j != i]
        others.sort(
            key=lambda j: ((offsets[j][0] - dy) ** 2
                           + (offsets[j][1] - dx) ** 2, j)
        )
        orders.append(others)
    return orders


def effective_tap_values(samples, avail, y0: int, x0: int, size: int,
                         offsets, mid: int) -> list[np.ndarray]:
    """Per-pixel tap values for a whole leaf, substitution applied."""
    h, w = samples.shape
    ys, xs = np.meshgrid(
        np.arange(y0, y0 + size), np.arange(x0, x0 + size), indexing="ij"
    )
    vals = []
    masks = []
    for dy, dx in offsets:
        ty, tx = ys + dy, xs + dx
        m = avail.mask(ty, tx)
        v = samples[np.clip(ty, 0, h - 1), np.clip(tx, 0, w - 1)]
        vals.append(v.astype(np.int64))
        masks.append(m)
    eff = []
    for i, order in enumerate(_substitution_order(offsets)):
        e = np.full((size, size), mid, dtype=np.int64)
        for j in reversed(order):
            e = np.where(masks[j], vals[j], e)
        eff.append(np.where(masks[i], vals[i], e))
    return eff


def _effective_scalar(recon, avail, y: int, x: int, offsets, mid: int):
    vals = []
    masks = []
    for dy, dx in offsets:
        ty, tx = y + dy, x + dx
        ok = avail.single(ty, tx)
        vals.append(int(recon[ty, tx]) if ok else 0)
        masks.append(ok)
    out = []
    for i, order in enumerate(_substitution_order(offsets)):
        if masks[i]:
            out.append(vals[i])
            continue
        for j in order:
            if masks[j]:
                out.append(vals[j])
                break
        else:
            out.append(mid)
    return out


# ---------------------------------------------------------------------------
# Sample-based angular prediction
# ---------------------------------------------------------------------------

def sap_tap_offsets(mode: int):
    """Tap offsets and interpolation weight for sample-based angular
    prediction: the angular projection of a pixel onto the immediately
    adjacent row (vertical family) or column (horizontal family)."""
    d = displacement(mode)
    di, f = d >> 5, d & 31
    if mode >= DIAGONAL:
        taps = ((-1, di),) if f == 0 else ((-1, di), (-1, di + 1))
    else:
        taps = ((di, -1),) if f == 0 else ((di, -1), (di + 1, -1))
    return taps, f


def predict_leaf_sap(samples, avail, y0: int, x0: int, size: int, mode: int,
                     bit_depth: int) -> np.ndarray:
    mid = 1 << (bit_depth - 1)
    taps, f = sap_tap_offsets(mode)
    eff = effective_tap_values(samples, avail, y0, x0, size, taps, mid)
    if f == 0:
        return eff[0]
    return ((32 - f) * eff[0] + f * eff[1] + 16) >> 5


def predict_leaf_sap_all_modes(samples, avail, y0: int, x0: int, size: int,
                               bit_depth: int) -> np.ndarray:
    """(35, N, N) predictions; planar and DC fall back to block prediction."""
    mid = 1 << (bit_depth - 1)
    refs = build_reference_array(samples, avail, y0, x0, size, mid)
    out = np.empty((NUM_MODES, size, size), dtype=np.int64)
    out[PLANAR] = predict_block_planar(refs)
    out[DC] = predict_block_dc(refs)
    for mode in range(2, NUM_MODES):
        out[mode] = predict_leaf_sap(samples, avail, y0, x0, size, mode,
                                     bit_depth)
    return out


def predict_pixel_sap(recon, avail, y: int, x: int, mode: int,
                      bit_depth: int) -> int:
    taps, f = sap_tap_offsets(mode)
    eff = _effective_scalar(recon, avail, y, x, taps, 1 << (bit_depth - 1))
    if f == 0:
        return eff[0]
    return ((32 - f) * eff[0] + f * eff[1] + 16) >> 5


# ---------------------------------------------------------------------------
# 3-tap pixel prediction
# ---------------------------------------------------------------------------

def predict_leaf_3tap(samples, avail, y0: int, x0: int, size: int, mode: int,
                      weights: WeightTable, neighbors: NeighborConfig,
                      bit_depth: int) -> np.ndarray:
    mid = 1 << (bit_depth - 1)
    offsets = neighbors.taps(mode)
    a, b, c = effective_tap_values(samples, avail, y0, x0, size, offsets, mid)
    r1, r2, r3 = weights.triple(mode, size_class(size))
    half = 1 << (weights.precision - 1)
    raw = (r1 * a + r2 * b + r3 * c + half) >> weights.precision
    return np.clip(raw, 0, (1 << bit_depth) - 1)


def predict_leaf_3tap_all_modes(samples, avail, y0: int, x0: int, size: int,
                                weights: WeightTable,
                                neighbors: NeighborConfig,
                                bit_depth: int) -> np.ndarray:
    """(35, N, N) predictions, batched per shared neighbor pattern."""
    mid = 1 << (bit_depth - 1)
    maxval = (1 << bit_depth) - 1
    half = 1 << (weights.precision - 1)
    cls = size_class(size)
    by_offsets: dict = {}
    for mode in range(NUM_MODES):
        by_offsets.setdefault(neighbors.taps(mode), []).append(mode)
    out = np.empty((NUM_MODES, size, size), dtype=np.int64)
    for offsets, group_modes in by_offsets.items():
        eff = effective_tap_values(samples, avail, y0, x0, size, offsets, mid)
        taps = np.stack([e.ravel() for e in eff])
        raw = (weights.matrix(group_modes, cls) @ taps + half) \
            >> weights.precision
        np.clip(raw, 0, maxval, out=raw)
        out[group_modes] = raw.reshape(len(group_modes), size, size)
    return out


def predict_pixel_3tap(recon, avail, y: int, x: int, mode: int,
                       weights: WeightTable, size_cls: int,
                       neighbors: NeighborConfig, bit_depth: int) -> int:
    a, b, c = _effective_scalar(recon, avail, y, x, neighbors.taps(mode),
                                1 << (bit_depth - 1))
    r1, r2, r3 = weights.triple(mode, size_cls)
    half = 1 << (weights.precision - 1)
    raw = (r1 * a + r2 * b + r3 * c + half) >> weights.precision
    return min(max(raw, 0), (1 << bit_depth) - 1)


# ---------------------------------------------------------------------------
# Residual DPCM for the horizontal/vertical block modes
# ---------------------------------------------------------------------------

def rdpcm_forward(residual: np.ndarray, mode: int) -> np.ndarray:
    """Difference block residuals along the prediction direction; the first
    row/column passes through.  Exactly inverted by prefix summation."""
    out = residual.copy()
    if mode == HORIZONTAL:
        out[:, 1:] -= residual[:, :-1]
    elif mode == VERTICAL:
        out[1:, :] -= residual[:-1, :]
    else:
        raise ValueError(f"mode {mode} has no differencing direction")
    return out


def rdpcm_inverse(diff: np.ndarray, mode: int) -> np.ndarray:
    if mode == HORIZONTAL:
        return np.cumsum(diff, axis=1, dtype=np.int64)
    if mode == VERTICAL:
        return np.cumsum(diff, axis=0, dtype=np.int64)
    raise ValueError(f"mode {mode} has no differencing direction")
