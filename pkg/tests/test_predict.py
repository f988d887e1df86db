import numpy as np
import pytest

from ilc.modes import (
    DEFAULT_NEIGHBORS,
    DEFAULT_WEIGHTS,
    HORIZONTAL,
    INVERSE_DISPLACEMENT,
    NUM_MODES,
    VERTICAL,
    displacement,
    scan_coordinates,
    size_class,
)
from ilc.predict import (
    ReferenceArray,
    build_reference_array,
    effective_tap_values,
    predict_block,
    predict_block_all_modes,
    predict_block_angular,
    predict_block_dc,
    predict_block_planar,
    predict_leaf_3tap,
    predict_leaf_3tap_all_modes,
    predict_leaf_sap,
    predict_leaf_sap_all_modes,
    predict_pixel_3tap,
    predict_pixel_sap,
    rdpcm_forward,
    rdpcm_inverse,
)


class GridAvail:
    """Availability stub driven by an explicit boolean grid; anything
    outside the grid is unavailable."""

    def __init__(self, grid):
        self.grid = np.asarray(grid, dtype=bool)

    def mask(self, ys, xs):
        ys, xs = np.asarray(ys), np.asarray(xs)
        h, w = self.grid.shape
        inside = (ys >= 0) & (ys < h) & (xs >= 0) & (xs < w)
        out = np.zeros(ys.shape, dtype=bool)
        out[inside] = self.grid[ys[inside], xs[inside]]
        return out

    def single(self, y, x):
        h, w = self.grid.shape
        return 0 <= y < h and 0 <= x < w and bool(self.grid[y, x])


def frame_avail(h, w):
    return GridAvail(np.ones((h, w), bool))


# ---------------------------------------------------------------------------
# Reference array construction
# ---------------------------------------------------------------------------

def test_reference_array_nothing_available_uses_mid():
    samples = np.arange(16, dtype=np.int64).reshape(4, 4)
    refs = build_reference_array(samples, frame_avail(4, 4), 0, 0, 4, 128)
    assert (refs.above == 128).all()
    assert (refs.left == 128).all()


def test_reference_array_interior_block_copies_neighbors():
    rng = np.random.default_rng(0)
    samples = rng.integers(0, 256, (8, 8)).astype(np.int64)
    refs = build_reference_array(samples, frame_avail(8, 8), 2, 2, 4, 128)
    # corner then the row above, extended right; the frame ends at x=7 so
    # the two overhanging entries repeat samples[1, 7]
    expected_above = [samples[1, 1]] + samples[1, 2:8].tolist() + \
        [samples[1, 7], samples[1, 7]]
    assert refs.above.tolist() == expected_above
    # column left of the block extended down, overhang repeats samples[7, 1]
    expected_left = samples[2:8, 1].tolist() + [samples[7, 1], samples[7, 1]]
    assert refs.left.tolist() == expected_left


def test_reference_array_missing_left_propagates_from_first_available():
    rng = np.random.default_rng(1)
    samples = rng.integers(0, 256, (8, 8)).astype(np.int64)
    refs = build_reference_array(samples, frame_avail(8, 8), 4, 0, 4, 128)
    # no left column and no corner: everything up to the first available
    # top sample borrows that sample
    first = samples[3, 0]
    assert (refs.left == first).all()
    assert refs.above[0] == first
    assert refs.above[1:5].tolist() == samples[3, 0:4].tolist()


def test_reference_array_gap_in_middle_repeats_predecessor():
    samples = np.arange(64, dtype=np.int64).reshape(8, 8)
    grid = np.ones((8, 8), bool)
    grid[1, 4:6] = False  # hole inside the above row
    refs = build_reference_array(samples, GridAvail(grid), 2, 2, 2, 128)
    # above covers samples[1, 1:6]; positions 4 and 5 fall in the hole
    assert refs.above.tolist() == [
        samples[1, 1], samples[1, 2], samples[1, 3],
        samples[1, 3], samples[1, 3],
    ]


# ---------------------------------------------------------------------------
# Independent scalar oracle for block angular projection
# ---------------------------------------------------------------------------

def _oracle_project(main_line, side_line, size, d, row, col):
    pos = (row + 1) * d
    delta = pos >> 5
    w = pos & 31

    def ref(i):
        if i >= 0:
            return int(main_line[min(i, 2 * size)])
        inv = -INVERSE_DISPLACEMENT[d]
        return int(side_line[(128 + (-i) * inv) >> 8])

    a = ref(1 + col + delta)
    b = ref(2 + col + delta)
    return ((32 - w) * a + w * b + 16) >> 5


def _oracle_angular(refs: ReferenceArray, mode: int) -> np.ndarray:
    size = refs.size
    d = displacement(mode)
    above_line = refs.above
    left_line = np.concatenate((refs.above[:1], refs.left))
    out = np.empty((size, size), dtype=np.int64)
    for y in range(size):
        for x in range(size):
            if mode >= 18:
                out[y, x] = _oracle_project(above_line, left_line, size,
                                            d, y, x)
            else:
                out[y, x] = _oracle_project(left_line, above_line, size,
                                            d, x, y)
    return out


@pytest.mark.parametrize("size", [4, 8])
def test_angular_matches_scalar_oracle_all_modes(size):
    rng = np.random.default_rng(123)
    refs = ReferenceArray(
        above=rng.integers(0, 256, 2 * size + 1).astype(np.int64),
        left=rng.integers(0, 256, 2 * size).astype(np.int64),
        size=size,
    )
    for mode in range(2, NUM_MODES):
        got = predict_block_angular(refs, mode)
        assert np.array_equal(got, _oracle_angular(refs, mode)), mode


def test_angular_mode_2_on_counting_refs():
    refs = ReferenceArray(
        above=np.arange(9, dtype=np.int64),
        left=np.arange(9, 17, dtype=np.int64),
        size=4,
    )
    assert np.array_equal(predict_block_angular(refs, 2),
                          _oracle_angular(refs, 2))


def test_vertical_copies_above_and_horizontal_copies_left():
    rng = np.random.default_rng(5)
    refs = ReferenceArray(
        above=rng.integers(0, 256, 9).astype(np.int64),
        left=rng.integers(0, 256, 8).astype(np.int64),
        size=4,
    )
    vert = predict_block_angular(refs, VERTICAL)
    assert np.array_equal(vert, np.tile(refs.above[1:5], (4, 1)))
    horiz = predict_block_angular(refs, HORIZONTAL)
    assert np.array_equal(horiz, np.tile(refs.left[:4, None], (1, 4)))


def test_constant_references_are_fixed_point_for_every_mode():
    refs = ReferenceArray(
        above=np.full(9, 77, np.int64), left=np.full(8, 77, np.int64), size=4
    )
    preds = predict_block_all_modes(refs)
    assert (preds == 77).all()


def test_block_all_modes_matches_single_mode_dispatch():
    rng = np.random.default_rng(17)
    refs = ReferenceArray(
        above=rng.integers(0, 256, 17).astype(np.int64),
        left=rng.integers(0, 256, 16).astype(np.int64),
        size=8,
    )
    stack = predict_block_all_modes(refs)
    for mode in range(NUM_MODES):
        assert np.array_equal(stack[mode], predict_block(refs, mode)), mode


# ---------------------------------------------------------------------------
# DC and planar closed-form oracles
# ---------------------------------------------------------------------------

def test_dc_examples():
    refs = ReferenceArray(
        above=np.array([0, 10, 10, 10, 10, 0, 0, 0, 0], np.int64),
        left=np.array([20, 20, 20, 20, 0, 0, 0, 0], np.int64),
        size=4,
    )
    assert (predict_block_dc(refs) == 15).all()

    refs = ReferenceArray(
        above=np.array([0, 1, 2, 3, 4, 0, 0, 0, 0], np.int64),
        left=np.array([5, 6, 7, 8, 0, 0, 0, 0], np.int64),
        size=4,
    )
    # (1+2+3+4+5+6+7+8 + 4) >> 3
    assert (predict_block_dc(refs) == 5).all()


def _oracle_planar(refs: ReferenceArray) -> np.ndarray:
    n = refs.size
    shift = {4: 3, 8: 4, 16: 5, 32: 6}[n]
    top = refs.above[1:n + 1]
    tr = int(refs.above[n + 1])
    left = refs.left[:n]
    bl = int(refs.left[n])
    out = np.empty((n, n), dtype=np.int64)
    for y in range(n):
        for x in range(n):
            out[y, x] = ((n - 1 - x) * int(left[y]) + (x + 1) * tr
                         + (n - 1 - y) * int(top[x]) + (y + 1) * bl + n) \
                >> shift
    return out


@pytest.mark.parametrize("size", [4, 8, 16, 32])
def test_planar_matches_scalar_oracle(size):
    rng = np.random.default_rng(size)
    refs = ReferenceArray(
        above=rng.integers(0, 256, 2 * size + 1).astype(np.int64),
        left=rng.integers(0, 256, 2 * size).astype(np.int64),
        size=size,
    )
    assert np.array_equal(predict_block_planar(refs), _oracle_planar(refs))


def test_planar_vertical_gradient_example():
    refs = ReferenceArray(
        above=np.array([10] * 5 + [10] * 4, np.int64),
        left=np.array([20] * 4 + [20] * 4, np.int64),
        size=4,
    )
    pred = predict_block_planar(refs)
    assert np.array_equal(pred, _oracle_planar(refs))
    # rows blend from the light top reference toward the dark bottom-left
    assert (np.diff(pred, axis=0) >= 0).all()
    assert pred[0].max() < pred[3].min() + 10


# ---------------------------------------------------------------------------
# Sample-based angular prediction
# ---------------------------------------------------------------------------

def test_sap_vertical_and_horizontal_copies():
    rng = np.random.default_rng(2)
    recon = rng.integers(0, 256, (8, 8)).astype(np.int64)
    avail = frame_avail(8, 8)
    assert predict_pixel_sap(recon, avail, 3, 4, VERTICAL, 8) == recon[2, 4]
    assert predict_pixel_sap(recon, avail, 3, 4, HORIZONTAL, 8) == recon[3, 3]


def test_sap_mode_30_interior_pixel_oracle():
    rng = np.random.default_rng(3)
    recon = rng.integers(0, 256, (8, 8)).astype(np.int64)
    avail = frame_avail(8, 8)
    # displacement 13: taps above and above-right, weights (19, 13)
    assert displacement(30) == 13
    expected = (19 * recon[2, 4] + 13 * recon[2, 5] + 16) >> 5
    assert predict_pixel_sap(recon, avail, 3, 4, 30, 8) == expected


def test_sap_mode_19_negative_displacement_oracle():
    rng = np.random.default_rng(4)
    recon = rng.integers(0, 256, (8, 8)).astype(np.int64)
    avail = frame_avail(8, 8)
    # displacement -26 = -1*32 + 6: taps above-left and above, weights (26, 6)
    assert displacement(19) == -26
    expected = (26 * recon[2, 3] + 6 * recon[2, 4] + 16) >> 5
    assert predict_pixel_sap(recon, avail, 3, 4, 19, 8) == expected


def test_sap_mode_2_copies_below_left():
    rng = np.random.default_rng(6)
    recon = rng.integers(0, 256, (8, 8)).astype(np.int64)
    avail = frame_avail(8, 8)
    assert predict_pixel_sap(recon, avail, 3, 4, 2, 8) == recon[4, 3]


def test_sap_leaf_matches_pixel_loop():
    rng = np.random.default_rng(7)
    recon = rng.integers(0, 256, (12, 12)).astype(np.int64)
    avail = frame_avail(12, 12)
    for mode in range(2, NUM_MODES):
        leaf = predict_leaf_sap(recon, avail, 4, 4, 4, mode, 8)
        for y in range(4):
            for x in range(4):
                assert leaf[y, x] == predict_pixel_sap(
                    recon, avail, 4 + y, 4 + x, mode, 8
                ), (mode, y, x)


def test_sap_all_modes_stack_consistent():
    rng = np.random.default_rng(8)
    recon = rng.integers(0, 256, (12, 12)).astype(np.int64)
    avail = frame_avail(12, 12)
    stack = predict_leaf_sap_all_modes(recon, avail, 4, 4, 4, 8)
    assert stack.shape == (NUM_MODES, 4, 4)
    for mode in range(2, NUM_MODES):
        assert np.array_equal(
            stack[mode], predict_leaf_sap(recon, avail, 4, 4, 4, mode, 8)
        )
    refs = build_reference_array(recon, avail, 4, 4, 4, 128)
    assert np.array_equal(stack[0], predict_block_planar(refs))
    assert np.array_equal(stack[1], predict_block_dc(refs))


# ---------------------------------------------------------------------------
# 3-tap prediction
# ---------------------------------------------------------------------------

def test_3tap_constant_neighborhood_is_identity():
    recon = np.full((8, 8), 100, np.int64)
    avail = frame_avail(8, 8)
    for mode in range(NUM_MODES):
        assert predict_pixel_3tap(
            recon, avail, 3, 4, mode, DEFAULT_WEIGHTS, 0, DEFAULT_NEIGHBORS, 8
        ) == 100, mode


def test_3tap_mode_10_worked_example():
    # left 50, upper-left 40, above 60 with weights (30, -25, 27):
    # (1500 - 1000 + 1620 + 16) >> 5 = 66
    recon = np.zeros((4, 4), np.int64)
    recon[1, 0] = 50
    recon[0, 0] = 40
    recon[0, 1] = 60
    avail = frame_avail(4, 4)
    assert DEFAULT_WEIGHTS.triple(10) == (30, -25, 27)
    assert predict_pixel_3tap(
        recon, avail, 1, 1, 10, DEFAULT_WEIGHTS, 0, DEFAULT_NEIGHBORS, 8
    ) == 66


def test_3tap_clips_to_sample_range():
    avail = frame_avail(4, 4)
    high = np.zeros((4, 4), np.int64)
    high[1, 0] = 255  # a
    high[0, 1] = 255  # c
    assert predict_pixel_3tap(
        high, avail, 1, 1, 10, DEFAULT_WEIGHTS, 0, DEFAULT_NEIGHBORS, 8
    ) == 255
    low = np.zeros((4, 4), np.int64)
    low[0, 0] = 255  # b has weight -25
    assert predict_pixel_3tap(
        low, avail, 1, 1, 10, DEFAULT_WEIGHTS, 0, DEFAULT_NEIGHBORS, 8
    ) == 0
    ten_bit = np.full((4, 4), 1023, np.int64)
    assert predict_pixel_3tap(
        ten_bit, avail, 1, 1, 10, DEFAULT_WEIGHTS, 0, DEFAULT_NEIGHBORS, 10
    ) == 1023


def test_3tap_leaf_matches_pixel_loop_and_stack():
    rng = np.random.default_rng(9)
    recon = rng.integers(0, 256, (12, 12)).astype(np.int64)
    avail = frame_avail(12, 12)
    stack = predict_leaf_3tap_all_modes(
        recon, avail, 4, 4, 8, DEFAULT_WEIGHTS, DEFAULT_NEIGHBORS, 8
    )
    assert stack.shape == (NUM_MODES, 8, 8)
    cls = size_class(8)
    for mode in range(NUM_MODES):
        leaf = predict_leaf_3tap(recon, avail, 4, 4, 8, mode,
                                 DEFAULT_WEIGHTS, DEFAULT_NEIGHBORS, 8)
        assert np.array_equal(stack[mode], leaf), mode
        for y, x in [(0, 0), (3, 5), (7, 7)]:
            assert leaf[y, x] == predict_pixel_3tap(
                recon, avail, 4 + y, 4 + x, mode, DEFAULT_WEIGHTS, cls,
                DEFAULT_NEIGHBORS, 8
            ), (mode, y, x)


def test_3tap_substitution_nothing_available_gives_mid():
    recon = np.zeros((4, 4), np.int64)
    avail = GridAvail(np.zeros((4, 4), bool))
    for mode in range(NUM_MODES):
        assert predict_pixel_3tap(
            recon, avail, 0, 0, mode, DEFAULT_WEIGHTS, 0, DEFAULT_NEIGHBORS, 8
        ) == 128, mode


def test_3tap_substitution_borrows_nearest_available_tap():
    # top row, mode 10: only the left tap exists; both others borrow it
    rng = np.random.default_rng(10)
    recon = rng.integers(0, 256, (4, 8)).astype(np.int64)
    grid = np.zeros((4, 8), bool)
    grid[0, :5] = True  # already-coded prefix of the top row
    avail = GridAvail(grid)
    assert predict_pixel_3tap(
        recon, avail, 0, 5, 10, DEFAULT_WEIGHTS, 0, DEFAULT_NEIGHBORS, 8
    ) == recon[0, 4]


def test_effective_tap_values_respects_masks():
    samples = np.arange(16, dtype=np.int64).reshape(4, 4)
    grid = np.ones((4, 4), bool)
    grid[0, :] = False
    avail = GridAvail(grid)
    offsets = DEFAULT_NEIGHBORS.taps(10)  # left, upper-left, above
    a, b, c = effective_tap_values(samples, avail, 1, 1, 2, offsets, 128)
    assert a[0, 0] == samples[1, 0]
    # row 0 is unavailable, so the diagonal and above taps fall back to left
    assert b[0, 0] == samples[1, 0]
    assert c[0, 0] == samples[1, 0]
    assert b[1, 1] == samples[1, 1] and c[1, 1] == samples[1, 2]


# ---------------------------------------------------------------------------
# Residual DPCM
# ---------------------------------------------------------------------------

def test_rdpcm_horizontal_row_example():
    res = np.array([[5, 5, 5, 5]], np.int64)
    assert rdpcm_forward(res, HORIZONTAL).tolist() == [[5, 0, 0, 0]]


def test_rdpcm_vertical_column_example():
    res = np.array([[1], [3], [6], [10]], np.int64)
    assert rdpcm_forward(res, VERTICAL).ravel().tolist() == [1, 2, 3, 4]


def test_rdpcm_inverse_identity_random():
    rng = np.random.default_rng(11)
    for mode in (HORIZONTAL, VERTICAL):
        res = rng.integers(-255, 256, (8, 8))
        assert np.array_equal(rdpcm_inverse(rdpcm_forward(res, mode), mode),
                              res)


def test_rdpcm_rejects_other_modes():
    with pytest.raises(ValueError):
        rdpcm_forward(np.zeros((4, 4), np.int64), 18)


# ---------------------------------------------------------------------------
# Output range for every family
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("bit_depth", [8, 10])
def test_leaf_predictions_stay_in_range(bit_depth):
    rng = np.random.default_rng(12)
    maxval = (1 << bit_depth) - 1
    recon = rng.integers(0, maxval + 1, (16, 16)).astype(np.int64)
    avail = frame_avail(16, 16)
    refs = build_reference_array(recon, avail, 8, 8, 4,
                                 1 << (bit_depth - 1))
    block = predict_block_all_modes(refs)
    sap = predict_leaf_sap_all_modes(recon, avail, 8, 8, 4, bit_depth)
    tap = predict_leaf_3tap_all_modes(recon, avail, 8, 8, 4, DEFAULT_WEIGHTS,
                                      DEFAULT_NEIGHBORS, bit_depth)
    for stack in (block, sap, tap):
        assert stack.min() >= 0 and stack.max() <= maxval


def test_scan_coordinates_cover_leaf():
    for mode in (2, 26):
        ys, xs = scan_coordinates(mode, 4, 4)
        assert sorted(zip(ys.tolist(), xs.tolist())) == \
            [(y, x) for y in range(4) for x in range(4)]
