"""Intra mode geometry, neighbor configurations, and 3-tap weight tables.

Modes follow the 35-mode intra layout: 0 planar, 1 DC, 2..34 angular with
displacements in 1/32-pixel units.  Mode 10 is pure horizontal, 26 pure
vertical, 18 the diagonal between them.  Symmetric mode pairs (k, 36 - k)
mirror across that diagonal, which lets pixel-predictor weights be shared
between partners through transposed neighbor patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PLANAR = 0
DC = 1
HORIZONTAL = 10
DIAGONAL = 18
VERTICAL = 26
NUM_MODES = 35
NUM_CANONICAL_SLOTS = 19
NUM_SIZE_CLASSES = 4
WEIGHT_PRECISION = 5
MAX_WEIGHT_MAGNITUDE = 63

# Displacement per angular mode (index = mode - 2), 1/32-pixel units.
DISPLACEMENT = (
    32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26,
    -32, -26, -21, -17, -13, -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32,
)

# round(8192 / d) for the negative displacements; used to project side
# reference samples onto the extended main reference.
INVERSE_DISPLACEMENT = {
    -2: -4096, -5: -1638, -9: -910, -13: -630,
    -17: -482, -21: -390, -26: -315, -32: -256,
}


def displacement(mode: int) -> int:
    if not 2 <= mode <= 34:
        raise ValueError(f"mode {mode} is not angular")
    return DISPLACEMENT[mode - 2]


def is_angular(mode: int) -> bool:
    return 2 <= mode <= 34


def symmetric_partner(mode: int) -> int | None:
    """The mode mirrored across the main diagonal, if any."""
    if is_angular(mode) and mode != DIAGONAL:
        return 36 - mode
    return None


def canonical_slot(mode: int) -> int:
    """Weight-table slot: symmetric partners share min(mode, 36 - mode)."""
    if not 0 <= mode < NUM_MODES:
        raise ValueError(f"mode {mode} out of range")
    return mode if mode <= DIAGONAL else 36 - mode


def mode_group(mode: int) -> int:
    """Directional group: 0 for modes 2-9, 1 for 0/1/10-18, 2 for 19-26,
    3 for 27-34.  Groups 0 and 3 are transposes of each other, as are the
    angular parts of groups 1 and 2."""
    if 2 <= mode <= 9:
        return 0
    if 19 <= mode <= 26:
        return 2
    if 27 <= mode <= 34:
        return 3
    return 1


def size_class(size: int) -> int:
    """Block-size bucket: 4 -> 0, 8 -> 1, 16 -> 2, 32 -> 3."""
    if size not in (4, 8, 16, 32):
        raise ValueError(f"unsupported block size {size}")
    return size.bit_length() - 3


def scan_is_column_major(mode: int) -> bool:
    """Modes 2-9 predict from below-left, so pixels are visited column by
    column (top to bottom within each column); every other mode scans in
    raster order."""
    return mode_group(mode) == 0


def scan_coordinates(mode: int, height: int, width: int):
    """(y, x) index arrays enumerating a block in the mode's scan order."""
    ys, xs = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    if scan_is_column_major(mode):
        return ys.T.ravel(), xs.T.ravel()
    return ys.ravel(), xs.ravel()


# ---------------------------------------------------------------------------
# Neighbor configurations for the 3-tap pixel predictor
# ---------------------------------------------------------------------------

# (dy, dx) offsets of taps a, b, c per directional group.  Partner groups use
# transposed offsets so one canonical weight triple serves both modes of a
# symmetric pair.
_GROUP_OFFSETS = {
    0: ((0, -1), (1, -1), (-1, -1)),   # left, below-left, upper-left
    1: ((0, -1), (-1, -1), (-1, 0)),   # left, upper-left, above
    2: ((-1, 0), (-1, -1), (0, -1)),   # above, upper-left, left
    3: ((-1, 0), (-1, 1), (-1, -1)),   # above, upper-right, upper-left
}

Offsets = tuple[tuple[int, int], tuple[int, int], tuple[int, int]]


def _offsets_causal(offsets: Offsets, column_major: bool) -> bool:
    """All taps must precede (0, 0) in the scan order."""
    for dy, dx in offsets:
        if column_major:
            earlier = dx < 0 or (dx == 0 and dy < 0)
        else:
            earlier = dy < 0 or (dy == 0 and dx < 0)
        if not earlier:
            return False
    return True


@dataclass(frozen=True)
class NeighborConfig:
    """Per-mode (dy, dx) offsets of the three prediction taps.

    Offsets are relative to the pixel being predicted, y down and x right.
    Every tap must be causal under the mode's scan order so the decoder
    always has the referenced samples.
    """

    offsets: tuple[Offsets, ...]

    def __post_init__(self):
        if len(self.offsets) != NUM_MODES:
            raise ValueError(f"need {NUM_MODES} offset triples")
        for mode, triple in enumerate(self.offsets):
            if len(triple) != 3:
                raise ValueError(f"mode {mode}: need 3 taps")
            if not _offsets_causal(triple, scan_is_column_major(mode)):
                raise ValueError(f"mode {mode}: non-causal tap offsets")

    def taps(self, mode: int) -> Offsets:
        return self.offsets[mode]

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("# mode  a_dy a_dx  b_dy b_dx  c_dy c_dx\n")
            for mode, triple in enumerate(self.offsets):
                flat = "  ".join(f"{dy:2d} {dx:2d}" for dy, dx in triple)
                fh.write(f"{mode:2d}   {flat}\n")

    @classmethod
    def load(cls, path: str) -> "NeighborConfig":
        rows: dict[int, Offsets] = {}
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                fields = [int(tok) for tok in line.split()]
                if len(fields) != 7:
                    raise ValueError(f"bad neighbor line: {raw!r}")
                rows[fields[0]] = (
                    (fields[1], fields[2]),
                    (fields[3], fields[4]),
                    (fields[5], fields[6]),
                )
        if sorted(rows) != list(range(NUM_MODES)):
            raise ValueError("neighbor file must cover modes 0..34 exactly")
        return cls(tuple(rows[m] for m in range(NUM_MODES)))


def default_neighbor_config() -> NeighborConfig:
    return NeighborConfig(
        tuple(_GROUP_OFFSETS[mode_group(m)] for m in range(NUM_MODES))
    )


DEFAULT_NEIGHBORS = default_neighbor_config()


# ---------------------------------------------------------------------------
# Weight tables
# ---------------------------------------------------------------------------

# Trained integer triples (rho1, rho2, rho3), each summing to 32, one per
# canonical slot.  Slot s serves mode s and, for s in 2..17, mode 36 - s via
# the transposed neighbor pattern.
_DEFAULT_TRIPLES = (
    (22, -11, 21),   # slot 0 (planar)
    (19, -1, 14),    # slot 1 (DC)
    (-11, 29, 14),   # slot 2 (modes 2, 34)
    (0, 22, 10),     # slot 3 (modes 3, 33)
    (10, 22, 0),     # slot 4 (modes 4, 32)
    (10, 14, 8),     # slot 5 (modes 5, 31)
    (25, 12, -5),    # slot 6 (modes 6, 30)
    (19, 4, 9),      # slot 7 (modes 7, 29)
    (29, 5, -2),     # slot 8 (modes 8, 28)
    (31, -2, 3),     # slot 9 (modes 9, 27)
    (30, -25, 27),   # slot 10 (modes 10, 26)
    (32, -11, 11),   # slot 11 (modes 11, 25)
    (27, -16, 21),   # slot 12 (modes 12, 24)
    (23, 0, 9),      # slot 13 (modes 13, 23)
    (15, 6, 11),     # slot 14 (modes 14, 22)
    (22, 14, -4),    # slot 15 (modes 15, 21)
    (14, 22, -4),    # slot 16 (modes 16, 20)
    (5, 29, -2),     # slot 17 (modes 17, 19)
    (7, 14, 11),     # slot 18 (diagonal)
)


class WeightTable:
    """Integer 3-tap weight triples, one per slot and block-size class.

    The default pooling shares one triple between symmetric partner modes
    (19 canonical slots) and across block sizes.  `per_mode` widens to 35
    independent slots; `per_size` widens to 4 size classes.  Every triple
    must sum to 2**precision so flat areas predict exactly.
    """

    __slots__ = ("array", "precision", "per_mode", "per_size")

    def __init__(self, triples, precision: int = WEIGHT_PRECISION,
                 per_mode: bool = False, per_size: bool = False):
        slots = NUM_MODES if per_mode else NUM_CANONICAL_SLOTS
        classes = NUM_SIZE_CLASSES if per_size else 1
        arr = np.asarray(triples, dtype=np.int64)
        if arr.shape == (slots, 3):
            arr = np.repeat(arr[:, None, :], classes, axis=1)
        if arr.shape != (slots, classes, 3):
            raise ValueError(
                f"weight table shape {arr.shape}, expected {(slots, classes, 3)}"
            )
        total = 1 << precision
        sums = arr.sum(axis=2)
        if not (sums == total).all():
            bad = int(np.argwhere(sums != total)[0][0])
            raise ValueError(f"slot {bad}: weights must sum to {total}")
        bound = MAX_WEIGHT_MAGNITUDE << max(0, precision - WEIGHT_PRECISION)
        if (np.abs(arr) > bound).any():
            raise ValueError(f"weight magnitude exceeds {bound}")
        arr.setflags(write=False)
        self.array = arr
        self.precision = precision
        self.per_mode = per_mode
        self.per_size = per_size

    def slot(self, mode: int) -> int:
        return mode if self.per_mode else canonical_slot(mode)

    @property
    def num_slots(self) -> int:
        return self.array.shape[0]

    @property
    def num_classes(self) -> int:
        return self.array.shape[1]

    def triple(self, mode: int, size_cls: int = 0) -> tuple[int, int, int]:
        cls_idx = size_cls if self.per_size else 0
        r1, r2, r3 = self.array[self.slot(mode), cls_idx]
        return int(r1), int(r2), int(r3)

    def matrix(self, modes, size_cls: int = 0) -> np.ndarray:
        """(len(modes), 3) weight matrix for batched prediction."""
        cls_idx = size_cls if self.per_size else 0
        rows = [self.slot(m) for m in modes]
        return self.array[rows, cls_idx]

    def replace(self, slot: int, size_cls: int, triple) -> "WeightTable":
        arr = self.array.copy()
        arr[slot, size_cls if self.per_size else 0] = triple
        return WeightTable(arr, self.precision, self.per_mode, self.per_size)

    def __eq__(self, other):
        return (
            isinstance(other, WeightTable)
            and self.precision == other.precision
            and self.per_mode == other.per_mode
            and self.per_size == other.per_size
            and np.array_equal(self.array, other.array)
        )

    def __repr__(self):
        return (
            f"WeightTable(slots={self.num_slots}, classes={self.num_classes}, "
            f"precision={self.precision})"
        )

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(f"# precision {self.precision}\n")
            fh.write(f"# pooling {'per-mode' if self.per_mode else 'canonical'}\n")
            fh.write(f"# sizes {'per-size' if self.per_size else 'shared'}\n")
            fh.write("# slot class  rho1 rho2 rho3\n")
            for slot in range(self.num_slots):
                for cls_idx in range(self.num_classes):
                    r1, r2, r3 = self.array[slot, cls_idx]
                    fh.write(
                        f"{slot:3d} {cls_idx:2d}  {r1:5d} {r2:5d} {r3:5d}\n"
                    )

    @classmethod
    def load(cls, path: str) -> "WeightTable":
        precision = WEIGHT_PRECISION
        per_mode = False
        per_size = False
        rows: dict[tuple[int, int], tuple[int, int, int]] = {}
        with open(path) as fh:
            for raw in fh:
                stripped = raw.strip()
                if stripped.startswith("#"):
                    fields = stripped[1:].split()
                    if len(fields) == 2:
                        key, value = fields
                        if key == "precision":
                            precision = int(value)
                        elif key == "pooling":
                            per_mode = value == "per-mode"
                        elif key == "sizes":
                            per_size = value == "per-size"
                    continue
                if not stripped:
                    continue
                fields = [int(tok) for tok in stripped.split()]
                if len(fields) != 5:
                    raise ValueError(f"bad weight line: {raw!r}")
                rows[(fields[0], fields[1])] = (fields[2], fields[3], fields[4])
        slots = NUM_MODES if per_mode else NUM_CANONICAL_SLOTS
        classes = NUM_SIZE_CLASSES if per_size else 1
        expected = {(s, c) for s in range(slots) for c in range(classes)}
        if set(rows) != expected:
            raise ValueError(
                f"weight file must cover slots 0..{slots - 1} x "
                f"classes 0..{classes - 1}"
            )
        arr = np.array(
            [[rows[(s, c)] for c in range(classes)] for s in range(slots)],
            dtype=np.int64,
        )
        return cls(arr, precision=precision, per_mode=per_mode, per_size=per_size)


DEFAULT_WEIGHTS = WeightTable(_DEFAULT_TRIPLES)
