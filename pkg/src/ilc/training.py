"""Offline weight training for the 3-tap predictor.

Stage 1 alternates encoding the corpus (for mode assignment) with per-slot
least-squares solves of the 3x3 normal equations built from (original,
tap a, tap b, tap c) moments.  The first pass assigns modes with the
sample-based angular predictor; later passes re-encode with the quantized
weights of the previous iteration.  Stage 2 polishes the quantized table by
coordinate descent over six sum-preserving +-1 weight transfers per slot,
scored by actual coded corpus size and adopted only on strict improvement.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .codec import Availability, CodecConfig, encode_plane, _pad_samples
from .modes import (
    DEFAULT_WEIGHTS,
    MAX_WEIGHT_MAGNITUDE,
    NUM_CANONICAL_SLOTS,
    NUM_MODES,
    NUM_SIZE_CLASSES,
    WEIGHT_PRECISION,
    WeightTable,
    canonical_slot,
    size_class,
)
from .plane import Corpus
from .predict import effective_tap_values

# The six sum-preserving refinement moves: each shifts one unit between two
# of the three weights.
CANDIDATE_MOVES = (
    (1, -1, 0), (-1, 1, 0), (1, 0, -1), (-1, 0, 1), (0, 1, -1), (0, -1, 1),
)

MIN_SLOT_SAMPLES = 1000
CONDITION_LIMIT = 1e8
MAX_ITERATIONS = 15
CONVERGENCE_TOL = 1.0 / 64.0


class InsufficientDataError(Exception):
    """Too few samples or an ill-conditioned system for a weight slot."""


@dataclass
class MomentAccumulator:
    """Per-slot second-order moments of (o, a, b, c).

    matrix is the 3x3 Gram matrix of the taps, rhs the tap/original
    cross-moments; together they define the least-squares normal equations.
    """

    matrix: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    rhs: np.ndarray = field(default_factory=lambda: np.zeros(3))
    original_sq: float = 0.0
    count: int = 0

    def add(self, originals, a, b, c) -> None:
        taps = np.stack([
            np.asarray(a, dtype=np.float64).ravel(),
            np.asarray(b, dtype=np.float64).ravel(),
            np.asarray(c, dtype=np.float64).ravel(),
        ])
        o = np.asarray(originals, dtype=np.float64).ravel()
        self.matrix += taps @ taps.T
        self.rhs += taps @ o
        self.original_sq += float(o @ o)
        self.count += o.size

    def merge(self, other: "MomentAccumulator") -> None:
        self.matrix += other.matrix
        self.rhs += other.rhs
        self.original_sq += other.original_sq
        self.count += other.count

    def sse(self, triple) -> float:
        """Sum of squared prediction errors at real-valued weights."""
        w = np.asarray(triple, dtype=np.float64)
        return float(self.original_sq - 2.0 * w @ self.rhs
                     + w @ self.matrix @ w)


def solve_normal_equations(acc: MomentAccumulator,
                           min_samples: int = MIN_SLOT_SAMPLES) -> np.ndarray:
    """Least-squares weight triple for one slot's accumulated moments."""
    if acc.count < min_samples:
        raise InsufficientDataError(
            f"{acc.count} samples, need {min_samples}"
        )
    if np.linalg.cond(acc.matrix) > CONDITION_LIMIT:
        raise InsufficientDataError("ill-conditioned normal equations")
    return np.linalg.solve(acc.matrix, acc.rhs)


def accumulate_moments(corpus: Corpus, config: CodecConfig,
                       per_mode: bool = False, per_size: bool = False):
    """Encode the corpus under `config` and pool (o, a, b, c) moments of the
    3-tap taps for every coded pixel, keyed by (weight slot, size class).

    config.family picks the predictor used for mode assignment; the taps
    are always gathered with config.neighbors, so a sample-based assignment
    pass can bootstrap 3-tap training.
    """
    slots = NUM_MODES if per_mode else NUM_CANONICAL_SLOTS
    classes = NUM_SIZE_CLASSES if per_size else 1
    accs = {(s, c): MomentAccumulator()
            for s in range(slots) for c in range(classes)}
    for plane in corpus.planes:
        src, ph, pw = _pad_samples(plane)
        _, stats = encode_plane(plane, config)
        mid = 1 << (plane.bit_depth - 1)
        avail = Availability(ph, pw, config.ctu_log2)
        for y0, x0, size, mode in stats.leaves:
            avail.set_leaf(y0, x0, size)
            a, b, c = effective_tap_values(
                src, avail, y0, x0, size, config.neighbors.taps(mode), mid
            )
            slot = mode if per_mode else canonical_slot(mode)
            cls = size_class(size) if per_size else 0
            accs[(slot, cls)].add(src[y0:y0 + size, x0:x0 + size], a, b, c)
    return accs


# ---------------------------------------------------------------------------
# Quantization
# ---------------------------------------------------------------------------

def _quantize_triple(triple, precision: int):
    """Round a real triple to integers summing exactly to 2**precision.

    Rounds half toward +inf, then transfers units from/to the component
    with the largest rounding error (ties resolved toward the last
    component) until the sum constraint holds.
    """
    scale = 1 << precision
    bound = MAX_WEIGHT_MAGNITUDE << max(0, precision - WEIGHT_PRECISION)
    scaled = np.clip(np.asarray(triple, dtype=np.float64) * scale,
                     -bound, bound)
    q = np.floor(scaled + 0.5).astype(np.int64)
    err = q - scaled
    while q.sum() != scale:
        if q.sum() > scale:
            eligible = q > -bound
            masked = np.where(eligible, err, -np.inf)
            idx = len(q) - 1 - int(np.argmax(masked[::-1]))
            q[idx] -= 1
            err[idx] -= 1
        else:
            eligible = q < bound
            masked = np.where(eligible, err, np.inf)
            idx = len(q) - 1 - int(np.argmin(masked[::-1]))
            q[idx] += 1
            err[idx] += 1
    return int(q[0]), int(q[1]), int(q[2])


def quantize_weights(real_table: np.ndarray, precision: int = WEIGHT_PRECISION,
                     per_mode: bool = False,
                     per_size: bool = False) -> WeightTable:
    """Quantize a (slots, classes, 3) real weight array to a WeightTable."""
    real = np.asarray(real_table, dtype=np.float64)
    if real.ndim == 2:
        real = real[:, None, :]
    arr = np.empty(real.shape, dtype=np.int64)
    for slot in range(real.shape[0]):
        for cls in range(real.shape[1]):
            arr[slot, cls] = _quantize_triple(real[slot, cls], precision)
    return WeightTable(arr, precision=precision, per_mode=per_mode,
                       per_size=per_size)


# ---------------------------------------------------------------------------
# Training runs
# ---------------------------------------------------------------------------

@dataclass
class TrainingRun:
    """Log of one training invocation, for CSV export and verification."""

    stage1: list = field(default_factory=list)     # per-iteration dicts
    adoptions: list = field(default_factory=list)  # stage-2 adopted moves
    bitrate_sequence: list = field(default_factory=list)
    converged: bool = False

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["stage", "iteration", "slot", "class",
                          "rho1", "rho2", "rho3", "metric"])
            for entry in self.stage1:
                table = entry["table"]
                for slot in range(table.shape[0]):
                    for cls in range(table.shape[1]):
                        r1, r2, r3 = table[slot, cls]
                        out.writerow([
                            "mse", entry["iteration"], slot, cls,
                            f"{r1:.6f}", f"{r2:.6f}", f"{r3:.6f}",
                            f"{entry['mse']:.6f}",
                        ])
            for sweep, slot, cls, move, bits in self.adoptions:
                out.writerow(["bitrate", sweep, slot, cls,
                              move[0], move[1], move[2], bits])


def _initial_real_table(initial: WeightTable, slots: int, classes: int):
    """Expand a starting table to (slots, classes, 3) real weights.

    Mode index `slot` lands in canonical slot `slot` for slot <= 18, so the
    same lookup covers both poolings.
    """
    scale = float(1 << initial.precision)
    real = np.empty((slots, classes, 3), dtype=np.float64)
    for slot in range(slots):
        for cls in range(classes):
            real[slot, cls] = np.asarray(
                initial.triple(slot, cls), dtype=np.float64
            ) / scale
    return real


def iterate_mse_training(corpus: Corpus, config: CodecConfig | None = None,
                         initial: WeightTable | None = None,
                         min_samples: int = MIN_SLOT_SAMPLES,
                         max_iterations: int = MAX_ITERATIONS,
                         tolerance: float = CONVERGENCE_TOL,
                         precision: int = WEIGHT_PRECISION,
                         per_mode: bool = False, per_size: bool = False):
    """Stage 1: iterative least-squares weight estimation.

    Returns (real-valued table, TrainingRun).  Slots that never gather
    enough samples keep their starting weights.
    """
    if len(corpus) == 0:
        raise ValueError("empty training corpus")
    base = config or CodecConfig(family="three_tap")
    initial = initial or DEFAULT_WEIGHTS
    slots = NUM_MODES if per_mode else NUM_CANONICAL_SLOTS
    classes = NUM_SIZE_CLASSES if per_size else 1
    real = _initial_real_table(initial, slots, classes)
    run = TrainingRun()

    for iteration in range(max_iterations):
        if iteration == 0:
            assign_cfg = CodecConfig(
                family="sap", ctu_size=base.ctu_size,
                neighbors=base.neighbors,
            )
        else:
            quantized = quantize_weights(real, precision, per_mode, per_size)
            assign_cfg = CodecConfig(
                family="three_tap", ctu_size=base.ctu_size,
                weights=quantized, neighbors=base.neighbors,
            )
        accs = accumulate_moments(corpus, assign_cfg, per_mode, per_size)
        new_real = real.copy()
        for (slot, cls), acc in accs.items():
            try:
                new_real[slot, cls] = solve_normal_equations(acc, min_samples)
            except InsufficientDataError:
                pass
        max_delta = float(np.abs(new_real - real).max())
        total_sse = sum(
            acc.sse(new_real[key]) for key, acc in accs.items() if acc.count
        )
        total_count = sum(acc.count for acc in accs.values())
        run.stage1.append({
            "iteration": iteration,
            "max_delta": max_delta,
            "mse": total_sse / max(total_count, 1),
            "table": new_real.copy(),
        })
        real = new_real
        if max_delta < tolerance:
            run.converged = True
            break
    return real, run


def corpus_bits(corpus: Corpus, config: CodecConfig) -> int:
    return sum(encode_plane(p, config)[1].total_bits for p in corpus.planes)


def refine_for_bitrate(weights: WeightTable, corpus: Corpus,
                       config: CodecConfig | None = None,
                       run: TrainingRun | None = None):
    """Stage 2: six-candidate coordinate descent on coded corpus size.

    Sweeps slots in index order; per slot, each candidate re-encodes the
    whole corpus and the best is adopted only if strictly cheaper.  Sweeps
    repeat until one passes without any adoption.
    """
    base = config or CodecConfig(family="three_tap")
    run = run if run is not None else TrainingRun()

    def encode_cost(table: WeightTable) -> int:
        cfg = CodecConfig(family="three_tap", ctu_size=base.ctu_size,
                          weights=table, neighbors=base.neighbors)
        return corpus_bits(corpus, cfg)

    bound = MAX_WEIGHT_MAGNITUDE << max(0, weights.precision
                                        - WEIGHT_PRECISION)
    best_bits = encode_cost(weights)
    run.bitrate_sequence.append(best_bits)
    sweep = 0
    improved = True
    while improved:
        improved = False
        for slot in range(weights.num_slots):
            for cls in range(weights.num_classes):
                current = tuple(int(v) for v in weights.array[slot, cls])
                best_candidate = None
                for move in CANDIDATE_MOVES:
                    triple = tuple(c + d for c, d in zip(current, move))
                    if any(abs(t) > bound for t in triple):
                        continue
                    candidate = weights.replace(slot, cls, triple)
                    bits = encode_cost(candidate)
                    if best_candidate is None or bits < best_candidate[0]:
                        best_candidate = (bits, move, candidate)
                if best_candidate is not None and best_candidate[0] < best_bits:
                    best_bits, move, weights = best_candidate
                    run.adoptions.append((sweep, slot, cls, move, best_bits))
                    run.bitrate_sequence.append(best_bits)
                    improved = True
        sweep += 1
    return weights, run


def train_weights(corpus: Corpus, stage: str = "mse",
                  config: CodecConfig | None = None,
                  precision: int = WEIGHT_PRECISION,
                  per_mode: bool = False, per_size: bool = False,
                  min_samples: int = MIN_SLOT_SAMPLES):
    """Full pipeline: MSE iterations, then optional bitrate refinement."""
    if stage not in ("mse", "mse+bitrate"):
        raise ValueError(f"unknown training stage {stage!r}")
    real, run = iterate_mse_training(
        corpus, config, precision=precision, per_mode=per_mode,
        per_size=per_size, min_samples=min_samples,
    )
    table = quantize_weights(real, precision, per_mode, per_size)
    if stage == "mse+bitrate":
        table, run = refine_for_bitrate(table, corpus, config, run)
    return table, run


def ablation_run(train_corpus: Corpus, eval_corpus: Corpus | None = None,
                 per_mode: bool = False, per_size: bool = False,
                 precision: int = WEIGHT_PRECISION, stage: str = "mse",
                 config: CodecConfig | None = None,
                 min_samples: int = MIN_SLOT_SAMPLES) -> dict:
    """Train one pooling/quantization variant and report its bitrate
    against the block-based baseline on the evaluation corpus."""
    eval_corpus = eval_corpus or train_corpus
    base = config or CodecConfig(family="three_tap")
    table, run = train_weights(train_corpus, stage, base, precision,
                               per_mode, per_size, min_samples)
    three_tap_cfg = CodecConfig(family="three_tap", ctu_size=base.ctu_size,
                                weights=table, neighbors=base.neighbors)
    block_cfg = CodecConfig(family="block", ctu_size=base.ctu_size)
    bits_variant = corpus_bits(eval_corpus, three_tap_cfg)
    bits_block = corpus_bits(eval_corpus, block_cfg)
    return {
        "per_mode": per_mode,
        "per_size": per_size,
        "precision": precision,
        "stage": stage,
        "bits_three_tap": bits_variant,
        "bits_block": bits_block,
        "reduction_pct": 100.0 * (bits_block - bits_variant) / bits_block,
        "weights": table,
        "run": run,
    }
