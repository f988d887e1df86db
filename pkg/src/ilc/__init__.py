"""Lossless intra image codec with switchable spatial predictors.

Three prediction families share one quadtree partitioner and one
context-adaptive Rice entropy coder:

* ``block``: planar, DC, and 33 angular modes predicted from the block's
  top and left reference samples (optionally with horizontal/vertical
  residual DPCM as ``block_rdpcm``).
* ``sap``: the same angular geometry applied pixel by pixel against the
  immediately adjacent row or column, so every prediction uses
  already-reconstructed samples at distance one.
* ``three_tap``: a trained 3-tap linear predictor over mode-dependent
  causal neighbors, with integer weights shared across symmetric modes.
"""

from .bench import (
    BenchReport,
    BenchRow,
    run_benchmark,
    write_mode_histogram_csv,
    write_report_csv,
    write_size_histogram_csv,
)
from .codec import (
    AggregateStats,
    CodecConfig,
    DecodeError,
    EncodeStats,
    StreamHeader,
    choose_leaf_mode,
    choose_partition,
    collect_stats,
    decode_plane,
    encode_plane,
    parse_header,
)
from .modes import (
    DEFAULT_NEIGHBORS,
    DEFAULT_WEIGHTS,
    NUM_MODES,
    NeighborConfig,
    WeightTable,
)
from .plane import (
    Corpus,
    FormatError,
    Plane,
    extract_luma_from_yuv,
    load_pgm,
    save_pgm,
)
from .training import (
    InsufficientDataError,
    MomentAccumulator,
    TrainingRun,
    ablation_run,
    accumulate_moments,
    corpus_bits,
    iterate_mse_training,
    quantize_weights,
    refine_for_bitrate,
    solve_normal_equations,
    train_weights,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "BenchReport",
    "BenchRow",
    "CodecConfig",
    "Corpus",
    "DecodeError",
    "DEFAULT_NEIGHBORS",
    "DEFAULT_WEIGHTS",
    "EncodeStats",
    "FormatError",
    "InsufficientDataError",
    "MomentAccumulator",
    "NeighborConfig",
    "NUM_MODES",
    "Plane",
    "StreamHeader",
    "TrainingRun",
    "WeightTable",
    "ablation_run",
    "accumulate_moments",
    "choose_leaf_mode",
    "choose_partition",
    "collect_stats",
    "corpus_bits",
    "decode_plane",
    "encode_plane",
    "extract_luma_from_yuv",
    "iterate_mse_training",
    "load_pgm",
    "parse_header",
    "quantize_weights",
    "refine_for_bitrate",
    "run_benchmark",
    "save_pgm",
    "solve_normal_equations",
    "train_weights",
    "write_mode_histogram_csv",
    "write_report_csv",
    "write_size_histogram_csv",
]
