"""Command-line interface: encode, decode, train, bench.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable input,
malformed stream, empty corpus).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import (
    run_benchmark,
    write_mode_histogram_csv,
    write_report_csv,
    write_size_histogram_csv,
)
from .codec import CodecConfig, DecodeError, decode_plane, encode_plane
from .modes import NeighborConfig, WeightTable
from .plane import Corpus, FormatError, extract_luma_from_yuv, load_pgm, \
    save_pgm
from .training import train_weights

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

FAMILY_FLAGS = {
    "block": "block",
    "sap": "sap",
    "three-tap": "three_tap",
    "block+rdpcm": "block_rdpcm",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_geometry(text: str):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"geometry must look like 1920x1080, got {text!r}"
        )


def _build_parser() -> _Parser:
    parser = _Parser(prog="ilc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_codec_flags(p):
        p.add_argument("--family", choices=sorted(FAMILY_FLAGS),
                       default="three-tap")
        p.add_argument("--weights", help="weight table file")
        p.add_argument("--neighbors", help="neighbor offsets file")
        p.add_argument("--ctu", type=int, default=32,
                       choices=(8, 16, 32), help="coding tree unit size")

    enc = sub.add_parser("encode", help="encode a PGM or raw YUV plane")
    enc.add_argument("input")
    enc.add_argument("output")
    add_codec_flags(enc)
    enc.add_argument("--yuv", type=_parse_geometry, metavar="WxH",
                     help="treat input as raw 4:2:0 YUV of this geometry")
    enc.add_argument("--frame", type=int, default=0,
                     help="frame index for --yuv input")

    dec = sub.add_parser("decode", help="decode a bitstream to PGM")
    dec.add_argument("input")
    dec.add_argument("output")
    dec.add_argument("--weights", help="weight table used at encode time")
    dec.add_argument("--neighbors", help="neighbor offsets used at encode time")

    trn = sub.add_parser("train", help="train 3-tap weights on a PGM corpus")
    trn.add_argument("corpus", help="directory of PGM images")
    trn.add_argument("output", help="weight table file to write")
    trn.add_argument("--stage", choices=("mse", "mse+bitrate"), default="mse")
    trn.add_argument("--neighbors", help="neighbor offsets file")
    trn.add_argument("--ctu", type=int, default=32, choices=(8, 16, 32))
    trn.add_argument("--min-samples", type=int, default=1000,
                     help="samples required before a slot is re-solved")

    ben = sub.add_parser("bench", help="compare families over a PGM corpus")
    ben.add_argument("corpus", help="directory of PGM images")
    ben.add_argument("--families",
                     default="block,sap,three-tap,block+rdpcm",
                     help="comma-separated families to run")
    ben.add_argument("--weights", help="weight table file")
    ben.add_argument("--neighbors", help="neighbor offsets file")
    ben.add_argument("--ctu", type=int, default=32, choices=(8, 16, 32))
    ben.add_argument("--out", default="bench",
                     help="prefix for report/modes/sizes CSV files")
    return parser


def _load_weights(path):
    return WeightTable.load(path) if path else None


def _load_neighbors(path):
    return NeighborConfig.load(path) if path else None


def _load_corpus(directory) -> Corpus:
    paths = sorted(Path(directory).glob("*.pgm"))
    if not paths:
        raise FormatError(f"no PGM images found in {directory}")
    return Corpus([load_pgm(p) for p in paths], [p.stem for p in paths])


def _codec_config(args) -> CodecConfig:
    weights = _load_weights(args.weights)
    neighbors = _load_neighbors(args.neighbors)
    kwargs = {"family": FAMILY_FLAGS[args.family], "ctu_size": args.ctu}
    if weights is not None:
        kwargs["weights"] = weights
    if neighbors is not None:
        kwargs["neighbors"] = neighbors
    return CodecConfig(**kwargs)


def _cmd_encode(args) -> int:
    if args.yuv:
        width, height = args.yuv
        plane = extract_luma_from_yuv(args.input, width, height, args.frame)
    else:
        plane = load_pgm(args.input)
    data, stats = encode_plane(plane, _codec_config(args))
    with open(args.output, "wb") as fh:
        fh.write(data)
    print(
        f"{args.input}: {stats.total_bits} bits, "
        f"{stats.bits_per_pixel:.4f} bpp, "
        f"{stats.encode_seconds:.3f} s encode",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_decode(args) -> int:
    with open(args.input, "rb") as fh:
        data = fh.read()
    plane = decode_plane(data, weights=_load_weights(args.weights),
                         neighbors=_load_neighbors(args.neighbors))
    save_pgm(plane, args.output)
    print(f"{args.output}: {plane.width}x{plane.height}, "
          f"{plane.bit_depth}-bit", file=sys.stderr)
    return EXIT_OK


def _cmd_train(args) -> int:
    corpus = _load_corpus(args.corpus)
    config = CodecConfig(family="three_tap", ctu_size=args.ctu)
    neighbors = _load_neighbors(args.neighbors)
    if neighbors is not None:
        config = CodecConfig(family="three_tap", ctu_size=args.ctu,
                             neighbors=neighbors)
    table, run = train_weights(corpus, stage=args.stage, config=config,
                               min_samples=args.min_samples)
    table.save(args.output)
    log_path = f"{args.output}.log.csv"
    run.write_csv(log_path)
    print(
        f"trained {table.num_slots} slots on {len(corpus)} images "
        f"(stage {args.stage}); log in {log_path}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    corpus = _load_corpus(args.corpus)
    try:
        families = [FAMILY_FLAGS[f.strip()] for f in args.families.split(",")]
    except KeyError as exc:
        raise FormatError(f"unknown family {exc.args[0]!r}")
    report = run_benchmark(
        corpus, families, weights=_load_weights(args.weights),
        neighbors=_load_neighbors(args.neighbors), ctu_size=args.ctu,
    )
    write_report_csv(report, f"{args.out}_report.csv")
    write_mode_histogram_csv(report, f"{args.out}_modes.csv")
    write_size_histogram_csv(report, f"{args.out}_sizes.csv")
    for family, pct in report.average_reduction.items():
        print(f"{family}: {pct:+.2f}% vs block", file=sys.stderr)
    print(f"reports written under prefix {args.out}_", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handlers = {
        "encode": _cmd_encode,
        "decode": _cmd_decode,
        "train": _cmd_train,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except (FormatError, DecodeError, OSError, ValueError) as exc:
        print(f"ilc {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
