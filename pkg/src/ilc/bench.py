"""Benchmark harness: encode a corpus under several predictor families and
report bitrates, reductions against the block-based baseline, normalized
wall-clock times, and mode / PU-size selection histograms as CSV."""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .codec import CodecConfig, collect_stats, decode_plane, encode_plane
from .modes import NUM_MODES
from .plane import Corpus

DEFAULT_FAMILIES = ("block", "sap", "three_tap", "block_rdpcm")


@dataclass
class BenchRow:
    label: str
    family: str
    width: int = 0
    height: int = 0
    bits: int = 0
    bits_per_pixel: float = 0.0
    encode_seconds: float = 0.0
    decode_seconds: float = 0.0
    lossless: bool = False
    reduction_pct: float | None = None
    error: str = ""


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    mode_percent: dict = field(default_factory=dict)        # family -> 35 bins
    size_percent: dict = field(default_factory=dict)        # family -> {size: %}
    size_pixel_percent: dict = field(default_factory=dict)
    average_reduction: dict = field(default_factory=dict)   # family -> %
    normalized_encode: dict = field(default_factory=dict)   # vs block
    normalized_decode: dict = field(default_factory=dict)


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("ILC_THREADS", "")
    return max(1, int(env)) if env.isdigit() else 1


def _bench_one(label, plane, family, weights, neighbors, ctu_size):
    row = BenchRow(label=label, family=family, width=plane.width,
                   height=plane.height)
    try:
        cfg = CodecConfig(family=family, ctu_size=ctu_size)
        if weights is not None or neighbors is not None:
            cfg = CodecConfig(
                family=family, ctu_size=ctu_size,
                weights=weights if weights is not None else cfg.weights,
                neighbors=neighbors if neighbors is not None else cfg.neighbors,
            )
        data, stats = encode_plane(plane, cfg)
        t0 = time.perf_counter()
        decoded = decode_plane(data, weights=weights, neighbors=neighbors)
        stats.decode_seconds = time.perf_counter() - t0
        row.bits = stats.total_bits
        row.bits_per_pixel = stats.bits_per_pixel
        row.encode_seconds = stats.encode_seconds
        row.decode_seconds = stats.decode_seconds
        row.lossless = decoded == plane
        return row, stats
    except Exception as exc:  # recorded per row, never fatal to the sweep
        row.error = f"{type(exc).__name__}: {exc}"
        return row, None


def run_benchmark(corpus: Corpus, families=DEFAULT_FAMILIES, weights=None,
                  neighbors=None, ctu_size: int = 32,
                  threads: int | None = None) -> BenchReport:
    """Encode every plane under every family; reductions are computed per
    image against the block family when it is in the sweep."""
    families = tuple(families)
    jobs = [
        (label, plane, family)
        for label, plane in zip(corpus.labels, corpus.planes)
        for family in families
    ]
    workers = _thread_count(threads)
    if workers == 1:
        results = [
            _bench_one(label, plane, family, weights, neighbors, ctu_size)
            for label, plane, family in jobs
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda j: _bench_one(j[0], j[1], j[2], weights, neighbors,
                                     ctu_size),
                jobs,
            ))

    report = BenchReport()
    stats_by_family = {f: [] for f in families}
    bits = {}
    for (label, _, family), (row, stats) in zip(jobs, results):
        report.rows.append(row)
        if stats is not None:
            stats_by_family[family].append(stats)
            bits[(label, family)] = row.bits

    for row in report.rows:
        base = bits.get((row.label, "block"))
        if base and not row.error:
            row.reduction_pct = 100.0 * (base - row.bits) / base

    for family in families:
        collected = stats_by_family[family]
        if not collected:
            continue
        agg = collect_stats(collected)
        report.mode_percent[family] = agg.mode_percent
        report.size_percent[family] = agg.size_percent
        report.size_pixel_percent[family] = agg.size_pixel_percent
        reductions = [r.reduction_pct for r in report.rows
                      if r.family == family and r.reduction_pct is not None]
        if reductions:
            report.average_reduction[family] = sum(reductions) / len(reductions)
        block_rows = [r for r in report.rows
                      if r.family == "block" and not r.error]
        fam_rows = [r for r in report.rows
                    if r.family == family and not r.error]
        base_enc = sum(r.encode_seconds for r in block_rows)
        base_dec = sum(r.decode_seconds for r in block_rows)
        if base_enc > 0:
            report.normalized_encode[family] = \
                sum(r.encode_seconds for r in fam_rows) / base_enc
        if base_dec > 0:
            report.normalized_decode[family] = \
                sum(r.decode_seconds for r in fam_rows) / base_dec
    return report


def write_report_csv(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["label", "family", "width", "height", "bits",
                      "bits_per_pixel", "encode_seconds", "decode_seconds",
                      "lossless", "reduction_pct", "error"])
        for r in report.rows:
            out.writerow([
                r.label, r.family, r.width, r.height, r.bits,
                f"{r.bits_per_pixel:.6f}", f"{r.encode_seconds:.6f}",
                f"{r.decode_seconds:.6f}", int(r.lossless),
                "" if r.reduction_pct is None else f"{r.reduction_pct:.4f}",
                r.error,
            ])


def write_mode_histogram_csv(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["family", "mode", "percent"])
        for family, percents in report.mode_percent.items():
            for mode in range(NUM_MODES):
                out.writerow([family, mode, f"{percents[mode]:.4f}"])


def write_size_histogram_csv(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["family", "size", "leaf_percent", "pixel_percent"])
        for family, percents in report.size_percent.items():
            pixel = report.size_pixel_percent[family]
            for size in sorted(percents):
                out.writerow([
                    family, size, f"{percents[size]:.4f}",
                    f"{pixel[size]:.4f}",
                ])
