"""Result persistence, analysis bundling, and plot-data emission.

On-disk layout of a results directory:

    raw_latencies.csv   model,batch,threads,sweep,repetition,iteration,latency_ms
    aggregates.csv      model,batch,threads,median_ms,p99_ms,stddev_ms,throughput_ips,n_samples
    bundle.json         manifest + environment + aggregates + analysis + failures
    failures.json       configs that never produced a record, with reasons
    report/             per-model plot-data CSVs (written by write_report)

Raw latencies carry 6 significant digits, which is plenty for millisecond
timings and keeps diffs stable. Aggregates are written with full repr
precision so a read-back compares bit-for-bit against the values in memory.
All writes go to a temp file first and are renamed into place.
"""

from __future__ import annotations

import csv
import json
import os
import re
import tempfile
from dataclasses import dataclass

from .analysis import (
    DEFAULT_CLIFF_THRESHOLD,
    DEFAULT_SATURATION_EPSILON,
    detect_cliff,
    detect_saturation,
    speedup_curve,
    tail_amplification,
    throughput_curve,
)
from .errors import EmptyInput, MissingBaseline, ParseError, UnknownModel
from .model import AggregatedResult
from .roofline import (
    DEFAULT_RIDGE_BAND,
    cache_residency,
    classify_regime,
    memory_bound_threshold,
)
from .sweep import Dataset

RAW_CSV = "raw_latencies.csv"
AGGREGATES_CSV = "aggregates.csv"
BUNDLE_JSON = "bundle.json"
FAILURES_JSON = "failures.json"

_RAW_HEADER = ["model", "batch", "threads", "sweep", "repetition", "iteration", "latency_ms"]
_AGG_HEADER = [
    "model",
    "batch",
    "threads",
    "median_ms",
    "p99_ms",
    "stddev_ms",
    "throughput_ips",
    "n_samples",
]


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _raw_csv_text(dataset: Dataset) -> str:
    lines = [",".join(_RAW_HEADER)]
    for record in dataset.records:
        c = record.config
        prefix = f"{c.model_id},{c.batch_size},{c.threads},{c.sweep_index},{c.repetition_index}"
        for i, latency in enumerate(record.measured_latencies_ms):
            lines.append(f"{prefix},{i},{latency:.6g}")
    return "\n".join(lines) + "\n"


def _aggregates_csv_text(aggregates: list[AggregatedResult]) -> str:
    lines = [",".join(_AGG_HEADER)]
    for a in aggregates:
        lines.append(
            f"{a.model_id},{a.batch_size},{a.threads},"
            f"{a.median_latency_ms!r},{a.p99_latency_ms!r},{a.stddev_ms!r},"
            f"{a.throughput_ips!r},{a.n_samples}"
        )
    return "\n".join(lines) + "\n"


def _failures_json(dataset: Dataset) -> list[dict]:
    return [
        {
            "model": f.config.model_id,
            "batch": f.config.batch_size,
            "threads": f.config.threads,
            "sweep": f.config.sweep_index,
            "repetition": f.config.repetition_index,
            "kind": f.kind,
            "message": f.message,
        }
        for f in dataset.failures
    ]


def aggregate_to_json(a: AggregatedResult) -> dict:
    return {
        "model": a.model_id,
        "batch": a.batch_size,
        "threads": a.threads,
        "median_ms": a.median_latency_ms,
        "p99_ms": a.p99_latency_ms,
        "stddev_ms": a.stddev_ms,
        "throughput_ips": a.throughput_ips,
        "n_samples": a.n_samples,
    }


def write_dataset(
    dataset: Dataset,
    aggregates: list[AggregatedResult],
    out_dir: str,
    *,
    manifest_json: dict | None = None,
    environment: dict | None = None,
    analysis: dict | None = None,
) -> dict[str, str]:
    """Persist a run; returns the paths written keyed by artifact name."""
    if not dataset.records:
        raise EmptyInput("refusing to persist a dataset with no records")
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "raw": os.path.join(out_dir, RAW_CSV),
        "aggregates": os.path.join(out_dir, AGGREGATES_CSV),
        "bundle": os.path.join(out_dir, BUNDLE_JSON),
        "failures": os.path.join(out_dir, FAILURES_JSON),
    }
    bundle = {
        "manifest": manifest_json,
        "environment": environment,
        "aggregates": [aggregate_to_json(a) for a in aggregates],
        "analysis": analysis,
        "failures": _failures_json(dataset),
    }
    _atomic_write(paths["raw"], _raw_csv_text(dataset))
    _atomic_write(paths["aggregates"], _aggregates_csv_text(aggregates))
    _atomic_write(paths["bundle"], json.dumps(bundle, indent=2) + "\n")
    _atomic_write(paths["failures"], json.dumps(_failures_json(dataset), indent=2) + "\n")
    return paths


def read_aggregates(results_dir: str) -> list[AggregatedResult]:
    """Load aggregates.csv back into typed results, full precision."""
    path = os.path.join(results_dir, AGGREGATES_CSV)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != _AGG_HEADER:
                raise ParseError(f"{path}: unexpected header {header!r}")
            out = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(_AGG_HEADER):
                    raise ParseError(f"{path}:{lineno}: expected {len(_AGG_HEADER)} columns")
                try:
                    out.append(
                        AggregatedResult(
                            model_id=row[0],
                            batch_size=int(row[1]),
                            threads=int(row[2]),
                            median_latency_ms=float(row[3]),
                            p99_latency_ms=float(row[4]),
                            stddev_ms=float(row[5]),
                            throughput_ips=float(row[6]),
                            n_samples=int(row[7]),
                        )
                    )
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
            return out
    except OSError as exc:
        raise ParseError(f"cannot read {path!r}: {exc}") from exc


def read_raw_latencies(results_dir: str) -> list[tuple[str, int, int, int, int, int, float]]:
    """Load raw_latencies.csv rows as typed tuples in file order."""
    path = os.path.join(results_dir, RAW_CSV)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != _RAW_HEADER:
                raise ParseError(f"{path}: unexpected header {header!r}")
            out = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(_RAW_HEADER):
                    raise ParseError(f"{path}:{lineno}: expected {len(_RAW_HEADER)} columns")
                try:
                    out.append(
                        (
                            row[0],
                            int(row[1]),
                            int(row[2]),
                            int(row[3]),
                            int(row[4]),
                            int(row[5]),
                            float(row[6]),
                        )
                    )
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
            return out
    except OSError as exc:
        raise ParseError(f"cannot read {path!r}: {exc}") from exc


@dataclass(frozen=True)
class HeatmapMatrix:
    """Median throughput grid for one model: thread counts down, batch sizes
    across, None where the configuration produced no aggregate."""

    model_id: str
    thread_counts: tuple[int, ...]
    batch_sizes: tuple[int, ...]
    cells: tuple[tuple[float | None, ...], ...]


def heatmap(aggregates: list[AggregatedResult], model_id: str) -> HeatmapMatrix:
    mine = [a for a in aggregates if a.model_id == model_id]
    if not mine:
        raise UnknownModel(f"no aggregates for model {model_id!r}")
    thread_counts = tuple(sorted({a.threads for a in mine}))
    batch_sizes = tuple(sorted({a.batch_size for a in mine}))
    by_key = {(a.threads, a.batch_size): a.throughput_ips for a in mine}
    cells = tuple(
        tuple(by_key.get((t, b)) for b in batch_sizes) for t in thread_counts
    )
    return HeatmapMatrix(
        model_id=model_id,
        thread_counts=thread_counts,
        batch_sizes=batch_sizes,
        cells=cells,
    )


def _grouped(aggregates, key):
    groups: dict = {}
    for a in aggregates:
        groups.setdefault(key(a), []).append(a)
    return dict(sorted(groups.items()))


def build_analysis(
    aggregates: list[AggregatedResult],
    *,
    platforms=(),
    profiles: dict | None = None,
    epsilon: float = DEFAULT_SATURATION_EPSILON,
    tau: float = DEFAULT_RIDGE_BAND,
    cliff_threshold: float = DEFAULT_CLIFF_THRESHOLD,
) -> dict:
    """Full analysis bundle as a JSON-ready dict.

    Speedup curves need a single-thread baseline; groups that lost theirs to
    a failed config are skipped rather than aborting the whole report.
    """
    profiles = profiles or {}
    bundle: dict = {
        "epsilon": epsilon,
        "tau": tau,
        "cliff_threshold": cliff_threshold,
        "throughput_curves": [],
        "speedup_curves": [],
        "saturation": [],
        "cliffs": [],
        "tail": [],
        "roofline": None,
    }
    for (model, threads), group in _grouped(
        aggregates, lambda a: (a.model_id, a.threads)
    ).items():
        curve = throughput_curve(group)
        bundle["throughput_curves"].append(
            {
                "model": model,
                "threads": threads,
                "points": [
                    {
                        "batch": p.batch_size,
                        "median_ms": p.median_latency_ms,
                        "throughput_ips": p.throughput_ips,
                    }
                    for p in curve.points
                ],
            }
        )
        sat = detect_saturation(curve, epsilon)
        bundle["saturation"].append(
            {
                "model": model,
                "threads": threads,
                "epsilon": epsilon,
                "saturation_batch": sat.saturation_batch,
                "gains": list(sat.gains),
            }
        )
    for (model, batch), group in _grouped(
        aggregates, lambda a: (a.model_id, a.batch_size)
    ).items():
        try:
            curve = speedup_curve(group)
        except MissingBaseline:
            pass
        else:
            bundle["speedup_curves"].append(
                {
                    "model": model,
                    "batch": batch,
                    "points": [
                        {"threads": p.threads, "speedup": p.speedup} for p in curve.points
                    ],
                }
            )
        cliff = detect_cliff(group, cliff_threshold)
        bundle["cliffs"].append(
            {
                "model": model,
                "batch": batch,
                "peak_threads": cliff.peak_threads,
                "peak_ips": cliff.peak_ips,
                "trough_threads": cliff.trough_threads,
                "trough_ips": cliff.trough_ips,
                "degradation": cliff.degradation,
                "cliff": cliff.cliff,
            }
        )
    for a in aggregates:
        bundle["tail"].append(
            {
                "model": a.model_id,
                "batch": a.batch_size,
                "threads": a.threads,
                "median_ms": a.median_latency_ms,
                "p99_ms": a.p99_latency_ms,
                "amplification": tail_amplification(a.median_latency_ms, a.p99_latency_ms),
            }
        )
    if platforms and profiles:
        roofline: dict = {"platforms": [], "verdicts": []}
        for p in platforms:
            roofline["platforms"].append(
                {
                    "name": p.name,
                    "peak_gflops": p.pmax_gflops,
                    "bandwidth_gbps": p.bmax_gbps,
                    "ridge_oi": p.ridge_oi,
                }
            )
        for model, profile in sorted(profiles.items()):
            for p in platforms:
                verdict = classify_regime(profile, p, tau)
                entry = {
                    "model": model,
                    "platform": p.name,
                    "oi_flops_per_byte": verdict.oi,
                    "regime": verdict.regime,
                    "attainable_gflops": min(p.pmax_gflops, verdict.oi * p.bmax_gbps),
                    "memory_bound_below_gb": memory_bound_threshold(
                        profile.flops_per_image_gflops, p.ridge_oi
                    ),
                }
                if profile.weights_bytes is not None and p.llc_bytes is not None:
                    entry["cache"] = cache_residency(profile.weights_bytes, p.llc_bytes)
                roofline["verdicts"].append(entry)
        bundle["roofline"] = roofline
    return bundle


def _safe_name(model_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", model_id)


def write_report(aggregates: list[AggregatedResult], out_dir: str) -> list[str]:
    """Emit per-model plot-data CSVs under out_dir/report."""
    if not aggregates:
        raise EmptyInput("no aggregates to report on")
    report_dir = os.path.join(out_dir, "report")
    os.makedirs(report_dir, exist_ok=True)
    written = []

    def emit(name: str, header: list[str], rows: list[list]) -> None:
        path = os.path.join(report_dir, name)
        lines = [",".join(header)]
        lines.extend(",".join(str(cell) for cell in row) for row in rows)
        _atomic_write(path, "\n".join(lines) + "\n")
        written.append(path)

    models = sorted({a.model_id for a in aggregates})
    for model in models:
        mine = sorted(
            (a for a in aggregates if a.model_id == model),
            key=lambda a: (a.threads, a.batch_size),
        )
        tag = _safe_name(model)
        emit(
            f"throughput_vs_batch_{tag}.csv",
            ["threads", "batch", "throughput_ips"],
            [[a.threads, a.batch_size, repr(a.throughput_ips)] for a in mine],
        )
        emit(
            f"latency_vs_batch_{tag}.csv",
            ["threads", "batch", "median_ms"],
            [[a.threads, a.batch_size, repr(a.median_latency_ms)] for a in mine],
        )
        by_batch = sorted(
            (a for a in aggregates if a.model_id == model),
            key=lambda a: (a.batch_size, a.threads),
        )
        speedup_rows = []
        for (_, batch), group in _grouped(
            by_batch, lambda a: (a.model_id, a.batch_size)
        ).items():
            try:
                curve = speedup_curve(group)
            except MissingBaseline:
                continue
            speedup_rows.extend(
                [batch, p.threads, repr(p.speedup)] for p in curve.points
            )
        emit(f"speedup_vs_threads_{tag}.csv", ["batch", "threads", "speedup"], speedup_rows)
        emit(
            f"median_vs_p99_{tag}.csv",
            ["threads", "batch", "median_ms", "p99_ms", "amplification"],
            [
                [
                    a.threads,
                    a.batch_size,
                    repr(a.median_latency_ms),
                    repr(a.p99_latency_ms),
                    repr(tail_amplification(a.median_latency_ms, a.p99_latency_ms)),
                ]
                for a in mine
            ],
        )
        grid = heatmap(aggregates, model)
        heat_rows = []
        for t, row in zip(grid.thread_counts, grid.cells):
            heat_rows.append(
                [t] + [("" if cell is None else repr(cell)) for cell in row]
            )
        emit(
            f"heatmap_{tag}.csv",
            ["threads"] + [str(b) for b in grid.batch_sizes],
            heat_rows,
        )
    return written
