"""Command-line front end.

    gdev plan <manifest>              show the run order and cardinalities
    gdev run <manifest> [--out DIR] [--cores LIST] [--continue-on-error]
    gdev analyze <results-dir> [--epsilon F] [--tau F]
    gdev report <results-dir>

Output directory resolution for `run`: --out wins, then the manifest's
output_dir, then $GDEV_OUT, then ./results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .affinity import parse_core_list, set_affinity
from .analysis import DEFAULT_SATURATION_EPSILON
from .errors import BenchmarkError, UnsupportedPlatform, ValidationError
from .manifest import (
    RunManifest,
    capture_environment,
    load_manifest,
    manifest_to_json,
    parse_manifest,
)
from .reporting import (
    BUNDLE_JSON,
    build_analysis,
    read_aggregates,
    write_dataset,
    write_report,
)
from .roofline import DEFAULT_RIDGE_BAND
from .stats import aggregate_dataset
from .sweep import execute_sweep, plan_sweep
from .workload import WorkloadRuntime

DEFAULT_OUT_DIR = "results"
ANALYSIS_JSON = "analysis.json"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdev",
        description="Batch/thread sweep benchmarking for CPU inference workloads.",
    )
    parser.add_argument("--version", action="version", version=f"gdev {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="expand a manifest into its run order")
    p_plan.add_argument("manifest")

    p_run = sub.add_parser("run", help="execute a manifest and persist results")
    p_run.add_argument("manifest")
    p_run.add_argument("--out", help="output directory (overrides manifest and $GDEV_OUT)")
    p_run.add_argument("--cores", help="affinity core list, e.g. 0-23 (overrides manifest)")
    p_run.add_argument(
        "--continue-on-error",
        action="store_true",
        help="log failed configs and keep sweeping instead of aborting",
    )
    p_run.add_argument(
        "--epsilon",
        type=float,
        default=DEFAULT_SATURATION_EPSILON,
        help="saturation gain threshold (default %(default)s)",
    )
    p_run.add_argument(
        "--tau",
        type=float,
        default=DEFAULT_RIDGE_BAND,
        help="ridge-regime half width (default %(default)s)",
    )

    p_an = sub.add_parser("analyze", help="recompute analysis from a results directory")
    p_an.add_argument("results_dir")
    p_an.add_argument("--epsilon", type=float, default=DEFAULT_SATURATION_EPSILON)
    p_an.add_argument("--tau", type=float, default=DEFAULT_RIDGE_BAND)

    p_rep = sub.add_parser("report", help="emit plot-data CSVs from a results directory")
    p_rep.add_argument("results_dir")
    return parser


def _resolve_out_dir(cli_out: str | None, manifest: RunManifest) -> str:
    if cli_out:
        return cli_out
    if manifest.output_dir:
        return manifest.output_dir
    return os.environ.get("GDEV_OUT") or DEFAULT_OUT_DIR


def _cmd_plan(args) -> int:
    manifest = load_manifest(args.manifest)
    plan = plan_sweep(manifest.matrix)
    matrix = manifest.matrix
    seen = set()
    for config in plan.configs:
        key = (config.model_id, config.threads, config.batch_size)
        if key in seen:
            continue
        seen.add(key)
        print(f"{config.model_id}  threads={config.threads}  batch={config.batch_size}")
    unique = matrix.unique_configurations
    total = matrix.total_executions
    print(f"{unique} unique configurations, {total} executions")
    return 0


def _apply_affinity(manifest: RunManifest, cores_flag: str | None):
    """Pin the process if asked to; returns what ended up in effect."""
    mask = parse_core_list(cores_flag) if cores_flag else manifest.affinity
    if mask is None:
        return None, "default"
    try:
        applied = set_affinity(mask)
    except UnsupportedPlatform:
        print("warning: CPU affinity not supported here, running unpinned", file=sys.stderr)
        return None, "unpinned"
    return mask, list(applied.core_ids)


def _cmd_run(args) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = _resolve_out_dir(args.out, manifest)
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ValidationError(f"output directory {out_dir!r} is not writable")
    mask, affinity_state = _apply_affinity(manifest, args.cores)
    plan = plan_sweep(manifest.matrix, core_list=mask.core_ids if mask else None)
    runtime = WorkloadRuntime(manifest.workloads)
    dataset = execute_sweep(plan, runtime, continue_on_error=args.continue_on_error)
    aggregates = aggregate_dataset(dataset.records)
    analysis = build_analysis(
        aggregates,
        platforms=manifest.platforms,
        profiles=manifest.profiles,
        epsilon=args.epsilon,
        tau=args.tau,
    )
    environment = capture_environment(__version__)
    environment["affinity"] = affinity_state
    paths = write_dataset(
        dataset,
        aggregates,
        out_dir,
        manifest_json=manifest_to_json(manifest),
        environment=environment,
        analysis=analysis,
    )
    print(
        f"completed {len(dataset.records)} executions "
        f"({len(dataset.failures)} failed), {len(aggregates)} aggregate keys"
    )
    print(f"results in {out_dir}")
    for name in ("raw", "aggregates", "bundle"):
        print(f"  {paths[name]}")
    return 0


def _load_bundle_manifest(results_dir: str) -> RunManifest | None:
    path = os.path.join(results_dir, BUNDLE_JSON)
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as fh:
        bundle = json.load(fh)
    raw = bundle.get("manifest")
    if not raw:
        return None
    return parse_manifest(raw, source_path=path)


def _print_analysis(analysis: dict) -> None:
    for sat in analysis["saturation"]:
        where = (
            f"saturates at batch {sat['saturation_batch']}"
            if sat["saturation_batch"] is not None
            else "does not saturate in the tested range"
        )
        print(f"{sat['model']} threads={sat['threads']}: {where}")
    for cliff in analysis["cliffs"]:
        line = (
            f"{cliff['model']} batch={cliff['batch']}: "
            f"peak {cliff['peak_ips']:.2f} IPS at {cliff['peak_threads']} threads, "
            f"{cliff['trough_ips']:.2f} at {cliff['trough_threads']}, "
            f"degradation {cliff['degradation'] * 100:.1f}%"
        )
        if cliff["cliff"]:
            line += "  [cliff]"
        print(line)
    roofline = analysis.get("roofline")
    if roofline:
        for v in roofline["verdicts"]:
            extra = f", {v['cache']}" if "cache" in v else ""
            print(
                f"{v['model']} on {v['platform']}: OI {v['oi_flops_per_byte']:.2f} FLOP/B, "
                f"{v['regime']} (attainable {v['attainable_gflops']:.1f} GFLOP/s{extra})"
            )


def _cmd_analyze(args) -> int:
    aggregates = read_aggregates(args.results_dir)
    manifest = _load_bundle_manifest(args.results_dir)
    platforms = manifest.platforms if manifest else ()
    profiles = manifest.profiles if manifest else {}
    analysis = build_analysis(
        aggregates,
        platforms=platforms,
        profiles=profiles,
        epsilon=args.epsilon,
        tau=args.tau,
    )
    out_path = os.path.join(args.results_dir, ANALYSIS_JSON)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(analysis, fh, indent=2)
        fh.write("\n")
    _print_analysis(analysis)
    print(f"analysis written to {out_path}")
    return 0


def _cmd_report(args) -> int:
    aggregates = read_aggregates(args.results_dir)
    written = write_report(aggregates, args.results_dir)
    for path in written:
        print(path)
    return 0


_COMMANDS = {
    "plan": _cmd_plan,
    "run": _cmd_run,
    "analyze": _cmd_analyze,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BenchmarkError as exc:
        print(f"gdev: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
