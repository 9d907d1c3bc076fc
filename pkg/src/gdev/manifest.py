"""Run manifests: one JSON document that pins an entire session.

Schema (top level object):

    {
      "matrix": {
        "models": ["resnet18", "resnet50"],
        "batch_sizes": [1, 2, 4, 8, 16],
        "thread_counts": [1, 2, 3, 4],
        "repetitions": 3,
        "sweep_count": 10,
        "warmup_iterations": 20,        optional, default 20
        "measure_iterations": 100       optional, default 100
      },
      "workloads": [
        {"model_id": "gemm-small", "kind": "builtin-gemm",
         "dims": [64, 64, 64], "element_bytes": 4},
        {"model_id": "resnet18", "kind": "external",
         "command": ["python", "-m", "some_adapter"]}
      ],
      "affinity": {"cores": "0-23"},    optional; list of ints also accepted
      "roofline": {                      optional
        "platforms": [{"name": ..., "peak_gflops": ..., "bandwidth_gbps": ...,
                       "llc_mb": ...}],
        "workloads": [{"model_id": ..., "flops_per_image_gflops": ...,
                       "data_moved_per_image_gb": ..., "weights_mb": ...}]
      },
      "output_dir": "results/legacy"    optional
    }

Every model in the matrix must be covered by exactly one workload entry.
"""

from __future__ import annotations

import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field

from .affinity import AffinityMask, parse_core_list
from .errors import ParseError, ValidationError
from .model import SweepMatrix, validate_matrix
from .roofline import PlatformRoofline, WorkloadProfile
from .workload import BUILTIN_GEMM, EXTERNAL, WorkloadSpec


@dataclass
class RunManifest:
    matrix: SweepMatrix
    workloads: tuple[WorkloadSpec, ...]
    affinity: AffinityMask | None = None
    platforms: tuple[PlatformRoofline, ...] = ()
    profiles: dict[str, WorkloadProfile] = field(default_factory=dict)
    output_dir: str | None = None
    source_path: str | None = None

    def spec_for(self, model_id: str) -> WorkloadSpec:
        for spec in self.workloads:
            if spec.model_id == model_id:
                return spec
        raise ValidationError(f"no workload declared for model {model_id!r}")


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"{where}: field {key!r} must be a number")
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ParseError(f"{where}: field {key!r} must be an int")
    if not isinstance(value, kind):
        raise ParseError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def _int_list(obj: dict, key: str, where: str) -> tuple[int, ...]:
    raw = _require(obj, key, list, where)
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError(f"{where}: {key}[{i}] must be an int")
        out.append(v)
    return tuple(out)


def _parse_matrix(raw: dict) -> SweepMatrix:
    where = "matrix"
    models_raw = _require(raw, "models", list, where)
    for i, m in enumerate(models_raw):
        if not isinstance(m, str):
            raise ParseError(f"{where}: models[{i}] must be a string")
    kwargs = {}
    if "warmup_iterations" in raw:
        kwargs["warmup_iterations"] = _require(raw, "warmup_iterations", int, where)
    if "measure_iterations" in raw:
        kwargs["measure_iterations"] = _require(raw, "measure_iterations", int, where)
    return SweepMatrix(
        models=tuple(models_raw),
        batch_sizes=_int_list(raw, "batch_sizes", where),
        thread_counts=_int_list(raw, "thread_counts", where),
        repetitions=_require(raw, "repetitions", int, where),
        sweep_count=_require(raw, "sweep_count", int, where),
        **kwargs,
    )


def _parse_workload(raw: dict, index: int) -> WorkloadSpec:
    where = f"workloads[{index}]"
    model_id = _require(raw, "model_id", str, where)
    kind = _require(raw, "kind", str, where)
    if kind == BUILTIN_GEMM:
        dims = _int_list(raw, "dims", where)
        if len(dims) != 3:
            raise ParseError(f"{where}: dims must have exactly 3 entries")
        element_bytes = raw.get("element_bytes", 4)
        if isinstance(element_bytes, bool) or not isinstance(element_bytes, int):
            raise ParseError(f"{where}: field 'element_bytes' must be an int")
        return WorkloadSpec(
            model_id=model_id, kind=kind, dims=dims, element_bytes=element_bytes
        )
    if kind == EXTERNAL:
        command_raw = _require(raw, "command", list, where)
        if not command_raw or not all(isinstance(c, str) for c in command_raw):
            raise ParseError(f"{where}: command must be a non-empty list of strings")
        return WorkloadSpec(model_id=model_id, kind=kind, command=tuple(command_raw))
    raise ParseError(f"{where}: unknown workload kind {kind!r}")


def _parse_affinity(raw: dict) -> AffinityMask:
    cores = raw.get("cores")
    if isinstance(cores, str):
        return parse_core_list(cores)
    if isinstance(cores, list):
        for i, c in enumerate(cores):
            if isinstance(c, bool) or not isinstance(c, int):
                raise ParseError(f"affinity: cores[{i}] must be an int")
        return AffinityMask(core_ids=tuple(cores))
    raise ParseError("affinity: field 'cores' must be a string or a list of ints")


def _parse_roofline(raw: dict):
    platforms = []
    for i, p in enumerate(raw.get("platforms", [])):
        where = f"roofline.platforms[{i}]"
        llc_mb = p.get("llc_mb")
        llc_bytes = None
        if llc_mb is not None:
            if isinstance(llc_mb, bool) or not isinstance(llc_mb, (int, float)):
                raise ParseError(f"{where}: field 'llc_mb' must be a number")
            llc_bytes = int(llc_mb * 1024 * 1024)
        platforms.append(
            PlatformRoofline(
                name=_require(p, "name", str, where),
                pmax_gflops=_require(p, "peak_gflops", float, where),
                bmax_gbps=_require(p, "bandwidth_gbps", float, where),
                llc_bytes=llc_bytes,
            )
        )
    profiles = {}
    for i, w in enumerate(raw.get("workloads", [])):
        where = f"roofline.workloads[{i}]"
        model_id = _require(w, "model_id", str, where)
        weights_mb = w.get("weights_mb")
        weights_bytes = None
        if weights_mb is not None:
            if isinstance(weights_mb, bool) or not isinstance(weights_mb, (int, float)):
                raise ParseError(f"{where}: field 'weights_mb' must be a number")
            weights_bytes = int(weights_mb * 1024 * 1024)
        profiles[model_id] = WorkloadProfile(
            flops_per_image_gflops=_require(w, "flops_per_image_gflops", float, where),
            data_moved_per_image_gb=_require(w, "data_moved_per_image_gb", float, where),
            weights_bytes=weights_bytes,
        )
    return tuple(platforms), profiles


def parse_manifest(raw: dict, source_path: str | None = None) -> RunManifest:
    """Build a fully validated manifest from a decoded JSON object."""
    if not isinstance(raw, dict):
        raise ParseError("manifest root must be a JSON object")
    matrix = _parse_matrix(_require(raw, "matrix", dict, "manifest"))
    workloads_raw = _require(raw, "workloads", list, "manifest")
    entries = []
    for i, w in enumerate(workloads_raw):
        if not isinstance(w, dict):
            raise ParseError(f"workloads[{i}] must be a JSON object")
        entries.append(_parse_workload(w, i))
    workloads = tuple(entries)
    validate_matrix(matrix)
    declared = [s.model_id for s in workloads]
    for model in matrix.models:
        if declared.count(model) == 0:
            raise ValidationError(f"matrix model {model!r} has no workload entry")
        if declared.count(model) > 1:
            raise ValidationError(f"model {model!r} declared by multiple workloads")
    affinity = None
    if "affinity" in raw:
        affinity = _parse_affinity(_require(raw, "affinity", dict, "manifest"))
    platforms, profiles = (), {}
    if "roofline" in raw:
        platforms, profiles = _parse_roofline(_require(raw, "roofline", dict, "manifest"))
    output_dir = raw.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ParseError("manifest: field 'output_dir' must be a string")
    return RunManifest(
        matrix=matrix,
        workloads=workloads,
        affinity=affinity,
        platforms=platforms,
        profiles=profiles,
        output_dir=output_dir,
        source_path=source_path,
    )


def manifest_to_json(manifest: RunManifest) -> dict:
    """Inverse of parse_manifest, minus the source path."""
    m = manifest.matrix
    out: dict = {
        "matrix": {
            "models": list(m.models),
            "batch_sizes": list(m.batch_sizes),
            "thread_counts": list(m.thread_counts),
            "repetitions": m.repetitions,
            "sweep_count": m.sweep_count,
            "warmup_iterations": m.warmup_iterations,
            "measure_iterations": m.measure_iterations,
        },
        "workloads": [],
    }
    for spec in manifest.workloads:
        if spec.kind == BUILTIN_GEMM:
            out["workloads"].append(
                {
                    "model_id": spec.model_id,
                    "kind": spec.kind,
                    "dims": list(spec.dims),
                    "element_bytes": spec.element_bytes,
                }
            )
        else:
            out["workloads"].append(
                {"model_id": spec.model_id, "kind": spec.kind, "command": list(spec.command)}
            )
    if manifest.affinity is not None:
        out["affinity"] = {"cores": list(manifest.affinity.core_ids)}
    if manifest.platforms or manifest.profiles:
        roofline: dict = {}
        if manifest.platforms:
            roofline["platforms"] = [
                {
                    "name": p.name,
                    "peak_gflops": p.pmax_gflops,
                    "bandwidth_gbps": p.bmax_gbps,
                    **(
                        {"llc_mb": p.llc_bytes / (1024 * 1024)}
                        if p.llc_bytes is not None
                        else {}
                    ),
                }
                for p in manifest.platforms
            ]
        if manifest.profiles:
            roofline["workloads"] = [
                {
                    "model_id": model_id,
                    "flops_per_image_gflops": w.flops_per_image_gflops,
                    "data_moved_per_image_gb": w.data_moved_per_image_gb,
                    **(
                        {"weights_mb": w.weights_bytes / (1024 * 1024)}
                        if w.weights_bytes is not None
                        else {}
                    ),
                }
                for model_id, w in manifest.profiles.items()
            ]
        out["roofline"] = roofline
    if manifest.output_dir is not None:
        out["output_dir"] = manifest.output_dir
    return out


def load_manifest(path: str) -> RunManifest:
    """Read, decode, and validate a manifest file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read manifest {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    return parse_manifest(raw, source_path=os.path.abspath(path))


def capture_environment(tool_version: str) -> dict:
    """Snapshot of the host taken at run time, stored in the result bundle."""
    return {
        "host": platform.node(),
        "platform": platform.platform(),
        "cpu_count": os.cpu_count(),
        "python": sys.version.split()[0],
        "tool_version": tool_version,
        "captured_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
