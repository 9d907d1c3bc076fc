"""CPU affinity control for the benchmark process.

Pinning restricts the harness (and every workload it spawns, which inherit
the mask) to an explicit core set. Hosts without an affinity API are
tolerated: callers record the run as unpinned and proceed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import InvalidCore, UnsupportedPlatform


@dataclass(frozen=True)
class AffinityMask:
    """Ordered, unique list of logical CPU ids."""

    core_ids: tuple[int, ...]

    def __post_init__(self):
        cores = tuple(int(c) for c in self.core_ids)
        object.__setattr__(self, "core_ids", cores)
        if len(cores) == 0:
            raise InvalidCore("affinity mask must name at least one core")
        if len(set(cores)) != len(cores):
            raise InvalidCore("affinity mask ids must be unique")
        if any(c < 0 for c in cores):
            raise InvalidCore("affinity mask ids must be non-negative")


def parse_core_list(text: str) -> AffinityMask:
    """Parse a taskset-style core list such as ``0-3`` or ``0,2,4-7``."""
    ids: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo_s, _, hi_s = part.partition("-")
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise InvalidCore(f"bad core range {part!r}") from None
            if hi < lo:
                raise InvalidCore(f"bad core range {part!r}")
            ids.extend(range(lo, hi + 1))
        else:
            try:
                ids.append(int(part))
            except ValueError:
                raise InvalidCore(f"bad core id {part!r}") from None
    return AffinityMask(tuple(ids))


def set_affinity(mask: AffinityMask) -> AffinityMask:
    """Restrict the current process to exactly ``mask`` and return the mask
    read back from the OS."""
    if not hasattr(os, "sched_setaffinity"):
        raise UnsupportedPlatform("host exposes no CPU-affinity API")
    ncpu = os.cpu_count() or 0
    for core in mask.core_ids:
        if core >= ncpu:
            raise InvalidCore(f"core id {core} out of range on a {ncpu}-core host")
    try:
        os.sched_setaffinity(0, set(mask.core_ids))
    except OSError as exc:
        raise InvalidCore(f"kernel rejected affinity mask {mask.core_ids}: {exc}") from exc
    return read_affinity()


def read_affinity() -> AffinityMask:
    """The current process affinity mask as the OS reports it."""
    if not hasattr(os, "sched_getaffinity"):
        raise UnsupportedPlatform("host exposes no CPU-affinity API")
    return AffinityMask(tuple(sorted(os.sched_getaffinity(0))))
