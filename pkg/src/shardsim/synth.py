"""Deterministic synthetic workload generation.

Generates planted-partition traces: vertices belong to communities, records
pick a Zipf-skewed source and a destination inside the source's community
with probability 1 - inter_prob (otherwise a uniform other community). An
optional mid-trace rewiring moves a fraction of vertices to the next
community, shifting the interaction structure.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass

from shardsim.trace import CallKind, TraceRecord, VertexKind


@dataclass
class WorkloadSpec:
    vertices: int
    communities: int = 2
    inter_prob: float = 0.05
    zipf_exponent: float = 1.0
    duration: int = 14 * 86400  # trace-time seconds
    records_per_hour: float = 100.0
    start_time: int = 1_500_000_000
    block_interval: int = 15
    rewire_at: float | None = None  # fraction of duration, in (0, 1)
    rewire_frac: float = 0.5  # fraction of vertices that switch community

    def __post_init__(self) -> None:
        if self.vertices < 2:
            raise ValueError("need at least 2 vertices")
        if not 1 <= self.communities <= self.vertices:
            raise ValueError("communities must be in [1, vertices]")
        if not 0.0 <= self.inter_prob <= 1.0:
            raise ValueError("inter_prob must be in [0, 1]")
        if self.zipf_exponent < 0:
            raise ValueError("zipf_exponent must be >= 0")
        if self.duration <= 0 or self.records_per_hour <= 0:
            raise ValueError("duration and records_per_hour must be positive")
        if self.rewire_at is not None and not 0.0 < self.rewire_at < 1.0:
            raise ValueError("rewire_at must be in (0, 1)")

    @property
    def num_records(self) -> int:
        return max(1, int(self.duration / 3600 * self.records_per_hour))


def vertex_id(i: int) -> str:
    """Deterministic 40-hex-digit synthetic address for vertex index i."""
    return f"{i:040x}"


class _ZipfSampler:
    """Zipf sampling over an index list: P(rank r) proportional to 1/(r+1)^s."""

    def __init__(self, indices: list[int], s: float):
        self.indices = indices
        self.cum: list[float] = []
        acc = 0.0
        for r in range(len(indices)):
            acc += 1.0 / (r + 1) ** s
            self.cum.append(acc)

    def sample(self, rng: random.Random) -> int:
        u = rng.random() * self.cum[-1]
        return self.indices[bisect.bisect_right(self.cum, u)]


def generate_workload(spec: WorkloadSpec, seed: int = 0) -> tuple[list[TraceRecord], dict[str, int]]:
    """Build the trace and the planted community of each vertex.

    The returned ground truth is the initial membership (before any rewiring).
    Deterministic for a fixed (spec, seed).
    """
    rng = random.Random(seed)
    n, c = spec.vertices, spec.communities
    # contiguous rank blocks: community 0 holds the globally hottest vertices
    per = n // c
    membership = [min(i // per, c - 1) if per else c - 1 for i in range(n)]
    truth = {vertex_id(i): membership[i] for i in range(n)}

    def community_samplers(member: list[int]) -> tuple[_ZipfSampler, list[_ZipfSampler]]:
        groups: list[list[int]] = [[] for _ in range(c)]
        for i in range(n):
            groups[member[i]].append(i)
        global_sampler = _ZipfSampler(list(range(n)), spec.zipf_exponent)
        per_comm = [_ZipfSampler(g, spec.zipf_exponent) if g else None for g in groups]
        return global_sampler, per_comm  # type: ignore[return-value]

    global_sampler, comm_samplers = community_samplers(membership)
    rewire_time = None
    if spec.rewire_at is not None and c > 1:
        rewire_time = spec.start_time + int(spec.rewire_at * spec.duration)

    total = spec.num_records
    records: list[TraceRecord] = []
    rewired = False
    for idx in range(total):
        elapsed = idx * spec.duration // total
        timestamp = spec.start_time + elapsed
        if rewire_time is not None and not rewired and timestamp >= rewire_time:
            moved = rng.sample(range(n), int(spec.rewire_frac * n))
            for i in moved:
                membership[i] = (membership[i] + 1) % c
            global_sampler, comm_samplers = community_samplers(membership)
            rewired = True
        src = global_sampler.sample(rng)
        comm = membership[src]
        if c > 1 and rng.random() < spec.inter_prob:
            others = [j for j in range(c) if j != comm and comm_samplers[j] is not None]
            comm = rng.choice(others) if others else comm
        sampler = comm_samplers[comm]
        dst = sampler.sample(rng)
        if dst == src:  # one resample to keep self-loops rare but possible
            dst = sampler.sample(rng)
        block = elapsed // spec.block_interval
        records.append(
            TraceRecord(
                timestamp=timestamp,
                block=block,
                src=vertex_id(src),
                src_kind=VertexKind.ACCOUNT,
                dst=vertex_id(dst),
                dst_kind=VertexKind.ACCOUNT,
                call_kind=CallKind.TRANSFER,
                tx_id=f"tx{idx}",
            )
        )
    return records, truth


def write_truth(truth: dict[str, int], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vertex,community\n")
        for vertex, comm in truth.items():
            fh.write(f"{vertex},{comm}\n")
