"""Edge streams from game instances and the streaming-to-protocol adapter.

Each player turns their labeled matching into a stream segment, keeping the
edges whose label matches the chosen convention; concatenating the segments
in player order gives a multigraph stream.  A space-bounded streaming
algorithm can then be replayed as a communication protocol by forwarding its
memory state at the segment boundaries, costing passes * state bits * players
bits in total.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .distributions import DihpInstance, sample_no, sample_yes
from .matchings import Edge, GroundSet, LabeledMatching

#: Keep the edges labeled +1 (the same-side edges of a planted bipartition).
KEEP_POSITIVE = "keep-positive"
#: Keep the edges labeled -1 (the edges crossing a planted bipartition).
KEEP_CROSSING = "keep-crossing"

CONVENTIONS = (KEEP_POSITIVE, KEEP_CROSSING)

MAX_EXACT_CUT_VERTICES = 24


@dataclass(frozen=True)
class EdgeStream:
    """An ordered multigraph edge stream with per-player segment lengths."""

    ground: GroundSet
    edges: tuple[Edge, ...]
    segments: tuple[int, ...]
    passes: int = 1

    def __post_init__(self):
        if sum(self.segments) != len(self.edges):
            raise ValueError("segment lengths must sum to the stream length")
        for u, v in self.edges:
            if u not in self.ground or v not in self.ground:
                raise ValueError(f"edge {(u, v)} leaves the ground set")

    def segment(self, i: int) -> tuple[Edge, ...]:
        start = sum(self.segments[:i])
        return self.edges[start : start + self.segments[i]]

    def dump_lines(self) -> Iterator[str]:
        for u, v in self.edges:
            yield f"{u}-{v}"


def build_stream(
    instance: DihpInstance, convention: str = KEEP_CROSSING
) -> EdgeStream:
    """Concatenate per-player segments of the matching edges whose label
    matches the convention, in player order."""
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    wanted = 1 if convention == KEEP_POSITIVE else -1
    edges: list[Edge] = []
    segments: list[int] = []
    for y in instance.players:
        kept = [e for e, s in y.items if s == wanted]
        edges.extend(kept)
        segments.append(len(kept))
    return EdgeStream(instance.ground, tuple(edges), tuple(segments))


def max_cut_exact(stream: EdgeStream) -> int:
    """Largest number of stream edges (with multiplicity) crossing any
    bipartition, by enumerating all 2^(n-1) sides of vertex 1."""
    n = stream.ground.n
    if n > MAX_EXACT_CUT_VERTICES:
        raise ValueError(
            f"exact cut enumeration capped at {MAX_EXACT_CUT_VERTICES} vertices"
        )
    if not stream.edges:
        return 0
    masks = np.arange(1 << (n - 1), dtype=np.int64)
    counts = np.zeros(len(masks), dtype=np.int64)
    mult: dict[Edge, int] = {}
    for e in stream.edges:
        mult[e] = mult.get(e, 0) + 1
    for (u, v), w in mult.items():
        iu, iv = stream.ground.index(u), stream.ground.index(v)
        crossing = ((masks >> iu) ^ (masks >> iv)) & 1
        counts += w * crossing
    return int(counts.max())


@dataclass(frozen=True)
class StreamingAlgorithm:
    """A state-bounded one-pass-per-scan streaming routine.

    The serialized state must fit in ``state_bits`` bits whenever it crosses
    a player boundary; ``measure_bits`` reports the current size.
    """

    init: Callable[[], int]
    step: Callable[[int, Edge], int]
    finish: Callable[[int], float]
    state_bits: int
    passes: int = 1
    measure_bits: Callable[[int], int] = staticmethod(lambda s: int(s).bit_length())

    def run(self, stream: EdgeStream) -> float:
        """Run all passes over the full stream without boundary checks."""
        state = self.init()
        for _ in range(self.passes):
            for e in stream.edges:
                state = self.step(state, e)
        return self.finish(state)


def counter_algorithm(max_edges: int, passes: int = 1) -> StreamingAlgorithm:
    """Count the stream edges in ceil(log2(max_edges + 1)) bits of state."""
    bits = max(1, (max_edges).bit_length())
    return StreamingAlgorithm(
        init=lambda: 0,
        step=lambda s, e: s + 1,
        finish=lambda s: s / 2,
        state_bits=bits,
        passes=passes,
    )


def trivial_half_approx(stream: EdgeStream) -> float:
    """|E| / 2: the output of the edge counter run over the stream."""
    return counter_algorithm(max(1, len(stream.edges))).run(stream)


def protocol_from_streaming(
    alg: StreamingAlgorithm,
    n: int,
    m: int,
    K: int,
    convention: str = KEEP_CROSSING,
    decide: Optional[Callable[[float], int]] = None,
) -> tuple[Callable[[Sequence[LabeledMatching]], int], int]:
    """Wrap a streaming algorithm as a decision function plus its cost.

    Player i resumes the scan from the state received from player i - 1; the
    state returns to player 1 between passes.  Total communication is
    passes * state_bits * K bits.  ``decide`` maps the numeric output to the
    final bit (default: nonzero means accept).
    """
    from .matchings import ground as make_ground

    gs = make_ground(n)
    cost_bits = alg.passes * alg.state_bits * K

    def decision(players: Sequence[LabeledMatching]) -> int:
        instance = DihpInstance(tuple(players), "unknown", gs)
        stream = build_stream(instance, convention)
        state = alg.init()
        for _ in range(alg.passes):
            for i in range(K):
                for e in stream.segment(i):
                    state = alg.step(state, e)
                used = alg.measure_bits(state)
                if used > alg.state_bits:
                    raise ValueError(
                        f"state needs {used} bits at a player boundary, "
                        f"budget is {alg.state_bits}"
                    )
        value = alg.finish(state)
        if decide is None:
            return int(bool(value))
        return decide(value)

    return decision, cost_bits


@dataclass(frozen=True)
class GapRow:
    trial: int
    label: str
    edges: int
    maxcut: int

    @property
    def ratio(self) -> float:
        return self.maxcut / self.edges if self.edges else 1.0

    def as_csv_row(self) -> tuple:
        return (self.trial, self.label, self.edges, self.maxcut, self.ratio)


GAP_CSV_HEADER = ("trial", "label", "edges", "maxcut", "ratio")


@dataclass(frozen=True)
class GapReport:
    rows: tuple[GapRow, ...]
    convention: str

    def mean_ratio(self, label: str) -> float:
        ratios = [r.ratio for r in self.rows if r.label == label]
        return sum(ratios) / len(ratios) if ratios else math.nan

    @property
    def separation(self) -> float:
        return self.mean_ratio("yes") - self.mean_ratio("no")


def gap_experiment(
    n: int,
    m: int,
    K: int,
    trials: int,
    convention: str,
    rng: random.Random,
) -> GapReport:
    """Exact cut values of sampled planted and uniform instances.

    Under the crossing convention every kept edge of a planted instance
    crosses the hidden bipartition, so its cut ratio is exactly 1; that
    invariant is asserted per trial.
    """
    rows = []
    for t in range(trials):
        for label, sampler in (("yes", sample_yes), ("no", sample_no)):
            inst = sampler(n, m, K, rng)
            stream = build_stream(inst, convention)
            cut = max_cut_exact(stream)
            row = GapRow(t, label, len(stream.edges), cut)
            if (
                label == "yes"
                and convention == KEEP_CROSSING
                and cut != len(stream.edges)
            ):
                raise AssertionError(
                    "a planted instance must realize every crossing edge"
                )
            rows.append(row)
    return GapReport(tuple(rows), convention)
