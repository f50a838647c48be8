"""Density globalness of matching sets and the greedy decomposition.

A set A inside a restricted space is global when no further restriction can
raise its relative density by more than a factor of 2 per fixed edge.  Sets
that are not global are split by repeatedly extracting the densest violating
restriction (largest support first, lexicographic tie-break), which yields
global pieces whose weighted potential exceeds the original by at most 2.
All density comparisons are exact rationals; powers of 2 stay exact.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

from .matchings import (
    EMPTY_RESTRICTION,
    LabeledMatching,
    MatchingSpace,
    SignedEdges,
)


@dataclass(frozen=True)
class OmegaSubset:
    """A subset of the restricted space below a base restriction.

    Members are indices into the canonical enumeration of the full space, so
    intersections across different restrictions are plain set operations.
    """

    space: MatchingSpace
    base: LabeledMatching
    members: frozenset[int]

    def __post_init__(self):
        allowed = self.space.restriction_indices(self.base)
        if not self.members <= allowed:
            raise ValueError("members must all agree with the base restriction")

    @classmethod
    def full(cls, sp: MatchingSpace, base: LabeledMatching = EMPTY_RESTRICTION) -> "OmegaSubset":
        return cls(sp, base, sp.restriction_indices(base))

    @classmethod
    def from_elements(
        cls, sp: MatchingSpace, elements, base: LabeledMatching = EMPTY_RESTRICTION
    ) -> "OmegaSubset":
        return cls(sp, base, frozenset(sp.index_of(y) for y in elements))

    @classmethod
    def from_predicate(
        cls, sp: MatchingSpace, pred, base: LabeledMatching = EMPTY_RESTRICTION
    ) -> "OmegaSubset":
        idx = frozenset(
            i for i in sp.restriction_indices(base) if pred(sp.element(i))
        )
        return cls(sp, base, idx)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def base_space_size(self) -> int:
        return len(self.space.restriction_indices(self.base))

    @property
    def density(self) -> Fraction:
        """|A| / |Omega_base|."""
        return Fraction(self.size, self.base_space_size)

    def elements(self) -> tuple[LabeledMatching, ...]:
        return tuple(self.space.element(i) for i in sorted(self.members))

    def mass_no(self) -> Fraction:
        """|A| / |Omega|, the uniform mass of the set in the full space."""
        return Fraction(self.size, self.space.count)

    def with_members(self, members: frozenset[int]) -> "OmegaSubset":
        return OmegaSubset(self.space, self.base, members)


def _restriction_sort_key(z: LabeledMatching):
    # Lexicographic by the sorted edge list, then by the sign vector with +1
    # ordered before -1 (matching the enumeration convention).
    return (z.support, tuple(0 if s == 1 else 1 for _, s in z.items))


def subsuming_restrictions(
    sp: MatchingSpace, base: LabeledMatching, size: int
) -> list[LabeledMatching]:
    """All restrictions of the given support size that subsume the base."""
    extra = size - base.size
    if extra < 0:
        return []
    if extra == 0:
        return [base]
    blocked = base.neighborhood()
    free = [v for v in sp.ground.vertices if v not in blocked]
    out = []
    for support in itertools.combinations(
        itertools.combinations(free, 2), extra
    ):  # pruned below to vertex-disjoint edge sets
        seen: set[int] = set()
        ok = True
        for u, v in support:
            if u in seen or v in seen:
                ok = False
                break
            seen.update((u, v))
        if not ok:
            continue
        for signs in itertools.product((1, -1), repeat=extra):
            merged = base.union(SignedEdges.from_pairs(zip(support, signs)))
            out.append(LabeledMatching(merged.items))
    out.sort(key=_restriction_sort_key)
    return out


def find_violating_restriction(
    A: OmegaSubset, order: str = "largest"
) -> Optional[LabeledMatching]:
    """A restriction whose density violates globalness, or None.

    Scans support sizes in decreasing order (``largest``, the extraction rule
    of the decomposition) or increasing order (``smallest``, the most
    readable diagnostic witness); within the first size that violates, the
    lexicographically smallest violator by (edge list, sign vector) is
    returned, which makes both uses fully deterministic.
    """
    if A.size == 0:
        return None
    base_density = A.density
    base_size = A.base.size
    sizes = range(A.space.m, base_size - 1, -1)
    if order == "smallest":
        sizes = range(base_size, A.space.m + 1)
    elif order != "largest":
        raise ValueError(f"unknown search order {order!r}")
    for size in sizes:
        for z in subsuming_restrictions(A.space, A.base, size):
            z_indices = A.space.restriction_indices(z)
            hit = len(A.members & z_indices)
            if Fraction(hit, len(z_indices)) > (
                Fraction(2) ** (size - base_size)
            ) * base_density:
                return z
    return None


def is_global(A: OmegaSubset) -> tuple[bool, Optional[LabeledMatching]]:
    """Whether A is global below its base; a smallest witness when not."""
    witness = find_violating_restriction(A, order="smallest")
    return witness is None, witness


def decompose(
    A: OmegaSubset, verify: bool = True
) -> list[tuple[OmegaSubset, LabeledMatching]]:
    """Split A into restriction-global pieces by greedy extraction.

    Every returned piece is global below its restriction, the pieces
    partition A, and the extraction density strictly beats the globalness
    bound at each step (asserted).  With ``verify`` each piece is re-checked
    against the exhaustive restriction scan.
    """
    if A.size == 0:
        raise ValueError("cannot decompose an empty set")
    pieces: list[tuple[OmegaSubset, LabeledMatching]] = []
    remaining = A.members
    base_space = A.base_space_size
    while remaining:
        current = A.with_members(remaining)
        z = find_violating_restriction(current)
        if z is None:
            pieces.append((current, A.base))
            remaining = frozenset()
            break
        z_indices = A.space.restriction_indices(z)
        extracted = remaining & z_indices
        # Extraction monotonicity: the chosen restriction strictly beats the
        # globalness bound for the current remainder.
        assert Fraction(len(extracted), len(z_indices)) > (
            Fraction(2) ** (z.size - A.base.size)
        ) * Fraction(len(remaining), base_space)
        pieces.append((OmegaSubset(A.space, z, extracted), z))
        remaining = remaining - extracted
    if verify:
        for piece, z in pieces:
            ok, witness = is_global(piece)
            if not ok:
                raise AssertionError(
                    f"piece under {z} is not global; witness {witness}"
                )
    return pieces


def log2_fraction(q: Fraction) -> float:
    return math.log2(q.numerator) - math.log2(q.denominator)


def piece_potential(piece: OmegaSubset, z: LabeledMatching) -> float:
    """|supp(z)| + log2(|Omega_z| / |piece|) for a single player."""
    if piece.size == 0:
        raise ValueError("potential of an empty factor is undefined")
    return z.size + log2_fraction(Fraction(piece.base_space_size, piece.size))


def decomposition_potential_sides(
    A: OmegaSubset, pieces: list[tuple[OmegaSubset, LabeledMatching]]
) -> tuple[float, float]:
    """(weighted potential of the pieces, potential of A plus 2)."""
    lhs = sum(
        (piece.size / A.size) * piece_potential(piece, z) for piece, z in pieces
    )
    rhs = piece_potential(A, A.base) + 2
    return lhs, rhs


@dataclass(frozen=True)
class Rectangle:
    """A product of per-player subsets, each below its own restriction."""

    factors: tuple[OmegaSubset, ...]

    def __post_init__(self):
        spaces = {f.space for f in self.factors}
        if len(spaces) != 1:
            raise ValueError("all factors must live in the same space")

    @property
    def space(self) -> MatchingSpace:
        return self.factors[0].space

    @property
    def K(self) -> int:
        return len(self.factors)

    @property
    def zeta(self) -> tuple[LabeledMatching, ...]:
        return tuple(f.base for f in self.factors)

    @property
    def zeta_size(self) -> int:
        return sum(z.size for z in self.zeta)

    @property
    def size(self) -> int:
        prod = 1
        for f in self.factors:
            prod *= f.size
        return prod

    def mass_no(self) -> Fraction:
        """Uniform mass of the rectangle in the K-fold product space."""
        return Fraction(self.size, self.space.count ** self.K)

    @classmethod
    def full(cls, sp: MatchingSpace, K: int) -> "Rectangle":
        return cls(tuple(OmegaSubset.full(sp) for _ in range(K)))


def potential(R: Rectangle) -> float:
    """Total restriction size plus log-density deficit across players."""
    if any(f.size == 0 for f in R.factors):
        raise ValueError("potential of a rectangle with an empty factor")
    return sum(piece_potential(f, f.base) for f in R.factors)


def rectangle_is_global(R: Rectangle) -> bool:
    return all(is_global(f)[0] for f in R.factors)


def decomposition_trace_records(
    A: OmegaSubset, pieces: list[tuple[OmegaSubset, LabeledMatching]]
) -> Iterator[dict]:
    """JSON-ready records, one per extracted piece."""
    for piece, z in pieces:
        yield {
            "restriction": z.to_text(),
            "piece_size": piece.size,
            "density_ratio": float(piece.density / A.density)
            if A.density
            else None,
        }


def dump_decomposition_trace(
    A: OmegaSubset, pieces, path
) -> None:
    with open(path, "w") as fh:
        for record in decomposition_trace_records(A, pieces):
            fh.write(json.dumps(record) + "\n")
