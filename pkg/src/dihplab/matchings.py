"""Ground sets, signed edge maps, and the space of labeled matchings.

A labeled matching assigns a sign in {-1,+1} to each edge of a vertex-disjoint
edge set.  The space Omega(n, m) of all m-edge labeled matchings on n vertices
is small enough at desk scale to enumerate outright, and every probabilistic
quantity downstream is computed against that enumeration with exact rationals.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

Edge = tuple[int, int]

#: Default ceiling on the number of elements an enumeration may produce.
DEFAULT_ENUMERATION_CAP = 10_000_000


class EnumerationCapError(RuntimeError):
    """Raised when an enumeration would exceed the configured element cap."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(
            f"enumeration requires {required} elements, above the cap of {cap}"
        )


def edge(u: int, v: int) -> Edge:
    """Canonical edge with endpoints sorted ascending."""
    if u == v:
        raise ValueError(f"self-loop {u}-{v} is not an edge")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class GroundSet:
    """An ordered set of distinct vertex ids.

    Top-level spaces use at least 2 vertices; derived spaces (after removing
    the neighborhood of a matching) may shrink below that, down to empty.
    """

    vertices: tuple[int, ...]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.vertices, self.vertices[1:])):
            raise ValueError("vertex ids must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.vertices)

    def index(self, v: int) -> int:
        return self._index_map()[v]

    @lru_cache(maxsize=None)
    def _index_map(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def __contains__(self, v: int) -> bool:
        return v in self._index_map()

    def all_edges(self) -> list[Edge]:
        return [edge(u, v) for u, v in itertools.combinations(self.vertices, 2)]

    def without(self, removed: Iterable[int]) -> "GroundSet":
        gone = set(removed)
        return GroundSet(tuple(v for v in self.vertices if v not in gone))


def ground(n: int) -> GroundSet:
    """The standard ground set {1, ..., n}."""
    if n < 2:
        raise ValueError("a top-level ground set needs at least 2 vertices")
    return GroundSet(tuple(range(1, n + 1)))


@dataclass(frozen=True)
class SignedEdges:
    """A partial assignment of signs to edges (a constraint).

    The support may be an arbitrary simple graph; the matching requirement is
    added by :class:`LabeledMatching`.
    """

    items: tuple[tuple[Edge, int], ...]

    def __post_init__(self):
        edges = [e for e, _ in self.items]
        if list(edges) != sorted(set(edges)):
            raise ValueError("edges must be sorted and distinct")
        for (u, v), s in self.items:
            if not u < v:
                raise ValueError(f"edge {(u, v)} is not in canonical u < v form")
            if s not in (-1, 1):
                raise ValueError(f"sign for edge {(u, v)} must be -1 or +1, got {s}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Edge, int]]) -> "SignedEdges":
        return cls(tuple(sorted((edge(u, v), s) for (u, v), s in pairs)))

    @classmethod
    def empty(cls) -> "SignedEdges":
        return cls(())

    @property
    def support(self) -> tuple[Edge, ...]:
        return tuple(e for e, _ in self.items)

    @property
    def size(self) -> int:
        return len(self.items)

    def label(self, e: Edge) -> int:
        """Sign of edge e, or 0 when e is outside the support."""
        return self._as_dict().get(e, 0)

    @lru_cache(maxsize=None)
    def _as_dict(self) -> dict[Edge, int]:
        return dict(self.items)

    def neighborhood(self) -> frozenset[int]:
        """All vertices incident to a support edge."""
        return frozenset(v for e in self.support for v in e)

    def subsumes(self, other: "SignedEdges") -> bool:
        """True when this assignment extends `other` (superset, equal labels)."""
        mine = self._as_dict()
        return all(mine.get(e) == s for e, s in other.items)

    def union(self, other: "SignedEdges") -> "SignedEdges":
        merged = dict(self.items)
        for e, s in other.items:
            if merged.setdefault(e, s) != s:
                raise ValueError(f"conflicting labels for edge {e}")
        return SignedEdges(tuple(sorted(merged.items())))

    @property
    def is_matching(self) -> bool:
        seen: set[int] = set()
        for u, v in self.support:
            if u in seen or v in seen:
                return False
            seen.update((u, v))
        return True

    def to_text(self) -> str:
        """Canonical text form: comma-separated ``u-v:s`` tokens, s in {+1,-1}."""
        return ",".join(
            f"{u}-{v}:{'+1' if s == 1 else '-1'}" for (u, v), s in self.items
        )

    def __str__(self) -> str:
        return self.to_text() or "(empty)"


class LabeledMatching(SignedEdges):
    """A signed edge map whose support is a matching."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_matching:
            raise ValueError("support edges must be pairwise vertex-disjoint")

    @classmethod
    def from_text(cls, text: str) -> "LabeledMatching":
        items = []
        for token in filter(None, (t.strip() for t in text.split(","))):
            pair, _, sign = token.partition(":")
            u, _, v = pair.partition("-")
            items.append((edge(int(u), int(v)), int(sign)))
        return cls.from_pairs(items)


EMPTY_RESTRICTION = LabeledMatching(())


def count_matchings(n: int, m: int) -> int:
    """Number of m-edge matchings on n labeled vertices, exactly.

    Closed form n! / ((n - 2m)! m! 2^m); serves as the oracle for the
    enumeration length.
    """
    if m < 0 or 2 * m > n:
        raise ValueError(f"need 0 <= 2m <= n, got n={n}, m={m}")
    return math.factorial(n) // (
        math.factorial(n - 2 * m) * math.factorial(m) * (1 << m)
    )


def _matchings_lex(vertices: tuple[int, ...], m: int) -> Iterator[tuple[Edge, ...]]:
    """All m-edge matchings, ordered lexicographically by sorted edge list."""
    if m == 0:
        yield ()
        return
    all_edges = [edge(u, v) for u, v in itertools.combinations(vertices, 2)]

    def rec(start: int, used: set[int], chosen: list[Edge]) -> Iterator[tuple[Edge, ...]]:
        if len(chosen) == m:
            yield tuple(chosen)
            return
        for i in range(start, len(all_edges)):
            u, v = all_edges[i]
            if u in used or v in used:
                continue
            chosen.append((u, v))
            used.update((u, v))
            yield from rec(i + 1, used, chosen)
            used.difference_update((u, v))
            chosen.pop()

    yield from rec(0, set(), [])


def sign_vectors(m: int) -> Iterator[tuple[int, ...]]:
    """All sign assignments for m edges; +1 sorts before -1."""
    return itertools.product((1, -1), repeat=m)


@dataclass(frozen=True)
class MatchingSpace:
    """The space of all m-edge labeled matchings over a ground set."""

    ground: GroundSet
    m: int
    cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if self.m < 0 or 2 * self.m > self.ground.n:
            raise ValueError(
                f"need 0 <= 2m <= n, got n={self.ground.n}, m={self.m}"
            )

    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def matching_count(self) -> int:
        return count_matchings(self.n, self.m)

    @property
    def count(self) -> int:
        """|Omega| = (number of supports) * 2^m."""
        return self.matching_count << self.m

    # Enumeration caches live in a module-level table keyed by (vertices, m)
    # so that equal space values share one enumeration.

    def enumeration(self) -> tuple[LabeledMatching, ...]:
        """All elements in canonical order (edge list, then sign vector)."""
        if self.count > self.cap:
            raise EnumerationCapError(self.count, self.cap)
        return _enumerate_cached(self.ground.vertices, self.m)

    def index_of(self, y: LabeledMatching) -> int:
        return _index_cached(self.ground.vertices, self.m)[y.items]

    def element(self, i: int) -> LabeledMatching:
        return self.enumeration()[i]

    def __contains__(self, y: SignedEdges) -> bool:
        return (
            y.is_matching
            and y.size == self.m
            and all(u in self.ground and v in self.ground for u, v in y.support)
        )

    def restriction_indices(self, z: SignedEdges) -> frozenset[int]:
        """Indices of all elements agreeing with the restriction z."""
        return _restriction_cached(self.ground.vertices, self.m, z.items)

    def all_indices(self) -> frozenset[int]:
        return self.restriction_indices(EMPTY_RESTRICTION)

    def without(self, S: Iterable[Edge]) -> "MatchingSpace":
        """The space on the ground set minus N(S), with matching size m - |S|."""
        edges = tuple(S)
        removed = {v for e in edges for v in e}
        return MatchingSpace(self.ground.without(removed), self.m - len(edges), self.cap)


@lru_cache(maxsize=None)
def _enumerate_cached(vertices: tuple[int, ...], m: int) -> tuple[LabeledMatching, ...]:
    out = []
    for support in _matchings_lex(vertices, m):
        for signs in sign_vectors(m):
            out.append(LabeledMatching(tuple(zip(support, signs))))
    return tuple(out)


@lru_cache(maxsize=None)
def _index_cached(vertices: tuple[int, ...], m: int) -> dict[tuple, int]:
    return {y.items: i for i, y in enumerate(_enumerate_cached(vertices, m))}


@lru_cache(maxsize=None)
def _restriction_cached(
    vertices: tuple[int, ...], m: int, z_items: tuple
) -> frozenset[int]:
    z = SignedEdges(z_items)
    elements = _enumerate_cached(vertices, m)
    return frozenset(i for i, y in enumerate(elements) if y.subsumes(z))


def space(n: int, m: int, cap: int = DEFAULT_ENUMERATION_CAP) -> MatchingSpace:
    """The space Omega(n, m) on the standard ground set {1, ..., n}."""
    return MatchingSpace(ground(n), m, cap)


def matching_size_for_alpha(alpha: float, n: int) -> int:
    """m = floor(alpha * n); the rounding convention used throughout."""
    return int(math.floor(alpha * n))


def enumerate_space(sp: MatchingSpace) -> tuple[LabeledMatching, ...]:
    """All elements of the space in canonical deterministic order."""
    return sp.enumeration()


def restricted_space(sp: MatchingSpace, z: SignedEdges) -> tuple[LabeledMatching, ...]:
    """All elements agreeing with the restriction z, in canonical order."""
    if not z.is_matching or z.size > sp.m:
        raise ValueError("restriction support must be a matching of size <= m")
    elements = sp.enumeration()
    return tuple(elements[i] for i in sorted(sp.restriction_indices(z)))


def subsumes(z: SignedEdges, z_prime: SignedEdges) -> bool:
    """True when z extends z_prime (superset support, equal labels)."""
    return z.subsumes(z_prime)


def neighborhood(z: SignedEdges) -> frozenset[int]:
    """N(z): the set of vertices incident to a support edge of z."""
    return z.neighborhood()


def sample_matching_support(
    sp: MatchingSpace, rng: random.Random
) -> tuple[Edge, ...]:
    """A uniform m-edge matching support, sampled without enumeration.

    Chooses the 2m matched vertices uniformly, then pairs them by repeatedly
    matching the smallest unpaired vertex to a uniform partner; every perfect
    matching on the chosen vertex set is equally likely.
    """
    chosen = sorted(rng.sample(sp.ground.vertices, 2 * sp.m))
    edges = []
    pool = list(chosen)
    while pool:
        u = pool.pop(0)
        v = pool.pop(rng.randrange(len(pool)))
        edges.append(edge(u, v))
    return tuple(sorted(edges))


def sample_uniform(sp: MatchingSpace, rng: random.Random) -> LabeledMatching:
    """A uniform element of the space; exact probability 1/|Omega| each."""
    support = sample_matching_support(sp, rng)
    return LabeledMatching(tuple((e, rng.choice((1, -1))) for e in support))
