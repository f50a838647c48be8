"""The planted and uniform input distributions of the hidden-partition game.

A no-instance gives every player an independent uniform labeled matching.  A
yes-instance first draws a hidden bipartition x of the vertex set and labels
every sampled edge {u,v} with (-1)^(x_u + x_v), so crossing edges carry -1.
Bipartitions are carried as integer bitmasks; bit i is the side of the i-th
ground-set vertex.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .matchings import (
    Edge,
    EnumerationCapError,
    GroundSet,
    LabeledMatching,
    MatchingSpace,
    SignedEdges,
    count_matchings,
    sample_matching_support,
    sample_uniform,
    space,
)

YES = "yes"
NO = "no"


@dataclass(frozen=True)
class DihpInstance:
    """One input tuple for the K players, plus generator-side metadata.

    The witness bipartition of a yes-instance is kept for diagnostics only;
    decision functions never see it.
    """

    players: tuple[LabeledMatching, ...]
    label: str
    ground: GroundSet
    witness: Optional[int] = None

    @property
    def K(self) -> int:
        return len(self.players)

    def to_text(self) -> str:
        lines = [y.to_text() for y in self.players]
        if self.label == YES and self.witness is not None:
            bits = "".join(
                str((self.witness >> i) & 1) for i in range(self.ground.n)
            )
            lines.append(f"#witness {bits}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str, ground_set: GroundSet) -> "DihpInstance":
        players = []
        witness = None
        for line in filter(None, (ln.strip() for ln in text.splitlines())):
            if line.startswith("#witness"):
                bits = line.split()[1]
                witness = sum(1 << i for i, b in enumerate(bits) if b == "1")
            else:
                players.append(LabeledMatching.from_text(line))
        label = NO if witness is None else YES
        return cls(tuple(players), label, ground_set, witness)


def sample_no(n: int, m: int, K: int, rng: random.Random) -> DihpInstance:
    """K independent uniform labeled matchings."""
    sp = space(n, m)
    players = tuple(sample_uniform(sp, rng) for _ in range(K))
    return DihpInstance(players, NO, sp.ground)


def label_from_partition(
    support: Sequence[Edge], x_mask: int, ground_set: GroundSet
) -> LabeledMatching:
    """Label each support edge {u,v} with (-1)^(x_u + x_v)."""
    items = []
    for u, v in support:
        xu = (x_mask >> ground_set.index(u)) & 1
        xv = (x_mask >> ground_set.index(v)) & 1
        items.append(((u, v), -1 if xu != xv else 1))
    return LabeledMatching(tuple(sorted(items)))


def sample_yes(n: int, m: int, K: int, rng: random.Random) -> DihpInstance:
    """Uniform hidden bipartition, then K uniform supports labeled by it."""
    sp = space(n, m)
    x_mask = rng.getrandbits(n)
    players = tuple(
        label_from_partition(sample_matching_support(sp, rng), x_mask, sp.ground)
        for _ in range(K)
    )
    return DihpInstance(players, YES, sp.ground, witness=x_mask)


def subspace_membership(x_mask: int, constraint: SignedEdges, ground_set: GroundSet) -> bool:
    """True when x satisfies every sign constraint of the edge map.

    Edge label +1 demands equal sides, -1 demands opposite sides.
    """
    for (u, v), s in constraint.items:
        xu = (x_mask >> ground_set.index(u)) & 1
        xv = (x_mask >> ground_set.index(v)) & 1
        if (xu ^ xv) != (0 if s == 1 else 1):
            return False
    return True


def _components(vertices: Sequence[int], edges: Sequence[Edge]) -> list[list[int]]:
    adj: dict[int, list[int]] = {v: [] for v in vertices}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen: set[int] = set()
    comps = []
    for v in vertices:
        if v in seen:
            continue
        comp = []
        stack = [v]
        seen.add(v)
        while stack:
            w = stack.pop()
            comp.append(w)
            for nb in adj[w]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        comps.append(sorted(comp))
    return comps


@dataclass(frozen=True)
class AffineSubspace:
    """L(y): the bipartitions consistent with a sign constraint y.

    For a constraint whose support is a forest (matchings included) the space
    is nonempty with |L(y)| = 2^(n - |supp(y)|).  A support cycle whose sign
    product is -1 makes the space empty.
    """

    constraint: SignedEdges
    ground: GroundSet

    def contains(self, x_mask: int) -> bool:
        return subspace_membership(x_mask, self.constraint, self.ground)

    @property
    def consistent(self) -> bool:
        return next(self.members(), None) is not None

    @property
    def log2_size(self) -> int:
        """log2 |L(y)| for a consistent constraint: n minus the graph rank."""
        comps = _components(self.ground.vertices, self.constraint.support)
        rank = self.ground.n - len(comps)
        return self.ground.n - rank

    @property
    def size(self) -> int:
        return sum(1 for _ in self.members())

    def members(self) -> Iterator[int]:
        """All member bitmasks, built by propagating labels over components."""
        comps = _components(self.ground.vertices, self.constraint.support)
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in self.ground.vertices}
        for (u, v), s in self.constraint.items:
            adj[u].append((v, s))
            adj[v].append((u, s))

        # Per component: bits relative to the component root; None on conflict.
        rel_bits: list[Optional[dict[int, int]]] = []
        for comp in comps:
            bits = {comp[0]: 0}
            stack = [comp[0]]
            ok = True
            while stack:
                w = stack.pop()
                for nb, s in adj[w]:
                    want = bits[w] ^ (0 if s == 1 else 1)
                    if nb in bits:
                        if bits[nb] != want:
                            ok = False
                    else:
                        bits[nb] = want
                        stack.append(nb)
            rel_bits.append(bits if ok else None)

        if any(b is None for b in rel_bits):
            return
        k = len(comps)
        for choice in range(1 << k):
            mask = 0
            for ci, comp in enumerate(comps):
                flip = (choice >> ci) & 1
                for v in comp:
                    bit = rel_bits[ci][v] ^ flip
                    if bit:
                        mask |= 1 << self.ground.index(v)
            yield mask


def affine_member_masks(y: SignedEdges, gs: GroundSet) -> np.ndarray:
    """All bipartitions consistent with a matching constraint, as bitmasks.

    The solution set is the affine span of one base point (putting the -1
    endpoints on the other side) and one XOR generator per free vertex plus
    one per edge (flipping both endpoints together).
    """
    base = 0
    gens = []
    in_support: set[int] = set()
    for (u, v), s in y.items:
        iu, iv = gs.index(u), gs.index(v)
        in_support.update((u, v))
        if s == -1:
            base |= 1 << iv
        gens.append((1 << iu) | (1 << iv))
    for v in gs.vertices:
        if v not in in_support:
            gens.append(1 << gs.index(v))
    masks = np.array([base], dtype=np.int64)
    for g in gens:
        masks = np.concatenate([masks, masks ^ g])
    return masks


def conditional_counts(
    members: Sequence[LabeledMatching], sp: MatchingSpace
) -> tuple[list[int], int]:
    """Integer-weighted conditional distribution of bipartitions given a set.

    Returns (counts, denom) with Pr[x | A] = counts[x] / denom; counts[x] is
    the number of members whose consistent-bipartition space contains x, and
    denom = |A| * 2^(n - m).
    """
    if not members:
        raise ValueError("conditional distribution of an empty set is undefined")
    n = sp.n
    counts = np.zeros(1 << n, dtype=np.int64)
    for y in members:
        np.add.at(counts, affine_member_masks(y, sp.ground), 1)
    denom = len(members) << (n - sp.m)
    return counts.tolist(), denom


def conditional_counts_for_indices(
    sp: MatchingSpace, indices: frozenset[int]
) -> tuple[list[int], int]:
    """Cached variant of :func:`conditional_counts` keyed by element indices."""
    return _conditional_counts_cached(sp.ground.vertices, sp.m, indices)


@lru_cache(maxsize=512)
def _conditional_counts_cached(
    vertices: tuple[int, ...], m: int, indices: frozenset[int]
) -> tuple[tuple[int, ...], int]:
    sp = MatchingSpace(GroundSet(vertices), m)
    members = [sp.element(i) for i in sorted(indices)]
    counts, denom = conditional_counts(members, sp)
    return tuple(counts), denom


def conditional_probability(
    members: Sequence[LabeledMatching], sp: MatchingSpace, x_mask: int
) -> Fraction:
    """Pr[x | A]: uniform mixture over y in A of uniform measures on L(y)."""
    if not members:
        raise ValueError("conditional distribution of an empty set is undefined")
    hits = sum(
        1
        for y in members
        if subspace_membership(x_mask, y, sp.ground)
    )
    return Fraction(hits, len(members) << (sp.n - sp.m))


@dataclass(frozen=True)
class AdvantageResult:
    value: float
    exact: Optional[Fraction]
    stderr: Optional[float]
    mode: str


Decision = Callable[[tuple[LabeledMatching, ...]], int]


def iterate_no_instances(
    sp: MatchingSpace, K: int
) -> Iterator[tuple[LabeledMatching, ...]]:
    import itertools

    yield from itertools.product(sp.enumeration(), repeat=K)


def iterate_yes_instances(
    sp: MatchingSpace, K: int
) -> Iterator[tuple[LabeledMatching, ...]]:
    """Every (hidden bipartition, support tuple) combination, labeled."""
    import itertools

    supports = list(matching_supports(sp))
    for x_mask in range(1 << sp.n):
        for combo in itertools.product(supports, repeat=K):
            yield tuple(
                label_from_partition(sup, x_mask, sp.ground) for sup in combo
            )


def matching_supports(sp: MatchingSpace) -> Iterator[tuple[Edge, ...]]:
    seen = set()
    for y in sp.enumeration():
        if y.support not in seen:
            seen.add(y.support)
            yield y.support


def advantage_reference(
    decision: Decision,
    n: int,
    m: int,
    K: int,
    *,
    exact: Optional[bool] = None,
    trials: int = 2000,
    rng: Optional[random.Random] = None,
    cap: int = 250_000,
) -> AdvantageResult:
    """|Pr_yes[decision = 1] - Pr_no[decision = 1]| for an arbitrary decision.

    Exact mode enumerates the no-side over Omega^K and the yes-side over all
    (bipartition, support-tuple) pairs with rational arithmetic.  Monte Carlo
    mode pairs the support draws of the two distributions per trial to reduce
    variance, and reports a standard error.
    """
    sp = space(n, m)
    no_total = sp.count**K
    yes_total = (1 << n) * count_matchings(n, m) ** K
    if exact is None:
        exact = max(no_total, yes_total) <= cap
    if exact:
        if max(no_total, yes_total) > cap:
            raise EnumerationCapError(max(no_total, yes_total), cap)
        no_hits = sum(decision(t) for t in iterate_no_instances(sp, K))
        yes_hits = sum(decision(t) for t in iterate_yes_instances(sp, K))
        adv = abs(Fraction(yes_hits, yes_total) - Fraction(no_hits, no_total))
        return AdvantageResult(float(adv), adv, None, "exact")

    if rng is None:
        raise ValueError("Monte Carlo mode needs a seeded random source")
    yes_hits = 0
    no_hits = 0
    for _ in range(trials):
        supports = [sample_matching_support(sp, rng) for _ in range(K)]
        x_mask = rng.getrandbits(n)
        yes_players = tuple(
            label_from_partition(sup, x_mask, sp.ground) for sup in supports
        )
        no_players = tuple(
            LabeledMatching(tuple((e, rng.choice((1, -1))) for e in sup))
            for sup in supports
        )
        yes_hits += decision(yes_players)
        no_hits += decision(no_players)
    p_yes = yes_hits / trials
    p_no = no_hits / trials
    se = math.sqrt(
        p_yes * (1 - p_yes) / trials + p_no * (1 - p_no) / trials
    )
    return AdvantageResult(abs(p_yes - p_no), None, se, "monte-carlo")
