"""Communication trees over the matching space and their global refinement.

A protocol tree is a uniform-depth binary tree: each internal node names a
speaker and splits that player's current input set in two, each leaf holds an
output bit.  The refinement pass replays the tree and, whenever a speaker's
set stops being global, inserts the greedy decomposition as an extra message,
re-labeling leaves by whichever input distribution gives the leaf rectangle
more mass.  All masses are exact rationals.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .distributions import (
    conditional_counts_for_indices,
    iterate_yes_instances,
    label_from_partition,
    matching_supports,
)
from .globalness import (
    OmegaSubset,
    Rectangle,
    decompose,
    is_global,
    potential,
)
from .matchings import (
    EMPTY_RESTRICTION,
    Edge,
    LabeledMatching,
    MatchingSpace,
    SignedEdges,
    count_matchings,
)

# ---------------------------------------------------------------------------
# Protocol trees


@dataclass(frozen=True)
class TreeNode:
    """One node: either a speaker with a two-way split, or an output leaf."""

    node_id: int
    speaker: Optional[int] = None  # 0-based player index; None for leaves
    part0: Optional[frozenset[int]] = None
    part1: Optional[frozenset[int]] = None
    child0: Optional[int] = None
    child1: Optional[int] = None
    output: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return self.speaker is None


@dataclass(frozen=True)
class ProtocolTree:
    """A deterministic K-player protocol of uniform depth."""

    space: MatchingSpace
    K: int
    root: int
    nodes: dict[int, TreeNode]

    def __post_init__(self):
        self._validate()

    def _validate(self) -> None:
        depths = set()
        full = self.space.all_indices()
        stack = [(self.root, tuple(full for _ in range(self.K)), 0)]
        while stack:
            nid, factors, depth = stack.pop()
            node = self.nodes[nid]
            if node.is_leaf:
                if node.output not in (0, 1):
                    raise ValueError(f"leaf {nid} lacks a 0/1 output")
                depths.add(depth)
                continue
            if not 0 <= node.speaker < self.K:
                raise ValueError(f"node {nid}: speaker out of range")
            current = factors[node.speaker]
            if (node.part0 & node.part1) or (node.part0 | node.part1) != current:
                raise ValueError(
                    f"node {nid}: parts must partition the incoming set"
                )
            for b, part, child in (
                (0, node.part0, node.child0),
                (1, node.part1, node.child1),
            ):
                nxt = list(factors)
                nxt[node.speaker] = part
                stack.append((child, tuple(nxt), depth + 1))
        if len(depths) != 1:
            raise ValueError(f"leaves must share one depth, found {sorted(depths)}")

    @property
    def depth(self) -> int:
        d = 0
        nid = self.root
        while not self.nodes[nid].is_leaf:
            d += 1
            nid = self.nodes[nid].child0
        return d

    def route(self, players: Sequence[LabeledMatching]) -> tuple[int, int]:
        """(leaf id, output bit) for one input tuple."""
        indices = [self.space.index_of(y) for y in players]
        nid = self.root
        node = self.nodes[nid]
        while not node.is_leaf:
            bit = 0 if indices[node.speaker] in node.part0 else 1
            nid = node.child0 if bit == 0 else node.child1
            node = self.nodes[nid]
        return nid, node.output

    def leaf_rectangles(self) -> list[tuple[int, Rectangle, int]]:
        """(leaf id, rectangle, output) over all leaves; they partition
        the K-fold product space."""
        out = []
        full = self.space.all_indices()
        stack = [(self.root, tuple(full for _ in range(self.K)))]
        while stack:
            nid, factors = stack.pop()
            node = self.nodes[nid]
            if node.is_leaf:
                rect = Rectangle(
                    tuple(
                        OmegaSubset(self.space, EMPTY_RESTRICTION, f)
                        for f in factors
                    )
                )
                out.append((nid, rect, node.output))
                continue
            for part, child in ((node.part0, node.child0), (node.part1, node.child1)):
                nxt = list(factors)
                nxt[node.speaker] = part
                stack.append((child, tuple(nxt)))
        out.sort(key=lambda t: t[0])
        return out

    def to_json(self) -> str:
        payload = {
            "n": self.space.n,
            "m": self.space.m,
            "K": self.K,
            "root": self.root,
            "nodes": [
                {
                    "id": node.node_id,
                    "speaker": node.speaker,
                    "part0": sorted(node.part0) if node.part0 is not None else None,
                    "part1": sorted(node.part1) if node.part1 is not None else None,
                    "child0": node.child0,
                    "child1": node.child1,
                    "output": node.output,
                }
                for node in sorted(self.nodes.values(), key=lambda nd: nd.node_id)
            ],
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ProtocolTree":
        from .matchings import space as make_space

        payload = json.loads(text)
        nodes = {}
        for nd in payload["nodes"]:
            nodes[nd["id"]] = TreeNode(
                node_id=nd["id"],
                speaker=nd["speaker"],
                part0=frozenset(nd["part0"]) if nd["part0"] is not None else None,
                part1=frozenset(nd["part1"]) if nd["part1"] is not None else None,
                child0=nd["child0"],
                child1=nd["child1"],
                output=nd["output"],
            )
        return cls(
            make_space(payload["n"], payload["m"]),
            payload["K"],
            payload["root"],
            nodes,
        )


def leaf_rectangles(pi: ProtocolTree) -> list[tuple[int, Rectangle, int]]:
    return pi.leaf_rectangles()


def random_tree(
    sp: MatchingSpace, K: int, depth: int, rng: random.Random
) -> ProtocolTree:
    """A uniform-depth tree with random speakers and random balanced splits."""
    nodes: dict[int, TreeNode] = {}
    counter = itertools.count()

    def build(factors: tuple[frozenset[int], ...], d: int) -> int:
        nid = next(counter)
        if d == depth:
            nodes[nid] = TreeNode(nid, output=rng.randrange(2))
            return nid
        speaker = rng.randrange(K)
        current = sorted(factors[speaker])
        side = {i: rng.randrange(2) for i in current}
        part0 = frozenset(i for i in current if side[i] == 0)
        part1 = frozenset(current) - part0
        kids = []
        for part in (part0, part1):
            nxt = list(factors)
            nxt[speaker] = part
            kids.append(build(tuple(nxt), d + 1))
        nodes[nid] = TreeNode(nid, speaker, part0, part1, kids[0], kids[1])
        return nid

    full = sp.all_indices()
    root = build(tuple(full for _ in range(K)), 0)
    return ProtocolTree(sp, K, root, nodes)


def fixed_edge_tree(
    sp: MatchingSpace, K: int, e: Edge, sign: int = 1
) -> ProtocolTree:
    """Depth-2 probe: players 1 and 2 each reveal whether they hold edge e
    with the given sign; output 1 only when both do."""
    if K < 2:
        raise ValueError("the probe needs at least two players")
    nodes: dict[int, TreeNode] = {}
    counter = itertools.count()
    full = sp.all_indices()
    holds = frozenset(i for i in full if sp.element(i).label(e) == sign)

    def leaf(bit: int) -> int:
        nid = next(counter)
        nodes[nid] = TreeNode(nid, output=bit)
        return nid

    def player2_node(out_on_yes: int) -> int:
        nid = next(counter)
        nodes[nid] = TreeNode(
            nid, 1, holds, full - holds, leaf(out_on_yes), leaf(0)
        )
        return nid

    root = next(counter)
    nodes[root] = TreeNode(
        root, 0, holds, full - holds, player2_node(1), player2_node(0)
    )
    return ProtocolTree(sp, K, root, nodes)


# ---------------------------------------------------------------------------
# Masses of rectangles under the two input distributions


def no_mass(R: Rectangle) -> Fraction:
    return R.mass_no()


def _planted_index_table(sp: MatchingSpace) -> list[list[int]]:
    """planted[x][j]: enumeration index of support j labeled by partition x."""
    key = (sp.ground.vertices, sp.m)
    table = _PLANTED_TABLES.get(key)
    if table is None:
        supports = list(matching_supports(sp))
        table = [
            [
                sp.index_of(label_from_partition(sup, x_mask, sp.ground))
                for sup in supports
            ]
            for x_mask in range(1 << sp.n)
        ]
        _PLANTED_TABLES[key] = table
    return table


_PLANTED_TABLES: dict[tuple, list[list[int]]] = {}


def yes_mass_direct(R: Rectangle) -> Fraction:
    """Yes-distribution mass by enumerating (bipartition, support) tuples."""
    sp = R.space
    n, K = sp.n, R.K
    table = _planted_index_table(sp)
    member_sets = [f.members for f in R.factors]
    hits = 0
    for x_mask in range(1 << n):
        row = table[x_mask]
        prod = 1
        for mem in member_sets:
            cnt = sum(1 for idx in row if idx in mem)
            prod *= cnt
            if prod == 0:
                break
        hits += prod
    total = (1 << n) * len(table[0]) ** K
    return Fraction(hits, total)


def yes_mass_formula(R: Rectangle) -> Fraction:
    """Yes-distribution mass via the conditional-bipartition product formula:
    mass_no * 2^((K-1) n) * sum_x prod_i Pr[x | A_i]."""
    sp = R.space
    n, K = sp.n, R.K
    if any(f.size == 0 for f in R.factors):
        return Fraction(0)
    counts = []
    denoms = []
    for f in R.factors:
        c, d = conditional_counts_for_indices(sp, f.members)
        counts.append(c)
        denoms.append(d)
    total = 0
    for x in range(1 << n):
        prod = 1
        for c in counts:
            prod *= c[x]
            if prod == 0:
                break
        total += prod
    denom_prod = 1
    for d in denoms:
        denom_prod *= d
    correlation = Fraction(total, denom_prod)
    return R.mass_no() * (Fraction(2) ** ((K - 1) * n)) * correlation


def yes_mass_pair(R: Rectangle) -> tuple[Fraction, Fraction]:
    """(formula value, direct enumeration value) of the yes mass."""
    return yes_mass_formula(R), yes_mass_direct(R)


def advantage(pi: ProtocolTree) -> Fraction:
    """|Pr_yes[output 1] - Pr_no[output 1]| by routing every instance."""
    sp = pi.space
    no_total = sp.count**pi.K
    no_hits = 0
    for players in itertools.product(sp.enumeration(), repeat=pi.K):
        no_hits += pi.route(players)[1]
    yes_total = (1 << sp.n) * count_matchings(sp.n, sp.m) ** pi.K
    yes_hits = 0
    for players in iterate_yes_instances(sp, pi.K):
        yes_hits += pi.route(players)[1]
    return abs(Fraction(yes_hits, yes_total) - Fraction(no_hits, no_total))


def discrepancy_sum(rectangles: Sequence[Rectangle]) -> Fraction:
    """(1/2) sum over rectangles of |yes mass - no mass|."""
    total = Fraction(0)
    for R in rectangles:
        total += abs(yes_mass_formula(R) - no_mass(R))
    return total / 2


def bad_rectangle(n: int, m: int, K: int, e: Edge) -> Rectangle:
    """The fully-revealed-edge rectangle: player i holds e with sign (-1)^i.

    Its yes mass is exactly 0 (the signs contradict any single bipartition)
    while its no mass is (Psi(n, m, 1) / 2)^K, so it breaks the naive
    per-rectangle discrepancy bound; it is not a global rectangle.
    """
    if K < 2:
        raise ValueError("need at least two players")
    from .matchings import space as make_space

    sp = make_space(n, m)
    factors = []
    for i in range(1, K + 1):
        sign = -1 if i % 2 == 1 else 1
        factors.append(
            OmegaSubset.from_predicate(sp, lambda y, s=sign: y.label(e) == s)
        )
    return Rectangle(tuple(factors))


# ---------------------------------------------------------------------------
# Global refinement


@dataclass
class TraceNode:
    """A restriction-rectangle pair produced after some number of rounds."""

    node_id: int
    depth: int
    rectangle: Rectangle
    parent: Optional[int]
    origin: int  # id of the protocol-tree node this state sits at
    children: list[int] = field(default_factory=list)
    output: Optional[int] = None
    mass_no: Fraction = Fraction(0)
    mass_yes: Fraction = Fraction(0)

    @property
    def zeta(self) -> tuple[LabeledMatching, ...]:
        return self.rectangle.zeta


@dataclass
class GlobalTrace:
    """The per-round record of a refined protocol."""

    space: MatchingSpace
    K: int
    rounds: int
    root: int
    nodes: dict[int, TraceNode]

    def level(self, d: int) -> list[TraceNode]:
        return [nd for nd in self.nodes.values() if nd.depth == d]

    def leaves(self) -> list[TraceNode]:
        return self.level(self.rounds)


def refine(pi: ProtocolTree) -> GlobalTrace:
    """Replay the tree, decomposing any non-global speaker set per round.

    Each round forwards the original bit and, when needed, the index of the
    decomposition piece containing the speaker's input.  Leaf outputs are
    re-labeled to 1 exactly when the leaf rectangle has at least as much
    yes mass as no mass, which can only increase the advantage.
    """
    sp = pi.space
    nodes: dict[int, TraceNode] = {}
    counter = itertools.count()

    def new_node(depth, factors, parent, origin) -> int:
        nid = next(counter)
        rect = Rectangle(tuple(factors))
        nodes[nid] = TraceNode(nid, depth, rect, parent, origin)
        if parent is not None:
            nodes[parent].children.append(nid)
        return nid

    full = OmegaSubset.full(sp)
    root = new_node(0, tuple(full for _ in range(pi.K)), None, pi.root)

    def walk(trace_id: int, tree_id: int, depth: int) -> None:
        tnode = pi.nodes[tree_id]
        state = nodes[trace_id]
        if tnode.is_leaf:
            state.mass_no = no_mass(state.rectangle)
            state.mass_yes = yes_mass_formula(state.rectangle)
            state.output = 1 if state.mass_yes >= state.mass_no else 0
            return
        speaker = tnode.speaker
        current = state.rectangle.factors[speaker]
        for part, child_tree in (
            (tnode.part0, tnode.child0),
            (tnode.part1, tnode.child1),
        ):
            after_bit = current.members & part
            if not after_bit:
                continue
            candidate = current.with_members(after_bit)
            if is_global(candidate)[0]:
                pieces = [(candidate, candidate.base)]
            else:
                pieces = decompose(candidate, verify=False)
            for piece, _z in pieces:
                factors = list(state.rectangle.factors)
                factors[speaker] = piece
                child_id = new_node(depth + 1, tuple(factors), trace_id, child_tree)
                walk(child_id, child_tree, depth + 1)

    walk(root, pi.root, 0)
    return GlobalTrace(sp, pi.K, pi.depth, root, nodes)


def route_trace(trace: GlobalTrace, players: Sequence[LabeledMatching]) -> tuple[int, int]:
    """(leaf id, output) for one input tuple under the refined protocol."""
    indices = [trace.space.index_of(y) for y in players]
    nid = trace.root
    while nid is not None:
        node = trace.nodes[nid]
        if node.depth == trace.rounds:
            return nid, node.output
        nxt = None
        for cid in node.children:
            child = trace.nodes[cid]
            if all(
                indices[i] in child.rectangle.factors[i].members
                for i in range(trace.K)
            ):
                nxt = cid
                break
        if nxt is None:
            raise AssertionError("refined rounds must cover every input")
        nid = nxt
    raise AssertionError("unreachable")


def trace_advantage(trace: GlobalTrace) -> Fraction:
    """|Pr_yes[output 1] - Pr_no[output 1]| from the recorded leaf masses."""
    yes = Fraction(0)
    no = Fraction(0)
    for leaf in trace.leaves():
        if leaf.output == 1:
            yes += leaf.mass_yes
            no += leaf.mass_no
    return abs(yes - no)


@dataclass
class TraceReport:
    violations: list[str]
    max_round_growth: float
    depth_weighted_potentials: list[float]
    cumulative_ok: bool

    @property
    def ok(self) -> bool:
        return not self.violations and self.cumulative_ok


def verify_global_trace(trace: GlobalTrace, tol: float = 1e-9) -> TraceReport:
    """Check globality, subsumption, and potential growth round by round.

    Per round every recorded rectangle must be global for its restrictions,
    restrictions must subsume their parents', and the mass-weighted potential
    of the children may exceed the parent's by at most 3; cumulatively the
    weighted potential after d rounds stays at most 3 d.
    """
    violations: list[str] = []
    max_growth = float("-inf")
    for node in trace.nodes.values():
        if not all(is_global(f)[0] for f in node.rectangle.factors):
            violations.append(f"node {node.node_id}: rectangle is not global")
        if node.parent is not None:
            parent = trace.nodes[node.parent]
            for zc, zp in zip(node.zeta, parent.zeta):
                if not zc.subsumes(zp):
                    violations.append(
                        f"node {node.node_id}: restriction does not subsume parent"
                    )
    for node in trace.nodes.values():
        if not node.children:
            continue
        p_parent = potential(node.rectangle)
        weighted = sum(
            (trace.nodes[c].rectangle.size / node.rectangle.size)
            * potential(trace.nodes[c].rectangle)
            for c in node.children
        )
        growth = weighted - p_parent
        max_growth = max(max_growth, growth)
        if growth > 3 + tol:
            violations.append(
                f"node {node.node_id}: round potential growth {growth:.6f} > 3"
            )
    total = trace.space.count**trace.K
    per_depth = []
    cumulative_ok = True
    for d in range(trace.rounds + 1):
        weighted = sum(
            (nd.rectangle.size / total) * potential(nd.rectangle)
            for nd in trace.level(d)
        )
        per_depth.append(weighted)
        if weighted > 3 * d + tol:
            cumulative_ok = False
    return TraceReport(
        violations,
        max_growth if max_growth > float("-inf") else 0.0,
        per_depth,
        cumulative_ok,
    )


def trace_csv_rows(trace: GlobalTrace) -> Iterator[tuple]:
    """Rows (round, rectangle id, total restriction size, potential,
    mass_no, mass_yes) for every recorded pair."""
    for d in range(trace.rounds + 1):
        for node in sorted(trace.level(d), key=lambda nd: nd.node_id):
            rect = node.rectangle
            yield (
                d,
                node.node_id,
                rect.zeta_size,
                potential(rect),
                float(no_mass(rect)),
                float(node.mass_yes)
                if node.output is not None
                else float(yes_mass_formula(rect)),
            )


# ---------------------------------------------------------------------------
# Side conditions on restricted rectangles


def _forest_and_disjoint(zeta: Sequence[SignedEdges]) -> tuple[bool, bool]:
    """(supports pairwise disjoint, union acyclic) for a restriction tuple."""
    all_edges: list[Edge] = []
    disjoint = True
    seen_edges: set[Edge] = set()
    for z in zeta:
        for e in z.support:
            if e in seen_edges:
                disjoint = False
            seen_edges.add(e)
            all_edges.append(e)
    parent: dict[int, int] = {}

    def find(v):
        while parent.setdefault(v, v) != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    acyclic = True
    for u, v in set(all_edges):
        ru, rv = find(u), find(v)
        if ru == rv:
            acyclic = False
        else:
            parent[ru] = rv
    return disjoint, acyclic


def cycle_event_mass(R: Rectangle) -> dict:
    """Mass of tuples whose fresh support hits an edge inside N(zeta).

    Returns the exact event mass, the closed-form ceiling
    mass_no * C(2 |zeta|, 2) * 8 m K / n, and whether the smallness
    precondition |zeta| <= m K / 10 held; the ceiling is asserted.
    """
    sp = R.space
    zeta = R.zeta
    nbhd = frozenset().union(*[z.neighborhood() for z in zeta]) if zeta else frozenset()
    bad_edges = {
        e
        for e in itertools.combinations(sorted(nbhd), 2)
    }
    clean_sizes = []
    for f, z in zip(R.factors, zeta):
        z_support = set(z.support)
        clean = 0
        for y in f.elements():
            fresh = [e for e in y.support if e not in z_support]
            if not any(e in bad_edges for e in fresh):
                clean += 1
        clean_sizes.append(clean)
    clean_prod = 1
    for c in clean_sizes:
        clean_prod *= c
    direct = R.mass_no() - Fraction(clean_prod, sp.count ** R.K)
    zsize = R.zeta_size
    pairs = zsize * (2 * zsize - 1)  # C(2|zeta|, 2)
    bound = float(R.mass_no()) * pairs * 8 * sp.m * R.K / sp.n
    if float(direct) > bound + 1e-12:
        raise AssertionError(
            f"cycle event mass {float(direct)} exceeds the ceiling {bound}"
        )
    return {
        "direct": direct,
        "bound": bound,
        "precondition_met": 10 * zsize <= sp.m * R.K,
    }


def classify_leaves(trace: GlobalTrace, gamma: Optional[float] = None) -> dict:
    """Sort the leaf pairs into the high-potential / tangled / clean buckets.

    High potential means p exceeds 1000 * gamma * n^(1/3) (gamma defaults to
    rounds / n^(1/3)); tangled means the restriction supports overlap or
    their union has a cycle; the rest are clean, and for those the relative
    yes/no gap is reported.  Diagnostic only: the thresholds come from an
    asymptotic argument and are vacuous at desk scale.
    """
    n_cuberoot = trace.space.n ** (1 / 3)
    if gamma is None:
        gamma = trace.rounds / n_cuberoot
    threshold = 1e3 * gamma * n_cuberoot
    masses = {"high_potential": Fraction(0), "tangled": Fraction(0), "clean": Fraction(0)}
    worst_clean_gap = 0.0
    for leaf in trace.leaves():
        rect = leaf.rectangle
        p = potential(rect)
        disjoint, acyclic = _forest_and_disjoint(leaf.zeta)
        if p >= threshold:
            masses["high_potential"] += rect.mass_no()
        elif not (disjoint and acyclic):
            masses["tangled"] += rect.mass_no()
        else:
            masses["clean"] += rect.mass_no()
            mass_no = no_mass(rect)
            if mass_no > 0:
                gap = abs(float((leaf.mass_yes - mass_no) / mass_no))
                worst_clean_gap = max(worst_clean_gap, gap)
    return {
        "gamma": gamma,
        "potential_threshold": threshold,
        "mass_high_potential": float(masses["high_potential"]),
        "mass_tangled": float(masses["tangled"]),
        "mass_clean": float(masses["clean"]),
        "worst_clean_relative_gap": worst_clean_gap,
    }
