"""Fourier analysis on constraint subspaces of the Boolean cube.

An acyclic sign constraint z carves out the affine subspace of bipartitions
consistent with it.  Grouping vertices by the connected components of the
constraint graph and fixing a base string by path sums identifies that
subspace with a smaller cube, where the usual Walsh expansion applies.  The
module also houses the two-regime coefficient-decay envelope and the
coefficient identities that move between the matching space and the cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .distributions import conditional_counts_for_indices
from .fourier_omega import OmegaFunction, correlation, psi
from .globalness import OmegaSubset
from .matchings import Edge, GroundSet, SignedEdges, edge

MAX_DENSE_DIM = 24


class CycleError(ValueError):
    """Raised when a constraint expected to be acyclic contains a cycle."""

    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__(f"constraint support contains the cycle {cycle}")


@dataclass(frozen=True)
class PartitionSubspace:
    """V(B, b): bipartitions x with x_i + b_i constant on every block of B.

    Blocks are stored sorted by their minimum vertex; the base string b is a
    bit per ground-set position.  The subspace has exactly 2^k members for k
    blocks, identified with the k-dimensional cube by reading one bit per
    block.
    """

    ground: GroundSet
    blocks: tuple[tuple[int, ...], ...]
    base_bits: tuple[int, ...]

    def __post_init__(self):
        flat = [v for blk in self.blocks for v in blk]
        if sorted(flat) != list(self.ground.vertices):
            raise ValueError("blocks must partition the ground set")
        if list(self.blocks) != sorted(
            (tuple(sorted(b)) for b in self.blocks), key=min
        ):
            raise ValueError("blocks must be internally sorted and ordered by minimum")
        if len(self.base_bits) != self.ground.n:
            raise ValueError("base string must have one bit per vertex")

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def size(self) -> int:
        return 1 << self.k

    @classmethod
    def full_cube(cls, ground_set: GroundSet) -> "PartitionSubspace":
        return cls(
            ground_set,
            tuple((v,) for v in ground_set.vertices),
            tuple(0 for _ in ground_set.vertices),
        )

    def contains(self, x_mask: int) -> bool:
        for blk in self.blocks:
            bits = {
                ((x_mask >> self.ground.index(v)) & 1) ^ self.base_bits[self.ground.index(v)]
                for v in blk
            }
            if len(bits) != 1:
                return False
        return True

    def identify(self, x_mask: int) -> int:
        """Canonical map into the cube: bit l is x_i + b_i on block l."""
        point = 0
        for ell, blk in enumerate(self.blocks):
            i = self.ground.index(blk[0])
            if ((x_mask >> i) & 1) ^ self.base_bits[i]:
                point |= 1 << ell
        return point

    def unidentify(self, point: int) -> int:
        """Inverse of the canonical map."""
        mask = 0
        for ell, blk in enumerate(self.blocks):
            z_bit = (point >> ell) & 1
            for v in blk:
                i = self.ground.index(v)
                if z_bit ^ self.base_bits[i]:
                    mask |= 1 << i
        return mask

    def members(self) -> Iterator[int]:
        for point in range(self.size):
            yield self.unidentify(point)

    def refines(self, coarser: "PartitionSubspace") -> bool:
        """True when every block of the coarser partition is a union of ours."""
        owner = {}
        for j, blk in enumerate(self.blocks):
            for v in blk:
                owner[v] = j
        for blk in coarser.blocks:
            fine = {owner[v] for v in blk}
            covered = sorted(v for j in fine for v in self.blocks[j])
            if covered != sorted(blk):
                return False
        return True


def subspace_from_constraint(
    ground_set: GroundSet, z: SignedEdges
) -> PartitionSubspace:
    """Blocks from the connected components of the constraint graph; base
    bits by summing edge parities along paths from each component's minimum
    vertex.  A support cycle raises, with the cycle in the message."""
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in ground_set.vertices}
    for (u, v), s in z.items:
        adj[u].append((v, s))
        adj[v].append((u, s))

    seen: dict[int, int] = {}
    parent: dict[int, Optional[int]] = {}
    blocks: list[tuple[int, ...]] = []
    bits = [0] * ground_set.n

    def visit(w: int, comp: list[int]) -> None:
        comp.append(w)
        for nb, s in adj[w]:
            if nb == parent[w]:
                continue
            if nb in seen:
                # DFS makes any other seen neighbor an ancestor: report the
                # tree path from w back to it as the cycle.
                cycle = [w]
                cur = w
                while cur != nb:
                    cur = parent[cur]
                    cycle.append(cur)
                raise CycleError(cycle)
            seen[nb] = seen[w] ^ (0 if s == 1 else 1)
            parent[nb] = w
            visit(nb, comp)

    for root in ground_set.vertices:
        if root in seen:
            continue
        seen[root] = 0
        parent[root] = None
        comp: list[int] = []
        visit(root, comp)
        blocks.append(tuple(sorted(comp)))
        for v in comp:
            bits[ground_set.index(v)] = seen[v]
    blocks.sort(key=min)
    return PartitionSubspace(ground_set, tuple(blocks), tuple(bits))


def subspace_pair_from_constraints(
    ground_set: GroundSet, z_fine: SignedEdges, z_coarse: SignedEdges
) -> tuple[PartitionSubspace, PartitionSubspace]:
    """(fine, coarse) subspaces for nested constraints, sharing one base.

    The coarse constraint must subsume the fine one; both partitions reuse
    the coarse base string, which satisfies the fine constraints as well, so
    the fine subspace still equals the fine constraint's solution set.
    """
    if not z_coarse.subsumes(z_fine):
        raise ValueError("the coarse constraint must subsume the fine one")
    coarse = subspace_from_constraint(ground_set, z_coarse)
    fine_blocks = subspace_from_constraint(ground_set, z_fine).blocks
    fine = PartitionSubspace(ground_set, fine_blocks, coarse.base_bits)
    return fine, coarse


# ---------------------------------------------------------------------------
# Dense cube functions and the Walsh expansion


@dataclass
class CubeFunction:
    """A dense real function on a k-dimensional cube, optionally carried on a
    partition subspace (values indexed by the canonical identification)."""

    k: int
    values: np.ndarray
    subspace: Optional[PartitionSubspace] = None

    def __post_init__(self):
        if self.k > MAX_DENSE_DIM:
            raise ValueError(f"dense representation capped at k = {MAX_DENSE_DIM}")
        if len(self.values) != (1 << self.k):
            raise ValueError("value vector must have length 2^k")

    @classmethod
    def on_subspace(cls, sub: PartitionSubspace, fn) -> "CubeFunction":
        vals = np.empty(sub.size)
        for point in range(sub.size):
            vals[point] = fn(sub.unidentify(point))
        return cls(sub.k, vals, sub)


def walsh_transform(values: np.ndarray) -> np.ndarray:
    """Unnormalized fast transform: out[S] = sum_x f(x) (-1)^|S & x|."""
    out = np.array(values, dtype=float)
    n = len(out)
    h = 1
    while h < n:
        pairs = out.reshape(-1, 2 * h)
        a = pairs[:, :h].copy()
        b = pairs[:, h:].copy()
        pairs[:, :h] = a + b
        pairs[:, h:] = a - b
        h *= 2
    return out


def walsh_transform_naive(values: Sequence[float]) -> np.ndarray:
    """Quadratic-time oracle for the fast transform."""
    n = len(values)
    out = np.zeros(n)
    for S in range(n):
        acc = 0.0
        for x in range(n):
            acc += values[x] * (-1) ** bin(S & x).count("1")
        out[S] = acc
    return out


def fourier(f: CubeFunction) -> np.ndarray:
    """Coefficients f_hat(S) = 2^-k sum_x f(x) chi_S(x), indexed by mask."""
    return walsh_transform(f.values) / (1 << f.k)


def inverse_fourier(coeffs: np.ndarray) -> np.ndarray:
    return walsh_transform(coeffs)


def degree_part(f: CubeFunction, d: int) -> CubeFunction:
    """The sum of the Walsh terms with |S| = d."""
    coeffs = fourier(f)
    keep = np.array([bin(S).count("1") == d for S in range(1 << f.k)])
    return CubeFunction(f.k, inverse_fourier(coeffs * keep), f.subspace)


def level_weights(f: CubeFunction) -> np.ndarray:
    """||f^{=j}||_2^2 for j = 0..k, from the coefficient squares."""
    coeffs = fourier(f)
    weights = np.zeros(f.k + 1)
    for S in range(1 << f.k):
        weights[bin(S).count("1")] += coeffs[S] ** 2
    return weights


def k_norm(f: CubeFunction, K: int) -> float:
    """(E |f|^K)^(1/K) under the uniform measure on the domain."""
    if K < 1:
        raise ValueError("the norm order must be at least 1")
    return float(np.mean(np.abs(f.values) ** K) ** (1 / K))


# ---------------------------------------------------------------------------
# The decay envelope


def envelope(n: int, d: int, w: float) -> float:
    """Two-regime coefficient-weight ceiling F(n, d, w).

    Equals (w/n)^d up to level w, then (d/(4n))^d 2^(2w); level 0 is 1.
    """
    if d == 0:
        return 1.0
    if not 0 < w < n:
        raise ValueError("need 0 < w < n")
    if d <= w:
        return (w / n) ** d
    return (d / (4 * n)) ** d * 2 ** (2 * w)


@dataclass(frozen=True)
class DecayRow:
    d: int
    weight: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.weight <= self.bound * (1 + 1e-9) + 1e-15


@dataclass(frozen=True)
class DecayReport:
    rows: tuple[DecayRow, ...]
    odd_levels_vanish: bool
    first_violation: Optional[int]

    @property
    def ok(self) -> bool:
        return self.first_violation is None and self.odd_levels_vanish


def is_decaying(
    f: CubeFunction, w: float, delta: float, c: float, tol: float = 1e-12
) -> DecayReport:
    """Check the decaying predicate: mean square at most delta, odd levels
    zero, and every even level 2d weighing at most c^-d F(k, d, w)."""
    weights = level_weights(f)
    k = f.k
    odd_ok = all(weights[j] <= tol for j in range(1, k + 1, 2))
    rows = [DecayRow(0, float(weights[0]), delta)]
    for d in range(1, k // 2 + 1):
        rows.append(
            DecayRow(d, float(weights[2 * d]), (c**-d) * envelope(k, d, w))
        )
    first = next((row.d for row in rows if not row.ok), None)
    if first is None and not odd_ok:
        first = next(j for j in range(1, k + 1, 2) if weights[j] > tol)
    return DecayReport(tuple(rows), odd_ok, first)


def decay_to_knorm_report(f: CubeFunction, gamma: float, delta: float, K: int) -> dict:
    """Measured K-norm against sqrt(delta + 2 gamma K^2) for a function that
    is (gamma k, delta, 1)-decaying; the comparison carries an unquantified
    vanishing term, so this is report-only."""
    report = is_decaying(f, gamma * f.k, delta, 1.0)
    measured = k_norm(f, K)
    bound = math.sqrt(delta + 2 * gamma * K**2)
    return {
        "decaying": report.ok,
        "k": f.k,
        "gamma": gamma,
        "delta": delta,
        "K": K,
        "measured": measured,
        "bound": bound,
    }


# ---------------------------------------------------------------------------
# Conditional-distribution bridges


def f_from_conditional(A: OmegaSubset) -> CubeFunction:
    """f(x) = 2^n Pr[x | A] - 1 on the full cube; mean zero by construction."""
    sp = A.space
    if sp.n > 20:
        raise ValueError("dense conditional representation capped at 20 vertices")
    counts, denom = conditional_counts_for_indices(sp, A.members)
    values = (np.array(counts, dtype=float) * (1 << sp.n)) / denom - 1.0
    return CubeFunction(sp.n, values, PartitionSubspace.full_cube(sp.ground))


def perfect_matchings_of(vertices: Sequence[int]) -> list[tuple[Edge, ...]]:
    """All perfect matchings of an even vertex set."""
    verts = sorted(vertices)
    if len(verts) % 2:
        return []
    if not verts:
        return [()]
    out = []
    first, rest = verts[0], verts[1:]
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1 :]
        for sub in perfect_matchings_of(remaining):
            out.append(tuple(sorted((edge(first, partner),) + sub)))
    return out


def coefficient_bridge_check(A: OmegaSubset, S: Sequence[int]) -> tuple[float, float]:
    """Both sides of the coefficient identity for an even vertex set S:

    f_hat(S) = (|Omega| / |A|) Psi(n, m, |S|/2)^(1/2)
               sum over perfect matchings M of S of <indicator(A), chi_M>.
    """
    verts = tuple(sorted(S))
    if len(verts) == 0 or len(verts) % 2:
        raise ValueError("S must be a nonempty even vertex set")
    sp = A.space
    d = len(verts) // 2
    counts, denom = conditional_counts_for_indices(sp, A.members)
    s_mask = 0
    for v in verts:
        s_mask |= 1 << sp.ground.index(v)
    # Exact integer character sum for f_hat(S); the -1 term of f vanishes
    # against any nonempty S.
    signed = sum(
        c if bin(x & s_mask).count("1") % 2 == 0 else -c
        for x, c in enumerate(counts)
    )
    lhs = signed / denom
    phi = OmegaFunction.indicator(A)
    total = sum(correlation(phi, M) for M in perfect_matchings_of(verts))
    rhs = (
        (sp.count / A.size)
        * float(psi(sp.n, sp.m, d)) ** 0.5
        * total
    )
    return lhs, rhs


def h_from_conditional(A: OmegaSubset, z: SignedEdges) -> CubeFunction:
    """h(x) = 2^(n - |supp(base)|) Pr[x | A] - 1 on the subspace cut out by z.

    The constraint z must subsume the base restriction of A and have acyclic
    support; the result is carried on the canonical cube of that subspace.
    """
    if not z.subsumes(A.base):
        raise ValueError("the constraint must subsume the base restriction")
    sp = A.space
    sub = subspace_from_constraint(sp.ground, z)
    counts, denom = conditional_counts_for_indices(sp, A.members)
    scale = (1 << (sp.n - A.base.size)) / denom
    vals = np.empty(sub.size)
    for point in range(sub.size):
        vals[point] = counts[sub.unidentify(point)] * scale - 1.0
    return CubeFunction(sub.k, vals, sub)


def knorm_bound_report(A: OmegaSubset, z: SignedEdges, K: int) -> dict:
    """Measured K-norm of the centered conditional against the closed-form
    sqrt(4 eta gamma^2 K^2 + 4 eta + 2 gamma); report-only (the bound carries
    an unquantified vanishing term)."""
    sp = A.space
    h = h_from_conditional(A, z)
    n_cuberoot = sp.n ** (1 / 3)
    gamma = z.size / n_cuberoot
    eta = (
        math.log2(A.base_space_size / A.size) / n_cuberoot if A.size else math.inf
    )
    bound = math.sqrt(4 * eta * gamma**2 * K**2 + 4 * eta + 2 * gamma)
    return {
        "K": K,
        "gamma": gamma,
        "eta": eta,
        "measured": k_norm(h, K),
        "bound": bound,
        "preconditions_met": 0 < gamma < 0.1 and 0 < eta < 0.1,
    }


# ---------------------------------------------------------------------------
# Unrefinement of partitions


@dataclass(frozen=True)
class UnrefinementReport:
    max_error: float
    families_disjoint: bool
    checked: int

    @property
    def ok(self) -> bool:
        return self.max_error <= 1e-12 and self.families_disjoint


def unrefinement_check(
    g: CubeFunction, coarser: PartitionSubspace
) -> UnrefinementReport:
    """Verify the coefficient identity under merging of partition blocks.

    With g on the finer subspace and h its restriction to the coarser one,
    each coarse coefficient h_hat(S) must equal the sum of g_hat(T) over the
    fine sets T whose per-coarse-block intersection parity matches S; those
    fine-set families are pairwise disjoint across S.
    """
    fine = g.subspace
    if fine is None:
        raise ValueError("g must carry its partition subspace")
    if fine.ground != coarser.ground or fine.base_bits != coarser.base_bits:
        raise ValueError("both partitions must share the ground set and base string")
    if not fine.refines(coarser):
        raise ValueError("the target partition must be coarser than g's")
    parent = {}
    for j, blk in enumerate(fine.blocks):
        v = blk[0]
        for ell, cblk in enumerate(coarser.blocks):
            if v in cblk:
                parent[j] = ell
                break

    h = CubeFunction.on_subspace(
        coarser, lambda mask: g.values[fine.identify(mask)]
    )
    h_hat = fourier(h)
    g_hat = fourier(g)

    sums = np.zeros(1 << coarser.k)
    seen_T: set[int] = set()
    for T in range(1 << fine.k):
        S = 0
        for j in range(fine.k):
            if (T >> j) & 1:
                S ^= 1 << parent[j]
        sums[S] += g_hat[T]
        seen_T.add(T)
    families_disjoint = len(seen_T) == 1 << fine.k
    max_error = float(np.max(np.abs(h_hat - sums)))
    return UnrefinementReport(max_error, families_disjoint, 1 << coarser.k)


def coefficient_dump_rows(f: CubeFunction) -> Iterator[tuple]:
    """Rows (level, members of S, coefficient) sorted by mask."""
    coeffs = fourier(f)
    for S in range(1 << f.k):
        ids = [j for j in range(f.k) if (S >> j) & 1]
        yield (bin(S).count("1"), " ".join(map(str, ids)), float(coeffs[S]))
