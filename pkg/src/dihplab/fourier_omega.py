"""Fourier-type calculus on the labeled-matching space.

Characters are indexed by partial matchings S and normalized by the inverse
square root of the containment probability Psi(n, m, |S|), which makes them
an orthonormal set (not a basis; functions are stored pointwise and projected
by explicit correlation sums).  Discrete derivatives average signed label
flips over S and land in the smaller space with N(S) removed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .globalness import OmegaSubset
from .matchings import (
    Edge,
    LabeledMatching,
    MatchingSpace,
    SignedEdges,
    edge,
)

Matching = tuple[Edge, ...]


@lru_cache(maxsize=None)
def psi(n: int, m: int, d: int) -> Fraction:
    """Probability that a fixed d-matching sits inside a uniform m-matching.

    Defined by the recurrence Psi(n, m, 0) = 1 and
    Psi(n, m, d) = m / C(n, 2) * Psi(n - 2, m - 1, d - 1).
    """
    if not (0 <= d <= m and 2 * m <= n):
        raise ValueError(f"need 0 <= d <= m and 2m <= n, got n={n}, m={m}, d={d}")
    if d == 0:
        return Fraction(1)
    return Fraction(m, math.comb(n, 2)) * psi(n - 2, m - 1, d - 1)


def matchings_of_size(vertices: Sequence[int], d: int) -> list[Matching]:
    """All d-edge matchings over the vertex list, lexicographic order."""
    verts = tuple(sorted(vertices))
    out: list[Matching] = []
    all_edges = [edge(u, v) for u, v in itertools.combinations(verts, 2)]

    def rec(start: int, used: set[int], chosen: list[Edge]):
        if len(chosen) == d:
            out.append(tuple(chosen))
            return
        for i in range(start, len(all_edges)):
            u, v = all_edges[i]
            if u in used or v in used:
                continue
            chosen.append((u, v))
            used.update((u, v))
            rec(i + 1, used, chosen)
            used.difference_update((u, v))
            chosen.pop()

    rec(0, set(), [])
    return out


def partial_matchings(vertices: Sequence[int], up_to: int) -> Iterator[Matching]:
    for d in range(up_to + 1):
        yield from matchings_of_size(vertices, d)


@dataclass(frozen=True)
class OmegaFunction:
    """A real function on the enumerated space, stored densely."""

    space: MatchingSpace
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.space.count:
            raise ValueError("value vector length must equal the space size")

    @classmethod
    def from_callable(cls, sp: MatchingSpace, fn) -> "OmegaFunction":
        return cls(sp, np.array([fn(y) for y in sp.enumeration()], dtype=float))

    @classmethod
    def indicator(cls, A: OmegaSubset) -> "OmegaFunction":
        vals = np.zeros(A.space.count)
        vals[sorted(A.members)] = 1.0
        return cls(A.space, vals)

    @classmethod
    def constant(cls, sp: MatchingSpace, c: float) -> "OmegaFunction":
        return cls(sp, np.full(sp.count, float(c)))

    def p_norm(self, p: float) -> float:
        """L^p norm under the uniform measure."""
        return float(np.mean(np.abs(self.values) ** p) ** (1 / p))

    def __add__(self, other):
        return OmegaFunction(self.space, self.values + other.values)

    def __sub__(self, other):
        return OmegaFunction(self.space, self.values - other.values)

    def __mul__(self, c: float):
        return OmegaFunction(self.space, self.values * c)


def inner_product(f: OmegaFunction, g: OmegaFunction) -> float:
    """Expectation of f g under the uniform measure."""
    if f.space != g.space:
        raise ValueError("inner product of functions on different spaces")
    return float(np.dot(f.values, g.values) / len(f.values))


def character_vector(sp: MatchingSpace, S: Matching) -> np.ndarray:
    """chi_S over the enumeration: Psi^(-1/2) times the label product on S,
    zero off the support."""
    return _character_cached(sp.ground.vertices, sp.m, tuple(S))


@lru_cache(maxsize=None)
def _character_cached(vertices: tuple, m: int, S: Matching) -> np.ndarray:
    from .matchings import _enumerate_cached

    elements = _enumerate_cached(vertices, m)
    norm = float(psi(len(vertices), m, len(S))) ** -0.5
    vals = np.empty(len(elements))
    for i, y in enumerate(elements):
        prod = 1
        for e in S:
            s = y.label(e)
            if s == 0:
                prod = 0
                break
            prod *= s
        vals[i] = prod
    vals *= norm
    vals.setflags(write=False)
    return vals


def character_value(sp: MatchingSpace, S: Matching, y: LabeledMatching) -> float:
    prod = 1
    for e in S:
        s = y.label(e)
        if s == 0:
            return 0.0
        prod *= s
    return prod * float(psi(sp.n, sp.m, len(S))) ** -0.5


def correlation(f: OmegaFunction, S: Matching) -> float:
    """<f, chi_S> under the uniform measure."""
    return float(np.dot(f.values, character_vector(f.space, S)) / len(f.values))


def character_function(sp: MatchingSpace, S: Matching) -> OmegaFunction:
    return OmegaFunction(sp, character_vector(sp, S).copy())


def level_span_function(
    sp: MatchingSpace, coefficients: dict[Matching, float]
) -> OmegaFunction:
    """The function sum_M a_M chi_M for the given coefficient map."""
    vals = np.zeros(sp.count)
    for S, a in coefficients.items():
        vals += a * character_vector(sp, tuple(S))
    return OmegaFunction(sp, vals)


def derivative(f: OmegaFunction, S: Matching) -> OmegaFunction:
    """D_S f: average of sign-weighted values over the labelings of S.

    The result lives on the space with N(S) removed and matching size
    reduced by |S|.
    """
    S = tuple(sorted(S))
    if not SignedEdges.from_pairs((e, 1) for e in S).is_matching:
        raise ValueError("the derivative index must be a matching")
    sub = f.space.without(S)
    big = f.space
    out = np.zeros(sub.count)
    scale = 1 / (1 << len(S))
    for j, y in enumerate(sub.enumeration()):
        acc = 0.0
        for signs in itertools.product((1, -1), repeat=len(S)):
            embedded = LabeledMatching(
                tuple(sorted(list(y.items) + list(zip(S, signs))))
            )
            zS = 1
            for s in signs:
                zS *= s
            acc += zS * f.values[big.index_of(embedded)]
        out[j] = acc * scale
    return OmegaFunction(sub, out)


def project_level(f: OmegaFunction, d: int) -> OmegaFunction:
    """Orthogonal projection onto the span of the level-d characters."""
    if d > f.space.m:
        raise ValueError("projection level cannot exceed the matching size")
    out = np.zeros(f.space.count)
    for S in matchings_of_size(f.space.ground.vertices, d):
        vec = character_vector(f.space, S)
        out += (np.dot(f.values, vec) / len(vec)) * vec
    return OmegaFunction(f.space, out)


@dataclass(frozen=True)
class DerivativeGlobalness:
    ok: bool
    worst_S: Optional[Matching]
    worst_ratio: float


def is_derivative_global(
    f: OmegaFunction, r: float, lam: float, d: int, p: float
) -> DerivativeGlobalness:
    """Check ||D_S f||_p <= r^|S| lam for every matching S of size <= d."""
    worst_ratio = 0.0
    worst_S: Optional[Matching] = None
    for S in partial_matchings(f.space.ground.vertices, d):
        bound = (r ** len(S)) * lam
        norm = derivative(f, S).p_norm(p) if S else f.p_norm(p)
        ratio = math.inf if bound == 0 and norm > 0 else (norm / bound if bound else 0.0)
        if ratio > worst_ratio:
            worst_ratio = ratio
            worst_S = S
    return DerivativeGlobalness(worst_ratio <= 1 + 1e-12, worst_S, worst_ratio)


# ---------------------------------------------------------------------------
# Report-style evaluations of the two inequalities and the product bracket


@dataclass(frozen=True)
class HyperParams:
    """Shared parameters of the moment inequality."""

    q: int
    r: float

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if self.r <= 0:
            raise ValueError("r must be positive")

    @property
    def rho(self) -> float:
        """rho = (1 / (4 sqrt 2)) min(q^(-1/2), q^(-1) r^(-(q-1)/q))."""
        q, r = self.q, self.r
        return (1 / (4 * math.sqrt(2))) * min(
            q**-0.5, (1 / q) * r ** (-(q - 1) / q)
        )

    @property
    def beta(self) -> float:
        rho, q = self.rho, self.q
        return rho * math.sqrt(2 * q) * (
            1 + 4 * (q - 1) / math.log(1 / (rho * math.sqrt(2 * q)))
        )


@dataclass(frozen=True)
class ReportRow:
    """One (lhs, rhs) evaluation of a report-only inequality."""

    n: int
    m: int
    d: int
    q: Optional[int]
    lhs: float
    rhs: float
    preconditions_met: bool

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else math.inf

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)

    def as_csv_row(self) -> tuple:
        return (
            self.n,
            self.m,
            self.d,
            "" if self.q is None else self.q,
            self.lhs,
            self.rhs,
            self.ratio,
            self.preconditions_met,
        )


REPORT_CSV_HEADER = ("n", "m", "d", "q", "lhs", "rhs", "ratio", "preconditions_met")


@dataclass(frozen=True)
class ProductBracketReport:
    n: int
    m: int
    d: int
    rows: tuple[tuple[int, Fraction, bool], ...]  # (s, Psi(n,m,s), within bracket)
    preconditions_met: bool

    @property
    def ok(self) -> bool:
        return all(ok for _, _, ok in self.rows)


def approximate_product_report(
    n: int, m: int, d: int, allow_relaxed: bool = False
) -> ProductBracketReport:
    """Check the geometric bracket around Psi with p = Psi(n, m, d)^(1/d).

    For s <= d the value Psi(n, m, s) must lie in [p^s, (2p)^s]; for s >= d
    it must stay at most p^s.  The d-th root is irrational, so every
    comparison is done on d-th powers with exact rationals.
    """
    if d < 1:
        raise ValueError("the bracket is defined for d >= 1")
    pre = n >= 10 * m and m >= 10 * (d + 1)
    if not pre and not allow_relaxed:
        raise ValueError(
            "inputs violate n >= 10m, m >= 10(d+1); pass allow_relaxed to report anyway"
        )
    base = psi(n, m, d)
    rows = []
    for s in range(0, m + 1):
        value = psi(n, m, s)
        # value <=> p^s compared as value^d <=> base^s.
        lower_ok = value**d >= base**s
        upper_ok = value**d <= (Fraction(2) ** (s * d)) * base**s
        if s <= d:
            ok = lower_ok and upper_ok
        else:
            ok = value**d <= base**s
        rows.append((s, value, ok))
    return ProductBracketReport(n, m, d, tuple(rows), pre)


def hypercontractivity_report(
    f: OmegaFunction, d: int, q: int, r: float
) -> ReportRow:
    """Evaluate both sides of the derivative-based moment inequality.

    For f in the level-d character span:
    ||f||_2q^2q <= 2^d rho^(-2dq) ||f||_2^2 max_S (r^-|S| ||D_S f||_2)^(2q-2).
    Outside the regime n >= 10m, m >= 10(d+1) the row is report-only.
    """
    sp = f.space
    params = HyperParams(q, r)
    lhs = float(np.mean(f.values ** (2 * q)))
    norm2_sq = float(np.mean(f.values**2))
    worst = 0.0
    for S in partial_matchings(sp.ground.vertices, d):
        norm = derivative(f, S).p_norm(2) if S else math.sqrt(norm2_sq)
        worst = max(worst, (r ** -len(S)) * norm)
    rhs = (2**d) * params.rho ** (-2 * d * q) * norm2_sq * worst ** (2 * q - 2)
    pre = sp.n >= 10 * sp.m and sp.m >= 10 * (d + 1)
    return ReportRow(sp.n, sp.m, d, q, lhs, rhs, pre)


def level_d_report(A: OmegaSubset, d: int, r: float = 2.0) -> ReportRow:
    """Evaluate the projected level-d inequality for an indicator function.

    lhs = ||P^{=d} phi||_2^2, rhs = lambda1^2 (1e5 r^2 log2(l2/l1) / d)^d with
    lambda1 = ||phi||_1 and lambda2 = ||phi||_2.  Asserted only under
    n >= 10m, m >= 10(d+1), d <= log2(l2/l1); otherwise report-only.
    """
    sp = A.space
    phi = OmegaFunction.indicator(A)
    lam1 = phi.p_norm(1)
    lam2 = phi.p_norm(2)
    lhs = float(np.mean(project_level(phi, d).values ** 2))
    log_ratio = math.log2(lam2 / lam1) if lam1 > 0 else 0.0
    if d == 0:
        rhs = lam1**2
    else:
        rhs = lam1**2 * ((1e5 * r**2 * log_ratio) / d) ** d
    pre = sp.n >= 10 * sp.m and sp.m >= 10 * (d + 1) and d <= log_ratio
    return ReportRow(sp.n, sp.m, d, None, lhs, rhs, pre)
