"""The exact-identity verification suite behind the ``verify`` subcommand.

Each check compares an implementation against an independent route (closed
form vs enumeration, fast transform vs naive sum, formula vs direct count).
Rational checks are exact; float checks use the configured tolerance.
"""

from __future__ import annotations

import random
import time

import numpy as np

from .fourier_cube import (
    PartitionSubspace,
    CubeFunction,
    coefficient_bridge_check,
    f_from_conditional,
    fourier,
    level_weights,
    unrefinement_check,
)
from .fourier_omega import (
    OmegaFunction,
    character_vector,
    derivative,
    matchings_of_size,
    partial_matchings,
    project_level,
    psi,
)
from .globalness import (
    OmegaSubset,
    decompose,
    decomposition_potential_sides,
)
from .matchings import EMPTY_RESTRICTION, count_matchings, ground, space  # noqa: F401
from .protocol import (
    advantage,
    bad_rectangle,
    no_mass,
    random_tree,
    refine,
    trace_advantage,
    verify_global_trace,
    yes_mass_pair,
)
from .reports import RunReport


def psi_brute_force(n: int, m: int, d: int):
    """Containment frequency of a fixed d-matching by support enumeration."""
    from fractions import Fraction

    fixed = set((2 * i + 1, 2 * i + 2) for i in range(d))
    supports = matchings_of_size(range(1, n + 1), m)
    hits = sum(1 for sup in supports if fixed <= set(sup))
    return Fraction(hits, len(supports))


def random_subset(sp, rng: random.Random, size: int) -> OmegaSubset:
    idx = rng.sample(sorted(sp.all_indices()), size)
    return OmegaSubset(sp, EMPTY_RESTRICTION, frozenset(idx))


def run_verification_suite(
    n: int = 6,
    m: int = 2,
    K: int = 2,
    seed: int = 1,
    tolerance: float = 1e-12,
) -> RunReport:
    report = RunReport()
    rng = random.Random(seed)
    start = time.time()
    sp = space(n, m)

    # Enumeration length against the closed form.
    report.check(
        "enumeration-count",
        len(sp.enumeration()) == count_matchings(n, m) * 2**m,
        lhs=len(sp.enumeration()),
        rhs=count_matchings(n, m) * 2**m,
        detail=f"n={n} m={m}",
    )

    # Psi recurrence against brute-force containment frequency (exact).
    psi_ok = all(
        psi(nn, mm, dd) == psi_brute_force(nn, mm, dd)
        for nn in range(2, 9)
        for mm in range(0, nn // 2 + 1)
        for dd in range(0, mm + 1)
    )
    report.check("psi-oracle", psi_ok, detail="n <= 8, exact rationals")

    # Orthonormality of the character set (float tolerance).
    chars = list(partial_matchings(sp.ground.vertices, m))
    mat = np.stack([character_vector(sp, S) for S in chars])
    gram = mat @ mat.T / sp.count
    err = float(np.max(np.abs(gram - np.eye(len(chars)))))
    report.check(
        "character-orthonormality",
        err <= tolerance,
        lhs=err,
        rhs=tolerance,
        tolerance=tolerance,
        detail=f"{len(chars)} characters",
    )

    # Derivative composition and commutation with the projection.
    comp_err = comm_err = 0.0
    for _ in range(5):
        f = OmegaFunction(sp, np.array([rng.gauss(0, 1) for _ in range(sp.count)]))
        S, T = ((1, 2),), ((3, 4),)
        lhs = derivative(derivative(f, T), S).values
        rhs = derivative(f, tuple(sorted(S + T))).values
        comp_err = max(comp_err, float(np.max(np.abs(lhs - rhs))))
        d = min(2, m)
        lhs2 = derivative(project_level(f, d), S).values
        rhs2 = project_level(derivative(f, S), d - 1).values
        comm_err = max(comm_err, float(np.max(np.abs(lhs2 - rhs2))))
    report.check(
        "derivative-composition", comp_err <= tolerance, lhs=comp_err, rhs=tolerance,
        tolerance=tolerance,
    )
    report.check(
        "derivative-projection-commute",
        comm_err <= tolerance,
        lhs=comm_err,
        rhs=tolerance,
        tolerance=tolerance,
    )

    # Product-formula yes mass against direct enumeration (exact rationals,
    # at the largest shape where the direct route is enumerable).
    sp_small = space(4, 1)
    from .globalness import Rectangle

    formula_ok = True
    for _ in range(20):
        factors = []
        for _i in range(K):
            size = rng.randrange(1, sp_small.count + 1)
            factors.append(random_subset(sp_small, rng, size))
        f_val, d_val = yes_mass_pair(Rectangle(tuple(factors)))
        if f_val != d_val:
            formula_ok = False
            break
    report.check(
        "yes-mass-formula-vs-direct", formula_ok, detail="n=4 m=1, exact"
    )

    # The fully-revealed-edge rectangle: yes mass 0, no mass (Psi/2)^K.
    bad = bad_rectangle(4, 1, K, (1, 2))
    expected_no = (psi(4, 1, 1) / 2) ** K
    f_val, d_val = yes_mass_pair(bad)
    report.check(
        "revealed-edge-rectangle",
        f_val == 0 and d_val == 0 and no_mass(bad) == expected_no,
        lhs=float(no_mass(bad)),
        rhs=float(expected_no),
        detail="yes mass exactly 0",
    )

    # Conditional-distribution coefficient bridge (float, 1e-10 scale).
    bridge_err = 0.0
    for _ in range(5):
        A = random_subset(sp, rng, max(2, sp.count // 3))
        for S in [(1, 2), (1, 3), (1, 2, 3, 4)]:
            lhs, rhs = coefficient_bridge_check(A, S)
            bridge_err = max(bridge_err, abs(lhs - rhs))
        f = f_from_conditional(A)
        weights = level_weights(f)
        if abs(float(fourier(f)[0])) > tolerance or any(
            w > 1e-18 for w in weights[1::2]
        ):
            report.check("conditional-bridge-structure", False)
            break
    bridge_tol = max(tolerance, 1e-10) if tolerance > 0 else tolerance
    report.check(
        "coefficient-bridge",
        bridge_err <= bridge_tol,
        lhs=bridge_err,
        rhs=bridge_tol,
        tolerance=bridge_tol,
    )

    # Unrefinement coefficient identity on random coarsenings.
    unref_err = 0.0
    for t in range(5):
        k_fine = 8
        gs = ground(k_fine)
        fine = PartitionSubspace.full_cube(gs)
        g = CubeFunction(
            k_fine,
            np.array([rng.gauss(0, 1) for _ in range(1 << k_fine)]),
            fine,
        )
        blocks = []
        i = 1
        while i <= k_fine:
            size = rng.choice([1, 1, 2, 3])
            blk = tuple(range(i, min(i + size, k_fine + 1)))
            blocks.append(blk)
            i += len(blk)
        coarser = PartitionSubspace(gs, tuple(blocks), tuple([0] * k_fine))
        res = unrefinement_check(g, coarser)
        if not res.families_disjoint:
            report.check("unrefinement-families-disjoint", False)
        unref_err = max(unref_err, res.max_error)
    report.check(
        "unrefinement-identity",
        unref_err <= tolerance,
        lhs=unref_err,
        rhs=tolerance,
        tolerance=tolerance,
    )

    # Greedy decomposition: partition, per-piece globalness, potential bound.
    decomp_ok = True
    for _ in range(10):
        A = random_subset(sp, rng, max(1, sp.count // 4))
        pieces = decompose(A, verify=True)
        union = frozenset().union(*[p.members for p, _ in pieces])
        if union != A.members or sum(p.size for p, _ in pieces) != A.size:
            decomp_ok = False
            break
        lhs, rhs = decomposition_potential_sides(A, pieces)
        if lhs > rhs + 1e-9:
            decomp_ok = False
            break
    report.check("decompose-properties", decomp_ok, detail="10 random sets")

    # Refinement: advantage never decreases, every trace is a global protocol.
    sp_ref = space(4, 1)
    refine_ok = True
    for _ in range(5):
        pi = random_tree(sp_ref, K, 3, rng)
        trace = refine(pi)
        rep = verify_global_trace(trace)
        if not rep.ok or trace_advantage(trace) < advantage(pi):
            refine_ok = False
            break
    report.check("refinement-soundness", refine_ok, detail="5 random trees")

    report.wall_time = time.time() - start
    return report
