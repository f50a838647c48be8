"""Acceptance gate: every exit criterion at its stated tolerance and budget.

Each test prints one line so a plain run reads as a checklist.  The closed
asymptotic statements are exercised as report-only trend rows (criterion 12):
their inequality is asserted only when the stated preconditions hold, which
at this scale they do not; the rows are still emitted for inspection.
"""

import itertools
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from dihplab.fourier_cube import (
    coefficient_bridge_check,
    envelope,
    f_from_conditional,
    fourier,
    knorm_bound_report,
    level_weights,
    PartitionSubspace,
    CubeFunction,
    unrefinement_check,
)
from dihplab.fourier_omega import (
    character_vector,
    derivative,
    hypercontractivity_report,
    level_d_report,
    level_span_function,
    matchings_of_size,
    partial_matchings,
    project_level,
    psi,
    OmegaFunction,
)
from dihplab.globalness import (
    OmegaSubset,
    Rectangle,
    decompose,
    decomposition_potential_sides,
    is_global,
)
from dihplab.matchings import EMPTY_RESTRICTION, count_matchings, ground, space
from dihplab.protocol import (
    advantage,
    bad_rectangle,
    no_mass,
    random_tree,
    refine,
    trace_advantage,
    verify_global_trace,
    yes_mass_pair,
)
from dihplab.reports import write_csv
from dihplab.streaming import KEEP_CROSSING, gap_experiment
from dihplab.verify import psi_brute_force


@contextmanager
def criterion(number: int, name: str, budget_s: float):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:02d} {name}: FAIL")
        raise
    elapsed = time.monotonic() - start
    print(f"ACCEPTANCE {number:02d} {name}: PASS ({elapsed:.2f}s / {budget_s:.0f}s)")
    assert elapsed < budget_s, f"criterion {number} exceeded its {budget_s}s budget"


def random_subset(sp, rng, size):
    return OmegaSubset(
        sp, EMPTY_RESTRICTION, frozenset(rng.sample(sorted(sp.all_indices()), size))
    )


def test_01_enumeration_oracle():
    with criterion(1, "enumeration-oracle", 5):
        for n in range(2, 11):
            for m in range(0, min(3, n // 2) + 1):
                sp = space(n, m)
                assert len(sp.enumeration()) == count_matchings(n, m) * 2**m


def test_02_psi_oracle():
    with criterion(2, "psi-oracle", 10):
        for n in range(2, 11):
            for m in range(0, min(4, n // 2) + 1):
                for d in range(0, m + 1):
                    assert psi(n, m, d) == psi_brute_force(n, m, d)


def test_03_orthonormality():
    with criterion(3, "character-orthonormality", 30):
        for n, m in ((6, 2), (8, 2)):
            sp = space(n, m)
            chars = list(partial_matchings(sp.ground.vertices, m))
            mat = np.stack([character_vector(sp, S) for S in chars])
            gram = mat @ mat.T / sp.count
            assert float(np.max(np.abs(gram - np.eye(len(chars))))) <= 1e-12


def test_04_derivative_algebra():
    with criterion(4, "derivative-algebra", 60):
        sp = space(8, 3)
        rng = np.random.default_rng(2024)
        for _ in range(20):
            f = OmegaFunction(sp, rng.standard_normal(sp.count))
            S, T = ((1, 2),), ((3, 4), (5, 6))
            comp = np.max(
                np.abs(
                    derivative(derivative(f, T), S).values
                    - derivative(f, tuple(sorted(S + T))).values
                )
            )
            assert comp <= 1e-12
            comm = np.max(
                np.abs(
                    derivative(project_level(f, 2), S).values
                    - project_level(derivative(f, S), 1).values
                )
            )
            assert comm <= 1e-12


def test_05_yes_mass_formula_oracle():
    with criterion(5, "planted-mass-formula", 60):
        sp = space(4, 1)
        pool = sorted(sp.all_indices())
        rng = random.Random(99)
        for K in (2, 3):
            for _ in range(50):
                factors = tuple(
                    OmegaSubset(
                        sp,
                        EMPTY_RESTRICTION,
                        frozenset(rng.sample(pool, rng.randrange(1, sp.count + 1))),
                    )
                    for _ in range(K)
                )
                formula, direct = yes_mass_pair(Rectangle(factors))
                assert formula == direct  # exact rationals on both routes


def test_06_bad_rectangle_exact():
    with criterion(6, "revealed-edge-rectangle", 10):
        R = bad_rectangle(4, 1, 2, (1, 2))
        formula, direct = yes_mass_pair(R)
        assert formula == 0 and direct == 0
        assert no_mass(R) == (psi(4, 1, 1) / 2) ** 2


def test_07_decompose_properties():
    with criterion(7, "greedy-decomposition", 120):
        sp = space(6, 2)
        rng = random.Random(7)
        for trial in range(100):
            density = Fraction(1, 4) if trial % 2 == 0 else Fraction(1, 2)
            A = random_subset(sp, rng, int(density * sp.count))
            pieces = decompose(A, verify=False)
            union = frozenset().union(*[p.members for p, _ in pieces])
            assert union == A.members
            assert sum(p.size for p, _ in pieces) == A.size
            for piece, z in pieces:
                assert z.subsumes(A.base)
                ok, witness = is_global(piece)
                assert ok, f"piece under {z} has witness {witness}"
            lhs, rhs = decomposition_potential_sides(A, pieces)
            assert lhs <= rhs + 1e-9


def test_08_refinement_soundness():
    with criterion(8, "global-refinement", 120):
        sp = space(4, 1)
        rng = random.Random(13)
        for trial in range(50):
            depth = 1 + trial % 3
            pi = random_tree(sp, 2, depth, rng)
            trace = refine(pi)
            assert trace_advantage(trace) >= advantage(pi)
            report = verify_global_trace(trace)
            assert report.ok, report.violations
            assert report.max_round_growth <= 3 + 1e-9
            for d, value in enumerate(report.depth_weighted_potentials):
                assert value <= 3 * d + 1e-9


def test_09_conditional_bridge():
    with criterion(9, "conditional-coefficient-bridge", 120):
        sp = space(8, 2)
        rng = random.Random(41)
        even_sets = [
            s
            for size in (2, 4)
            for s in itertools.combinations(sp.ground.vertices, size)
        ]
        for _ in range(20):
            A = random_subset(sp, rng, rng.randrange(2, sp.count + 1))
            f = f_from_conditional(A)
            coeffs = fourier(f)
            assert abs(float(coeffs[0])) <= 1e-10
            weights = level_weights(f)
            assert all(w <= 1e-20 for w in weights[1::2])
            for S in even_sets:
                lhs, rhs = coefficient_bridge_check(A, S)
                assert abs(lhs - rhs) <= 1e-10


def test_10_unrefinement_identity():
    with criterion(10, "unrefinement-identity", 30):
        rng = random.Random(5)
        for k_fine in (4, 6, 8, 10):
            gs = ground(k_fine)
            fine = PartitionSubspace.full_cube(gs)
            for t in range(5):
                g = CubeFunction(
                    k_fine,
                    np.random.default_rng(k_fine * 10 + t).standard_normal(
                        1 << k_fine
                    ),
                    fine,
                )
                blocks = []
                i = 1
                while i <= k_fine:
                    width = rng.choice([1, 1, 2, 3])
                    blk = tuple(range(i, min(i + width, k_fine + 1)))
                    blocks.append(blk)
                    i += len(blk)
                coarser = PartitionSubspace(
                    gs, tuple(blocks), tuple([0] * k_fine)
                )
                rep = unrefinement_check(g, coarser)
                assert rep.families_disjoint
                assert rep.max_error <= 1e-12


def test_11_streaming_gap():
    with criterion(11, "streaming-cut-gap", 120):
        rng = random.Random(2025)
        rep = gap_experiment(16, 4, 8, 200, KEEP_CROSSING, rng)
        yes_rows = [r for r in rep.rows if r.label == "yes"]
        no_rows = [r for r in rep.rows if r.label == "no"]
        assert len(yes_rows) == len(no_rows) == 200
        assert all(r.maxcut == r.edges for r in yes_rows)
        mean_no = sum(r.ratio for r in no_rows) / len(no_rows)
        assert mean_no < 1.0
        print(f"  planted ratio 1.0 on 200/200; uniform mean ratio {mean_no:.4f}")


def test_12_report_only_trend_suite(tmp_path):
    with criterion(12, "report-only-trends", 180):
        rows_leveld = []
        rng = random.Random(3)
        sp10 = space(10, 1)
        A10 = random_subset(sp10, rng, sp10.count // 2)
        sp82 = space(8, 2)
        A82 = random_subset(sp82, rng, sp82.count // 2)
        for A, ds in ((A10, (0, 1)), (A82, (0, 1, 2))):
            for d in ds:
                row = level_d_report(A, d)
                if row.preconditions_met:
                    assert row.holds
                rows_leveld.append(row.as_csv_row())
        write_csv(
            str(tmp_path / "leveld.csv"),
            ("n", "m", "d", "q", "lhs", "rhs", "ratio", "preconditions_met"),
            rows_leveld,
        )

        rows_hyper = []
        coeffs = {
            S: rng.uniform(-1, 1)
            for S in matchings_of_size(sp10.ground.vertices, 1)
        }
        f = level_span_function(sp10, coeffs)
        for q in (1, 2, 3):
            row = hypercontractivity_report(f, 1, q, 2.0)
            if row.preconditions_met:
                assert row.holds
            rows_hyper.append(row.as_csv_row())
        write_csv(
            str(tmp_path / "hyper.csv"),
            ("n", "m", "d", "q", "lhs", "rhs", "ratio", "preconditions_met"),
            rows_hyper,
        )

        # Decay of the centered conditional of a global set against the
        # envelope; the closed statement needs an astronomically large
        # ground set, so the rows are informational.
        fc = f_from_conditional(A82)
        weights = level_weights(fc)
        w = math.log2(sp82.count / A82.size)
        pre = sp82.n >= 10**7 * sp82.m
        decay_rows = []
        for d in range(0, sp82.n // 2 + 1):
            lhs = float(weights[0]) if d == 0 else float(weights[2 * d])
            rhs = 0.0 if d == 0 else (2.0**-d) * envelope(sp82.n, d, max(w / 2, 1e-9))
            if pre:
                assert lhs <= rhs + 1e-12
            decay_rows.append((d, lhs, rhs, pre))
        write_csv(
            str(tmp_path / "decay.csv"),
            ("d", "lhs", "rhs", "preconditions_met"),
            decay_rows,
        )

        knorm_rows = []
        from dihplab.matchings import SignedEdges

        z = SignedEdges.from_pairs([((1, 2), 1)])
        A_base = OmegaSubset(
            sp82,
            EMPTY_RESTRICTION,
            frozenset(rng.sample(sorted(sp82.all_indices()), sp82.count // 2)),
        )
        for K in (2, 4):
            rep = knorm_bound_report(A_base, z, K)
            if rep["preconditions_met"]:
                assert rep["measured"] <= rep["bound"] + 1e-9
            knorm_rows.append(
                (K, rep["gamma"], rep["eta"], rep["measured"], rep["bound"],
                 rep["preconditions_met"])
            )
        write_csv(
            str(tmp_path / "knorm.csv"),
            ("K", "gamma", "eta", "lhs", "rhs", "preconditions_met"),
            knorm_rows,
        )

        for name in ("leveld.csv", "hyper.csv", "decay.csv", "knorm.csv"):
            assert (tmp_path / name).exists()
