"""Characters, derivatives, projections, and the report-only inequalities."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest

from dihplab.fourier_omega import (
    HyperParams,
    OmegaFunction,
    approximate_product_report,
    character_function,
    character_value,
    character_vector,
    correlation,
    derivative,
    hypercontractivity_report,
    inner_product,
    is_derivative_global,
    level_d_report,
    level_span_function,
    matchings_of_size,
    partial_matchings,
    project_level,
    psi,
)
from dihplab.globalness import OmegaSubset, is_global
from dihplab.matchings import EMPTY_RESTRICTION, space
from dihplab.verify import psi_brute_force


@pytest.mark.parametrize(
    "n,m,d,expected",
    [
        (4, 2, 0, Fraction(1)),
        (4, 2, 1, Fraction(1, 3)),
        (6, 2, 2, Fraction(1, 45)),
        (4, 1, 1, Fraction(1, 6)),
        (8, 2, 1, Fraction(1, 14)),
    ],
)
def test_psi_values(n, m, d, expected):
    assert psi(n, m, d) == expected


def test_psi_domain_errors():
    with pytest.raises(ValueError):
        psi(4, 3, 1)
    with pytest.raises(ValueError):
        psi(6, 2, 3)


def test_psi_equals_brute_force_small():
    for n in range(2, 9):
        for m in range(n // 2 + 1):
            for d in range(m + 1):
                assert psi(n, m, d) == psi_brute_force(n, m, d)


def test_character_basics():
    sp = space(6, 2)
    ones = character_vector(sp, ())
    assert np.all(ones == 1.0)
    y = sp.enumeration()[0]
    S_out = ((1, 6),) if y.label((1, 6)) == 0 else ((2, 6),)
    assert character_value(sp, S_out, y) == 0.0
    # Unit norm of a single-edge character.
    S = ((1, 2),)
    chi = OmegaFunction(sp, character_vector(sp, S).copy())
    assert abs(inner_product(chi, chi) - 1.0) < 1e-12


def test_orthonormality_all_pairs():
    sp = space(6, 2)
    chars = list(partial_matchings(sp.ground.vertices, sp.m))
    mat = np.stack([character_vector(sp, S) for S in chars])
    gram = mat @ mat.T / sp.count
    assert np.max(np.abs(gram - np.eye(len(chars)))) <= 1e-12


def test_inner_product_and_mean():
    sp = space(4, 1)
    one = OmegaFunction.constant(sp, 1.0)
    assert inner_product(one, one) == 1.0
    rng = np.random.default_rng(0)
    f = OmegaFunction(sp, rng.standard_normal(sp.count))
    assert abs(correlation(f, ()) - float(np.mean(f.values))) < 1e-12


def test_derivative_identity_and_character_rule():
    sp = space(8, 3)
    rng = np.random.default_rng(1)
    f = OmegaFunction(sp, rng.standard_normal(sp.count))
    assert np.array_equal(derivative(f, ()).values, f.values)
    S = ((1, 2),)
    M = ((1, 2), (3, 4), (5, 6))
    dchi = derivative(character_function(sp, M), S)
    expected = float(psi(8, 3, 1)) ** -0.5 * character_vector(
        sp.without(S), ((3, 4), (5, 6))
    )
    assert np.max(np.abs(dchi.values - expected)) <= 1e-12
    off = derivative(character_function(sp, ((3, 4), (5, 6))), ((1, 3),))
    assert np.max(np.abs(off.values)) <= 1e-12


def test_derivative_composition_and_commutation():
    sp = space(8, 3)
    rng = np.random.default_rng(7)
    for _ in range(5):
        f = OmegaFunction(sp, rng.standard_normal(sp.count))
        S, T = ((1, 2),), ((3, 4), (5, 6))
        left = derivative(derivative(f, T), S)
        right = derivative(f, tuple(sorted(S + T)))
        assert np.max(np.abs(left.values - right.values)) <= 1e-12
        left2 = derivative(project_level(f, 2), S)
        right2 = project_level(derivative(f, S), 1)
        assert np.max(np.abs(left2.values - right2.values)) <= 1e-12


def test_projection_properties():
    sp = space(6, 2)
    # Projecting a character keeps it on its own level only.
    for S in (((1, 2),), ((1, 2), (3, 4))):
        chi = character_function(sp, S)
        kept = project_level(chi, len(S))
        dropped = project_level(chi, len(S) - 1)
        assert np.max(np.abs(kept.values - chi.values)) <= 1e-12
        assert np.max(np.abs(dropped.values)) <= 1e-12
    rng = np.random.default_rng(3)
    f = OmegaFunction(sp, rng.standard_normal(sp.count))
    p1 = project_level(f, 1)
    p11 = project_level(p1, 1)
    assert np.max(np.abs(p1.values - p11.values)) <= 1e-12
    assert p1.p_norm(2) <= f.p_norm(2) + 1e-12
    g = OmegaFunction(sp, rng.standard_normal(sp.count))
    assert abs(inner_product(p1, g) - inner_product(f, project_level(g, 1))) <= 1e-12


def test_parseval_on_character_span():
    sp = space(8, 3)
    coeffs = {(): 0.25, ((1, 2),): -0.5, ((1, 2), (3, 4)): 1.5, ((5, 6),): 2.0}
    f = level_span_function(sp, coeffs)
    assert abs(f.p_norm(2) ** 2 - sum(a * a for a in coeffs.values())) < 1e-10


def test_global_indicator_is_derivative_global():
    sp = space(6, 2)
    rng = random.Random(11)
    A = OmegaSubset(
        sp,
        EMPTY_RESTRICTION,
        frozenset(rng.sample(sorted(sp.all_indices()), sp.count // 2)),
    )
    assert is_global(A)[0]
    phi = OmegaFunction.indicator(A)
    for p in (1, 2):
        res = is_derivative_global(phi, 2 ** (1 / p), phi.p_norm(p), sp.m, p)
        assert res.ok, (p, res.worst_S, res.worst_ratio)


def test_derivative_inherits_globalness():
    sp = space(6, 2)
    rng = random.Random(13)
    A = OmegaSubset(
        sp,
        EMPTY_RESTRICTION,
        frozenset(rng.sample(sorted(sp.all_indices()), sp.count // 2)),
    )
    phi = OmegaFunction.indicator(A)
    r, lam, p = 2.0, phi.p_norm(1), 1
    assert is_derivative_global(phi, r, lam, sp.m, p).ok
    S = ((1, 2),)
    dphi = derivative(phi, S)
    res = is_derivative_global(dphi, r, r * lam, sp.m - 1, p)
    assert res.ok, res


def test_character_fails_small_lambda_with_witness():
    sp = space(6, 2)
    M = ((1, 2), (3, 4))
    chi = character_function(sp, M)
    res = is_derivative_global(chi, 1.0, 1e-3, sp.m, 2)
    assert not res.ok and res.worst_S == M


def test_product_bracket_reports():
    rep = approximate_product_report(200, 20, 1)
    assert rep.preconditions_met and rep.ok
    rep2 = approximate_product_report(210, 20, 2, allow_relaxed=True)
    assert not rep2.preconditions_met  # m = 20 < 10 (d+1) = 30
    assert rep2.ok
    with pytest.raises(ValueError):
        approximate_product_report(8, 2, 1)
    small = approximate_product_report(8, 2, 1, allow_relaxed=True)
    assert small.rows[0][1] == 1  # Psi(n, m, 0) = 1 inside [p^0, (2p)^0]


def test_hyper_params_formulas():
    hp = HyperParams(2, 2.0)
    expected_rho = (1 / (4 * math.sqrt(2))) * min(2**-0.5, 0.5 * 2 ** (-0.5))
    assert abs(hp.rho - expected_rho) < 1e-15
    assert hp.beta > 0
    with pytest.raises(ValueError):
        HyperParams(0, 1.0)


def test_hypercontractivity_report_cases():
    sp = space(10, 1)
    rng = random.Random(5)
    coeffs = {S: rng.uniform(-1, 1) for S in matchings_of_size(sp.ground.vertices, 1)}
    f = level_span_function(sp, coeffs)
    row_q1 = hypercontractivity_report(f, 1, 1, 2.0)
    assert row_q1.holds  # q = 1 reduces to the squared 2-norm bound
    row = hypercontractivity_report(f, 1, 2, 2.0)
    assert not row.preconditions_met
    assert row.ratio == row.lhs / row.rhs
    # Scaling f by c scales both sides by c^(2q).
    f2 = f * 3.0
    row_scaled = hypercontractivity_report(f2, 1, 2, 2.0)
    scale = 3.0 ** (2 * 2)
    assert abs(row_scaled.lhs / row.lhs - scale) < 1e-6
    assert abs(row_scaled.rhs / row.rhs - scale) < 1e-6


def test_level_d_report_cases():
    sp = space(10, 1)
    A_full = OmegaSubset.full(sp)
    row = level_d_report(A_full, 1)
    assert row.lhs <= 1e-20  # constant function has no level-1 mass
    row0 = level_d_report(A_full, 0)
    assert abs(row0.lhs - 1.0) < 1e-12 and row0.rhs == 1.0
    rng = random.Random(6)
    A = OmegaSubset(
        sp,
        EMPTY_RESTRICTION,
        frozenset(rng.sample(sorted(sp.all_indices()), sp.count // 2)),
    )
    row1 = level_d_report(A, 1)
    assert row1.lhs >= 0 and row1.rhs > 0
    assert row1.as_csv_row()[3] == ""  # no q column for this report
