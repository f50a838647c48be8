"""Stream construction, exact cuts, and the protocol adapter."""

import random

import pytest

from dihplab.distributions import DihpInstance, advantage_reference, sample_no, sample_yes
from dihplab.matchings import LabeledMatching, ground, space
from dihplab.streaming import (
    KEEP_CROSSING,
    KEEP_POSITIVE,
    EdgeStream,
    StreamingAlgorithm,
    build_stream,
    counter_algorithm,
    gap_experiment,
    max_cut_exact,
    protocol_from_streaming,
    trivial_half_approx,
)


def test_build_stream_conventions():
    gs = ground(6)
    players = (
        LabeledMatching.from_text("1-2:+1,3-4:-1"),
        LabeledMatching.from_text("1-3:+1"),
    )
    inst = DihpInstance(players, "no", gs)
    pos = build_stream(inst, KEEP_POSITIVE)
    assert pos.edges == ((1, 2), (1, 3)) and pos.segments == (1, 1)
    neg = build_stream(inst, KEEP_CROSSING)
    assert neg.edges == ((3, 4),) and neg.segments == (1, 0)
    with pytest.raises(ValueError):
        build_stream(inst, "keep-everything")


def test_all_positive_matching_streams_in_canonical_order():
    gs = ground(8)
    y = LabeledMatching.from_text("1-5:+1,2-3:+1,6-8:+1")
    inst = DihpInstance((y,), "no", gs)
    stream = build_stream(inst, KEEP_POSITIVE)
    assert stream.edges == ((1, 5), (2, 3), (6, 8))


def test_crossing_stream_edges_cross_witness():
    inst = sample_yes(10, 3, 4, random.Random(4))
    stream = build_stream(inst, KEEP_CROSSING)
    for u, v in stream.edges:
        xu = (inst.witness >> inst.ground.index(u)) & 1
        xv = (inst.witness >> inst.ground.index(v)) & 1
        assert xu != xv


def test_multiplicities_preserved():
    rng = random.Random(8)
    inst = sample_no(8, 2, 5, rng)
    stream = build_stream(inst, KEEP_CROSSING)
    expected = sum(
        1 for y in inst.players for _, s in y.items if s == -1
    )
    assert len(stream.edges) == expected


def test_max_cut_exact_cases():
    gs = ground(4)
    assert max_cut_exact(EdgeStream(gs, ((1, 2), (1, 3), (2, 3)), (3,))) == 2
    assert max_cut_exact(EdgeStream(gs, ((1, 2), (2, 3), (3, 4)), (3,))) == 3
    assert max_cut_exact(EdgeStream(gs, (), (0,))) == 0
    # A doubled edge counts twice.
    assert max_cut_exact(EdgeStream(gs, ((1, 2), (1, 2)), (2,))) == 2
    # Any bipartite-consistent stream is fully cut.
    inst = sample_yes(12, 3, 3, random.Random(5))
    stream = build_stream(inst, KEEP_CROSSING)
    assert max_cut_exact(stream) == len(stream.edges)


def test_max_cut_cap():
    from dihplab.matchings import GroundSet

    big = EdgeStream(GroundSet(tuple(range(1, 26))), ((1, 2),), (1,))
    with pytest.raises(ValueError):
        max_cut_exact(big)


def test_trivial_half_approx_is_half_approximation():
    gs = ground(4)
    assert trivial_half_approx(EdgeStream(gs, (), (0,))) == 0
    k3 = EdgeStream(gs, ((1, 2), (1, 3), (2, 3)), (3,))
    assert trivial_half_approx(k3) == 1.5
    rng = random.Random(12)
    for _ in range(100):
        n = rng.randrange(4, 17)
        m = rng.randrange(1, n // 2 + 1)
        K = rng.randrange(1, 5)
        inst = sample_no(n, m, K, rng)
        stream = build_stream(inst, KEEP_CROSSING)
        if not stream.edges:
            continue
        cut = max_cut_exact(stream)
        approx = trivial_half_approx(stream)
        assert cut / 2 <= approx <= cut


def test_protocol_adapter_cost_and_equivalence():
    alg = counter_algorithm(64)
    decision, cost = protocol_from_streaming(
        alg, 6, 2, 2, KEEP_CROSSING, decide=lambda v: int(v >= 1.0)
    )
    assert cost == alg.passes * alg.state_bits * 2
    sp = space(6, 2)
    rng = random.Random(3)
    elements = sp.enumeration()
    for _ in range(200):
        players = (rng.choice(elements), rng.choice(elements))
        inst = DihpInstance(players, "unknown", sp.ground)
        mono = alg.run(build_stream(inst, KEEP_CROSSING))
        assert decision(players) == int(mono >= 1.0)


def test_zero_bit_algorithm_has_zero_advantage():
    zero = StreamingAlgorithm(
        init=lambda: 0, step=lambda s, e: 0, finish=lambda s: 1.0, state_bits=0
    )
    decision, cost = protocol_from_streaming(
        zero, 4, 1, 2, KEEP_CROSSING, decide=lambda v: 1
    )
    assert cost == 0
    res = advantage_reference(decision, 4, 1, 2)
    assert res.exact == 0


def test_state_budget_enforced_at_boundaries():
    hoarder = StreamingAlgorithm(
        init=lambda: 1,
        step=lambda s, e: s * 2,  # one more bit per edge
        finish=lambda s: float(s),
        state_bits=2,
    )
    decision, _ = protocol_from_streaming(hoarder, 8, 2, 2, KEEP_CROSSING)
    rng = random.Random(1)
    inst = sample_no(8, 2, 2, rng)
    # Find an instance with at least 2 crossing edges in one segment.
    while all(
        sum(1 for _, s in y.items if s == -1) < 2 for y in inst.players
    ):
        inst = sample_no(8, 2, 2, rng)
    with pytest.raises(ValueError):
        decision(inst.players)


def test_multi_pass_counter():
    alg = counter_algorithm(1000, passes=3)
    gs = ground(4)
    stream = EdgeStream(gs, ((1, 2), (3, 4)), (2,))
    assert alg.run(stream) == 3.0  # three passes count every edge thrice
    _, cost = protocol_from_streaming(alg, 4, 1, 5, KEEP_CROSSING)
    assert cost == 3 * alg.state_bits * 5


def test_gap_experiment_yes_invariant_and_report():
    rng = random.Random(21)
    rep = gap_experiment(12, 3, 4, 25, KEEP_CROSSING, rng)
    assert len(rep.rows) == 50
    assert rep.mean_ratio("yes") == 1.0
    assert rep.mean_ratio("no") <= 1.0
    assert rep.separation >= 0


def test_gap_experiment_empty_matchings():
    rng = random.Random(2)
    rep = gap_experiment(4, 0, 2, 5, KEEP_CROSSING, rng)
    assert all(r.edges == 0 and r.ratio == 1.0 for r in rep.rows)
    assert rep.separation == 0


def test_stream_dump_lines():
    gs = ground(4)
    stream = EdgeStream(gs, ((1, 2), (3, 4)), (2,))
    assert list(stream.dump_lines()) == ["1-2", "3-4"]
