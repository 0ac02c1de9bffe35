"""Protocol logic: candidate threads, filter-and-average, completeness.

The engine works on wire tuples and bitmask indexes for speed; these tests
pin its behavior against the straightforward MessageSet reference
implementations and against hand-worked examples.
"""

from itertools import permutations

import pytest

from reachcons import (DiGraph, ProtocolIntegrityError, UniformDelay,
                       enumerate_redundant_paths, make_plan, message_set,
                       run)
from reachcons.adversary import Crash
from reachcons.protocol import (PayloadView, candidate_sets, completeness,
                                filter_and_average)
from reachcons.simnet import thread_count


def clique(n):
    return DiGraph(n, frozenset(permutations(range(n), 2)))


K4, K5 = clique(4), clique(5)


# ---------------------------------------------------------------------------
# Candidate fault sets


def test_candidate_sets_shape():
    sets = candidate_sets(5, 2, 2)
    assert len(sets) == thread_count(5, 2)
    assert frozenset() in sets
    assert all(2 not in s for s in sets)
    assert all(len(s) <= 2 for s in sets)
    assert len(set(sets)) == len(sets)


def test_payload_view_lookup():
    p = PayloadView(0, 0b10, ((0, 0.5), (2, 1.0)))
    assert p.value_for(0) == 0.5
    assert p.value_for(2) == 1.0
    assert p.value_for(1) is None


# ---------------------------------------------------------------------------
# Reference filter-and-average


def test_reference_fa_trims_one_each_side():
    # Four single-hop messages into node 4 of the 5-clique; with f = 1 the
    # longest coverable prefix and suffix are one message each, leaving
    # values 4 and 6 as the extremes: output (4 + 6) / 2 = 5.
    M = message_set([(0.0, (0, 4)), (4.0, (2, 4)), (6.0, (3, 4)),
                     (10.0, (1, 4))])
    assert filter_and_average(M, 1, 4, K5) == 5.0


def test_reference_fa_keeps_uncoverable_messages():
    # The receiver's own message can never be trimmed because the cover
    # universe excludes it, while the single foreign message is coverable
    # and gets trimmed away entirely.
    M = message_set([(0.0, (4,)), (9.0, (1, 4))])
    assert filter_and_average(M, 1, 4, K5) == 0.0


def test_reference_fa_empty_set():
    with pytest.raises(ProtocolIntegrityError):
        filter_and_average(message_set([]), 1, 0, K4)


# ---------------------------------------------------------------------------
# Reference completeness


def _full_history(g, me, avoid, values):
    paths = enumerate_redundant_paths(g, avoid, me)
    return message_set((values[p.nodes[0]], p.nodes) for p in paths)


def test_completeness_accepts_a_full_consistent_history():
    values = {0: 0.0, 1: 1.0, 2: 0.25, 3: 0.75}
    M_v = _full_history(K4, 3, frozenset(), values)
    M_c = message_set((x, (q,)) for q, x in values.items())
    assert completeness(M_v, M_c, frozenset(), K4, 1, 3)


def test_completeness_rejects_a_missing_source_value():
    values = {0: 0.0, 1: 1.0, 2: 0.25, 3: 0.75}
    M_v = _full_history(K4, 3, frozenset(), values)
    M_c = message_set((x, (q,)) for q, x in values.items() if q != 0)
    assert not completeness(M_v, M_c, frozenset(), K4, 1, 3)


def test_completeness_rejects_a_coverable_confirmation():
    # The only supporting path for node 0's value runs through node 1, and
    # node 1 sits outside the source component once it is suspected, so a
    # one-node cover explains the evidence away.
    values = {0: 0.0, 1: 1.0, 2: 0.25, 3: 0.75}
    M_v = message_set([(0.0, (0, 1, 3)), (1.0, (1, 3)), (0.25, (2, 3)),
                       (0.75, (3,))])
    M_c = message_set((x, (q,)) for q, x in values.items())
    assert not completeness(M_v, M_c, frozenset(), K4, 1, 3)


# ---------------------------------------------------------------------------
# Engine versus reference, on full runs


def _engine_round0_values(g, inputs, f, plan):
    metrics = run(g, inputs, f, plan, UniformDelay(seed=5), 1.0, 0.25)
    out = {}
    for v in metrics.honest:
        rec = metrics.fa_records[(v, 0)]
        out[v] = (rec.lo_value + rec.hi_value) / 2.0
    return out


def test_engine_fa_matches_reference_fault_free():
    inputs = [0.0, 1.0, 0.25, 0.75]
    got = _engine_round0_values(K4, inputs, 1, make_plan("none", {}))
    for v in range(4):
        M = _full_history(K4, v, frozenset(), dict(enumerate(inputs)))
        assert got[v] == filter_and_average(M, 1, v, K4)


def test_engine_fa_matches_reference_with_a_crash():
    # A node that crashes before sending anything contributes no paths at
    # all, so the received history is exactly the flood that avoids it.
    inputs = [0.0, 1.0, 0.25, 0.75]
    plan = make_plan("crash", {3: Crash(0)})
    got = _engine_round0_values(K4, inputs, 1, plan)
    for v in range(3):
        M = _full_history(K4, v, frozenset({3}), dict(enumerate(inputs)))
        assert got[v] == filter_and_average(M, 1, v, K4)


def test_latched_payload_carries_every_input_fault_free():
    inputs = [0.0, 1.0, 0.25, 0.75]
    metrics = run(K4, inputs, 1, make_plan("none", {}),
                  UniformDelay(seed=5), 1.0, 0.25)
    for v in range(4):
        payload = metrics.latches[(v, 0, frozenset())]
        for q, x in enumerate(inputs):
            assert payload.value_for(q) == x


def test_outputs_equal_midpoint_of_final_record():
    inputs = [0.0, 1.0, 0.25, 0.75]
    metrics = run(K4, inputs, 1, make_plan("none", {}),
                  UniformDelay(seed=5), 1.0, 0.25)
    last = metrics.r_out - 1
    for v in metrics.honest:
        rec = metrics.fa_records[(v, last)]
        assert metrics.outputs[v] == (rec.lo_value + rec.hi_value) / 2.0
