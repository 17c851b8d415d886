import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drem_diffusion.analysis import random_birkhoff
from drem_diffusion.graph import (TopologySchedule, WeightedDigraph, constant_schedule,
                                  has_sequential_dynamic_path, is_jointly_connected,
                                  is_strongly_connected, min_entry_horizon, periodic_schedule,
                                  sequential_paths_brute_force, transition_matrix, union_graph,
                                  validate, worst_case_connectivity_horizon)
from drem_diffusion.scenario import A1, A2, A3

EX1 = periodic_schedule([A3, A1, A2], horizon=3)


def test_identity_valid():
    for n in (1, 2, 7):
        assert validate(np.eye(n)).valid


def test_mixing_matrix_valid():
    assert validate(A2).valid
    assert validate(WeightedDigraph(A2), min_weight=0.2).valid


def test_unbalanced_columns_reported():
    rep = validate(np.array([[0.5, 0.5], [0.6, 0.4]]))
    assert not rep.valid
    assert any("column 0" in v for v in rep.violations)
    assert any("column 1" in v for v in rep.violations)


def test_negative_and_min_weight_reported():
    a = np.array([[1.1, -0.1], [-0.1, 1.1]])
    assert any("negative" in v for v in validate(a).violations)
    b = np.array([[0.95, 0.05], [0.05, 0.95]])
    assert validate(b).valid
    assert not validate(b, min_weight=0.1).valid


def test_digraph_rejects_non_square():
    with pytest.raises(ValueError):
        WeightedDigraph(np.ones((2, 3)))


def test_edges_orientation():
    # a[i, j] > 0 means j sends to i
    g = WeightedDigraph(A3)
    assert (1, 0) in g.edges() and (0, 1) in g.edges()
    assert (2, 3) not in g.edges()


def test_union_single_step_is_graph():
    for k in range(3):
        np.testing.assert_array_equal(union_graph(EX1, k, k).adjacency, EX1.adjacency(k))


def test_union_over_period_connected():
    u = union_graph(EX1, 1, 3)
    np.testing.assert_allclose(u.adjacency, A1 + A2 + A3)
    assert is_strongly_connected(u)


def test_union_disjoint_edges_sums_weights():
    a = np.array([[0.5, 0.5, 0], [0.5, 0.5, 0], [0, 0, 1.0]])
    b = np.array([[1.0, 0, 0], [0, 0.5, 0.5], [0, 0.5, 0.5]])
    s = periodic_schedule([a, b])
    u = union_graph(s, 0, 1)
    np.testing.assert_allclose(u.adjacency, a + b)
    assert u.edges() == WeightedDigraph(a).edges() | WeightedDigraph(b).edges()


def test_union_argument_order():
    with pytest.raises(ValueError):
        union_graph(EX1, 3, 1)


def test_strong_connectivity_examples():
    assert is_strongly_connected(np.full((4, 4), 0.25))
    isolated = np.eye(3)
    isolated[0, 1] = isolated[1, 0] = 0.5
    isolated[0, 0] = isolated[1, 1] = 0.5
    assert not is_strongly_connected(isolated)
    assert not is_strongly_connected(A2)


def test_joint_connectivity_examples():
    assert is_jointly_connected(EX1, 3)
    assert not is_jointly_connected(EX1, 1)
    assert is_jointly_connected(constant_schedule(np.full((3, 3), 1 / 3)), 0)


def test_joint_connectivity_needs_window_when_aperiodic():
    s = TopologySchedule(lambda k: np.eye(2), 2)
    with pytest.raises(ValueError):
        is_jointly_connected(s, 1)
    assert not is_jointly_connected(s, 1, window=(0, 3))


def test_transition_single_factor_and_order():
    np.testing.assert_array_equal(transition_matrix(EX1, 2, 2), EX1.adjacency(2))
    # A(k) = A3, A1, A2 for k mod 3 = 0, 1, 2, so Phi(1, 3) = A(3) A(2) A(1) = A3 A2 A1
    np.testing.assert_allclose(transition_matrix(EX1, 1, 3), A3 @ A2 @ A1)
    with pytest.raises(ValueError):
        transition_matrix(EX1, 3, 2)


def test_transition_row3_frozen():
    # third row of A3 A2 A1 has a zero, since A3 leaves sensor 3 alone and A2 row 3
    # has no weight on sensor 2
    row = transition_matrix(EX1, 1, 3)[2]
    np.testing.assert_allclose(row, [0.6, 0.0, 0.2, 0.2])


def test_transition_doubly_stochastic():
    rng = np.random.default_rng(3)
    for _ in range(20):
        mats = [random_birkhoff(5, rng, terms=2) for _ in range(4)]
        s = periodic_schedule(mats)
        assert validate(transition_matrix(s, 0, 9)).valid


def test_path_zero_length():
    assert has_sequential_dynamic_path(EX1, 2, 2, 4, 4)
    assert not has_sequential_dynamic_path(EX1, 2, 1, 4, 4)


def test_path_index_checked():
    with pytest.raises(ValueError):
        has_sequential_dynamic_path(EX1, 0, 4, 0, 2)


def test_path_two_to_four_frozen():
    # sensor 2 (index 1) reaches only {1, 2} at k = 3 and A3 at k = 3 does not
    # touch sensor 4, so there is no hop sequence over [2, 4]
    assert not has_sequential_dynamic_path(EX1, 1, 3, 2, 4)
    assert not sequential_paths_brute_force(EX1, 1, 3, 2, 4)
    # 2 -> 1 at k = 3, 1 -> 3 at k = 5, 3 -> 4 at k = 8: first arrival at time 9
    assert not has_sequential_dynamic_path(EX1, 1, 3, 3, 8)
    assert has_sequential_dynamic_path(EX1, 1, 3, 3, 9)
    assert sequential_paths_brute_force(EX1, 1, 3, 3, 9)


def _random_schedule(rng, n, p):
    mats = []
    for _ in range(p):
        m = random_birkhoff(n, rng, terms=1)
        m[m < 0.05] = 0
        m /= m.sum(axis=1, keepdims=True)
        mats.append(m)
    return periodic_schedule(mats)


def test_paths_match_brute_force_and_transition():
    rng = np.random.default_rng(0)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        s = _random_schedule(rng, n, int(rng.integers(1, 4)))
        for k1 in range(2):
            for length in range(0, 6 - k1):
                k2 = k1 + length
                for i, j in itertools.product(range(n), repeat=2):
                    fast = has_sequential_dynamic_path(s, i, j, k1, k2)
                    assert fast == sequential_paths_brute_force(s, i, j, k1, k2)
                    if length > 0:
                        assert fast == (transition_matrix(s, k1, k2 - 1)[j, i] > 0)


def test_all_pair_paths_imply_union_connected():
    rng = np.random.default_rng(1)
    for _ in range(60):
        n = int(rng.integers(2, 5))
        s = _random_schedule(rng, n, 3)
        k1, k2 = 0, int(rng.integers(1, 6))
        if all(has_sequential_dynamic_path(s, i, j, k1, k2) for i in range(n) for j in range(n)):
            assert is_strongly_connected(union_graph(s, k1, k2))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6))
def test_product_of_doubly_stochastic_is_doubly_stochastic(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_birkhoff(n, rng), random_birkhoff(n, rng)
    assert validate(a @ b).valid


def test_min_entry_horizon_ex1():
    # the returned horizon satisfies the entry bound at every start
    H = min_entry_horizon(EX1, 0.2, 4 * 3, range(3), extra=6)
    assert H is not None and H <= 12
    assert all(transition_matrix(EX1, k, k + H).min() >= 0.2 ** H for k in range(3))


def test_worst_case_horizon():
    ring = [np.eye(3) for _ in range(6)]
    for k in range(6):
        e = k % 3
        m = np.eye(3)
        i, j = e, (e + 1) % 3
        m[i, i] = m[j, j] = m[i, j] = m[j, i] = 0.5
        ring[k] = m
    assert worst_case_connectivity_horizon(ring) == 1
    assert worst_case_connectivity_horizon([np.eye(3)] * 4) is None
    assert worst_case_connectivity_horizon([np.full((2, 2), 0.5)]) == 0
