import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from gnnseplab.gnn import identity_sum_gnn, perceptron_gnn, random_relu_gnn
from gnnseplab.graphs import DegreeSpec, random_graph, specs_up_to_vertices
from gnnseplab.search import (
    UnsupportedActivationError,
    Verdict,
    check_cr_refines_gnn,
    depth_one_separation,
    enumerate_specs,
    exhaustive_separation,
    find_collision,
    multiset_exp_oracle,
    separate_roots,
    separation_exponents,
    verify_collision,
)

from conftest import relu_nets


@pytest.mark.parametrize("m, M, count", [(2, 2, 3), (3, 2, 4), (2, 4, 10)])
def test_enumerate_specs_counts(m, M, count):
    specs = list(enumerate_specs(m, M))
    assert len(specs) == count == math.comb(M + m - 1, m)
    assert len(set(specs)) == count


def test_enumerate_specs_order():
    assert [s.degrees for s in enumerate_specs(2, 2)] == [(1, 1), (1, 2), (2, 2)]


def test_identity_collision_found():
    res = find_collision(identity_sum_gnn(), 2, [2], 4)
    assert res is not None
    assert {res.spec_a.degrees, res.spec_b.degrees} == {(1, 3), (2, 2)}
    assert res.cr_round_distinguished == 2
    assert res.seq_a == res.seq_b


def test_verify_collision_identity():
    g = identity_sum_gnn()
    a, b = DegreeSpec([1, 3]), DegreeSpec([2, 2])
    assert verify_collision(g, 3, a, b)
    assert not verify_collision(g, 4, a, b)
    assert not verify_collision(g, 3, a, DegreeSpec([3, 1]))


def test_find_collision_not_found_is_none():
    # one spec per box side for m = 1: nothing can collide
    assert find_collision(identity_sum_gnn(), 2, [1], 6) is None


def test_find_collision_rejects_analytic():
    with pytest.raises(UnsupportedActivationError):
        find_collision(perceptron_gnn("sigmoid"), 2, [2], 4)


@pytest.mark.parametrize("I, M", [(4, 10), (6, 18)])
def test_threads_give_same_result(I, M):
    # at I = 6 nothing collides up to M = 18, so the later, pooled batches all run
    a = find_collision(identity_sum_gnn(), I, [3], M, threads=1)
    b = find_collision(identity_sum_gnn(), I, [3], M, threads=2)
    assert (a is None) == (I == 6)
    assert (a is None and b is None) or a.to_json() == b.to_json()


@pytest.mark.parametrize("seed", range(4))
def test_random_relu_collisions_verify(seed):
    gnn = relu_nets(1, 100 + seed)[0]
    res = find_collision(gnn, 2, [2, 3], 15)
    if res is not None:
        assert verify_collision(gnn, 2, res.spec_a, res.spec_b)
        assert res.cr_round_distinguished == 2


def test_separate_roots_examples():
    v = separate_roots("sigmoid", DegreeSpec([1, 3]), DegreeSpec([2, 2]))
    assert v.verdict is Verdict.DISTINCT_CERTIFIED and v.bits <= 512
    assert separate_roots("exp", DegreeSpec([1]), DegreeSpec([2])).verdict is Verdict.DISTINCT_CERTIFIED
    assert separate_roots("tanh", DegreeSpec([2, 3]), DegreeSpec([3, 2])).verdict is Verdict.ISOMORPHIC
    with pytest.raises(UnsupportedActivationError):
        separate_roots("relu", DegreeSpec([1]), DegreeSpec([2]))


def test_oracle_examples():
    assert multiset_exp_oracle([1, 2], [2, 1])
    assert not multiset_exp_oracle([1, 3], [2, 2])
    assert separation_exponents(DegreeSpec([1, 3])) == [3, 2, 4]
    assert separation_exponents(DegreeSpec([2, 2])) == [3, 3, 3]


@given(st.lists(st.integers(1, 6), min_size=1, max_size=5), st.lists(st.integers(1, 6), min_size=1, max_size=5))
def test_oracle_distinguishes_exactly_non_isomorphic(a, b):
    sa, sb = DegreeSpec(a), DegreeSpec(b)
    assert multiset_exp_oracle(separation_exponents(sa), separation_exponents(sb)) == (sa == sb)


def test_exhaustive_small():
    rep = exhaustive_separation("sigmoid", 5)
    assert rep.num_specs == 11
    assert rep.pairs == 55
    assert rep.success and rep.certified == 55
    empty = exhaustive_separation("exp", 2)
    assert empty.pairs == 0 and empty.success


def test_exhaustive_agrees_with_pairwise():
    rep = exhaustive_separation("cosh", 6)
    specs = specs_up_to_vertices(6)
    verdicts = [separate_roots("cosh", a, b).verdict for a, b in itertools.combinations(specs, 2)]
    assert verdicts.count(Verdict.DISTINCT_CERTIFIED) == rep.certified


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_cr_refines_gnn(seed):
    rng = random.Random(seed)
    d = rng.randint(1, 4)
    g = random_graph(rng, rng.randint(1, 12), rng.uniform(0.1, 0.6), num_colors=rng.randint(1, d))
    assert check_cr_refines_gnn(random_relu_gnn(rng, d), g, d)


@pytest.mark.parametrize("activation", ["identity", "sigmoid", "tanh"])
def test_depth_one(activation):
    assert depth_one_separation(1, 2, activation)
    assert depth_one_separation(3, 10, activation)
    assert not depth_one_separation(4, 4, activation)
