import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from blockhash import constants
from blockhash.blocksrc import hashed_joint, iid_source, random_block_source
from blockhash.bounds import (GE, GT, LE, BoundReport, PreconditionError, average_block_cp, bernoulli_growth_sweep,
                              bernoulli_pair, bernoulli_reduction, closeness_chain_check, cond_cp_chain_check,
                              cond_cp_order_check, cp_upper_bound_check, derive_c0, fourwise_variance_check,
                              hellinger_sandwich, hypergeom_claim_check, hypergeom_grid, hypergeom_sweep,
                              hypergeom_window_prob, lhl_check, markov_tail, max_average_excess, modify,
                              product_distance, product_growth_large, product_growth_small, small_growth_ratio_ok,
                              thm_2univ_cp_check, thm_2univ_stat_check, thm_4wise_cp_check)
from blockhash.exactdist import Dist, JointDist, cond_cp, cp, iid_power, stat_dist
from blockhash.exactreal import OneMinusExpNeg
from blockhash.hashfam import affine_family, kwise_family, linear_family_H0, truly_random_family
from blockhash.rng import SplitMix64

from strategies import dist_pairs, dists, joints

F = Fraction
A8, A16 = affine_family(8, 2), affine_family(16, 2)
K8 = kwise_family(8, 2, 4)


def test_report_directions():
    assert BoundReport("x", F(1), F(1), LE).satisfied
    assert BoundReport("x", F(1), F(1), GE).satisfied
    assert not BoundReport("x", F(1), F(1), GT).satisfied
    r = BoundReport("x", F(1), F(2), LE, checks={"aux": False})
    assert r.satisfied and not r.ok
    with pytest.raises(ValueError):
        BoundReport("x", 1, 2, "<")


# leftover hash lemma -------------------------------------------------------

def test_lhl_uniform_source():
    # constant members (a = 0) add (1/N)(1 - 1/M) to the ideal 1/M
    r = lhl_check(A8, Dist.uniform(8))
    assert r.measured == F(1, 2) + F(1, 8) * F(1, 2) == F(9, 16)
    assert r.satisfied


def test_lhl_precondition():
    with pytest.raises(PreconditionError):
        lhl_check(A8, Dist.flat(8, [0, 1]), 4)
    # degree-0 polynomials are constants: not universal
    with pytest.raises(PreconditionError):
        lhl_check(kwise_family(8, 2, 1), Dist.uniform(8))
    assert lhl_check(linear_family_H0(2, 2), Dist.uniform(4), 4).satisfied


@given(dists(8, 8))
def test_lhl_holds_for_any_source(x):
    r = lhl_check(A8, x)
    assert r.satisfied
    assert r.measured >= F(1, 2)


# conditional chain and Markov tail ----------------------------------------

def test_chain_examples():
    r = cond_cp_chain_check(A8, iid_source(Dist.flat(8, range(4)), 2), 4)
    assert r.satisfied and r.extras["per_block"] == [F(5, 8), F(5, 8)]
    assert cond_cp_chain_check(truly_random_family(4, 2), iid_source(Dist.flat(4, range(2)), 2), 2).satisfied


@given(st.integers(0, 2 ** 40), st.sampled_from([4, 8]), st.integers(1, 3), st.integers(1, 4))
def test_chain_random_sources(seed, N, T, K):
    src = random_block_source(SplitMix64(seed), N, T, K)
    assert cond_cp_chain_check(affine_family(N, 2), src, K).satisfied
    if N == 4:
        assert cond_cp_chain_check(truly_random_family(4, 2), src, K).satisfied


def test_markov_examples():
    # full entropy still has a tail: the constant members
    full = markov_tail(A16, iid_source(Dist.uniform(16), 2), 16, F(1, 2))
    assert full.measured == F(1, 16)
    inst = markov_tail(A16, iid_source(Dist.flat(16, range(8)), 4), 8, F(1, 2))
    assert inst.measured == F(1, 8) <= F(1, 2)


def test_markov_tail_monotone_in_k():
    src = iid_source(Dist.flat(16, range(8)), 2)
    tails = [markov_tail(A16, src, k, F(1, 2)).measured for k in (1, 2, 4, 8)]
    assert tails == sorted(tails)


# modify --------------------------------------------------------------------

def test_modify_identity_when_bound_holds():
    j = hashed_joint(A8, iid_source(Dist.flat(8, range(4)), 2))
    r = modify(j, F(10))
    assert r.joint == j and r.distance == 0 and r.rejected_mass == 0


def test_modify_resample_everything():
    j = hashed_joint(A8, iid_source(Dist.flat(8, range(4)), 2))
    r = modify(j, F(-1))
    assert r.cut_counts[0] == sum(1 for m in j.table.ravel().tolist() if m)
    uniform_y = JointDist(j.axes, [F(1, j.size)] * j.size)
    assert r.joint == uniform_y


@given(st.integers(0, 2 ** 40), st.integers(2, 3), st.integers(2, 4), st.sampled_from([F(1, 4), F(1, 2), F(3, 4)]))
def test_modify_properties(seed, T, K, eps):
    src = random_block_source(SplitMix64(seed), 8, T, K)
    j = hashed_joint(A8, src)
    alpha = 1 / (K * eps)
    r = modify(j, alpha)
    tail = markov_tail(A8, src, K, eps, j).measured
    assert r.rejected_mass == tail
    assert r.distance <= r.rejected_mass
    assert r.joint.marginal(["H"]) == j.marginal(["H"])
    assert max_average_excess(r.joint) <= alpha
    assert cp(r.joint) <= F(1, A8.size * 2 ** T) * (1 + 2 * alpha) ** T


def test_thm2cp_examples():
    r = thm_2univ_cp_check(A16, iid_source(Dist.flat(16, range(8)), 4), 8, F(1, 2))
    assert r.ok
    assert (r.measured, r.bound) == (F(11, 32768), F(81, 65536))
    assert (r.extras["tail"], r.extras["distance"]) == (F(1, 8), F(3, 32))
    full = thm_2univ_cp_check(A16, iid_source(Dist.uniform(16), 2), 16, F(1, 2))
    assert full.ok and full.measured == F(1, 1024)


# 4-wise --------------------------------------------------------------------

def test_variance_examples():
    assert fourwise_variance_check(K8, Dist.flat(8, range(4)), 4).measured == F(3, 128)
    # kwise includes low-degree polynomials, so even the uniform source varies
    u = fourwise_variance_check(K8, Dist.uniform(8))
    assert u.measured == F(7, 1024) and u.satisfied
    p = fourwise_variance_check(K8, Dist.point(8, 3), 1)
    assert p.measured == 0 and p.bound == 1


def test_variance_requires_4wise():
    with pytest.raises(PreconditionError):
        fourwise_variance_check(A8, Dist.uniform(8))


def test_thm4cp_examples():
    r = thm_4wise_cp_check(K8, iid_source(Dist.flat(8, range(4)), 2), 4, F(1, 2))
    assert r.ok and r.extras["tail"] == 0
    full = thm_4wise_cp_check(K8, iid_source(Dist.uniform(8), 2), 8, F(1, 2))
    assert full.ok and full.extras["tail"] == F(1, 64)


# statistical distance ------------------------------------------------------

def test_thm2stat_example():
    r = thm_2univ_stat_check(affine_family(32, 2), iid_source(Dist.flat(32, range(16)), 2), 16, F(3, 4))
    assert r.ok and r.measured == F(3, 64)
    full = thm_2univ_stat_check(affine_family(32, 2), iid_source(Dist.uniform(32), 2), 32, F(3, 4))
    assert full.ok and full.measured == F(3, 128)
    with pytest.raises(PreconditionError):
        thm_2univ_stat_check(affine_family(32, 2), iid_source(Dist.flat(32, range(4)), 2), 4, F(1, 2))


@given(joints(2, 3))
def test_sandwich_on_joints(j):
    s = hellinger_sandwich(j)
    assert s["lower"] and s["upper"]


def test_closeness_examples():
    u = JointDist([("X1", 2), ("X2", 3)], [F(1, 6)] * 6)
    r = closeness_chain_check(u, [1, 1])
    assert r.measured == 1 and r.satisfied


@given(joints(2, 2))
def test_closeness_chain_never_violated(j):
    alphas = [cond_cp(j, n, j.names[:i]) * s for i, (n, s) in enumerate(j.axes)]
    r = closeness_chain_check(j, alphas)
    assert r.extras["premise_ok"] and r.satisfied


# collision-probability lemmas ---------------------------------------------

@given(joints(1, 4))
def test_cp_upper_bound(j):
    r = cp_upper_bound_check(j)
    assert r.ok


@given(joints(3, 4))
def test_cond_cp_order(j):
    assert cond_cp_order_check(j, "X1", "X2", "X3").ok


def test_average_block_cp_shape():
    j = iid_power(Dist.uniform(3), 2)
    avg = average_block_cp(j, list(j.names))
    assert avg.shape == (3, 3) and set(avg.ravel().tolist()) == {F(1, 3)}


# product growth ------------------------------------------------------------

def test_product_examples():
    x, u = bernoulli_pair(F(1, 10))
    assert product_distance(x, u, 1) == F(1, 10)
    assert product_distance(x, u, 2) == F(11, 100)
    res = product_growth_small(Dist.point(2, 0), Dist.uniform(2), 4)
    assert [d for _, d in res["rows"]] == [F(1, 2), F(3, 4), F(7, 8), F(15, 16)]
    assert res["monotone"] and res["reduction_ok"]
    big = product_growth_large(F(1, 2), 2)
    assert big.measured == F(3, 4) and big.satisfied
    assert isinstance(big.bound, OneMinusExpNeg)


@pytest.mark.parametrize("eps", [F(1, 8), F(1, 4), F(1, 2)])
def test_large_t_sweep(eps):
    for T in range(1, 65):
        assert product_growth_large(eps, T).satisfied


@given(dist_pairs(max_size=3), st.integers(1, 4))
def test_product_distance_bruteforce(pair, T):
    x, y = pair
    assert product_distance(x, y, T) == stat_dist(iid_power(x, T).flatten(), iid_power(y, T).flatten())


@given(dist_pairs(max_size=4))
def test_product_monotone(pair):
    x, y = pair
    rows = product_growth_small(x, y, 5)["rows"]
    ds = [d for _, d in rows]
    assert ds == sorted(ds)


@given(dist_pairs(max_size=6))
def test_bernoulli_reduction(pair):
    x, y = pair
    red = bernoulli_reduction(x, y)
    assert red.fy == Dist.uniform(2)
    assert 2 * red.distance >= red.original_distance == stat_dist(x, y)


def test_c0_reproduces():
    rows = bernoulli_growth_sweep()
    assert derive_c0(rows, constants.DELTA_CAP) == constants.C0
    assert all(small_growth_ratio_ok(d, e, T, constants.C0) for e, T, d in rows if d <= constants.DELTA_CAP)
    assert not small_growth_ratio_ok(F(1, 16) + F(1, 256), F(1, 16), 2, constants.C0 + F(1, 10000))


# hypergeometric window -----------------------------------------------------

def test_hypergeom_examples():
    r = hypergeom_claim_check(4, 2, 2, F(1, 2))
    assert r.measured == F(2, 3) and r.extras["window"] == [1]
    assert not r.extras["premise_ok"]
    # non-integral L and a tiny window: no integer inside
    p, window = hypergeom_window_prob(10, 3, 3, F(9, 10), F(1, 100))
    assert p == 0 and window == []


def test_hypergeom_preconditions():
    with pytest.raises(PreconditionError):
        hypergeom_claim_check(10, 3, 3, F(1))
    with pytest.raises(PreconditionError):
        hypergeom_claim_check(10, 3, 0, F(1, 2))


@given(st.integers(3, 30), st.data())
def test_window_probability_matches_subset_count(N, data):
    K = data.draw(st.integers(1, min(N, 6)))
    tset = data.draw(st.integers(1, N))
    L = F(K * tset, N)
    beta = data.draw(st.sampled_from([F(1, 8), F(1, 2), F(7, 8)]))
    p, window = hypergeom_window_prob(N, K, tset, L, beta)
    # hypergeometric pmf sums to one over the full support
    full = sum(math.comb(tset, R) * math.comb(N - tset, K - R) for R in range(0, K + 1))
    assert full == math.comb(N, K)
    assert 0 <= p <= 1
    assert all((R - L) ** 2 <= beta * beta * L for R in window)


def test_frozen_hypergeom_constant():
    best, arg = hypergeom_sweep()
    assert best == constants.C_DOUBLE_PRIME
    assert arg == (6, 2, 3, F(1, 8))
    assert sum(1 for _ in hypergeom_grid()) == 1069
