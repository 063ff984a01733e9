import math
from fractions import Fraction
from itertools import product as iproduct

import pytest
from hypothesis import given, strategies as st

from blockhash.exactdist import (APPROX, Dist, DistError, JointDist, cond_cp, cp, dist_from_json, dist_to_json,
                                 hellinger_closeness, hellinger_dist, hellinger_sq, iid_power, min_cp_within_distance,
                                 min_entropy, min_sq_mass, product, renyi2, stat_dist, stat_dist_to_uniform)
from blockhash.exactreal import Surd

from strategies import dist_pairs, dists, joints

F = Fraction


# examples ------------------------------------------------------------------

def test_cp_examples():
    assert cp(Dist.uniform(4)) == F(1, 4)
    assert cp(Dist.point(4, 2)) == 1
    assert cp(Dist((F(1, 2), F(1, 4), F(1, 4)))) == F(3, 8)


def test_entropies():
    assert renyi2(Dist.uniform(8)) == 3 and min_entropy(Dist.uniform(8)) == 3
    assert renyi2(Dist.point(5, 0)) == 0 and min_entropy(Dist.point(5, 0)) == 0
    half = Dist((F(1, 2), F(1, 2), F(0), F(0)))
    assert renyi2(half) == 1 and min_entropy(half) == 1


def test_stat_dist_examples():
    assert stat_dist(Dist.point(4, 0), Dist.uniform(4)) == F(3, 4)
    assert stat_dist(Dist.uniform(3), Dist.uniform(3)) == 0
    assert stat_dist(Dist((F(3, 4), F(1, 4))), Dist((F(1, 4), F(3, 4)))) == F(1, 2)
    with pytest.raises(DistError):
        stat_dist(Dist.uniform(2), Dist.uniform(3))


def test_hellinger_examples():
    assert hellinger_closeness(Dist.uniform(5)) == 1
    assert hellinger_dist(Dist.uniform(5), Dist.uniform(5)) == 0
    assert hellinger_closeness(Dist.point(4, 1)) == F(1, 2)


def test_cond_cp_examples():
    x = Dist((F(1, 2), F(1, 3), F(1, 6)))
    y = Dist((F(1, 4), F(3, 4)))
    j = product([x, y], ["X", "Y"])
    assert cond_cp(j, "X", ["Y"]) == cp(x)
    copy = JointDist([("X", 3), ("Y", 3)], [F(1, 3) if a == b else 0 for a, b in iproduct(range(3), repeat=2)])
    assert cond_cp(copy, "X", ["Y"]) == 1


def test_iid_power_of_uniform():
    assert iid_power(Dist.uniform(2), 3).flatten() == Dist.uniform(8)


def test_condition_on_null_event_rejected():
    j = JointDist([("X", 2), ("Y", 2)], [F(1, 2), 0, F(1, 2), 0])
    with pytest.raises(DistError):
        j.condition("Y", 1)


def test_invalid_masses_rejected():
    with pytest.raises(DistError):
        Dist((F(1, 2), F(1, 3)))
    with pytest.raises(DistError):
        Dist((F(3, 2), F(-1, 2)))
    with pytest.raises(DistError):
        Dist((0.5, 0.5))


def test_waterfill_examples():
    r = min_sq_mass(Dist((F(3, 4), F(1, 4))), F(1, 2))
    assert r.level == F(1, 4) and r.min_sq_mass == F(1, 8)
    assert min_sq_mass(Dist.uniform(5), 1).min_sq_mass == F(1, 5)
    assert min_sq_mass(Dist((F(1), F(0))), F(1, 2)).min_sq_mass == F(1, 4)
    assert min_cp_within_distance(Dist.uniform(6), 0) == F(1, 6)
    assert min_cp_within_distance(Dist.point(2, 0), F(1, 2)) == F(1, 4)


def test_waterfill_level_on_tied_masses():
    r = min_sq_mass(Dist((F(1, 2), F(1, 4), F(1, 4))), F(3, 4))
    assert r.level == F(1, 4) and r.min_sq_mass == 3 * F(1, 4) ** 2
    assert sum(r.achieving_q) == F(3, 4)


def test_json_round_trip():
    d = Dist((F(1, 3), F(2, 3)))
    assert dist_from_json(dist_to_json(d)) == d
    j = iid_power(d, 2)
    assert dist_from_json(dist_to_json(j)) == j
    assert dist_to_json(d) == dist_to_json(dist_from_json(dist_to_json(d)))
    with pytest.raises(DistError):
        dist_from_json('{"mass": ["1/2"]}')


# properties ----------------------------------------------------------------

@given(dists())
def test_cp_at_least_one_over_m_and_cp_to_stat(d):
    n = d.domain_size
    assert cp(d) >= F(1, n)
    assert (cp(d) == F(1, n)) == (d == Dist.uniform(n))
    # Delta(d, U) <= sqrt(n cp - 1)
    delta = stat_dist_to_uniform(d)
    assert delta * delta <= n * cp(d) - 1


@given(dist_pairs())
def test_hellinger_sandwich(pair):
    a, b = pair
    h2 = hellinger_sq(a, b)
    delta = stat_dist(a, b)
    assert h2 <= delta
    assert delta * delta <= 2 * h2


@given(joints(3, 3))
def test_conditioning_monotone(j):
    assert cp(j.marginal(["X1"])) <= cond_cp(j, "X1", ["X2"]) <= cond_cp(j, "X1", ["X2", "X3"])


@given(joints(2, 2, max_size=3))
def test_cond_cp_bruteforce(j):
    py = j.marginal(["X2"]).flatten()
    brute = sum((py[y] * cp(j.condition("X2", y).marginal(["X1"])) for y in range(len(py)) if py[y]), F(0))
    assert cond_cp(j, "X1", ["X2"]) == brute


@given(dists(max_size=7), st.integers(1, 16))
def test_waterfill_exact_vs_enumeration(d, k):
    budget = F(k, 16)
    r = min_sq_mass(d, budget)
    assert sum(r.achieving_q) == budget
    assert all(0 <= q <= p for q, p in zip(r.achieving_q, d.mass))
    # any feasible q that moves mass between two coordinates is no better
    q = list(r.achieving_q)
    for i, j in iproduct(range(len(q)), repeat=2):
        step = F(1, 64)
        if i != j and q[i] >= step and q[j] + step <= d.mass[j]:
            moved = q.copy()
            moved[i] -= step
            moved[j] += step
            assert sum(v * v for v in moved) >= r.min_sq_mass


@given(dists(max_size=7), st.integers(1, 16))
def test_modes_agree(d, k):
    f = d.to_mode(APPROX)
    budget = F(k, 16)
    assert float(cp(d)) == pytest.approx(cp(f), rel=1e-9)
    assert float(stat_dist_to_uniform(d)) == pytest.approx(stat_dist_to_uniform(f), rel=1e-9, abs=1e-12)
    assert float(hellinger_closeness(d)) == pytest.approx(hellinger_closeness(f), rel=1e-9)
    assert float(min_sq_mass(d, budget).min_sq_mass) == pytest.approx(
        min_sq_mass(f, float(budget)).min_sq_mass, rel=1e-9)


@given(joints(1, 3))
def test_closeness_is_certified_surd(j):
    c = hellinger_closeness(j)
    assert isinstance(c, (Surd, Fraction))
    assert 0 < c <= 1
    assert float(c) == pytest.approx(sum(math.sqrt(float(v) * j.size) for v in j.table.ravel()) / j.size)
