from fractions import Fraction
from itertools import product as iproduct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blockhash.blocksrc import (BlockSourceTree, FlatSource, hashed_given_h, hashed_joint, iid_source, image_dist,
                                parse_source, random_block_source, validate_block_k_source)
from blockhash.exactdist import Dist, DistError, cond_cp, cp, iid_power
from blockhash.hashfam import GuardError, affine_family, linear_family_H0, truly_random_family
from blockhash.rng import SplitMix64

F = Fraction


def test_validate_examples():
    assert validate_block_k_source(iid_source(Dist.uniform(6), 2), 6).ok
    src = BlockSourceTree(2, 4, {(): Dist.uniform(4), **{(x,): Dist.uniform(4) for x in range(3)},
                                 (3,): Dist.point(4, 1)})
    v = validate_block_k_source(src, 2)
    assert not v.ok and v.worst_cp == 1 and v.worst_prefix == (3,)


@given(st.integers(0, 2 ** 32), st.integers(2, 5), st.integers(1, 3), st.integers(1, 4))
def test_random_tree_worst_cp_bruteforce(seed, n, T, K):
    K = min(K, n)
    src = random_block_source(SplitMix64(seed), n, T, K)
    v = validate_block_k_source(src, K)
    assert v.ok
    brute = max(cp(src.conditional(p)) for p, _ in src.prefixes())
    assert v.worst_cp == brute


def test_iid_uniform_joint():
    assert iid_source(Dist.uniform(3), 3).joint().flatten() == Dist.uniform(27)


@given(st.sets(st.integers(0, 7), min_size=1), st.integers(1, 3))
def test_flat_sources_validate(S, T):
    src = FlatSource(8, tuple(S))
    assert validate_block_k_source(iid_source(src.dist(), T), src.K).ok


def test_tree_matches_iid_path():
    d = Dist((F(1, 2), F(1, 4), F(1, 8), F(1, 8)))
    iid = iid_source(d, 2)
    tree = BlockSourceTree(2, 4, {(): d, **{(x,): d for x in range(4)}})
    assert iid.joint() == tree.joint() == iid_power(d, 2)
    f = affine_family(4, 2)
    assert hashed_joint(f, iid) == hashed_joint(f, tree)


def test_hashed_joint_point_source_truly_random():
    f = truly_random_family(4, 2)
    x = (0, 2, 3)
    src = BlockSourceTree(3, 4, {x[:i]: Dist.point(4, x[i]) for i in range(3)})
    j = hashed_joint(f, src)
    ys = j.marginal(["Y1", "Y2", "Y3"]).flatten()
    assert ys == Dist.uniform(8)
    for h in range(f.size):
        row = j.condition("H", h).flatten()
        assert max(row.mass) == 1


def test_full_entropy_affine_single_block():
    # affine over GF(8) includes the a = 0 constants, so cp(Y|H) = 1/M + (1/N)(1 - 1/M)
    f = affine_family(8, 2)
    j = hashed_joint(f, iid_source(Dist.uniform(8), 1))
    assert j.marginal(["Y1"]).flatten() == Dist.uniform(2)
    assert cond_cp(j, "Y1", ["H"]) == F(1, 2) + F(1, 8) * F(1, 2)


def test_h_marginal_uniform_and_given_h():
    f = affine_family(8, 2)
    src = random_block_source(SplitMix64(11), 8, 3, 3)
    j = hashed_joint(f, src)
    assert j.marginal(["H"]).flatten() == Dist.uniform(f.size)
    for h in (0, 1, 17, 63):
        assert hashed_given_h(f, h, src) == j.condition("H", h)


def test_hashed_given_h_examples():
    f = linear_family_H0(2, 2)
    assert hashed_given_h(f, 0, iid_source(Dist.uniform(4), 2)).flatten() == Dist.point(4, 0)
    bij = truly_random_family(2, 2)
    # index 2 is the identity on {0, 1}
    assert [bij(2, x) for x in range(2)] == [0, 1]
    assert hashed_given_h(bij, 2, iid_source(Dist.uniform(2), 3)).flatten() == Dist.uniform(8)
    with pytest.raises(IndexError):
        hashed_given_h(bij, 99, iid_source(Dist.uniform(2), 1))


@given(st.integers(0, 2 ** 32), st.integers(0, 63), st.integers(1, 3))
def test_given_h_iid_is_power_of_image(seed, h, T):
    f = affine_family(8, 2)
    d = Dist.from_weights(SplitMix64(seed).fraction_weights(8, 4))
    got = hashed_given_h(f, h, iid_source(d, T))
    assert got.flatten() == iid_power(image_dist(f, h, d), T).flatten()


def test_guard():
    with pytest.raises(GuardError):
        hashed_joint(affine_family(16, 2), iid_source(Dist.uniform(16), 20))
    with pytest.raises(DistError):
        hashed_joint(affine_family(8, 2), iid_source(Dist.uniform(4), 1))


def test_monte_carlo_agrees():
    f = affine_family(8, 2)
    src = iid_source(Dist.from_weights([3, 1, 0, 2, 1, 1, 0, 4]), 2)
    j = hashed_joint(f, src)
    rng = np.random.default_rng(2024)
    n = 1_000_000
    p = np.array([float(v) for v in src.iid.mass])
    h = rng.integers(0, f.size, n)
    xs = rng.choice(8, size=(n, 2), p=p)
    tab = f.table()
    cells = (h * 2 + tab[h, xs[:, 0]]) * 2 + tab[h, xs[:, 1]]
    freq = np.bincount(cells, minlength=j.size) / n
    exact = np.array([float(v) for v in j.table.ravel()])
    live = exact > 0
    assert np.all(freq[~live] == 0)
    # one 3-sigma test per cell would fail by chance on ~0.27% of 256 cells,
    # so test the chi-square total at 3 sigma and each cell at the Bonferroni level
    k = int(live.sum())
    chi2 = float(n * ((freq[live] - exact[live]) ** 2 / exact[live]).sum())
    assert abs(chi2 - (k - 1)) <= 3 * np.sqrt(2 * (k - 1))
    z = np.abs(freq[live] - exact[live]) / np.sqrt(exact[live] * (1 - exact[live]) / n)
    assert z.max() <= 4.5


def test_json_round_trip():
    src = random_block_source(SplitMix64(4), 5, 3, 2)
    again = BlockSourceTree.from_json(src.to_json())
    assert again.joint() == src.joint()
    it = iid_source(Dist.uniform(3), 2)
    assert BlockSourceTree.from_json(it.to_json()).joint() == it.joint()


def test_parse_source(tmp_path):
    s = parse_source("flat:n8:support=3,1,2")
    assert s.support == (1, 2, 3) and s.descriptor == "flat:n8:support=1,2,3"
    (tmp_path / "d.json").write_text('{"domain_size": 2, "mode": "exact", "mass": ["1/3", "2/3"]}')
    it = parse_source("iid:d.json:t2", base=tmp_path)
    assert it.T == 2 and it.iid == Dist((F(1, 3), F(2, 3)))
    (tmp_path / "l.txt").write_text("1/4 3/4")
    assert parse_source("iid:l.txt:t1", base=tmp_path).iid.mass == (F(1, 4), F(3, 4))
    src = random_block_source(SplitMix64(1), 4, 2, 2)
    (tmp_path / "t.json").write_text(src.to_json())
    assert parse_source("tree:t.json", base=tmp_path).joint() == src.joint()
    r1, r2 = parse_source("random:n6:t2:k3", seed=5), parse_source("random:n6:t2:k3", seed=5)
    assert r1.joint() == r2.joint() and validate_block_k_source(r1, 3).ok
    for bad in ("flat:n8", "bogus:1", "random:n2:t1:k3"):
        with pytest.raises(ValueError):
            parse_source(bad)


@pytest.mark.parametrize("n,T", list(iproduct((2, 3), (1, 2))))
def test_prefix_enumeration_order(n, T):
    src = iid_source(Dist.uniform(n), T)
    paths = [x for x, _ in src.paths()]
    assert paths == sorted(paths) == list(iproduct(range(n), repeat=T))
