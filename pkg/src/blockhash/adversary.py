"""Constructive lower-bound witnesses: flat sources that most hash functions
map far from uniform, the explicit bad instance for 2-universal hashing,
and certificates that a distribution is far from every low-collision one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .blocksrc import (DEFAULT_GUARD_CELLS, FlatSource, hashed_given_h, hashed_joint, image_counts,
                       iid_source, parse_source)
from .bounds import GT, BoundReport, PreconditionError
from .exactdist import (Dist, JointDist, cp, hellinger_closeness, min_cp_within_distance,
                        stat_dist_to_uniform)
from .hashfam import HashFamily, lb_family, lb_family_seeds, parse_family
from .rng import SplitMix64, derive_key

EXHAUSTIVE_LIMIT = 10 ** 5
DEFAULT_GRID = tuple(Fraction(k, 100) for k in range(100))


@dataclass(frozen=True)
class LowerBoundWitness:
    """A family, a source, and exact quantities certifying a lower bound.

    ``inputs`` is enough to rebuild the witness with :func:`rebuild`.
    """

    kind: str
    family: str
    source: str
    claimed_property: str
    inputs: dict
    certificate: dict
    certified: bool


@dataclass(frozen=True)
class SearchResult:
    source: FlatSource
    fraction_far: Fraction
    exhaustive: bool
    candidates: int


def _far_fractions(f: HashFamily, supports: np.ndarray, eps: Fraction) -> np.ndarray:
    """For each support (rows of ``supports``), the number of members h with
    Delta(h(U_S), U) >= eps and Delta > 0."""
    tab = f.table()
    M, K = f.range_size, supports.shape[1]
    out = np.empty(len(supports), dtype=np.int64)
    # Delta = sum_y |M c_y - K| / (2 M K); compare numerators exactly
    need_num, need_den = eps.numerator, eps.denominator
    for i, S in enumerate(supports):
        ys = tab[:, S]
        codes = ys + (np.arange(f.size)[:, None] * M)
        counts = np.bincount(codes.reshape(-1), minlength=f.size * M).reshape(f.size, M)
        dev = np.abs(M * counts - K).sum(axis=1)
        far = (dev * need_den >= 2 * M * K * need_num) & (dev > 0)
        out[i] = int(far.sum())
    return out


def search_flat_source(f: HashFamily, K: int, eps, trials: int, seed: int) -> SearchResult:
    """Flat K-source maximizing the fraction of members that map it eps-far from uniform.

    All C(N, K) supports are scored when trials >= C(N, K) <= 10^5;
    otherwise ``trials`` supports are drawn, trial i from the stream keyed by
    (seed, i). Ties go to the lexicographically smallest support.
    """
    N = f.domain_size
    if not 1 <= K <= N:
        raise PreconditionError(f"need 1 <= K <= N = {N}")
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    eps = Fraction(eps)
    total = math.comb(N, K)
    exhaustive = trials >= total and total <= EXHAUSTIVE_LIMIT
    if exhaustive:
        supports = np.array(list(combinations(range(N), K)), dtype=np.int64).reshape(total, K)
    else:
        supports = np.array([sorted(SplitMix64(derive_key(seed, i)).sample(N, K)) for i in range(trials)],
                            dtype=np.int64).reshape(trials, K)
    far = _far_fractions(f, supports, eps)
    best = far.max()
    winners = sorted(tuple(int(v) for v in supports[i]) for i in np.flatnonzero(far == best))
    return SearchResult(FlatSource(N, winners[0]), Fraction(int(best), f.size), exhaustive, len(supports))


def _slice_mean_distance(f: HashFamily, joint: JointDist):
    total = Fraction(0)
    for h in range(f.size):
        sl = joint.condition("H", h)
        total += stat_dist_to_uniform(sl)
    return total / f.size


def lb_stat_witness(f: HashFamily, K: int, eps, T: int, trials: int = 500, seed: int = 0,
                    target=None, guard: int = DEFAULT_GUARD_CELLS) -> LowerBoundWitness:
    """T iid copies of the best searched flat source; exact distance of
    (H, Y) from (H, U) against ``target`` (default eps)."""
    eps = Fraction(eps)
    target = eps if target is None else Fraction(target)
    found = search_flat_source(f, K, eps, trials, seed)
    src = iid_source(found.source.dist(), T)
    joint = hashed_joint(f, src, guard)
    farness = stat_dist_to_uniform(joint)
    mean_slices = _slice_mean_distance(f, joint)
    cert = {"fraction_far": found.fraction_far, "farness": farness, "mean_slice_distance": mean_slices,
            "slices_agree": farness == mean_slices, "target": target, "exhaustive": found.exhaustive}
    return LowerBoundWitness("lbstat", f.descriptor, found.source.descriptor, "far_from_uniform",
                             {"family": f.descriptor, "K": K, "eps": eps, "T": T, "trials": trials,
                              "seed": seed, "target": target},
                             cert, farness >= target)


def farness_from_low_cp(joint, alpha, budget_grid: Sequence = DEFAULT_GRID) -> Fraction:
    """Largest gamma on the grid with min_cp_within_distance(joint, gamma) > alpha / cells.

    Any distribution with collision probability at most alpha / cells then
    differs from ``joint`` by more than gamma in statistical distance. Returns
    0 when no grid point certifies anything.
    """
    alpha = Fraction(alpha) if not isinstance(alpha, float) else alpha
    cells = joint.size if isinstance(joint, JointDist) else joint.domain_size
    threshold = alpha / cells
    grid = sorted(Fraction(g) for g in budget_grid)
    # min_cp_within_distance is nonincreasing in gamma: binary search the prefix
    lo, hi = 0, len(grid)
    while lo < hi:
        mid = (lo + hi) // 2
        if min_cp_within_distance(joint, grid[mid]) > threshold:
            lo = mid + 1
        else:
            hi = mid
    return grid[lo - 1] if lo else Fraction(0)


def classify_lb_index(m: int, t: int, s: int, index: int) -> str:
    """'bad' (b != 0 and one seed is zero), 'good' (b != 0, no zero seed),
    'uniform' (b = 0, a != 0) or 'zero' (a = b = 0), from the seeds alone."""
    big = m ** t
    a, b = divmod(index, big)
    if b == 0:
        return "zero" if a == 0 else "uniform"
    seeds = lb_family_seeds(m, t, s, index)
    return "bad" if 0 in seeds else "good"


def _image_kind(row: list[int], m: int, t: int, s: int) -> str:
    big, small = m ** t, m ** (t - 1)
    if all(c == s * small for c in row):
        return "uniform"
    if row[0] == big + (s - 1) * small and all(c == (s - 1) * small for c in row[1:]):
        return "bad"
    if row[0] == s * big:
        return "zero"
    return "other"


def lb_2univ_witness(M: int, t: int, s: int, T: int, alpha=2, guard: int = DEFAULT_GUARD_CELLS,
                     grid: Sequence = DEFAULT_GRID) -> LowerBoundWitness:
    """The explicit instance: lb_family(M, t, s) and X uniform on its whole domain.

    Certifies the bad-index fraction, the bad-index collision probability and
    Hellinger closeness, the T-fold closeness power, and (within the guard)
    farness of the hashed joint from every distribution with cp <= alpha/(|H| M^T).
    """
    if s < 2:
        raise PreconditionError("need s >= 2")
    f = lb_family(M, t, s)
    big = M ** t
    N = K = s * big
    x = Dist.uniform(N)
    eps = Fraction(s, 4 * big)
    counts, denom = image_counts(f, x)
    by_seed = [classify_lb_index(M, t, s, i) for i in range(f.size)]
    # X is uniform, so the weights are preimage counts
    by_image = [_image_kind(row, M, t, s) for row in counts.tolist()]
    agree = all((a == "bad") == (b == "bad") for a, b in zip(by_seed, by_image))
    good_uniform = all(b == "uniform" for a, b in zip(by_seed, by_image) if a == "good")
    bad = [i for i, k in enumerate(by_seed) if k == "bad"]
    bad_fraction = Fraction(len(bad), f.size)
    formula_fraction = (1 - Fraction(1, big)) * Fraction(s, big)
    cp_formula = Fraction(1, M) + Fraction(M - 1, s * s * M)
    bound = 1 - Fraction(M, 64) / (K * eps)
    bound_m2 = 1 - Fraction(M * M, 64) / (K * eps)
    bad_cps, closeness = set(), None
    bound_ok = bound_m2_ok = True
    for i in bad:
        d = Dist(tuple(Fraction(int(c), denom) for c in counts[i].tolist()))
        bad_cps.add(cp(d))
        c = hellinger_closeness(d)
        closeness = c if closeness is None else closeness
        bound_ok &= c <= bound
        bound_m2_ok &= c <= bound_m2
    cert = {"N": N, "K": K, "eps": eps, "family_size": f.size,
            "bad_fraction": bad_fraction, "bad_fraction_formula": formula_fraction,
            "bad_cp": sorted(bad_cps), "bad_cp_formula": cp_formula,
            "classification_agrees": agree, "good_images_uniform": good_uniform,
            "bad_closeness": closeness, "closeness_bound": bound, "closeness_bound_holds": bound_ok,
            "closeness_bound_m2": bound_m2, "closeness_bound_m2_holds": bound_m2_ok,
            "closeness_power_T": closeness ** T if closeness is not None else None}
    if bad and M ** T <= guard:
        seq = hashed_given_h(f, bad[0], iid_source(x, T), guard)
        cert["closeness_power_exact"] = hellinger_closeness(seq) == closeness ** T
    if f.size * M ** T <= guard:
        joint = hashed_joint(f, iid_source(x, T), guard)
        cert["farness_low_cp"] = farness_from_low_cp(joint, alpha, grid)
        cert["alpha"] = Fraction(alpha)
    certified = (bad_fraction == formula_fraction and bad_cps == {cp_formula} and agree
                 and good_uniform and bound_ok and cert.get("closeness_power_exact", True))
    return LowerBoundWitness("lb2univ", f.descriptor, FlatSource(N, tuple(range(N))).descriptor, "bad_instance",
                             {"M": M, "t": t, "s": s, "T": T, "alpha": Fraction(alpha)}, cert, certified)


def support_counting_bound(f: HashFamily, K: int, T: int, alpha, delta, source: FlatSource | None = None,
                           guard: int = DEFAULT_GUARD_CELLS) -> BoundReport:
    """Farness of (Y_1..Y_T) alone from cp <= alpha/M^T, by counting its support.

    Y takes at most |H| K^T values; when that is at most (delta^2/(4 alpha)) M^T
    the water-filling bound at budget delta exceeds alpha/M^T, so Y is
    (1 - delta)-far from every such distribution.
    """
    alpha, delta = Fraction(alpha), Fraction(delta)
    source = source or FlatSource(f.domain_size, tuple(range(K)))
    if source.K != K:
        raise PreconditionError("source size differs from K")
    joint = hashed_joint(f, iid_source(source.dist(), T), guard)
    ys = joint.marginal([n for n in joint.names if n != "H"])
    M = f.range_size
    support = sum(1 for m in ys.table.reshape(-1).tolist() if m)
    cap = f.size * K ** T
    premise = cap <= delta * delta / (4 * alpha) * M ** T
    return BoundReport("supportcount", min_cp_within_distance(ys, 1 - delta), alpha / M ** T, GT,
                       {"family": f.descriptor, "K": K, "T": T, "alpha": alpha, "delta": delta},
                       checks={"support_le_count": support <= cap},
                       extras={"support": support, "count_bound": cap, "premise_ok": premise,
                               "uniform_distance": stat_dist_to_uniform(ys),
                               "uniform_distance_floor": 1 - Fraction(support, M ** T)})


def lb_no_H_witness(f: HashFamily, K: int, T: int, alpha, source: FlatSource | None = None,
                    eps=Fraction(1, 8), trials: int = 200, seed: int = 0,
                    grid: Sequence = DEFAULT_GRID, guard: int = DEFAULT_GUARD_CELLS) -> LowerBoundWitness:
    """Farness of the hashed values without H from cp <= alpha/M^T.

    Without an explicit source, a flat K-source is found by search as for
    lb_stat_witness. Data processing is checked on the way: dropping H
    cannot increase the distance to uniform.
    """
    alpha = Fraction(alpha)
    if source is None:
        source = search_flat_source(f, K, eps, trials, seed).source
    joint = hashed_joint(f, iid_source(source.dist(), T), guard)
    ys = joint.marginal([n for n in joint.names if n != "H"])
    gamma_marg = farness_from_low_cp(ys, alpha, grid)
    gamma_joint = farness_from_low_cp(joint, alpha, grid)
    d_marg, d_joint = stat_dist_to_uniform(ys), stat_dist_to_uniform(joint)
    cert = {"farness_marginal": gamma_marg, "farness_joint": gamma_joint,
            "uniform_distance_marginal": d_marg, "uniform_distance_joint": d_joint,
            "data_processing": d_marg <= d_joint}
    return LowerBoundWitness("lbnoh", f.descriptor, source.descriptor, "marginal_far_from_low_cp",
                             {"family": f.descriptor, "K": K, "T": T, "alpha": alpha, "eps": Fraction(eps),
                              "trials": trials, "seed": seed, "source": source.descriptor},
                             cert, d_marg <= d_joint)


def rebuild(w: LowerBoundWitness) -> LowerBoundWitness:
    """Recompute a witness from its inputs."""
    p = w.inputs
    if w.kind == "lb2univ":
        return lb_2univ_witness(p["M"], p["t"], p["s"], p["T"], p["alpha"])
    if w.kind == "lbstat":
        return lb_stat_witness(parse_family(p["family"]), p["K"], p["eps"], p["T"], p["trials"], p["seed"],
                               p["target"])
    if w.kind == "lbnoh":
        return lb_no_H_witness(parse_family(p["family"]), p["K"], p["T"], p["alpha"],
                               parse_source(p["source"]), p["eps"], p["trials"], p["seed"])
    raise ValueError(f"unknown witness kind {w.kind!r}")
