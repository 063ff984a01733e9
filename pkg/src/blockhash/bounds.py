"""Exact checkers for the upper bounds on hashed block sources and the
supporting lemmas on collision probability, Hellinger closeness and
products of distributions.

Every checker returns a :class:`BoundReport` holding the measured quantity
next to the bound it is compared against. Quantities stay exact (Fraction,
or Surd when square roots appear) whenever the inputs are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import constants
from .blocksrc import (BlockSourceTree, as_block_source, hashed_joint, image_counts,
                       validate_block_k_source)
from .exactdist import (EXACT, Dist, DistError, JointDist, cond_cp, cp, hellinger_closeness,
                        stat_dist, stat_dist_to_uniform)
from .exactreal import OneMinusExpNeg, Surd
from .hashfam import HashFamily, verify_s_wise, verify_universal

LE = "<="
GE = ">="
GT = ">"


class PreconditionError(ValueError):
    """The inputs do not meet the hypotheses of the claim being checked."""


@dataclass(frozen=True)
class BoundReport:
    """Measured value of a claim next to its bound.

    ``satisfied`` is derived from ``direction``: ``"<="`` means the measured
    value must not exceed the bound, ``">"`` that it must exceed it.
    ``checks`` holds auxiliary inequalities verified on the way; ``ok``
    requires all of them as well.
    """

    name: str
    measured: object
    bound: object
    direction: str
    parameters: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    witness: object = None
    satisfied: bool = field(init=False)

    def __post_init__(self):
        if self.direction == LE:
            sat = self.measured <= self.bound
        elif self.direction == GE:
            sat = self.measured >= self.bound
        elif self.direction == GT:
            sat = self.measured > self.bound
        else:
            raise ValueError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, "satisfied", bool(sat))

    @property
    def ok(self) -> bool:
        return self.satisfied and all(self.checks.values())


@lru_cache(maxsize=64)
def _is_universal(f: HashFamily) -> bool:
    return verify_universal(f, 2)


@lru_cache(maxsize=64)
def _is_4wise(f: HashFamily) -> bool:
    return verify_s_wise(f, 4)


def _require_universal(f: HashFamily) -> None:
    if not _is_universal(f):
        raise PreconditionError(f"{f.descriptor} is not 2-universal")


def _require_block_source(src: BlockSourceTree, K):
    v = validate_block_k_source(src, K)
    if not v.ok:
        raise PreconditionError(f"not a block {K}-source: cp {v.worst_cp} after prefix {v.worst_prefix}")
    return v


def _frac(x):
    return x if isinstance(x, (Fraction, float, Surd)) else Fraction(x)


# conditional collision profiles ------------------------------------------

def _safe_div(num, den, mode):
    if mode == EXACT:
        op = np.frompyfunc(lambda s, t: s / t if t else Fraction(0), 2, 1)
        return np.asarray(op(num, den), dtype=object)
    num, den = np.asarray(num, dtype=float), np.asarray(den, dtype=float)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def block_cp_tables(joint: JointDist, blocks: Sequence[str], base: Sequence[str] = ()) -> list[np.ndarray]:
    """cp(block_i | base, blocks_<i = prefix) for every prefix.

    Entry i has one dimension per axis of ``base + blocks[:i]`` followed by
    singleton dimensions, so it broadcasts against the full joint table.
    Prefixes of probability zero get 0.
    """
    base, blocks = list(base), list(blocks)
    if joint.names != tuple(base + blocks):
        joint = joint.marginal(base + blocks)
    out = []
    for i in range(len(blocks)):
        m = joint.marginal(base + blocks[: i + 1]).table
        dtype = object if joint.mode == EXACT else float
        sq = np.asarray((m * m).sum(axis=-1), dtype=dtype)
        tot = np.asarray(m.sum(axis=-1), dtype=dtype)
        c = _safe_div(sq, tot * tot, joint.mode)
        out.append(c.reshape(c.shape + (1,) * (len(blocks) - i)))
    return out


def average_block_cp(joint: JointDist, blocks: Sequence[str], base: Sequence[str] = ()) -> np.ndarray:
    """(1/T) sum_i cp(block_i | prefix) at every point of the joint."""
    tables = block_cp_tables(joint, blocks, base)
    total = tables[0]
    for t in tables[1:]:
        total = total + t
    return np.broadcast_to(total / len(blocks), joint.shape)


def _hashed_axes(joint: JointDist) -> list[str]:
    if not joint.names or joint.names[0] != "H":
        raise DistError("hashed joint must have 'H' as axis 0")
    return list(joint.names[1:])


def tail_mass(joint: JointDist, values: np.ndarray, threshold):
    """Total mass of points whose value exceeds ``threshold``."""
    zero = Fraction(0) if joint.mode == EXACT else 0.0
    masses = joint.table.reshape(-1).tolist()
    vals = np.broadcast_to(values, joint.shape).reshape(-1).tolist()
    above = {v: v > threshold for v in set(vals)}
    return sum((m for m, v in zip(masses, vals) if m and above[v]), zero)


# leftover hash lemma and the conditional chain ----------------------------

def lhl_check(f: HashFamily, x: Dist, K=None) -> BoundReport:
    """cp(H(X) | H) against 1/M + 1/K."""
    _require_universal(f)
    K = (1 / cp(x)) if K is None else _frac(K)
    if cp(x) * K > 1:
        raise PreconditionError(f"cp(X) = {cp(x)} exceeds 1/K = {1 / K}")
    counts, denom = image_counts(f, x)
    if x.mode == EXACT:
        sq = sum(int(c) * int(c) for c in counts.reshape(-1).tolist())
        measured = Fraction(sq, f.size * denom * denom)
    else:
        measured = float((counts * counts).sum()) / f.size
    M = f.range_size
    return BoundReport("lhl", measured, Fraction(1, M) + 1 / K, LE,
                       {"family": f.descriptor, "N": f.domain_size, "M": M, "K": K})


def cond_cp_chain_check(f: HashFamily, src, K, joint: JointDist | None = None) -> BoundReport:
    """max_i cp(Y_i | H, Y_<i) against 1/M + 1/K."""
    src = as_block_source(src)
    K = _frac(K)
    _require_block_source(src, K)
    _require_universal(f)
    joint = hashed_joint(f, src) if joint is None else joint
    ys = _hashed_axes(joint)
    per_block = [cond_cp(joint, y, ["H"] + ys[:i]) for i, y in enumerate(ys)]
    M = f.range_size
    return BoundReport("condchain", max(per_block), Fraction(1, M) + 1 / K, LE,
                       {"family": f.descriptor, "N": f.domain_size, "M": M, "T": src.T, "K": K},
                       extras={"per_block": per_block, "cp_H": Fraction(1, f.size)})


def markov_tail(f: HashFamily, src, K, eps, joint: JointDist | None = None) -> BoundReport:
    """Pr over (h, y) that the average conditional cp exceeds 1/M + 1/(K eps), against eps."""
    src = as_block_source(src)
    K, eps = _frac(K), _frac(eps)
    _require_block_source(src, K)
    joint = hashed_joint(f, src) if joint is None else joint
    M = f.range_size
    threshold = Fraction(1, M) + 1 / (K * eps)
    avg = average_block_cp(joint, _hashed_axes(joint), ["H"])
    measured = tail_mass(joint, avg, threshold)
    return BoundReport("markov", measured, eps, LE,
                       {"family": f.descriptor, "N": f.domain_size, "M": M, "T": src.T, "K": K, "eps": eps},
                       extras={"threshold": threshold})


@dataclass(frozen=True)
class ModifyResult:
    joint: JointDist
    distance: object
    rejected_mass: object
    cut_counts: tuple  # cut_counts[j] = number of points resampled from block j+1 on


def modify(joint: JointDist, alpha) -> ModifyResult:
    """Move (H, Y) to a nearby joint whose every point has average
    conditional cp at most 1/M + alpha.

    For a point whose running excess (1/T) sum_{i<=k} (cp_i - 1/M) first
    exceeds alpha at block k = j+1, the blocks j+1..T are replaced by
    independent uniform values (j = 0 resamples every block). Points that
    never exceed alpha are kept. The H marginal is unchanged.
    """
    if joint.mode != EXACT:
        raise DistError("modify requires an exact joint")
    ys = _hashed_axes(joint)
    sizes = joint.shape[1:]
    if len(set(sizes)) != 1:
        raise DistError("all hashed blocks must share one range")
    T, M = len(ys), sizes[0]
    tables = block_cp_tables(joint, ys, ["H"])
    inv_m = Fraction(1, M)
    src = joint.table
    out = np.empty(joint.shape, dtype=object)
    out.fill(Fraction(0))
    rejected = Fraction(0)
    cuts = [0] * (T + 1)
    steps: dict = {}
    for idx in np.ndindex(*joint.shape):
        p = src[idx]
        if not p:
            continue
        running, j = Fraction(0), T
        for i in range(T):
            running += (tables[i][idx[: 1 + i] + (0,) * (T - i)] - inv_m) / T
            key = (running, alpha)
            if key not in steps:
                steps[key] = running > alpha
            if steps[key]:
                j = i
                break
        cuts[j] += 1
        if j == T:
            out[idx] += p
        else:
            rejected += p
            region = idx[: 1 + j] + (slice(None),) * (T - j)
            out[region] += p / M ** (T - j)
    new = JointDist(list(zip(joint.names, joint.shape)), out, EXACT, validate=False)
    return ModifyResult(new, stat_dist(joint, new), rejected, tuple(cuts))


def max_average_excess(joint: JointDist):
    """Largest (1/T) sum_i cp(Y_i | H, Y_<i) - 1/M over the support."""
    ys = _hashed_axes(joint)
    avg = average_block_cp(joint, ys, ["H"]).reshape(-1).tolist()
    M = joint.shape[1]
    support = [a for a, m in zip(avg, joint.table.reshape(-1).tolist()) if m]
    return max(support) - Fraction(1, M)


def thm_2univ_cp_check(f: HashFamily, src, K, eps) -> BoundReport:
    """Collision probability after ``modify(., 1/(K eps))`` against
    (1/(|H| M^T)) (1 + M/(K eps))^T, with distance <= tail <= eps."""
    src = as_block_source(src)
    K, eps = _frac(K), _frac(eps)
    _require_universal(f)
    _require_block_source(src, K)
    joint = hashed_joint(f, src)
    tail = markov_tail(f, src, K, eps, joint)
    alpha = 1 / (K * eps)
    mod = modify(joint, alpha)
    M, T = f.range_size, src.T
    bound = Fraction(1, f.size * M ** T) * (1 + M * alpha) ** T
    excess = max_average_excess(mod.joint)
    return BoundReport(
        "thm2cp", cp(mod.joint), bound, LE,
        {"family": f.descriptor, "N": f.domain_size, "M": M, "T": T, "K": K, "eps": eps},
        checks={"distance_le_tail": mod.distance <= tail.measured,
                "tail_le_eps": tail.measured <= eps,
                "rejected_eq_tail": mod.rejected_mass == tail.measured,
                "pointwise_avg_cp": excess <= alpha,
                "h_marginal_kept": mod.joint.marginal(["H"]) == joint.marginal(["H"])},
        extras={"tail": tail.measured, "distance": mod.distance, "rejected_mass": mod.rejected_mass,
                "max_excess": excess, "alpha": alpha})


# 4-wise independence -------------------------------------------------------

def fourwise_variance_check(f: HashFamily, x: Dist, K=None) -> BoundReport:
    """Var_h[cp(h(X))] against 2/(M K^2)."""
    if not _is_4wise(f):
        raise PreconditionError(f"{f.descriptor} is not 4-wise independent")
    K = (1 / cp(x)) if K is None else _frac(K)
    if cp(x) * K > 1:
        raise PreconditionError(f"cp(X) = {cp(x)} exceeds 1/K = {1 / K}")
    counts, denom = image_counts(f, x)
    if x.mode == EXACT:
        per_h = [Fraction(sum(int(c) ** 2 for c in row), denom * denom) for row in counts.tolist()]
        mean = sum(per_h, Fraction(0)) / f.size
        var = sum(((c - mean) ** 2 for c in per_h), Fraction(0)) / f.size
    else:
        per_h = (counts * counts).sum(axis=1)
        mean, var = float(per_h.mean()), float(per_h.var())
    M = f.range_size
    return BoundReport("variance4", var, Fraction(2, M) / (K * K), LE,
                       {"family": f.descriptor, "N": f.domain_size, "M": M, "K": K},
                       extras={"mean_cp": mean})


def _fourwise_threshold(M: int, K: Fraction, eps: Fraction) -> Surd:
    return (1 + M / K + Surd.sqrt(2 * M / (K * K * eps))) / M


def thm_4wise_cp_check(f: HashFamily, src, K, eps) -> BoundReport:
    """Tail of the average conditional cp above (1/M)(1 + M/K + sqrt(2M/(K^2 eps)))
    and collision probability after modify, for 4-wise independent families."""
    src = as_block_source(src)
    K, eps = _frac(K), _frac(eps)
    if not _is_4wise(f):
        raise PreconditionError(f"{f.descriptor} is not 4-wise independent")
    _require_block_source(src, K)
    joint = hashed_joint(f, src)
    M, T = f.range_size, src.T
    theta = _fourwise_threshold(M, K, eps)
    avg = average_block_cp(joint, _hashed_axes(joint), ["H"])
    tail = tail_mass(joint, avg, theta)
    alpha = theta - Fraction(1, M)
    mod = modify(joint, alpha)
    bound = theta ** T / f.size
    excess = max_average_excess(mod.joint)
    return BoundReport(
        "thm4cp", cp(mod.joint), bound, LE,
        {"family": f.descriptor, "N": f.domain_size, "M": M, "T": T, "K": K, "eps": eps},
        checks={"tail_le_eps": tail <= eps, "distance_le_tail": mod.distance <= tail,
                "pointwise_avg_cp": excess <= alpha},
        extras={"tail": tail, "threshold": theta, "distance": mod.distance,
                "alpha_2univ": 1 / (K * eps), "alpha_4wise": alpha})


# statistical distance via Hellinger closeness -----------------------------

def hellinger_sandwich(joint: JointDist) -> dict:
    """d^2 <= Delta <= sqrt(2) d for the distance of ``joint`` to uniform, d^2 = 1 - C."""
    delta = stat_dist_to_uniform(joint)
    c = hellinger_closeness(joint)
    d2 = 1 - c
    return {"delta": delta, "closeness": c, "d_sq": d2,
            "lower": d2 <= delta, "upper": delta * delta <= 2 * d2}


def thm_2univ_stat_check(f: HashFamily, src, K, eps) -> BoundReport:
    """Delta((H, Y), (H, U)) against eps when K > M T / eps^2."""
    src = as_block_source(src)
    K, eps = _frac(K), _frac(eps)
    M, T = f.range_size, src.T
    if not K > M * T / (eps * eps):
        raise PreconditionError(f"need K > M T / eps^2 = {M * T / (eps * eps)}, got K = {K}")
    _require_universal(f)
    _require_block_source(src, K)
    joint = hashed_joint(f, src)
    s = hellinger_sandwich(joint)
    # closeness^2 >= (1 + M/K)^(-T)
    c_floor = s["closeness"] * s["closeness"] * (1 + M / K) ** T >= 1
    return BoundReport(
        "thm2stat", s["delta"], eps, LE,
        {"family": f.descriptor, "N": f.domain_size, "M": M, "T": T, "K": K, "eps": eps},
        checks={"hellinger_lower": s["lower"], "hellinger_upper": s["upper"], "closeness_floor": c_floor},
        extras={"closeness": s["closeness"], "d_sq": s["d_sq"]})


def closeness_chain_check(joint: JointDist, alphas: Sequence) -> BoundReport:
    """C(X_1..X_T) against sqrt(1 / prod alpha_i) given cp(X_i | X_<i) <= alpha_i / M_i."""
    names = list(joint.names)
    if len(alphas) != len(names):
        raise ValueError("one alpha per axis required")
    alphas = [_frac(a) for a in alphas]
    premise = []
    for i, (name, size) in enumerate(zip(names, joint.shape)):
        premise.append(cond_cp(joint, name, names[:i]) * size <= alphas[i])
    prod = math.prod(alphas, start=Fraction(1))
    return BoundReport("closeness", hellinger_closeness(joint), Surd.sqrt(1 / prod), GE,
                       {"shape": joint.shape, "alphas": alphas},
                       extras={"premise_ok": all(premise), "premise": premise})


# collision-probability lemmas ---------------------------------------------

def cp_upper_bound_check(joint: JointDist) -> BoundReport:
    """cp(X) <= alpha^T where alpha is the largest per-point average conditional cp."""
    names = list(joint.names)
    tables = block_cp_tables(joint, names)
    T = len(names)
    avg = average_block_cp(joint, names).reshape(-1).tolist()
    prods = tables[0]
    for t in tables[1:]:
        prods = prods * t
    prods = np.broadcast_to(prods, joint.shape).reshape(-1).tolist()
    masses = joint.table.reshape(-1).tolist()
    alpha = max(a for a, m in zip(avg, masses) if m)
    max_prod = max(p for p, m in zip(prods, masses) if m)
    measured = cp(joint)
    return BoundReport("cp_upper_bound", measured, alpha ** T, LE, {"shape": joint.shape},
                       checks={"max_product": measured <= max_prod}, extras={"alpha": alpha})


def cond_cp_bruteforce(joint: JointDist, target: str, given: Sequence[str]):
    """E_g[cp(target | given = g)] by explicit conditioning on every g."""
    given = list(given)
    if not given:
        return cp(joint.marginal([target]))
    marg = joint.marginal(given)
    total = Fraction(0) if joint.mode == EXACT else 0.0
    for g in np.ndindex(*marg.shape):
        pg = marg.table[g]
        if not pg:
            continue
        cond = joint.marginal(given + [target])
        for name, v in zip(given, g):
            cond = cond.condition(name, v)
        total += pg * cp(cond)
    return total


def cond_cp_order_check(joint: JointDist, x: str, y: str, z: str) -> BoundReport:
    """cp(X) <= cp(X | Y) <= cp(X | Y, Z), plus agreement with the definition."""
    c0 = cp(joint.marginal([x]))
    c1 = cond_cp(joint, x, [y])
    c2 = cond_cp(joint, x, [y, z])
    return BoundReport("cond_cp_order", c1, c0, GE, {"axes": (x, y, z)},
                       checks={"yz_ge_y": c2 >= c1,
                               "matches_definition": c1 == cond_cp_bruteforce(joint, x, [y])
                               and c2 == cond_cp_bruteforce(joint, x, [y, z])},
                       extras={"cp": c0, "cp_given_y": c1, "cp_given_yz": c2})


# products of distributions ------------------------------------------------

def _compositions(T: int, k: int) -> Iterator[tuple[int, ...]]:
    if k == 1:
        yield (T,)
        return
    for first in range(T + 1):
        for rest in _compositions(T - first, k - 1):
            yield (first,) + rest


def _multinomial(counts) -> int:
    out, n = 1, 0
    for c in counts:
        n += c
        out *= math.comb(n, c)
    return out


def product_distance(x: Dist, y: Dist, T: int, guard: int = 1 << 20):
    """Exact Delta(X^T, Y^T), summing over type classes."""
    if x.domain_size != y.domain_size:
        raise DistError("domain mismatch")
    support = [i for i in range(x.domain_size) if x[i] or y[i]]
    k = len(support)
    if math.comb(T + k - 1, k - 1) > guard:
        raise PreconditionError(f"{math.comb(T + k - 1, k - 1)} type classes exceed guard {guard}")
    if x.mode == y.mode == EXACT:
        denom = math.lcm(*(m.denominator for i in support for m in (x[i], y[i])))
        a = [int(x[i] * denom) for i in support]
        b = [int(y[i] * denom) for i in support]
        total = 0
        for n in _compositions(T, k):
            pa = math.prod(ai ** ni for ai, ni in zip(a, n))
            pb = math.prod(bi ** ni for bi, ni in zip(b, n))
            total += _multinomial(n) * abs(pa - pb)
        return Fraction(total, 2 * denom ** T)
    a = [float(x[i]) for i in support]
    b = [float(y[i]) for i in support]
    total = 0.0
    for n in _compositions(T, k):
        total += _multinomial(n) * abs(math.prod(ai ** ni for ai, ni in zip(a, n))
                                       - math.prod(bi ** ni for bi, ni in zip(b, n)))
    return total / 2


@dataclass(frozen=True)
class BernoulliReduction:
    """Randomized map f(v) = [v in S] OR b with Pr[b = 0] = 1/(2(1-p))."""

    event: tuple
    complemented: bool
    p: Fraction
    pr_b_zero: Fraction
    fx: Dist
    fy: Dist
    distance: Fraction
    original_distance: Fraction


def bernoulli_reduction(x: Dist, y: Dist) -> BernoulliReduction:
    """Reduce a pair at distance eps to bits with f(Y) uniform and
    Delta(f(X), f(Y)) >= eps/2.

    S is the event {v : x(v) > y(v)} attaining the distance, replaced by its
    complement when Pr[Y in S] > 1/2.
    """
    if x.mode != EXACT or y.mode != EXACT:
        raise DistError("the reduction is computed exactly")
    n = x.domain_size
    event = [v for v in range(n) if x[v] > y[v]]
    p = sum((y[v] for v in event), Fraction(0))
    complemented = p > Fraction(1, 2)
    if complemented:
        event = [v for v in range(n) if v not in set(event)]
        p = 1 - p
    b0 = 1 / (2 * (1 - p))
    gx = sum((x[v] for v in event), Fraction(0))
    # Pr[f = 0] = Pr[not in S] * Pr[b = 0]
    fx = Dist(((1 - gx) * b0, 1 - (1 - gx) * b0))
    fy = Dist(((1 - p) * b0, 1 - (1 - p) * b0))
    return BernoulliReduction(tuple(event), complemented, p, b0, fx, fy, stat_dist(fx, fy), stat_dist(x, y))


def product_growth_small(x: Dist, y: Dist, T_max: int, guard: int = 1 << 20) -> dict:
    """Delta(X^T, Y^T) for T = 1..T_max and the Bernoulli reduction of (x, y)."""
    if T_max < 1:
        raise ValueError("T_max must be at least 1")
    rows = [(T, product_distance(x, y, T, guard)) for T in range(1, T_max + 1)]
    red = bernoulli_reduction(x, y) if x.mode == y.mode == EXACT else None
    return {"rows": rows,
            "monotone": all(a[1] <= b[1] for a, b in zip(rows, rows[1:])),
            "reduction": red,
            "reduction_ok": red is None or (red.fy == Dist.uniform(2) and 2 * red.distance >= red.original_distance)}


def bernoulli_pair(eps) -> tuple[Dist, Dist]:
    """Coin with Pr[0] = 1/2 - eps, and a fair coin."""
    eps = _frac(eps)
    if not 0 <= eps <= Fraction(1, 2):
        raise ValueError("eps must lie in [0, 1/2]")
    return Dist((Fraction(1, 2) - eps, Fraction(1, 2) + eps)), Dist.uniform(2)


def product_growth_large(eps, T: int) -> BoundReport:
    """Delta(X^T, U^T) for the canonical pair at distance eps, against 1 - e^{-T eps^2/2}."""
    eps = _frac(eps)
    x, u = bernoulli_pair(eps)
    measured = product_distance(x, u, T)
    return BoundReport("prodlarge", measured, OneMinusExpNeg(T * eps * eps / 2), GE, {"eps": eps, "T": T})


def small_growth_ratio_ok(delta: Fraction, eps: Fraction, T: int, c0: Fraction) -> bool:
    """delta / (sqrt(T) eps) >= c0, decided exactly by squaring."""
    return delta * delta >= c0 * c0 * T * eps * eps


def bernoulli_growth_sweep(eps_grid=None, T_max: int = 16) -> list[tuple[Fraction, int, Fraction]]:
    """Exact (eps, T, Delta(X^T, U^T)) over the canonical-pair grid."""
    eps_grid = eps_grid or [Fraction(k, 16) for k in range(1, 9)]
    rows = []
    for eps in eps_grid:
        x, u = bernoulli_pair(eps)
        rows.extend((eps, T, product_distance(x, u, T)) for T in range(1, T_max + 1))
    return rows


def derive_c0(rows, cap=Fraction(3, 10), digits: int = 4) -> Fraction:
    """Largest multiple of 10^-digits not above min Delta/(sqrt(T) eps) over rows with Delta <= cap."""
    scale = 10 ** digits
    best = None
    for eps, T, delta in rows:
        if delta > cap:
            continue
        # floor(scale * delta / (sqrt(T) eps)) exactly
        v = delta * scale / eps
        q = math.isqrt(int(v * v / T))
        while Fraction(q + 1) ** 2 * T <= v * v:
            q += 1
        while Fraction(q) ** 2 * T > v * v:
            q -= 1
        best = q if best is None else min(best, q)
    return Fraction(best, scale)


# hypergeometric window ----------------------------------------------------

def hypergeom_window_prob(N: int, K: int, tset: int, L, beta) -> tuple[Fraction, list[int]]:
    """Pr_S[ | |S cap T| - L | <= beta sqrt(L) ] for a uniform K-subset S, and the integers in the window."""
    L, beta = _frac(L), _frac(beta)
    lo, hi = max(0, K - (N - tset)), min(K, tset)
    window = [R for R in range(lo, hi + 1) if (R - L) ** 2 <= beta * beta * L]
    total = sum(math.comb(tset, R) * math.comb(N - tset, K - R) for R in window)
    return Fraction(total, math.comb(N, K)), window


def hypergeom_claim_check(N: int, K: int, tset: int, beta, L=None, c2=None) -> BoundReport:
    """Window probability against c'' * beta; L defaults to K |T| / N."""
    beta = _frac(beta)
    L = Fraction(K * tset, N) if L is None else _frac(L)
    c2 = constants.C_DOUBLE_PRIME if c2 is None else _frac(c2)
    if not (0 < tset <= N and 0 < K <= N):
        raise PreconditionError("need 0 < |T| <= N and 0 < K <= N")
    if not (beta > 0 and beta < 1 and beta * beta < L):
        raise PreconditionError("need 0 < beta < min(1, sqrt(L))")
    measured, window = hypergeom_window_prob(N, K, tset, L, beta)
    premise = N > 2 * K > 2 and 0 <= L <= Fraction(K, 2)
    return BoundReport("hypergeom", measured, c2 * beta, LE,
                       {"N": N, "K": K, "tset": tset, "L": L, "beta": beta},
                       extras={"ratio": measured / beta, "window": window, "premise_ok": premise})


def hypergeom_grid() -> Iterator[tuple[int, int, int, Fraction]]:
    """(N, K, |T|, beta) cells of the frozen sweep: N <= 200, N > 2K > 2,
    L = K|T|/N <= K/2, beta on a 1/8 grid with beta < min(1, sqrt(L))."""
    betas = [Fraction(k, 8) for k in range(1, 8)]
    for N in (6, 10, 20, 50, 100, 200):
        ks = sorted({k for k in (2, N // 8, N // 4, (N - 1) // 2) if k > 1 and 2 * k < N})
        for K in ks:
            step = max(1, N // 20)
            for tset in range(1, N // 2 + 1, step):
                L = Fraction(K * tset, N)
                for beta in betas:
                    if beta * beta < L:
                        yield N, K, tset, beta


def hypergeom_sweep() -> tuple[Fraction, tuple]:
    """Max of window probability / beta over the grid, and the cell attaining it."""
    best, arg = Fraction(0), None
    for N, K, tset, beta in hypergeom_grid():
        prob, _ = hypergeom_window_prob(N, K, tset, Fraction(K * tset, N), beta)
        r = prob / beta
        if r > best:
            best, arg = r, (N, K, tset, beta)
    return best, arg
