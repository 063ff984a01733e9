"""The acceptance suite, shared by the test-suite and ``blockhash selftest``.

Each criterion returns a :class:`CriterionResult` whose ``detail`` holds only
exact, run-independent values, so two runs with the same seed serialize to
identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import constants
from .adversary import farness_from_low_cp, lb_2univ_witness
from .blocksrc import iid_source, random_block_source
from .bounds import (bernoulli_growth_sweep, bernoulli_reduction, cond_cp_chain_check,
                     cond_cp_order_check, cp_upper_bound_check, fourwise_variance_check, hypergeom_sweep,
                     lhl_check, product_growth_large, small_growth_ratio_ok,
                     thm_2univ_cp_check, thm_2univ_stat_check)
from .exactdist import APPROX, Dist, JointDist, min_sq_mass
from .hashfam import (affine_family, kwise_family, lb_family, truly_random_family, universal_violation,
                      verify_universal)
from .rng import SplitMix64, derive_key
from .serialize import fmt

DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"AC{self.number:<2} {'PASS' if self.passed else 'FAIL'}  {self.title}"


def _rng(seed: int, criterion: int, i: int) -> SplitMix64:
    return SplitMix64(derive_key(seed, criterion, i))


def _flat4(n: int = 8):
    return [Dist.flat(n, S) for S in combinations(range(n), 4)]


def ac1(seed: int) -> CriterionResult:
    f = affine_family(8, 2)
    reports = [lhl_check(f, x, 4) for x in _flat4()]
    worst = max(r.measured for r in reports)
    return CriterionResult(1, "leftover hash lemma on all flat 4-sources of [8], affine(8,2)",
                           all(r.satisfied for r in reports) and len(reports) == 70,
                           {"sources": len(reports), "max_measured": worst, "bound": reports[0].bound})


def _ac2_instance(seed: int, i: int):
    rng = _rng(seed, 2, i)
    T = 1 + rng.randbelow(4)
    if i % 2 == 0:
        N = (4, 8, 16)[rng.randbelow(3) if T <= 2 else rng.randbelow(2)]
        f = affine_family(N, 2)
    else:
        N = (3, 4, 6, 8)[rng.randbelow(4)]
        f = truly_random_family(N, 2)
    K = 2 + rng.randbelow(min(3, N - 1))
    return f, random_block_source(rng, N, T, K), K


def ac2(seed: int, count: int = 100) -> CriterionResult:
    worst_margin, failures, by_family = None, 0, {"affine": 0, "random": 0}
    for i in range(count):
        f, src, K = _ac2_instance(seed, i)
        r = cond_cp_chain_check(f, src, K)
        failures += not r.satisfied
        by_family[f.descriptor.split(":")[0]] += 1
        margin = r.bound - r.measured
        worst_margin = margin if worst_margin is None else min(worst_margin, margin)
    return CriterionResult(2, "cp(Y_i | H, Y_<i) <= 1/M + 1/K on random block sources",
                           failures == 0 and count >= 100,
                           {"instances": count, "failures": failures, "min_margin": worst_margin, **by_family})


def _ac3_instance(seed: int, i: int):
    rng = _rng(seed, 3, i)
    N = (8, 16)[rng.randbelow(2)]
    T = 2 + rng.randbelow(2 if N == 8 else 1)
    K = 2 + rng.randbelow(3)
    eps = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))[rng.randbelow(3)]
    return affine_family(N, 2), random_block_source(rng, N, T, K), K, eps


def ac3(seed: int, count: int = 20) -> CriterionResult:
    main = thm_2univ_cp_check(affine_family(16, 2), iid_source(Dist.flat(16, range(8)), 4), 8, Fraction(1, 2))
    reports = [main] + [thm_2univ_cp_check(*_ac3_instance(seed, i)) for i in range(count)]
    bad = [i for i, r in enumerate(reports) if not r.ok]
    return CriterionResult(3, "modify: distance <= Markov tail <= eps and cp within (1/(|H|M^T))(1+M/(K eps))^T",
                           not bad and count >= 20,
                           {"instances": len(reports), "failing": bad, "main_cp": main.measured,
                            "main_bound": main.bound, "main_tail": main.extras["tail"],
                            "main_distance": main.extras["distance"]})


def ac4(seed: int) -> CriterionResult:
    f = kwise_family(8, 2, 4)
    reports = [fourwise_variance_check(f, x, 4) for x in _flat4()]
    return CriterionResult(4, "Var_h cp(h(X)) <= 2/(M K^2) for kwise(8,2,4), all flat 4-sources of [8]",
                           all(r.satisfied for r in reports),
                           {"sources": len(reports), "max_variance": max(r.measured for r in reports),
                            "bound": reports[0].bound})


def _ac5_instances(seed: int):
    yield affine_family(32, 2), iid_source(Dist.flat(32, range(16)), 2), 16, Fraction(3, 4)
    yield affine_family(32, 2), iid_source(Dist.flat(32, range(0, 32, 4)), 3), 8, Fraction(7, 8)
    yield truly_random_family(8, 2), iid_source(Dist.flat(8, range(5)), 1), 5, Fraction(3, 4)
    specs = [(16, 1, Fraction(3, 4)), (16, 2, Fraction(7, 8)), (32, 2, Fraction(3, 4)), (32, 1, Fraction(1, 2))]
    for i in range(12):
        rng = _rng(seed, 5, i)
        N, T, eps = specs[i % len(specs)]
        kmin = math.floor(2 * T / (eps * eps)) + 1
        K = kmin + rng.randbelow(2)
        yield affine_family(N, 2), random_block_source(rng, N, T, K, spread=1), K, eps


def ac5(seed: int) -> CriterionResult:
    reports = [thm_2univ_stat_check(*inst) for inst in _ac5_instances(seed)]
    sandwich = all(r.checks["hellinger_lower"] and r.checks["hellinger_upper"] for r in reports)
    return CriterionResult(5, "Delta((H,Y),(H,U)) <= eps when K > MT/eps^2, with d^2 <= Delta <= sqrt(2) d",
                           all(r.satisfied for r in reports) and sandwich,
                           {"instances": len(reports), "violations": sum(not r.satisfied for r in reports),
                            "sandwich_ok": sandwich, "closeness_floor_ok": all(r.checks["closeness_floor"]
                                                                               for r in reports),
                            "max_ratio_delta_over_eps": max(r.measured / r.bound for r in reports)})


def random_joint(rng: SplitMix64, axes: int, max_size: int = 4, denom: int = 4) -> JointDist:
    shape = [1 + rng.randbelow(max_size) for _ in range(axes)]
    weights = rng.fraction_weights(math.prod(shape), denom)
    total = sum(weights)
    table = np.array([Fraction(w, total) for w in weights], dtype=object).reshape(shape)
    return JointDist([(f"X{i + 1}", s) for i, s in enumerate(shape)], table)


def ac6(seed: int, count: int = 1000) -> CriterionResult:
    upper_fail = order_fail = 0
    for i in range(count):
        rng = _rng(seed, 6, i)
        j = random_joint(rng, 1 + rng.randbelow(4))
        upper_fail += not cp_upper_bound_check(j).ok
        j3 = random_joint(rng, 3 + rng.randbelow(2))
        order_fail += not cond_cp_order_check(j3, "X1", "X2", "X3").ok
    return CriterionResult(6, "cp(X) <= alpha^T and cp(X) <= cp(X|Y) <= cp(X|Y,Z) on random joints",
                           upper_fail == 0 and order_fail == 0 and count >= 1000,
                           {"joints": count, "cp_upper_violations": upper_fail, "cond_cp_violations": order_fail})


def _random_dist(rng: SplitMix64, n: int) -> Dist:
    return Dist.from_weights(rng.fraction_weights(n, 6))


def ac7(seed: int, pairs: int = 100) -> CriterionResult:
    rows = bernoulli_growth_sweep()
    by_eps: dict = {}
    for eps, T, d in rows:
        by_eps.setdefault(eps, []).append(d)
    monotone = all(all(a <= b for a, b in zip(ds, ds[1:])) for ds in by_eps.values())
    large = all(product_growth_large(eps, T).satisfied for eps, T, _ in rows)
    small = all(small_growth_ratio_ok(d, eps, T, constants.C0) for eps, T, d in rows if d <= constants.DELTA_CAP)
    red_fail = 0
    for i in range(pairs):
        rng = _rng(seed, 7, i)
        n = 2 + rng.randbelow(5)
        x, y = _random_dist(rng, n), _random_dist(rng, n)
        red = bernoulli_reduction(x, y)
        red_fail += not (red.fy == Dist.uniform(2) and 2 * red.distance >= red.original_distance)
    return CriterionResult(7, "product growth: monotone, >= 1 - e^{-T eps^2/2}, >= c0 sqrt(T) eps, reduction",
                           monotone and large and small and red_fail == 0,
                           {"cells": len(rows), "monotone": monotone, "large_T_bound": large,
                            "small_T_bound": small, "c0": constants.C0, "reduction_pairs": pairs,
                            "reduction_failures": red_fail})


def ac8(seed: int) -> CriterionResult:
    f = lb_family(2, 4, 8)
    universal = verify_universal(f, 2)
    w = lb_2univ_witness(2, 4, 8, 3)
    c = w.certificate
    facts = {"universal": universal,
             "bad_fraction": c["bad_fraction"] == Fraction(15, 32),
             "bad_cp": c["bad_cp"] == [Fraction(1, 2) + Fraction(1, 128)],
             "good_uniform": c["good_images_uniform"],
             "closeness_bound": c["closeness_bound_holds"]}
    detail = {**facts, "bad_fraction_value": c["bad_fraction"], "bad_closeness": c["bad_closeness"],
              "closeness_bound_value": c["closeness_bound"]}
    if not universal:
        detail["first_violation"] = universal_violation(f, 2)
    return CriterionResult(8, "lower-bound instance lb_family(2,4,8)", all(facts.values()), detail)


def ac9(seed: int) -> CriterionResult:
    first, arg = hypergeom_sweep()
    again, _ = hypergeom_sweep()
    stable = fmt(first) == fmt(again)
    return CriterionResult(9, "hypergeometric window: max probability/beta finite and frozen",
                           stable and first == constants.C_DOUBLE_PRIME,
                           {"max_ratio": first, "frozen": constants.C_DOUBLE_PRIME, "attained_at": arg,
                            "reproducible": stable})


def waterfill_bisection(p: list[float], budget: float, iters: int = 200) -> float:
    """Independent float oracle: bisect the level lambda with sum min(p, lambda) = budget."""
    lo, hi = 0.0, max(p)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if sum(min(v, mid) for v in p) < budget:
            lo = mid
        else:
            hi = mid
    lam = (lo + hi) / 2
    return sum(min(v, lam) ** 2 for v in p)


def waterfill_kkt(p: list[Fraction], budget: Fraction) -> Fraction:
    """Exact optimum by enumerating which coordinates sit at their cap.

    KKT: q_i = p_i for capped i (p_i <= lambda), q_i = lambda otherwise
    (p_i >= lambda), with sum q = budget.
    """
    n = len(p)
    best = None
    for r in range(n):
        for capped in combinations(range(n), r):
            rest = [i for i in range(n) if i not in capped]
            lam = (budget - sum((p[i] for i in capped), Fraction(0))) / len(rest)
            if lam < 0 or any(p[i] > lam for i in capped) or any(p[i] < lam for i in rest):
                continue
            val = sum((p[i] ** 2 for i in capped), Fraction(0)) + len(rest) * lam * lam
            best = val if best is None else min(best, val)
    return best


def ac10(seed: int, count: int = 500) -> CriterionResult:
    float_err, exact_fail, mono_fail = 0.0, 0, 0
    alphas = [Fraction(1), Fraction(3, 2), Fraction(2), Fraction(4), Fraction(8)]
    for i in range(count):
        rng = _rng(seed, 10, i)
        n = 2 + rng.randbelow(7)
        d = _random_dist(rng, n)
        budget = Fraction(1 + rng.randbelow(16), 16)
        fd = d.to_mode(APPROX)
        got = min_sq_mass(fd, float(budget)).min_sq_mass
        float_err = max(float_err, abs(got - waterfill_bisection(list(fd.mass), float(budget))))
        exact_fail += min_sq_mass(d, budget).min_sq_mass != waterfill_kkt(list(d.mass), budget)
        j = random_joint(rng, 2, 4)
        gammas = [farness_from_low_cp(j, a) for a in alphas]
        mono_fail += any(a < b for a, b in zip(gammas, gammas[1:]))
    return CriterionResult(10, "water-filling: float oracle within 1e-9, exact KKT, monotone farness",
                           float_err <= 1e-9 and exact_fail == 0 and mono_fail == 0,
                           {"instances": count, "max_float_error_below_1e-9": float_err <= 1e-9,
                            "exact_mismatches": exact_fail, "monotonicity_failures": mono_fail})


CRITERIA = {1: ac1, 2: ac2, 3: ac3, 4: ac4, 5: ac5, 6: ac6, 7: ac7, 8: ac8, 9: ac9, 10: ac10}


def run(numbers=None, seed: int = DEFAULT_SEED) -> list[CriterionResult]:
    return [CRITERIA[n](seed) for n in (numbers or sorted(CRITERIA))]
