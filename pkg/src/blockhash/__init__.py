"""Exact experiments on hashing block sources.

Every quantity is computed by enumeration with ``Fraction`` arithmetic, so
each claim check returns a measured value and a bound that compare exactly.
"""

from .exactdist import (APPROX, EXACT, Dist, DistError, JointDist, cond_cp, cp, hellinger_closeness,
                        min_cp_within_distance, min_sq_mass, stat_dist, stat_dist_to_uniform)
from .exactreal import OneMinusExpNeg, Surd
from .hashfam import (GF, GuardError, HashFamily, affine_family, kwise_family, lb_family, linear_family_H0,
                      parse_family, truly_random_family, verify_s_wise, verify_universal)
from .blocksrc import BlockSourceTree, FlatSource, hashed_joint, iid_source, parse_source
from .bounds import BoundReport, PreconditionError
from .adversary import LowerBoundWitness
from .rng import SplitMix64, derive_key

__version__ = "0.1.0"

__all__ = [
    "APPROX", "EXACT", "Dist", "DistError", "JointDist", "cond_cp", "cp", "hellinger_closeness",
    "min_cp_within_distance", "min_sq_mass", "stat_dist", "stat_dist_to_uniform",
    "OneMinusExpNeg", "Surd",
    "GF", "GuardError", "HashFamily", "affine_family", "kwise_family", "lb_family", "linear_family_H0",
    "parse_family", "truly_random_family", "verify_s_wise", "verify_universal",
    "BlockSourceTree", "FlatSource", "hashed_joint", "iid_source", "parse_source",
    "BoundReport", "PreconditionError", "LowerBoundWitness", "SplitMix64", "derive_key",
]
