"""Absolute constants whose existence is known but whose values are not.

Each is frozen from an exact sweep; the tests re-run the sweep and require
the same value, so a change in grid or arithmetic shows up as a diff here.
"""

from fractions import Fraction

# max over bounds.hypergeom_grid() of window probability / beta, attained at
# N=6, K=2, |T|=3, beta=1/8 (L=1, window {1}, probability 3/5).
# The ratio is unbounded as beta -> 0 with integral L, so this is a property
# of the grid, not of the claim.
C_DOUBLE_PRIME = Fraction(24, 5)

# floor to 4 digits of min Delta(X^T, U^T) / (sqrt(T) eps) over the canonical
# coin pairs eps in {1/16, ..., 8/16}, T <= 16, restricted to Delta <= 3/10;
# attained at eps = 1/16, T = 2 (Delta = eps + eps^2).
C0 = Fraction(7513, 10000)
DELTA_CAP = Fraction(3, 10)
