"""Exact real numbers of the form r + sum_k c_k * sqrt(k), plus certified
comparisons against e^{-x}.

Hellinger closeness and several bounds are sums of square roots of
rationals. Square roots of distinct squarefree integers are linearly
independent over Q, so once every radicand is reduced to its squarefree
kernel the representation is canonical: a value is zero iff every
coefficient is zero, and any nonzero value can have its sign settled by
refining rational enclosures until they exclude zero.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

_SMALL_PRIMES = [p for p in range(2, 1000) if all(p % q for q in range(2, math.isqrt(p) + 1))]
_MAX_BITS = 8192


def _squarefree_split(n: int) -> tuple[int, int, bool]:
    """Return (s, k, certified) with n == s*s*k.

    certified is True when k is provably squarefree. Trial division runs over
    primes below 1000; a cofactor below 1000**3 with no such factor is 1, p,
    p*q or p*p, and the last case is caught by a perfect-square test.
    """
    if n == 0:
        return 0, 1, True
    s, k = 1, 1
    m = n
    for p in _SMALL_PRIMES:
        if p * p > m:
            break
        if m % p:
            continue
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            k *= p
    r = math.isqrt(m)
    if r * r == m:
        return s * r, k, True
    return s, k * m, m < 1000 ** 3


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"expected a rational, got {type(x).__name__}")


class Surd:
    """Immutable exact value ``sum_k coef[k] * sqrt(k)`` with squarefree k.

    The rational part is stored under kernel 1.
    """

    __slots__ = ("_terms", "_certified")

    def __init__(self, terms=None, certified: bool = True):
        clean = {}
        for k, c in (terms or {}).items():
            c = _as_fraction(c)
            if c:
                clean[k] = clean.get(k, Fraction(0)) + c
        self._terms = {k: c for k, c in sorted(clean.items()) if c}
        self._certified = certified

    @classmethod
    def sqrt(cls, x) -> "Surd":
        """Exact square root of a nonnegative rational."""
        x = _as_fraction(x)
        if x < 0:
            raise ValueError("square root of a negative rational")
        # sqrt(p/q) = sqrt(p*q) / q
        s, k, cert = _squarefree_split(x.numerator * x.denominator)
        return cls({k: Fraction(s, x.denominator)}, certified=cert)

    @classmethod
    def coerce(cls, x) -> "Surd":
        if isinstance(x, Surd):
            return x
        return cls({1: _as_fraction(x)})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_rational(self) -> bool:
        return all(k == 1 for k in self._terms)

    def rational_part(self) -> Fraction:
        return self._terms.get(1, Fraction(0))

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        other = Surd.coerce(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            terms[k] = terms.get(k, Fraction(0)) + c
        return Surd(terms, self._certified and other._certified)

    __radd__ = __add__

    def __neg__(self):
        return Surd({k: -c for k, c in self._terms.items()}, self._certified)

    def __sub__(self, other):
        if isinstance(other, float):
            return float(self) - other
        return self + (-Surd.coerce(other))

    def __rsub__(self, other):
        if isinstance(other, float):
            return other - float(self)
        return Surd.coerce(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        other = Surd.coerce(other)
        terms: dict[int, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                # k1, k2 squarefree: k1*k2 = g^2 * (k1/g)*(k2/g), the latter squarefree
                g = math.gcd(k1, k2)
                k = (k1 // g) * (k2 // g)
                terms[k] = terms.get(k, Fraction(0)) + c1 * c2 * g
        return Surd(terms, self._certified and other._certified)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        if isinstance(other, Surd):
            if not other.is_rational():
                raise ArithmeticError("division by an irrational surd is not supported")
            other = other.rational_part()
        other = _as_fraction(other)
        return Surd({k: c / other for k, c in self._terms.items()}, self._certified)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = Surd({1: 1})
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # ordering ---------------------------------------------------------
    def _enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        scale = 1 << bits
        lo = hi = Fraction(0)
        for k, c in self._terms.items():
            if k == 1:
                lo += c
                hi += c
                continue
            r = math.isqrt(k << (2 * bits))
            s_lo = Fraction(r, scale)
            s_hi = Fraction(r + 1, scale)
            if c > 0:
                lo += c * s_lo
                hi += c * s_hi
            else:
                lo += c * s_hi
                hi += c * s_lo
        return lo, hi

    def sign(self) -> int:
        if not self._terms:
            return 0
        if self.is_rational():
            c = self._terms[1]
            return (c > 0) - (c < 0)
        if len(self._terms) <= 2:
            return self._sign_two_terms()
        bits = 64
        while bits <= _MAX_BITS:
            lo, hi = self._enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2
        if self._certified:
            # canonical and nonzero, so refinement must eventually succeed
            raise ArithmeticError("sign refinement did not converge")
        raise ArithmeticError("cannot certify the sign of a non-canonical surd")

    def _sign_two_terms(self) -> int:
        # a + b*sqrt(k) (a may be 0) or b1*sqrt(k1) + b2*sqrt(k2)
        items = list(self._terms.items())
        if len(items) == 1:
            k, c = items[0]
            return (c > 0) - (c < 0)
        (k1, c1), (k2, c2) = items
        # compare c1*sqrt(k1) with -c2*sqrt(k2) by signs, then squares
        x_sign = (c1 > 0) - (c1 < 0)
        y_sign = (c2 > 0) - (c2 < 0)
        if x_sign == y_sign:
            return x_sign
        x_sq = c1 * c1 * k1
        y_sq = c2 * c2 * k2
        if x_sq == y_sq:
            return 0
        return x_sign if x_sq > y_sq else y_sign

    def _cmp(self, other) -> int:
        if isinstance(other, float):
            a = float(self)
            return (a > other) - (a < other)
        return (self - other).sign()

    def __eq__(self, other):
        if isinstance(other, (Surd, int, Fraction, float)):
            return self._cmp(other) == 0
        return NotImplemented

    def __hash__(self):
        if self.is_rational():
            return hash(self.rational_part())
        return hash(tuple(self._terms.items()))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __float__(self):
        return float(sum(float(c) * math.sqrt(k) for k, c in self._terms.items()))

    def __repr__(self):
        return f"Surd({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for k, c in self._terms.items():
            parts.append(str(c) if k == 1 else f"{c}*sqrt({k})")
        return " + ".join(parts).replace("+ -", "- ")


def sqrt(x):
    """Square root that stays exact for rationals and falls back to floats."""
    if isinstance(x, float):
        return math.sqrt(x)
    return Surd.sqrt(x)


def exp_neg_enclosure(x: Fraction, terms: int) -> tuple[Fraction, Fraction]:
    """Rational interval containing e^{-x} for x >= 0.

    Uses e^{-x} = 1 / e^{x} with the Taylor series of e^{x}, whose partial sums
    are lower bounds and whose tail past n > 2x is at most twice the next term.
    """
    x = _as_fraction(x)
    if x < 0:
        raise ValueError("x must be nonnegative")
    n = max(terms, 2 * math.ceil(x) + 2)
    total = Fraction(0)
    term = Fraction(1)
    for i in range(n):
        total += term
        term = term * x / (i + 1)
    lower_exp, upper_exp = total, total + 2 * term
    return 1 / upper_exp, 1 / lower_exp


def compare_exp_neg(r, x) -> int:
    """Sign of r - e^{-x} for rational r and rational x > 0 (never zero)."""
    r = _as_fraction(r)
    x = _as_fraction(x)
    if x == 0:
        return (r > 1) - (r < 1)
    terms = 16
    while True:
        lo, hi = exp_neg_enclosure(x, terms)
        if r > hi:
            return 1
        if r < lo:
            return -1
        terms *= 2
        if terms > 1 << 16:
            raise ArithmeticError("exp enclosure did not converge")


class OneMinusExpNeg:
    """The real number 1 - e^{-x} for rational x >= 0, comparable with rationals."""

    __slots__ = ("x",)

    def __init__(self, x):
        self.x = _as_fraction(x)
        if self.x < 0:
            raise ValueError("x must be nonnegative")

    def _cmp(self, r) -> int:
        if isinstance(r, float):
            v = float(self)
            return (v > r) - (v < r)
        # 1 - e^{-x} vs r  <=>  e^{-x} vs 1 - r, reversed
        return compare_exp_neg(1 - _as_fraction(r), self.x)

    def __lt__(self, r):
        return self._cmp(r) < 0

    def __le__(self, r):
        return self._cmp(r) <= 0

    def __gt__(self, r):
        return self._cmp(r) > 0

    def __ge__(self, r):
        return self._cmp(r) >= 0

    def __float__(self):
        return -math.expm1(-float(self.x))

    def __str__(self):
        return f"1 - exp(-{self.x})"

    def __repr__(self):
        return f"OneMinusExpNeg({self.x})"
