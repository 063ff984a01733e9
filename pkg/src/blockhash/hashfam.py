"""Finite fields GF(p) and GF(2^w), the hash families built on them, and
exhaustive checkers for universality and s-wise independence.

Every family enumerates its members by an integer index in a fixed order, so
``family(i, x)`` is reproducible bit for bit across runs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Callable

import numpy as np

# Fixed irreducible polynomials for GF(2^w), bit i = coefficient of x^i.
IRREDUCIBLE = {
    1: 0b11,
    2: 0b111,             # x^2 + x + 1
    3: 0b1011,            # x^3 + x + 1
    4: 0b10011,           # x^4 + x + 1
    5: 0x25,              # x^5 + x^2 + 1
    6: 0x43,              # x^6 + x + 1
    7: 0x83,              # x^7 + x + 1
    8: 0x11D,             # x^8 + x^4 + x^3 + x^2 + 1
    9: 0x211,             # x^9 + x^4 + 1
    10: 0x409,            # x^10 + x^3 + 1
    11: 0x805,            # x^11 + x^2 + 1
    12: 0x1053,           # x^12 + x^6 + x^4 + x + 1
    13: 0x201B,           # x^13 + x^4 + x^3 + x + 1
    14: 0x4443,           # x^14 + x^10 + x^6 + x + 1
    15: 0x8003,           # x^15 + x + 1
    16: 0x1100B,          # x^16 + x^12 + x^3 + x + 1
}
MAX_FIELD_ORDER = 1 << 16
DEFAULT_GUARD = 1 << 26


class FieldError(ValueError):
    pass


class GuardError(RuntimeError):
    """An exhaustive enumeration would exceed its configured size limit."""


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


def _clmul_mod(a: int, b: int, modulus: int, w: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> w:
            a ^= modulus
    return out


class GF:
    """The finite field of the given order (a prime, or 2^w with w <= 16).

    Arithmetic methods accept ints or integer numpy arrays.
    """

    _cache: dict[int, "GF"] = {}

    def __new__(cls, order: int):
        if order in cls._cache:
            return cls._cache[order]
        self = super().__new__(cls)
        self._setup(order)
        cls._cache[order] = self
        return self

    def _setup(self, order: int) -> None:
        if order > MAX_FIELD_ORDER:
            raise FieldError(f"field order {order} exceeds 2^16")
        if order >= 2 and order & (order - 1) == 0:
            self.char = 2
            self.degree = order.bit_length() - 1
            self.modulus = IRREDUCIBLE[self.degree]
        elif _is_prime(order):
            self.char = order
            self.degree = 1
            self.modulus = order
        else:
            raise FieldError(f"unsupported field order {order}: need a prime or a power of two")
        self.order = order
        if self.char == 2:
            self._build_tables()

    def _build_tables(self) -> None:
        q, w = self.order, self.degree
        for g in range(2 if q > 2 else 1, q):
            exp = [1]
            x = g
            while x != 1:
                exp.append(x)
                x = _clmul_mod(x, g, self.modulus, w)
                if len(exp) > q:
                    break
            if len(exp) == q - 1:
                break
        else:
            if q > 2:
                raise FieldError(f"modulus {self.modulus:#x} is not irreducible")
            exp = [1]
        self._exp = np.array(exp + exp, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        log[np.array(exp, dtype=np.int64)] = np.arange(q - 1)
        self._log = log

    def __repr__(self):
        return f"GF({self.order})"

    def __reduce__(self):
        return (GF, (self.order,))

    def __call__(self, value: int) -> "FieldElem":
        return FieldElem(int(value), self)

    def elements(self) -> list["FieldElem"]:
        return [FieldElem(v, self) for v in range(self.order)]

    # vectorized arithmetic on representations
    def add(self, a, b):
        if self.char == 2:
            return np.bitwise_xor(a, b)
        return (np.asarray(a) + b) % self.order

    def neg(self, a):
        if self.char == 2:
            return a
        return (-np.asarray(a)) % self.order

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.char != 2:
            return (np.asarray(a, dtype=np.int64) * b) % self.order
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.order == 2:
            return a & b
        prod = self._exp[self._log[a] + self._log[b]]
        return np.where((a == 0) | (b == 0), 0, prod)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.char != 2:
            return np.vectorize(lambda v: pow(int(v), -1, self.order), otypes=[np.int64])(a)
        if self.order == 2:
            return a
        return self._exp[(self.order - 1 - self._log[a]) % (self.order - 1)]

    def pow(self, a, e: int):
        out = np.ones_like(np.asarray(a, dtype=np.int64))
        base = np.asarray(a, dtype=np.int64)
        if e < 0:
            base, e = self.inv(base), -e
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def project(self, v, m: int):
        """Balanced map onto range(m): the low-order coordinate(s) of v.

        For GF(2^w) and m = 2^j this keeps the coefficients of x^0..x^(j-1);
        every output has exactly order/m preimages.
        """
        if m == self.order:
            return v
        if self.char == 2:
            return np.bitwise_and(v, m - 1)
        raise FieldError(f"no balanced projection from GF({self.order}) onto {m}")


@dataclass(frozen=True)
class FieldElem:
    value: int
    field: GF

    def __post_init__(self):
        if not 0 <= self.value < self.field.order:
            raise FieldError(f"{self.value} is not an element of {self.field}")

    def _same(self, other) -> "FieldElem":
        if isinstance(other, int):
            return FieldElem(other, self.field)
        if not isinstance(other, FieldElem):
            raise TypeError(f"cannot combine FieldElem with {type(other).__name__}")
        if other.field is not self.field:
            raise FieldError(f"mixed fields {self.field} and {other.field}")
        return other

    def __add__(self, other):
        return FieldElem(int(self.field.add(self.value, self._same(other).value)), self.field)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElem(int(self.field.sub(self.value, self._same(other).value)), self.field)

    def __neg__(self):
        return FieldElem(int(self.field.neg(self.value)), self.field)

    def __mul__(self, other):
        return FieldElem(int(self.field.mul(self.value, self._same(other).value)), self.field)

    __rmul__ = __mul__

    def inverse(self) -> "FieldElem":
        return FieldElem(int(self.field.inv(self.value)), self.field)

    def __truediv__(self, other):
        return self * self._same(other).inverse()

    def __pow__(self, e: int):
        return FieldElem(int(self.field.pow(self.value, e)), self.field)

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.field}({self.value})"


def _check_power(q: int, m: int) -> int:
    """Return c with q == m**c, or raise."""
    if m < 2:
        raise FieldError("range size must be at least 2")
    c, v = 0, 1
    while v < q:
        v *= m
        c += 1
    if v != q:
        raise FieldError(f"field order {q} is not a power of range size {m}")
    return c


@dataclass(frozen=True, eq=False)
class HashFamily:
    """An indexed multiset of functions range(domain_size) -> range(range_size).

    ``rule(indices, xs)`` evaluates members on numpy integer arrays
    (broadcasting); ``descriptor`` is the CLI grammar string that rebuilds
    the family.
    """

    size: int
    domain_size: int
    range_size: int
    rule: Callable = field(repr=False)
    descriptor: str = ""

    def __call__(self, index: int, x: int) -> int:
        if not 0 <= index < self.size:
            raise IndexError(f"hash index {index} out of range({self.size})")
        if not 0 <= x < self.domain_size:
            raise IndexError(f"input {x} out of range({self.domain_size})")
        return int(self.rule(np.int64(index), np.int64(x)))

    @property
    def log_size(self) -> float:
        return math.log2(self.size)

    def table(self, guard: int = DEFAULT_GUARD) -> np.ndarray:
        """All outputs as an array of shape (size, domain_size)."""
        if self.size * self.domain_size > guard:
            raise GuardError(f"{self.descriptor}: table of {self.size}x{self.domain_size} exceeds guard {guard}")
        return self._table

    @cached_property
    def _table(self) -> np.ndarray:
        idx = np.arange(self.size, dtype=np.int64)[:, None]
        xs = np.arange(self.domain_size, dtype=np.int64)[None, :]
        t = np.broadcast_to(self.rule(idx, xs), (self.size, self.domain_size)).astype(np.int64)
        t.flags.writeable = False
        return t

    def __repr__(self):
        return f"HashFamily({self.descriptor!r}, size={self.size}, {self.domain_size}->{self.range_size})"


def affine_family(q: int, m: int, n: int | None = None) -> HashFamily:
    """h_{a,b}(x) = project(a*x + b) over GF(q); index = a*q + b."""
    F = GF(q)
    _check_power(q, m)
    n = q if n is None else n
    if not 1 <= n <= q:
        raise FieldError(f"domain size {n} must be in [1, {q}]")

    def rule(i, x):
        a, b = i // q, i % q
        return F.project(F.add(F.mul(a, x), b), m)

    desc = f"affine:q{q}:m{m}" + (f":n{n}" if n != q else "")
    return HashFamily(q * q, n, m, rule, desc)


def _digits(v, base: int, count: int):
    return [(v // base ** k) % base for k in range(count)]


def linear_family_H0(m: int, t: int) -> HashFamily:
    """Linear maps GF(m)^t -> GF(m), h_a(x) = sum_k a_k * x_k.

    Index a and input x are read as base-m digit vectors (least significant
    digit first). Index 0 sends every input to 0.
    """
    if t < 1:
        raise FieldError("t must be at least 1")
    F = GF(m)
    size = m ** t

    def rule(i, x):
        acc = 0
        for ak, xk in zip(_digits(i, m, t), _digits(x, m, t)):
            acc = F.add(acc, F.mul(ak, xk))
        return acc

    return HashFamily(size, size, m, rule, f"h0:m{m}:t{t}")


def kwise_family(q: int, m: int, s: int, n: int | None = None) -> HashFamily:
    """Polynomials of degree < s over GF(q), then the balanced projection.

    Index i holds coefficients c_0..c_{s-1} as base-q digits (c_0 least
    significant); h(x) = project(sum_k c_k x^k).
    """
    if s < 1:
        raise FieldError("s must be at least 1")
    F = GF(q)
    _check_power(q, m)
    n = q if n is None else n
    if not 1 <= n <= q:
        raise FieldError(f"domain size {n} must be in [1, {q}]")

    def rule(i, x):
        coeffs = _digits(i, q, s)
        acc = coeffs[-1]
        for c in reversed(coeffs[:-1]):
            acc = F.add(F.mul(acc, x), c)
        return F.project(np.asarray(acc), m)

    desc = f"kwise:q{q}:m{m}:s{s}" + (f":n{n}" if n != q else "")
    return HashFamily(q ** s, n, m, rule, desc)


def lb_family(m: int, t: int, s: int) -> HashFamily:
    """The family used for the lower-bound instance.

    The domain is s copies D_1..D_s of GF(m)^t (size s*m^t). Member (a, b),
    index a*m^t + b with a, b in GF(m^t), hashes copy i by the linear map
    with seed a + alpha_i*b, where alpha_i is the field element with integer
    value i-1. Seeds are read as GF(m)^t vectors through the base-m digits of
    their representation, which is additive and sends 0 to 0.

    Every pair of distinct points collides with probability 1/m except the
    zero vectors of two different copies, which collide under every member,
    so the family is not 2-universal for s >= 2.
    """
    if t < 1:
        raise FieldError("t must be at least 1")
    Fm = GF(m)
    big = m ** t
    if Fm.char != 2 and t != 1:
        raise FieldError("odd-characteristic extension fields are not supported; use t=1")
    Fb = GF(big)
    if not 1 <= s <= big:
        raise FieldError(f"s={s} must lie in [1, {big}] (distinct alphas needed)")

    def rule(i, x):
        a, b = i // big, i % big
        block, local = x // big, x % big
        seed = Fb.add(a, Fb.mul(block, b))
        acc = 0
        for sk, xk in zip(_digits(seed, m, t), _digits(local, m, t)):
            acc = Fm.add(acc, Fm.mul(sk, xk))
        return acc

    return HashFamily(big * big, s * big, m, rule, f"lb:m{m}:t{t}:s{s}")


def lb_family_seeds(m: int, t: int, s: int, index: int) -> list[int]:
    """Seed values (as GF(m^t) elements) used on each sub-domain by member ``index``."""
    big = m ** t
    Fb = GF(big)
    a, b = divmod(index, big)
    return [int(Fb.add(a, Fb.mul(i, b))) for i in range(s)]


def truly_random_family(n: int, m: int, guard: int = 1 << 24) -> HashFamily:
    """All functions range(n) -> range(m); member i outputs base-m digit x of i."""
    if m ** n > guard:
        raise GuardError(f"{m}^{n} functions exceed guard {guard}")

    def rule(i, x):
        return (i // np.power(m, x, dtype=np.int64)) % m

    return HashFamily(m ** n, n, m, rule, f"random:n{n}:m{m}")


def _subsets(f: HashFamily, s: int, guard: int):
    if s < 1 or s > f.domain_size:
        raise ValueError(f"s={s} must lie in [1, {f.domain_size}]")
    work = f.size * math.comb(f.domain_size, s)
    if work > guard:
        raise GuardError(f"{f.descriptor}: {work} evaluations exceed guard {guard}")
    return combinations(range(f.domain_size), s)


def universal_violation(f: HashFamily, s: int = 2, guard: int = DEFAULT_GUARD) -> tuple[int, ...] | None:
    """First s-subset (lexicographic) whose all-equal probability exceeds 1/M^(s-1), or None."""
    tab = f.table()
    scale = f.range_size ** (s - 1)
    for xs in _subsets(f, s, guard):
        cols = tab[:, xs]
        equal = np.all(cols == cols[:, :1], axis=1)
        if int(equal.sum()) * scale > f.size:
            return xs
    return None


def verify_universal(f: HashFamily, s: int = 2, guard: int = DEFAULT_GUARD) -> bool:
    """Exhaustively check Pr_h[h(x_1) = ... = h(x_s)] <= 1/M^(s-1) for distinct x's."""
    return universal_violation(f, s, guard) is None


def verify_s_wise(f: HashFamily, s: int, guard: int = DEFAULT_GUARD) -> bool:
    """Exhaustively check that any s distinct inputs hash independently and uniformly."""
    tab = f.table()
    m = f.range_size
    cells = m ** s
    if f.size % cells:
        return False
    expect = f.size // cells
    weights = m ** np.arange(s, dtype=np.int64)
    for xs in _subsets(f, s, guard):
        codes = tab[:, xs] @ weights
        if np.any(np.bincount(codes, minlength=cells) != expect):
            return False
    return True


_DESCRIPTOR = re.compile(r"^(affine|h0|kwise|lb|random)((?::[a-z]\d+)+)$")


def parse_family(desc: str) -> HashFamily:
    """Build a family from its descriptor, e.g. ``affine:q8:m2`` or ``lb:m2:t4:s8``."""
    mt = _DESCRIPTOR.match(desc.strip())
    if not mt:
        raise ValueError(f"malformed family descriptor {desc!r}")
    kind = mt.group(1)
    params = {p[0]: int(p[1:]) for p in mt.group(2).split(":")[1:]}
    required = {"affine": "qm", "h0": "mt", "kwise": "qms", "lb": "mts", "random": "nm"}[kind]
    optional = {"affine": "n", "kwise": "n"}.get(kind, "")
    missing = [k for k in required if k not in params]
    extra = [k for k in params if k not in required + optional]
    if missing or extra:
        raise ValueError(f"descriptor {desc!r}: missing {missing}, unexpected {extra}")
    if kind == "affine":
        return affine_family(params["q"], params["m"], params.get("n"))
    if kind == "h0":
        return linear_family_H0(params["m"], params["t"])
    if kind == "kwise":
        return kwise_family(params["q"], params["m"], params["s"], params.get("n"))
    if kind == "lb":
        return lb_family(params["m"], params["t"], params["s"])
    return truly_random_family(params["n"], params["m"])
