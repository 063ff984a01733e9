"""Finite probability distributions with an exact (Fraction) or approximate
(float) backend, and the distance/entropy functionals built on them.

Outcomes are 0-based integers. Exact values stay ``Fraction`` end to end;
quantities involving square roots come back as :class:`~blockhash.exactreal.Surd`
so inequalities between them can be decided without rounding.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .exactreal import Surd, _squarefree_split

EXACT = "exact"
APPROX = "approximate"
MODES = (EXACT, APPROX)
FLOAT_TOL = 1e-12


class DistError(ValueError):
    """Invalid distribution, axis, or conditioning request."""


def _coerce(x, mode):
    if mode == EXACT:
        if isinstance(x, float):
            raise DistError("float mass given to an exact distribution")
        return Fraction(x)
    return float(x)


def _check_masses(values: np.ndarray, mode: str) -> None:
    if values.size == 0:
        raise DistError("empty distribution")
    if mode == EXACT:
        if any(v < 0 for v in values.flat):
            raise DistError("negative mass")
        total = sum(values.flat, Fraction(0))
        if total != 1:
            raise DistError(f"masses sum to {total}, not 1")
    else:
        if np.any(values < 0):
            raise DistError("negative mass")
        total = float(values.sum())
        if abs(total - 1.0) > FLOAT_TOL:
            raise DistError(f"masses sum to {total!r}, not 1")


def _to_array(values, mode) -> np.ndarray:
    if mode == EXACT:
        arr = np.empty(len(values), dtype=object)
        arr[:] = [_coerce(v, mode) for v in values]
        return arr
    return np.asarray([float(v) for v in values], dtype=float)


@dataclass(frozen=True)
class Dist:
    """Probability mass over ``range(domain_size)``."""

    mass: tuple
    mode: str = EXACT

    def __post_init__(self):
        if self.mode not in MODES:
            raise DistError(f"unknown mode {self.mode!r}")
        mass = tuple(_coerce(m, self.mode) for m in self.mass)
        object.__setattr__(self, "mass", mass)
        _check_masses(_to_array(mass, self.mode), self.mode)

    @property
    def domain_size(self) -> int:
        return len(self.mass)

    def __len__(self):
        return len(self.mass)

    def __getitem__(self, x):
        return self.mass[x]

    @classmethod
    def uniform(cls, n: int, mode: str = EXACT) -> "Dist":
        return cls(tuple(Fraction(1, n) for _ in range(n)), mode)

    @classmethod
    def point(cls, n: int, x: int, mode: str = EXACT) -> "Dist":
        if not 0 <= x < n:
            raise DistError(f"outcome {x} outside domain of size {n}")
        return cls(tuple(Fraction(int(i == x)) for i in range(n)), mode)

    @classmethod
    def flat(cls, n: int, support: Iterable[int], mode: str = EXACT) -> "Dist":
        support = set(support)
        if not support or min(support) < 0 or max(support) >= n:
            raise DistError("flat support must be a nonempty subset of the domain")
        k = len(support)
        return cls(tuple(Fraction(int(i in support), k) for i in range(n)), mode)

    @classmethod
    def from_weights(cls, weights: Sequence, mode: str = EXACT) -> "Dist":
        if mode == EXACT:
            w = [Fraction(x) for x in weights]
        else:
            w = [float(x) for x in weights]
        total = sum(w)
        if total <= 0:
            raise DistError("weights must have positive total")
        return cls(tuple(x / total for x in w), mode)

    def to_mode(self, mode: str) -> "Dist":
        if mode == self.mode:
            return self
        if mode == APPROX:
            return Dist(tuple(float(m) for m in self.mass), APPROX)
        raise DistError("cannot convert an approximate distribution to exact mode")

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.mass) if m > 0)

    def as_joint(self, name: str = "X") -> "JointDist":
        return JointDist([(name, self.domain_size)], self.mass, self.mode)


class JointDist:
    """Distribution over a product of named axes, stored row-major.

    ``table`` is a read-only ndarray with one dimension per axis (object dtype
    holding Fractions in exact mode, float64 otherwise).
    """

    __slots__ = ("axes", "mode", "table")

    def __init__(self, axes: Sequence[tuple[str, int]], mass, mode: str = EXACT, *, validate: bool = True):
        if mode not in MODES:
            raise DistError(f"unknown mode {mode!r}")
        axes = tuple((str(n), int(s)) for n, s in axes)
        names = [n for n, _ in axes]
        if len(set(names)) != len(names):
            raise DistError("axis names must be unique")
        if any(s < 1 for _, s in axes):
            raise DistError("axis sizes must be positive")
        shape = tuple(s for _, s in axes)
        if isinstance(mass, np.ndarray) and (mass.dtype == object) == (mode == EXACT):
            table = mass.reshape(shape).copy()
        else:
            table = _to_array(list(np.asarray(mass, dtype=object).ravel()), mode)
        if table.size != math.prod(shape):
            raise DistError(f"mass has {table.size} cells, axes need {math.prod(shape)}")
        table = table.reshape(shape)
        if validate:
            _check_masses(table, mode)
        table.flags.writeable = False
        self.axes = axes
        self.mode = mode
        self.table = table

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.table.shape

    @property
    def size(self) -> int:
        return self.table.size

    @property
    def mass(self) -> tuple:
        return tuple(self.table.ravel())

    def axis_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DistError(f"no axis named {name!r}; have {self.names}") from None

    @classmethod
    def uniform(cls, axes: Sequence[tuple[str, int]], mode: str = EXACT) -> "JointDist":
        n = math.prod(s for _, s in axes)
        return cls(axes, [Fraction(1, n)] * n, mode)

    def flatten(self) -> Dist:
        return Dist(self.mass, self.mode)

    def marginal(self, names: Sequence[str]) -> "JointDist":
        """Marginal on ``names``, in the order given."""
        idx = [self.axis_index(n) for n in names]
        if len(set(idx)) != len(idx):
            raise DistError("repeated axis in marginal")
        drop = tuple(i for i in range(len(self.axes)) if i not in idx)
        t = self.table.sum(axis=drop) if drop else self.table
        kept = sorted(idx)
        t = np.asarray(t, dtype=self.table.dtype).reshape([self.axes[i][1] for i in kept])
        t = np.transpose(t, [kept.index(i) for i in idx])
        return JointDist([self.axes[i] for i in idx], t, self.mode, validate=False)

    def condition(self, name: str, value: int) -> "JointDist":
        """Distribution of the remaining axes given ``name == value``."""
        i = self.axis_index(name)
        if not 0 <= value < self.axes[i][1]:
            raise DistError(f"value {value} outside axis {name!r}")
        sl = np.take(self.table, value, axis=i)
        total = sl.sum()
        if total == 0:
            raise DistError(f"conditioning on zero-probability event {name}={value}")
        axes = [a for j, a in enumerate(self.axes) if j != i]
        if not axes:
            raise DistError("cannot condition away the only axis")
        return JointDist(axes, sl / total, self.mode, validate=False)

    def to_mode(self, mode: str) -> "JointDist":
        if mode == self.mode:
            return self
        if mode == APPROX:
            return JointDist(self.axes, self.table.astype(float), APPROX, validate=False)
        raise DistError("cannot convert an approximate distribution to exact mode")

    def __eq__(self, other):
        if not isinstance(other, JointDist):
            return NotImplemented
        return (self.axes == other.axes and self.mode == other.mode
                and bool(np.all(self.table == other.table)))

    def __repr__(self):
        return f"JointDist(axes={self.axes!r}, mode={self.mode!r})"


def _mass_array(d) -> np.ndarray:
    if isinstance(d, JointDist):
        return d.table.ravel()
    if isinstance(d, Dist):
        return _to_array(d.mass, d.mode)
    raise TypeError(f"expected Dist or JointDist, got {type(d).__name__}")


def _zero(mode):
    return Fraction(0) if mode == EXACT else 0.0


def cp(d):
    """Collision probability: sum of squared masses."""
    m = _mass_array(d)
    return sum((m * m).tolist(), _zero(d.mode))


def renyi2(d) -> float:
    return -math.log2(cp(d))


def min_entropy(d) -> float:
    return -math.log2(max(_mass_array(d).tolist()))


def stat_dist(a, b):
    """Half the L1 distance between two mass functions on the same domain."""
    ma, mb = _mass_array(a), _mass_array(b)
    if ma.shape != mb.shape:
        raise DistError(f"domain mismatch: {ma.size} vs {mb.size}")
    mode = EXACT if a.mode == b.mode == EXACT else APPROX
    if mode == APPROX:
        ma, mb = ma.astype(float), mb.astype(float)
    return sum(np.abs(ma - mb).tolist(), _zero(mode)) / 2


def stat_dist_to_uniform(d):
    m = _mass_array(d)
    u = Fraction(1, m.size) if d.mode == EXACT else 1.0 / m.size
    return sum(np.abs(m - u).tolist(), _zero(d.mode)) / 2


def _sqrt_sum(values: Iterable[Fraction]) -> Surd:
    # sum of sqrt(v) with repeated values grouped; most tables repeat masses
    terms: dict[int, Fraction] = {}
    certified = True
    for v, count in Counter(values).items():
        if v == 0:
            continue
        s, k, cert = _squarefree_split(v.numerator * v.denominator)
        certified &= cert
        terms[k] = terms.get(k, Fraction(0)) + Fraction(s * count, v.denominator)
    return Surd(terms, certified)


def bhattacharyya(a, b):
    """sum_i sqrt(a_i * b_i); a Surd in exact mode."""
    ma, mb = _mass_array(a), _mass_array(b)
    if ma.shape != mb.shape:
        raise DistError(f"domain mismatch: {ma.size} vs {mb.size}")
    if a.mode == b.mode == EXACT:
        return _sqrt_sum((ma * mb).tolist())
    return float(np.sqrt(ma.astype(float) * mb.astype(float)).sum())


def hellinger_sq(a, b):
    """Squared Hellinger distance 1 - sum sqrt(a*b), exact as a Surd."""
    return 1 - bhattacharyya(a, b)


def hellinger_dist(a, b) -> float:
    return math.sqrt(max(float(hellinger_sq(a, b)), 0.0))


def hellinger_closeness(d):
    """Closeness to uniform, (1/M) * sum_i sqrt(M * p_i) = 1 - d(X, U)^2."""
    m = _mass_array(d)
    n = m.size
    if d.mode == EXACT:
        return _sqrt_sum([n * v for v in m.tolist()]) / n
    return float(np.sqrt(n * m.astype(float)).sum() / n)


def cond_cp(j: JointDist, target: str, given: Sequence[str] = ()):
    """Conditional collision probability cp(target | given).

    Expectation over the ``given`` marginal of cp(target | given = g), i.e.
    sum_g sum_x Pr[x, g]^2 / Pr[g] over g with Pr[g] > 0. Axes outside
    ``target`` and ``given`` are marginalized away.
    """
    given = list(given)
    if target in given:
        raise DistError("target axis cannot also be conditioned on")
    m = j.marginal(given + [target]).table
    sq = (m * m).sum(axis=-1)
    tot = m.sum(axis=-1)
    sq, tot = np.asarray(sq).ravel().tolist(), np.asarray(tot).ravel().tolist()
    out = _zero(j.mode)
    for s, t in zip(sq, tot):
        if t > 0:
            out += s / t
    return out


def marginal(j: JointDist, names: Sequence[str]) -> JointDist:
    return j.marginal(names)


def condition(j: JointDist, name: str, value: int) -> JointDist:
    return j.condition(name, value)


def product(ds: Sequence[Dist], names: Sequence[str] | None = None) -> JointDist:
    """Joint distribution of independent factors."""
    if not ds:
        raise DistError("product of no factors")
    names = list(names) if names is not None else [f"X{i + 1}" for i in range(len(ds))]
    if len(names) != len(ds):
        raise DistError("one name per factor required")
    mode = EXACT if all(d.mode == EXACT for d in ds) else APPROX
    arrs = [_mass_array(d.to_mode(mode)) for d in ds]
    table = reduce(np.multiply.outer, arrs)
    return JointDist([(n, d.domain_size) for n, d in zip(names, ds)], table, mode, validate=False)


def iid_power(d: Dist, T: int, prefix: str = "X") -> JointDist:
    if T < 1:
        raise DistError("T must be at least 1")
    return product([d] * T, [f"{prefix}{i + 1}" for i in range(T)])


@dataclass(frozen=True)
class WaterFillResult:
    """Optimum of min sum q^2 subject to 0 <= q <= p and sum q = budget."""

    level: object
    min_sq_mass: object
    achieving_q: tuple


def min_sq_mass(d, budget) -> WaterFillResult:
    """Water-filling: the minimizer is q(x) = min(p(x), level)."""
    mode = d.mode
    p = _mass_array(d).tolist()
    budget = _coerce(budget, mode)
    total = sum(p, _zero(mode))
    if budget <= 0:
        raise DistError("budget must be positive")
    if budget > total + (FLOAT_TOL if mode == APPROX else 0):
        raise DistError(f"budget {budget} exceeds total mass {total}")
    order = sorted(range(len(p)), key=lambda i: p[i])
    n = len(p)
    filled = _zero(mode)
    level = p[order[-1]]
    for k in range(n):
        lam = (budget - filled) / (n - k)
        if lam <= p[order[k]]:
            level = lam
            break
        filled += p[order[k]]
    q = tuple(min(v, level) for v in p)
    return WaterFillResult(level, sum((x * x for x in q), _zero(mode)), q)


def min_cp_within_distance(d, gamma):
    """Lower bound on cp(Q) over all Q with stat_dist(d, Q) <= gamma.

    Such a Q shares mass at least 1 - gamma with d, so its collision
    probability is at least the water-filling optimum at that budget.
    """
    if not 0 <= gamma < 1:
        raise DistError("gamma must lie in [0, 1)")
    return min_sq_mass(d, 1 - gamma).min_sq_mass


# file format --------------------------------------------------------------

def _mass_str(v) -> str:
    return str(v) if isinstance(v, Fraction) else format(float(v), ".17g")


def dist_to_json(d) -> str:
    """Structured text form: domain_size, mode, mass (plus axes for a joint)."""
    masses = [_mass_str(v) for v in _mass_array(d).ravel().tolist()]
    obj = {"domain_size": len(masses), "mode": d.mode, "mass": masses}
    if isinstance(d, JointDist):
        obj["axes"] = [{"name": n, "size": s} for n, s in d.axes]
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def dist_from_json(text: str, mode: str | None = None):
    """Inverse of :func:`dist_to_json`; returns a JointDist when axes are present."""
    try:
        obj = json.loads(text)
        mode = mode or obj.get("mode", EXACT)
        raw = obj["mass"]
    except (json.JSONDecodeError, KeyError, AttributeError, TypeError) as e:
        raise DistError(f"malformed distribution file: {e}") from None
    if mode not in MODES:
        raise DistError(f"unknown mode {mode!r}")
    conv = Fraction if mode == EXACT else (lambda s: float(Fraction(s)))
    try:
        mass = [conv(str(v)) for v in raw]
    except (ValueError, ZeroDivisionError) as e:
        raise DistError(f"malformed mass entry: {e}") from None
    if "domain_size" in obj and obj["domain_size"] != len(mass):
        raise DistError("domain_size does not match mass length")
    if "axes" in obj:
        return JointDist([(a["name"], a["size"]) for a in obj["axes"]], mass, mode)
    return Dist(tuple(mass), mode)
