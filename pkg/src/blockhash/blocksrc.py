"""Block sources over range(N)^T and the exact distribution of a hashed
sequence (H, H(X_1), ..., H(X_T)).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .exactdist import APPROX, EXACT, Dist, DistError, JointDist, cp, dist_from_json, iid_power
from .hashfam import GuardError, HashFamily
from .rng import SplitMix64, derive_key

DEFAULT_GUARD_CELLS = 1 << 24
_INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class FlatSource:
    """Uniform distribution on ``support`` within range(domain_size)."""

    domain_size: int
    support: tuple[int, ...]

    def __post_init__(self):
        s = tuple(sorted(set(int(x) for x in self.support)))
        if not s or s[0] < 0 or s[-1] >= self.domain_size:
            raise DistError("flat support must be a nonempty subset of the domain")
        object.__setattr__(self, "support", s)

    @property
    def K(self) -> int:
        return len(self.support)

    def dist(self, mode: str = EXACT) -> Dist:
        return Dist.flat(self.domain_size, self.support, mode)

    @property
    def descriptor(self) -> str:
        return f"flat:n{self.domain_size}:support=" + ",".join(map(str, self.support))


class BlockSourceTree:
    """Distribution of (X_1, ..., X_T) given by the conditional law of each
    block after every reachable prefix.

    Either ``iid`` is set (every conditional is that Dist) or
    ``conditionals`` maps each reachable prefix tuple, including ``()``, to a
    Dist. Prefixes of probability zero may be omitted.
    """

    def __init__(self, T: int, domain_size: int, conditionals: Mapping[tuple, Dist] | None = None,
                 iid: Dist | None = None):
        if T < 1:
            raise DistError("T must be at least 1")
        if (conditionals is None) == (iid is None):
            raise DistError("give exactly one of conditionals or iid")
        self.T = T
        self.domain_size = domain_size
        self.iid = iid
        self._cond = {tuple(k): v for k, v in (conditionals or {}).items()}
        dists = [iid] if iid is not None else list(self._cond.values())
        modes = {d.mode for d in dists}
        if len(modes) != 1:
            raise DistError("conditionals mix exact and approximate modes")
        self.mode = modes.pop()
        for d in dists:
            if d.domain_size != domain_size:
                raise DistError("conditional over the wrong domain")
        if iid is None:
            for prefix, _ in self.prefixes():
                pass  # walking raises on a missing reachable prefix

    @property
    def is_iid(self) -> bool:
        return self.iid is not None

    def conditional(self, prefix: tuple) -> Dist:
        if self.iid is not None:
            return self.iid
        try:
            return self._cond[tuple(prefix)]
        except KeyError:
            raise DistError(f"no conditional stored for reachable prefix {tuple(prefix)}") from None

    def prefixes(self) -> Iterator[tuple[tuple, object]]:
        """Reachable prefixes of length < T with their probabilities, depth first."""
        one = Fraction(1) if self.mode == EXACT else 1.0
        stack = [((), one)]
        while stack:
            prefix, p = stack.pop()
            yield prefix, p
            if len(prefix) + 1 < self.T:
                d = self.conditional(prefix)
                for x in reversed(d.support()):
                    stack.append((prefix + (x,), p * d[x]))

    def paths(self) -> Iterator[tuple[tuple, object]]:
        """Full sequences with positive probability, in lexicographic order."""
        for prefix, p in self.prefixes():
            if len(prefix) == self.T - 1:
                d = self.conditional(prefix)
                for x in d.support():
                    yield prefix + (x,), p * d[x]

    def joint(self, guard: int = DEFAULT_GUARD_CELLS) -> JointDist:
        n = self.domain_size ** self.T
        if n > guard:
            raise GuardError(f"joint over {n} cells exceeds guard {guard}")
        if self.iid is not None:
            return iid_power(self.iid, self.T)
        zero = Fraction(0) if self.mode == EXACT else 0.0
        table = np.full((self.domain_size,) * self.T, zero, dtype=object if self.mode == EXACT else float)
        for x, p in self.paths():
            table[x] = p
        return JointDist([(f"X{i + 1}", self.domain_size) for i in range(self.T)], table, self.mode)

    def to_json(self) -> str:
        if self.iid is not None:
            conds = [{"prefix": [], "mass": [str(m) for m in self.iid.mass]}]
            kind = "iid"
        else:
            conds = [{"prefix": list(k), "mass": [str(m) for m in v.mass]} for k, v in sorted(self._cond.items())]
            kind = "tree"
        return json.dumps({"kind": kind, "T": self.T, "n": self.domain_size, "mode": self.mode,
                           "conditionals": conds}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "BlockSourceTree":
        obj = json.loads(text)
        mode = obj.get("mode", EXACT)
        conds = {tuple(c["prefix"]): Dist(tuple(_parse_number(m, mode) for m in c["mass"]), mode)
                 for c in obj["conditionals"]}
        if obj.get("kind") == "iid":
            return cls(obj["T"], obj["n"], iid=conds[()])
        return cls(obj["T"], obj["n"], conditionals=conds)

    def __repr__(self):
        kind = "iid" if self.iid is not None else f"{len(self._cond)} conditionals"
        return f"BlockSourceTree(T={self.T}, N={self.domain_size}, {kind})"


def _parse_number(s, mode):
    return Fraction(s) if mode == EXACT else float(Fraction(s))


@dataclass(frozen=True)
class Validation:
    ok: bool
    worst_prefix: tuple
    worst_cp: object


def validate_block_k_source(src: BlockSourceTree, K) -> Validation:
    """Check cp(X_i | X_<i = prefix) <= 1/K for every reachable prefix."""
    K = Fraction(K) if src.mode == EXACT else float(K)
    if K <= 0:
        raise DistError("K must be positive")
    worst_prefix, worst = (), None
    if src.is_iid:
        worst = cp(src.iid)
    else:
        for prefix, _ in src.prefixes():
            c = cp(src.conditional(prefix))
            if worst is None or c > worst:
                worst_prefix, worst = prefix, c
    return Validation(worst * K <= 1, worst_prefix, worst)


def iid_source(d: Dist, T: int) -> BlockSourceTree:
    return BlockSourceTree(T, d.domain_size, iid=d)


def as_block_source(src, T: int = 1) -> BlockSourceTree:
    if isinstance(src, BlockSourceTree):
        return src
    if isinstance(src, FlatSource):
        return iid_source(src.dist(), T)
    if isinstance(src, Dist):
        return iid_source(src, T)
    raise TypeError(f"cannot use {type(src).__name__} as a block source")


def _integer_weights(masses: list) -> tuple[list[int], int]:
    denom = math.lcm(*(m.denominator for m in masses)) if masses else 1
    return [int(m * denom) for m in masses], denom


def _table_from_counts(counts: np.ndarray, denom: int, mode: str) -> np.ndarray:
    if mode == APPROX:
        return counts.astype(float) / denom if counts.dtype != object else np.vectorize(float)(counts) / denom
    out = np.empty(counts.shape, dtype=object)
    flat = out.reshape(-1)
    for i, c in enumerate(counts.reshape(-1).tolist()):
        flat[i] = Fraction(int(c), denom)
    return out


def image_counts(f: HashFamily, d: Dist) -> tuple[np.ndarray, object]:
    """Distribution of h(X) for every member h as (weights, denominator).

    Returns an array of shape (|H|, M); row h divided by the denominator is
    the law of h(X). Exact mode gives integer weights, approximate mode
    floats with denominator 1.
    """
    if d.domain_size != f.domain_size:
        raise DistError(f"source domain {d.domain_size} != family domain {f.domain_size}")
    tab = f.table()
    if d.mode == EXACT:
        w, denom = _integer_weights(list(d.mass))
        dtype = np.int64 if denom < _INT64_SAFE else object
        wv = np.array(w, dtype=dtype)
    else:
        wv, denom, dtype = np.array(d.mass, dtype=float), 1, float
    counts = np.zeros((f.size, f.range_size), dtype=dtype)
    rows = np.repeat(np.arange(f.size), f.domain_size)
    np.add.at(counts, (rows, tab.reshape(-1)), np.tile(wv, f.size))
    return counts, denom


def image_dist(f: HashFamily, index: int, d: Dist) -> Dist:
    """Law of h(X) for the member with the given index."""
    if not 0 <= index < f.size:
        raise IndexError(f"hash index {index} out of range({f.size})")
    counts, denom = image_counts(f, d)
    return Dist(tuple(_table_from_counts(counts[index], denom, d.mode).tolist()), d.mode)


def _outer_power(rows: np.ndarray, T: int) -> np.ndarray:
    # rows: (|H|, M) -> (|H|, M, ..., M) with T trailing axes
    out = rows
    for _ in range(T - 1):
        out = out[..., None] * rows.reshape((rows.shape[0],) + (1,) * (out.ndim - 1) + (rows.shape[1],))
    return out


def _guard_cells(f: HashFamily, T: int, guard: int, hashed_rows: int) -> None:
    cells = hashed_rows * f.range_size ** T
    if cells > guard:
        raise GuardError(f"{hashed_rows}*{f.range_size}^{T} = {cells} cells exceed guard {guard}")


def _hashed_counts(f: HashFamily, src: BlockSourceTree, rows: np.ndarray) -> tuple[np.ndarray, object]:
    T, M = src.T, f.range_size
    if src.is_iid:
        counts, denom = image_counts(f, src.iid)
        counts = counts[rows]
        if src.mode == EXACT and denom ** T >= _INT64_SAFE:
            counts = counts.astype(object)
        return _outer_power(counts, T), denom ** T
    paths = list(src.paths())
    xs = np.array([x for x, _ in paths], dtype=np.int64).reshape(len(paths), T)
    if src.mode == EXACT:
        w, denom = _integer_weights([p for _, p in paths])
        dtype = np.int64 if denom < _INT64_SAFE else object
        wv = np.array(w, dtype=dtype)
    else:
        wv, denom, dtype = np.array([p for _, p in paths], dtype=float), 1, float
    tab = f.table()[rows]
    codes = np.zeros((len(rows), len(paths)), dtype=np.int64)
    for i in range(T):
        codes = codes * M + tab[:, xs[:, i]]
    codes += (np.arange(len(rows), dtype=np.int64) * M ** T)[:, None]
    counts = np.zeros(len(rows) * M ** T, dtype=dtype)
    np.add.at(counts, codes.reshape(-1), np.tile(wv, len(rows)))
    return counts.reshape((len(rows),) + (M,) * T), denom


def hashed_joint(f: HashFamily, src: BlockSourceTree, guard: int = DEFAULT_GUARD_CELLS) -> JointDist:
    """Exact joint law of (H, H(X_1), ..., H(X_T)) with H uniform on the family.

    Axis 0 is ``"H"`` (family index), then ``"Y1"`` .. ``"YT"``.
    """
    if f.domain_size != src.domain_size:
        raise DistError(f"source domain {src.domain_size} != family domain {f.domain_size}")
    _guard_cells(f, src.T, guard, f.size)
    counts, denom = _hashed_counts(f, src, np.arange(f.size))
    table = _table_from_counts(counts, denom * f.size, src.mode)
    axes = [("H", f.size)] + [(f"Y{i + 1}", f.range_size) for i in range(src.T)]
    return JointDist(axes, table, src.mode, validate=False)


def hashed_given_h(f: HashFamily, index: int, src: BlockSourceTree,
                   guard: int = DEFAULT_GUARD_CELLS) -> JointDist:
    """Exact law of (h(X_1), ..., h(X_T)) for one family member."""
    if not 0 <= index < f.size:
        raise IndexError(f"hash index {index} out of range({f.size})")
    if f.domain_size != src.domain_size:
        raise DistError(f"source domain {src.domain_size} != family domain {f.domain_size}")
    _guard_cells(f, src.T, guard, 1)
    counts, denom = _hashed_counts(f, src, np.array([index]))
    table = _table_from_counts(counts[0], denom, src.mode)
    return JointDist([(f"Y{i + 1}", f.range_size) for i in range(src.T)], table, src.mode, validate=False)


def random_k_dist(rng: SplitMix64, n: int, K: int, spread: int = 2, denom: int = 4) -> Dist:
    """Random exact Dist on range(n) with cp <= 1/K.

    Random weights on a random support of size K..K+spread, then halved
    toward uniform until the collision bound holds.
    """
    if not 1 <= K <= n:
        raise DistError("need 1 <= K <= n")
    size = K + rng.randbelow(min(spread, n - K) + 1)
    support = rng.sample(n, size)
    w = [0] * n
    for x, v in zip(support, rng.fraction_weights(size, denom)):
        w[x] = v
    d = Dist.from_weights(w)
    u = Fraction(1, n)
    for _ in range(16):
        if cp(d) * K <= 1:
            return d
        d = Dist(tuple((m + u) / 2 for m in d.mass))
    return Dist.uniform(n)


def random_block_source(rng: SplitMix64, n: int, T: int, K: int, **kw) -> BlockSourceTree:
    """Random block K-source: an independent random_k_dist after every prefix."""
    conds: dict[tuple, Dist] = {}
    frontier = [()]
    while frontier:
        prefix = frontier.pop()
        d = random_k_dist(rng, n, K, **kw)
        conds[prefix] = d
        if len(prefix) + 1 < T:
            frontier.extend(prefix + (x,) for x in reversed(d.support()))
    return BlockSourceTree(T, n, conditionals=conds)


_SOURCE = re.compile(r"^(flat|iid|tree|random):(.*)$")


def _read_dist(path: Path, mode: str = EXACT) -> Dist:
    text = path.read_text()
    try:
        vals = json.loads(text)
    except json.JSONDecodeError:
        vals = re.split(r"[\s,]+", text.strip())
    if isinstance(vals, dict):
        d = dist_from_json(text, mode)
        if not isinstance(d, Dist):
            raise DistError(f"{path}: expected a single-axis distribution")
        return d
    return Dist(tuple(_parse_number(str(v), mode) for v in vals), mode)


def parse_source(desc: str, base: Path | None = None, mode: str = EXACT, seed: int = 0):
    """Build a source from its descriptor.

    ``flat:n<N>:support=<a,b,...>`` gives a FlatSource; ``iid:<dist-file>:t<T>``
    and ``tree:<file>`` give a BlockSourceTree, as does
    ``random:n<N>:t<T>:k<K>``, drawn by :func:`random_block_source` from
    ``seed``. A dist file is either the structured form of
    :func:`~blockhash.exactdist.dist_to_json` or a bare list of masses.
    """
    m = _SOURCE.match(desc.strip())
    if not m:
        raise ValueError(f"malformed source descriptor {desc!r}")
    kind, rest = m.groups()
    base = base or Path.cwd()
    if kind == "flat":
        fm = re.fullmatch(r"n(\d+):support=([\d,]+)", rest)
        if not fm:
            raise ValueError(f"malformed flat source {desc!r}")
        return FlatSource(int(fm.group(1)), tuple(int(v) for v in fm.group(2).split(",")))
    if kind == "iid":
        im = re.fullmatch(r"(.+):t(\d+)", rest)
        if not im:
            raise ValueError(f"malformed iid source {desc!r}")
        return iid_source(_read_dist(base / im.group(1), mode), int(im.group(2)))
    if kind == "random":
        rm = re.fullmatch(r"n(\d+):t(\d+):k(\d+)", rest)
        if not rm:
            raise ValueError(f"malformed random source {desc!r}")
        n, T, K = map(int, rm.groups())
        if not 1 <= K <= n:
            raise ValueError(f"need 1 <= k <= n in {desc!r}")
        return random_block_source(SplitMix64(derive_key(seed, n, T, K)), n, T, K)
    return BlockSourceTree.from_json((base / rest).read_text())
