"""Percolation configurations on [-L, L] and samplers for the product measure."""
from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numba
import numpy as np

from .errors import DomainError, TooLarge
from .params import ModelParams, edge_open_probability

MAX_ENUM_EDGES = 24
HEADER = "lrperc-config v1"


def trial_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Stream key for trial ``index``; independent of how trials are scheduled."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Configuration:
    """Open edges on [-L, L].

    ``nn_open[i + L]`` is the state of {i, i+1}; long edges (length >= 2) are kept as
    two parallel arrays sorted by (x, y).
    """

    L: int
    nn_open: np.ndarray
    long_x: np.ndarray
    long_y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nn_open", _frozen(self.nn_open, bool))
        object.__setattr__(self, "long_x", _frozen(self.long_x, np.int64))
        object.__setattr__(self, "long_y", _frozen(self.long_y, np.int64))
        if self.nn_open.shape != (2 * self.L,):
            raise DomainError("nn_open must have length 2L")

    @classmethod
    def from_edges(cls, L: int, edges) -> "Configuration":
        """Build from an iterable of open edges given as vertex pairs."""
        nn = np.zeros(2 * L, dtype=bool)
        longs = set()
        for a, b in edges:
            x, y = (a, b) if a < b else (b, a)
            if x == y or x < -L or y > L:
                raise DomainError(f"edge ({a}, {b}) outside [-{L}, {L}]")
            if y - x == 1:
                nn[x + L] = True
            else:
                longs.add((x, y))
        pairs = sorted(longs)
        xs = np.array([e[0] for e in pairs], dtype=np.int64)
        ys = np.array([e[1] for e in pairs], dtype=np.int64)
        return cls(L, nn, xs, ys)

    @classmethod
    def fully_open(cls, L: int) -> "Configuration":
        xs, ys = _long_edge_table(L)
        order = np.lexsort((ys, xs))
        return cls(L, np.ones(2 * L, dtype=bool), xs[order], ys[order])

    @classmethod
    def fully_closed(cls, L: int) -> "Configuration":
        empty = np.zeros(0, dtype=np.int64)
        return cls(L, np.zeros(2 * L, dtype=bool), empty, empty)

    @property
    def vertices(self) -> range:
        return range(-self.L, self.L + 1)

    @property
    def long_edges(self) -> list[tuple[int, int]]:
        return list(zip(self.long_x.tolist(), self.long_y.tolist()))

    @cached_property
    def _long_set(self) -> frozenset:
        return frozenset(self.long_edges)

    def is_open(self, a: int, b: int) -> bool:
        x, y = (a, b) if a < b else (b, a)
        if x < -self.L or y > self.L or x == y:
            return False
        if y - x == 1:
            return bool(self.nn_open[x + self.L])
        return (x, y) in self._long_set

    def open_edges(self) -> list[tuple[int, int]]:
        """All open edges sorted by (x, y)."""
        nn = [(int(i) - self.L, int(i) - self.L + 1) for i in np.flatnonzero(self.nn_open)]
        return sorted(nn + self.long_edges)

    @cached_property
    def right_neighbours(self) -> dict[int, list[int]]:
        """x -> sorted y > x with {x, y} open (long edges only)."""
        out: dict[int, list[int]] = {}
        for x, y in self.long_edges:
            out.setdefault(x, []).append(y)
        return out

    @cached_property
    def incoming(self) -> list[list[int]]:
        """incoming[y + L] lists every z < y with {z, y} open."""
        lists: list[list[int]] = [[] for _ in range(2 * self.L + 1)]
        for i in np.flatnonzero(self.nn_open).tolist():
            lists[i + 1].append(i - self.L)
        for x, y in self.long_edges:
            lists[y + self.L].append(x)
        return lists

    def with_edge(self, a: int, b: int, is_open: bool = True) -> "Configuration":
        edges = set(self.open_edges())
        e = (min(a, b), max(a, b))
        if is_open:
            edges.add(e)
        else:
            edges.discard(e)
        return Configuration.from_edges(self.L, edges)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.L == other.L
            and np.array_equal(self.nn_open, other.nn_open)
            and np.array_equal(self.long_x, other.long_x)
            and np.array_equal(self.long_y, other.long_y)
        )

    def __hash__(self):
        return hash((self.L, self.nn_open.tobytes(), self.long_x.tobytes(), self.long_y.tobytes()))

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{HEADER} L={self.L}\n")
        buf.write("nn " + "".join("1" if b else "0" for b in self.nn_open) + "\n")
        for x, y in self.long_edges:
            buf.write(f"e {x} {y}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "Configuration":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith(HEADER + " L="):
            raise DomainError("missing lrperc-config header")
        L = int(lines[0].split("L=", 1)[1])
        if len(lines) < 2 or not lines[1].startswith("nn"):
            raise DomainError("missing nn line")
        bits = lines[1][2:].strip()
        if len(bits) != 2 * L or set(bits) - {"0", "1"}:
            raise DomainError("nn bitstring must have 2L characters from {0, 1}")
        nn = np.array([c == "1" for c in bits], dtype=bool)
        pairs = []
        for ln in lines[2:]:
            tag, xs, ys = ln.split()
            if tag != "e":
                raise DomainError(f"unexpected line {ln!r}")
            x, y = int(xs), int(ys)
            if not (-L <= x and y <= L and y - x >= 2):
                raise DomainError(f"bad long edge {ln!r}")
            pairs.append((x, y))
        if pairs != sorted(set(pairs)):
            raise DomainError("long edges must be sorted and unique")
        xs_ = np.array([p[0] for p in pairs], dtype=np.int64)
        ys_ = np.array([p[1] for p in pairs], dtype=np.int64)
        return cls(L, nn, xs_, ys_)


def write_configuration(config: Configuration, path) -> None:
    Path(path).write_text(config.to_text())


def read_configuration(path) -> Configuration:
    return Configuration.from_text(Path(path).read_text())


@lru_cache(maxsize=16)
def _long_edge_table(L: int):
    """All long edges of [-L, L], grouped by length d = 2..2L then by x."""
    xs, ys = [], []
    for d in range(2, 2 * L + 1):
        x = np.arange(-L, L - d + 1, dtype=np.int64)
        xs.append(x)
        ys.append(x + d)
    if not xs:
        e = np.zeros(0, dtype=np.int64)
        return e, e
    return np.concatenate(xs), np.concatenate(ys)


@lru_cache(maxsize=16)
def _naive_table(L: int, beta: float):
    xs, ys = _long_edge_table(L)
    d = (ys - xs).astype(float)
    return xs, ys, -np.expm1(-beta / (d * d))


@lru_cache(maxsize=16)
def _skip_table(L: int, beta: float):
    d = np.arange(2, 2 * L + 1, dtype=np.int64)
    n = 2 * L + 1 - d
    q = -np.expm1(-beta / (d.astype(float) ** 2))
    return n, np.log1p(-q)


@numba.njit(cache=True, nogil=True)
def _skip_kernel(rng, n, log_keep, L):
    """Per length class d = 2..2L, walk the 2L+1-d start points with geometric gaps.

    A gap j >= 0 of closed edges has probability (1-q)^j q; it is drawn by inversion
    as floor(log(1-U) / log(1-q)).
    """
    cap = 64
    xs = np.empty(cap, np.int64)
    ys = np.empty(cap, np.int64)
    t = 0
    for c in range(n.shape[0]):
        d = c + 2
        pos = -1
        lk = log_keep[c]
        while True:
            g = np.log1p(-rng.random()) / lk
            if pos + 1 + g >= n[c]:
                break
            pos += 1 + int(g)
            if t == cap:
                cap *= 2
                xs2 = np.empty(cap, np.int64)
                ys2 = np.empty(cap, np.int64)
                xs2[:t] = xs[:t]
                ys2[:t] = ys[:t]
                xs = xs2
                ys = ys2
            xs[t] = pos - L
            ys[t] = pos - L + d
            t += 1
    return xs[:t].copy(), ys[:t].copy()


def _sample_long_naive(rng, L, beta):
    xs, ys, prob = _naive_table(L, beta)
    hit = rng.random(prob.shape[0]) < prob
    return xs[hit], ys[hit]


def _sample_long_skip(rng, L, beta):
    n, log_keep = _skip_table(L, beta)
    return _skip_kernel(rng, n, log_keep, L)


def sample_configuration(model: ModelParams, L: int, seed, mode: str = "skip") -> Configuration:
    """Draw from the Bernoulli product measure on the edges of [-L, L].

    Nearest-neighbour bits always come first from the stream, so runs that differ
    only in ``p`` are coupled monotonically.
    """
    if L < 1:
        raise DomainError("L must be >= 1")
    rng = make_rng(seed)
    nn = rng.random(2 * L) < model.p
    if mode == "naive":
        x, y = _sample_long_naive(rng, L, model.beta)
    elif mode == "skip":
        x, y = _sample_long_skip(rng, L, model.beta)
    else:
        raise DomainError(f"unknown sampling mode {mode!r}")
    order = np.lexsort((y, x))
    return Configuration(L, nn, x[order], y[order])


def all_edges(L: int) -> list[tuple[int, int]]:
    return [(x, y) for x in range(-L, L + 1) for y in range(x + 1, L + 1)]


def iter_configurations(model: ModelParams, L: int):
    """Yield every (Configuration, probability) over the edges of [-L, L]."""
    edges = all_edges(L)
    if len(edges) > MAX_ENUM_EDGES:
        raise TooLarge(f"{len(edges)} edges exceeds the enumeration cap of {MAX_ENUM_EDGES}")
    probs = [edge_open_probability(x, y, model) for x, y in edges]
    for bits in itertools.product((0, 1), repeat=len(edges)):
        w = math.prod(pe if b else 1.0 - pe for b, pe in zip(bits, probs))
        yield Configuration.from_edges(L, [e for b, e in zip(bits, edges) if b]), w


def enumerate_all_configurations(model: ModelParams, L: int) -> list:
    return list(iter_configurations(model, L))
