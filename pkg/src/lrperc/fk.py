"""Random-cluster (FK) layer: cluster counts, exact tiny-volume laws, heat-bath chains.

The wired boundary is a single ghost vertex standing for the complement of the
volume. Each site x gets one ghost edge whose open probability is that of at least
one open edge from x to the outside; the tail of beta/d^2 is summed exactly with
the trigamma function instead of a truncation window.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np
from scipy.special import polygamma

from .config import MAX_ENUM_EDGES, Configuration, make_rng
from .errors import DomainError, TooLarge
from .params import ModelParams, edge_open_probability

GHOST = "ghost"


class Boundary(str, Enum):
    FREE = "free"
    WIRED = "wired"


class UnionFind:
    def __init__(self, items=()):
        self.parent = {}
        for it in items:
            self.parent[it] = it

    def add(self, item):
        self.parent.setdefault(item, item)

    def find(self, item):
        parent = self.parent
        root = item
        while parent[root] != root:
            root = parent[root]
        while parent[item] != root:
            parent[item], item = root, parent[item]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def roots(self):
        return {self.find(x) for x in self.parent}


def _interval(I):
    a, b = I
    if a > b:
        raise DomainError(f"empty interval {I}")
    return int(a), int(b)


def count_clusters(config: Configuration, I, boundary=Boundary.FREE) -> int:
    """Number of open clusters of [-L, L] meeting I.

    Under the wired boundary every vertex outside I is glued into one cluster.
    """
    a, b = _interval(I)
    L = config.L
    if a < -L or b > L:
        raise DomainError("I must lie inside [-L, L]")
    uf = UnionFind(range(-L, L + 1))
    if Boundary(boundary) is Boundary.WIRED:
        outside = [v for v in range(-L, L + 1) if not a <= v <= b]
        for v in outside[1:]:
            uf.union(outside[0], v)
    for x, y in config.open_edges():
        uf.union(x, y)
    return len({uf.find(v) for v in range(a, b + 1)})


def ghost_edge_probability(x: int, I, model: ModelParams) -> float:
    """P(at least one open edge from x to the complement of I), outside edges all open."""
    a, b = _interval(I)
    log_q = 0.0
    for d0 in (x - a + 1, b - x + 1):  # nearest outside vertex on each side
        if d0 == 1:
            log_q += math.log1p(-model.p) if model.p < 1 else -math.inf
            d0 = 2
        log_q -= model.beta * float(polygamma(1, d0))
    return -math.expm1(log_q)


def volume_edges(I, boundary, model: ModelParams):
    """Edges of E(I) (and ghost edges when wired) with their open probabilities."""
    a, b = _interval(I)
    edges = [(x, y) for x in range(a, b + 1) for y in range(x + 1, b + 1)]
    probs = [edge_open_probability(x, y, model) for x, y in edges]
    if Boundary(boundary) is Boundary.WIRED:
        for x in range(a, b + 1):
            edges.append((x, GHOST))
            probs.append(ghost_edge_probability(x, I, model))
    return edges, probs


def _clusters_meeting(vertices, open_edges) -> int:
    uf = UnionFind(vertices)
    uf.add(GHOST)
    for u, v in open_edges:
        uf.union(u, v)
    return len({uf.find(v) for v in vertices})


@dataclass(frozen=True)
class TinyFK:
    """Exact FK law on a tiny volume: one row of ``states`` per configuration."""

    I: tuple
    boundary: Boundary
    edges: tuple
    edge_probs: tuple
    states: np.ndarray
    probs: np.ndarray

    def marginals(self) -> np.ndarray:
        return self.probs @ self.states

    def probability(self, event) -> float:
        """``event`` maps the tuple of open edges to a bool."""
        total = 0.0
        for row, w in zip(self.states, self.probs):
            if event(tuple(e for e, on in zip(self.edges, row) if on)):
                total += w
        return total

    def connection_probability(self, u, v) -> float:
        def joined(open_edges):
            uf = UnionFind([u, v])
            for a, b in open_edges:
                uf.add(a)
                uf.add(b)
                uf.union(a, b)
            return uf.find(u) == uf.find(v)

        return self.probability(joined)

    def state_index(self, row) -> int:
        return int(sum(int(bool(bit)) << i for i, bit in enumerate(row)))

    def as_vector(self) -> np.ndarray:
        """Probabilities indexed by the bitmask of open edges (bit i = edge i)."""
        out = np.zeros(2 ** len(self.edges))
        for row, w in zip(self.states, self.probs):
            out[self.state_index(row)] = w
        return out


def fk_exact_tiny(model: ModelParams, I, boundary=Boundary.FREE) -> TinyFK:
    """Exact law proportional to kappa^C_I times the product weights, by enumeration."""
    a, b = _interval(I)
    boundary = Boundary(boundary)
    edges, probs = volume_edges((a, b), boundary, model)
    if len(edges) > MAX_ENUM_EDGES:
        raise TooLarge(f"{len(edges)} edges exceeds the enumeration cap of {MAX_ENUM_EDGES}")
    verts = list(range(a, b + 1))
    rows, weights = [], []
    for bits in itertools.product((0, 1), repeat=len(edges)):
        w = math.prod(pe if on else 1.0 - pe for on, pe in zip(bits, probs))
        opened = [e for on, e in zip(bits, edges) if on]
        rows.append(bits)
        weights.append(w * model.kappa ** _clusters_meeting(verts, opened))
    weights = np.array(weights)
    return TinyFK(
        (a, b), boundary, tuple(edges), tuple(probs),
        np.array(rows, dtype=bool), weights / math.fsum(weights),
    )


@numba.njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@numba.njit(cache=True)
def _rebuild(parent, size, n, eu, ev, state, skip):
    for i in range(n):
        parent[i] = i
        size[i] = 1
    for e in range(eu.shape[0]):
        if state[e] and e != skip:
            ra = _find(parent, eu[e])
            rb = _find(parent, ev[e])
            if ra != rb:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]


@numba.njit(cache=True)
def _heat_bath(eu, ev, pe, kappa, state, uniforms, n_nodes, ghost, record):
    """Single-edge heat-bath sweeps in fixed edge order.

    P(open | rest) = p / (p + kappa^dC (1 - p)) with dC the cluster count gained by
    closing the edge; a cluster made of the ghost alone does not count.
    ``uniforms`` has shape (sweeps, n_edges). With ``record`` the visit histogram of
    whole-configuration bitmasks is returned (n_edges must be small).
    """
    n_edges = eu.shape[0]
    sweeps = uniforms.shape[0]
    parent = np.empty(n_nodes, np.int64)
    size = np.empty(n_nodes, np.int64)
    cparent = np.empty(n_nodes, np.int64)
    csize = np.empty(n_nodes, np.int64)
    hist = np.zeros(2 ** n_edges if record else 1, np.int64)
    _rebuild(cparent, csize, n_nodes, eu, ev, state, -1)
    for s in range(sweeps):
        for e in range(n_edges):
            u = eu[e]
            v = ev[e]
            if state[e]:
                _rebuild(parent, size, n_nodes, eu, ev, state, e)
                ru = _find(parent, u)
                rv = _find(parent, v)
                connected = ru == rv
                ghost_alone = ghost >= 0 and (v == ghost) and size[rv] == 1
            else:
                ru = _find(cparent, u)
                rv = _find(cparent, v)
                connected = ru == rv
                ghost_alone = ghost >= 0 and (v == ghost) and csize[rv] == 1
            p = pe[e]
            if connected or ghost_alone:
                prob = p
            else:
                prob = p / (p + kappa * (1.0 - p))
            new = uniforms[s, e] < prob
            if new != state[e]:
                state[e] = new
                _rebuild(cparent, csize, n_nodes, eu, ev, state, -1)
        if record:
            code = 0
            for e in range(n_edges):
                if state[e]:
                    code |= 1 << e
            hist[code] += 1
    return hist


class HeatBathChain:
    """Heat-bath chain for the FK measure on [-L, L] (all pairs), free or wired."""

    def __init__(self, model: ModelParams, L: int, boundary=Boundary.FREE, seed=None):
        if L < 1:
            raise DomainError("L must be >= 1")
        self.model = model
        self.L = L
        self.boundary = Boundary(boundary)
        self.rng = make_rng(seed)
        edges, probs = volume_edges((-L, L), self.boundary, model)
        self.edges = edges
        n = 2 * L + 1
        self.ghost = n if self.boundary is Boundary.WIRED else -1
        self.n_nodes = n + (1 if self.ghost >= 0 else 0)
        self._eu = np.array([x + L for x, _ in edges], dtype=np.int64)
        self._ev = np.array([self.ghost if y == GHOST else y + L for _, y in edges], dtype=np.int64)
        self._pe = np.array(probs, dtype=float)
        self.state = np.zeros(len(edges), dtype=np.bool_)

    def run(self, sweeps: int, record: bool = False, chunk: int = 100_000):
        if sweeps < 1:
            raise DomainError("sweeps must be >= 1")
        if record and len(self.edges) > 20:
            raise TooLarge("recording whole-configuration histograms needs <= 20 edges")
        hist = np.zeros(2 ** len(self.edges) if record else 1, dtype=np.int64)
        done = 0
        while done < sweeps:
            n = min(chunk, sweeps - done)
            u = self.rng.random((n, len(self.edges)))
            hist += _heat_bath(self._eu, self._ev, self._pe, float(self.model.kappa),
                               self.state, u, self.n_nodes, self.ghost, record)
            done += n
        return hist if record else None

    def configuration(self) -> Configuration:
        inside = [e for e, on in zip(self.edges, self.state) if on and e[1] != GHOST]
        return Configuration.from_edges(self.L, inside)


def fk_mcmc_sample(model: ModelParams, L: int, boundary=Boundary.FREE, sweeps: int = 1,
                   seed=None) -> Configuration:
    """Run ``sweeps`` heat-bath sweeps from the empty configuration; return the state."""
    chain = HeatBathChain(model, L, boundary, seed)
    chain.run(sweeps)
    return chain.configuration()


def edge_state_table(n_edges: int) -> np.ndarray:
    """Row i holds the edge states encoded by bitmask i (bit j = edge j)."""
    codes = np.arange(2 ** n_edges)
    return ((codes[:, None] >> np.arange(n_edges)) & 1).astype(float)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
