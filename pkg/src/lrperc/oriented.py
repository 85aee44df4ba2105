"""Oriented reachability: C_x^+ and the spanning / origin events."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .config import Configuration
from .errors import DomainError
from .params import ModelParams, edge_open_probability


@dataclass(frozen=True)
class ReachSet:
    source: int
    members: tuple

    def __contains__(self, y):
        return y in self._set

    @property
    def _set(self):
        return frozenset(self.members)

    def __len__(self):
        return len(self.members)


@numba.njit(cache=True, nogil=True)
def _reach_kernel(nn_open, long_x, long_y, L, src_lo, src_hi):
    """Forward pass: long edges are sorted by (x, y), so out-edges of x are contiguous."""
    n = 2 * L + 1
    reached = np.zeros(n, np.bool_)
    for s in range(src_lo, src_hi + 1):
        reached[s + L] = True
    e = 0
    m = long_x.shape[0]
    for j in range(src_lo + L, n):
        while e < m and long_x[e] + L < j:
            e += 1
        if not reached[j]:
            continue
        if j < n - 1 and nn_open[j]:
            reached[j + 1] = True
        f = e
        while f < m and long_x[f] + L == j:
            reached[long_y[f] + L] = True
            f += 1
    return reached


def _reach_flags(config: Configuration, lo: int, hi: int) -> np.ndarray:
    """reached[y + L]: some source in [lo, hi] has an oriented open path to y."""
    return _reach_kernel(config.nn_open, config.long_x, config.long_y, config.L, lo, hi)


def oriented_reachable_set(config: Configuration, x: int) -> ReachSet:
    if not -config.L <= x <= config.L:
        raise DomainError(f"vertex {x} outside [-{config.L}, {config.L}]")
    flags = _reach_flags(config, x, x)
    return ReachSet(x, tuple((np.flatnonzero(flags) - config.L).tolist()))


def has_oriented_span(config: Configuration, width: int) -> bool:
    """Some x in [-L, -L+width] reaches some y in [L-width, L] along an oriented open path."""
    L = config.L
    if not 0 < width <= L:
        raise DomainError(f"width must lie in (0, {L}], got {width}")
    return bool(_reach_flags(config, -L, -L + width)[2 * L - width:].any())


def origin_reaches_right(config: Configuration, width: int) -> bool:
    """0 reaches some y in [L-width, L]."""
    L = config.L
    if not 0 < width <= L:
        raise DomainError(f"width must lie in (0, {L}], got {width}")
    return bool(_reach_flags(config, 0, 0)[2 * L - width:].any())


def is_open_oriented_path(config: Configuration, vertices) -> bool:
    """True iff the vertices increase strictly and consecutive pairs are open edges."""
    vs = list(vertices)
    if not vs:
        return False
    return all(a < b and config.is_open(a, b) for a, b in zip(vs, vs[1:]))


def exact_reach_probability(model: ModelParams, L: int, sources, targets) -> float:
    """Exact product-measure probability that some source reaches some target.

    Dynamic programme over the reached subset of already-processed vertices: whether
    y is reached depends only on that subset and on the edges {z, y}, z < y, which
    are independent of everything processed before. Practical for 2L+1 <= ~14.
    """
    sources = {int(s) for s in sources}
    targets = {int(t) for t in targets}
    n = 2 * L + 1
    if n > 16:
        raise DomainError("exact_reach_probability is limited to 2L+1 <= 16 vertices")
    verts = list(range(-L, L + 1))
    # state: frozenset of reached vertices among those processed so far
    states = {frozenset(): 1.0}
    hit = 0.0
    for y in verts:
        nxt: dict = {}
        for reached, w in states.items():
            if y in sources:
                p_reach = 1.0
            else:
                miss = math.prod(1.0 - edge_open_probability(z, y, model) for z in reached)
                p_reach = 1.0 - miss
            if p_reach > 0:
                if y in targets:
                    hit += w * p_reach
                else:
                    s = reached | {y}
                    nxt[s] = nxt.get(s, 0.0) + w * p_reach
            if p_reach < 1:
                nxt[reached] = nxt.get(reached, 0.0) + w * (1.0 - p_reach)
        states = nxt
    return hit
