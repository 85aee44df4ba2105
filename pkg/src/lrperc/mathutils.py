"""Numerical helpers: the 1/r^2 coupling integral, its lattice bounds, and the convex identity."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import polygamma

from .errors import DomainError, GapTooSmall, LengthMismatch, OverlapError


@dataclass(frozen=True)
class RealInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"interval [{self.lo}, {self.hi}] has lo > hi")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, other: "RealInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


def _iv(I) -> RealInterval:
    return I if isinstance(I, RealInterval) else RealInterval(*I)


def gap(I, J) -> float:
    I, J = _iv(I), _iv(J)
    return max(J.lo - I.hi, I.lo - J.hi)


def coupling_integral(I, Iprime) -> float:
    """Integral of 1/|x-y|^2 over I x I' for disjoint intervals."""
    I, Ip = _iv(I), _iv(Iprime)
    d = gap(I, Ip)
    if d <= 0:
        raise OverlapError(f"intervals {I} and {Ip} are not separated (gap {d})")
    a, b = I.length, Ip.length
    return math.log((a + d) * (b + d) / (d * (a + b + d)))


@dataclass(frozen=True)
class LatticeBounds:
    total: float
    lower: float
    upper: float

    @property
    def passed(self) -> bool:
        return self.lower <= self.total <= self.upper


def lattice_sum_bounds_check(I, Iprime) -> LatticeBounds:
    """Compare sum_{x in I, y in I'} |x-y|^-2 with C- J and C+ J, C+- = (1 +- 2/d)^2.

    ``I`` and ``I'`` are integer ranges [lo, hi] and d is the smallest lattice
    distance between them. J is evaluated on the unit-cell covers
    [lo - 1/2, hi + 1/2], which is what makes the bounds hold for short ranges.
    """
    (a0, a1), (b0, b1) = (tuple(map(int, I)), tuple(map(int, Iprime)))
    if a0 > a1 or b0 > b1:
        raise DomainError("empty integer range")
    if b0 < a0:
        (a0, a1), (b0, b1) = (b0, b1), (a0, a1)
    d = b0 - a1
    if d < 3:
        raise GapTooSmall(f"lattice gap {d} < 3")
    # inner sum over y in closed form: sum_{n=u}^{v} n^-2 = psi1(u) - psi1(v + 1)
    xs = np.arange(a0, a1 + 1, dtype=float)
    total = math.fsum(polygamma(1, b0 - xs) - polygamma(1, b1 + 1 - xs))
    J = coupling_integral((a0 - 0.5, a1 + 0.5), (b0 - 0.5, b1 + 0.5))
    return LatticeBounds(total, (1 - 2 / d) ** 2 * J, (1 + 2 / d) ** 2 * J)


@dataclass(frozen=True)
class NestedCheck:
    preconditions_hold: bool
    lhs: float | None = None
    rhs: float | None = None
    reason: str = ""

    @property
    def passed(self) -> bool | None:
        if not self.preconditions_hold:
            return None
        return self.lhs <= self.rhs * (1 + 1e-12)


def nested_interval_inequality_check(I, Iprime, Idoubleprime) -> NestedCheck:
    """J(I, I') <= 4 |I'|/|I''| J(I, I'') for I' inside I'' and dist(I, I'') >= |I''|."""
    I, Ip, Ipp = _iv(I), _iv(Iprime), _iv(Idoubleprime)
    if not Ipp.contains(Ip):
        return NestedCheck(False, reason="I' is not contained in I''")
    if Ipp.length <= 0:
        return NestedCheck(False, reason="I'' has zero length")
    dpp = gap(I, Ipp)
    if dpp < Ipp.length or dpp <= 0:
        return NestedCheck(False, reason=f"dist(I, I'') = {dpp} < |I''| = {Ipp.length}")
    lhs = coupling_integral(I, Ip)
    rhs = 4 * Ip.length / Ipp.length * coupling_integral(I, Ipp)
    return NestedCheck(True, lhs, rhs)


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    residual: float
    weight_sum: float
    inverse_bound_ok: bool


def convex_identity_check(gammas, deltas) -> IdentityCheck:
    """Both sides of prod(g_i + D_i) = sum_{J != {}} c^|J| (prod g + c^-|J| prod_{J^c} g prod_J D).

    c = 2^(1/N) - 1. Up to N = 12 the right side is a literal subset sum; beyond that
    subsets are grouped by size through the coefficients of prod(g_i + z D_i).
    """
    g, D = list(map(float, gammas)), list(map(float, deltas))
    if len(g) != len(D):
        raise LengthMismatch(f"{len(g)} gammas vs {len(D)} deltas")
    N = len(g)
    if not 1 <= N <= 20:
        raise DomainError("need 1 <= N <= 20")
    c = 2.0 ** (1.0 / N) - 1.0
    lhs = math.prod(gi + di for gi, di in zip(g, D))
    prod_g = math.prod(g)
    weight_sum = math.fsum(math.comb(N, m) * c ** m for m in range(1, N + 1))
    if N <= 12:
        terms = []
        for r in range(1, N + 1):
            for J in itertools.combinations(range(N), r):
                inJ = set(J)
                mixed = math.prod(D[i] if i in inJ else g[i] for i in range(N))
                terms.append(c ** r * (prod_g + c ** -r * mixed))
        rhs = math.fsum(terms)
    else:
        coeff = [1.0]  # coefficients of prod(g_i + z D_i) in z
        for gi, di in zip(g, D):
            nxt = [0.0] * (len(coeff) + 1)
            for m, a in enumerate(coeff):
                nxt[m] += a * gi
                nxt[m + 1] += a * di
            coeff = nxt
        rhs = math.fsum(
            [math.comb(N, m) * c ** m * prod_g for m in range(1, N + 1)] + coeff[1:]
        )
    return IdentityCheck(lhs, rhs, abs(lhs - rhs), weight_sum, 1.0 / c <= N / math.log(2))
