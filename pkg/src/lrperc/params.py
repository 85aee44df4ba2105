"""Model and scale parameters, the scale ladder and the parameter inequalities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateScale, DomainError, SelfLoop

LN2 = math.log(2.0)


def ifloor_pow(base: float, exponent: float) -> int:
    """floor(base ** exponent), robust to values landing a hair below an integer."""
    value = float(base) ** exponent
    r = math.floor(value)
    if (r + 1) - value < 1e-9 * max(1.0, value):
        r += 1
    return int(r)


@dataclass(frozen=True)
class ModelParams:
    beta: float
    p: float
    kappa: float = 1.0
    # p == 1 is only meaningful in degenerate test runs
    allow_degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        lo_ok = self.p > 0
        hi_ok = self.p < 1 or (self.allow_degenerate and self.p == 1)
        if not (lo_ok and hi_ok):
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if not self.kappa >= 1:
            raise DomainError(f"kappa must be >= 1, got {self.kappa}")

    def echo(self) -> dict:
        return {"beta": self.beta, "p": self.p, "kappa": self.kappa}


def scale_sequence(l1: int, alpha: float, M: int) -> list[int]:
    """The ladder l_0 = 1, l_1, ..., l_M with l_k = floor(l_{k-1}^(alpha-1)) * l_{k-1}."""
    if not (1 < alpha < 2):
        raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
    if int(l1) != l1 or l1 < 2:
        raise DomainError(f"l1 must be an integer >= 2, got {l1}")
    if int(M) != M or M < 1:
        raise DomainError(f"M must be an integer >= 1, got {M}")
    if ifloor_pow(l1, alpha - 1) < 2:
        raise DegenerateScale(
            f"floor(l1^(alpha-1)) = {ifloor_pow(l1, alpha - 1)} < 2; the ladder would stall"
        )
    scales = [1, int(l1)]
    for _ in range(2, M + 1):
        prev = scales[-1]
        scales.append(ifloor_pow(prev, alpha - 1) * prev)
    return scales


@dataclass(frozen=True)
class ScaleParams:
    alpha: float
    alpha_prime: float
    delta: float
    l1: int
    M: int
    eta: float = 0.05
    scales: tuple = field(init=False, compare=False)

    def __post_init__(self):
        if not (1 < self.alpha_prime < self.alpha):
            raise DomainError(
                f"need 1 < alpha_prime < alpha, got {self.alpha_prime}, {self.alpha}"
            )
        if not 0 <= self.eta < 1:
            raise DomainError(f"eta must lie in [0, 1), got {self.eta}")
        object.__setattr__(self, "scales", tuple(scale_sequence(self.l1, self.alpha, self.M)))

    @property
    def L(self) -> int:
        return self.scales[-1]

    @property
    def ratio(self) -> float:
        return self.alpha_prime / self.alpha

    def bridge_cap(self, k: int) -> int:
        """floor(l_k^(alpha'/alpha)): the longest admissible repair edge at level k."""
        return ifloor_pow(self.scales[k], self.ratio)

    def echo(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_prime": self.alpha_prime,
            "delta": self.delta,
            "eta": self.eta,
            "l1": self.l1,
            "M": self.M,
            "L": self.L,
        }


def edge_open_probability(x: int, y: int, params: ModelParams) -> float:
    if x == y:
        raise SelfLoop(f"no edge from {x} to itself")
    d = abs(x - y)
    if d == 1:
        return params.p
    return -math.expm1(-params.beta / (d * d))


IMPLIED = "coupling_slack"


@dataclass(frozen=True)
class Inequality:
    name: str
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs > self.rhs


@dataclass(frozen=True)
class FeasibilityReport:
    inequalities: tuple

    @property
    def feasible(self) -> bool:
        return all(q.holds for q in self.inequalities if q.name != IMPLIED)

    def __bool__(self):
        return self.feasible

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "inequalities": [
                {"name": q.name, "lhs": q.lhs, "rhs": q.rhs, "holds": q.holds}
                for q in self.inequalities
            ],
        }


def check_feasibility(beta, alpha, alpha_prime, delta, eta=0.05) -> FeasibilityReport:
    """Evaluate the parameter chain used by the inductive estimates.

    ``coupling_slack`` is reported for completeness; it follows from
    ``delta_floor`` and ``induction`` together and does not enter the verdict.
    """
    if not beta > 1:
        raise DomainError(f"beta must exceed 1, got {beta}")
    if not (1 < alpha_prime < alpha < 2):
        raise DomainError("need 1 < alpha_prime < alpha < 2")
    if not 0 <= eta < 1:
        raise DomainError("eta must lie in [0, 1)")
    a1 = alpha - 1
    quad = 2 * a1 * a1 / (2 - alpha)
    return FeasibilityReport((
        Inequality("coupling", beta * (alpha_prime - 1), alpha * a1 / (2 - alpha)),
        Inequality(IMPLIED, beta * (1 - eta) * (alpha_prime - 1) - quad, a1),
        Inequality("delta_floor", delta, 2 * a1 / (2 - alpha)),
        Inequality("induction", beta * (1 - eta) * (alpha_prime - 1) - delta * a1, a1),
    ))


def p_threshold(kappa: float, l1: int, delta: float) -> float:
    """Smallest nearest-neighbour probability admitted by the starting choice of p."""
    if not kappa >= 1 or l1 < 2 or not delta > 0:
        raise DomainError("need kappa >= 1, l1 >= 2, delta > 0")
    return 1.0 - kappa ** -2 * LN2 ** 5 / 128.0 * float(l1) ** (-delta - 1.0)


@dataclass(frozen=True)
class LowerBound:
    value: float
    log_value: float
    exponents: tuple
    nonpositive_factor: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "log_value": self.log_value,
            "exponents": list(self.exponents),
            "nonpositive_factor": self.nonpositive_factor,
        }


def percolation_lower_bound(p: float, scales: ScaleParams) -> LowerBound:
    """p^floor(l1^r) * prod_{k>=2} (1 - l_{k-1}^-delta)^floor(floor(l_k^r) / l_{k-1}), r = alpha'/alpha."""
    if not 0 < p <= 1:
        raise DomainError("p must lie in (0, 1]")
    ls = scales.scales
    e1 = scales.bridge_cap(1)
    exponents = [e1]
    logs = [e1 * math.log(p)] if p < 1 else [0.0]
    bad = False
    for k in range(2, scales.M + 1):
        ek = scales.bridge_cap(k) // ls[k - 1]
        exponents.append(ek)
        base = 1.0 - float(ls[k - 1]) ** -scales.delta
        if base <= 0:
            bad = True
            if ek > 0:
                logs.append(-math.inf)
        elif ek:
            logs.append(ek * math.log1p(-float(ls[k - 1]) ** -scales.delta))
    if any(v == -math.inf for v in logs):
        return LowerBound(0.0, -math.inf, tuple(exponents), bad)
    lv = math.fsum(logs)
    return LowerBound(math.exp(lv), lv, tuple(exponents), bad)
