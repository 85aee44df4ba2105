"""Monte Carlo harness: defect, repair, span and origin-reach frequencies.

Every trial draws its configuration from its own seed stream, derived from the
master seed and the trial index, and per-trial results are aggregated in trial
order. Reports are therefore identical for any number of worker threads.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from statsmodels.stats.proportion import proportion_confint

from .config import sample_configuration, trial_seed
from .errors import DomainError, NoConditioningEvents, SoundnessViolation
from .fk import Boundary, HeatBathChain
from .oriented import has_oriented_span, origin_reaches_right
from .params import ModelParams, ScaleParams, ifloor_pow, percolation_lower_bound
from .renorm import (BAD, GOOD, HOPEFUL, bridge_candidates, check_origin_shielding,
                     run_renormalization)

CSV_COLUMNS = ["name", "p", "beta", "kappa", "L", "estimate", "ci_low", "ci_high",
               "trials", "theory_bound"]


@dataclass
class ExperimentReport:
    name: str
    estimate: float
    ci_low: float
    ci_high: float
    trials: int
    master_seed: int
    params_echo: dict
    theory_bound: float | None = None
    bound_formula: str | None = None
    approximate: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("a report needs at least one trial")
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise DomainError("confidence interval does not contain the estimate")

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def csv_row(self) -> dict:
        e = self.params_echo
        return {"name": self.name, "p": e.get("p"), "beta": e.get("beta"),
                "kappa": e.get("kappa"), "L": e.get("L"), "estimate": self.estimate,
                "ci_low": self.ci_low, "ci_high": self.ci_high, "trials": self.trials,
                "theory_bound": self.theory_bound}


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def wilson_interval(successes: int, n: int) -> tuple[float, float, float]:
    """(estimate, low, high), 95% Wilson score interval."""
    if n < 1:
        raise DomainError("need at least one observation")
    est = successes / n
    lo, hi = proportion_confint(successes, n, alpha=0.05, method="wilson")
    return est, min(float(lo), est), max(float(hi), est)


def _map_trials(fn, n: int, threads: int = 1, chunk: int = 64) -> list:
    """[fn(0), ..., fn(n-1)], evaluated on a thread pool, returned in index order."""
    if threads < 1:
        raise DomainError("threads must be >= 1")
    ranges = [range(a, min(a + chunk, n)) for a in range(0, n, chunk)]
    if threads == 1:
        parts = [[fn(i) for i in r] for r in ranges]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda r: [fn(i) for i in r], ranges))
    return [x for part in parts for x in part]


def _echo(model: ModelParams, scales: ScaleParams, **more) -> dict:
    out = {**model.echo(), **scales.echo()}
    out.update(more)
    return out


def no_bridge_probability(config, model: ModelParams, pairs) -> float:
    """Probability that none of the candidate pairs is open, long edges resampled.

    Nearest-neighbour pairs are part of the conditioning and are read off the
    configuration.
    """
    log_q = 0.0
    for x, y in pairs:
        d = y - x
        if d == 1:
            if config.is_open(x, y):
                return 0.0
            continue
        log_q -= model.beta / (d * d)
    return math.exp(log_q)


def _fk_configurations(model, L, trials, seed, burnin, thin):
    chain = HeatBathChain(model, L, Boundary.FREE, trial_seed(seed, 0))
    chain.run(burnin)
    out = []
    for _ in range(trials):
        chain.run(thin)
        out.append(chain.configuration())
    return out


def _configuration_source(model, scales, trials, seed, burnin, thin):
    """Per-trial configuration getter; kappa > 1 reads from one heat-bath chain."""
    if model.kappa == 1:
        return (lambda i: sample_configuration(model, scales.L, trial_seed(seed, i))), False
    configs = _fk_configurations(model, scales.L, trials, seed, burnin, thin)
    return configs.__getitem__, True


def estimate_defect_probability(model: ModelParams, scales: ScaleParams, k: int, trials: int,
                                seed: int, threads: int = 1, burnin: int = 1000,
                                thin: int = 10) -> ExperimentReport:
    """Fraction of interior level-k blocks in final state B.

    With kappa = 1 the report also carries a Rao-Blackwellised estimate: Hopeful
    blocks contribute their exact conditional failure probability instead of the
    observed outcome.
    """
    if not 1 <= k <= scales.M:
        raise DomainError(f"level k must lie in [1, {scales.M}]")
    get, approx = _configuration_source(model, scales, trials, seed, burnin, thin)

    def one(i):
        cfg = get(i)
        it = run_renormalization(cfg, scales, max_level=k)
        n = bad = 0
        rb = 0.0
        for blk in it.levels[k]:
            if blk.extremal is not None:
                continue
            n += 1
            bad += blk.final == BAD
            if blk.tag == HOPEFUL:
                rb += no_bridge_probability(cfg, model, bridge_candidates(it, k, blk))
            elif blk.tag != GOOD:
                rb += 1.0
        return n, bad, rb

    rows = _map_trials(one, trials, threads)
    n = sum(r[0] for r in rows)
    bad = sum(r[1] for r in rows)
    if n == 0:
        raise NoConditioningEvents("no interior blocks at this level")
    est, lo, hi = wilson_interval(bad, n)
    extra = {"blocks": n, "defected": bad}
    if not approx:
        extra["rao_blackwell"] = math.fsum(r[2] for r in rows) / n
    return ExperimentReport(
        "defect", est, lo, hi, trials, seed, _echo(model, scales, k=k),
        theory_bound=float(scales.scales[k]) ** -scales.delta, bound_formula="l_k^-delta",
        approximate=approx, extra=extra)


def repair_bound(model: ModelParams, scales: ScaleParams, k: int) -> float:
    expo = model.beta * (1 - scales.eta) * (scales.alpha_prime - 1)
    if k == 1:
        expo /= scales.alpha
    return 1.0 - float(scales.scales[k - 1]) ** -expo


def estimate_repair_probability(model: ModelParams, scales: ScaleParams, k: int, trials: int,
                                seed: int, threads: int = 1,
                                min_events: int | None = None,
                                batch: int = 256) -> ExperimentReport:
    """Conditional frequency of a successful bridge over Hopeful level-k blocks.

    Runs ``trials`` configurations, or with ``min_events`` keeps adding fixed
    batches of configurations until that many Hopeful blocks were seen. Each block
    also contributes its exact repair probability 1 - prod(q) over the candidate
    pairs; ``extra['z']`` is the standardised gap between observed and exact
    successes.
    """
    if not 1 <= k <= scales.M:
        raise DomainError(f"level k must lie in [1, {scales.M}]")
    if model.kappa != 1:
        raise DomainError("the repair experiment needs the product measure (kappa = 1)")

    def one(i):
        cfg = sample_configuration(model, scales.L, trial_seed(seed, i))
        it = run_renormalization(cfg, scales, max_level=k)
        out = []
        for blk in it.levels[k]:
            if blk.tag != HOPEFUL:
                continue
            q = no_bridge_probability(cfg, model, bridge_candidates(it, k, blk))
            out.append((blk.final == GOOD, 1.0 - q))
        return out

    rows = []
    done = 0
    target = trials
    while True:
        rows += _map_trials(lambda j: one(done + j), target - done, threads)
        done = target
        events = sum(len(r) for r in rows)
        if min_events is None or events >= min_events:
            break
        target += batch
    flat = [e for r in rows for e in r]
    if not flat:
        raise NoConditioningEvents("no Hopeful blocks occurred")
    succ = sum(1 for ok, _ in flat if ok)
    exact = math.fsum(pr for _, pr in flat)
    var = math.fsum(pr * (1 - pr) for _, pr in flat)
    est, lo, hi = wilson_interval(succ, len(flat))
    extra = {
        "events": len(flat),
        "oracle": exact / len(flat),
        "z": (succ - exact) / math.sqrt(var) if var > 0 else 0.0,
        "standard_error": math.sqrt(var) / len(flat),
    }
    return ExperimentReport(
        "repair", est, lo, hi, done, seed, _echo(model, scales, k=k),
        theory_bound=repair_bound(model, scales, k),
        bound_formula="1 - l_{k-1}^{-beta(1-eta)(alpha'-1)}" + (" / alpha" if k == 1 else ""),
        extra=extra)


def span_width(scales: ScaleParams) -> int:
    return ifloor_pow(scales.L, scales.ratio)


def estimate_span_probability(model: ModelParams, scales: ScaleParams, trials: int, seed: int,
                              threads: int = 1) -> ExperimentReport:
    """Frequency of an oriented open crossing between the end windows.

    Any trial without a crossing is renormalised, and all top blocks Good there
    raises SoundnessViolation (the converse claim is then broken).
    """
    if model.kappa != 1:
        raise DomainError("the span experiment samples the product measure (kappa = 1)")
    width = span_width(scales)

    def one(i):
        cfg = sample_configuration(model, scales.L, trial_seed(seed, i))
        if has_oriented_span(cfg, width):
            return True
        if run_renormalization(cfg, scales).top_all_good():
            raise SoundnessViolation(f"trial {i}: top blocks Good but no crossing")
        return False

    hits = sum(_map_trials(one, trials, threads))
    est, lo, hi = wilson_interval(hits, trials)
    return ExperimentReport(
        "span", est, lo, hi, trials, seed, _echo(model, scales, width=width),
        theory_bound=1.0 - 2.0 * float(scales.L) ** -scales.delta,
        bound_formula="1 - 2 L^-delta", extra={"hits": hits})


def estimate_origin_percolation(model: ModelParams, scales: ScaleParams, trials: int, seed: int,
                                threads: int = 1,
                                renorm_trials: int | None = 2000) -> ExperimentReport:
    """Frequency of 0 reaching the right window.

    The first ``renorm_trials`` trials (all when None) are also renormalised to
    count the shielding event together with all top blocks Good; on those the
    origin must reach, which is asserted.
    """
    if model.kappa != 1:
        raise DomainError("the origin experiment samples the product measure (kappa = 1)")
    width = span_width(scales)
    budget = trials if renorm_trials is None else min(renorm_trials, trials)

    def one(i):
        cfg = sample_configuration(model, scales.L, trial_seed(seed, i))
        reach = origin_reaches_right(cfg, width)
        shielded = None
        if i < budget or not reach:
            it = run_renormalization(cfg, scales)
            shielded = it.top_all_good() and check_origin_shielding(it, scales)
            if shielded and not reach:
                raise SoundnessViolation(f"trial {i}: shielded origin does not reach")
        return reach, shielded if i < budget else None

    rows = _map_trials(one, trials, threads)
    hits = sum(r[0] for r in rows)
    est, lo, hi = wilson_interval(hits, trials)
    shielded = [r for r in rows if r[1]]
    bound = percolation_lower_bound(model.p, scales)
    return ExperimentReport(
        "origin", est, lo, hi, trials, seed, _echo(model, scales, width=width),
        theory_bound=bound.value, bound_formula="percolation lower-bound product",
        extra={
            "hits": hits,
            "renormalised": budget,
            "shielded": len(shielded),
            "reach_given_shielded": (sum(r[0] for r in shielded) / len(shielded))
            if shielded else None,
        })


EXPERIMENTS = {
    "defect": estimate_defect_probability,
    "repair": estimate_repair_probability,
    "span": estimate_span_probability,
    "origin": estimate_origin_percolation,
}
