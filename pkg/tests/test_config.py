import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrperc.config import (Configuration, all_edges, enumerate_all_configurations,
                           read_configuration, sample_configuration, trial_seed,
                           write_configuration)
from lrperc.errors import DomainError, TooLarge
from lrperc.params import ModelParams, edge_open_probability


def expected_long_edges(L, beta):
    return math.fsum((2 * L + 1 - d) * -math.expm1(-beta / d ** 2) for d in range(2, 2 * L + 1))


@st.composite
def configurations(draw, max_L=6):
    L = draw(st.integers(1, max_L))
    edges = all_edges(L)
    mask = draw(st.lists(st.booleans(), min_size=len(edges), max_size=len(edges)))
    return Configuration.from_edges(L, [e for e, b in zip(edges, mask) if b])


def test_invariants_after_sampling():
    cfg = sample_configuration(ModelParams(3.0, 0.5), 40, 7)
    pairs = cfg.long_edges
    assert pairs == sorted(set(pairs))
    assert all(-40 <= x and y <= 40 and y - x >= 2 for x, y in pairs)
    assert cfg.nn_open.shape == (80,)


@pytest.mark.parametrize("mode", ["skip", "naive"])
def test_determinism(mode):
    m = ModelParams(1.0, 0.7)
    a = sample_configuration(m, 30, trial_seed(5, 3), mode=mode)
    b = sample_configuration(m, 30, trial_seed(5, 3), mode=mode)
    c = sample_configuration(m, 30, trial_seed(5, 4), mode=mode)
    assert a == b and hash(a) == hash(b)
    assert a != c


def test_bad_mode_and_L():
    with pytest.raises(DomainError):
        sample_configuration(ModelParams(1.0, 0.5), 3, 0, mode="fast")
    with pytest.raises(DomainError):
        sample_configuration(ModelParams(1.0, 0.5), 0, 0)


def test_p_one_opens_every_nearest_neighbour_edge():
    m = ModelParams(1e-3, 1.0, allow_degenerate=True)
    counts = 0
    for i in range(200):
        cfg = sample_configuration(m, 10, trial_seed(1, i))
        assert cfg.nn_open.all()
        counts += len(cfg.long_edges)
    assert counts / 200 == pytest.approx(expected_long_edges(10, 1e-3), abs=0.05)


@pytest.mark.parametrize("mode", ["skip", "naive"])
def test_L1_marginals(mode):
    m = ModelParams(1.3, 0.4)
    n = 100_000
    hits = np.zeros(3)
    for i in range(n):
        cfg = sample_configuration(m, 1, trial_seed(11, i), mode=mode)
        hits += [cfg.is_open(-1, 0), cfg.is_open(0, 1), cfg.is_open(-1, 1)]
    for h, pr in zip(hits, [0.4, 0.4, -math.expm1(-1.3 / 4)]):
        se = math.sqrt(pr * (1 - pr) / n)
        assert abs(h / n - pr) < 4 * se


def test_long_edge_mean_matches_sum():
    m = ModelParams(1.0, 0.9)
    n = 20_000
    counts = np.array([len(sample_configuration(m, 100, trial_seed(2, i)).long_edges)
                       for i in range(n)])
    se = counts.std(ddof=1) / math.sqrt(n)
    assert abs(counts.mean() - expected_long_edges(100, 1.0)) < 3 * se


@given(configurations())
def test_text_round_trip(cfg):
    assert Configuration.from_text(cfg.to_text()) == cfg


def test_file_round_trip(tmp_path):
    cfg = sample_configuration(ModelParams(2.0, 0.8), 25, 9)
    path = tmp_path / "c.txt"
    write_configuration(cfg, path)
    assert read_configuration(path) == cfg
    assert path.read_text().startswith("lrperc-config v1 L=25\nnn ")


@pytest.mark.parametrize("text", [
    "nn 00\n",
    "lrperc-config v1 L=1\nnn 0\n",
    "lrperc-config v1 L=2\nnn 0000\ne 1 0\n",
    "lrperc-config v1 L=2\nnn 0000\ne 0 2\ne -2 0\n",
    "lrperc-config v1 L=2\nnn 0000\ne -1 0\n",
])
def test_malformed_text(text):
    with pytest.raises(DomainError):
        Configuration.from_text(text)


def test_is_open_and_with_edge():
    cfg = Configuration.from_edges(3, [(0, 1), (2, -1)])
    assert cfg.is_open(1, 0) and cfg.is_open(-1, 2)
    assert not cfg.is_open(0, 2) and not cfg.is_open(0, 0) and not cfg.is_open(3, 4)
    cfg2 = cfg.with_edge(0, 2).with_edge(0, 1, False)
    assert cfg2.open_edges() == [(-1, 2), (0, 2)]
    with pytest.raises(DomainError):
        Configuration.from_edges(3, [(0, 4)])


def test_enumeration_L1():
    m = ModelParams(1.0, 0.3)
    rows = enumerate_all_configurations(m, 1)
    assert len(rows) == 8
    assert math.fsum(w for _, w in rows) == pytest.approx(1.0, abs=1e-12)
    marg = [0.3, 0.3, -math.expm1(-0.25)]
    for cfg, w in rows:
        states = [cfg.is_open(-1, 0), cfg.is_open(0, 1), cfg.is_open(-1, 1)]
        assert w == pytest.approx(math.prod(q if s else 1 - q for s, q in zip(states, marg)))
    closed = [w for cfg, w in rows if not cfg.open_edges()]
    assert closed[0] == pytest.approx(0.7 ** 2 * math.exp(-0.25), rel=1e-14)


def test_enumeration_L2_normalised_and_marginal():
    m = ModelParams(2.0, 0.6)
    rows = enumerate_all_configurations(m, 2)
    assert len(rows) == 2 ** 10
    assert math.fsum(w for _, w in rows) == pytest.approx(1.0, abs=1e-12)
    for x, y in all_edges(2):
        got = math.fsum(w for c, w in rows if c.is_open(x, y))
        assert got == pytest.approx(edge_open_probability(x, y, m), abs=1e-12)


def test_enumeration_cap():
    with pytest.raises(TooLarge):
        enumerate_all_configurations(ModelParams(1.0, 0.5), 4)


@pytest.mark.slow
def test_modes_agree_per_distance():
    m = ModelParams(1.0, 0.9)
    n = 20_000
    L = 100
    tallies = {}
    for mode in ("naive", "skip"):
        per = np.zeros((n, 11))
        for i in range(n):
            cfg = sample_configuration(m, L, trial_seed(3, i), mode=mode)
            d = cfg.long_y - cfg.long_x
            per[i] = np.bincount(d[d <= 10], minlength=11)[:11]
            per[i, 1] = cfg.nn_open.sum()
        tallies[mode] = per
    for d in range(1, 11):
        a, b = tallies["naive"][:, d], tallies["skip"][:, d]
        se = math.sqrt(a.var(ddof=1) / n + b.var(ddof=1) / n)
        assert abs(a.mean() - b.mean()) < 4 * se
