import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrperc.config import (Configuration, all_edges, enumerate_all_configurations,
                           sample_configuration, trial_seed)
from lrperc.errors import DomainError
from lrperc.oriented import (exact_reach_probability, has_oriented_span, is_open_oriented_path,
                             origin_reaches_right, oriented_reachable_set)
from lrperc.params import ModelParams


def dfs_reach(config, x):
    """Depth-first search along open edges that only step to larger vertices."""
    out_edges = {}
    for a, b in config.open_edges():
        out_edges.setdefault(a, []).append(b)
    seen = {x}
    stack = [x]
    while stack:
        v = stack.pop()
        for w in out_edges.get(v, []):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return sorted(seen)


def dfs_span(config, width):
    L = config.L
    return any(y >= L - width for x in range(-L, -L + width + 1) for y in dfs_reach(config, x))


@st.composite
def configurations(draw, max_L=10):
    L = draw(st.integers(1, max_L))
    edges = all_edges(L)
    mask = draw(st.lists(st.booleans(), min_size=len(edges), max_size=len(edges)))
    return Configuration.from_edges(L, [e for e, b in zip(edges, mask) if b])


def test_chain_example():
    cfg = Configuration.from_edges(3, [(0, 1), (1, 2)])
    assert oriented_reachable_set(cfg, 0).members == (0, 1, 2)


def test_backtracking_is_excluded():
    cfg = Configuration.from_edges(3, [(0, 2), (1, 2), (1, 3)])
    rs = oriented_reachable_set(cfg, 0)
    assert rs.members == (0, 2)
    assert 3 not in rs and 2 in rs and len(rs) == 2


def test_source_outside_volume():
    with pytest.raises(DomainError):
        oriented_reachable_set(Configuration.fully_closed(2), 3)


@pytest.mark.parametrize("seed", range(10))
def test_matches_dfs_on_random_configurations(seed):
    for i in range(100):
        m = ModelParams(0.5 + seed / 3, 0.3 + 0.06 * seed)
        cfg = sample_configuration(m, 20, trial_seed(seed, i))
        for x in range(-20, 21, 5):
            assert list(oriented_reachable_set(cfg, x).members) == dfs_reach(cfg, x)


@given(configurations(max_L=5))
def test_exhaustive_small_instances(cfg):
    for x in cfg.vertices:
        assert list(oriented_reachable_set(cfg, x).members) == dfs_reach(cfg, x)


@given(configurations(), st.data())
def test_adding_an_edge_never_shrinks(cfg, data):
    L = cfg.L
    a = data.draw(st.integers(-L, L - 1))
    b = data.draw(st.integers(a + 1, L))
    bigger = cfg.with_edge(a, b)
    for x in cfg.vertices:
        assert set(oriented_reachable_set(cfg, x).members) <= set(
            oriented_reachable_set(bigger, x).members)


@given(configurations())
def test_transitivity(cfg):
    reach = {x: set(oriented_reachable_set(cfg, x).members) for x in cfg.vertices}
    for x in cfg.vertices:
        assert x in reach[x]
        for y in reach[x]:
            assert reach[y] <= reach[x]


@given(configurations(), st.data())
def test_span_and_origin_match_definitions(cfg, data):
    w = data.draw(st.integers(1, cfg.L))
    assert has_oriented_span(cfg, w) == dfs_span(cfg, w)
    right = range(cfg.L - w, cfg.L + 1)
    assert origin_reaches_right(cfg, w) == any(
        y in oriented_reachable_set(cfg, 0) for y in right)


@pytest.mark.parametrize("L", [1, 5, 40])
def test_full_and_empty(L):
    full = Configuration.from_edges(L, [(i, i + 1) for i in range(-L, L)])
    empty = Configuration.fully_closed(L)
    for w in range(1, L + 1):
        assert has_oriented_span(full, w) and origin_reaches_right(full, w)
    for w in range(1, L):
        assert not has_oriented_span(empty, w)
    if L > 1:
        assert not origin_reaches_right(empty, L - 1)
    assert origin_reaches_right(empty, L)  # the right window then contains 0
    assert has_oriented_span(empty, L)  # both windows contain 0


def test_isolated_origin():
    cfg = Configuration.fully_open(4)
    for y in range(-4, 5):
        if y:
            cfg = cfg.with_edge(0, y, False)
    assert not origin_reaches_right(cfg, 2)
    assert has_oriented_span(cfg, 2)


def test_width_guards():
    cfg = Configuration.fully_closed(3)
    for w in (0, 4):
        with pytest.raises(DomainError):
            has_oriented_span(cfg, w)
        with pytest.raises(DomainError):
            origin_reaches_right(cfg, w)


def test_is_open_oriented_path():
    cfg = Configuration.from_edges(3, [(0, 2), (2, 3), (1, 2)])
    assert is_open_oriented_path(cfg, [0, 2, 3])
    assert not is_open_oriented_path(cfg, [0, 2, 1])
    assert not is_open_oriented_path(cfg, [])
    assert is_open_oriented_path(cfg, [1])


@pytest.mark.parametrize("sources, targets", [([0], [2]), ([-2, -1], [1, 2]), ([-2], [-1, 2])])
def test_exact_reach_against_enumeration(sources, targets):
    m = ModelParams(1.2, 0.45)
    want = math.fsum(w for c, w in enumerate_all_configurations(m, 2)
                     if any(y in targets for s in sources for y in dfs_reach(c, s)))
    assert exact_reach_probability(m, 2, sources, targets) == pytest.approx(want, abs=1e-13)


def test_exact_reach_guard():
    with pytest.raises(DomainError):
        exact_reach_probability(ModelParams(1.0, 0.5), 8, [0], [8])
