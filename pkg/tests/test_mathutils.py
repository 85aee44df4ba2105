import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from lrperc.errors import DomainError, GapTooSmall, LengthMismatch, OverlapError
from lrperc.mathutils import (RealInterval, convex_identity_check, coupling_integral,
                              lattice_sum_bounds_check, nested_interval_inequality_check)


def test_coupling_integral_example():
    assert coupling_integral((0, 1), (2, 3)) == pytest.approx(math.log(4 / 3), abs=1e-15)
    assert coupling_integral((0, 0), (2, 3)) == 0.0


@given(st.floats(0, 10), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.05, 10))
def test_coupling_integral_symmetric_and_quadrature(lo, a, b, d):
    I = (lo, lo + a)
    J = (lo + a + d, lo + a + d + b)
    got = coupling_integral(I, J)
    assert got == pytest.approx(coupling_integral(J, I), rel=1e-12)
    ref, _ = integrate.dblquad(lambda y, x: 1.0 / (y - x) ** 2, I[0], I[1], J[0], J[1],
                               epsabs=1e-12, epsrel=1e-10)
    assert got == pytest.approx(ref, rel=1e-6, abs=1e-10)


@given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0.01, 20), st.floats(0.01, 20))
def test_coupling_integral_decreasing_in_gap(a, b, d, extra):
    near = coupling_integral((0, a), (a + d, a + d + b))
    far = coupling_integral((0, a), (a + d + extra, a + d + extra + b))
    assert far <= near


def test_coupling_integral_overlap():
    with pytest.raises(OverlapError):
        coupling_integral((0, 2), (1, 3))
    with pytest.raises(OverlapError):
        coupling_integral((0, 2), (2, 3))
    with pytest.raises(DomainError):
        RealInterval(2, 1)


def test_lattice_single_points():
    res = lattice_sum_bounds_check((0, 0), (3, 3))
    assert res.total == pytest.approx(1 / 9)
    assert res.passed


def test_lattice_gap_too_small():
    with pytest.raises(GapTooSmall):
        lattice_sum_bounds_check((0, 5), (7, 9))


def test_lattice_bounds_random_pairs():
    rng = random.Random(20)
    for _ in range(2000):
        a = rng.randint(0, 200)
        b = rng.randint(0, 200)
        d = rng.randint(3, 300)
        x0 = rng.randint(-500, 500)
        I, J = (x0, x0 + a), (x0 + a + d, x0 + a + d + b)
        if rng.random() < 0.5:
            I, J = J, I
        assert lattice_sum_bounds_check(I, J).passed


def test_lattice_bounds_tighten_with_distance():
    ratios = []
    for d in (3, 10, 100, 1000):
        r = lattice_sum_bounds_check((0, 20), (20 + d, 40 + d))
        ratios.append(r.upper / r.lower)
    assert ratios == sorted(ratios, reverse=True)
    assert ratios[-1] < 1.01


def test_nested_equal_intervals():
    res = nested_interval_inequality_check((0, 1), (5, 7), (5, 7))
    assert res.preconditions_hold and res.passed
    assert res.lhs == pytest.approx(res.rhs / 4)


def test_nested_precondition_reported():
    res = nested_interval_inequality_check((0, 1), (2, 3), (2, 5))
    assert not res.preconditions_hold and res.passed is None and "dist" in res.reason
    res = nested_interval_inequality_check((0, 1), (20, 30), (21, 29))
    assert not res.preconditions_hold and res.passed is None


def test_nested_random_triples():
    rng = random.Random(3)
    for _ in range(2000):
        a = rng.uniform(0.01, 100)
        lpp = rng.uniform(0.01, 100)
        d = lpp + rng.uniform(0, 200)
        s = rng.uniform(0, lpp)
        t = rng.uniform(s, lpp)
        base = a + d
        res = nested_interval_inequality_check((0, a), (base + s, base + t), (base, base + lpp))
        assert res.preconditions_hold and res.passed


def test_identity_small_cases():
    one = convex_identity_check([0.3], [0.6])
    assert one.lhs == pytest.approx(0.9) and one.residual < 1e-15
    two = convex_identity_check([0.2, 0.7], [0.1, 0.4])
    c = math.sqrt(2) - 1
    assert 2 * c + c * c == pytest.approx(1.0, abs=1e-15)
    assert two.weight_sum == pytest.approx(1.0, abs=1e-15)
    assert two.residual < 1e-14


@pytest.mark.parametrize("N", range(1, 21))
def test_identity_weights_and_inverse_bound(N):
    rng = random.Random(N)
    res = convex_identity_check([rng.random() for _ in range(N)], [rng.random() for _ in range(N)])
    assert res.weight_sum == pytest.approx(1.0, abs=1e-12)
    assert res.inverse_bound_ok
    assert res.residual <= 1e-10 * max(1.0, abs(res.lhs))


def test_identity_length_mismatch():
    with pytest.raises(LengthMismatch):
        convex_identity_check([1, 2], [1])
    with pytest.raises(DomainError):
        convex_identity_check([], [])


@pytest.mark.parametrize("I, J", [((0, 0), (3, 3)), ((0, 4), (9, 15)), ((-7, 2), (5, 30)),
                                  ((40, 60), (-5, 20))])
def test_lattice_total_matches_double_sum(I, J):
    (a0, a1), (b0, b1) = sorted([I, J])
    brute = math.fsum(1.0 / (y - x) ** 2 for x in range(a0, a1 + 1) for y in range(b0, b1 + 1))
    assert lattice_sum_bounds_check(I, J).total == pytest.approx(brute, rel=1e-12)
