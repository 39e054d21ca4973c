import math
import threading

import pytest

from flatnorm import (ZERO, Charge, DyadicGrid, Hypermeasure, IndexCapError, build_euclidean,
                      canonical_example, distance, evaluate, from_charge, hyper_distance,
                      hyper_lincomb, hyper_norm, integrate, separating_function, total_variation)
from flatnorm.hyper import bump_function, coordinate_function

PI2_12 = math.pi ** 2 / 12


@pytest.fixture(scope="module")
def small():
    return canonical_example(DyadicGrid(401), index_cap=400)


@pytest.fixture
def xy():
    s = build_euclidean([[0.0], [0.3]], ids=["x", "y"])
    return s, Charge.dirac(s, 0), Charge.dirac(s, 1)


def partial_sum_oracle(n):
    """x-integral of the n-th approximant by direct summation: sum_k 1/(2k^2)."""
    return math.fsum(1.0 / (2 * k * k) for k in range(1, n + 1))


def test_from_charge_exact(xy):
    s, x, y = xy
    f = separating_function(s, 1)
    r = evaluate(from_charge(x), f, 1e-12)
    assert r.value == pytest.approx(f.at(s, 0)) and r.error_bound == 0
    assert tuple(hyper_norm(from_charge(x), 1e-9)) == (1.0, 1.0)
    assert tuple(hyper_norm(from_charge(Charge(s)), 1e-9)) == (0.0, 0.0)
    assert hyper_norm(from_charge(x - y), 1e-9).lo == pytest.approx(distance(x, y))


def test_zero_function(small):
    r = evaluate(small, ZERO, 1e-9)
    assert r.value == 0 and r.error_bound == 0


def test_evaluate_matches_partial_sums(small):
    f = coordinate_function()
    for eps in (0.1, 0.01, 5e-3):
        r = evaluate(small, f, eps)
        assert r.error_bound <= eps
        assert r.error_bound == pytest.approx(f.M * small.modulus(r.index_used))
        assert r.value == pytest.approx(partial_sum_oracle(r.index_used), abs=1e-12)
        assert abs(r.value - PI2_12) <= r.error_bound


def test_smallest_index(small):
    f = coordinate_function()
    r = evaluate(small, f, 0.01)
    # M = 2, b_n = 1/(2n) <= 0.005 first at n = 100
    assert r.index_used == 100


def test_index_cap(small):
    with pytest.raises(IndexCapError, match="400"):
        evaluate(small, coordinate_function(), 1e-4)


def test_hyper_norm_contains_limit(small):
    iv = hyper_norm(small, 5e-3)
    assert PI2_12 in iv and iv.width <= 1e-2 + 1e-15


def test_variation_diverges(small):
    # neighbouring terms share the atom at 2^-(k+1), so their weights partly cancel
    def tv_oracle(n):
        c = [2.0**k / k**2 for k in range(1, n + 1)]
        return c[0] + sum(abs(b - a) for a, b in zip(c, c[1:])) + c[-1]

    ns = (5, 10, 20, 40)
    tvs = [total_variation(small.approximant(n)) for n in ns]
    for n, tv in zip(ns, tvs):
        assert tv == pytest.approx(tv_oracle(n), rel=1e-12)
    assert all(b > 4 * a for a, b in zip(tvs, tvs[1:]))


def test_modulus_honest(small):
    pairs = [(m, n) for n in (1, 3, 10, 50) for m in (n + 1, 2 * n, 4 * n, 400)]
    assert small.check_modulus(pairs) == []


def test_lincomb(small, xy):
    t = small
    zero = hyper_lincomb([1, -1], [t, t])
    assert hyper_norm(zero, 0.02).lo == 0.0
    assert hyper_norm(zero, 0.02).hi <= 0.04 + 1e-12
    s, x, y = xy
    f = separating_function(s, 0)
    a = evaluate(hyper_lincomb([2.5], [from_charge(y)]), f, 1e-9)
    assert a.value == pytest.approx(integrate(2.5 * y, f))


def test_lincomb_linearity(small):
    z = from_charge(Charge.dirac(small.space, 3))
    f = coordinate_function()
    al, be = 0.7, -1.3
    lhs = evaluate(hyper_lincomb([al, be], [small, z]), f, 1e-2)
    ra = evaluate(small, f, 1e-2)
    rb = evaluate(z, f, 1e-2)
    tol = lhs.error_bound + abs(al) * ra.error_bound + abs(be) * rb.error_bound
    assert abs(lhs.value - (al * ra.value + be * rb.value)) <= tol


def test_evaluation_bound(small):
    f = bump_function(0.5)
    r = evaluate(small, f, 1e-2)
    assert abs(r.value) <= f.M * hyper_norm(small, 1e-2).hi + r.error_bound


def test_distance_self_and_shift(small, xy):
    d = hyper_distance(small, small, 0.01)
    assert d.lo == 0.0 and d.width <= 0.02
    assert 0.0 in hyper_distance(small, small.shifted(1), 0.01)
    s, x, y = xy
    assert hyper_distance(from_charge(x), from_charge(y), 1e-9).lo == pytest.approx(0.3)


def test_concurrent_approximants_consistent():
    t = canonical_example(DyadicGrid(201), index_cap=200)
    out = {}

    def work(n):
        out[n] = t.approximant(n).weights

    ths = [threading.Thread(target=work, args=(n,)) for n in (50, 120, 200, 80, 199)]
    for th in ths:
        th.start()
    for th in ths:
        th.join()
    ref = canonical_example(DyadicGrid(201), index_cap=200)
    for n, w in out.items():
        assert w == ref.approximant(n).weights


def test_bad_construction():
    s = build_euclidean([[0.0]])
    with pytest.raises(ValueError):
        Hypermeasure(s, lambda n: 0.0)
    with pytest.raises(ValueError):
        evaluate(from_charge(Charge(s)), ZERO, 0.0)
