import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatnorm import (Charge, Neighborhood, build_euclidean, distance, flat_norm, integrate,
                      norm_dual_flow, norm_oracle, norm_primal, quasicontinuity_modulus,
                      total_mass, total_variation)
from flatnorm.charges import MixedSpaceError
from flatnorm.flow import transport_with_disposal
from flatnorm.oracle import OracleSizeError, vertex_maximum

from conftest import random_charge, random_space

METHODS = ["primal", "dual", "oracle"]


# closed-form and frozen examples ---------------------------------------------

@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("rho, expected", [(1.0, 1.0), (5.0, 2.0), (0.4, 0.4)])
def test_dipole(pair, method, rho, expected):
    _, q = pair(rho)
    assert flat_norm(q, method).value == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("method", METHODS)
def test_positive_and_empty(method):
    s = build_euclidean([[0.0], [1.0], [7.0]])
    assert flat_norm(Charge(s, {0: 3.0}), method).value == pytest.approx(3.0)
    assert flat_norm(Charge(s, {0: 0.5, 2: 1.5}), method).value == pytest.approx(2.0)
    assert flat_norm(Charge(s), method).value == 0.0


def test_empty_maximizer():
    s = build_euclidean([[0.0]])
    r = norm_primal(Charge(s))
    assert r.value == 0 and r.maximizer.values == {}


def test_frozen_three_point_instance():
    # with phi(1) = t the best choice is phi(0) = t + 0.5, phi(2) = min(1, t + 0.75);
    # the objective rises with slope 0.5 up to t = 0.25 and falls after: value 1.75
    s = build_euclidean([[0.0], [0.5], [1.25]])
    q = Charge(s, {0: 1.0, 1: -2.0, 2: 1.5})
    v = norm_oracle(q)
    assert v == pytest.approx(1.75, abs=1e-12)
    for m in ("primal", "dual"):
        assert flat_norm(q, m).value == pytest.approx(v, abs=1e-9)


@pytest.mark.parametrize("rho, expected", [(1.0, 1.0), (7.0, 2.0), (0.25, 0.25)])
def test_dirac_distance(rho, expected):
    s = build_euclidean([[0.0], [rho]])
    x, y = Charge.dirac(s, 0), Charge.dirac(s, 1)
    assert distance(x, y, check=True) == pytest.approx(expected, abs=1e-9)
    assert distance(x, x) == 0


def test_distance_mixed_spaces():
    a = build_euclidean([[0.0]])
    b = build_euclidean([[0.0]])
    with pytest.raises(MixedSpaceError):
        distance(Charge.dirac(a, 0), Charge.dirac(b, 0))


@pytest.mark.parametrize("method", METHODS)
def test_modulus_examples(pair, method):
    s, q = pair(1.0)
    assert quasicontinuity_modulus(q, Neighborhood({0, 1}, 0.1), method) == pytest.approx(0.2, abs=1e-9)
    assert quasicontinuity_modulus(q, Neighborhood({0}, 0.1), method) == pytest.approx(1.0, abs=1e-9)
    assert quasicontinuity_modulus(q, Neighborhood(set(), 0.1), method) == pytest.approx(1.0, abs=1e-9)


def test_modulus_anchor_off_support():
    # anchor between the atoms constrains phi through the Lipschitz bound
    s = build_euclidean([[0.0], [1.0], [0.5]])
    q = Charge(s, {0: 1.0, 1: -1.0})
    v = quasicontinuity_modulus(q, Neighborhood({2}, 0.01))
    assert v == pytest.approx(1.0, abs=1e-9)
    assert quasicontinuity_modulus(q, Neighborhood({2}, 0.01), "oracle") == pytest.approx(v, abs=1e-9)


def test_modulus_large_delta_is_norm(pair):
    _, q = pair(0.7)
    assert quasicontinuity_modulus(q, Neighborhood({0, 1}, 5.0)) == pytest.approx(0.7)


def test_neighborhood_validation():
    with pytest.raises(ValueError):
        Neighborhood({0}, 0.0)
    s = build_euclidean([[0.0]])
    with pytest.raises(KeyError):
        quasicontinuity_modulus(Charge.dirac(s, 0), Neighborhood({4}, 0.1))


def test_oracle_size_limit():
    with pytest.raises(OracleSizeError):
        vertex_maximum(np.ones(7), np.ones((7, 7)) - np.eye(7))


def test_unknown_method(pair):
    with pytest.raises(ValueError):
        flat_norm(pair(1.0)[1], "simplex")


def test_both_reports_gap(rng):
    s = random_space(rng, 20, "plane")
    r = flat_norm(random_charge(rng, s), "both")
    assert r.method == "primal" and r.certificate_gap < 1e-7


# random cross-checks ---------------------------------------------------------

def test_three_routes_agree(rng):
    for _ in range(60):
        s = random_space(rng, int(rng.integers(1, 7)))
        q = random_charge(rng, s)
        o = norm_oracle(q)
        assert norm_primal(q).value == pytest.approx(o, abs=1e-7)
        assert norm_dual_flow(q).value == pytest.approx(o, abs=1e-7)


def test_modulus_routes_agree(rng):
    for _ in range(40):
        s = random_space(rng, 6)
        q = random_charge(rng, s, m=3)
        A = set(map(int, rng.choice(6, size=int(rng.integers(0, 4)), replace=False)))
        nb = Neighborhood(A, float(rng.uniform(0.01, 1.2)))
        vals = [quasicontinuity_modulus(q, nb, m) for m in METHODS]
        assert max(vals) - min(vals) < 1e-7


def test_flow_potential_certifies(rng):
    for _ in range(20):
        s = random_space(rng, 30)
        w = rng.normal(size=30)
        sol = transport_with_disposal(s.submatrix(range(30)), w)
        phi = sol.potential
        D = s.submatrix(range(30))
        assert np.all(np.abs(phi) <= 1 + 1e-9)
        assert np.all(phi[:, None] - phi[None, :] <= D + 1e-9)
        assert sol.cost == pytest.approx(float(w @ phi), abs=1e-9)


def test_maximizer_feasible_and_attains(rng):
    for _ in range(30):
        s = random_space(rng, 25)
        q = random_charge(rng, s, m=15)
        for m in ("primal", "dual"):
            r = flat_norm(q, m)
            idx = sorted(r.maximizer.values)
            phi = np.array([r.maximizer.values[i] for i in idx])
            D = s.submatrix(idx)
            assert np.all(np.abs(phi) <= 1 + 1e-9)
            assert np.all(phi[:, None] - phi[None, :] <= D + 1e-9)
            assert integrate(q, r.maximizer) == pytest.approx(r.value, abs=1e-7 * (1 + total_variation(q)))


def test_line_fast_path_matches_pairwise(rng):
    from flatnorm.blnorm import _problem, _solve_line, _solve_pairwise
    for _ in range(20):
        s = random_space(rng, 12, "line")
        q = random_charge(rng, s)
        idx, w, caps = _problem(q)
        assert _solve_line(s, idx, w, caps)[0] == pytest.approx(_solve_pairwise(s, idx, w, caps)[0], abs=1e-9)


# properties ------------------------------------------------------------------

coords = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6, unique=True)
weights = st.floats(-10, 10, allow_nan=False)


@st.composite
def charges(draw, nonneg=False):
    xs = draw(coords)
    s = build_euclidean([[x] for x in xs])
    ws = draw(st.lists(st.floats(0, 10) if nonneg else weights, min_size=len(s), max_size=len(s)))
    return Charge(s, dict(enumerate(ws)))


@st.composite
def charge_pairs(draw):
    q = draw(charges())
    ws = draw(st.lists(weights, min_size=len(q.space), max_size=len(q.space)))
    return q, Charge(q.space, dict(enumerate(ws)))


@settings(max_examples=80, deadline=None)
@given(charges(), st.floats(-20, 20, allow_nan=False))
def test_homogeneity(q, a):
    assert norm_primal(a * q).value == pytest.approx(abs(a) * norm_primal(q).value, rel=1e-8, abs=1e-8)


@settings(max_examples=80, deadline=None)
@given(charge_pairs())
def test_triangle(qp):
    q, p = qp
    assert norm_primal(q + p).value <= norm_primal(q).value + norm_primal(p).value + 1e-8


@settings(max_examples=80, deadline=None)
@given(charges())
def test_definite_and_dominated(q):
    v = norm_primal(q).value
    tv = total_variation(q)
    assert v <= tv + 1e-9
    assert (v > 0) == bool(q.weights)


@settings(max_examples=60, deadline=None)
@given(charges(nonneg=True))
def test_nonnegative_is_mass(q):
    assert norm_primal(q).value == pytest.approx(total_mass(q), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(weights, min_size=2, max_size=5))
def test_far_apart_is_variation(ws):
    s = build_euclidean([[3.0 * k] for k in range(len(ws))])
    q = Charge(s, dict(enumerate(ws)))
    assert norm_dual_flow(q).value == pytest.approx(total_variation(q), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(charges(), st.sets(st.integers(0, 5)), st.floats(0.01, 1.5), st.floats(0.01, 1.5))
def test_modulus_monotone(q, A, d1, d2):
    n = len(q.space)
    A = {a for a in A if a < n}
    lo, hi = sorted((d1, d2))
    full = norm_primal(q).value
    m_small_A = quasicontinuity_modulus(q, Neighborhood(set(list(A)[:1]), hi))
    m_big_A = quasicontinuity_modulus(q, Neighborhood(A, hi))
    m_lo = quasicontinuity_modulus(q, Neighborhood(A, lo))
    assert m_big_A <= m_small_A + 1e-9
    assert m_lo <= m_big_A + 1e-9
    assert m_small_A <= full + 1e-9
