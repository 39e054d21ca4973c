import numpy as np
import pytest

from flatnorm import Charge, build_euclidean, build_from_matrix


def random_space(rng, m, kind=None):
    """Random validated space: Euclidean (1-3 dims) or a shortest-path matrix metric."""
    kind = kind or rng.choice(["line", "plane", "graph"])
    if kind == "line":
        return build_euclidean(rng.uniform(0, 4, size=(m, 1)))
    if kind == "plane":
        return build_euclidean(rng.uniform(0, 3, size=(m, int(rng.integers(2, 4)))))
    # complete graph with random lengths closed under shortest paths
    W = rng.uniform(0.05, 4.0, size=(m, m))
    W = (W + W.T) / 2
    np.fill_diagonal(W, 0.0)
    for k in range(m):
        W = np.minimum(W, W[:, k : k + 1] + W[k : k + 1, :])
    return build_from_matrix(m, W)


def random_charge(rng, space, m=None, scale=3.0, nonneg=False):
    m = len(space) if m is None else m
    idx = rng.choice(len(space), size=m, replace=False)
    w = rng.uniform(0 if nonneg else -scale, scale, size=m)
    return Charge(space, dict(zip(map(int, idx), w)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def pair():
    """Factory: two-point space at distance rho and the charge delta_x - delta_y."""

    def make(rho):
        space = build_euclidean([[0.0], [rho]], ids=["x", "y"])
        return space, Charge(space, {0: 1.0, 1: -1.0})

    return make


# acceptance lines ------------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
