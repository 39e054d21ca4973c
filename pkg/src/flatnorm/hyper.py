"""Hypermeasures: elements of the completion of the charges under the flat norm.

A hypermeasure is represented by a norm-Cauchy sequence of charges q_n
together with a certified modulus b_n (nonincreasing, -> 0) such that
||q_m - q_n|| <= b_min(m,n).  The limit t then satisfies ||t - q_n|| <= b_n,
and for a test function f with sup bound s and Lipschitz constant L,
f / (s + L) lies in the unit class, so |t f - q_n f| <= (s + L) b_n.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .blnorm import distance, norm_primal
from .charges import ZERO, BLFunction, Charge, MixedSpaceError, integrate, linear_combine
from .metric import DyadicGrid, MetricSpace, dyadic

DEFAULT_INDEX_CAP = 10**6


class IndexCapError(RuntimeError):
    pass


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def width(self):
        return self.hi - self.lo

    def __contains__(self, x):
        return self.lo <= x <= self.hi


@dataclass
class EvalResult:
    value: float
    error_bound: float
    index_used: int

    def to_dict(self):
        return {"value": self.value, "error_bound": self.error_bound, "index_used": self.index_used}


class Hypermeasure:
    """A certified Cauchy sequence of charges, indexed from n = 1.

    Give either ``term`` (q_n = term(1) + ... + term(n)) or ``approximant``
    (q_n directly).  ``modulus(n)`` must bound ||q_m - q_n|| for all m >= n.
    Approximants are computed lazily and memoised under a lock.
    """

    def __init__(
        self,
        space: MetricSpace,
        modulus: Callable[[int], float],
        *,
        approximant: Callable[[int], Charge] | None = None,
        term: Callable[[int], Charge] | None = None,
        index_cap: int = DEFAULT_INDEX_CAP,
        name: str = "",
    ):
        if (approximant is None) == (term is None):
            raise ValueError("give exactly one of approximant or term")
        self.space = space
        self.modulus = modulus
        self.index_cap = int(index_cap)
        self.name = name
        self._approx_fn = approximant
        self._term_fn = term
        self._lock = threading.Lock()
        self._cache: dict[int, Charge] = {}
        self._prefix: tuple[int, Charge] = (0, Charge(space))

    def term(self, k: int) -> Charge:
        if self._term_fn is not None:
            return self._term_fn(k)
        prev = self.approximant(k - 1) if k > 1 else Charge(self.space)
        return self.approximant(k) - prev

    def approximant(self, n: int) -> Charge:
        if n < 1:
            raise ValueError("approximants are indexed from 1")
        with self._lock:
            if n in self._cache:
                return self._cache[n]
            if self._approx_fn is not None:
                q = self._approx_fn(n)
            else:
                k0, q = self._prefix
                if k0 > n:
                    k0, q = 0, Charge(self.space)
                w = dict(q.weights)
                for k in range(k0 + 1, n + 1):
                    for i, m in self._term_fn(k).weights.items():
                        w[i] = w.get(i, 0) + m
                q = Charge(self.space, w)
                self._prefix = (n, q)
            if len(self._cache) >= 64:
                self._cache.pop(next(iter(self._cache)))
            self._cache[n] = q
            return q

    def partial_integral(self, n: int, f: BLFunction) -> float:
        """q_n f, summed term by term when the sequence is a series."""
        if f is ZERO:
            return 0.0
        if self._term_fn is not None:
            return math.fsum(integrate(self._term_fn(k), f) for k in range(1, n + 1))
        return integrate(self.approximant(n), f)

    def index_for(self, tol: float) -> int:
        """Smallest n <= index_cap with modulus(n) <= tol."""
        return _first_index(self.modulus, tol, self.index_cap)

    def shifted(self, s: int = 1) -> "Hypermeasure":
        """Same limit, sequence q'_n = q_{n+s}."""
        return Hypermeasure(
            self.space,
            lambda n: self.modulus(n + s),
            approximant=lambda n: self.approximant(n + s),
            index_cap=max(1, self.index_cap - s),
            name=f"{self.name}+{s}",
        )

    def check_modulus(self, pairs: Sequence[tuple[int, int]], tol: float = 1e-9):
        """Return the pairs (m, n, dist, bound) where dist exceeds bound + tol."""
        bad = []
        for m, n in pairs:
            d = distance(self.approximant(m), self.approximant(n))
            b = self.modulus(min(m, n))
            if d > b + tol:
                bad.append((m, n, d, b))
        return bad

    def __repr__(self):
        return f"Hypermeasure({self.name or '?'}, space={self.space!r})"


def _first_index(modulus, tol, cap):
    if modulus(cap) > tol:
        raise IndexCapError(f"modulus at index cap {cap} is {modulus(cap):.3g} > {tol:.3g}")
    lo, hi = 1, cap
    while lo < hi:
        mid = (lo + hi) // 2
        if modulus(mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def from_charge(q: Charge) -> Hypermeasure:
    zero = Charge(q.space)
    return Hypermeasure(
        q.space,
        lambda n: 0.0,
        term=lambda k: q if k == 1 else zero,
        name="charge",
    )


def evaluate(t: Hypermeasure, f: BLFunction, eps: float) -> EvalResult:
    """t f to within eps, using the first approximant with (s + L) b_n <= eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    M = f.M
    if M == 0:
        return EvalResult(0.0, 0.0, 1)
    n = t.index_for(eps / M)
    return EvalResult(t.partial_integral(n, f), M * t.modulus(n), n)


def hyper_norm(t: Hypermeasure, eps: float) -> Interval:
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = t.index_for(eps)
    v = norm_primal(t.approximant(n)).value
    b = t.modulus(n)
    return Interval(max(0.0, v - b), v + b)


def hyper_lincomb(coeffs: Sequence[float], ts: Sequence[Hypermeasure]) -> Hypermeasure:
    if len(coeffs) != len(ts) or not ts:
        raise ValueError("need one coefficient per hypermeasure")
    space = ts[0].space
    if any(t.space is not space for t in ts):
        raise MixedSpaceError("hypermeasures live on different metric spaces")
    coeffs = list(coeffs)
    ts = list(ts)

    def modulus(n):
        return math.fsum(abs(c) * t.modulus(n) for c, t in zip(coeffs, ts))

    def term(k):
        return linear_combine(coeffs, [t.term(k) for t in ts])

    return Hypermeasure(space, modulus, term=term, index_cap=min(t.index_cap for t in ts), name="lincomb")


def hyper_distance(t: Hypermeasure, s: Hypermeasure, eps: float) -> Interval:
    if t.space is not s.space:
        raise MixedSpaceError("hypermeasures live on different metric spaces")
    if not eps > 0:
        raise ValueError("eps must be positive")

    def combined(n):
        return t.modulus(n) + s.modulus(n)

    n = _first_index(combined, eps, min(t.index_cap, s.index_cap))
    d = distance(t.approximant(n), s.approximant(n))
    b = combined(n)
    return Interval(max(0.0, d - b), d + b)


def canonical_example(grid: DyadicGrid | None = None, index_cap: int = DEFAULT_INDEX_CAP) -> Hypermeasure:
    """The series sum_k (2^k / k^2) (delta_{2^-k} - delta_{2^-k-1}) on a dyadic grid.

    Term k has flat norm at most (2^k/k^2) 2^-k-1 = 1/(2k^2), so the tail
    after n terms is at most 1/(2n).  The total variation of the n-th
    partial sum grows like 2^n/n^2, so the limit is not a charge.
    """
    if grid is None:
        grid = DyadicGrid(index_cap + 1)
    index_cap = min(index_cap, grid.levels - 1)
    def term(k):
        c = dyadic(k) / (k * k)
        return Charge(grid, {k: c, k + 1: -c})

    return Hypermeasure(grid, lambda n: 1.0 / (2 * n), term=term, index_cap=index_cap, name="canonical")


def coordinate_function(sup_bound: float = 1.0) -> BLFunction:
    """f(x) = x on a line space; the caller declares the sup bound."""
    return BLFunction(fn=lambda space, i: space.line_coord(i), sup_bound=sup_bound, lip_constant=1.0, name="x")


def bump_function(center: float) -> BLFunction:
    """max(0, 1 - |x - center|) on a line space."""

    def f(space, i):
        return max(0.0, 1.0 - abs(float(space.line_coord(i)) - center))

    return BLFunction(fn=f, sup_bound=1.0, lip_constant=1.0, name=f"bump[{center}]")
