"""Finitely supported charges (signed measures) and bounded Lipschitz test functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .metric import MetricSpace

DROP_TOL = 1e-15


class MixedSpaceError(ValueError):
    pass


class Charge:
    """A signed measure with finite support on a metric space.

    ``weights`` maps point index to mass.  Masses are plain floats, or
    mpmath numbers when they come from exact dyadic constructions.
    """

    __slots__ = ("space", "weights")

    def __init__(self, space: MetricSpace, weights: Mapping[int, float] | None = None):
        self.space = space
        w = {}
        for i, m in (weights or {}).items():
            if abs(float(m)) >= DROP_TOL:
                w[int(i)] = m
        self.weights = w

    @classmethod
    def dirac(cls, space, i, mass=1.0):
        return cls(space, {i: mass})

    @classmethod
    def from_ids(cls, space, masses: Mapping):
        """Build from point ids (not indices); repeated ids accumulate."""
        w: dict[int, float] = {}
        for pid, m in masses.items():
            i = space.index(pid)
            w[i] = w.get(i, 0.0) + m
        return cls(space, w)

    @classmethod
    def zero(cls, space):
        return cls(space)

    @property
    def support(self) -> list[int]:
        return sorted(self.weights)

    def __len__(self):
        return len(self.weights)

    def __bool__(self):
        return bool(self.weights)

    def is_nonnegative(self) -> bool:
        return all(m >= 0 for m in self.weights.values())

    def __add__(self, other):
        return linear_combine([1.0, 1.0], [self, other])

    def __sub__(self, other):
        return linear_combine([1.0, -1.0], [self, other])

    def __neg__(self):
        return linear_combine([-1.0], [self])

    def __mul__(self, alpha):
        return linear_combine([alpha], [self])

    __rmul__ = __mul__

    def __repr__(self):
        items = ", ".join(f"{i}: {float(m):.6g}" for i, m in sorted(self.weights.items())[:8])
        more = ", ..." if len(self.weights) > 8 else ""
        return f"Charge({{{items}{more}}})"


def linear_combine(coeffs: Sequence[float], charges: Sequence[Charge]) -> Charge:
    if len(coeffs) != len(charges):
        raise ValueError("need one coefficient per charge")
    if not charges:
        raise ValueError("need at least one charge")
    space = charges[0].space
    out: dict[int, float] = {}
    for c, q in zip(coeffs, charges):
        if q.space is not space:
            raise MixedSpaceError("charges live on different metric spaces")
        if c == 0:
            continue
        for i, m in q.weights.items():
            out[i] = out.get(i, 0) + c * m
    return Charge(space, out)


def total_variation(q: Charge) -> float:
    return math.fsum(float(abs(m)) for m in q.weights.values())


def total_mass(q: Charge) -> float:
    return math.fsum(float(m) for m in q.weights.values())


def restrict_outside(q: Charge, K) -> float:
    """Mass carried by ``q`` outside the index set ``K``; ``q`` must be a measure."""
    if not q.is_nonnegative():
        raise ValueError("restrict_outside needs a nonnegative charge")
    K = set(K)
    return math.fsum(float(m) for i, m in q.weights.items() if i not in K)


@dataclass
class BLFunction:
    """A bounded Lipschitz function with declared constants.

    Either ``values`` (point index -> value) or ``fn(space, index)`` gives
    the function.  ``sup_bound`` and ``lip_constant`` are declarations;
    :meth:`verify` spot-checks them on the points actually used.
    """

    values: Mapping[int, float] | None = None
    fn: Callable[[MetricSpace, int], float] | None = None
    sup_bound: float = 1.0
    lip_constant: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if (self.values is None) == (self.fn is None):
            raise ValueError("give exactly one of values or fn")
        if self.sup_bound < 0 or self.lip_constant < 0:
            raise ValueError("constants must be nonnegative")

    def at(self, space: MetricSpace, i: int):
        if self.values is not None:
            try:
                return self.values[i]
            except KeyError:
                raise KeyError(f"{self.name or 'function'} undefined at point index {i}") from None
        return self.fn(space, i)

    @property
    def in_phi(self) -> bool:
        return self.sup_bound <= 1.0 and self.lip_constant <= 1.0

    @property
    def M(self) -> float:
        """sup bound plus Lipschitz constant; f / M lies in the unit class."""
        return self.sup_bound + self.lip_constant

    def verify(self, space: MetricSpace, indices=None, tol: float = 1e-9):
        """Raise ValueError if the declared constants fail on ``indices``."""
        if indices is None:
            indices = sorted(self.values) if self.values is not None else range(len(space))
        idx = list(indices)
        vals = [float(self.at(space, i)) for i in idx]
        for i, v in zip(idx, vals):
            if abs(v) > self.sup_bound + tol:
                raise ValueError(f"|f({i})| = {abs(v)} exceeds sup_bound {self.sup_bound}")
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                d = space.dist(idx[a], idx[b])
                if abs(vals[a] - vals[b]) > self.lip_constant * d + tol:
                    raise ValueError(
                        f"|f({idx[a]}) - f({idx[b]})| = {abs(vals[a] - vals[b])} exceeds "
                        f"{self.lip_constant} * {d}"
                    )


ZERO = BLFunction(fn=lambda space, i: 0.0, sup_bound=0.0, lip_constant=0.0, name="zero")


def integrate(q: Charge, f: BLFunction) -> float:
    """Sum of w_i f(x_i) over the support of ``q``."""
    if f is ZERO:
        return 0.0
    return math.fsum(float(m * f.at(q.space, i)) for i, m in q.weights.items())
