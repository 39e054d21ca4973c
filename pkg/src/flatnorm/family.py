"""Precompactness diagnostics for families of charges and hypermeasures.

A set of hypermeasures is precompact iff it is bounded and
equiquasicontinuous: for every eps some finite-anchor neighbourhood of zero
U = {f : |f(a)| < delta, a in A} keeps |t(phi)| < eps for every member t and
every unit-class phi in U.  Everything here is computed on the first
``horizon`` members only, and verdicts say so.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .blnorm import Neighborhood, distance, norm_primal, quasicontinuity_modulus
from .charges import Charge, restrict_outside
from .hyper import Hypermeasure, canonical_example, from_charge, hyper_distance, hyper_norm
from .metric import DyadicGrid, MetricSpace, build_euclidean

PRECOMPACT = "precompact-at-horizon"
NOT_PRECOMPACT = "not-precompact"
INCONCLUSIVE = "inconclusive"


class Family:
    """Members indexed 1..declared_horizon, produced lazily and memoised."""

    def __init__(self, space: MetricSpace, member: Callable[[int], Charge | Hypermeasure],
                 declared_horizon: int, name: str = "", params: dict | None = None):
        self.space = space
        self._member_fn = member
        self.declared_horizon = int(declared_horizon)
        self.name = name
        self.params = dict(params or {})
        self._cache: dict[int, Charge | Hypermeasure] = {}
        self._lock = threading.Lock()

    def member(self, n: int):
        if not 1 <= n <= self.declared_horizon:
            raise IndexError(f"member {n} outside 1..{self.declared_horizon}")
        with self._lock:
            if n not in self._cache:
                m = self._member_fn(n)
                if m.space is not self.space:
                    raise ValueError(f"member {n} lives on a different space")
                self._cache[n] = m
            return self._cache[n]

    def members(self, horizon: int | None = None) -> list:
        return [self.member(n) for n in range(1, self._horizon(horizon) + 1)]

    def _horizon(self, horizon):
        if horizon is None:
            return self.declared_horizon
        if horizon > self.declared_horizon:
            raise ValueError(f"horizon {horizon} exceeds declared horizon {self.declared_horizon}")
        return int(horizon)

    def __repr__(self):
        return f"Family({self.name or '?'}, N={self.declared_horizon})"


@dataclass
class NeighborhoodBasis:
    """Nested neighbourhoods U_n: anchors = first n dense points, threshold delta_n."""

    dense_sequence: list
    thresholds: list

    def __post_init__(self):
        t = self.thresholds
        if any(x <= 0 for x in t) or any(b >= a for a, b in zip(t, t[1:])):
            raise ValueError("thresholds must be positive and strictly decreasing")

    def neighborhood(self, n: int) -> Neighborhood:
        return Neighborhood(frozenset(self.dense_sequence[:n]), self.thresholds[n - 1])

    def covers(self, depth: int) -> bool:
        """Whether U_depth already pins every dense point (the finite form of the separation property)."""
        return depth >= len(self.dense_sequence)


def _as_charge(member, eta):
    """A charge within eta of the member, and the certified distance bound."""
    if isinstance(member, Charge):
        return member, 0.0
    n = member.index_for(eta)
    return member.approximant(n), member.modulus(n)


def default_basis(fam: Family, depth: int, horizon: int | None = None, eta: float = 1e-3,
                  delta0: float = 1.0) -> NeighborhoodBasis:
    """Union of member supports in first-seen order; thresholds delta0 * 2^-n."""
    seen: dict[int, None] = {}
    for m in fam.members(horizon):
        q, _ = _as_charge(m, eta)
        for i in sorted(q.weights):
            seen.setdefault(i, None)
    return NeighborhoodBasis(list(seen), [delta0 * 2.0 ** -n for n in range(1, depth + 1)])


def _norm_upper(member, eta):
    if isinstance(member, Charge):
        return norm_primal(member).value
    return hyper_norm(member, eta).hi


def norm_profile(fam: Family, horizon: int | None = None, eta: float = 1e-3) -> list[float]:
    return [_norm_upper(m, eta) for m in fam.members(horizon)]


def boundedness(fam: Family, horizon: int | None = None, eta: float = 1e-3) -> float:
    return max(norm_profile(fam, horizon, eta), default=0.0)


@dataclass
class Tightness:
    K: frozenset
    margin: float
    radius: float
    center: int | None


def tightness_profile(fam: Family, eps: float, horizon: int | None = None) -> Tightness:
    """Smallest ball (centred on a support point) leaving less than eps of every member outside.

    K is the part of the inspected supports inside that ball; margin is
    eps minus the worst outside mass.  Certified for the inspected members only.
    """
    members = fam.members(horizon)
    for n, q in enumerate(members, 1):
        if not isinstance(q, Charge) or not q.is_nonnegative():
            raise ValueError(f"member {n} is not a nonnegative charge")
    pts = sorted({i for q in members for i in q.weights})
    if not pts:
        return Tightness(frozenset(), eps, 0.0, None)
    W = np.array([[float(q.weights.get(i, 0.0)) for i in pts] for q in members])
    D = fam.space.submatrix(pts)
    total = W.sum(axis=1)
    best = (math.inf, None, None)
    for c in range(len(pts)):
        order = np.argsort(D[c], kind="stable")
        inside = np.cumsum(W[:, order], axis=1)
        worst_out = (total[:, None] - inside).max(axis=0)
        # ball radius D[c, order[j]] captures order[:j+1]; ties must be included together
        for j in range(len(pts)):
            r = D[c, order[j]]
            if j + 1 < len(pts) and D[c, order[j + 1]] == r:
                continue
            if worst_out[j] < eps:
                if r < best[0]:
                    best = (r, c, order[: j + 1])
                break
    r, c, sel = best
    K = frozenset(pts[k] for k in sel)
    out = max(restrict_outside(q, K) for q in members)
    return Tightness(K, eps - out, float(r), pts[c])


def tightness_trend(fam: Family, eps: float, horizon: int | None = None) -> list[tuple[float, float, int]]:
    """(eps, radius, h) at h = H/4, H/2, H."""
    H = fam._horizon(horizon)
    hs = sorted({max(1, H // 4), max(1, (H + 1) // 2), H})
    return [(eps, tightness_profile(fam, eps, h).radius, h) for h in hs]


def radius_growth(trend) -> float:
    """Radius at the full horizon over radius at half of it."""
    if len(trend) < 2:
        return 1.0
    r_half, r_full = trend[-2][1], trend[-1][1]
    if r_half == 0:
        return 1.0 if r_full == 0 else math.inf
    return r_full / r_half


def epsilon_net(space: MetricSpace, points, r: float) -> list[int]:
    """Greedy net: every point ends up strictly closer than r to a chosen one."""
    net: list[int] = []
    for p in points:
        if all(space.dist(p, a) >= r for a in net):
            net.append(p)
    return net


def net_neighborhood(space: MetricSpace, K, eps: float, C: float) -> Neighborhood:
    """Anchors: an (eps/2C)-net of K; threshold eps/2C.

    For phi in the unit class with |phi(a)| <= eps/2C on the net,
    |phi(x)| < eps/C on K, so every measure of mass <= C carried by K
    integrates phi to less than eps.
    """
    r = eps / (2.0 * C)
    return Neighborhood(frozenset(epsilon_net(space, _canonical_order(space, K), r)), r)


def _canonical_order(space, K):
    # by coordinates when known, so the net does not depend on how points were indexed
    K = sorted(K)
    coords = [space.point(i).coords for i in K]
    if all(c is not None for c in coords):
        return [i for _, i in sorted(zip((tuple(float(x) for x in c) for c in coords), K))]
    return K


def _member_modulus(member, nbhd, eta):
    q, err = _as_charge(member, eta)
    return quasicontinuity_modulus(q, nbhd) + err


def sup_modulus(members, nbhd: Neighborhood, eta: float = 1e-3, workers: int = 1) -> float:
    if not members:
        return 0.0
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(lambda m: _member_modulus(m, nbhd, eta), members))
    else:
        vals = [_member_modulus(m, nbhd, eta) for m in members]
    return max(vals)


def equi_modulus_profile(fam: Family, basis: NeighborhoodBasis, depth: int, horizon: int | None = None,
                         eta: float = 1e-3, workers: int = 1) -> list[tuple[int, float]]:
    """[(n, sup over members of the modulus at U_n)] for n = 1..depth."""
    if depth > len(basis.thresholds):
        raise ValueError(f"depth {depth} exceeds the {len(basis.thresholds)} thresholds of the basis")
    members = fam.members(horizon)
    return [(n, sup_modulus(members, basis.neighborhood(n), eta, workers)) for n in range(1, depth + 1)]


def _pairwise(members, eta):
    out = np.zeros((len(members), len(members)))
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            x, y = members[a], members[b]
            if isinstance(x, Charge) and isinstance(y, Charge):
                d = distance(x, y)
            else:
                x = from_charge(x) if isinstance(x, Charge) else x
                y = from_charge(y) if isinstance(y, Charge) else y
                d = hyper_distance(x, y, eta).lo
            out[a, b] = out[b, a] = d
    return out


def min_pairwise(D, k=None) -> float:
    k = D.shape[0] if k is None else k
    if k < 2:
        return math.inf
    sub = D[:k, :k] + np.diag(np.full(k, np.inf))
    return float(sub.min())


@dataclass
class FamilyReport:
    family: str
    horizon: int
    depth: int
    eps: float
    sup_norm: float
    norm_growth: float
    equi_profile: list
    verdict: str
    witness: dict | None = None
    min_pairwise_distance: float | None = None
    tightness_profile: list = field(default_factory=list)
    radius_growth: float | None = None
    net_check: dict | None = None

    def to_dict(self):
        d = asdict(self)
        d["kind"] = "family"
        d["equi_profile"] = [[int(n), float(v)] for n, v in self.equi_profile]
        d["tightness_profile"] = [[float(e), float(r), int(h)] for e, r, h in self.tightness_profile]
        for k in ("min_pairwise_distance", "norm_growth", "radius_growth"):
            if d[k] is not None and not math.isfinite(d[k]):
                d[k] = None
        if d["witness"] and not math.isfinite(d["witness"].get("growth", 0.0)):
            d["witness"]["growth"] = None
        return d


def net_modulus(fam: Family, eps: float, horizon: int | None = None, C: float | None = None,
                   workers: int = 1) -> dict:
    """Sup-modulus of the inspected measures at the eps/2C-net neighbourhood for eps."""
    members = fam.members(horizon)
    C = boundedness(fam, horizon) if C is None else C
    K = sorted({i for q in members for i in q.weights})
    nb = net_neighborhood(fam.space, K, eps, C)
    return {
        "eps": eps,
        "C": C,
        "delta": nb.threshold,
        "net_size": len(nb.anchor_points),
        "modulus": sup_modulus(members, nb, workers=workers),
    }


def precompactness_verdict(fam: Family, eps: float, depth: int, horizon: int | None = None,
                           basis: NeighborhoodBasis | None = None, growth_limit: float = 1.5,
                           workers: int = 1) -> FamilyReport:
    """Horizon-qualified verdict: bounded and equiquasicontinuous, or a witness against.

    not-precompact needs a witness on the inspected members: norms growing
    by ``growth_limit`` or more between half and full horizon, or members
    pairwise at least eps apart with that separation not shrinking as the
    horizon doubles.  precompact-at-horizon needs stable norms and an
    equiquasicontinuity profile below eps by ``depth``.
    """
    H = fam._horizon(horizon)
    eta = eps / 10.0
    members = fam.members(H)
    norms = [_norm_upper(m, eta) for m in members]
    sup_norm = max(norms, default=0.0)
    half = max(norms[: (H + 1) // 2], default=0.0)
    if sup_norm == 0:
        growth = 1.0
    elif half == 0:
        growth = math.inf
    else:
        growth = sup_norm / half

    basis = basis or default_basis(fam, depth, H, eta)
    profile = equi_modulus_profile(fam, basis, depth, H, eta, workers)

    D = _pairwise(members, eta)
    c_full = min_pairwise(D)
    c_half = min_pairwise(D, (H + 1) // 2)

    trend, rgrowth, l2 = [], None, None
    if members and all(isinstance(m, Charge) and m.is_nonnegative() for m in members):
        trend = tightness_trend(fam, eps, H)
        rgrowth = radius_growth(trend)
        l2 = net_modulus(fam, eps, H, C=sup_norm if sup_norm > 0 else 1.0, workers=workers)

    witness = None
    if growth >= growth_limit:
        verdict = NOT_PRECOMPACT
        witness = {"kind": "unbounded-norm-trend", "growth": growth, "sup_norm": sup_norm}
    elif H >= 4 and c_full >= eps and c_full >= c_half - 1e-9:
        verdict = NOT_PRECOMPACT
        witness = {"kind": "separated", "min_pairwise_distance": c_full}
    elif not profile or profile[-1][1] < eps:
        verdict = PRECOMPACT
    else:
        verdict = INCONCLUSIVE

    return FamilyReport(
        family=fam.name,
        horizon=H,
        depth=depth,
        eps=eps,
        sup_norm=sup_norm,
        norm_growth=growth,
        equi_profile=profile,
        verdict=verdict,
        witness=witness,
        min_pairwise_distance=c_full,
        tightness_profile=trend,
        radius_growth=rgrowth,
        net_check=l2,
    )


# generators -----------------------------------------------------------------


def escaping_diracs(spacing: float = 2.0, horizon: int = 30) -> Family:
    """Member n is the unit mass at spacing * n on the line."""
    if spacing <= 0 or horizon < 1:
        raise ValueError("need spacing > 0 and horizon >= 1")
    space = build_euclidean([[spacing * n] for n in range(1, horizon + 1)], ids=list(range(1, horizon + 1)))
    return Family(space, lambda n: Charge.dirac(space, n - 1), horizon, "escaping_diracs",
                  {"spacing": spacing, "horizon": horizon})


def tight_grid_family(horizon: int = 20, grid_points: int = 21, seed: int = 0) -> Family:
    """Discretised bump probability measures on a fixed grid of [0, 1].

    Each member puts weights (1, 2, 3, 2, 1)/9 on five consecutive grid
    points around a centre drawn with ``seed``; all supports sit in the grid.
    """
    if grid_points < 5 or horizon < 1:
        raise ValueError("need at least 5 grid points and horizon >= 1")
    xs = np.linspace(0.0, 1.0, grid_points)
    space = build_euclidean(xs[:, None])
    rng = np.random.default_rng(seed)
    centers = rng.integers(2, grid_points - 2, size=horizon)
    shape = np.array([1, 2, 3, 2, 1]) / 9.0

    def member(n):
        c = int(centers[n - 1])
        return Charge(space, {c + k: shape[k + 2] for k in range(-2, 3)})

    return Family(space, member, horizon, "tight_grid",
                  {"horizon": horizon, "grid_points": grid_points, "seed": seed})


def cauchy_prefix_family(t: Hypermeasure | None = None, horizon: int = 16) -> Family:
    """Member n is the n-th approximant of t (default: the canonical example)."""
    if t is None:
        t = canonical_example(DyadicGrid(horizon + 1), index_cap=horizon)
    return Family(t.space, t.approximant, horizon, "cauchy_prefix", {"horizon": horizon})


def oscillating_signs(rho: float = 1.0, horizon: int = 20) -> Family:
    """Member n is (-1)^n (delta_x - delta_y) with dist(x, y) = rho."""
    space = build_euclidean([[0.0], [rho]], ids=["x", "y"])
    plus = Charge(space, {0: 1.0, 1: -1.0})
    minus = -plus
    return Family(space, lambda n: plus if n % 2 == 0 else minus, horizon, "oscillating_signs",
                  {"rho": rho, "horizon": horizon})


GENERATORS = {
    "escaping_diracs": escaping_diracs,
    "tight_grid": tight_grid_family,
    "cauchy_prefix": cauchy_prefix_family,
    "oscillating_signs": oscillating_signs,
}


def generators():
    """Named family constructors."""
    return dict(GENERATORS)


def make_family(name: str, **params) -> Family:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; known: {sorted(GENERATORS)}") from None
    return gen(**params)
