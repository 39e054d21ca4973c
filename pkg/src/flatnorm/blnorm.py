"""The bounded-Lipschitz (flat) norm of a charge.

    ||q|| = sup { q(phi) : |phi| <= 1, |phi(x) - phi(y)| <= dist(x, y) }

Three independent routes:

* ``norm_primal`` -- the LP above over the values of phi on the support
  (HiGHS).  On line spaces only neighbouring points need a Lipschitz
  constraint, and the objective is rewritten in terms of slopes so huge
  weights on tiny gaps stay well conditioned.
* ``norm_dual_flow`` -- the equivalent min-cost transport with disposal.
* ``norm_oracle`` -- vertex enumeration, for supports of at most 6 points.

``quasicontinuity_modulus`` adds the anchor constraints |phi(a)| <= delta
of a finite-anchor neighbourhood of zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import OptimizeWarning, linprog

from .charges import BLFunction, Charge, MixedSpaceError, total_variation
from .flow import transport_with_disposal
from .oracle import vertex_maximum

FEAS_TOL = 1e-9
# smallest matrix coefficient passed to HiGHS; shorter gaps are zeroed in the
# line constraints and the solution is rescaled to feasibility afterwards
TINY_GAP = 1e-12


class SolverError(RuntimeError):
    pass


@dataclass
class NormResult:
    value: float
    maximizer: BLFunction
    method: str
    certificate_gap: float = 0.0

    def to_dict(self, space=None):
        vals = self.maximizer.values or {}
        if space is not None:
            phi = {str(space.point(i).id): float(v) + 0.0 for i, v in sorted(vals.items())}
        else:
            phi = {str(i): float(v) + 0.0 for i, v in sorted(vals.items())}
        return {
            "value": self.value,
            "method": self.method,
            "certificate_gap": self.certificate_gap,
            "maximizer": phi,
        }


@dataclass(frozen=True)
class Neighborhood:
    """{f : |f(a)| < threshold for every anchor a}, a neighbourhood of zero in R^X."""

    anchor_points: frozenset
    threshold: float

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("neighbourhood threshold must be positive")
        object.__setattr__(self, "anchor_points", frozenset(int(a) for a in self.anchor_points))


def _problem(q: Charge, anchors=(), delta=None):
    """Variable set (support plus anchors), native weights, and per-point bounds."""
    anchors = set(anchors)
    idx = sorted(set(q.weights) | anchors)
    w = [q.weights.get(i, 0.0) for i in idx]
    cap = 1.0 if delta is None else min(1.0, float(delta))
    caps = np.array([cap if i in anchors else 1.0 for i in idx])
    return idx, w, caps


def _dual_objective(res, b_ub, b_eq, lb, ub):
    val = float(np.dot(lb, res.lower.marginals) + np.dot(ub, res.upper.marginals))
    if b_ub is not None:
        val += float(np.dot(b_ub, res.ineqlin.marginals))
    if b_eq is not None:
        val += float(np.dot(b_eq, res.eqlin.marginals))
    return val


def _run_highs(c, A_ub, b_ub, A_eq, b_eq, lb, ub):
    # unit-scale costs so tiny weights are not lost under the dual tolerance
    scale = float(np.max(np.abs(c))) if len(c) else 1.0
    scale = scale if scale > 0 else 1.0
    with warnings.catch_warnings():
        # small_matrix_value is a plain HiGHS option that scipy passes through
        warnings.simplefilter("ignore", OptimizeWarning)
        res = _linprog(c / scale, A_ub, b_ub, A_eq, b_eq, lb, ub)
    if res.status != 0:
        raise SolverError(f"LP solver failed (status {res.status}): {res.message}")
    gap = scale * abs(res.fun - _dual_objective(res, b_ub, b_eq, lb, ub))
    return res, gap


def _linprog(c, A_ub, b_ub, A_eq, b_eq, lb, ub):
    return linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lb, ub]),
        method="highs",
        options={
            "primal_feasibility_tolerance": FEAS_TOL,
            "dual_feasibility_tolerance": FEAS_TOL,
            "small_matrix_value": TINY_GAP,
        },
    )


def _solve_pairwise(space, idx, w, caps):
    m = len(idx)
    wf = np.array([float(x) for x in w])
    D = space.submatrix(idx)
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for i in range(m):
        for j in range(m):
            # pairs farther apart than cap_i + cap_j cannot bind
            if i != j and D[i, j] < caps[i] + caps[j]:
                rows += [r, r]
                cols += [i, j]
                vals += [1.0, -1.0]
                rhs.append(D[i, j])
                r += 1
    A_ub = sp.csr_matrix((vals, (rows, cols)), shape=(r, m)) if r else None
    b_ub = np.array(rhs) if r else None
    res, gap = _run_highs(-wf, A_ub, b_ub, None, None, -caps, caps)
    # objective at the box-clipped point: bounds may be off by the solver tolerance
    phi = np.clip(res.x, -caps, caps)
    return float(wf @ phi), phi, gap


def _solve_line(space, idx, w, caps):
    """Line metric: phi_{j+1} = phi_j + g_j s_j with slopes |s_j| <= 1.

    sum_i w_i phi_i = M phi_0 + sum_j T_j g_j s_j, where M is the total mass
    and T_j the mass strictly right of gap j.  The products T_j g_j are
    formed in the weights' own arithmetic before rounding to float.
    """
    m = len(idx)
    order = sorted(range(m), key=lambda k: space.line_coord(idx[k]))
    x = [space.line_coord(idx[k]) for k in order]
    ws = [w[k] for k in order]
    cs = caps[order]
    tails = [0] * m
    acc = 0
    for k in range(m - 1, 0, -1):
        acc = acc + ws[k]
        tails[k - 1] = acc
    mass = float(acc + ws[0])
    gaps = [x[k + 1] - x[k] for k in range(m - 1)]
    coef = [float(tails[k] * gaps[k]) for k in range(m - 1)]
    gf = np.array([float(g) for g in gaps])
    gf[gf < TINY_GAP] = 0.0

    # variables: phi_0..phi_{m-1}, s_0..s_{m-2}
    n = 2 * m - 1
    c = np.zeros(n)
    c[0] = -mass
    c[m:] = -np.array(coef)
    k = np.arange(m - 1)
    rows = np.concatenate([k, k, k])
    cols = np.concatenate([k + 1, k, m + k])
    vals = np.concatenate([np.ones(m - 1), -np.ones(m - 1), -gf])
    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(m - 1, n)) if m > 1 else None
    b_eq = np.zeros(m - 1) if m > 1 else None
    lb = np.concatenate([-cs, -np.ones(m - 1)])
    ub = np.concatenate([cs, np.ones(m - 1)])
    res, gap = _run_highs(c, None, None, A_eq, b_eq, lb, ub)
    phi0, slopes, phi_sorted = _feasible_chain(res.x[0], res.x[m:], np.array([float(g) for g in gaps]), cs)
    val = mass * phi0 + float(np.dot(coef, slopes)) if m > 1 else mass * phi0
    phi = np.empty(m)
    phi[order] = phi_sorted
    return float(val), phi, gap


def _feasible_chain(phi0, s, g, caps):
    """Scale the solver's chain point into the feasible set.

    Zeroed tiny gaps and the solver tolerance can leave phi, rebuilt with
    the true gaps, slightly outside its box.  The point (phi0, s) enters
    every constraint homogeneously, so dividing it by the worst overshoot
    ratio restores feasibility and scales the objective by the same factor.
    """
    s = np.asarray(s, dtype=float)
    phi = phi0 + np.concatenate([[0.0], np.cumsum(g * s)])
    lam = max(1.0, float(np.max(np.abs(phi) / caps)), float(np.max(np.abs(s), initial=0.0)))
    return phi0 / lam, s / lam, phi / lam


def _primal(space, idx, w, caps):
    if not idx or all(x == 0 for x in w):
        return 0.0, np.zeros(len(idx)), 0.0
    if space.is_line:
        return _solve_line(space, idx, w, caps)
    return _solve_pairwise(space, idx, w, caps)


def _maximizer(idx, phi):
    return BLFunction(values=dict(zip(idx, map(float, phi))), sup_bound=1.0, lip_constant=1.0, name="maximizer")


def norm_primal(q: Charge) -> NormResult:
    idx, w, caps = _problem(q)
    val, phi, gap = _primal(q.space, idx, w, caps)
    return NormResult(max(val, 0.0), _maximizer(idx, phi), "primal", gap)


def norm_dual_flow(q: Charge) -> NormResult:
    idx, w, caps = _problem(q)
    if not idx:
        return NormResult(0.0, _maximizer([], []), "dual", 0.0)
    wf = np.array([float(x) for x in w])
    sol = transport_with_disposal(q.space.submatrix(idx), wf, caps)
    gap = abs(sol.cost - float(wf @ sol.potential))
    return NormResult(sol.cost, _maximizer(idx, sol.potential), "dual", gap)


def norm_oracle(q: Charge) -> float:
    idx, w, caps = _problem(q)
    val, _ = vertex_maximum([float(x) for x in w], q.space.submatrix(idx), caps)
    return max(val, 0.0)


def flat_norm(q: Charge, method: str = "primal") -> NormResult:
    """Norm by the named route; ``"both"`` runs primal and dual and reports their gap."""
    if method == "primal":
        return norm_primal(q)
    if method == "dual":
        return norm_dual_flow(q)
    if method == "oracle":
        v = norm_oracle(q)
        return NormResult(v, _maximizer([], []), "oracle", 0.0)
    if method == "both":
        p = norm_primal(q)
        d = norm_dual_flow(q)
        p.certificate_gap = abs(p.value - d.value)
        return p
    raise ValueError(f"unknown method {method!r}")


def distance(q1: Charge, q2: Charge, check: bool = False) -> float:
    """Flat distance ||q1 - q2||; ``check`` cross-validates against the flow route."""
    if q1.space is not q2.space:
        raise MixedSpaceError("charges live on different metric spaces")
    diff = q1 - q2
    val = norm_primal(diff).value
    if check:
        dual = norm_dual_flow(diff).value
        tol = 1e-7 * (1.0 + total_variation(diff))
        if abs(val - dual) > tol:
            raise SolverError(f"primal {val} and dual {dual} disagree")
    return val


def quasicontinuity_modulus(q: Charge, nbhd: Neighborhood, method: str = "primal") -> float:
    """sup of |q(phi)| over unit-class phi with |phi(a)| <= delta on the anchors."""
    n = len(q.space)
    for a in nbhd.anchor_points:
        if not 0 <= a < n:
            raise KeyError(f"anchor index {a} is not in the space")
    idx, w, caps = _problem(q, nbhd.anchor_points, nbhd.threshold)
    if not q.weights:
        return 0.0
    if method == "primal":
        val = _primal(q.space, idx, w, caps)[0]
    elif method == "dual":
        val = transport_with_disposal(q.space.submatrix(idx), [float(x) for x in w], caps).cost
    elif method == "oracle":
        val = vertex_maximum([float(x) for x in w], q.space.submatrix(idx), caps)[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    return max(float(val), 0.0)

