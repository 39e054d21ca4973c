"""Minimum-cost transshipment with a disposal node.

The flat norm of a charge with weights w on points with distances d is the
cheapest way to cancel w: move mass between points at cost min(d, 2) per
unit, or create/destroy it at a disposal node at cost 1 per unit.  With
per-point bounds c_i (|phi_i| <= c_i) the disposal cost at point i is c_i.

Solved by successive shortest paths; path search is a vectorised
Bellman-Ford on the dense residual graph, so negative backward arcs need
no potentials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FlowError(RuntimeError):
    pass


@dataclass
class FlowSolution:
    cost: float
    flow: np.ndarray  # (m+1, m+1), last row/column is the disposal node
    potential: np.ndarray  # optimal phi on the m points
    augmentations: int


def _shortest_paths(R, start_mask, tol):
    V = R.shape[0]
    d = np.where(start_mask, 0.0, np.inf)
    pred = np.full(V, -1)
    cols = np.arange(V)
    for _ in range(V + 1):
        cand = d[:, None] + R
        p = np.argmin(cand, axis=0)
        best = cand[p, cols]
        with np.errstate(invalid="ignore"):
            thresh = np.where(np.isfinite(d), d - tol * (1.0 + np.abs(d)), np.inf)
        imp = best < thresh
        if not imp.any():
            return d, pred
        d[imp] = best[imp]
        pred[imp] = p[imp]
    raise FlowError("negative cycle in residual graph")


def _residual(C, F, tol):
    back = F.T > tol
    R = np.where(back, -C.T, C)
    return R, back


def transport_with_disposal(dist, weights, caps=None, max_augment=None) -> FlowSolution:
    """Solve the disposal transshipment problem for ``weights`` on ``dist``."""
    w = np.asarray(weights, dtype=float)
    m = w.size
    caps = np.ones(m) if caps is None else np.asarray(caps, dtype=float)
    V = m + 1
    C = np.full((V, V), np.inf)
    if m:
        C[:m, :m] = np.minimum(np.asarray(dist, dtype=float), caps[:, None] + caps[None, :])
        C[:m, m] = caps
        C[m, :m] = caps
    np.fill_diagonal(C, np.inf)

    excess = np.append(w, -w.sum())
    scale = max(1.0, float(np.abs(w).sum()))
    tol = 1e-13 * scale
    F = np.zeros((V, V))
    max_augment = max_augment or 20 * V * V + 100
    n_aug = 0
    while (excess > tol).any():
        if n_aug >= max_augment:
            raise FlowError(f"no convergence after {n_aug} augmentations")
        R, back = _residual(C, F, tol)
        d, pred = _shortest_paths(R, excess > tol, 1e-12)
        deficit = excess < -tol
        if not deficit.any():
            # leftover positive excess is rounding; nothing can absorb it
            break
        dd = np.where(deficit, d, np.inf)
        t = int(np.argmin(dd))
        if not np.isfinite(dd[t]):
            raise FlowError("flow infeasible: deficit node unreachable")
        path = []
        v = t
        while pred[v] != -1:
            u = int(pred[v])
            path.append((u, v))
            v = u
            if len(path) > V:
                raise FlowError("predecessor cycle")
        s = v
        delta = min(excess[s], -excess[t])
        for u, v in path:
            if back[u, v]:
                delta = min(delta, F[v, u])
        for u, v in path:
            if back[u, v]:
                F[v, u] -= delta
                if F[v, u] <= tol:
                    F[v, u] = 0.0
            else:
                F[u, v] += delta
        excess[s] -= delta
        excess[t] += delta
        n_aug += 1

    used = F > 0
    cost = float((F[used] * C[used]).sum())
    R, _ = _residual(C, F, tol)
    start = np.zeros(V, dtype=bool)
    start[m] = True
    d, _ = _shortest_paths(R, start, 1e-12)
    phi = np.clip(-d[:m], -caps, caps)
    return FlowSolution(cost=cost, flow=F, potential=phi, augmentations=n_aug)
