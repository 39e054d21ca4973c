"""Brute-force vertex enumeration for the flat-norm LP on tiny supports.

Every vertex of {|phi_i| <= c_i, |phi_i - phi_j| <= d_ij} is the solution of
m linearly independent active constraints.  Each constraint "line" is either
phi_i = +-c_i or phi_i - phi_j = +-d_ij; we enumerate all m-subsets of lines
and all sign patterns, keep feasible solutions and take the best objective.
Exponential, meant only as a test oracle.
"""

from __future__ import annotations

import itertools

import numpy as np

MAX_VARIABLES = 6


class OracleSizeError(ValueError):
    pass


def vertex_maximum(weights, dist, caps=None, tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Max of w.phi over the bounded-Lipschitz polytope, by vertex enumeration."""
    w = np.asarray(weights, dtype=float)
    m = w.size
    if m == 0:
        return 0.0, np.zeros(0)
    if m > MAX_VARIABLES:
        raise OracleSizeError(f"oracle limited to {MAX_VARIABLES} points, got {m}")
    d = np.asarray(dist, dtype=float)
    c = np.ones(m) if caps is None else np.asarray(caps, dtype=float)

    rows, rhs = [], []
    for i in range(m):
        r = np.zeros(m)
        r[i] = 1.0
        rows.append(r)
        rhs.append(c[i])
    pairs = list(itertools.combinations(range(m), 2))
    for i, j in pairs:
        r = np.zeros(m)
        r[i], r[j] = 1.0, -1.0
        rows.append(r)
        rhs.append(d[i, j])
    L = np.array(rows)
    b = np.array(rhs)
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=m)))  # (2^m, m)

    best_val, best_x = -np.inf, None
    subsets = np.array(list(itertools.combinations(range(len(L)), m)))
    for chunk in np.array_split(subsets, max(1, len(subsets) // 4096)):
        A = L[chunk]  # (N, m, m)
        # 0/+-1 matrices: determinant is an integer
        ok = np.abs(np.linalg.det(A)) > 0.5
        if not ok.any():
            continue
        A = A[ok]
        B = b[chunk[ok]][:, :, None] * signs.T[None, :, :]  # (N, m, 2^m)
        X = np.linalg.solve(A, B)
        feas = np.all(np.abs(X) <= c[None, :, None] + tol, axis=1)
        for i, j in pairs:
            feas &= np.abs(X[:, i, :] - X[:, j, :]) <= d[i, j] + tol
        if not feas.any():
            continue
        obj = np.einsum("i,nis->ns", w, X)
        obj[~feas] = -np.inf
        k = np.unravel_index(np.argmax(obj), obj.shape)
        if obj[k] > best_val:
            best_val = float(obj[k])
            best_x = X[k[0], :, k[1]]
    return best_val, best_x
