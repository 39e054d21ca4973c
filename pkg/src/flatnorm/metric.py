"""Finite ground metric spaces.

Points are addressed by their position in the space; the position is the
identity that charges key their weights by.  Coordinates are kept only for
embedded spaces and for evaluating coordinate-based test functions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Hashable, Sequence

import mpmath
import numpy as np

log = logging.getLogger(__name__)

MERGE_TOL = 1e-12
TRIANGLE_RTOL = 1e-9
DENSE_LIMIT = 2048


class MetricError(ValueError):
    """A distance matrix violates a metric axiom."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


@dataclass(frozen=True)
class Point:
    id: Hashable
    coords: tuple | None = None


class MetricSpace:
    """A finite set of points with a validated distance.

    Distances are held in a dense matrix up to ``DENSE_LIMIT`` points and
    computed from coordinates on demand above that.
    """

    def __init__(self, points: Sequence[Point], matrix=None):
        self._points = tuple(points)
        self._index = {p.id: i for i, p in enumerate(self._points)}
        if len(self._index) != len(self._points):
            raise ValueError("point ids must be unique")
        self._matrix = None
        self._line = matrix is None and bool(self._points) and all(
            p.coords is not None and len(p.coords) == 1 for p in self._points
        )
        if matrix is not None:
            self._matrix = np.asarray(matrix, dtype=float)
        elif len(self._points) <= DENSE_LIMIT and self._points:
            X = self._coord_array()
            self._matrix = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1))
        # row i of the input that built the space -> point index, after coalescing
        self.source_map: tuple[int, ...] = tuple(range(len(self._points)))

    def __len__(self):
        return len(self._points)

    def __repr__(self):
        return f"{type(self).__name__}(n={len(self)})"

    @property
    def points(self) -> tuple[Point, ...]:
        return self._points

    def point(self, i: int) -> Point:
        return self._points[i]

    def index(self, point_or_id) -> int:
        key = point_or_id.id if isinstance(point_or_id, Point) else point_or_id
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"point {key!r} is not in this space") from None

    def __contains__(self, point_or_id):
        key = point_or_id.id if isinstance(point_or_id, Point) else point_or_id
        return key in self._index

    def _coord_array(self):
        return np.array([p.coords for p in self._points], dtype=float)

    def dist(self, i: int, j: int) -> float:
        if self._matrix is not None:
            return float(self._matrix[i, j])
        a = np.asarray(self._points[i].coords, dtype=float)
        b = np.asarray(self._points[j].coords, dtype=float)
        return float(np.linalg.norm(a - b))

    def submatrix(self, idx: Sequence[int]) -> np.ndarray:
        idx = list(idx)
        if self._matrix is not None:
            return self._matrix[np.ix_(idx, idx)]
        X = np.array([self._points[i].coords for i in idx], dtype=float)
        return np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1))

    @property
    def is_line(self) -> bool:
        """True when the metric is |x - y| on one-dimensional coordinates."""
        return self._line

    def line_coord(self, i: int):
        return self._points[i].coords[0]

    def check_axioms(self, tol: float = TRIANGLE_RTOL):
        """Exhaustively verify the metric axioms; raise MetricError on failure."""
        validate_matrix(self.submatrix(range(len(self))), tol)


def validate_matrix(d: np.ndarray, rtol: float = TRIANGLE_RTOL):
    n = d.shape[0]
    if d.shape != (n, n):
        raise MetricError(f"distance matrix must be square, got {d.shape}")
    if not np.all(np.isfinite(d)):
        i, j = map(int, np.argwhere(~np.isfinite(d))[0])
        raise MetricError(f"non-finite distance at ({i},{j})", (i, j))
    if np.any(d < 0):
        i, j = map(int, np.argwhere(d < 0)[0])
        raise MetricError(f"negative distance at ({i},{j})", (i, j))
    diag = np.abs(np.diag(d))
    if np.any(diag > 0):
        i = int(np.argmax(diag > 0))
        raise MetricError(f"nonzero self-distance at ({i},{i})", (i, i))
    asym = np.abs(d - d.T) > rtol * np.maximum(1.0, np.abs(d))
    if asym.any():
        i, j = map(int, np.argwhere(asym)[0])
        raise MetricError(f"asymmetric distance at ({i},{j}): {d[i, j]} != {d[j, i]}", (i, j))
    off = d.copy()
    np.fill_diagonal(off, np.inf)
    if np.any(off <= MERGE_TOL):
        i, j = map(int, np.argwhere(off <= MERGE_TOL)[0])
        raise MetricError(f"zero distance between distinct points ({i},{j})", (i, j))
    # d[i,j] <= min_k d[i,k] + d[k,j]
    for k in range(n):
        via = d[:, k : k + 1] + d[k : k + 1, :]
        bad = d > via * (1 + rtol) + 1e-300
        if bad.any():
            i, j = map(int, np.argwhere(bad)[0])
            raise MetricError(
                f"triangle violation at ({i},{j}) via {k}: {d[i, j]} > {d[i, k]} + {d[k, j]}",
                (i, j, k),
            )


def build_euclidean(points, ids=None) -> MetricSpace:
    """Euclidean space on the given coordinate vectors.

    Vectors closer than ``MERGE_TOL`` are coalesced into the first of them
    (with a warning); ``space.source_map`` maps input rows to point indices.
    """
    vecs = [tuple(float(c) for c in np.atleast_1d(p)) for p in points]
    dims = {len(v) for v in vecs}
    if len(dims) > 1:
        raise ValueError(f"dimension mismatch: got dimensions {sorted(dims)}")
    if ids is None:
        ids = list(range(len(vecs)))
    kept: list[Point] = []
    source_map = []
    arr = np.array(vecs, dtype=float).reshape(len(vecs), -1) if vecs else np.zeros((0, 0))
    kept_rows: list[int] = []
    for r, v in enumerate(vecs):
        if kept_rows:
            d = np.sqrt(((arr[kept_rows] - arr[r]) ** 2).sum(axis=1))
            j = int(np.argmin(d))
            if d[j] < MERGE_TOL:
                # exact repeats are expected when files share points
                (log.warning if d[j] > 0 else log.debug)(
                    "coalescing point %r into %r (distance %.3g)", ids[r], kept[j].id, d[j])
                source_map.append(j)
                continue
        source_map.append(len(kept))
        kept_rows.append(r)
        kept.append(Point(ids[r], v))
    space = MetricSpace(kept)
    space.source_map = tuple(source_map)
    return space


def build_from_matrix(n: int, d, ids=None) -> MetricSpace:
    d = np.asarray(d, dtype=float)
    if d.shape != (n, n):
        raise MetricError(f"expected a {n}x{n} matrix, got shape {d.shape}")
    validate_matrix(d)
    ids = list(range(n)) if ids is None else list(ids)
    return MetricSpace([Point(i) for i in ids], matrix=d)


class DyadicGrid(MetricSpace):
    """The points 0 and 2^-k, k = 1..levels, on the real line, plus extras.

    Coordinates are exact binary fractions held as mpmath numbers, so
    arbitrarily deep levels stay distinct and weights like 2^k never
    overflow.  Points are generated on demand.  Index 0 is the origin,
    index k is 2^-k, and extra points follow index ``levels``.
    """

    _line = True

    def __init__(self, levels: int, extras: Sequence[float] = ()):
        if levels < 1:
            raise ValueError("levels must be positive")
        self.levels = int(levels)
        self.extras = tuple(mpmath.mpf(x) for x in extras)
        self._matrix = None
        self.source_map = ()

    def __len__(self):
        return self.levels + 1 + len(self.extras)

    def coord(self, i: int):
        if 0 < i <= self.levels:
            return dyadic(-i)
        if i == 0:
            return mpmath.mpf(0)
        if self.levels < i < len(self):
            return self.extras[i - self.levels - 1]
        raise IndexError(i)

    line_coord = coord

    def point(self, i: int) -> Point:
        if i == 0:
            return Point("0", (mpmath.mpf(0),))
        if 0 < i <= self.levels:
            return Point(f"2^-{i}", (self.coord(i),))
        return Point(f"extra{i - self.levels - 1}", (self.coord(i),))

    @property
    def points(self):
        return tuple(self.point(i) for i in range(len(self)))

    def index(self, point_or_id) -> int:
        key = point_or_id.id if isinstance(point_or_id, Point) else point_or_id
        if key == "0":
            return 0
        if isinstance(key, str) and key.startswith("2^-"):
            k = int(key[3:])
            if 0 < k <= self.levels:
                return k
        if isinstance(key, str) and key.startswith("extra"):
            k = int(key[5:])
            if 0 <= k < len(self.extras):
                return self.levels + 1 + k
        raise KeyError(f"point {key!r} is not in this space")

    def __contains__(self, point_or_id):
        try:
            self.index(point_or_id)
        except (KeyError, ValueError):
            return False
        return True

    def dist(self, i, j):
        return float(abs(self.coord(i) - self.coord(j)))

    def submatrix(self, idx):
        x = [self.coord(i) for i in idx]
        return np.array([[float(abs(a - b)) for b in x] for a in x])

    def check_axioms(self, tol=TRIANGLE_RTOL):
        # exact line coordinates: axioms hold by construction
        return None


def dyadic(e: int):
    """Exactly 2**e as an mpmath number, for any integer e."""
    return mpmath.mpf((0, 1, e, 1))


def separating_function(space: MetricSpace, x0):
    """The bounded 1-Lipschitz map x -> r/(1+r), r = dist(x0, x)."""
    from .charges import BLFunction

    i0 = x0 if isinstance(x0, (int, np.integer)) and not isinstance(x0, bool) else space.index(x0)
    if not 0 <= i0 < len(space):
        raise KeyError(f"point {x0!r} is not in this space")

    def phi(space_, i):
        r = space_.dist(i0, i)
        return r / (1.0 + r)

    return BLFunction(fn=phi, sup_bound=1.0, lip_constant=1.0, name=f"sep[{space.point(i0).id}]")

