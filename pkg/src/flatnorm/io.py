"""Readers and writers for charge CSVs, metric matrix files and family manifests.

Charge CSV: header ``x1,...,xd,w`` (coordinates) or ``id,w`` (matrix
metric), one support point per row.  Anchor files use the same layout
without the ``w`` column.  Metric matrix file: first line n, then n rows of
n whitespace-separated decimals; point ids are the row numbers 0..n-1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .charges import Charge
from .family import Family, make_family
from .metric import MetricSpace, build_euclidean, build_from_matrix


class InputError(ValueError):
    """Unparseable or inconsistent input file."""


@dataclass
class Rows:
    mode: str  # "coords" or "id"
    keys: list  # coordinate tuples or id strings
    weights: list


def read_rows(path, weighted: bool = True) -> Rows:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            lines = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    if not lines:
        raise InputError(f"{path}: missing header")
    header = [h.strip() for h in lines[0]]
    body = lines[1:]
    if weighted:
        if not header or header[-1] != "w":
            raise InputError(f"{path}: last header column must be 'w', got {header}")
        keycols = header[:-1]
    else:
        keycols = header[:-1] if header and header[-1] == "w" else header
    if keycols == ["id"]:
        mode = "id"
    elif keycols and all(h == f"x{k + 1}" for k, h in enumerate(keycols)):
        mode = "coords"
    else:
        raise InputError(f"{path}: header must be 'x1,...,xd[,w]' or 'id[,w]', got {header}")
    keys, weights = [], []
    for lineno, row in enumerate(body, start=2):
        row = [c.strip() for c in row]
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            if mode == "id":
                keys.append(row[0])
            else:
                keys.append(tuple(float(c) for c in row[: len(keycols)]))
            if weighted:
                weights.append(float(row[-1]))
        except ValueError as e:
            raise InputError(f"{path}:{lineno}: {e}") from e
    return Rows(mode, keys, weights)


def read_matrix(path) -> MetricSpace:
    """Parse and validate a metric matrix file (MetricError on invalid metrics)."""
    try:
        tokens = Path(path).read_text(encoding="utf-8").split("\n")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    lines = [ln.split() for ln in tokens if ln.strip()]
    try:
        n = int(lines[0][0])
        rows = [[float(x) for x in ln] for ln in lines[1 : n + 1]]
    except (IndexError, ValueError) as e:
        raise InputError(f"{path}: malformed matrix file ({e})") from e
    if len(rows) != n or any(len(r) != n for r in rows):
        raise InputError(f"{path}: expected {n} rows of {n} numbers")
    return build_from_matrix(n, rows, ids=[str(i) for i in range(n)])


def build_space(metric: str, row_sets: list[Rows]) -> tuple[MetricSpace, list[list[int]]]:
    """One space shared by all row sets, plus the point index of every row."""
    if metric == "euclidean":
        if any(r.mode != "coords" for r in row_sets):
            raise InputError("euclidean metric needs coordinate columns x1..xd")
        allkeys = [k for r in row_sets for k in r.keys]
        try:
            space = build_euclidean(allkeys)
        except ValueError as e:
            raise InputError(str(e)) from e
        out, pos = [], 0
        for r in row_sets:
            out.append([space.source_map[pos + j] for j in range(len(r.keys))])
            pos += len(r.keys)
        return space, out
    if metric.startswith("matrix:"):
        space = read_matrix(metric[len("matrix:"):])
        if any(r.mode != "id" for r in row_sets):
            raise InputError("matrix metric needs an 'id' column")
        try:
            return space, [[space.index(k) for k in r.keys] for r in row_sets]
        except KeyError as e:
            raise InputError(str(e)) from e
    raise InputError(f"unknown metric spec {metric!r} (use 'euclidean' or 'matrix:PATH')")


def charge_from_rows(space, rows: Rows, index: list[int]) -> Charge:
    w: dict[int, float] = {}
    for i, m in zip(index, rows.weights):
        w[i] = w.get(i, 0.0) + m
    return Charge(space, w)


def load_charges(paths, metric="euclidean", extra_unweighted=()):
    """Charges from CSV files on one shared space; unweighted files give index lists."""
    sets = [read_rows(p) for p in paths] + [read_rows(p, weighted=False) for p in extra_unweighted]
    space, idx = build_space(metric, sets)
    charges = [charge_from_rows(space, s, ix) for s, ix in zip(sets[: len(paths)], idx)]
    return space, charges, idx[len(paths):]


def write_charge(path, q: Charge):
    space = q.space
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        coords = [space.point(i).coords for i in q.support]
        if coords and all(c is not None for c in coords):
            d = len(coords[0])
            wr.writerow([f"x{k + 1}" for k in range(d)] + ["w"])
            for i, c in zip(q.support, coords):
                wr.writerow([repr(float(x)) for x in c] + [repr(float(q.weights[i]))])
        else:
            wr.writerow(["id", "w"])
            for i in q.support:
                wr.writerow([space.point(i).id, repr(float(q.weights[i]))])


def load_manifest(path) -> Family:
    """Family from a manifest: member CSV paths or a named generator."""
    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read manifest {path}: {e}") from e
    if not isinstance(spec, dict) or "members" not in spec:
        raise InputError(f"{path}: manifest needs a 'members' entry")
    members = spec["members"]
    horizon = spec.get("horizon")
    if isinstance(members, dict):
        if "generator" not in members:
            raise InputError(f"{path}: generator manifest needs 'generator'")
        params = dict(members.get("params", {}))
        if horizon is not None:
            params.setdefault("horizon", int(horizon))
        try:
            return make_family(members["generator"], **params)
        except TypeError as e:
            raise InputError(f"{path}: bad generator parameters: {e}") from e
        except ValueError as e:
            raise InputError(f"{path}: {e}") from e
    if not isinstance(members, list):
        raise InputError(f"{path}: 'members' must be a list of CSV paths or a generator object")
    metric = spec.get("metric", {"type": "euclidean"})
    if isinstance(metric, str):
        mspec = metric
    elif metric.get("type") == "matrix":
        mpath = Path(metric["path"])
        mspec = "matrix:" + str(mpath if mpath.is_absolute() else path.parent / mpath)
    elif metric.get("type", "euclidean") == "euclidean":
        mspec = "euclidean"
    else:
        raise InputError(f"{path}: unknown metric {metric!r}")
    files = [Path(m) if Path(m).is_absolute() else path.parent / m for m in members]
    space, charges, _ = load_charges(files, mspec)
    N = len(charges) if horizon is None else int(horizon)
    if N > len(charges):
        raise InputError(f"{path}: horizon {N} exceeds the {len(charges)} listed members")
    return Family(space, lambda n: charges[n - 1], N, spec.get("name", path.stem), {"horizon": N})
