"""Command-line interface.

Exit codes: 0 success (any verdict), 2 input or usage error, 3 invalid
metric, 4 solver failure, 5 hypermeasure index cap exceeded.  Reports go to
stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import json
import logging
import math
import sys
from pathlib import Path

from . import blnorm, metric
from .blnorm import Neighborhood, SolverError, distance, flat_norm, quasicontinuity_modulus
from .charges import ZERO, BLFunction
from .family import GENERATORS, make_family, precompactness_verdict
from .flow import FlowError
from .hyper import (DEFAULT_INDEX_CAP, IndexCapError, bump_function, canonical_example,
                    coordinate_function, evaluate, from_charge)
from .io import InputError, load_charges, load_manifest, write_charge
from .metric import MetricError, separating_function

EXIT_OK, EXIT_INPUT, EXIT_METRIC, EXIT_SOLVER, EXIT_INDEX_CAP = 0, 2, 3, 4, 5
EXAMPLES = {"canonical": canonical_example}

class UsageError(InputError):
    pass


def positive(s):
    v = float(s)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


# commands -------------------------------------------------------------------


def cmd_norm(args):
    space, (q,), _ = load_charges([args.charge], args.metric)
    res = flat_norm(q, args.method)
    return {"kind": "norm", **res.to_dict(space)}


def cmd_dist(args):
    space, (a, b), _ = load_charges([args.first, args.second], args.metric)
    return {"kind": "dist", "value": distance(a, b, check=args.check), "checked": bool(args.check)}


def cmd_quasi(args):
    space, (q,), (anchors,) = load_charges([args.charge], args.metric, [args.anchors])
    mod = quasicontinuity_modulus(q, Neighborhood(frozenset(anchors), args.delta), args.method)
    used = sorted(set(anchors))
    return {
        "kind": "quasi",
        "modulus": mod,
        "anchors_used": [str(space.point(i).id) for i in used],
        "delta": args.delta,
    }


def _line_extent(space):
    # dyadic grids span [0, 1] plus their extra points
    if hasattr(space, "extras"):
        return max([1.0] + [abs(float(e)) for e in space.extras])
    return max((abs(float(space.line_coord(i))) for i in range(len(space))), default=0.0)


def parse_function(spec: str, space) -> BLFunction:
    """Test-function spec: zero | x[:SUP] | bump:CENTER | sep:POINT_ID."""
    name, _, arg = spec.partition(":")
    if name == "zero":
        return ZERO
    if name in ("x", "bump") and not space.is_line:
        raise UsageError(f"function {name!r} needs a one-dimensional space")
    try:
        if name == "x":
            if arg:
                return coordinate_function(float(arg))
            bound = _line_extent(space)
            return coordinate_function(bound)
        if name == "bump":
            return bump_function(float(arg))
        if name == "sep":
            return separating_function(space, space.index(arg))
    except (KeyError, ValueError) as e:
        raise UsageError(f"bad function spec {spec!r}: {e}") from e
    raise UsageError(f"unknown function {spec!r} (zero, x[:SUP], bump:C, sep:ID)")


def cmd_hyper(args):
    src = args.source
    if src in EXAMPLES:
        t = EXAMPLES[src](index_cap=args.index_cap)
    elif Path(src).is_file():
        _, (q,), _ = load_charges([src], args.metric)
        t = from_charge(q)
    else:
        raise UsageError(f"unknown example {src!r}; known: {sorted(EXAMPLES)} or a charge CSV path")
    f = parse_function(args.function, t.space)
    return {"kind": "hyper", "function": args.function, "eps": args.eps, **evaluate(t, f, args.eps).to_dict()}


def cmd_family(args):
    fam = load_manifest(args.manifest)
    rep = precompactness_verdict(fam, args.eps, args.depth, args.horizon,
                                 growth_limit=args.growth_limit, workers=args.workers)
    return rep.to_dict()


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)


def cmd_gen(args):
    if args.name not in GENERATORS:
        raise UsageError(f"unknown generator {args.name!r}; known: {sorted(GENERATORS)}")
    params = {}
    for item in args.param:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = json.loads(val)
        except json.JSONDecodeError:
            params[key] = val
    accepted = inspect.signature(GENERATORS[args.name]).parameters
    if args.horizon is not None:
        params["horizon"] = args.horizon
    if args.seed is not None and "seed" in accepted:
        params["seed"] = args.seed
    unknown = set(params) - set(accepted)
    if unknown:
        raise UsageError(f"generator {args.name!r} does not take {sorted(unknown)}")
    fam = make_family(args.name, **params)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = []
        for n in range(1, fam.declared_horizon + 1):
            fn = f"member_{n:03d}.csv"
            write_charge(out / fn, fam.member(n))
            files.append(fn)
        manifest = {
            "name": fam.name,
            "metric": {"type": "euclidean"},
            "members": files,
            "horizon": fam.declared_horizon,
            "generator": {"name": args.name, "params": fam.params},
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        rep = precompactness_verdict(fam, args.eps, args.depth, workers=args.workers)
        _write_csv(out / "profile_equi.csv", ["n", "modulus"], rep.equi_profile)
        _write_csv(out / "profile_tightness.csv", ["eps", "radius", "horizon"], rep.tightness_profile)
    except OSError as e:
        raise InputError(f"cannot write to {out}: {e}") from e
    return {
        "kind": "gen",
        "generator": args.name,
        "params": fam.params,
        "out_dir": str(out),
        "members": files,
        "profiles": ["profile_equi.csv", "profile_tightness.csv"],
    }


# output ---------------------------------------------------------------------


def _flatten(rep):
    """key,value rows; list-valued profiles become one row per entry."""
    rows = []
    for k, v in rep.items():
        if isinstance(v, dict):
            rows += [(f"{k}.{kk}", vv) for kk, vv in v.items()]
        elif isinstance(v, list) and v and isinstance(v[0], list):
            rows += [(f"{k}[{j}]", ";".join(map(str, e))) for j, e in enumerate(v)]
        elif isinstance(v, list):
            rows.append((k, ";".join(map(str, v))))
        else:
            rows.append((k, v))
    return rows


def emit(rep, fmt, stream=None):
    stream = stream or sys.stdout
    if fmt == "json":
        json.dump(rep, stream, indent=2, allow_nan=False)
        stream.write("\n")
    elif fmt == "csv":
        wr = csv.writer(stream, lineterminator="\n")
        wr.writerow(["key", "value"])
        wr.writerows(_flatten(rep))
    else:
        for k, v in _flatten(rep):
            stream.write(f"{k:>24}  {v}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "human"), default="json")
    common.add_argument("--feas-tol", type=positive, default=blnorm.FEAS_TOL, help="LP feasibility tolerance")
    common.add_argument("--merge-tol", type=positive, default=metric.MERGE_TOL,
                        help="coalesce Euclidean points closer than this")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="flatnorm", description="Flat norms of charges and hypermeasures.",
                                epilog="exit codes: 0 ok, 2 input error, 3 invalid metric, "
                                       "4 solver failure, 5 index cap exceeded")
    sub = p.add_subparsers(dest="command", required=True)

    def with_metric(sp):
        sp.add_argument("--metric", default="euclidean", help="euclidean | matrix:PATH")

    sp = sub.add_parser("norm", parents=[common], help="flat norm of a charge")
    sp.add_argument("charge")
    sp.add_argument("--method", choices=("primal", "dual", "both"), default="primal")
    with_metric(sp)
    sp.set_defaults(func=cmd_norm)

    sp = sub.add_parser("dist", parents=[common], help="flat distance between two charges")
    sp.add_argument("first")
    sp.add_argument("second")
    sp.add_argument("--check", action="store_true", help="cross-check against the flow solver")
    with_metric(sp)
    sp.set_defaults(func=cmd_dist)

    sp = sub.add_parser("quasi", parents=[common], help="modulus over a finite-anchor neighbourhood")
    sp.add_argument("charge")
    sp.add_argument("anchors")
    sp.add_argument("--delta", type=positive, required=True)
    sp.add_argument("--method", choices=("primal", "dual"), default="primal")
    with_metric(sp)
    sp.set_defaults(func=cmd_quasi)

    sp = sub.add_parser("hyper", parents=[common], help="evaluate a hypermeasure on a test function")
    sp.add_argument("source", help="example name (canonical) or a charge CSV")
    sp.add_argument("--function", default="x", help="zero | x[:SUP] | bump:C | sep:ID")
    sp.add_argument("--eps", type=positive, default=1e-6)
    sp.add_argument("--index-cap", type=positive_int, default=DEFAULT_INDEX_CAP)
    with_metric(sp)
    sp.set_defaults(func=cmd_hyper)

    sp = sub.add_parser("family", parents=[common], help="precompactness verdict for a family manifest")
    sp.add_argument("manifest")
    sp.add_argument("--eps", type=positive, default=0.1)
    sp.add_argument("--depth", type=positive_int, default=20)
    sp.add_argument("--horizon", type=positive_int)
    sp.add_argument("--growth-limit", type=positive, default=1.5)
    sp.add_argument("--workers", type=positive_int, default=1)
    sp.set_defaults(func=cmd_family)

    sp = sub.add_parser("gen", parents=[common], help="write a generated family with profile data")
    sp.add_argument("name", help=", ".join(sorted(GENERATORS)))
    sp.add_argument("out")
    sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    sp.add_argument("--horizon", type=positive_int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--eps", type=positive, default=0.1, help="eps for the profile data")
    sp.add_argument("--depth", type=positive_int, default=20)
    sp.add_argument("--workers", type=positive_int, default=1)
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    blnorm.FEAS_TOL = args.feas_tol
    metric.MERGE_TOL = args.merge_tol
    try:
        rep = args.func(args)
    except MetricError as e:
        print(f"error: invalid metric: {e}", file=sys.stderr)
        return EXIT_METRIC
    except (InputError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, FlowError) as e:
        print(f"error: solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except IndexCapError as e:
        print(f"error: index cap exceeded: {e}", file=sys.stderr)
        return EXIT_INDEX_CAP
    emit(rep, args.format)
    return EXIT_OK


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
