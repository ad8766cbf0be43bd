"""Command-line front end: ``shearer <group> <action> [options]``.

Exit status is 0 on success, 1 on domain errors (bad input data, vanishing
denominators, failed audits) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import audit
from .cluster import log_z_series
from .lll import bound_value, check_euclidean, check_inflation, check_kp, check_symmetric
from .sim import MODELS, Query, empirical_stats, make_sampler
from .space import AtomicMeasure, FiniteMetricSpace, SizeLimitError, SpaceError, build_space
from .zfun import ZeroDenominator, classify_phase, critical_bracket, z_exact, z_ratio

DEFAULT_SEED = 20240611
DIGITS = 15


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------- input


def _field(obj, key, where, kind=None, required=True):
    if key not in obj:
        if required:
            raise SchemaError(f"{where}: missing field {key!r}")
        return None
    v = obj[key]
    if kind == "number" and (isinstance(v, bool) or not isinstance(v, (int, float))):
        raise SchemaError(f"{where}.{key}: expected a number, got {v!r}")
    if kind == "list" and not isinstance(v, list):
        raise SchemaError(f"{where}.{key}: expected a list")
    return v


def parse_space_data(data: dict, source: str = "<data>"):
    """Build (space, measure) from the decoded JSON space description."""
    if not isinstance(data, dict):
        raise SchemaError(f"{source}: top level must be an object")
    metric = data.get("metric", "explicit")
    if metric not in ("euclidean", "explicit"):
        raise SchemaError(f"{source}: metric must be 'euclidean' or 'explicit', got {metric!r}")
    points = _field(data, "points", source, "list")
    ids, masses, coords = [], [], []
    for k, p in enumerate(points):
        where = f"{source}: points[{k}]"
        if not isinstance(p, dict):
            raise SchemaError(f"{where}: expected an object")
        pid = _field(p, "id", where)
        if not isinstance(pid, str):
            raise SchemaError(f"{where}.id: expected a string")
        ids.append(pid)
        mass = _field(p, "mass", where, "number", required=False)
        masses.append(0.0 if mass is None else float(mass))
        if metric == "euclidean":
            c = _field(p, "coords", where, "list")
            coords.append([float(v) for v in c])
    if metric == "euclidean":
        dim = data.get("dim")
        if dim is not None and any(len(c) != dim for c in coords):
            raise SchemaError(f"{source}: every coords list must have length dim={dim}")
        space = build_space(ids, coordinates=np.array(coords, dtype=float).reshape(len(ids), -1))
    else:
        dist = _field(data, "distances", source, "list")
        space = build_space(ids, distances=dist)
    return space, AtomicMeasure(space, masses)


def parse_space_file(path: str):
    """Read a JSON space file into ``(FiniteMetricSpace, AtomicMeasure)``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_space_data(data, path)


def _ids(text):
    if text is None:
        return None
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _region(space: FiniteMetricSpace, text, default_full=False):
    ids = _ids(text)
    if ids is None:
        return space.full_mask if default_full else 0
    return space.mask(ids)


def _lambda_grid(text: str) -> list:
    """``start:stop:count`` (inclusive, linear) or a comma list."""
    if ":" in text:
        a, b, c = text.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(c))]
    return [float(v) for v in text.split(",") if v.strip()]


def _measure_arg(space, measure, text):
    """N for the KP check: a number (same value on every charged atom), inline JSON or a JSON file."""
    try:
        c = float(text)
    except ValueError:
        pass
    else:
        return np.where(measure.masses > 0, c, 0.0)
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            mapping = json.load(fh)
    else:
        mapping = json.loads(text)
    return AtomicMeasure.from_mapping(space, mapping).masses


# ---------------------------------------------------------------- output


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(format(v, f".{DIGITS}g"))
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _num(obj)


def _cell(v):
    v = _num(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, f".{DIGITS}g")
    return str(v)


def _render(result, fmt):
    if isinstance(result, tuple):
        header, rows = result
        if fmt == "json":
            return json.dumps([_clean(dict(zip(header, r))) for r in rows], indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in result.items():
            w.writerow([k, json.dumps(_clean(v)) if isinstance(v, (dict, list)) else _cell(v)])
        return buf.getvalue()
    return json.dumps(_clean(result), indent=2) + "\n"


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    folder = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(out))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- commands


def _load(args):
    if not args.space:
        raise SchemaError("--space is required for this command")
    return parse_space_file(args.space)


def cmd_z(args):
    space, measure = _load(args)
    if args.action == "eval":
        S = _region(space, args.A, default_full=True)
        return {"region": list(space.ids_of(S)), "Z": z_exact(space, measure, S, method=args.method)}
    a, b = _region(space, args.A), _region(space, args.B)
    return {"A": list(space.ids_of(a)), "B": list(space.ids_of(b)), "z": z_ratio(space, measure, a, b)}


def cmd_phase(args):
    space, measure = _load(args)
    tol = 1e-12 if args.tol is None else args.tol
    if args.action == "classify":
        return classify_phase(space, measure, tol=tol).as_dict()
    if not args.lambda_grid:
        raise SchemaError("phase scan needs --lambda-grid")
    S = _region(space, args.A, default_full=True)
    rows = []
    for lam in _lambda_grid(args.lambda_grid):
        scaled = measure.scaled(lam)
        rows.append((lam, z_exact(space, scaled, S), classify_phase(space, scaled, tol=tol).label.value))
    return ("lambda", "Z", "phase"), rows


def cmd_critical(args):
    space, measure = _load(args)
    S = _region(space, args.A, default_full=True)
    tol = 1e-10 if args.tol is None else args.tol
    lo, hi = critical_bracket(space, measure, S, tol=tol)
    return {"region": list(space.ids_of(S)), "lambda": 0.5 * (lo + hi), "bracket": [lo, hi], "tol": tol}


def cmd_cluster(args):
    space, measure = _load(args)
    s = log_z_series(space, measure, _region(space, args.A), _region(space, args.B), order=args.order)
    return ("n", "term", "partial_sum", "exact_minus_log_z"), s.rows()


def cmd_lll(args):
    if args.action == "euclidean":
        if args.lambda_ is None or args.dim is None:
            raise SchemaError("lll euclidean needs --lambda and --dim")
        cert = check_euclidean(args.lambda_, args.dim)
        return cert.as_dict()
    space, measure = _load(args)
    if args.action == "symmetric":
        cert = check_symmetric(space, measure)
    elif args.action == "inflation":
        if args.alpha is None:
            raise SchemaError("lll inflation needs --alpha")
        cert = check_inflation(space, measure, args.alpha)
    else:
        if args.N is None:
            raise SchemaError("lll kp needs --N")
        cert = check_kp(space, measure, _measure_arg(space, measure, args.N))
    if cert.condition_holds and (args.A is not None or args.B is not None):
        a, b = _region(space, args.A), _region(space, args.B)
        key = f"A={'|'.join(space.ids_of(a))};B={'|'.join(space.ids_of(b))}"
        cert.bounds[key] = bound_value(cert, a, b, space)
    return cert.as_dict()


def cmd_sim(args):
    space, measure = _load(args)
    if not args.queries:
        raise SchemaError("sim run needs --queries")
    with open(args.queries, encoding="utf-8") as fh:
        raw = json.load(fh)
    queries = [Query.from_dict(q) for q in raw]
    seed = DEFAULT_SEED if args.seed is None else args.seed
    sampler = make_sampler(args.model, space, measure)
    rep = empirical_stats(sampler, args.samples, seed, queries, space, measure)
    return ("query_kind", "query_args", "estimate", "stderr", "n_samples", "seed"), rep.rows()


def cmd_audit(args):
    results = audit.run_all()
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if passed == len(results) else 1


# ---------------------------------------------------------------- parser


def _common(p, space=True):
    if space:
        p.add_argument("--space", help="JSON space file")
    p.add_argument("--A", help="comma separated point ids")
    p.add_argument("--B", help="comma separated point ids")
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="output path (written atomically); stdout if omitted")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shearer", description="Generating functions, phases, local lemmas and samplers for 1-dependent hard-core processes.")
    sub = parser.add_subparsers(dest="group", required=True)

    z = sub.add_parser("z", help="evaluate Z or the ratio z")
    z.add_argument("action", choices=("eval", "ratio"))
    z.add_argument("--method", choices=("recursion", "enumeration"), default="recursion")
    _common(z)
    z.set_defaults(func=cmd_z)

    ph = sub.add_parser("phase", help="classify the phase or scan a lambda grid")
    ph.add_argument("action", choices=("classify", "scan"))
    ph.add_argument("--lambda-grid", dest="lambda_grid", help="start:stop:count or comma list")
    _common(ph)
    ph.set_defaults(func=cmd_phase)

    cr = sub.add_parser("critical", help="critical scaling of a region")
    _common(cr)
    cr.set_defaults(func=cmd_critical, action=None)

    cl = sub.add_parser("cluster", help="truncated cluster expansion of -log z")
    cl.add_argument("action", choices=("expand",))
    cl.add_argument("--order", type=int, default=6)
    _common(cl)
    cl.set_defaults(func=cmd_cluster)

    ll = sub.add_parser("lll", help="local lemma conditions")
    ll.add_argument("action", choices=("symmetric", "inflation", "kp", "euclidean"))
    ll.add_argument("--alpha", type=float)
    ll.add_argument("--lambda", dest="lambda_", type=float)
    ll.add_argument("--dim", type=int)
    ll.add_argument("--N", help="number, inline JSON mapping id->mass, or JSON file")
    _common(ll)
    ll.set_defaults(func=cmd_lll)

    sm = sub.add_parser("sim", help="sample a model and estimate queries")
    sm.add_argument("action", choices=("run",))
    sm.add_argument("--model", choices=MODELS, required=True)
    sm.add_argument("--samples", type=int, default=10_000)
    sm.add_argument("--seed", type=int, help=f"default {DEFAULT_SEED}")
    sm.add_argument("--queries", help="JSON list of queries")
    _common(sm)
    sm.set_defaults(func=cmd_sim)

    au = sub.add_parser("audit", help="run the acceptance checks")
    au.add_argument("action", choices=("all",))
    au.add_argument("--out")
    au.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
        if isinstance(result, int):
            return result
        fmt = getattr(args, "format", None) or ("csv" if isinstance(result, tuple) else "json")
        _emit(_render(result, fmt), args.out)
    except (SchemaError, SpaceError, SizeLimitError, ZeroDenominator, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
