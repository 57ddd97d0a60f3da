"""Command line entry point: ``sardkit <command> ...``.

Every command prints (or writes to ``--out``) one JSON report that embeds
the full run configuration, defaults included, and the tool version.
Exit codes: 0 success, 1 usage error, 2 parse error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from fractions import Fraction

import numpy as np

from . import __version__, critical, rcf, thin
from .expr import DimensionError, ParseError, map_from_json, parse_map, to_text

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("sardkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# input helpers


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"bad number list {text!r}", 0) from exc


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_map(path: str | None):
    if path is None:
        raise UsageError("--map is required")
    obj = _read_json(path)
    try:
        return map_from_json(obj)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"map file needs 'vars' and 'components' ({exc})", 0) from exc


def _load_domain(path: str | None, fmap):
    if path is None:
        raise UsageError("--domain is required")
    obj = _read_json(path)
    try:
        return critical.Domain.from_json(obj, fmap.vars)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"domain file needs a 'box' ({exc})", 0) from exc


def read_cloud(path: str) -> thin.PointCloud:
    """CSV with a header row ``x1,...,xd``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise ParseError(f"{path}: missing header", 0)
    header, body = rows[0], [r for r in rows[1:] if r]
    try:
        pts = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}", 0) from exc
    if body and pts.shape[1] != len(header):
        raise ParseError(f"{path}: rows do not match the header", 0)
    if not body:
        pts = np.zeros((0, len(header)))
    return thin.PointCloud(pts, {"source": path})


def write_cloud_csv(path: str, X, F, nu, scale):
    n = X.shape[1]
    k = F.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(n)] + [f"f{j + 1}" for j in range(k)]
                   + ["nu", "scale"])
        for row in zip(X.tolist(), F.tolist(), np.asarray(nu).tolist(), np.asarray(scale).tolist()):
            w.writerow([repr(v) for v in row[0]] + [repr(v) for v in row[1]]
                       + [repr(row[2]), repr(row[3])])


def _budget(args) -> critical.Budget:
    return critical.Budget(samples=args.samples, n_starts=args.n_starts, max_iter=args.max_iter,
                           max_restarts=args.max_restarts, max_witnesses=args.max_witnesses)


# ---------------------------------------------------------------------------
# commands


def cmd_parse(args):
    if args.map:
        fmap = _load_map(args.map)
    elif args.text is not None:
        fmap = parse_map(args.text, [v.strip() for v in args.vars.split(",")])
    else:
        raise UsageError("give --map FILE or --text EXPR --vars x,y")
    jac = fmap.jacobian
    return {"map": fmap.to_json(), "n": fmap.n, "k": fmap.k,
            "jacobian": [[to_text(e, fmap.vars) for e in row] for row in jac.entries]}


def cmd_nu(args):
    fmap = _load_map(args.map)
    x = np.array(_floats(args.point))
    if x.size != fmap.n:
        raise DimensionError(f"point has length {x.size}, map expects {fmap.n}")
    nu = critical.nu_at(fmap, x)
    return {"point": x.tolist(), "nu": nu, "kos": critical.kos_weight(fmap, x),
            "norm": float(np.linalg.norm(x))}


def cmd_critical(args):
    fmap = _load_map(args.map)
    domain = _load_domain(args.domain, fmap)
    cloud = critical.find_z_critical(fmap, domain, args.z, _budget(args), args.seed)
    P = cloud.points
    F = fmap.values(P) if len(P) else np.zeros((0, fmap.k))
    nu = critical.nu_points(fmap, P)
    if args.cloud_out:
        write_cloud_csv(args.cloud_out, P, F, nu, np.full(len(P), args.z))
    return {"z": args.z, "n_points": len(P), "max_nu": float(nu.max()) if nu.size else None,
            "value_min": F.min(axis=0).tolist() if F.size else None,
            "value_max": F.max(axis=0).tolist() if F.size else None}


def _estimate_result(est, fmap, args):
    if args.cloud_out:
        w = est.witnesses
        write_cloud_csv(args.cloud_out, w.x, w.value, w.nu, w.scale)
    out = est.to_json()
    out["violations"] = est.violations(fmap)
    return out


def cmd_k0(args):
    fmap = _load_map(args.map)
    domain = _load_domain(args.domain, fmap)
    est = critical.estimate_K0(fmap, domain, args.tol, _budget(args), args.seed, args.eps_cluster)
    return _estimate_result(est, fmap, args)


def cmd_kinf(args):
    fmap = _load_map(args.map)
    sched = critical.Schedule(_floats(args.scales), args.i, args.samples, args.seed)
    est = critical.estimate_Kinf(fmap, sched, _budget(args), args.eps_cluster)
    return _estimate_result(est, fmap, args)


def cmd_k1(args):
    fmap = _load_map(args.map)
    domain = _load_domain(args.domain, fmap)
    sched = critical.Schedule(_floats(args.scales), args.i, args.samples, args.seed)
    est = critical.estimate_K1(fmap, domain, sched, _budget(args), args.eps_cluster)
    return _estimate_result(est, fmap, args)


def cmd_sard(args):
    fmap = _load_map(args.map)
    domain = _load_domain(args.domain, fmap)
    rep = critical.sard_experiment(fmap, domain, _floats(args.z_schedule), _budget(args),
                                   args.seed, args.delta, args.projections)
    clouds = rep.pop("_clouds")
    if args.cloud_out:
        X = np.vstack([c[1] for c in clouds])
        F = np.vstack([c[2] for c in clouds])
        nu = np.concatenate([c[3] for c in clouds])
        z = np.concatenate([np.full(len(c[1]), c[0]) for c in clouds])
        write_cloud_csv(args.cloud_out, X, F, nu, z)
    return rep


def cmd_thin(args):
    cloud = read_cloud(args.cloud)
    rep = thin.thinness_score(cloud, args.k, args.delta, args.projections, args.seed)
    out = rep.to_json()
    if args.z is not None:
        out["z"] = args.z
        out["thin"] = rep.verdict(args.z)
    return out


def cmd_dim(args):
    cloud = read_cloud(args.cloud)
    scales = _floats(args.scales)
    return {"box_dimension": thin.box_dimension(cloud, scales), "scales": scales,
            "n_points": len(cloud)}


def cmd_family(args):
    manifest = _read_json(args.manifest)
    try:
        family = [(float(entry["t"]), read_cloud(entry["cloud"])) for entry in manifest]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"manifest entries need 't' and 'cloud' ({exc})", 0) from exc
    z_of_t = None
    if args.z_germ:
        z_of_t = rcf.from_json_expr(json.loads(args.z_germ))
    elif args.z is not None:
        z_of_t = args.z
    return thin.family_sweep(family, args.k, args.delta, z_of_t, args.projections, args.seed)


def cmd_puiseux(args):
    if args.expr is not None:
        text = args.expr
    elif args.expr_file is not None:
        try:
            with open(args.expr_file) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {args.expr_file}: {exc.strerror}") from exc
    else:
        raise UsageError("give --expr JSON or --expr-file FILE")
    obj = json.loads(text)
    try:
        series = rcf.from_json_expr(obj, Fraction(args.trunc))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad series expression ({exc})", 0) from exc
    out = series.to_json()
    out["infinitesimal"] = series.is_infinitesimal()
    out["text"] = str(series)
    if args.t is not None:
        out["value_at_t"] = series.evaluate_at(args.t)
    return out


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sardkit", description="Rabier function, critical values at infinity "
                                            "and empirical thinness of polynomial maps.")
    p.add_argument("--version", action="version", version=f"sardkit {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--out", help="write the JSON report here (default: stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    def sampling(sp):
        sp.add_argument("--samples", type=int, default=4096)
        sp.add_argument("--n-starts", type=int, default=32)
        sp.add_argument("--max-iter", type=int, default=200)
        sp.add_argument("--max-restarts", type=int, default=20)
        sp.add_argument("--max-witnesses", type=int, default=16)
        sp.add_argument("--cloud-out", help="CSV of witness points")

    sp = sub.add_parser("parse", help="parse a map and print its Jacobian")
    sp.add_argument("--map")
    sp.add_argument("--text")
    sp.add_argument("--vars", default="x,y")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("nu", help="nu(d_x f) and (1+|x|) nu at a point")
    sp.add_argument("--map", required=True)
    sp.add_argument("--point", required=True, help='comma separated, e.g. "1,0"')
    common(sp, seed=False)
    sp.set_defaults(func=cmd_nu)

    sp = sub.add_parser("critical", help="sample z-critical points")
    sp.add_argument("--map", required=True)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--z", type=float, required=True)
    sampling(sp)
    common(sp)
    sp.set_defaults(func=cmd_critical)

    sp = sub.add_parser("k0", help="critical values")
    sp.add_argument("--map", required=True)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--eps-cluster", type=float)
    sampling(sp)
    common(sp)
    sp.set_defaults(func=cmd_k0)

    for name, helptext in (("kinf", "asymptotic critical values at infinity"),
                           ("k1", "asymptotic critical values at the frontier")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--map", required=True)
        if name == "k1":
            sp.add_argument("--domain", required=True)
            sp.add_argument("--scales", default="0.1,0.01,0.001,0.0001")
        else:
            sp.add_argument("--scales", default="10,100,1000,10000")
        sp.add_argument("--i", type=int, default=2)
        sp.add_argument("--eps-cluster", type=float)
        sampling(sp)
        common(sp)
        sp.set_defaults(func=cmd_kinf if name == "kinf" else cmd_k1)

    sp = sub.add_parser("sard", help="thinness of f(c_z(f)) along a z schedule")
    sp.add_argument("--map", required=True)
    sp.add_argument("--domain", required=True)
    sp.add_argument("--z-schedule", default="0.5,0.25,0.125")
    sp.add_argument("--delta", type=float, default=5e-3)
    sp.add_argument("--projections", type=int, default=8)
    sampling(sp)
    common(sp)
    sp.set_defaults(func=cmd_sard)

    sp = sub.add_parser("thin", help="thinness score of a CSV cloud")
    sp.add_argument("--cloud", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--projections", type=int, default=8)
    sp.add_argument("--z", type=float)
    common(sp)
    sp.set_defaults(func=cmd_thin)

    sp = sub.add_parser("dim", help="box-counting dimension of a CSV cloud")
    sp.add_argument("--cloud", required=True)
    sp.add_argument("--scales", default="0.2,0.1,0.05,0.025")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_dim)

    sp = sub.add_parser("family", help="thinness sweep over a family of clouds")
    sp.add_argument("--manifest", required=True, help='JSON [{"t": 0.1, "cloud": "a.csv"}, ...]')
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--projections", type=int, default=8)
    sp.add_argument("--z", type=float, help="constant z for per-fiber verdicts")
    sp.add_argument("--z-germ", help="Puiseux term list for z(t), e.g. '[[1, 1]]' for z = t")
    common(sp)
    sp.set_defaults(func=cmd_family)

    sp = sub.add_parser("puiseux", help="evaluate a Puiseux series expression")
    sp.add_argument("--expr", help='JSON, e.g. {"op": "mul", "args": [[[1, 1]], [[0, 1]]]}')
    sp.add_argument("--expr-file")
    sp.add_argument("--trunc", default="16")
    sp.add_argument("--t", type=float, help="also evaluate the germ at this t > 0")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_puiseux)
    return p


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    cfg["out"] = args.out
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EXIT_USAGE
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        result = args.func(args)
    except UsageError as exc:
        print(f"sardkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, json.JSONDecodeError) as exc:
        print(f"sardkit {args.command}: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionError as exc:
        print(f"sardkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"sardkit {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    report = {"tool": "sardkit", "version": __version__, "command": args.command,
              "config": _config(args), "result": result}
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
