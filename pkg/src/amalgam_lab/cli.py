"""Command-line front end: ``amalgam-lab <command> ...``.

Exit codes: 0 on success, 2 when the input violates a mathematical
precondition, 1 on I/O and usage errors.  Failures print a single line
``ERROR:<code>:<message>`` to stderr.  Outputs carry a ``meta`` block with
the tool version, seed and tolerances and are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

import numpy as np

from . import __version__
from .amalgam import amalgamate, verify_amalgam
from .exceptions import AmalgamLabError, ValidationError
from .geometry import ATOL, convex_hull_2d
from .incarnation import (
    besselian_incarnate,
    cantor_ball,
    dual_ball,
    generators_from_polytope,
    triple_norm_budget,
)
from .io import (
    amalgam_from_dict,
    amalgam_to_dict,
    atomic_write,
    dumps_json,
    generator_set_from_dict,
    generator_set_to_dict,
    group_from_dict,
    polygon_from_dict,
    polygon_to_dict,
    read_json,
    vformation_from_dict,
)
from .lp_experiments import counterexample_report, report_csv
from .symmetry import (
    ample_deviation,
    commutant_dim,
    is_ample,
    make_G1,
    make_G2,
    projection_constant,
    symmetry_group,
)

log = logging.getLogger("amalgam_lab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _meta(args, **extra) -> dict:
    m = {
        "version": __version__,
        "command": args.command,
        "seed": args.seed,
        "tolerances": {"tol": args.tol, "angle_tol": args.angle_tol},
    }
    m.update(extra)
    return m


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _flat_csv(d: dict, prefix="") -> list:
    rows = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flat_csv(v, key + "."))
        elif isinstance(v, (list, np.ndarray)):
            rows.append((key, " ".join(f"{float(x):.12g}" for x in np.ravel(v))))
        else:
            rows.append((key, f"{v:.12g}" if isinstance(v, float) else v))
    return rows


def _emit(args, payload: dict, csv_text: str | None = None):
    if args.format == "csv":
        text = csv_text if csv_text is not None else _table_csv(["key", "value"], _flat_csv(payload))
    else:
        text = dumps_json(payload)
    if args.out:
        atomic_write(args.out, text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _generators_csv(K) -> str:
    header = [f"x{k + 1}" for k in range(K.dim)] + ["weight"]
    return _table_csv(header, [list(map(float, g)) + [float(w)] for g, w in zip(K.generators, K.weights)])


def _polygon_csv(P) -> str:
    return _table_csv(["x", "y"], [list(map(float, v)) for v in P.vertices])


# commands


def cmd_validate(args):
    d = read_json(args.input)
    if "vertices" in d and "generators" not in d:
        P = polygon_from_dict(d)
        hull = convex_hull_2d(P.vertices, tol=args.tol)
        K = generators_from_polytope(hull)
        out = {"kind": "polygon", "n_vertices": len(hull), "centrally_symmetric": True,
               "n_generators": len(K), "rank": K.dim}
    else:
        K = generator_set_from_dict(d)
        merged = K.as_half().merged()
        out = {"kind": "generator-set", "dim": K.dim, "n_generators": len(K),
               "n_parallel_classes": len(merged), "rank": int(np.linalg.matrix_rank(K.generators)),
               "complete": True}
    print(f"generators: {out['n_generators']}  rank: {out['rank']}", file=sys.stderr)
    out["meta"] = _meta(args)
    _emit(args, out)


def cmd_dual_ball(args):
    K = generator_set_from_dict(read_json(args.input))
    P = dual_ball(K)
    _emit(args, {**polygon_to_dict(P), "meta": _meta(args)}, _polygon_csv(P))


def cmd_generators(args):
    P = polygon_from_dict(read_json(args.input))
    K = generators_from_polytope(P)
    _emit(args, {**generator_set_to_dict(K), "meta": _meta(args)}, _generators_csv(K))


def cmd_incarnate(args):
    d = read_json(args.input)
    if "basis" not in d or "ambient_p" not in d:
        raise ValidationError("incarnation input needs 'ambient_p' and 'basis'")
    basis = np.array(d["basis"], dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    N = int(d.get("ambient_dim", basis.shape[0]))
    p = math.inf if str(d["ambient_p"]).lower() == "inf" else float(d["ambient_p"])
    R = besselian_incarnate(p, N, basis, symmetrize=bool(d.get("symmetrize", False)))
    K = R.subspace
    out = {**generator_set_to_dict(K), "triple_norm_budget": triple_norm_budget(R),
           "evaluation_basis": R.evaluation_basis, "meta": _meta(args)}
    _emit(args, out, _generators_csv(K))


def _verification(args, v, a):
    rep = verify_amalgam(v, a, samples=args.samples, seed=args.seed, tol=args.tol)
    log.info("max isometry error %.3g, commuting error %.3g", rep["max_isometry_error"], rep["commuting_error"])
    if not rep["passed"]:
        raise ValidationError(f"amalgam verification failed: {rep}")
    return rep


def cmd_amalgamate(args):
    v = vformation_from_dict(read_json(args.input))
    a = amalgamate(v)
    out = amalgam_to_dict(a)
    if args.verify:
        out["verification"] = _verification(args, v, a)
    out["meta"] = _meta(args, samples=args.samples if args.verify else None)
    _emit(args, out, _generators_csv(a.K_W))


def cmd_verify(args):
    v = vformation_from_dict(read_json(args.vformation))
    a = amalgam_from_dict(read_json(args.amalgam))
    rep = verify_amalgam(v, a, samples=args.samples, seed=args.seed, tol=args.tol)
    _emit(args, {**rep, "meta": _meta(args)})
    if not rep["passed"]:
        raise ValidationError("amalgam verification failed")


def cmd_ample_check(args):
    chosen = [x is not None for x in (args.g1, args.g2, args.input)]
    if sum(chosen) != 1:
        raise UsageError("give exactly one of --g1 N, --g2 N or a group file")
    if args.g1 is not None:
        G, name = make_G1(args.g1), f"G1({args.g1})"
    elif args.g2 is not None:
        G, name = make_G2(args.g2), f"G2({args.g2})"
    else:
        G, name = group_from_dict(read_json(args.input)), str(args.input)
    dev = ample_deviation(G)
    out = {"group": name, "n": G.n, "order": len(G), "ample": is_ample(G, args.tol),
           "deviation": dev, "commutant_dim": commutant_dim(G), "meta": _meta(args)}
    _emit(args, out)


def cmd_proj_const(args):
    K = generator_set_from_dict(read_json(args.input))
    G = group_from_dict(read_json(args.group)) if args.group else symmetry_group(K)
    r = projection_constant(K, p=args.p, G=G, grid_points=args.grid, angle_tol=args.angle_tol)
    out = {**r.to_dict(), "meta": _meta(args)}
    _emit(args, out)


def cmd_counterexample(args):
    if args.p is None or args.p != int(args.p) or int(args.p) % 2:
        raise UsageError("--p must be an even integer (2n)")
    n = int(args.p) // 2
    rep = counterexample_report(n, args.m_max, out_path=None, p=args.force_p, seed=args.seed,
                                angle_tol=args.angle_tol)
    rep["meta"] = _meta(args)
    if args.format == "csv":
        _emit(args, rep, report_csv(rep))
    else:
        _emit(args, rep)
        if args.out:
            base = args.out[:-5] if args.out.endswith(".json") else args.out
            atomic_write(base + ".csv", report_csv(rep))
    log.info("strict_inequality_found=%s", rep["strict_inequality_found"])


def cmd_cantor(args):
    P = cantor_ball(args.depth)
    _emit(args, {**polygon_to_dict(P), "depth": args.depth, "meta": _meta(args)}, _polygon_csv(P))


def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive, default=ATOL, help="absolute tolerance (default 1e-9)")
    common.add_argument("--angle-tol", type=_positive, default=1e-10, help="angle refinement tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="count", default=0)

    ap = _Parser(prog="amalgam-lab", description="Incarnating sets, amalgams and projection constants.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    add("validate", cmd_validate, "check a generator set or polygon file").add_argument("input")
    add("dual-ball", cmd_dual_ball, "zonotope dual ball of a planar generator set").add_argument("input")
    add("generators", cmd_generators, "generators of a centrally symmetric polygon").add_argument("input")
    add("incarnate", cmd_incarnate, "Besselian incarnation of a subspace of l_p^N").add_argument("input")
    p = add("amalgamate", cmd_amalgamate, "amalgam of an l_1 V-formation")
    p.add_argument("input")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--samples", type=int, default=1000)
    p = add("verify", cmd_verify, "verify an amalgam against its V-formation")
    p.add_argument("vformation")
    p.add_argument("amalgam")
    p.add_argument("--samples", type=int, default=1000)
    p = add("ample-check", cmd_ample_check, "ample test and commutant dimension of a group")
    p.add_argument("input", nargs="?")
    p.add_argument("--g1", type=int)
    p.add_argument("--g2", type=int)
    p = add("proj-const", cmd_proj_const, "relative projection constant of a planar subspace")
    p.add_argument("input")
    p.add_argument("--p", type=float)
    p.add_argument("--group", help="group file (default: symmetry group of the set)")
    p.add_argument("--grid", type=int, default=4096)
    p = add("counterexample", cmd_counterexample, "projection constants of rotated polygon unions")
    p.add_argument("--p", type=float, required=True, help="ambient exponent 2n")
    p.add_argument("--m-max", type=int, default=4)
    p.add_argument("--force-p", type=float, help="evaluate the constants at this p instead")
    add("cantor", cmd_cantor, "polygon spanned by a Cantor set on the circle").add_argument(
        "--depth", type=int, default=3
    )
    return ap


def _fail(code: str, msg, status: int) -> int:
    line = " ".join(str(msg).split())
    print(f"ERROR:{code}:{line}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.command is None:
            ap.print_usage(sys.stderr)
            raise UsageError("no command given")
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s")
        args.func(args)
    except UsageError as e:
        return _fail("usage", e, 1)
    except AmalgamLabError as e:
        return _fail(e.code, e, 2)
    except OSError as e:
        return _fail("io", e, 1)
    except (KeyError, TypeError, ValueError) as e:
        return _fail("input", e, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
