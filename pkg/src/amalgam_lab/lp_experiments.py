"""Regular-polygon planes in l_{2n} and their projection constants.

The regular (2n+2)-gon with unit vertices incarnates a Euclidean plane in
l_{2n}.  Unions of rotated copies incarnate isometric Euclidean planes, yet
their relative projection constants differ, so two isometric subspaces sit
inside l_{2n} in non-equivalent ways.

All norms use the full-set convention: sums run over every point of the
symmetric set, which for the hexagon in l_4 gives ``c = 9/4``.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .geometry import ATOL, orient
from .incarnation import IncarnatingSet, make_incarnating_set, subspace_norm
from .symmetry import LambdaReport, projection_constant, symmetry_group

EUCLID_SPREAD_TOL = 1e-10
EUCLID_DIRECTIONS = 720
STRICT_MARGIN = 1e-4


@dataclass(frozen=True)
class PolygonFamily:
    """``m`` rotated copies of the regular (2n+2)-gon, ambient p = 2n."""

    n: int
    m: int
    points: IncarnatingSet = field(repr=False)

    @property
    def p(self) -> float:
        return 2.0 * self.n

    @property
    def half_count(self) -> float:
        """Half-set size counted with multiplicity."""
        return float(self.points.weights.sum())


def _polygon_angles(n: int) -> np.ndarray:
    return np.arange(n + 1) * math.pi / (n + 1)


def _check_n(n) -> int:
    if int(n) != n or n < 2:
        raise ValidationError("polygon families need an integer n >= 2")
    return int(n)


def polygon_K(n: int) -> PolygonFamily:
    """Half-set of the regular (2n+2)-gon: angles k*pi/(n+1), k = 0..n."""
    return rotated_union(n, 1)


def rotated_union(n: int, m: int) -> PolygonFamily:
    """Union of the copies rotated by pi*i/(n*m), i = 0..m-1.

    Copies that land on existing antipodal pairs are merged and the
    multiplicity is kept as a weight, so the norm still scales by m.
    """
    n = _check_n(n)
    if int(m) != m or m < 1:
        raise ValidationError("m must be a positive integer")
    m = int(m)
    base = _polygon_angles(n)
    angles = (base[None, :] + math.pi * np.arange(m)[:, None] / (n * m)).ravel()
    pts = np.array([orient(v) for v in np.c_[np.cos(angles), np.sin(angles)]])
    keys = np.round(pts, 9) + 0.0
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    first = np.array([np.flatnonzero(inverse.ravel() == j)[0] for j in range(len(uniq))])
    K = make_incarnating_set(2, pts[first], ambient_p=2 * n, weights=counts.astype(float))
    return PolygonFamily(n, m, K)


def euclidean_check(F, directions: int = EUCLID_DIRECTIONS):
    """Test whether the induced norm is a multiple of the Euclidean norm.

    Returns ``(is_euclidean, c, spread)`` where ``c`` is the constant with
    ``||u||^p = c |u|_2^p`` and ``spread = max/min - 1`` of the norm ratio.
    """
    K = F.points if isinstance(F, PolygonFamily) else F
    th = np.arange(directions) * math.pi / directions
    u = np.c_[np.cos(th), np.sin(th)]
    r = subspace_norm(K, u)
    spread = float(r.max() / r.min() - 1.0)
    c = float(np.mean(r ** K.ambient_p))
    return spread < EUCLID_SPREAD_TOL, c, spread


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("AMALGAM_LAB_THREADS", "1")))
    except ValueError:
        return 1


def lambda_curve(n: int, m_list, p=None, grid_points: int = 4096, angle_tol: float = 1e-10) -> list[LambdaReport]:
    """Projection constants of the rotated unions for each m (p defaults to 2n)."""
    n = _check_n(n)
    m_list = [int(m) for m in m_list]

    def one(m):
        F = rotated_union(n, m)
        G = symmetry_group(F.points)
        return projection_constant(F.points, p=2 * n if p is None else p, G=G,
                                   grid_points=grid_points, angle_tol=angle_tol)

    workers = min(_threads(), max(1, len(m_list)))
    if workers == 1:
        return [one(m) for m in m_list]
    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(one, m_list))


def norm_comparison_4_3(n: int = 2):
    """l_{4/3} norms on the hexagon of a vertex direction and of the diagonal.

    Returns ``(a, b, strict)`` with ``a`` at angle pi/3, ``b`` at pi/4 and
    ``strict = a > b + 1e-6``.
    """
    if n != 2:
        raise ValidationError("the l_{4/3} comparison is defined for the hexagon (n = 2)")
    K = polygon_K(2).points
    a = subspace_norm(K, [0.5, math.sqrt(3) / 2], p=4 / 3)
    b = subspace_norm(K, [math.sqrt(2) / 2, math.sqrt(2) / 2], p=4 / 3)
    return a, b, bool(a > b + 1e-6)


def _version() -> str:
    from . import __version__

    return __version__


def counterexample_report(n: int, m_max: int, out_path=None, p=None, seed: int = 0,
                          grid_points: int = 4096, angle_tol: float = 1e-10) -> dict:
    """Tabulate lambda and Euclidean constants for m = 1..m_max.

    ``strict_inequality_found`` is true when some ``lambda_m`` drops below
    ``lambda_1 - 1e-4``; since every plane here is Euclidean, the planes are
    isometric and a gap shows they are positioned inequivalently.  When
    ``out_path`` is given the JSON report and a CSV mirror (same stem,
    ``.csv``) are written atomically.
    """
    n = _check_n(n)
    if n not in (2, 3, 4):
        raise ValidationError("counterexample reports support n in {2, 3, 4}")
    if not 1 <= int(m_max) <= 16:
        raise ValidationError("m_max must lie in 1..16")
    ms = list(range(1, int(m_max) + 1))
    pp = 2.0 * n if p is None else float(p)
    reports = lambda_curve(n, ms, p=pp, grid_points=grid_points, angle_tol=angle_tol)
    rows = []
    for m, r in zip(ms, reports):
        F = rotated_union(n, m)
        is_e, c, spread = euclidean_check(F)
        rows.append({"m": m, "lambda": r.lam, "euclid_c": c, "is_euclidean": is_e,
                     "euclid_spread": spread, "half_count": F.half_count})
    lam1 = rows[0]["lambda"]
    comparison = None
    if n == 2:
        a, b, strict = norm_comparison_4_3(2)
        comparison = {"a": a, "b": b, "strict": strict}
    report = {
        "p": pp,
        "n": n,
        "rows": rows,
        "norm_comparison": comparison,
        "isometric_premise": all(r["is_euclidean"] for r in rows),
        "strict_inequality_found": any(r["lambda"] < lam1 - STRICT_MARGIN for r in rows[1:]),
        "tolerances": {"strict_margin": STRICT_MARGIN, "euclid_spread": EUCLID_SPREAD_TOL,
                       "angle_tol": angle_tol, "grid_points": grid_points, "atol": ATOL},
        "seed": seed,
        "version": _version(),
    }
    if out_path is not None:
        from .io import atomic_write, dumps_json

        atomic_write(out_path, dumps_json(report))
        atomic_write(os.path.splitext(os.fspath(out_path))[0] + ".csv", report_csv(report))
    return report


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "lambda", "euclid_c"])
    for r in report["rows"]:
        w.writerow([r["m"], f"{r['lambda']:.12g}", f"{r['euclid_c']:.12g}"])
    return buf.getvalue()
