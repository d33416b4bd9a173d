"""JSON file formats and deterministic serialization.

Floats are written with 17 significant digits (exact round trip), CSV cells
with 12.  ``ambient_p`` may be the string ``"inf"``.  Files are written to a
temporary sibling and renamed into place.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .amalgam import AmalgamResult, VFormation
from .exceptions import ValidationError
from .geometry import Polytope2D
from .incarnation import IncarnatingSet, make_incarnating_set
from .symmetry import FiniteOrthogonalGroup, LambdaReport


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def _plain(obj):
    """Convert numpy containers and scalars to plain Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) + 0.0  # no negative zeros
    return obj


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


def dumps_json(obj, indent: int = 2) -> str:
    """Deterministic JSON text with 17-digit floats and a trailing newline."""
    return _encode(_plain(obj), indent, 0) + "\n"


def atomic_write(path, text: str):
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None


def _need(d: dict, key: str, what: str):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f"{what} is missing field {key!r}")
    return d[key]


def _p_from_json(p):
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        raise ValidationError(f"ambient_p must be a number or 'inf', got {p!r}")
    return float(p)


def _p_to_json(p):
    return "inf" if math.isinf(p) else p


def _matrix(a, what: str) -> np.ndarray:
    try:
        m = np.array(a, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} must be a numeric matrix") from None
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or not np.all(np.isfinite(m)):
        raise ValidationError(f"{what} must be a finite 2-D matrix")
    return m


# generator sets


def generator_set_to_dict(K: IncarnatingSet) -> dict:
    d = {
        "dim": K.dim,
        "ambient_p": _p_to_json(K.ambient_p),
        "convention": K.convention,
        "generators": K.generators,
    }
    if not np.all(K.weights == 1.0):
        d["weights"] = K.weights
    return d


def generator_set_from_dict(d: dict) -> IncarnatingSet:
    dim = _need(d, "dim", "generator set")
    gens = _need(d, "generators", "generator set")
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise ValidationError("dim must be an integer")
    return make_incarnating_set(
        dim,
        np.array(gens, dtype=float) if len(gens) else np.zeros((0, dim)),
        _p_from_json(d.get("ambient_p", 1)),
        d.get("weights"),
        d.get("convention", "half"),
    )


# polygons


def polygon_to_dict(P: Polytope2D) -> dict:
    return {"vertices": P.vertices}


def polygon_from_dict(d: dict) -> Polytope2D:
    return Polytope2D(_matrix(_need(d, "vertices", "polygon"), "vertices"))


# V-formations and amalgams


def vformation_to_dict(v: VFormation) -> dict:
    return {
        "root_dim": v.root_dim,
        "K_Y": generator_set_to_dict(v.K_Y),
        "K_Z": generator_set_to_dict(v.K_Z),
        "i_Y": v.i_Y,
        "i_Z": v.i_Z,
    }


def vformation_from_dict(d: dict) -> VFormation:
    return VFormation(
        int(_need(d, "root_dim", "V-formation")),
        generator_set_from_dict(_need(d, "K_Y", "V-formation")),
        generator_set_from_dict(_need(d, "K_Z", "V-formation")),
        _matrix(_need(d, "i_Y", "V-formation"), "i_Y"),
        _matrix(_need(d, "i_Z", "V-formation"), "i_Z"),
    )


def amalgam_to_dict(a: AmalgamResult) -> dict:
    d = generator_set_to_dict(a.K_W)
    d.update({"j_Y": a.j_Y, "j_Z": a.j_Z, "report": a.report})
    return d


def amalgam_from_dict(d: dict) -> AmalgamResult:
    return AmalgamResult(
        generator_set_from_dict(d),
        _matrix(_need(d, "j_Y", "amalgam"), "j_Y"),
        _matrix(_need(d, "j_Z", "amalgam"), "j_Z"),
        dict(d.get("report", {})),
    )


# groups and reports


def group_to_dict(G: FiniteOrthogonalGroup) -> dict:
    return {"n": G.n, "elements": G.elements}


def group_from_dict(d: dict) -> FiniteOrthogonalGroup:
    n = int(_need(d, "n", "group"))
    el = np.array(_need(d, "elements", "group"), dtype=float)
    if el.ndim != 3 or el.shape[1:] != (n, n):
        raise ValidationError(f"group elements must be {n}x{n} matrices")
    return FiniteOrthogonalGroup(n, el)


def lambda_report_to_dict(r: LambdaReport) -> dict:
    return r.to_dict()


def lambda_report_from_dict(d: dict) -> LambdaReport:
    return LambdaReport(
        lam=float(d["lambda"]),
        mu_coefficients=list(d["mu_coefficients"]),
        worst_direction=list(d["worst_direction"]),
        grid_points=int(d["grid_points"]),
        refinement_iters=int(d["refinement_iters"]),
        convention=d["convention"],
        p=float(d.get("p", math.nan)),
        basis_dim=int(d.get("basis_dim", 1)),
        group_order=int(d.get("group_order", 0)),
        grid_value=float(d.get("grid_value", math.nan)),
        refinement_delta=float(d.get("refinement_delta", 0.0)),
        optimizer_evaluations=int(d.get("optimizer_evaluations", 0)),
    )


def write_json(path, obj):
    atomic_write(path, dumps_json(obj))
