"""JSON formats for polytopes, orbits and capacity results.

Polytope files keep full float precision so load and emit round-trip
exactly.  Result and orbit documents round numbers to 12 significant digits.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .geometry import HPolytope, Hyperplane, SymplecticContext

DIGITS = 12


def _num(x) -> float:
    # adding 0.0 turns -0.0 into 0.0
    return float(f"{float(x):.{DIGITS}g}") + 0.0


def _vec(v) -> list:
    return [_num(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def polytope_to_dict(K: HPolytope) -> dict:
    return {
        "dim": K.dim,
        "facets": [
            {"normal": [float(x) + 0.0 for x in n], "height": float(h) + 0.0} for n, h in zip(K.normals, K.heights)
        ],
    }


def polytope_from_dict(doc: dict) -> HPolytope:
    try:
        dim = int(doc["dim"])
        facets = doc["facets"]
        normals = [[float(x) for x in f["normal"]] for f in facets]
        heights = [float(f["height"]) for f in facets]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed polytope document: {exc}") from exc
    if dim < 2 or dim % 2:
        raise DimensionMismatch(f"dimension must be even and positive, got {dim}")
    if not facets:
        raise ValidationError("polytope has no facets")
    if any(len(n) != dim for n in normals):
        raise DimensionMismatch(f"every normal must have length {dim}")
    return HPolytope(SymplecticContext(dim // 2), np.array(normals), np.array(heights))


def dumps(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def load_polytope(path) -> HPolytope:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read polytope file {path}: {exc}") from exc
    return polytope_from_dict(doc)


def save_polytope(K: HPolytope, path) -> None:
    Path(path).write_text(dumps(polytope_to_dict(K)))


def load_cuts(path) -> list[Hyperplane]:
    """Hyperplanes from ``{"cuts": [{"normal": [...], "offset": c}, ...]}``.

    Normals are rescaled to unit length together with their offsets.
    """
    try:
        doc = json.loads(Path(path).read_text())
        cuts = []
        for c in doc["cuts"]:
            n = np.asarray(c["normal"], dtype=float)
            s = float(np.linalg.norm(n))
            cuts.append(Hyperplane(n / s, float(c["offset"]) / s))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot read cut file {path}: {exc}") from exc
    return cuts


def orbit_to_dict(cert) -> dict:
    loop = cert.loop
    return {
        "start": _vec(loop.start),
        "segments": [{"velocity": _vec(w), "duration": _num(T)} for w, T in loop.segments],
        "action": _num(cert.action),
    }


def result_to_dict(result, timing: bool = False) -> dict:
    """Capacity result document; timings are left out unless asked for."""
    diag = {k: v for k, v in result.diagnostics.items() if timing or k != "seconds"}
    diag = {k: (_num(v) if isinstance(v, float) else v) for k, v in diag.items()}
    diag["permutations_examined"] = int(result.permutations_examined)
    return {
        "capacity": _num(result.capacity),
        "sigma": [int(i) for i in result.best.sigma],
        "beta": _vec(result.best.beta),
        "objective": _num(result.best.objective),
        "orbit": orbit_to_dict(result.orbit) if result.orbit is not None else None,
        "mode": result.mode.value,
        "certified": bool(result.certified),
        "diagnostics": diag,
    }
