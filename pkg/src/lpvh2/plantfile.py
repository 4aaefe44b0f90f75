"""Loading and strict validation of JSON plant definition files.

Schema (all matrices are row-major nested lists of finite numbers):

    {
      "name": "optional string",
      "polytope": {"kind": "box", "lower": [..], "upper": [..]}
                | {"kind": "vertices", "vertices": [[..], ..]},

      // affine form P(xi) = base + sum_k xi_k coefficients[k]:
      "base":         {"A": [[..]], "Bw": [[..]], "B": [[..]],
                       "C": [[..]], "D": [[..]], "E": [[..]]},
      "coefficients": [ {six matrices}, .. ],   // exactly one per parameter

      // OR direct form (one LTI system per polytope vertex):
      "vertices":     [ {six matrices}, .. ]
    }

Exactly one of the two forms must be present. Unknown keys are rejected.
Errors carry `path:line:` prefixes; for semantic errors the line is the
best-effort location of the offending key in the file.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, PlantFileError
from .lpv import LpvVertexSystem, ParameterPolytope, PolytopicLpvPlant

_MATRIX_KEYS = ("A", "Bw", "B", "C", "D", "E")
_TOP_KEYS = {"name", "polytope", "base", "coefficients", "vertices"}


def _key_line(text: str, *keys: str) -> int | None:
    """Best-effort line of the last key along a key path (1-based)."""
    pos = 0
    found = None
    for key in keys:
        hit = text.find(f'"{key}"', pos)
        if hit < 0:
            break
        found = hit
        pos = hit + 1
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


class _Context:
    def __init__(self, path: Path, text: str):
        self.path = path
        self.text = text

    def fail(self, message: str, *keys: str):
        line = _key_line(self.text, *keys) if keys else None
        loc = f"{self.path}:{line}" if line is not None else str(self.path)
        raise PlantFileError(f"{loc}: {message}")


def _as_matrix(ctx: _Context, value, *keys: str) -> np.ndarray:
    name = keys[-1] if keys else "matrix"
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        ctx.fail(f'matrix "{name}" must be a non-empty list of rows', *keys)
    width = len(value[0])
    if width == 0 or any(len(r) != width for r in value):
        ctx.fail(f'matrix "{name}" rows must be non-empty and of equal length', *keys)
    for row in value:
        for x in row:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                ctx.fail(f'matrix "{name}" entries must be numbers', *keys)
    arr = np.array(value, dtype=float)
    if not np.isfinite(arr).all():
        ctx.fail(f'matrix "{name}" entries must be finite', *keys)
    return arr


def _as_vector(ctx: _Context, value, *keys: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        ctx.fail("expected a non-empty list of numbers", *keys)
    for x in value:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            ctx.fail("entries must be numbers", *keys)
    arr = np.array(value, dtype=float)
    if not np.isfinite(arr).all():
        ctx.fail("entries must be finite", *keys)
    return arr


def _as_system(ctx: _Context, value, *keys: str) -> LpvVertexSystem:
    if not isinstance(value, dict):
        ctx.fail("expected an object with the six system matrices", *keys)
    extra = set(value) - set(_MATRIX_KEYS)
    if extra:
        ctx.fail(f"unknown matrix keys {sorted(extra)}", *keys, sorted(extra)[0])
    missing = [k for k in _MATRIX_KEYS if k not in value]
    if missing:
        ctx.fail(f"missing matrices {missing}", *keys)
    mats = {k: _as_matrix(ctx, value[k], *keys, k) for k in _MATRIX_KEYS}
    try:
        return LpvVertexSystem(**mats)
    except DimensionMismatch as exc:
        ctx.fail(str(exc), *keys)


def _parse_polytope(ctx: _Context, value) -> ParameterPolytope:
    if not isinstance(value, dict):
        ctx.fail("polytope must be an object", "polytope")
    kind = value.get("kind")
    if kind == "box":
        extra = set(value) - {"kind", "lower", "upper"}
        if extra:
            ctx.fail(f"unknown polytope keys {sorted(extra)}", "polytope")
        if "lower" not in value or "upper" not in value:
            ctx.fail("box polytope requires 'lower' and 'upper'", "polytope")
        lo = _as_vector(ctx, value["lower"], "polytope", "lower")
        hi = _as_vector(ctx, value["upper"], "polytope", "upper")
        if lo.shape != hi.shape:
            ctx.fail("lower and upper must have the same length", "polytope", "upper")
        if np.any(lo > hi):
            ctx.fail("lower bounds must not exceed upper bounds", "polytope", "lower")
        try:
            return ParameterPolytope.box(lo, hi)
        except (ValueError, DimensionMismatch) as exc:
            ctx.fail(str(exc), "polytope")
    elif kind == "vertices":
        extra = set(value) - {"kind", "vertices"}
        if extra:
            ctx.fail(f"unknown polytope keys {sorted(extra)}", "polytope")
        if "vertices" not in value:
            ctx.fail("vertex polytope requires 'vertices'", "polytope")
        raw = value["vertices"]
        if not isinstance(raw, list) or not raw or not all(isinstance(v, list) for v in raw):
            ctx.fail("polytope vertices must be a list of parameter vectors", "polytope", "vertices")
        rows = [_as_vector(ctx, v, "polytope", "vertices") for v in raw]
        if any(r.shape != rows[0].shape for r in rows):
            ctx.fail("all polytope vertices must have the same length", "polytope", "vertices")
        try:
            return ParameterPolytope.from_vertices(np.vstack(rows))
        except (ValueError, DimensionMismatch) as exc:
            ctx.fail(str(exc), "polytope")
    else:
        ctx.fail("polytope kind must be 'box' or 'vertices'", "polytope")


def load_plant(path) -> PolytopicLpvPlant:
    """Parse and validate a plant definition file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise PlantFileError(f"{path}: cannot read plant file ({exc})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlantFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    ctx = _Context(path, text)
    if not isinstance(doc, dict):
        ctx.fail("top level must be an object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        ctx.fail(f"unknown top-level keys {sorted(extra)}", sorted(extra)[0])

    name = doc.get("name", "")
    if not isinstance(name, str):
        ctx.fail("name must be a string", "name")
    if "polytope" not in doc:
        ctx.fail("missing 'polytope'")
    polytope = _parse_polytope(ctx, doc["polytope"])

    has_affine = "base" in doc
    has_direct = "vertices" in doc
    if has_affine == has_direct:
        ctx.fail("exactly one of 'base'+'coefficients' (affine) or 'vertices' (direct) is required")

    if has_affine:
        base = _as_system(ctx, doc["base"], "base")
        raw_coeffs = doc.get("coefficients", [])
        if not isinstance(raw_coeffs, list):
            ctx.fail("coefficients must be a list of matrix objects", "coefficients")
        if len(raw_coeffs) != polytope.n_params:
            ctx.fail(
                f"expected {polytope.n_params} coefficient blocks (one per parameter), "
                f"got {len(raw_coeffs)}",
                "coefficients",
            )
        coeffs = tuple(_as_system(ctx, c, "coefficients") for c in raw_coeffs)
        try:
            return PolytopicLpvPlant(polytope, base=base, coefficients=coeffs, name=name)
        except (ValueError, DimensionMismatch) as exc:
            ctx.fail(str(exc), "base")
    else:
        raw_systems = doc["vertices"]
        if not isinstance(raw_systems, list):
            ctx.fail("vertices must be a list of matrix objects", "vertices")
        if len(raw_systems) != polytope.n_vertices:
            ctx.fail(
                f"expected {polytope.n_vertices} vertex systems to match the polytope, "
                f"got {len(raw_systems)}",
                "vertices",
            )
        systems = tuple(_as_system(ctx, s, "vertices") for s in raw_systems)
        try:
            return PolytopicLpvPlant(polytope, vertex_systems=systems, name=name)
        except (ValueError, DimensionMismatch) as exc:
            ctx.fail(str(exc), "vertices")
