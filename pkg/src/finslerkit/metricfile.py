"""Metric definition files (schema ``finsler-metric/v1``).

A metric file is a JSON object::

    {
      "schema": "finsler-metric/v1",
      "variant": "warped",            # riemannian | randers | warped
      "dimension": 2,
      "C": 1.0,                       # warped only
      "warp": "sine",                 # warped only: sine | linear
      "pole_margin": 0.05,            # warped only, optional
      "fiber": {"variant": "riemannian", "dimension": 1, "a_matrix": [[1.0]]},
      "chart_domain": [[0.05, 3.09]]  # optional; for warped, the t interval only
    }

Riemannian and Randers entries take ``a_matrix`` (constant part of a_ij),
an optional Gaussian ``a_bump`` {amplitude, center, width, matrix} added to
it, and (Randers) a constant ``b_covector``.  Nested fibers omit ``schema``.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import jsonschema

from .errors import InvalidMetricError, SchemaError
from .metrics import Bump, MetricSpec, Randers, Riemannian, Warped

METRIC_SCHEMA_ID = "finsler-metric/v1"

_NUM = {"type": "number"}
_VECTOR = {"type": "array", "items": _NUM, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}
_INTERVAL = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

METRIC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": METRIC_SCHEMA_ID,
    "$ref": "#/$defs/metric",
    "required": ["schema"],
    "properties": {"schema": {"const": METRIC_SCHEMA_ID}},
    "$defs": {
        "bump": {
            "type": "object",
            "required": ["amplitude", "center", "width", "matrix"],
            "additionalProperties": False,
            "properties": {
                "amplitude": _NUM,
                "center": _VECTOR,
                "width": {"type": "number", "exclusiveMinimum": 0},
                "matrix": _MATRIX,
            },
        },
        "metric": {
            "type": "object",
            "required": ["variant", "dimension"],
            "additionalProperties": False,
            "properties": {
                "schema": {"type": "string"},
                "variant": {"enum": ["riemannian", "randers", "warped"]},
                "dimension": {"type": "integer", "minimum": 1},
                "a_matrix": _MATRIX,
                "a_bump": {"$ref": "#/$defs/bump"},
                "b_covector": _VECTOR,
                "C": {"type": "number", "exclusiveMinimum": 0},
                "warp": {"enum": ["sine", "linear"]},
                "pole_margin": {"type": "number", "exclusiveMinimum": 0},
                "fiber": {"$ref": "#/$defs/metric"},
                "chart_domain": {"oneOf": [{"type": "null"}, {"type": "array", "items": _INTERVAL}]},
            },
            "allOf": [
                {
                    "if": {"properties": {"variant": {"const": "warped"}}},
                    "then": {
                        "required": ["C", "fiber"],
                        "not": {"anyOf": [{"required": ["a_matrix"]}, {"required": ["b_covector"]}, {"required": ["a_bump"]}]},
                    },
                },
                {
                    "if": {"properties": {"variant": {"const": "riemannian"}}},
                    "then": {
                        "required": ["a_matrix"],
                        "not": {"anyOf": [{"required": ["C"]}, {"required": ["fiber"]}, {"required": ["b_covector"]}]},
                    },
                },
                {
                    "if": {"properties": {"variant": {"const": "randers"}}},
                    "then": {
                        "required": ["a_matrix", "b_covector"],
                        "not": {"anyOf": [{"required": ["C"]}, {"required": ["fiber"]}]},
                    },
                },
            ],
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(METRIC_SCHEMA)


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate_metric_dict(doc) -> None:
    """Raise :class:`SchemaError` naming the offending field, if any."""
    err = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(doc))
    if err is not None:
        raise SchemaError(f"{_path(err.absolute_path)}: {err.message}")


def _build(d: dict, where: str) -> MetricSpec:
    variant = d["variant"]
    dim = d["dimension"]
    try:
        if variant == "warped":
            fiber = _build(d["fiber"], where + ".fiber")
            if fiber.dimension != dim - 1:
                raise SchemaError(
                    f"{where}.fiber: dimension {fiber.dimension} but a {dim}-dimensional warped metric needs {dim - 1}"
                )
            t_domain = None
            if d.get("chart_domain") is not None:
                if len(d["chart_domain"]) != 1:
                    raise SchemaError(f"{where}.chart_domain: a warped metric takes the t interval only")
                t_domain = tuple(d["chart_domain"][0])
            kw = {}
            if "pole_margin" in d:
                kw["pole_margin"] = d["pole_margin"]
            return Warped(C=d["C"], fiber=fiber, warp=d.get("warp", "sine"), t_domain=t_domain, **kw)
        bump = None
        if "a_bump" in d:
            b = d["a_bump"]
            bump = Bump(float(b["amplitude"]), tuple(b["center"]), float(b["width"]), tuple(map(tuple, b["matrix"])))
        common = dict(a_matrix=d["a_matrix"], a_bump=bump, dimension=dim, chart_domain=d.get("chart_domain"))
        if variant == "randers":
            return Randers(b_covector=d["b_covector"], **common)
        return Riemannian(**common)
    except (SchemaError, InvalidMetricError):
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def metric_from_dict(doc: dict) -> MetricSpec:
    validate_metric_dict(doc)
    spec = _build(doc, "$")
    if spec.dimension < 2:
        raise SchemaError("$.dimension: top-level metrics need dimension >= 2")
    return spec


def metric_to_dict(spec: MetricSpec) -> dict:
    d = spec.to_dict()
    d["schema"] = METRIC_SCHEMA_ID
    return d


def loads_metric(text: str) -> MetricSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return metric_from_dict(doc)


def fingerprint(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def load_metric(path) -> tuple:
    """Read a metric file; returns ``(spec, fingerprint)``.

    The fingerprint hashes the raw file bytes, so reformatting the file
    changes it.
    """
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not UTF-8 text ({exc})") from exc
    try:
        spec = loads_metric(text)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    return spec, fingerprint(raw)


def dump_metric(spec: MetricSpec, path) -> None:
    Path(path).write_text(json.dumps(metric_to_dict(spec), indent=2, sort_keys=True) + "\n")


def fixture_names() -> list:
    """Names of the bundled fixture metrics (file stems)."""
    from importlib import resources

    return sorted(p.name[:-5] for p in resources.files("finslerkit.fixtures").iterdir() if p.name.endswith(".json"))


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture, e.g. ``fixture_path("sphere_c1")``."""
    from importlib import resources

    p = resources.files("finslerkit.fixtures") / f"{name}.json"
    if not p.is_file():
        raise FileNotFoundError(f"no bundled fixture {name!r}; available: {', '.join(fixture_names())}")
    return Path(str(p))
