"""JSON documents: envelope, schemas, canonical serialization and decoding.

Every file is ``{"kind": ..., "version": 1, "payload": {...}}``.  Parsing
checks the envelope, then the payload schema; semantic checks (weights,
duals, fairness, ...) are left to the library validators.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Iterable

import jsonschema
import numpy as np

from .diagrams import Diagram, GammaPath, Morphism2
from .errors import TLJError
from .fair import FairEdge, FairGraph, FairVertex
from .graph import BiGraph, Edge
from .report import ValidationReport
from .solution import FundamentalSolution

VERSION = 1
KINDS = ("gamma", "fair_graph", "solution", "morphism2", "report", "witness")


class DocumentError(TLJError):
    """A file could not be read as a document; ``code`` names the stage that failed."""

    def __init__(self, code: str, path: str, message: str):
        super().__init__(f"{code} at {path}: {message}")
        self.code = code
        self.path = path
        self.message = message


@dataclass(frozen=True)
class Document:
    kind: str
    version: int
    payload: Any


# -- schemas ---------------------------------------------------------------------

_ID = {"type": "string", "minLength": 1}
_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _COMPLEX}}
_GAMMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["vertices", "edges"],
    "properties": {
        "vertices": {"type": "array", "items": _ID},
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "source", "target", "weight", "dual"],
                "properties": {
                    "id": _ID, "source": _ID, "target": _ID, "weight": {"type": "number"}, "dual": _ID,
                },
            },
        },
    },
}
_GAMMA_REF = {"oneOf": [_GAMMA, {"type": "string", "minLength": 1}]}
_PATH = {
    "type": "object",
    "additionalProperties": False,
    "required": ["edges", "at"],
    "properties": {"edges": {"type": "array", "items": _ID}, "at": _ID},
}
_POINT = {
    "type": "array",
    "prefixItems": [{"enum": ["bottom", "top"]}, {"type": "integer", "minimum": 0}],
    "items": False,
    "minItems": 2,
}
_MORPHISM_BODY = {
    "bottom": _PATH,
    "top": _PATH,
    "terms": {
        "type": "array",
        "items": {
            "type": "object",
            "additionalProperties": False,
            "required": ["coeff", "arcs"],
            "properties": {
                "coeff": _COMPLEX,
                "arcs": {"type": "array", "items": {"type": "array", "items": _POINT, "minItems": 2, "maxItems": 2}},
            },
        },
    },
}
_MORPHISM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["bottom", "top", "terms"],
    "properties": _MORPHISM_BODY,
}
_VIOLATION = {
    "type": "object",
    "additionalProperties": False,
    "required": ["code", "ids", "message"],
    "properties": {"code": _ID, "ids": {"type": "array", "items": {"type": "string"}}, "message": {"type": "string"}},
}
_STR_MAP = {"type": "object", "additionalProperties": {"type": "string"}}

SCHEMAS: dict[str, dict] = {
    "gamma": _GAMMA,
    "fair_graph": {
        "type": "object",
        "additionalProperties": False,
        "required": ["gamma", "vertices", "edges"],
        "properties": {
            "gamma": _GAMMA_REF,
            "vertices": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["id", "pi"],
                    "properties": {"id": _ID, "pi": _ID},
                },
            },
            "edges": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["id", "source", "target", "weight", "pi"],
                    "properties": {
                        "id": _ID, "source": _ID, "target": _ID, "weight": {"type": "number"}, "pi": _ID,
                    },
                },
            },
        },
    },
    "solution": {
        "type": "object",
        "additionalProperties": False,
        "required": ["gamma", "gradings", "blocks"],
        "properties": {
            "gamma": _GAMMA_REF,
            "gradings": {"type": "object", "additionalProperties": {"type": "array", "items": _ID}},
            "blocks": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["edge", "v", "w", "cup"],
                    "properties": {"edge": _ID, "v": _ID, "w": _ID, "cup": _MATRIX},
                },
            },
        },
    },
    "morphism2": {
        "oneOf": [
            {
                "type": "object",
                "additionalProperties": False,
                "required": ["gamma", "bottom", "top", "terms"],
                "properties": {"gamma": _GAMMA_REF, **_MORPHISM_BODY},
            },
            {
                "type": "object",
                "additionalProperties": False,
                "required": ["gamma", "stack"],
                "properties": {"gamma": _GAMMA_REF, "stack": {"type": "array", "items": _MORPHISM, "minItems": 1}},
            },
        ]
    },
    "report": {
        "type": "object",
        "additionalProperties": False,
        "required": ["command", "ok", "violations", "warnings", "data"],
        "properties": {
            "command": _ID,
            "ok": {"type": "boolean"},
            "violations": {"type": "array", "items": _VIOLATION},
            "warnings": {"type": "array", "items": _VIOLATION},
            "data": {"type": "object"},
        },
        "if": {"properties": {"ok": {"const": False}}},
        "then": {"properties": {"violations": {"minItems": 1}}},
    },
    "witness": {
        "oneOf": [
            {
                "type": "object",
                "additionalProperties": False,
                "required": ["type", "vertex_map", "edge_map"],
                "properties": {"type": {"const": "iso"}, "vertex_map": _STR_MAP, "edge_map": _STR_MAP},
            },
            {
                "type": "object",
                "additionalProperties": False,
                "required": ["type", "d"],
                "properties": {
                    "type": {"const": "dimension"},
                    "d": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
                },
            },
            {
                "type": "object",
                "additionalProperties": False,
                "required": ["type", "edges", "signs", "product"],
                "properties": {
                    "type": {"const": "cycle"},
                    "edges": {"type": "array", "items": _ID},
                    "signs": {"type": "array", "items": {"enum": [-1, 1]}},
                    "product": {"type": "number"},
                },
            },
            {
                "type": "object",
                "additionalProperties": False,
                "required": ["type", "unitaries", "bijections"],
                "properties": {
                    "type": {"const": "unitary"},
                    "unitaries": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["edge", "v", "w", "matrix"],
                            "properties": {"edge": _ID, "v": _ID, "w": _ID, "matrix": _MATRIX},
                        },
                    },
                    "bijections": {"type": "object", "additionalProperties": _STR_MAP},
                },
            },
        ]
    },
}

_ENVELOPE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "version", "payload"],
    "properties": {"kind": {"type": "string"}, "version": {"type": "integer"}, "payload": {}},
}

_VALIDATORS = {k: jsonschema.Draft202012Validator(s) for k, s in SCHEMAS.items()}
_ENVELOPE_VALIDATOR = jsonschema.Draft202012Validator(_ENVELOPE)


def _pointer(parts: Iterable[Any]) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _first_error(validator: jsonschema.Draft202012Validator, instance: Any, prefix: tuple = ()) -> DocumentError | None:
    errors = sorted(validator.iter_errors(instance), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if not errors:
        return None
    err = jsonschema.exceptions.best_match(errors)
    return DocumentError("SCHEMA_VIOLATION", _pointer(prefix + tuple(err.absolute_path)), err.message)


# -- parse / serialize ------------------------------------------------------------------

def parse(data: bytes | str) -> Document:
    """Read and schema-check a document.  Raises :class:`DocumentError`."""
    try:
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        raw = json.loads(text)
    except UnicodeDecodeError as exc:
        raise DocumentError("MALFORMED_JSON", "$", f"not UTF-8: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DocumentError("MALFORMED_JSON", f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    err = _first_error(_ENVELOPE_VALIDATOR, raw)
    if err is not None:
        raise err
    if raw["kind"] not in KINDS:
        raise DocumentError("UNKNOWN_KIND", "$.kind", f"unknown kind {raw['kind']!r}; expected one of {list(KINDS)}")
    if raw["version"] != VERSION:
        raise DocumentError("VERSION_UNSUPPORTED", "$.version", f"version {raw['version']} is not supported (only {VERSION})")
    err = _first_error(_VALIDATORS[raw["kind"]], raw["payload"], ("payload",))
    if err is not None:
        raise err
    return Document(raw["kind"], raw["version"], raw["payload"])


def _sorted_by(items: list, *keys: str) -> list:
    return sorted(items, key=lambda x: tuple(x[k] for k in keys))


def canonical_payload(kind: str, payload: Any) -> Any:
    """Sort every id-keyed array; order-carrying arrays (paths, arcs) are kept."""
    p = json.loads(json.dumps(payload))
    if isinstance(p, dict) and isinstance(p.get("gamma"), dict):
        p["gamma"] = canonical_payload("gamma", p["gamma"])
    if kind == "gamma":
        p["vertices"] = sorted(p["vertices"])
        p["edges"] = _sorted_by(p["edges"], "id")
    elif kind == "fair_graph":
        p["vertices"] = _sorted_by(p["vertices"], "id")
        p["edges"] = _sorted_by(p["edges"], "id")
    elif kind == "solution":
        p["gradings"] = {a: sorted(vs) for a, vs in p["gradings"].items()}
        p["blocks"] = _sorted_by(p["blocks"], "edge", "v", "w")
    elif kind == "morphism2":
        for m in p.get("stack", [p]):
            for t in m["terms"]:
                t["arcs"] = sorted(sorted(a) for a in t["arcs"])
            m["terms"] = sorted(m["terms"], key=lambda t: t["arcs"])
    elif kind == "witness" and p.get("type") == "unitary":
        p["unitaries"] = _sorted_by(p["unitaries"], "edge", "v", "w")
    return p


def serialize(doc: Document) -> bytes:
    """Canonical bytes: sorted keys, sorted id arrays, shortest round-trip floats."""
    body = {"kind": doc.kind, "version": doc.version, "payload": canonical_payload(doc.kind, doc.payload)}
    return (json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def load_document(path: str, kind: str | None = None) -> Document:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DocumentError("IO_ERROR", path, exc.strerror or str(exc)) from None
    doc = parse(data)
    if kind is not None and doc.kind != kind:
        raise DocumentError("WRONG_KIND", "$.kind", f"expected a {kind} document, got {doc.kind}")
    return doc


def write_document(path: str, doc: Document) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(doc))


# -- encoders -----------------------------------------------------------------------

def _cplx(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _matrix(m: np.ndarray) -> list:
    return [[_cplx(z) for z in row] for row in np.asarray(m)]


def encode_gamma(g: BiGraph) -> dict:
    return {
        "vertices": sorted(g.vertices),
        "edges": [
            {"id": e.id, "source": e.source, "target": e.target, "weight": e.weight, "dual": e.dual}
            for e in sorted(g.edges, key=lambda x: x.id)
        ],
    }


def encode_fair_graph(l: FairGraph) -> dict:
    return {
        "gamma": encode_gamma(l.gamma),
        "vertices": [{"id": v.id, "pi": v.pi} for v in sorted(l.vertices, key=lambda v: v.id)],
        "edges": [
            {"id": e.id, "source": e.source, "target": e.target, "weight": e.weight, "pi": e.pi}
            for e in sorted(l.edges, key=lambda e: e.id)
        ],
    }


def encode_solution(s: FundamentalSolution) -> dict:
    return {
        "gamma": encode_gamma(s.gamma),
        "gradings": {a: sorted(vs) for a, vs in s.gradings.items()},
        "blocks": [{"edge": e, "v": v, "w": w, "cup": _matrix(c)} for (e, v, w), c in sorted(s.cups.items())],
    }


def _encode_path(p: GammaPath) -> dict:
    return {"edges": list(p.edges), "at": p.at}


def _encode_morphism_body(m: Morphism2) -> dict:
    return {
        "bottom": _encode_path(m.bottom),
        "top": _encode_path(m.top),
        "terms": [
            {"coeff": _cplx(c), "arcs": [[list(a), list(b)] for a, b in d.arcs]} for d, c in m
        ],
    }


def encode_morphism(m: Morphism2 | list[Morphism2]) -> dict:
    if isinstance(m, Morphism2):
        return {"gamma": encode_gamma(m.gamma), **_encode_morphism_body(m)}
    return {"gamma": encode_gamma(m[0].gamma), "stack": [_encode_morphism_body(x) for x in m]}


def encode_report(command: str, report: ValidationReport, extra: dict | None = None) -> dict:
    body = report.to_dict()
    body["data"] = {**body["data"], **(extra or {})}
    body["command"] = command
    return _jsonable(body)


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return _cplx(x)
    return x


def doc(kind: str, payload: Any) -> Document:
    return Document(kind, VERSION, payload)


# -- decoders -----------------------------------------------------------------------

def _decode_gamma_body(p: dict) -> BiGraph:
    return BiGraph(
        tuple(p["vertices"]),
        tuple(Edge(e["id"], e["source"], e["target"], e["weight"], e["dual"]) for e in p["edges"]),
    )


def decode_gamma(payload: Any, base_dir: str = ".") -> BiGraph:
    """A gamma payload, or a path (relative to ``base_dir``) to a gamma document."""
    if isinstance(payload, str):
        ref = payload if os.path.isabs(payload) else os.path.join(base_dir, payload)
        return _decode_gamma_body(load_document(ref, "gamma").payload)
    return _decode_gamma_body(payload)


def decode_fair_graph(payload: dict, base_dir: str = ".", gamma: BiGraph | None = None) -> FairGraph:
    """Duplicate ids are kept so that :func:`check_structure` can report them."""
    g = gamma if gamma is not None else decode_gamma(payload["gamma"], base_dir)
    return FairGraph(
        g,
        tuple(sorted((FairVertex(v["id"], v["pi"]) for v in payload["vertices"]), key=lambda v: v.id)),
        tuple(sorted(
            (FairEdge(e["id"], e["source"], e["target"], float(e["weight"]), e["pi"]) for e in payload["edges"]),
            key=lambda e: e.id,
        )),
    )


def _decode_matrix(rows: list, where: str) -> np.ndarray:
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise DocumentError("SCHEMA_VIOLATION", where, "matrix rows have different lengths")
    if not rows or widths == {0}:
        raise DocumentError("SCHEMA_VIOLATION", where, "matrix must be nonempty")
    return np.array([[complex(re, im) for re, im in r] for r in rows], dtype=complex)


def decode_solution(payload: dict, base_dir: str = ".") -> FundamentalSolution:
    g = decode_gamma(payload["gamma"], base_dir)
    cups = {}
    for i, b in enumerate(payload["blocks"]):
        key = (b["edge"], b["v"], b["w"])
        if key in cups:
            raise DocumentError("SCHEMA_VIOLATION", f"$.payload.blocks[{i}]", "duplicate block")
        cups[key] = _decode_matrix(b["cup"], f"$.payload.blocks[{i}].cup")
    return FundamentalSolution(g, payload["gradings"], cups)


def _decode_morphism_body(g: BiGraph, p: dict, where: str) -> Morphism2:
    bottom = GammaPath(g, tuple(p["bottom"]["edges"]), p["bottom"]["at"])
    top = GammaPath(g, tuple(p["top"]["edges"]), p["top"]["at"])
    terms: dict[Diagram, complex] = {}
    for i, t in enumerate(p["terms"]):
        d = Diagram(bottom, top, tuple((tuple(a), tuple(b)) for a, b in t["arcs"]))
        if d in terms:
            raise DocumentError("SCHEMA_VIOLATION", f"{where}.terms[{i}]", "repeated diagram")
        terms[d] = complex(*t["coeff"])
    return Morphism2(bottom, top, terms)


def decode_morphism(payload: dict, base_dir: str = ".") -> list[Morphism2]:
    """The stack of morphisms, bottom first (a single morphism is a stack of one)."""
    g = decode_gamma(payload["gamma"], base_dir)
    if "stack" in payload:
        return [_decode_morphism_body(g, m, f"$.payload.stack[{i}]") for i, m in enumerate(payload["stack"])]
    return [_decode_morphism_body(g, payload, "$.payload")]


def decode_unitary_witness(payload: dict) -> tuple[dict, dict]:
    u = {
        (x["edge"], x["v"], x["w"]): _decode_matrix(x["matrix"], f"$.payload.unitaries[{i}].matrix")
        for i, x in enumerate(payload["unitaries"])
    }
    return u, payload["bijections"]


__all__ = [
    "Document",
    "DocumentError",
    "KINDS",
    "SCHEMAS",
    "VERSION",
    "canonical_payload",
    "decode_fair_graph",
    "decode_gamma",
    "decode_morphism",
    "decode_solution",
    "decode_unitary_witness",
    "doc",
    "encode_fair_graph",
    "encode_gamma",
    "encode_morphism",
    "encode_report",
    "encode_solution",
    "load_document",
    "parse",
    "serialize",
    "write_document",
]
