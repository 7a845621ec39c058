"""JSON documents for bases, states, protocols and reports.

Complex numbers are ``[re, im]`` pairs, matrices are row-major lists of rows,
vectors are in ``S_A (x) S_B`` order with ``S_A`` major. Floats go through
``repr`` so a round trip reproduces every bit.
"""
from __future__ import annotations

import json
from typing import Any, Dict, Optional, Union

import numpy as np

from .bipartite import DoubleKet, MeasurementBasis, Povm, RankOnePovm, validate_measurement_basis
from .localizability import Localization, PatternFunction
from .numeric import DEFAULT_TOL, Tolerance

FORMAT_VERSION = "1.0"


class SchemaError(ValueError):
    """Malformed document; ``path`` locates the offending node."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def encode_complex(a) -> Any:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        z = complex(a)
        return [z.real, z.imag]
    return [encode_complex(x) for x in a]


def decode_complex(payload, path: str, ndim: int) -> np.ndarray:
    """Inverse of :func:`encode_complex` for an array of ``ndim`` dimensions."""
    if ndim == 0:
        if (not isinstance(payload, list) or len(payload) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in payload)):
            raise SchemaError(path, "expected a [re, im] pair of numbers")
        z = complex(payload[0], payload[1])
        if not np.isfinite(z):
            raise SchemaError(path, "non-finite entry")
        return np.asarray(z)
    if not isinstance(payload, list) or not payload:
        raise SchemaError(path, "expected a non-empty list")
    parts = [decode_complex(x, f"{path}[{i}]", ndim - 1) for i, x in enumerate(payload)]
    shapes = {p.shape for p in parts}
    if len(shapes) != 1:
        raise SchemaError(path, "ragged array")
    return np.array(parts, dtype=np.complex128)


def _require(doc: Dict, key: str, path: str, kind=None):
    if not isinstance(doc, dict):
        raise SchemaError(path, "expected an object")
    if key not in doc:
        raise SchemaError(f"{path}.{key}", "missing field")
    value = doc[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool)):
        raise SchemaError(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return value


def load_json(text: Union[str, bytes]) -> Dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected an object")
    return doc


def dumps(doc: Dict) -> str:
    return json.dumps(doc, indent=1)


def emit_basis(
    b: Union[MeasurementBasis, Povm],
    metadata: Optional[Dict] = None,
    representation: str = "operators",
) -> Dict:
    """Basis (or general POVM, flagged with ``"povm": true``) document."""
    doc: Dict[str, Any] = {"format_version": FORMAT_VERSION, "kind": "basis"}
    if isinstance(b, Povm):
        doc.update(dim_a=None, dim_b=None, dim=b.dim, povm=True, representation="operators",
                   elements=encode_complex(np.array(b.elements)))
    else:
        doc.update(dim_a=b.dim_a, dim_b=b.dim_b)
        if representation == "operators":
            doc.update(representation="operators", elements=encode_complex(b.ops))
        elif representation == "vectors":
            doc.update(representation="vectors", elements=encode_complex(b.vectors()))
        else:
            raise ValueError(f"unknown representation {representation!r}")
    doc["metadata"] = dict(metadata or {})
    return doc


def parse_basis(doc: Union[str, bytes, Dict], tol: Tolerance = DEFAULT_TOL) -> Union[MeasurementBasis, Povm]:
    """Validated :class:`MeasurementBasis`, or a :class:`Povm` when the document is flagged."""
    if not isinstance(doc, dict):
        doc = load_json(doc)
    _check_version(doc, "$")
    if doc.get("povm"):
        dim = _require(doc, "dim", "$", int)
        elems = decode_complex(_require(doc, "elements", "$"), "$.elements", 3)
        if elems.shape[1:] != (dim, dim):
            raise SchemaError("$.elements", f"elements must be {dim}x{dim}")
        return Povm([e for e in elems]).check(tol)
    dim_a = _require(doc, "dim_a", "$", int)
    dim_b = _require(doc, "dim_b", "$", int)
    if dim_a < 1 or dim_b < 1:
        raise SchemaError("$.dim_a", "dimensions must be positive")
    rep = _require(doc, "representation", "$", str)
    raw = _require(doc, "elements", "$")
    if rep == "operators":
        ops = decode_complex(raw, "$.elements", 3)
        if ops.shape[1:] != (dim_a, dim_b):
            raise SchemaError("$.elements", f"operators must be {dim_a}x{dim_b}, got {ops.shape[1:]}")
    elif rep == "vectors":
        vecs = decode_complex(raw, "$.elements", 2)
        if vecs.shape[1] != dim_a * dim_b:
            raise SchemaError("$.elements", f"vectors must have length {dim_a * dim_b}")
        ops = vecs.reshape(-1, dim_a, dim_b)
    else:
        raise SchemaError("$.representation", "expected 'operators' or 'vectors'")
    if not isinstance(doc.get("metadata", {}), dict):
        raise SchemaError("$.metadata", "expected an object")
    return validate_measurement_basis(ops, tol)


def _check_version(doc: Dict, path: str) -> None:
    version = _require(doc, "format_version", path, str)
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise SchemaError(f"{path}.format_version", f"unsupported version {version}")


def emit_state(rho: np.ndarray, metadata: Optional[Dict] = None) -> Dict:
    rho = np.asarray(rho, dtype=np.complex128)
    return {"format_version": FORMAT_VERSION, "kind": "state", "dim": rho.shape[0],
            "matrix": encode_complex(rho), "metadata": dict(metadata or {})}


def parse_state(doc: Union[str, bytes, Dict]) -> np.ndarray:
    """Density matrix from a ``matrix`` or pure-state ``vector`` payload."""
    if not isinstance(doc, dict):
        doc = load_json(doc)
    _check_version(doc, "$")
    dim = _require(doc, "dim", "$", int)
    if "matrix" in doc:
        rho = decode_complex(doc["matrix"], "$.matrix", 2)
        if rho.shape != (dim, dim):
            raise SchemaError("$.matrix", f"expected {dim}x{dim}")
        return rho
    if "vector" in doc:
        v = decode_complex(doc["vector"], "$.vector", 1)
        if v.shape != (dim,):
            raise SchemaError("$.vector", f"expected length {dim}")
        v = v / np.linalg.norm(v)
        return np.outer(v, np.conj(v))
    raise SchemaError("$", "state needs 'matrix' or 'vector'")


def emit_protocol(
    basis: MeasurementBasis,
    loc: Localization,
    method: str,
    j: Optional[int] = None,
    metadata: Optional[Dict] = None,
) -> Dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "protocol",
        "method": method,
        "j": j,
        "basis": emit_basis(basis),
        "resource": encode_complex(loc.resource.op),
        "alice": encode_complex(loc.alice.kets),
        "bob": encode_complex(loc.bob.kets),
        "pattern": loc.pattern.table.tolist(),
        "z_size": loc.pattern.z_size,
        "metadata": dict(metadata or {}),
    }


def parse_protocol(doc: Union[str, bytes, Dict], tol: Tolerance = DEFAULT_TOL):
    """``(basis, localization, method, j)``."""
    if not isinstance(doc, dict):
        doc = load_json(doc)
    _check_version(doc, "$")
    if doc.get("kind") != "protocol":
        raise SchemaError("$.kind", "expected 'protocol'")
    basis = parse_basis(_require(doc, "basis", "$", dict), tol)
    resource = decode_complex(_require(doc, "resource", "$"), "$.resource", 2)
    alice = decode_complex(_require(doc, "alice", "$"), "$.alice", 3)
    bob = decode_complex(_require(doc, "bob", "$"), "$.bob", 3)
    table = _require(doc, "pattern", "$", list)
    z_size = _require(doc, "z_size", "$", int)
    try:
        pattern = PatternFunction(np.array(table, dtype=int), z_size)
    except (TypeError, ValueError) as exc:
        raise SchemaError("$.pattern", str(exc)) from exc
    if pattern.table.shape != (alice.shape[0], bob.shape[0]):
        raise SchemaError("$.pattern", "table shape does not match the local POVMs")
    j = doc.get("j")
    if j is not None and (not isinstance(j, int) or isinstance(j, bool)):
        raise SchemaError("$.j", "expected an integer or null")
    loc = Localization(DoubleKet(resource), RankOnePovm(alice), RankOnePovm(bob), pattern)
    return basis, loc, _require(doc, "method", "$", str), j


def report_envelope(command: str, tol: Tolerance, body: Dict) -> Dict:
    """Every command output carries the format version and tolerances in force."""
    return {"format_version": FORMAT_VERSION, "kind": "report", "command": command,
            "tolerance": tol.as_dict(), **body}
