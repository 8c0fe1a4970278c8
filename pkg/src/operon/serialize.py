"""JSON formats for matrices, states, algebras, operations and verdicts.

Matrix: ``{"rows": n, "cols": m, "data": [[re, im], ...]}`` in row-major
order. Readers reject NaN and infinities and report the offending field path.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .algebra import OperatorAlgebra, generate_algebra
from .entanglement import SeparabilityVerdict
from .numerics import as_matrix
from .operations import KrausOperation
from .states import ProductCertificate, StateFunctional


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path
        self.message = message


def _reject_constant(name: str):
    raise SchemaError("", f"non-finite number {name} is not allowed")


def loads(text: str) -> Any:
    return json.loads(text, parse_constant=_reject_constant)


def load_file(path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def matrix_to_json(m) -> dict:
    m = as_matrix(m)
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def _field(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    if key not in obj:
        raise SchemaError(f"{path}.{key}" if path else key, "missing field")
    return obj[key]


def _count(value, path: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise SchemaError(path, f"expected a nonnegative integer, got {value!r}")
    return value


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def matrix_from_json(obj, path: str = "") -> np.ndarray:
    rows = _count(_field(obj, "rows", path), _join(path, "rows"))
    cols = _count(_field(obj, "cols", path), _join(path, "cols"))
    data = _field(obj, "data", path)
    dpath = _join(path, "data")
    if not isinstance(data, list):
        raise SchemaError(dpath, "expected a list of [re, im] pairs")
    if len(data) != rows * cols:
        raise SchemaError(dpath, f"has {len(data)} entries, expected rows*cols = {rows * cols}")
    out = np.empty(rows * cols, dtype=complex)
    for i, entry in enumerate(data):
        epath = f"{dpath}[{i}]"
        if not isinstance(entry, list) or len(entry) != 2:
            raise SchemaError(epath, "expected [re, im]")
        parts = []
        for j, v in enumerate(entry):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"{epath}[{j}]", f"expected a number, got {v!r}")
            if not math.isfinite(v):
                raise SchemaError(f"{epath}[{j}]", "non-finite number")
            parts.append(float(v))
        out[i] = complex(parts[0], parts[1])
    return out.reshape(rows, cols)


def _dims_from_json(value, path: str) -> tuple[int, int]:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError(path, "expected [dA, dB]")
    return (_count(value[0], f"{path}[0]"), _count(value[1], f"{path}[1]"))


def state_to_json(state: StateFunctional) -> dict:
    out = matrix_to_json(state.density)
    out["kind"] = "state"
    if state.dims is not None:
        out["dims"] = list(state.dims)
    if state.label:
        out["label"] = state.label
    return out


def state_from_json(obj, path: str = "") -> StateFunctional:
    d = matrix_from_json(obj, path)
    dims = _dims_from_json(obj["dims"], _join(path, "dims")) if "dims" in obj else None
    return StateFunctional(d, dims, obj.get("label", ""))


def algebra_to_json(R: OperatorAlgebra) -> dict:
    gens = R.generators or R.basis
    return {"ambient_dim": R.ambient_dim, "generators": [matrix_to_json(g) for g in gens]}


def algebra_from_json(obj, path: str = "") -> OperatorAlgebra:
    n = _count(_field(obj, "ambient_dim", path), _join(path, "ambient_dim"))
    gens_raw = _field(obj, "generators", path)
    gpath = _join(path, "generators")
    if not isinstance(gens_raw, list):
        raise SchemaError(gpath, "expected a list of matrices")
    gens = [matrix_from_json(g, f"{gpath}[{i}]") for i, g in enumerate(gens_raw)]
    for i, g in enumerate(gens):
        if g.shape != (n, n):
            raise SchemaError(f"{gpath}[{i}]", f"shape {g.shape} does not match ambient_dim {n}")
    return generate_algebra(gens, n)


def operation_to_json(T: KrausOperation) -> dict:
    out = {"ambient_dim": T.ambient_dim, "kraus": [matrix_to_json(k) for k in T.kraus_ops]}
    if T.label:
        out["label"] = T.label
    return out


def kraus_list_from_json(obj, path: str = "") -> list[np.ndarray]:
    """Parse Kraus matrices without enforcing the ``sum K*K <= I`` bound."""
    n = _count(_field(obj, "ambient_dim", path), _join(path, "ambient_dim"))
    raw = _field(obj, "kraus", path)
    kpath = _join(path, "kraus")
    if not isinstance(raw, list) or not raw:
        raise SchemaError(kpath, "expected a nonempty list of matrices")
    ops = [matrix_from_json(k, f"{kpath}[{i}]") for i, k in enumerate(raw)]
    for i, k in enumerate(ops):
        if k.shape != (n, n):
            raise SchemaError(f"{kpath}[{i}]", f"shape {k.shape} does not match ambient_dim {n}")
    return ops


def operation_from_json(obj, path: str = "") -> KrausOperation:
    return KrausOperation(tuple(kraus_list_from_json(obj, path)), obj.get("label", ""))


def certificate_to_json(cert: ProductCertificate) -> dict:
    return {
        "weights": list(cert.weights),
        "pairs": [[matrix_to_json(a), matrix_to_json(b)] for a, b in cert.pairs],
    }


def certificate_from_json(obj, path: str = "") -> ProductCertificate:
    weights = _field(obj, "weights", path)
    pairs = _field(obj, "pairs", path)
    ppath = _join(path, "pairs")
    if not isinstance(pairs, list) or not isinstance(weights, list):
        raise SchemaError(path, "weights and pairs must be lists")
    parsed = []
    for i, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"{ppath}[{i}]", "expected [density_A, density_B]")
        parsed.append((matrix_from_json(pair[0], f"{ppath}[{i}][0]"), matrix_from_json(pair[1], f"{ppath}[{i}][1]")))
    return ProductCertificate(tuple(float(w) for w in weights), tuple(parsed))


def verdict_to_json(verdict: SeparabilityVerdict, state: StateFunctional | None = None) -> dict:
    out: dict[str, Any] = {
        "verdict": verdict.verdict,
        "method": verdict.method,
        "distance": verdict.distance,
        "note": verdict.note,
        "certificate": certificate_to_json(verdict.certificate) if verdict.certificate else None,
        "witness": None,
    }
    if verdict.witness is not None:
        out["witness"] = {
            "value": verdict.witness.value,
            "vector": matrix_to_json(verdict.witness.vector),
        }
    if state is not None:
        out["state"] = state_to_json(state)
    return out
