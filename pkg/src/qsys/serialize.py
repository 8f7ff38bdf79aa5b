"""JSON encoding of the package's value types.

Complex numbers are always {"re": x, "im": y}; polynomial coefficients are
nested arrays of such pairs in ascending degree.  ``dumps`` emits floats
with a fixed %.12e format so identical inputs produce byte-identical output.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import SchemaError
from .polyrat import Poly, RatFun, RatMat
from .statespace import StateSpace


def complex_to_json(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def json_to_complex(obj) -> complex:
    if isinstance(obj, (int, float)):
        return complex(obj)
    if isinstance(obj, dict) and set(obj) <= {"re", "im"}:
        return complex(obj.get("re", 0.0), obj.get("im", 0.0))
    raise SchemaError(f"expected a number or {{re, im}} pair, got {obj!r}")


def poly_to_json(p: Poly) -> list:
    return [complex_to_json(c) for c in p.coeffs]


def json_to_poly(obj) -> Poly:
    return Poly([json_to_complex(c) for c in obj])


def ratfun_to_json(r: RatFun) -> dict:
    return {"num": poly_to_json(r.num), "den": poly_to_json(r.den)}


def json_to_ratfun(obj) -> RatFun:
    return RatFun(json_to_poly(obj["num"]), json_to_poly(obj["den"]))


def ratmat_to_json(m: RatMat) -> list:
    return [[ratfun_to_json(x) for x in row] for row in m.rows]


def json_to_ratmat(obj) -> RatMat:
    return RatMat([[json_to_ratfun(x) for x in row] for row in obj])


def matrix_to_json(mat: np.ndarray) -> list:
    return [[complex_to_json(x) for x in row] for row in np.atleast_2d(mat)]


def json_to_matrix(obj) -> np.ndarray:
    return np.array([[json_to_complex(x) for x in row] for row in obj],
                    dtype=complex)


def statespace_to_json(ss: StateSpace) -> dict:
    return {"A": matrix_to_json(ss.A), "B": matrix_to_json(ss.B),
            "C": matrix_to_json(ss.C), "D": matrix_to_json(ss.D)}


def json_to_statespace(obj) -> StateSpace:
    try:
        return StateSpace(json_to_matrix(obj["A"]), json_to_matrix(obj["B"]),
                          json_to_matrix(obj["C"]), json_to_matrix(obj["D"]))
    except KeyError as e:
        raise SchemaError(f"state space JSON misses key {e}") from e


def _emit(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append("%.12e" % float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for k, v in obj.items():
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(str(k)))
            out.append(":")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        first = True
        for v in obj:
            if not first:
                out.append(",")
            first = False
            _emit(v, out)
        out.append("]")
    else:
        raise SchemaError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Deterministic JSON: insertion-ordered keys, %.12e floats."""
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)
