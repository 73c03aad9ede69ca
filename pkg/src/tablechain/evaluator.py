"""Row-level expression evaluation with three-valued logic.

Nulls propagate through arithmetic and comparisons. Boolean connectives use
Kleene logic so a null operand yields null unless the other operand decides
the result. Division by zero and non-finite arithmetic results become null
and append a warning instead of raising.
"""

from __future__ import annotations

import math
from datetime import datetime
from typing import Optional

from .commands import Binary, Col, Expr, Lit, Unary
from .errors import EvalTypeError
from .table import INT64_MAX, INT64_MIN, Schema, Value, parse_datetime

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


def value_type_name(v: Value) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, str):
        return "string"
    if isinstance(v, datetime):
        return "datetime"
    raise TypeError(f"unsupported value {v!r}")


def _is_number(v: Value) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _arith(op: str, a: Value, b: Value, warnings: Optional[list[str]]) -> Value:
    if a is None or b is None:
        return None
    if not _is_number(a) or not _is_number(b):
        raise EvalTypeError(op, value_type_name(a), value_type_name(b))
    if op == "/":
        if b == 0:
            if warnings is not None:
                warnings.append("DivisionByZero")
            return None
        out: Value = a / b
    elif op == "+":
        out = a + b
    elif op == "-":
        out = a - b
    else:
        out = a * b
    if isinstance(out, int) and not (INT64_MIN <= out <= INT64_MAX):
        out = float(out)
    if isinstance(out, float) and not math.isfinite(out):
        if warnings is not None:
            warnings.append("NonFiniteResult")
        return None
    return out


def _coerce_pair(op: str, a: Value, b: Value) -> tuple[Value, Value]:
    """Bring comparison operands into one ordered domain, or raise."""
    ta, tb = value_type_name(a), value_type_name(b)
    if ta == tb:
        return a, b
    if {ta, tb} == {"int", "float"}:
        return a, b
    if ta == "datetime" and tb == "string":
        try:
            return a, parse_datetime(b)
        except ValueError:
            raise EvalTypeError(op, ta, tb) from None
    if ta == "string" and tb == "datetime":
        try:
            return parse_datetime(a), b
        except ValueError:
            raise EvalTypeError(op, ta, tb) from None
    raise EvalTypeError(op, ta, tb)


def _compare(op: str, a: Value, b: Value) -> Value:
    if a is None or b is None:
        return None
    a, b = _coerce_pair(op, a, b)
    if isinstance(a, bool) and op not in ("=", "!="):
        raise EvalTypeError(op, "bool", "bool")
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _as_bool(op: str, v: Value, other: Value) -> Optional[bool]:
    if v is None or isinstance(v, bool):
        return v
    raise EvalTypeError(op, value_type_name(v), value_type_name(other))


def eval_expr(
    e: Expr,
    row: tuple,
    schema: Schema,
    warnings: Optional[list[str]] = None,
) -> Value:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Col):
        return row[schema.index_of(e.name)]
    if isinstance(e, Unary):
        v = eval_expr(e.operand, row, schema, warnings)
        if e.op == "neg":
            if v is None:
                return None
            if not _is_number(v):
                raise EvalTypeError("neg", value_type_name(v), "-")
            out = -v
            if isinstance(out, float) and not math.isfinite(out):
                if warnings is not None:
                    warnings.append("NonFiniteResult")
                return None
            return out
        if v is None:
            return None
        if not isinstance(v, bool):
            raise EvalTypeError("not", value_type_name(v), "-")
        return not v
    if isinstance(e, Binary):
        if e.op in ("and", "or"):
            lv = _as_bool(e.op, eval_expr(e.lhs, row, schema, warnings), None)
            rv = _as_bool(e.op, eval_expr(e.rhs, row, schema, warnings), lv)
            if e.op == "and":
                if lv is False or rv is False:
                    return False
                if lv is None or rv is None:
                    return None
                return True
            if lv is True or rv is True:
                return True
            if lv is None or rv is None:
                return None
            return False
        lv = eval_expr(e.lhs, row, schema, warnings)
        rv = eval_expr(e.rhs, row, schema, warnings)
        if e.op in ARITH_OPS:
            return _arith(e.op, lv, rv, warnings)
        return _compare(e.op, lv, rv)
    raise TypeError(f"unsupported expression {e!r}")
