"""Static chain validation against a schema.

The validator simulates schema evolution command by command (Derive adds a
column, GroupBy replaces the schema with keys plus aggregate outputs, Select
projects, Describe yields the statistics schema, Predict appends the
prediction column) so later commands are checked against the schema they will
actually see. Problems are reported as issue records, never raised: an empty
issue list means the chain is executable.

Issue kinds: UnknownColumn, TypeMismatch, EmptyAggregate,
PredictTargetNonNumeric. UnknownColumn issues carry the corrector's unique
repair candidate as ``suggestion`` when one exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional

from .commands import (
    Binary, Col, Command, CommandChain, DeleteWhere, Derive, Describe,
    DESCRIBE_OUTPUT, Expr, Filter, GroupBy, InsertRow, Lit, Plot, Predict,
    Select, SliceRange, SliceTop, Sort, Unary, Update,
)
from .errors import AmbiguousColumn
from .corrector import resolve_column
from .table import Schema, Value

NUMERIC = ("int", "float")
ORDERABLE = ("int", "float", "string", "datetime")

# Static column/expression types: concrete ctypes plus two pseudo-types.
# "null" means the value is statically always Null and fits anywhere;
# "unknown" suppresses cascading errors after an unresolved reference.
_WILD = ("null", "unknown")


@dataclass(frozen=True)
class Issue:
    kind: str
    command_index: int
    detail: str
    suggestion: Optional[str] = None


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues


@dataclass(frozen=True)
class _EnvCol:
    name: str
    ctype: str  # ctype or "null"
    synonyms: tuple[str, ...] = ()


def _lit_type(v: Value) -> str:
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
    raise TypeError(f"unsupported literal {v!r}")


class _Checker:
    def __init__(self, schema: Schema):
        self.env: list[_EnvCol] = [
            _EnvCol(c.name, c.ctype, c.synonyms) for c in schema.columns
        ]
        self.issues: list[Issue] = []
        self.index = 0

    # -- issue helpers ----------------------------------------------------

    def issue(self, kind: str, detail: str, suggestion: Optional[str] = None):
        self.issues.append(Issue(kind, self.index, detail, suggestion))

    def lookup(self, name: str) -> Optional[_EnvCol]:
        for c in self.env:
            if c.name == name:
                return c
        return None

    def require(self, name: str, context: str) -> Optional[_EnvCol]:
        col = self.lookup(name)
        if col is None:
            self.issue(
                "UnknownColumn",
                f"{context}: no column named {name!r}",
                self._suggestion(name),
            )
        return col

    def _suggestion(self, name: str) -> Optional[str]:
        try:
            resolved = resolve_column(name, [(c.name, c.synonyms) for c in self.env])
        except AmbiguousColumn:
            return None
        if resolved is None or resolved[1] == "exact":
            return None
        return resolved[0]

    # -- expression typing --------------------------------------------------

    def type_of(self, e: Expr) -> str:
        if isinstance(e, Lit):
            return _lit_type(e.value)
        if isinstance(e, Col):
            col = self.require(e.name, "expression")
            return col.ctype if col is not None else "unknown"
        if isinstance(e, Unary):
            t = self.type_of(e.operand)
            if e.op == "neg":
                if t in NUMERIC or t in _WILD:
                    return t
                self.issue("TypeMismatch", f"cannot negate {t}")
                return "unknown"
            if t in ("bool",) or t in _WILD:
                return "bool"
            self.issue("TypeMismatch", f"NOT needs a boolean, got {t}")
            return "unknown"
        if isinstance(e, Binary):
            lt = self.type_of(e.lhs)
            rt = self.type_of(e.rhs)
            if e.op in ("and", "or"):
                for t in (lt, rt):
                    if t != "bool" and t not in _WILD:
                        self.issue(
                            "TypeMismatch", f"{e.op.upper()} needs booleans, got {t}"
                        )
                return "bool"
            if e.op in ("+", "-", "*", "/"):
                for t in (lt, rt):
                    if t not in NUMERIC and t not in _WILD:
                        self.issue(
                            "TypeMismatch",
                            f"arithmetic {e.op!r} needs numbers, got {t}",
                        )
                        return "unknown"
                if "unknown" in (lt, rt):
                    return "unknown"
                if "null" in (lt, rt):
                    return "null"
                if e.op == "/" or "float" in (lt, rt):
                    return "float"
                return "int"
            # comparison
            if not self._comparable(e.op, lt, rt):
                self.issue(
                    "TypeMismatch", f"cannot compare {lt} {e.op} {rt}"
                )
            return "bool"
        raise TypeError(f"unsupported expression {e!r}")

    @staticmethod
    def _comparable(op: str, lt: str, rt: str) -> bool:
        if lt in _WILD or rt in _WILD:
            return True
        pair = {lt, rt}
        if pair <= {"int", "float"}:
            return True
        if pair == {"string"}:
            return True
        if pair <= {"datetime", "string"}:
            return True
        if pair == {"bool"}:
            return op in ("=", "!=")
        return False

    def check_predicate(self, e: Expr, context: str):
        t = self.type_of(e)
        if t != "bool" and t not in _WILD:
            self.issue("TypeMismatch", f"{context} must be boolean, got {t}")

    # -- commands ------------------------------------------------------------

    def check(self, cmd: Command):
        if isinstance(cmd, Select):
            kept = []
            for name in cmd.cols:
                col = self.require(name, "SELECT")
                if col is not None:
                    kept.append(col)
            self.env = kept
        elif isinstance(cmd, Filter):
            self.check_predicate(cmd.predicate, "FILTER predicate")
        elif isinstance(cmd, Sort):
            self.require(cmd.col, "SORT")
        elif isinstance(cmd, GroupBy):
            new_env: list[_EnvCol] = []
            for key in cmd.keys:
                col = self.require(key, "GROUPBY key")
                new_env.append(col if col is not None else _EnvCol(key, "unknown"))
            for agg in cmd.aggs:
                col = self.require(agg.col, f"{agg.fn.upper()}()")
                ctype = col.ctype if col is not None else "unknown"
                if agg.fn in ("sum", "mean") and ctype not in NUMERIC + _WILD:
                    self.issue(
                        "TypeMismatch", f"{agg.fn} over {ctype} column {agg.col!r}"
                    )
                if agg.fn in ("min", "max") and ctype not in ORDERABLE + _WILD:
                    self.issue(
                        "TypeMismatch", f"{agg.fn} over {ctype} column {agg.col!r}"
                    )
                if agg.fn == "count":
                    out_type = "int"
                elif agg.fn == "mean":
                    out_type = "float"
                elif agg.fn == "sum":
                    out_type = ctype if ctype in NUMERIC else "float"
                else:
                    out_type = ctype
                new_env.append(_EnvCol(agg.out_name, out_type))
            self.env = new_env
        elif isinstance(cmd, Derive):
            t = self.type_of(cmd.expr)
            existing = self.lookup(cmd.out_name)
            new_col = _EnvCol(cmd.out_name, t if t != "unknown" else "null")
            if existing is None:
                self.env = self.env + [new_col]
            else:
                self.env = [new_col if c.name == cmd.out_name else c for c in self.env]
        elif isinstance(cmd, (SliceTop, SliceRange)):
            pass
        elif isinstance(cmd, Update):
            col = self.require(cmd.col, "UPDATE")
            t = self.type_of(cmd.expr)
            if col is not None and t not in _WILD and col.ctype not in _WILD:
                ok = t == col.ctype or (t == "int" and col.ctype == "float")
                if not ok:
                    self.issue(
                        "TypeMismatch",
                        f"cannot assign {t} into {col.ctype} column {col.name!r}",
                    )
            self.check_predicate(cmd.where, "UPDATE WHERE clause")
        elif isinstance(cmd, InsertRow):
            if len(cmd.values) != len(self.env):
                self.issue(
                    "TypeMismatch",
                    f"INSERT expects {len(self.env)} values, got {len(cmd.values)}",
                )
            else:
                for v, col in zip(cmd.values, self.env):
                    vt = _lit_type(v)
                    if not self._admits(vt, col.ctype):
                        self.issue(
                            "TypeMismatch",
                            f"INSERT value for {col.name!r}: {vt} into {col.ctype}",
                        )
        elif isinstance(cmd, DeleteWhere):
            self.check_predicate(cmd.predicate, "DELETE WHERE clause")
        elif isinstance(cmd, Describe):
            if cmd.cols is not None:
                for name in cmd.cols:
                    self.require(name, "DESCRIBE")
            self.env = [_EnvCol(name, ctype) for name, ctype in DESCRIBE_OUTPUT]
        elif isinstance(cmd, Plot):
            self.require(cmd.x, "PLOT x")
            if cmd.y is not None:
                self.require(cmd.y, "PLOT y")
        elif isinstance(cmd, Predict):
            target = self.require(cmd.target, "PREDICT target")
            if target is not None and target.ctype not in NUMERIC + _WILD:
                self.issue(
                    "PredictTargetNonNumeric",
                    f"PREDICT target {cmd.target!r} has type {target.ctype}",
                )
            if cmd.using is not None:
                for name in cmd.using:
                    col = self.require(name, "PREDICT USING")
                    if col is not None and col.ctype not in NUMERIC + _WILD:
                        self.issue(
                            "TypeMismatch",
                            f"PREDICT feature {name!r} has type {col.ctype}",
                        )
            else:
                features = [
                    c for c in self.env
                    if c.ctype in NUMERIC and c.name != cmd.target
                ]
                if not features:
                    self.issue(
                        "EmptyAggregate",
                        "PREDICT has no numeric feature columns to fit on",
                    )
            self.env = self.env + [_EnvCol(f"predicted_{cmd.target}", "float")]
        else:
            raise TypeError(f"unknown command {cmd!r}")

    @staticmethod
    def _admits(value_type: str, ctype: str) -> bool:
        if value_type == "null" or ctype in _WILD:
            return True
        if value_type == ctype:
            return True
        if value_type == "int" and ctype == "float":
            return True
        if value_type == "string" and ctype == "datetime":
            return True
        return False


def validate(chain: CommandChain, schema: Schema) -> ValidationReport:
    checker = _Checker(schema)
    for i, cmd in enumerate(chain):
        checker.index = i
        checker.check(cmd)
    return ValidationReport(tuple(checker.issues))
