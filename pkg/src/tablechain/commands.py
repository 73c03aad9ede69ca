"""AST for the table command language: expressions, commands, chains, plot specs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .table import Value

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("and", "or")
BINARY_OPS = ARITH_OPS + CMP_OPS + BOOL_OPS
UNARY_OPS = ("neg", "not")

AGG_FNS = ("sum", "mean", "count", "min", "max")
PLOT_KINDS = ("bar", "line", "scatter", "hist")

# Output schema of DESCRIBE: fixed column order and types.
DESCRIBE_OUTPUT = (
    ("column", "string"), ("type", "string"), ("count", "int"),
    ("null_frac", "float"), ("mean", "float"), ("std", "float"),
    ("min", "float"), ("q25", "float"), ("q50", "float"), ("q75", "float"),
    ("max", "float"), ("distinct", "int"),
)


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Col:
    name: str  # stored verbatim; resolution happens in the corrector


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"bad unary op {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"bad binary op {self.op!r}")


Expr = Union[Lit, Col, Unary, Binary]


# --- commands ---------------------------------------------------------------

@dataclass(frozen=True)
class Select:
    cols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "cols", tuple(self.cols))
        if not self.cols:
            raise ValueError("SELECT needs at least one column")


@dataclass(frozen=True)
class Filter:
    predicate: Expr


@dataclass(frozen=True)
class Sort:
    col: str
    ascending: bool = True


@dataclass(frozen=True)
class Agg:
    fn: str
    col: str
    out_name: str

    def __post_init__(self):
        if self.fn not in AGG_FNS:
            raise ValueError(f"bad aggregate fn {self.fn!r}")


@dataclass(frozen=True)
class GroupBy:
    keys: tuple[str, ...]
    aggs: tuple[Agg, ...]

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "aggs", tuple(self.aggs))
        if not self.keys:
            raise ValueError("GROUPBY needs at least one key column")
        if not self.aggs:
            raise ValueError("GROUPBY needs at least one aggregate")


@dataclass(frozen=True)
class Derive:
    out_name: str
    expr: Expr


@dataclass(frozen=True)
class SliceTop:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("SLICE TOP needs n >= 1")


@dataclass(frozen=True)
class SliceRange:
    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi):
            raise ValueError("SLICE range needs 0 <= lo <= hi")


@dataclass(frozen=True)
class Update:
    col: str
    expr: Expr
    where: Expr = field(default_factory=lambda: Lit(True))


@dataclass(frozen=True)
class InsertRow:
    values: tuple[Value, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class DeleteWhere:
    predicate: Expr


@dataclass(frozen=True)
class Describe:
    cols: Optional[tuple[str, ...]] = None  # None means every column

    def __post_init__(self):
        if self.cols is not None:
            object.__setattr__(self, "cols", tuple(self.cols))
            if not self.cols:
                raise ValueError("DESCRIBE column list must be non-empty (omit for all)")


@dataclass(frozen=True)
class Plot:
    kind: str
    x: str
    y: Optional[str] = None
    agg: Optional[str] = None

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"bad plot kind {self.kind!r}")
        if self.agg is not None and self.agg not in AGG_FNS:
            raise ValueError(f"bad plot aggregate {self.agg!r}")
        if self.kind == "hist" and self.y is not None:
            raise ValueError("hist takes no y column")
        if self.kind == "bar" and self.agg is not None and self.y is None:
            raise ValueError("bar with an aggregate needs a y column")


@dataclass(frozen=True)
class Predict:
    target: str
    using: Optional[tuple[str, ...]] = None  # None means all other numeric columns

    def __post_init__(self):
        if self.using is not None:
            object.__setattr__(self, "using", tuple(self.using))
            if not self.using:
                raise ValueError("PREDICT USING list must be non-empty (omit for auto)")


Command = Union[
    Select, Filter, Sort, GroupBy, Derive, SliceTop, SliceRange,
    Update, InsertRow, DeleteWhere, Describe, Plot, Predict,
]


@dataclass(frozen=True)
class CommandChain:
    commands: tuple[Command, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "commands", tuple(self.commands))
        predict_positions = [
            i for i, c in enumerate(self.commands) if isinstance(c, Predict)
        ]
        if len(predict_positions) > 1:
            raise ValueError("a chain may contain at most one PREDICT")
        if predict_positions and predict_positions[0] != len(self.commands) - 1:
            raise ValueError("PREDICT must be the last command")

    def __len__(self) -> int:
        return len(self.commands)

    def __iter__(self):
        return iter(self.commands)


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    x: str
    y: Optional[str]
    agg: Optional[str]
    title: str

    def __post_init__(self):
        if self.kind == "hist" and self.y is not None:
            raise ValueError("hist takes no y column")
        if self.kind == "bar" and self.agg is not None and self.y is None:
            raise ValueError("bar with an aggregate needs a y column")


def expr_columns(e: Expr) -> list[str]:
    """Column names referenced by an expression, in depth-first order."""
    if isinstance(e, Col):
        return [e.name]
    if isinstance(e, Unary):
        return expr_columns(e.operand)
    if isinstance(e, Binary):
        return expr_columns(e.lhs) + expr_columns(e.rhs)
    return []


def map_expr_columns(e: Expr, fn) -> Expr:
    """Rebuild an expression with every Col name passed through ``fn``."""
    if isinstance(e, Col):
        return Col(fn(e.name))
    if isinstance(e, Unary):
        return Unary(e.op, map_expr_columns(e.operand, fn))
    if isinstance(e, Binary):
        return Binary(e.op, map_expr_columns(e.lhs, fn), map_expr_columns(e.rhs, fn))
    return e
