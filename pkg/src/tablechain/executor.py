"""Deterministic chain execution over immutable tables.

Every command builds a fresh Table; the input is never touched. Semantics
that matter for reproducibility:

- Filter and DELETE act only on rows where the predicate is exactly true
  (a null predicate keeps the row in Filter terms "not kept", in DELETE
  terms "not deleted").
- Sort is stable; null cells go last for both directions, keeping their
  original relative order.
- GroupBy groups by exact value equality in first-appearance order and
  accumulates left to right, skipping nulls, so float results are bit-stable.
- Predict fits ordinary least squares through the normal equations with
  partial pivoting; a pivot below 1e-10 falls back to the mean predictor
  with R² = 0 and a warning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

from .commands import (
    Command, CommandChain, DeleteWhere, Derive, Describe, DESCRIBE_OUTPUT,
    Filter, GroupBy, InsertRow, Plot, PlotSpec, Predict, Select, SliceRange,
    SliceTop, Sort, Update,
)
from .errors import ExecError, TableChainError
from .evaluator import eval_expr
from .table import (
    ColumnMeta, ColumnStats, INT64_MAX, INT64_MIN, Schema, Table, Value,
    column_stats, parse_datetime,
)

NUMERIC = ("int", "float")


@dataclass(frozen=True)
class StepLog:
    command_index: int
    rows_in: int
    rows_out: int
    warnings: tuple[str, ...] = ()
    extra: Optional[dict] = None


@dataclass(frozen=True)
class ExecutionResult:
    table: Table
    step_logs: tuple[StepLog, ...]
    reply: str


def execute(chain: CommandChain, t: Table) -> ExecutionResult:
    current = t
    logs: list[StepLog] = []
    for i, cmd in enumerate(chain):
        rows_in = current.n_rows
        warnings: list[str] = []
        try:
            current, extra = _run(cmd, current, warnings)
        except TableChainError as e:
            raise ExecError(i, e) from e
        except (ValueError, TypeError, ZeroDivisionError, OverflowError) as e:
            raise ExecError(i, e) from e
        logs.append(StepLog(i, rows_in, current.n_rows, tuple(warnings), extra))
    reply = summarize(current, chain, tuple(logs), source=t)
    return ExecutionResult(current, tuple(logs), reply)


# --- helpers -----------------------------------------------------------------

def _column_ctype(values: Sequence[Value], fallback: str) -> tuple[str, list[Value]]:
    """Concrete column type for computed cells.

    Evaluation keeps cell types homogeneous except that integer overflow can
    promote single cells to float; in that case the whole column becomes
    float. All-null columns keep the caller's fallback type.
    """
    seen = set()
    for v in values:
        if v is None:
            continue
        if isinstance(v, bool):
            seen.add("bool")
        elif isinstance(v, int):
            seen.add("int")
        elif isinstance(v, float):
            seen.add("float")
        elif isinstance(v, str):
            seen.add("string")
        elif isinstance(v, datetime):
            seen.add("datetime")
        else:
            raise TypeError(f"unsupported cell {v!r}")
    if not seen:
        return fallback, list(values)
    if seen == {"int", "float"}:
        return "float", [float(v) if isinstance(v, int) else v for v in values]
    if len(seen) > 1:
        raise TypeError(f"mixed cell types {sorted(seen)}")
    ctype = seen.pop()
    if ctype == "int" and fallback == "float":
        return "float", [float(v) if v is not None else None for v in values]
    return ctype, list(values)


def _replace_column(
    t: Table, name: str, values: Sequence[Value], fallback_type: str
) -> Table:
    """Set or append one column, preserving order and other columns."""
    ctype, cells = _column_ctype(values, fallback_type)
    names = list(t.schema.names)
    metas = list(t.schema.columns)
    cols = list(t.columns)
    if name in names:
        i = names.index(name)
        metas[i] = ColumnMeta(name, ctype, metas[i].synonyms)
        cols[i] = tuple(cells)
    else:
        metas.append(ColumnMeta(name, ctype))
        cols.append(tuple(cells))
    schema = Schema(t.schema.table_name, tuple(metas))
    return Table(schema, tuple(cols))


def _take_rows(t: Table, indices: Sequence[int]) -> Table:
    cols = tuple(tuple(col[i] for i in indices) for col in t.columns)
    return Table(t.schema, cols)


def _acc_add(acc: Value, v: Value) -> Value:
    out = acc + v
    if isinstance(out, int) and not (INT64_MIN <= out <= INT64_MAX):
        out = float(out)
    return out


def _aggregate(fn: str, values: Sequence[Value]) -> Value:
    nonnull = [v for v in values if v is not None]
    if fn == "count":
        return len(nonnull)
    if not nonnull:
        return None
    if fn == "sum":
        acc: Value = nonnull[0]
        for v in nonnull[1:]:
            acc = _acc_add(acc, v)
        return acc
    if fn == "mean":
        total = 0.0
        for v in nonnull:
            total += float(v)
        return total / len(nonnull)
    if fn == "min":
        return min(nonnull)
    return max(nonnull)


# --- per-command execution ----------------------------------------------------

def _run(cmd: Command, t: Table, warnings: list[str]) -> tuple[Table, Optional[dict]]:
    if isinstance(cmd, Select):
        metas = tuple(t.schema.column(n) for n in cmd.cols)
        cols = tuple(t.column_values(n) for n in cmd.cols)
        return Table(Schema(t.schema.table_name, metas), cols), None

    if isinstance(cmd, Filter):
        keep = [
            i for i, row in enumerate(t.rows())
            if eval_expr(cmd.predicate, row, t.schema, warnings) is True
        ]
        return _take_rows(t, keep), None

    if isinstance(cmd, Sort):
        values = t.column_values(cmd.col)
        nonnull = [i for i, v in enumerate(values) if v is not None]
        nulls = [i for i, v in enumerate(values) if v is None]
        ordered = sorted(nonnull, key=lambda i: values[i], reverse=not cmd.ascending)
        return _take_rows(t, ordered + nulls), None

    if isinstance(cmd, GroupBy):
        key_idx = [t.schema.index_of(k) for k in cmd.keys]
        groups: dict[tuple, list[int]] = {}
        for i in range(t.n_rows):
            key = tuple(t.columns[j][i] for j in key_idx)
            groups.setdefault(key, []).append(i)
        metas: list[ColumnMeta] = [t.schema.column(k) for k in cmd.keys]
        out_cols: list[list[Value]] = [[] for _ in cmd.keys]
        agg_cells: list[list[Value]] = [[] for _ in cmd.aggs]
        for key, members in groups.items():
            for j, v in enumerate(key):
                out_cols[j].append(v)
            for j, agg in enumerate(cmd.aggs):
                col = t.column_values(agg.col)
                agg_cells[j].append(_aggregate(agg.fn, [col[i] for i in members]))
        src_type = {c.name: c.ctype for c in t.schema.columns}
        result_metas = list(metas)
        result_cols = [tuple(c) for c in out_cols]
        for j, agg in enumerate(cmd.aggs):
            base = src_type.get(agg.col, "float")
            if agg.fn == "count":
                fallback = "int"
            elif agg.fn == "mean":
                fallback = "float"
            else:
                fallback = base
            ctype, cells = _column_ctype(agg_cells[j], fallback)
            result_metas.append(ColumnMeta(agg.out_name, ctype))
            result_cols.append(tuple(cells))
        schema = Schema(t.schema.table_name, tuple(result_metas))
        return Table(schema, tuple(result_cols)), None

    if isinstance(cmd, Derive):
        values = [eval_expr(cmd.expr, row, t.schema, warnings) for row in t.rows()]
        return _replace_column(t, cmd.out_name, values, "string"), None

    if isinstance(cmd, SliceTop):
        return _take_rows(t, range(min(cmd.n, t.n_rows))), None

    if isinstance(cmd, SliceRange):
        lo = min(cmd.lo, t.n_rows)
        hi = min(cmd.hi, t.n_rows)
        return _take_rows(t, range(lo, hi)), None

    if isinstance(cmd, Update):
        idx = t.schema.index_of(cmd.col)
        old = t.columns[idx]
        updated = 0
        new_values: list[Value] = []
        for i, row in enumerate(t.rows()):
            if eval_expr(cmd.where, row, t.schema, warnings) is True:
                new_values.append(eval_expr(cmd.expr, row, t.schema, warnings))
                updated += 1
            else:
                new_values.append(old[i])
        out = _replace_column(t, cmd.col, new_values, t.schema.columns[idx].ctype)
        return out, {"updated": updated}

    if isinstance(cmd, InsertRow):
        if len(cmd.values) != t.n_cols:
            raise TypeError(
                f"INSERT expects {t.n_cols} values, got {len(cmd.values)}"
            )
        cols = []
        for meta, col, v in zip(t.schema.columns, t.columns, cmd.values):
            cols.append(col + (_coerce_insert(v, meta.ctype),))
        return Table(t.schema, tuple(cols)), None

    if isinstance(cmd, DeleteWhere):
        keep = [
            i for i, row in enumerate(t.rows())
            if eval_expr(cmd.predicate, row, t.schema, warnings) is not True
        ]
        return _take_rows(t, keep), None

    if isinstance(cmd, Describe):
        names = cmd.cols if cmd.cols is not None else t.schema.names
        rows = [_describe_row(name, t) for name in names]
        metas = tuple(ColumnMeta(n, ct) for n, ct in DESCRIBE_OUTPUT)
        cols = tuple(
            tuple(row[j] for row in rows) for j in range(len(DESCRIBE_OUTPUT))
        )
        return Table(Schema(t.schema.table_name, metas), cols), None

    if isinstance(cmd, Plot):
        spec = PlotSpec(cmd.kind, cmd.x, cmd.y, cmd.agg, _plot_title(cmd))
        return t, {"plot": spec}

    if isinstance(cmd, Predict):
        return _predict(cmd, t, warnings)

    raise TypeError(f"unknown command {cmd!r}")


def _coerce_insert(v: Value, ctype: str) -> Value:
    if v is None:
        return None
    if ctype == "float" and isinstance(v, int) and not isinstance(v, bool):
        return float(v)
    if ctype == "datetime" and isinstance(v, str):
        return parse_datetime(v)
    return v


def _describe_row(name: str, t: Table) -> tuple:
    meta = t.schema.column(name)
    s: ColumnStats = column_stats(t, name)
    return (
        name, meta.ctype, s.count_nonnull, s.null_frac, s.mean, s.std,
        s.min, s.q25, s.q50, s.q75, s.max, s.distinct_count,
    )


def _plot_title(cmd: Plot) -> str:
    if cmd.kind == "hist":
        return f"Distribution of {cmd.x}"
    if cmd.y is None:
        return f"{cmd.x} by row"
    if cmd.agg is not None:
        return f"{cmd.agg.upper()}({cmd.y}) by {cmd.x}"
    if cmd.kind == "scatter":
        return f"{cmd.y} vs {cmd.x}"
    return f"{cmd.y} by {cmd.x}"


# --- least squares -------------------------------------------------------------

def _solve(a: list[list[float]], b: list[float]) -> Optional[list[float]]:
    """Gaussian elimination with partial pivoting; None when near-singular."""
    n = len(a)
    m = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(m[r][col]))
        if abs(m[pivot_row][col]) < 1e-10:
            return None
        m[col], m[pivot_row] = m[pivot_row], m[col]
        pivot = m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / pivot
            if factor != 0.0:
                for c in range(col, n + 1):
                    m[r][c] -= factor * m[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        acc = m[r][n]
        for c in range(r + 1, n):
            acc -= m[r][c] * x[c]
        x[r] = acc / m[r][r]
    return x


def _predict(cmd: Predict, t: Table, warnings: list[str]) -> tuple[Table, dict]:
    if cmd.using is not None:
        features = list(cmd.using)
    else:
        features = [
            c.name for c in t.schema.columns
            if c.ctype in NUMERIC and c.name != cmd.target
        ]
        if not features:
            raise TypeError("PREDICT has no numeric feature columns")
    target = t.column_values(cmd.target)
    feat_cols = [t.column_values(f) for f in features]

    fit_rows = [
        i for i in range(t.n_rows)
        if target[i] is not None and all(col[i] is not None for col in feat_cols)
    ]
    usable_rows = [
        i for i in range(t.n_rows)
        if all(col[i] is not None for col in feat_cols)
    ]

    k = len(features)
    weights: Optional[list[float]] = None
    mean_y: Optional[float] = None
    if fit_rows:
        xs = [[float(col[i]) for col in feat_cols] + [1.0] for i in fit_rows]
        ys = [float(target[i]) for i in fit_rows]
        ata = [
            [sum(x[p] * x[q] for x in xs) for q in range(k + 1)]
            for p in range(k + 1)
        ]
        atb = [sum(x[p] * y for x, y in zip(xs, ys)) for p in range(k + 1)]
        weights = _solve(ata, atb)
        mean_y = sum(ys) / len(ys)
        if weights is None:
            warnings.append("SingularMatrix")
    else:
        warnings.append("NoTrainingRows")

    def predict_row(i: int) -> Optional[float]:
        if i not in usable_set:
            return None
        if weights is not None:
            acc = weights[k]
            for j, col in enumerate(feat_cols):
                acc += weights[j] * float(col[i])
            return acc
        return mean_y

    usable_set = set(usable_rows)
    predictions = [predict_row(i) for i in range(t.n_rows)]

    if fit_rows and weights is not None:
        ssr = math.fsum(
            (float(target[i]) - predictions[i]) ** 2 for i in fit_rows
        )
        sst = math.fsum((float(target[i]) - mean_y) ** 2 for i in fit_rows)
        if sst <= 1e-12:
            r2 = 1.0 if ssr <= 1e-12 else 0.0
        else:
            r2 = 1.0 - ssr / sst
    else:
        r2 = 0.0

    out = _replace_column(t, f"predicted_{cmd.target}", predictions, "float")
    return out, {"r2": r2}


# --- reply templating -----------------------------------------------------------

def _backtick(name: str) -> str:
    return f"`{name}`"


def _clause(cmd: Command, log: StepLog) -> tuple[str, bool]:
    """One reply clause per executed command; the flag marks whether the
    clause already states a table size."""
    if isinstance(cmd, Select):
        if len(cmd.cols) <= 3:
            return "selected " + ", ".join(_backtick(c) for c in cmd.cols), True
        return f"selected {len(cmd.cols)} columns", True
    if isinstance(cmd, Filter):
        return f"filtered to {log.rows_out} of {log.rows_in} rows", True
    if isinstance(cmd, Sort):
        direction = "ascending" if cmd.ascending else "descending"
        return f"sorted by {_backtick(cmd.col)} {direction}", False
    if isinstance(cmd, GroupBy):
        keys = ", ".join(_backtick(k) for k in cmd.keys)
        unit = "group" if log.rows_out == 1 else "groups"
        return f"grouped by {keys} into {log.rows_out} {unit}", True
    if isinstance(cmd, Derive):
        return f"derived {_backtick(cmd.out_name)}", False
    if isinstance(cmd, SliceTop):
        return f"returned top {log.rows_out} of {log.rows_in} rows", True
    if isinstance(cmd, SliceRange):
        return f"kept rows {cmd.lo} to {cmd.hi} of {log.rows_in}", True
    if isinstance(cmd, Update):
        n = (log.extra or {}).get("updated", 0)
        unit = "row" if n == 1 else "rows"
        return f"updated {_backtick(cmd.col)} in {n} {unit}", True
    if isinstance(cmd, InsertRow):
        return "inserted 1 row", True
    if isinstance(cmd, DeleteWhere):
        return f"deleted {log.rows_in - log.rows_out} of {log.rows_in} rows", True
    if isinstance(cmd, Describe):
        n = log.rows_out
        return f"computed statistics for {n} columns", True
    if isinstance(cmd, Plot):
        return f"prepared a {cmd.kind} chart of {_backtick(cmd.x)}", False
    if isinstance(cmd, Predict):
        r2 = (log.extra or {}).get("r2", 0.0)
        return f"predicted {_backtick(cmd.target)} (R² {r2:.4g})", False
    raise TypeError(f"unknown command {cmd!r}")


def _format_value(v: Value) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, datetime):
        return v.isoformat()
    if isinstance(v, str):
        return v
    return str(v)


def summarize(
    table: Table,
    chain: CommandChain,
    step_logs: tuple[StepLog, ...],
    source: Table,
) -> str:
    if len(chain) == 0:
        return (
            f"No operations performed; table unchanged "
            f"({source.n_rows} rows × {source.n_cols} columns)."
        )
    clauses: list[str] = []
    sized = False
    for cmd, log in zip(chain, step_logs):
        text, has_size = _clause(cmd, log)
        clauses.append(text)
        sized = sized or has_size
    if not sized:
        clauses.append(
            f"final table has {table.n_rows} rows × {table.n_cols} columns"
        )
    if 0 < table.n_rows * table.n_cols <= 5:
        if table.n_rows == 1:
            cells = ", ".join(
                f"{name} = {_format_value(v)}"
                for name, v in zip(table.schema.names, table.row(0))
            )
        elif table.n_cols == 1:
            cells = ", ".join(_format_value(v) for v in table.columns[0])
        else:
            cells = "; ".join(
                "(" + ", ".join(_format_value(v) for v in row) + ")"
                for row in table.rows()
            )
        clauses.append(f"result: {cells}")
    text = "; ".join(clauses) + "."
    return text[0].upper() + text[1:]
