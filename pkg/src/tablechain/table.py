"""Columnar table model: CSV ingestion, type inference, column statistics, permutations.

Cells are plain Python values: ``None`` (null), ``bool``, ``int`` (64-bit range),
``float`` (finite), ``str``, or timezone-aware ``datetime`` (UTC, second precision).
Tables are immutable after construction; every operation returns a new Table.
"""

from __future__ import annotations

import csv
import io
import math
import re
import unicodedata
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

from .errors import BadPermutation, RaggedRow, UnknownColumn, Utf8Error

Value = object  # None | bool | int | float | str | datetime

CTYPES = ("int", "float", "string", "bool", "datetime")

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

_WS_RUN = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Canonical form used for column matching: NFC, lowercase, whitespace runs -> '_'."""
    s = unicodedata.normalize("NFC", name).lower().strip()
    return _WS_RUN.sub("_", s)


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    ctype: str
    synonyms: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("column name must be non-empty")
        if self.ctype not in CTYPES:
            raise ValueError(f"unknown column type {self.ctype!r}")
        object.__setattr__(self, "synonyms", tuple(self.synonyms))


@dataclass(frozen=True)
class Schema:
    table_name: str
    columns: tuple[ColumnMeta, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        normalized = [normalize_name(c.name) for c in self.columns]
        if len(set(normalized)) != len(normalized):
            dupes = sorted({n for n in normalized if normalized.count(n) > 1})
            raise ValueError(f"duplicate column names after normalization: {dupes}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index_of(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise UnknownColumn(name)

    def column(self, name: str) -> ColumnMeta:
        return self.columns[self.index_of(name)]


@dataclass(frozen=True)
class Table:
    schema: Schema
    columns: tuple[tuple[Value, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(tuple(c) for c in self.columns))
        if len(self.columns) != len(self.schema.columns):
            raise ValueError(
                f"schema has {len(self.schema.columns)} columns, data has {len(self.columns)}"
            )
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def column_values(self, name: str) -> tuple[Value, ...]:
        return self.columns[self.schema.index_of(name)]

    def row(self, i: int) -> tuple[Value, ...]:
        return tuple(col[i] for col in self.columns)

    def rows(self) -> Iterable[tuple[Value, ...]]:
        for i in range(self.n_rows):
            yield self.row(i)


@dataclass(frozen=True)
class ColumnStats:
    count_nonnull: int
    null_frac: float
    distinct_count: int
    mean: Optional[float] = None
    std: Optional[float] = None
    min: Optional[float] = None
    max: Optional[float] = None
    q25: Optional[float] = None
    q50: Optional[float] = None
    q75: Optional[float] = None
    top_value: Value = None
    top_freq_ratio: Optional[float] = None
    entropy_norm: Optional[float] = None


# ---------------------------------------------------------------------------
# Cell parsing and the type-promotion lattice: bool -> int -> float -> datetime -> string
# ---------------------------------------------------------------------------

_BOOL_WORDS = {"true": True, "false": False}
_INT_RE = re.compile(r"[+-]?\d+$")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2})?(Z|[+-]\d{2}:\d{2})?)?$")


def parse_datetime(text: str) -> datetime:
    """Parse an ISO-8601 instant; naive inputs are taken as UTC, truncated to seconds."""
    s = text.strip().replace("Z", "+00:00")
    if " " in s and "T" not in s:
        s = s.replace(" ", "T", 1)
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def _admits(ctype: str, text: str) -> bool:
    if ctype == "string":
        return True
    if ctype == "bool":
        return text.strip().lower() in _BOOL_WORDS
    if ctype == "int":
        if not _INT_RE.match(text.strip()):
            return False
        return INT64_MIN <= int(text) <= INT64_MAX
    if ctype == "float":
        t = text.strip().lower()
        if t in ("nan", "+nan", "-nan", "inf", "-inf", "+inf", "infinity", "-infinity"):
            return True  # parsed, then stored as Null (non-finite policy)
        return bool(_FLOAT_RE.match(text.strip()))
    if ctype == "datetime":
        if not _DATE_RE.match(text.strip()):
            return False
        try:
            parse_datetime(text)
            return True
        except ValueError:
            return False
    raise ValueError(ctype)


def parse_cell(ctype: str, text: str) -> Value:
    """Convert raw CSV text to a typed cell. Empty text is Null; non-finite floats become Null."""
    if text == "":
        return None
    if ctype == "bool":
        return _BOOL_WORDS[text.strip().lower()]
    if ctype == "int":
        return int(text)
    if ctype == "float":
        v = float(text)
        return v if math.isfinite(v) else None
    if ctype == "datetime":
        return parse_datetime(text)
    return text


def infer_schema(
    raw_rows: Sequence[Sequence[str]],
    names: Sequence[str],
    table_name: str = "table",
) -> Schema:
    """Per column, the narrowest type admitting every non-empty cell.

    Empty cells do not constrain the type; an all-empty column is string.
    """
    lattice = ("bool", "int", "float", "datetime", "string")
    metas = []
    for j, name in enumerate(names):
        cells = [row[j] for row in raw_rows if row[j] != ""]
        ctype = "string"
        if cells:
            for cand in lattice:
                if all(_admits(cand, c) for c in cells):
                    ctype = cand
                    break
        metas.append(ColumnMeta(name=name, ctype=ctype))
    return Schema(table_name=table_name, columns=tuple(metas))


def load_csv(
    data: bytes,
    delimiter: str = ",",
    has_header: bool = True,
    table_name: str = "table",
) -> Table:
    """Load RFC 4180 CSV bytes into a typed Table. Row order is preserved."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise Utf8Error(e.start) from None
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    # A blank line is a record with one empty field (csv.reader yields [] for it);
    # this keeps single-column null rows round-trippable through to_csv.
    rows = [row if row else [""] for row in reader]
    if not rows:
        return Table(schema=Schema(table_name=table_name, columns=()), columns=())

    if has_header:
        names = [h.strip() or f"col_{i + 1}" for i, h in enumerate(rows[0])]
        body = rows[1:]
        first_data_line = 2
    else:
        names = [f"col_{i + 1}" for i in range(len(rows[0]))]
        body = rows
        first_data_line = 1

    n = len(names)
    for i, row in enumerate(body):
        if len(row) != n:
            raise RaggedRow(first_data_line + i, n, len(row))

    schema = infer_schema(body, names, table_name=table_name)
    columns = tuple(
        tuple(parse_cell(schema.columns[j].ctype, row[j]) for row in body)
        for j in range(n)
    )
    return Table(schema=schema, columns=columns)


def format_cell(v: Value) -> str:
    """Inverse of parse_cell for CSV output. Null writes as empty text."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, datetime):
        return v.isoformat()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(t: Table, delimiter: str = ",") -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(t.schema.names)
    for row in t.rows():
        writer.writerow([format_cell(v) for v in row])
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Column statistics
# ---------------------------------------------------------------------------

def _quantile(sorted_vals: Sequence[float], p: float) -> float:
    """Linear interpolation on the sorted sequence (index p * (n-1))."""
    n = len(sorted_vals)
    if n == 1:
        return float(sorted_vals[0])
    pos = p * (n - 1)
    lo = math.floor(pos)
    hi = math.ceil(pos)
    frac = pos - lo
    return sorted_vals[lo] * (1.0 - frac) + sorted_vals[hi] * frac


def _sort_key(v: Value):
    # Within one column all non-null cells share a type, so plain ordering works;
    # bools sort as ints.
    return v


def column_stats(t: Table, name: str) -> ColumnStats:
    """Statistics over the non-null cells of one column.

    All order-sensitive reductions run over the sorted value sequence, so results
    are bit-exact under any row permutation.
    """
    idx = t.schema.index_of(name)
    meta = t.schema.columns[idx]
    cells = t.columns[idx]
    nonnull = [v for v in cells if v is not None]
    n_rows = len(cells)
    count = len(nonnull)
    null_frac = (n_rows - count) / n_rows if n_rows else 0.0

    if count == 0:
        return ColumnStats(count_nonnull=0, null_frac=null_frac, distinct_count=0)

    sorted_vals = sorted(nonnull, key=_sort_key)

    # Frequency table keyed in sorted-value order: deterministic and row-order free.
    counts: dict = {}
    for v in sorted_vals:
        counts[v] = counts.get(v, 0) + 1
    distinct = len(counts)
    by_freq = sorted(counts.items(), key=lambda kv: -kv[1])  # ties keep value order
    top_value, top_count = by_freq[0]
    top_freq_ratio = top_count / count

    entropy_norm = None
    if distinct > 1:
        h = 0.0
        for _, c in by_freq[:20]:
            p = c / count
            h -= p * math.log(p)
        entropy_norm = h / math.log(distinct)

    if meta.ctype not in ("int", "float"):
        return ColumnStats(
            count_nonnull=count,
            null_frac=null_frac,
            distinct_count=distinct,
            top_value=top_value,
            top_freq_ratio=top_freq_ratio,
            entropy_norm=entropy_norm,
        )

    floats = [float(v) for v in sorted_vals]
    try:
        mean = math.fsum(floats) / count
    except OverflowError:
        mean = math.inf if floats[-1] > 0 else -math.inf
    # Scale deviations by their peak so squaring cannot overflow for values
    # near the float64 limit (the std itself is representable, the raw
    # variance often is not).
    devs = [x - mean for x in floats]
    peak = max(abs(d) for d in devs) if devs else 0.0
    if peak == 0.0:
        std = 0.0
    elif not math.isfinite(peak):
        std = math.inf
    else:
        std = peak * math.sqrt(
            math.fsum((d / peak) ** 2 for d in devs) / count
        )
    return ColumnStats(
        count_nonnull=count,
        null_frac=null_frac,
        distinct_count=distinct,
        mean=mean,
        std=std,
        min=floats[0],
        max=floats[-1],
        q25=_quantile(floats, 0.25),
        q50=_quantile(floats, 0.50),
        q75=_quantile(floats, 0.75),
        top_value=top_value,
        top_freq_ratio=top_freq_ratio,
        entropy_norm=entropy_norm,
    )


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------

def _check_perm(kind: str, perm: Sequence[int], expected_len: int) -> None:
    if len(perm) != expected_len:
        raise BadPermutation(kind, expected_len, len(perm))
    if sorted(perm) != list(range(expected_len)):
        raise BadPermutation(kind, expected_len, len(perm))


def permute(
    t: Table,
    row_perm: Optional[Sequence[int]] = None,
    col_perm: Optional[Sequence[int]] = None,
) -> Table:
    """Reorder rows and/or columns; output row i is input row ``row_perm[i]``."""
    columns = t.columns
    schema_cols = t.schema.columns
    if row_perm is not None:
        _check_perm("row", row_perm, t.n_rows)
        columns = tuple(tuple(col[i] for i in row_perm) for col in columns)
    if col_perm is not None:
        _check_perm("column", col_perm, t.n_cols)
        columns = tuple(columns[j] for j in col_perm)
        schema_cols = tuple(schema_cols[j] for j in col_perm)
    return Table(
        schema=Schema(table_name=t.schema.table_name, columns=schema_cols),
        columns=columns,
    )


def table_from_rows(
    schema: Schema, rows: Iterable[Sequence[Value]]
) -> Table:
    """Build a Table from row-major data (no parsing or validation of cell types)."""
    rows = list(rows)
    n_cols = len(schema.columns)
    cols = [[] for _ in range(n_cols)]
    for r in rows:
        for j in range(n_cols):
            cols[j].append(r[j])
    return Table(schema=schema, columns=tuple(tuple(c) for c in cols))


def with_meta(t: Table, synonyms: dict[str, Sequence[str]]) -> Table:
    """Return a copy whose schema carries the given synonym lists (keyed by column name)."""
    metas = []
    for c in t.schema.columns:
        extra = synonyms.get(c.name) or synonyms.get(normalize_name(c.name))
        metas.append(replace(c, synonyms=tuple(extra)) if extra else c)
    return Table(
        schema=Schema(table_name=t.schema.table_name, columns=tuple(metas)),
        columns=t.columns,
    )
